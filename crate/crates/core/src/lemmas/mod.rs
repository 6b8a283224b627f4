//! Executable versions of the two analytic lemmas behind the decay estimates:
//! a generalized Gronwall bound and a parabolic interpolation inequality.

pub mod gronwall;
pub mod ode;
pub mod parabolic;
