//! Experiment configuration, read from TOML. Dotted keys (`grid.n = 64`) and
//! section headers (`[grid]`) are interchangeable.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{FieldKind, WeightedNormSpec};
use crate::dynamics::HallMhdParams;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::harness::initial::{InitialDataSpec, Profile};
use crate::integrator::{geometric_schedule, StepControl};

/// Overrides `output.dir` when set.
pub const OUTPUT_DIR_ENV: &str = "HALLMHD_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub l: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 128, l: 64.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepConfig {
    pub cfl_adv: f64,
    pub cfl_whistler: f64,
    pub dt_max: f64,
    pub linear_only: bool,
    pub t_end: f64,
    /// First snapshot time of the geometric schedule.
    pub schedule_start: f64,
    pub schedule_ratio: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        let c = StepControl::default();
        Self {
            cfl_adv: c.cfl_adv,
            cfl_whistler: c.cfl_whistler,
            dt_max: c.dt_max,
            linear_only: false,
            t_end: 24.0,
            schedule_start: 0.25,
            schedule_ratio: 2f64.powf(0.25),
        }
    }
}

/// A log-log slope check on the quotient of two recorded series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioCheck {
    pub name: String,
    pub numerator: String,
    pub denominator: String,
    pub expected: f64,
    /// Two-sided tolerance around `expected`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// One-sided bound `slope <= max_slope`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_slope: Option<f64>,
    /// Tolerance of an optional stricter target, reported but not gating.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stretch_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub tol: f64,
    pub t_shift: f64,
    /// The fit window ends before either boundary monitor exceeds this.
    pub boundary_threshold: f64,
    /// The fit window starts at `t_min_factor * width^2`.
    pub t_min_factor: f64,
    /// Initial-data width for the window; defaults to the widest blob.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    pub ratios: Vec<RatioCheck>,
}

impl Default for FitConfig {
    fn default() -> Self {
        let ratio = |name: &str, num: &str, den: &str, expected: f64| RatioCheck {
            name: name.into(),
            numerator: num.into(),
            denominator: den.into(),
            expected,
            tol: Some(0.15),
            max_slope: None,
            stretch_tol: None,
        };
        Self {
            tol: 0.02,
            t_shift: 1.0,
            boundary_threshold: 1e-6,
            t_min_factor: 5.0,
            width: None,
            ratios: vec![
                ratio("grad_B_over_B", "B_a0_b1_p2", "B_a0_b0_p2", -0.5),
                ratio("weighted_B_over_B", "B_a1_b0_p2", "B_a0_b0_p2", 0.5),
                RatioCheck {
                    tol: None,
                    max_slope: Some(-0.25),
                    stretch_tol: Some(0.2),
                    ..ratio("omega_over_u", "omega_a0_b0_p2", "u_a0_b0_p2", -0.5)
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_wall_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormsConfig {
    /// Column names such as `u_a0_b0_p2` or `B_a1_b0_pinf`.
    pub specs: Vec<String>,
}

impl Default for NormsConfig {
    fn default() -> Self {
        let specs = [
            "u_a0_b0_p2",
            "u_a1_b0_p2",
            "B_a0_b0_p2",
            "B_a0_b1_p2",
            "B_a1_b0_p2",
            "omega_a0_b0_p2",
        ];
        Self {
            specs: specs.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "hallmhd-out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub params: HallMhdParams,
    pub initial: InitialDataSpec,
    pub step: StepConfig,
    pub norms: NormsConfig,
    pub fit: FitConfig,
    pub budget: BudgetConfig,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.n, self.grid.l)
    }

    pub fn norm_specs(&self) -> Result<Vec<WeightedNormSpec>> {
        self.norms.specs.iter().map(|s| s.trim().parse()).collect()
    }

    /// Output directory after the environment override.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => self.output.dir.clone(),
        }
    }

    pub fn fit_width(&self) -> f64 {
        self.fit.width.unwrap_or_else(|| self.initial.max_width(self.grid.l))
    }

    pub fn schedule(&self) -> Result<Vec<f64>> {
        let mut s = geometric_schedule(self.step.schedule_start, self.step.schedule_ratio, self.step.t_end)?;
        if s.last().is_none_or(|&t| t < self.step.t_end) {
            s.push(self.step.t_end);
        }
        Ok(s)
    }

    pub fn step_control(&self, dump_path: Option<PathBuf>) -> Result<StepControl> {
        let c = StepControl {
            cfl_adv: self.step.cfl_adv,
            cfl_whistler: self.step.cfl_whistler,
            dt_max: self.step.dt_max,
            schedule: self.schedule()?,
            linear_only: self.step.linear_only,
            max_steps: self.budget.max_steps,
            max_wall_seconds: self.budget.max_wall_seconds,
            dump_path,
        };
        c.validate()?;
        Ok(c)
    }

    /// Checks fit and analysis settings only; enough for re-analysis of a
    /// recorded table.
    pub fn validate_fit(&self) -> Result<()> {
        let f = &self.fit;
        if !(f.tol > 0.0) || !(f.t_shift >= 0.0) || !(f.boundary_threshold > 0.0) || !(f.t_min_factor >= 0.0) {
            return Err(Error::Config(format!(
                "fit settings must be positive: tol={}, t_shift={}, boundary_threshold={}, t_min_factor={}",
                f.tol, f.t_shift, f.boundary_threshold, f.t_min_factor
            )));
        }
        if !(self.fit_width() > 0.0) {
            return Err(Error::Config("fit width must be positive".into()));
        }
        for r in &f.ratios {
            if r.tol.is_none() && r.max_slope.is_none() {
                return Err(Error::Config(format!("ratio check {} has neither tol nor max_slope", r.name)));
            }
            if r.tol.is_some_and(|t| !(t > 0.0)) || r.stretch_tol.is_some_and(|t| !(t > 0.0)) {
                return Err(Error::Config(format!("ratio check {} has a non-positive tolerance", r.name)));
            }
        }
        Ok(())
    }

    /// Full validation for a run.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        self.params.validate()?;
        self.initial.validate(&grid)?;
        if self.initial.profile == Profile::RawGaussian && !self.step.linear_only {
            return Err(Error::Config(
                "raw-gaussian initial data is not solenoidal and needs step.linear_only = true".into(),
            ));
        }
        if !(self.step.t_end > 0.0) || !self.step.t_end.is_finite() {
            return Err(Error::Config(format!("step.t_end must be positive, got {}", self.step.t_end)));
        }
        self.step_control(None)?;
        let specs = self.norm_specs()?;
        if specs.is_empty() {
            return Err(Error::Config("norms.specs must list at least one norm".into()));
        }
        if specs.iter().any(|s| s.field == FieldKind::Custom) {
            return Err(Error::Config("norms.specs may not use the custom field".into()));
        }
        let names: Vec<String> = specs.iter().map(|s| s.name()).collect();
        for r in &self.fit.ratios {
            for side in [&r.numerator, &r.denominator] {
                if !names.contains(side) {
                    return Err(Error::Config(format!(
                        "ratio check {} refers to {side}, which is not in norms.specs",
                        r.name
                    )));
                }
            }
        }
        self.validate_fit()
    }
}
