use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hallmhd_core::decay::{predicted_exponent, ExponentQuery, Prediction};
use hallmhd_core::diagnostics::FieldKind;
use hallmhd_core::harness::experiment::{analyze_file, run_experiment, Report};
use hallmhd_core::harness::suites::{heat_oracle, verify_lemmas, HeatOracleSettings};
use hallmhd_core::harness::ExperimentConfig;
use hallmhd_core::Error;

/// Hall-MHD decay experiments and validation suites.
#[derive(Parser)]
#[command(name = "hallmhd", version)]
struct Cli {
    /// Print machine-readable JSON instead of the summary.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a full experiment from a TOML configuration.
    Run { config: PathBuf },
    /// Print the predicted decay exponent of a weighted norm.
    Predict {
        #[arg(long)]
        field: FieldKind,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: u32,
        /// Lebesgue exponent; `inf` for the sup norm.
        #[arg(long)]
        p: f64,
    },
    /// Re-fit a recorded norms.csv without simulating.
    Analyze {
        norms: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Gronwall sweep and parabolic interpolation suite.
    VerifyLemmas {
        #[arg(long, default_value_t = 1000)]
        sweep: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Linear solver against the closed-form Gaussian heat evolution.
    OracleHeat {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        l: Option<f64>,
    },
}

// The system allocator returns every 128^3 complex buffer to the kernel on
// free, which makes page faults dominate large runs.
#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn status(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_)
            | Error::InvalidGrid(_)
            | Error::InvalidParams(_)
            | Error::InvalidNormSpec(_)
            | Error::InvalidInitialData(_)
    )
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:+.4}"))
}

fn print_report(r: &Report) {
    match r.window {
        Some([a, b]) => println!("window [{a:.3}, {b:.3}]"),
        None => println!("window none"),
    }
    for q in &r.queries {
        let pred = match q.predicted {
            Prediction::Exponent(e) => format!("{e:+.4}"),
            Prediction::OutOfValidity => "out-of-validity".into(),
        };
        println!(
            "{:<22} predicted {:>15} fitted {:>8} r2 {:>7} {}",
            q.query,
            pred,
            fmt_opt(q.fitted),
            q.r2.map_or("-".into(), |v| format!("{v:.4}")),
            q.verdict.as_str()
        );
    }
    for c in &r.ratios {
        let stretch = match c.stretch_pass {
            Some(true) => " (stretch met)",
            Some(false) => " (stretch missed)",
            None => "",
        };
        println!(
            "{:<22} expected {:+.4} fitted {:>8} {}{}",
            c.check.name,
            c.check.expected,
            fmt_opt(c.fitted),
            c.verdict.as_str(),
            stretch
        );
    }
    if let Some(inv) = &r.invariants {
        println!(
            "invariants: div(u) {:.2e}, div(B) {:.2e}, energy nonincreasing {}, steps {}",
            inv.max_divergence_u, inv.max_divergence_b, inv.energy_nonincreasing, inv.steps
        );
    }
    println!("status {:?}: {}", r.status, if r.all_pass { "PASS" } else { "FAIL" });
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Error> {
    ExperimentConfig::load(path).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("cannot read {}: {io}", path.display())),
        e => e,
    })
}

fn execute(cli: Cli) -> Result<ExitCode, Error> {
    match cli.cmd {
        Cmd::Run { config } => {
            let cfg = load_config(&config)?;
            cfg.validate()?;
            let out = run_experiment(&cfg)?;
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&out.report)?);
            } else {
                print_report(&out.report);
                println!("artifacts in {}", out.output_dir.display());
            }
            Ok(status(out.report.all_pass))
        }
        Cmd::Predict { field, a, b, p } => {
            let q = ExponentQuery::new(field, a, b, p);
            match predicted_exponent(&q)? {
                Prediction::Exponent(e) => println!("{e}"),
                Prediction::OutOfValidity => println!("out-of-validity"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Analyze { norms, config } => {
            let cfg = match config {
                Some(path) => load_config(&path)?,
                None => ExperimentConfig::default(),
            };
            cfg.validate_fit()?;
            let r = analyze_file(&norms, &cfg)?;
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&r)?);
            } else {
                print_report(&r);
            }
            Ok(status(r.all_pass))
        }
        Cmd::VerifyLemmas { sweep, seed } => {
            let r = verify_lemmas(sweep, seed)?;
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&r)?);
            } else {
                println!(
                    "gronwall sweep: {}/{} pass (seed {}, worst margin {:.3e})",
                    r.sweep.passed, r.sweep.draws, r.sweep.seed, r.sweep.worst_margin
                );
                println!(
                    "closed form at t={}: rel err {:.2e} {}",
                    r.closed_form.t,
                    r.closed_form.rel_err,
                    if r.closed_form.pass { "pass" } else { "fail" }
                );
                println!(
                    "growth exponent: fitted {:.4} vs {:.4} {}",
                    r.sharpness.fitted,
                    r.sharpness.gamma1,
                    if r.sharpness.pass { "pass" } else { "fail" }
                );
                println!("corrupted certificate rejected: {}", r.corrupted_rejected);
                for c in &r.parabolic {
                    println!(
                        "parabolic {:<6} t={:<4} ratio {:.4} / {:.4} (coarse / fine) bounded {} stable {}",
                        c.label, c.t, c.ratio_coarse, c.ratio_fine, c.bounded, c.stable
                    );
                }
                println!("{}", if r.all_pass() { "PASS" } else { "FAIL" });
            }
            Ok(status(r.all_pass()))
        }
        Cmd::OracleHeat { n, l } => {
            let mut s = HeatOracleSettings::default();
            if let Some(n) = n {
                s.n = n;
            }
            if let Some(l) = l {
                s.l = l;
            }
            let r = heat_oracle(&s)?;
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&r)?);
            } else {
                for a in 0..3 {
                    println!(
                        "a={a}: max rel err {:.3e} (tol {:.0e}) {}; slope {:+.4} vs {:+.2} {}",
                        r.max_rel_err[a],
                        s.value_tol[a],
                        if r.values_pass[a] { "pass" } else { "fail" },
                        r.fits[a].slope,
                        r.expected_slopes[a],
                        if r.slopes_pass[a] { "pass" } else { "fail" }
                    );
                }
                println!("{}", if r.all_pass() { "PASS" } else { "FAIL" });
            }
            Ok(status(r.all_pass()))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_usage_error(&e) { EXIT_USAGE } else { EXIT_FAIL })
        }
    }
}
