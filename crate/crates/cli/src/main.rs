use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fracp_core::experiments::{run_scenarios, ProblemSpec, Scenario};
use fracp_core::inequalities::{
    append_witness, brute_force_constant, check, load_corpus, replay_corpus, sweep, Budget,
    Exponents, InequalityId, Witness,
};
use fracp_core::params::{regime, theta_homogeneous};
use fracp_core::report::{
    read_grid_csv, tool_version, write_grid_csv, write_json, Check, Envelope,
};
use fracp_core::seminorms::fit_holder_exponent;
use fracp_core::solver::solve_dirichlet;
use fracp_core::{theta_exponent, Integrability, Params};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "fracp",
    version,
    about = "Numerical laboratory for the fractional p-Laplacian"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenario files; exits non-zero unless every check passes.
    Run {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// Overrides the output directory of every scenario.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Print the Hölder exponent for (N, s, p, q).
    Theta {
        #[arg(long = "N")]
        dim: usize,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        p: f64,
        /// A number or `inf`.
        #[arg(long)]
        q: Integrability,
    },
    /// Pointwise inequalities. Without a subcommand the flags run a sweep.
    #[command(args_conflicts_with_subcommands = true)]
    Ineq {
        #[command(subcommand)]
        command: Option<IneqCommand>,
        #[command(flatten)]
        sweep: SweepFlags,
    },
    /// Solve a Dirichlet problem given as JSON; writes a summary and a values CSV.
    Solve {
        problem: PathBuf,
        #[arg(long, default_value = "out")]
        output_dir: PathBuf,
    },
    /// Analyse a values CSV written by `solve`.
    Analyze {
        values: PathBuf,
        /// Fit the local Hölder exponent about `--center`.
        #[arg(long)]
        fit_exponent: bool,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        center: Option<Vec<f64>>,
        /// Dyadic radii; defaults to four halvings from a quarter of the box.
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    /// List the registered closed-form expressions.
    Registry,
}

#[derive(Subcommand)]
enum IneqCommand {
    /// List inequality ids.
    List,
    /// Evaluate one inequality at a point.
    Check {
        id: InequalityId,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0.0)]
        second: f64,
        #[arg(long)]
        constant: Option<f64>,
        #[arg(required = true, allow_hyphen_values = true)]
        point: Vec<f64>,
    },
    /// Check at seeded random points; searched constants are inflated by 1%.
    Sweep {
        id: InequalityId,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0.0)]
        second: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        constant: Option<f64>,
        /// JSON-lines witness corpus: replayed first, then extended with the new extremal tuple.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Estimate the optimal constant by sampling and local search.
    Constant {
        id: InequalityId,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0.0)]
        second: f64,
        #[arg(long, default_value_t = 1 << 16)]
        samples: usize,
        #[arg(long, default_value_t = 40)]
        rounds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct SweepFlags {
    #[arg(long)]
    id: Option<InequalityId>,
    #[arg(long)]
    p: Option<f64>,
    /// Second exponent (`q` or `γ`).
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Number of random tuples.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    constant: Option<f64>,
    #[arg(long)]
    corpus: Option<PathBuf>,
}

struct SweepRequest {
    id: InequalityId,
    p: f64,
    second: f64,
    samples: usize,
    seed: u64,
    constant: Option<f64>,
    corpus: Option<PathBuf>,
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(scenarios: &[PathBuf], output_dir: Option<&Path>) -> Result<bool> {
    let mut loaded = Vec::new();
    for path in scenarios {
        let mut s = Scenario::load(path).with_context(|| format!("loading {}", path.display()))?;
        if let Some(dir) = output_dir {
            s.output_dir = Some(dir.to_path_buf());
        }
        loaded.push(s);
    }
    let mut ok = true;
    for (s, outcome) in loaded.iter().zip(run_scenarios(&loaded)) {
        match outcome {
            Ok(o) => {
                ok &= o.passed;
                println!("{} {}", if o.passed { "PASS" } else { "FAIL" }, o.name);
                if let Some(checks) = o.summary["checks"].as_array() {
                    for c in checks {
                        let c: Check = serde_json::from_value(c.clone())?;
                        println!(
                            "  {} {} = {} (target {})",
                            if c.pass { "ok  " } else { "FAIL" },
                            c.name,
                            c.value,
                            c.target
                        );
                    }
                }
                for f in &o.files {
                    println!("  wrote {}", f.display());
                }
            }
            Err(e) => {
                ok = false;
                println!("ERROR {}: {e}", s.name);
            }
        }
    }
    Ok(ok)
}

fn solve(path: &Path, output_dir: &Path) -> Result<bool> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec: ProblemSpec = serde_json::from_str(&text)?;
    let problem = spec.problem()?;
    let report = solve_dirichlet(&problem, &spec.solve)?;
    let values = output_dir.join("solution.csv");
    write_grid_csv(&values, &report.u)?;
    let checks = vec![Check::at_most(
        "solver_residual",
        report.residual_sup,
        spec.solve.tol,
    )];
    let summary = json!({
        "converged": report.converged,
        "iterations": report.iterations,
        "residual_sup": report.residual_sup,
        "energy_trace": report.energy_trace,
        "residual_trace": report.residual_trace,
        "method": report.method,
        "values": values,
    });
    let envelope = Envelope::new(&spec, checks, summary);
    let json_path = output_dir.join("solve.json");
    write_json(&json_path, &envelope)?;
    println!(
        "{} residual {:e} after {} iterations; wrote {} and {}",
        if report.converged {
            "converged"
        } else {
            "NOT converged"
        },
        report.residual_sup,
        report.iterations,
        values.display(),
        json_path.display()
    );
    Ok(report.converged)
}

fn analyze(path: &Path, center: Option<Vec<f64>>, radii: Option<Vec<f64>>, p: f64) -> Result<()> {
    let u = read_grid_csv(path)?;
    let grid = u.grid();
    let center = center.unwrap_or_else(|| vec![0.0; grid.dim()]);
    if center.len() != grid.dim() {
        bail!("--center needs {} coordinates", grid.dim());
    }
    let radii = radii.unwrap_or_else(|| {
        let r0 = 0.25 * (grid.upper()[0] - grid.lower()[0]);
        (0..4).map(|k| r0 / f64::from(1u32 << k)).collect()
    });
    let report = fit_holder_exponent(&u, &center, &radii, p)?;
    print_json(&serde_json::to_value(&report)?)
}

fn ineq(cmd: IneqCommand) -> Result<bool> {
    match cmd {
        IneqCommand::List => {
            for id in InequalityId::ALL {
                println!(
                    "{id}\targs {}\tsecond exponent {}\tsearched constant {}",
                    id.arity(),
                    id.has_second_exponent(),
                    id.needs_constant()
                );
            }
            Ok(true)
        }
        IneqCommand::Check {
            id,
            p,
            second,
            constant,
            point,
        } => {
            let e = Exponents::new(id, p, second)?;
            let o = check(id, e, &point, constant)?;
            print_json(&json!({ "id": id, "lhs": o.lhs, "rhs": o.rhs, "pass": o.pass }))?;
            Ok(o.pass)
        }
        IneqCommand::Sweep {
            id,
            p,
            second,
            samples,
            seed,
            constant,
            corpus,
        } => run_sweep(SweepRequest {
            id,
            p,
            second,
            samples,
            seed,
            constant,
            corpus,
        }),
        IneqCommand::Constant {
            id,
            p,
            second,
            samples,
            rounds,
            seed,
        } => {
            let e = Exponents::new(id, p, second)?;
            let c = brute_force_constant(id, e, Budget { samples, rounds }, seed)?;
            print_json(&serde_json::to_value(&c)?)?;
            Ok(true)
        }
    }
}

fn run_sweep(r: SweepRequest) -> Result<bool> {
    let e = Exponents::new(r.id, r.p, r.second)?;
    let constant = match r.constant {
        Some(c) => Some(c),
        None if r.id.needs_constant() => {
            let budget = Budget {
                samples: 1 << 16,
                rounds: 40,
            };
            Some(brute_force_constant(r.id, e, budget, r.seed)?.constant * 1.01)
        }
        None => None,
    };
    let replayed = match &r.corpus {
        Some(path) => replay_corpus(&load_corpus(path)?, r.id, e, constant)?,
        None => Vec::new(),
    };
    let v = sweep(r.id, e, r.samples, r.seed, constant)?;
    if let Some(path) = &r.corpus {
        append_witness(path, &Witness::from(&v))?;
    }
    let mut out = serde_json::to_value(&v)?;
    if r.corpus.is_some() {
        out["corpus_failures"] = serde_json::to_value(&replayed)?;
    }
    print_json(&out)?;
    Ok(v.violations == 0 && replayed.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            scenarios,
            output_dir,
        } => run(&scenarios, output_dir.as_deref()),
        Command::Theta { dim, s, p, q } => (|| {
            let params = Params::new(dim, s, p, q)?;
            let theta = theta_exponent(&params)?;
            print_json(&json!({
                "N": dim, "s": s, "p": p, "q": q,
                "theta": theta,
                "theta_homogeneous": theta_homogeneous(s, p),
                "regime": regime(&params)?.to_string(),
                "version": tool_version(),
            }))?;
            Ok(true)
        })(),
        Command::Ineq {
            command: Some(command),
            ..
        } => ineq(command),
        Command::Ineq {
            command: None,
            sweep: f,
        } => match (f.id, f.p) {
            (Some(id), Some(p)) => run_sweep(SweepRequest {
                id,
                p,
                second: f.gamma,
                samples: f.n,
                seed: f.seed,
                constant: f.constant,
                corpus: f.corpus,
            }),
            _ => Err(anyhow::anyhow!("ineq needs a subcommand or --id and --p")),
        },
        Command::Solve {
            problem,
            output_dir,
        } => solve(&problem, &output_dir),
        Command::Analyze {
            values,
            fit_exponent,
            center,
            radii,
            p,
        } => {
            if fit_exponent {
                analyze(&values, center, radii, p).map(|_| true)
            } else {
                Err(anyhow::anyhow!("nothing to do: pass --fit-exponent"))
            }
        }
        Command::Registry => {
            for (id, what) in fracp_core::expr::REGISTRY {
                println!("{id:<30} {what}");
            }
            Ok(true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
