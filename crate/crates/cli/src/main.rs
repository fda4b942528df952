use clap::{Args, Parser, Subcommand};
use flowbal_cli::config::{Expanded, ExperimentSpec, Mode};
use flowbal_cli::{csv, runner};
use flowbal_core::analysis;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "flowbal", version, about = "Flow-level load balancing simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the single-point experiment in a config file.
    Simulate(RunArgs),
    /// Expand a sweep config and run every grid point.
    Sweep(RunArgs),
    /// Print closed-form quantities without simulating.
    Analytic(AnalyticCmd),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent runs.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Override the workload guard level.
    #[arg(long)]
    guard: Option<u64>,
}

#[derive(Args)]
struct AnalyticCmd {
    #[command(subcommand)]
    query: Query,
}

#[derive(Subcommand)]
enum Query {
    /// Stability threshold on total offered load.
    Capacity {
        #[arg(long)]
        m: usize,
    },
    /// Two-AP ON-OFF join probability of the better AP.
    BcfJoin {
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        p2: f64,
    },
    /// Two-AP ON-OFF throughput loss and supportable load.
    BcfLoss {
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        p2: f64,
    },
    /// Variance and second moment of the two-point flow workload.
    FlowVariance {
        #[arg(long)]
        w: f64,
        #[arg(long)]
        beta: f64,
    },
    /// Per-slot arrival workload variance under Bernoulli arrivals.
    ArrivalVariance {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        w: f64,
        #[arg(long)]
        beta: f64,
    },
    /// Heavy-traffic workload constant under least-workload routing.
    JlwLimit {
        #[arg(long)]
        sigma2: f64,
    },
    /// Heavy-traffic workload constants under random routing.
    RlbLimit {
        #[arg(long)]
        sigma2: f64,
        #[arg(long)]
        m: usize,
    },
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Simulate(args) => run_mode(args, true),
        Cmd::Sweep(args) => run_mode(args, false),
        Cmd::Analytic(cmd) => analytic(cmd.query),
    }
}

fn fail(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("{message}");
    ExitCode::from(2)
}

fn run_mode(args: RunArgs, simulate: bool) -> ExitCode {
    let mut spec = match ExperimentSpec::load(&args.config) {
        Ok(s) => s,
        Err(e) => return fail(format!("config error: {e}")),
    };
    if let Ok(v) = std::env::var("FLOWBAL_SEED") {
        match v.trim().parse::<u64>() {
            Ok(seed) => spec.base_seed = seed,
            Err(_) => {
                return fail(format!(
                    "config error: FLOWBAL_SEED: expected an unsigned integer, got {v:?}"
                ))
            }
        }
    }
    if let Some(g) = args.guard {
        spec.guard = Some(g);
    }
    if simulate && spec.mode != Mode::Single {
        return fail("config error: mode: `simulate` runs single-point configs; use `sweep`");
    }

    let expanded = match spec.expand() {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    match expanded {
        Expanded::Analytic(curve) => {
            let mut body = String::new();
            for &delta in &curve.deltas {
                match csv::loss_curve_row(&curve.experiment, delta) {
                    Ok(row) => {
                        body.push_str(&row);
                        body.push('\n');
                    }
                    Err(e) => return fail(e),
                }
            }
            let text = format!("{}\n{body}", csv::LOSS_CURVE_HEADER);
            emit(args.out.or_else(|| curve.out.clone().map(PathBuf::from)), &text)
        }
        Expanded::Runs(plan) => {
            let outcome = match runner::execute(&plan, args.workers) {
                Ok(o) => o,
                Err(e) => return fail(e),
            };
            let mut text = String::new();
            if simulate {
                text.push_str(csv::BASE_HEADER);
                text.push('\n');
                for row in &outcome.rows {
                    text.push_str(&row.format_base());
                    text.push('\n');
                }
            } else {
                text.push_str(&csv::sweep_header());
                text.push('\n');
                for row in &outcome.rows {
                    text.push_str(&row.format_sweep());
                    text.push('\n');
                }
            }
            let code = emit(args.out.or_else(|| plan.out.clone().map(PathBuf::from)), &text);
            if code != ExitCode::SUCCESS {
                return code;
            }
            let fatal = plan.fail_on_instability.unwrap_or(simulate);
            if outcome.guard_trips > 0 && fatal {
                eprintln!("instability guard tripped in {} run(s)", outcome.guard_trips);
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
    }
}

fn emit(out: Option<PathBuf>, text: &str) -> ExitCode {
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, text) {
                eprintln!("{}: {e}", path.display());
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        None => {
            print!("{text}");
            ExitCode::SUCCESS
        }
    }
}

fn analytic(query: Query) -> ExitCode {
    let mut lines: Vec<(&'static str, f64)> = Vec::new();
    let result: Result<(), flowbal_core::ConfigError> = (|| {
        match query {
            Query::Capacity { m } => lines.push(("capacity", analysis::capacity_threshold(m))),
            Query::BcfJoin { p1, p2 } => {
                lines.push(("bcf_join_prob", analysis::bcf_join_prob(p1, p2)?))
            }
            Query::BcfLoss { p1, p2 } => {
                lines.push(("bcf_throughput_loss", analysis::bcf_throughput_loss(p1, p2)?));
                lines.push(("bcf_supportable_load", analysis::bcf_supportable_load(p1, p2)?));
            }
            Query::FlowVariance { w, beta } => {
                lines.push(("flow_size_variance", analysis::flow_size_variance(w, beta)?));
                lines.push((
                    "flow_size_second_moment",
                    analysis::flow_size_second_moment(w, beta)?,
                ));
            }
            Query::ArrivalVariance { lambda, w, beta } => lines.push((
                "arrival_workload_variance",
                analysis::arrival_workload_variance(lambda, w, beta)?,
            )),
            Query::JlwLimit { sigma2 } => {
                lines.push(("jlw_limit", analysis::jlw_heavy_traffic_limit(sigma2)))
            }
            Query::RlbLimit { sigma2, m } => {
                lines.push(("rlb_limit_total", analysis::rlb_heavy_traffic_limit(sigma2, m)));
                lines.push((
                    "rlb_limit_per_ap",
                    analysis::rlb_heavy_traffic_limit_per_ap(sigma2, m),
                ));
            }
        }
        Ok(())
    })();
    match result {
        Ok(()) => {
            for (name, value) in lines {
                println!("{name} {value}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
