use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use etf_core::planner::{PlanKind, Verdict};
use etf_core::scenario::load_scenario;
use etf_core::simulator::{run_detailed, write_csv, write_packet_trace, MetricsReport, SimError};
use etf_core::topology::{build_lcrt_tree, MulticastTree};
use etf_core::{oracle_is_seamless, Planner, Policy, Scenario, Sphere};

#[derive(Parser)]
#[command(name = "etf", version, about = "Plan and simulate seamless UAV transitions in an aerial multicast")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Override the scenario's rng_seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the planned trajectory of one transition as JSON.
    Plan {
        #[command(flatten)]
        common: Common,
        #[arg(long, short = 't', default_value_t = 0)]
        transition: usize,
    },
    /// Print the seamlessness verdict of one transition's straight line.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, short = 't', default_value_t = 0)]
        transition: usize,
    },
    /// Run the multicast simulation and write the metrics row as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// CSV output; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-packet delivery trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_parser = parse_policy)]
        policy: Option<Policy>,
    },
    /// Replan every transition and replay it through the sampling oracle.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Simulate every (policy, traffic rate) combination in parallel.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Traffic rates in bits/s.
        #[arg(long, value_delimiter = ',', required = true)]
        rates: Vec<f64>,
        #[arg(long, value_delimiter = ',', value_parser = parse_policy, default_value = "lcrt,etf")]
        policies: Vec<Policy>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_policy(s: &str) -> Result<Policy, String> {
    match s.to_ascii_lowercase().as_str() {
        "etf" => Ok(Policy::Etf),
        "lcrt" => Ok(Policy::Lcrt),
        other => Err(format!("unknown policy `{other}` (expected etf or lcrt)")),
    }
}

/// A failure with its exit code and a short machine-readable category.
struct Failure {
    exit: u8,
    code: &'static str,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Self { exit: 2, code: "input", message: message.to_string() }
    }

    fn io(path: &Path, e: impl ToString) -> Self {
        Self { exit: 2, code: "io", message: format!("{}: {}", path.display(), e.to_string()) }
    }

    fn plan(message: impl ToString) -> Self {
        Self { exit: 1, code: "plan", message: message.to_string() }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Plan(p) => Failure::plan(p),
            other => Failure::input(other),
        }
    }
}

fn load(common: &Common) -> Result<Scenario, Failure> {
    let mut scenario = load_scenario(&common.scenario).map_err(Failure::input)?;
    if let Some(seed) = common.seed {
        scenario.rng_seed = seed;
    }
    Ok(scenario)
}

fn tree_of(scenario: &Scenario) -> Result<MulticastTree, Failure> {
    build_lcrt_tree(&scenario.fleet).map_err(Failure::input)
}

fn print_json(value: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
}

fn open_out(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::io(path, e))
}

fn emit_reports(out: Option<&Path>, reports: &[MetricsReport]) -> Result<(), Failure> {
    match out {
        Some(path) => write_csv(open_out(path)?, reports).map_err(|e| Failure::io(path, e)),
        None => write_csv(io::stdout().lock(), reports).map_err(|e| Failure::io(Path::new("<stdout>"), e)),
    }
}

#[derive(Serialize)]
struct CheckOutput {
    transition: usize,
    mobile_id: u32,
    fa: u32,
    fb: u32,
    seamless: bool,
    trace: etf_core::CheckTrace,
}

fn execute(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Plan { common, transition } => {
            let scenario = load(&common)?;
            let tree = tree_of(&scenario)?;
            let req = scenario.transition_request(&tree, transition)?;
            let plan = Planner::new(&scenario.fleet, &tree, scenario.planner)
                .plan_transition(&req)
                .map_err(Failure::plan)?;
            print_json(&plan);
        }
        Command::Check { common, transition } => {
            let scenario = load(&common)?;
            let tree = tree_of(&scenario)?;
            let req = scenario.transition_request(&tree, transition)?;
            let Verdict { seamless, trace } = Planner::new(&scenario.fleet, &tree, scenario.planner)
                .check_seamless(&req)
                .map_err(Failure::plan)?;
            print_json(&CheckOutput { transition, mobile_id: req.mobile_id, fa: req.fa, fb: req.fb, seamless, trace });
        }
        Command::Simulate { common, out, trace, policy } => {
            let mut scenario = load(&common)?;
            if let Some(p) = policy {
                scenario.policy = p;
            }
            let output = run_detailed(&scenario)?;
            if let Some(path) = &trace {
                let receivers: Vec<u32> = output.report.receivers.iter().map(|r| r.id).collect();
                write_packet_trace(open_out(path)?, &output.records, &receivers).map_err(|e| Failure::io(path, e))?;
            }
            emit_reports(out.as_deref(), &[output.report])?;
        }
        Command::Verify { common } => {
            let scenario = load(&common)?;
            let tree = tree_of(&scenario)?;
            let planner = Planner::new(&scenario.fleet, &tree, scenario.planner);
            let spheres: Vec<Sphere> = tree
                .forwarders
                .iter()
                .map(|&id| scenario.fleet.get(id).map(|u| u.rtr()))
                .collect::<Result<_, _>>()
                .map_err(Failure::input)?;
            let mut all_pass = true;
            for k in 0..scenario.transitions.len() {
                let req = scenario.transition_request(&tree, k)?;
                let line = match planner.plan_transition(&req) {
                    Ok(plan) => {
                        let pass = plan.seamless
                            && oracle_is_seamless(&plan.waypoints, &spheres, scenario.planner.oracle_step);
                        all_pass &= pass;
                        format!(
                            "transition {k} mobile {} kind {} waypoints {} length {:.3} oracle {}",
                            req.mobile_id,
                            kind_name(plan.kind),
                            plan.waypoints.len(),
                            plan.length(),
                            if pass { "pass" } else { "fail" }
                        )
                    }
                    Err(e) => {
                        all_pass = false;
                        format!("transition {k} mobile {} failed: {e}", req.mobile_id)
                    }
                };
                println!("{line}");
            }
            if !all_pass {
                return Err(Failure { exit: 1, code: "verify", message: "at least one plan failed the oracle".into() });
            }
        }
        Command::Sweep { common, rates, policies, out } => {
            let base = load(&common)?;
            let mut runs = Vec::new();
            for &policy in &policies {
                for &rate in &rates {
                    let mut s = base.clone();
                    s.policy = policy;
                    s.traffic_rate = rate;
                    runs.push(s);
                }
            }
            let results: Vec<Result<MetricsReport, SimError>> = std::thread::scope(|scope| {
                let handles: Vec<_> =
                    runs.iter().map(|s| scope.spawn(move || etf_core::simulator::run(s))).collect();
                handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
            });
            let reports = results.into_iter().collect::<Result<Vec<_>, _>>()?;
            emit_reports(out.as_deref(), &reports)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn kind_name(kind: PlanKind) -> String {
    serde_json::to_value(kind).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: usage: {first}");
            return ExitCode::from(2);
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(f) => {
            let _ = io::stdout().flush();
            eprintln!("error: {}: {}", f.code, f.message.replace('\n', " "));
            ExitCode::from(f.exit)
        }
    }
}
