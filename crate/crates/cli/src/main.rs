use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use tomoregion::counts::CountsFile;
use tomoregion::feasibility::{gme_certify, FeasibilityStatus, SolverOptions, GME_MAX_QUBITS, GME_MIN_QUBITS};
use tomoregion::mmap::build_map;
use tomoregion::regions::{build_region, build_region_g, build_region_r, RegionKind, SchemeConstants};
use tomoregion::schemes::{BuiltinScheme, Povm};
use tomoregion::sim::{
    self, check_gme_state, distinguish_n, experiment_solver, gme_sample_cost, ratios_test, sample_counts,
    DistinguishConfig, GmeConfig, PreparedScheme, RatiosConfig, SearchOptions, StateFamily,
};

/// Confidence regions for quantum state tomography.
#[derive(Parser)]
#[command(name = "tomoregion", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Built-in measurement schemes.
    #[command(subcommand)]
    Scheme(SchemeCmd),
    /// Confidence region from a POVM file and measured counts.
    Region(RegionArgs),
    /// Monte Carlo experiments.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Certification tasks.
    #[command(subcommand)]
    Certify(CertifyCmd),
}

#[derive(Subcommand)]
enum SchemeCmd {
    /// Write the POVM file of a built-in scheme.
    Emit {
        /// pauli-bases, pauli-observables or sic
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        qubits: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RegionArgs {
    #[arg(long)]
    povm: PathBuf,
    #[arg(long)]
    counts: PathBuf,
    /// A, B, R or G
    #[arg(long, default_value = "B")]
    kind: String,
    #[arg(long)]
    delta: f64,
    /// σ_R for kind R when the scheme has no built-in constants.
    #[arg(long = "sigma-r", requires = "eta_r")]
    sigma_r: Option<f64>,
    #[arg(long = "eta-r", requires = "sigma_r")]
    eta_r: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "pauli-bases")]
    scheme: String,
    #[arg(long)]
    qubits: usize,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output CSV; a JSON sidecar with the configuration is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum SimulateCmd {
    /// Coverage ratios `‖ρ − ρ̂‖/(εσ)` per region kind.
    Ratios {
        #[command(flatten)]
        common: Common,
        #[arg(long = "N")]
        n: u64,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        /// ghz, w, zeros, ones, mixed or haar
        #[arg(long, default_value = "haar")]
        state: String,
        /// Depolarizing parameter applied to the state.
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Seed of the Haar-random state.
        #[arg(long = "state-seed", default_value_t = 0)]
        state_seed: u64,
        #[arg(long, default_value = "A,B,R", value_delimiter = ',')]
        kinds: Vec<String>,
    },
    /// Sample count at which two states' regions stop overlapping.
    Distinguish {
        #[command(flatten)]
        common: Common,
        /// ghz-w or zeros-ones
        #[arg(long, default_value = "zeros-ones")]
        pair: String,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value = "B")]
        kind: String,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Sample count at which the local-SIC region certifies entanglement.
    GmeCost {
        #[arg(long)]
        qubits: usize,
        /// ghz or w
        #[arg(long)]
        state: String,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 256)]
    trials: usize,
    #[arg(long, default_value_t = 0.5)]
    target: f64,
    #[arg(long, default_value_t = 0.02)]
    band: f64,
    #[arg(long = "max-steps", default_value_t = 12)]
    max_steps: usize,
}

impl SearchArgs {
    fn options(&self) -> SearchOptions {
        SearchOptions {
            target: self.target,
            band: self.band,
            max_steps: self.max_steps,
            trials: self.trials,
            ..SearchOptions::default()
        }
    }
}

#[derive(Subcommand)]
enum CertifyCmd {
    /// Is every state in the region genuinely multipartite entangled?
    Gme(GmeArgs),
}

#[derive(Args)]
struct GmeArgs {
    #[arg(long)]
    qubits: usize,
    /// Simulated state: ghz or w.
    #[arg(long, conflicts_with_all = ["counts", "povm"])]
    state: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Simulated sample count.
    #[arg(long = "N")]
    n: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Measured counts instead of a simulation.
    #[arg(long, requires = "povm")]
    counts: Option<PathBuf>,
    #[arg(long, requires = "counts")]
    povm: Option<PathBuf>,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value = "B")]
    kind: String,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            for cause in e.chain().skip(1) {
                eprintln!("  caused by: {cause}");
            }
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Scheme(SchemeCmd::Emit { scheme, qubits, out }) => {
            let povm = BuiltinScheme::from_name(&scheme, qubits)?.build()?;
            write_json(&out, &povm.to_json())
        }
        Command::Region(args) => cmd_region(&args),
        Command::Simulate(cmd) => cmd_simulate(cmd),
        Command::Certify(CertifyCmd::Gme(args)) => cmd_certify_gme(&args),
    }
}

fn read_povm(path: &Path) -> Result<Povm> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Povm::from_json(&value).with_context(|| format!("invalid POVM file {}", path.display()))
}

fn read_counts(path: &Path) -> Result<CountsFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    CountsFile::from_json_str(&text).with_context(|| format!("invalid counts file {}", path.display()))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        bail!("--delta must lie in (0,1), got {delta}");
    }
    Ok(())
}

fn cmd_region(args: &RegionArgs) -> Result<()> {
    check_delta(args.delta)?;
    let kind = RegionKind::parse(&args.kind)?;
    let povm = read_povm(&args.povm)?;
    let assembled = read_counts(&args.counts)?.assemble(&povm)?;
    let map = Arc::new(build_map(&assembled.povm));
    let n = assembled.n_total as f64;
    let f = &assembled.frequencies;
    let region = match kind {
        RegionKind::A | RegionKind::B => build_region(&map, f, n, args.delta, kind)?,
        RegionKind::G => build_region_g(&map, &assembled.povm, f, n, args.delta)?,
        RegionKind::R => {
            let constants = match (args.sigma_r, args.eta_r) {
                (Some(sigma_r), Some(eta_r)) => Some(SchemeConstants { sigma_r, eta_r }),
                _ => SchemeConstants::for_povm(&assembled.povm),
            };
            build_region_r(&map, f, n, args.delta, constants)?
        }
    };
    let mut report = region.report_json();
    report["config"] = json!({
        "povm": args.povm.display().to_string(),
        "counts": args.counts.display().to_string(),
        "kind": kind.as_str(),
        "delta": args.delta,
        "weights": assembled.weights,
        "sigma_r": args.sigma_r,
        "eta_r": args.eta_r,
    });
    write_json(&args.out, &report)
}

fn parse_kinds(kinds: &[String]) -> Result<Vec<&'static str>> {
    kinds
        .iter()
        .map(|k| Ok(RegionKind::parse(k.trim())?.as_str()))
        .collect()
}

fn pair_states(pair: &str, qubits: usize, t: f64) -> Result<(StateFamily, StateFamily)> {
    let (a, b) = match pair {
        "ghz-w" => (StateFamily::Ghz { qubits }, StateFamily::W { qubits }),
        "zeros-ones" => (
            StateFamily::Basis { qubits, ones: false },
            StateFamily::Basis { qubits, ones: true },
        ),
        _ => bail!("unknown pair {pair:?} (expected ghz-w or zeros-ones)"),
    };
    Ok((a.depolarized(t), b.depolarized(t)))
}

fn cmd_simulate(cmd: SimulateCmd) -> Result<()> {
    match cmd {
        SimulateCmd::Ratios {
            common,
            n,
            trials,
            state,
            t,
            state_seed,
            kinds,
        } => {
            check_delta(common.delta)?;
            let state = StateFamily::from_name(&state, common.qubits, state_seed)?.depolarized(t);
            let config = RatiosConfig {
                scheme: common.scheme.clone(),
                qubits: common.qubits,
                state,
                n,
                delta: common.delta,
                trials,
                seed: common.seed,
                workers: common.workers,
                kinds: parse_kinds(&kinds)?,
            };
            let result = ratios_test(&config)?;
            write_text(&common.out, &sim::ratios_csv(&result))?;
            let summary_path = common.out.with_extension("summary.csv");
            write_text(&summary_path, &sim::summary_csv(&result))?;
            write_json(
                &sidecar(&common.out),
                &json!({
                    "command": "simulate ratios",
                    "config": config,
                    "trial_seeds": "trial_seed(seed, 0, trial)",
                    "summary": result.summary,
                }),
            )
        }
        SimulateCmd::Distinguish {
            common,
            pair,
            t,
            kind,
            search,
        } => {
            check_delta(common.delta)?;
            let (state1, state2) = pair_states(&pair, common.qubits, t)?;
            let config = DistinguishConfig {
                scheme: common.scheme.clone(),
                qubits: common.qubits,
                state1,
                state2,
                kind: RegionKind::parse(&kind)?.as_str(),
                delta: common.delta,
                seed: common.seed,
                workers: common.workers,
                search: search.options(),
                solver: experiment_solver(),
            };
            let result = distinguish_n(&config)?;
            write_text(&common.out, &sim::search_csv(common.qubits, &result))?;
            write_json(
                &sidecar(&common.out),
                &json!({
                    "command": "simulate distinguish",
                    "pair": pair,
                    "config": config,
                    "trial_seeds": "trial_seed(seed, 1, trial) and trial_seed(seed, 2, trial)",
                    "result": result,
                }),
            )
        }
        SimulateCmd::GmeCost {
            qubits,
            state,
            t,
            delta,
            seed,
            workers,
            out,
            search,
        } => {
            check_delta(delta)?;
            let state = gme_family(&state, qubits)?.depolarized(t);
            let config = GmeConfig {
                qubits,
                state,
                delta,
                seed,
                workers,
                search: search.options(),
                solver: experiment_solver(),
            };
            let result = gme_sample_cost(&config)?;
            write_text(&out, &sim::search_csv(qubits, &result))?;
            write_json(
                &sidecar(&out),
                &json!({
                    "command": "simulate gme-cost",
                    "scheme": "sic",
                    "config": config,
                    "trial_seeds": "trial_seed(seed, 3, trial)",
                    "result": result,
                }),
            )
        }
    }
}

fn gme_family(name: &str, qubits: usize) -> Result<StateFamily> {
    match name {
        "ghz" => Ok(StateFamily::Ghz { qubits }),
        "w" => Ok(StateFamily::W { qubits }),
        _ => bail!("unknown state {name:?} (expected ghz or w)"),
    }
}

fn cmd_certify_gme(args: &GmeArgs) -> Result<()> {
    check_delta(args.delta)?;
    let kind = RegionKind::parse(&args.kind)?;
    if !matches!(kind, RegionKind::A | RegionKind::B) {
        bail!("entanglement certification supports region kinds A and B");
    }
    if !(GME_MIN_QUBITS..=GME_MAX_QUBITS).contains(&args.qubits) {
        return Err(tomoregion::Error::Cap {
            what: "qubits for entanglement certification",
            value: args.qubits,
            cap: GME_MAX_QUBITS,
        }
        .into());
    }
    let solver = SolverOptions::default();
    let (region, source) = match (&args.state, &args.counts, &args.povm) {
        (Some(name), _, _) => {
            let (Some(n), Some(seed)) = (args.n, args.seed) else {
                bail!("a simulated state needs --N and --seed");
            };
            let state = gme_family(name, args.qubits)?.depolarized(args.t);
            check_gme_state(&state)?;
            let prepared = PreparedScheme::new(BuiltinScheme::Sic { qubits: args.qubits })?;
            let counts = sample_counts(&prepared.povm, &state.density()?, n, seed)?;
            let region = prepared.region(&counts, args.delta, kind)?;
            (
                region,
                json!({ "simulated": state, "scheme": "sic", "N": n, "seed": seed }),
            )
        }
        (None, Some(counts), Some(povm_path)) => {
            let povm = read_povm(povm_path)?;
            let assembled = read_counts(counts)?.assemble(&povm)?;
            let map = Arc::new(build_map(&assembled.povm));
            let region = build_region(
                &map,
                &assembled.frequencies,
                assembled.n_total as f64,
                args.delta,
                kind,
            )?;
            (
                region,
                json!({
                    "counts": counts.display().to_string(),
                    "povm": povm_path.display().to_string(),
                    "weights": assembled.weights,
                }),
            )
        }
        _ => bail!("give either --state (with --N and --seed) or --counts with --povm"),
    };
    let outcome = gme_certify(&region, args.qubits, &solver)?;
    let mut report = outcome.to_json();
    report["gme_certified"] = json!(outcome.status == FeasibilityStatus::EmptyWithinMargin);
    report["region"] = json!({
        "kind": region.kind.as_str(),
        "epsilon": region.epsilon,
        "sigma": region.sigma,
        "radius": region.radius(),
    });
    report["config"] = json!({
        "qubits": args.qubits,
        "delta": args.delta,
        "kind": kind.as_str(),
        "source": source,
        "solver": solver,
    });
    write_json(&args.out, &report)
}
