//! Monte Carlo harness: state families, multinomial sampling, coverage
//! ratios, distinguishing power and the entanglement sample cost.
//!
//! Every trial draws from its own generator seeded by
//! [`trial_seed`]`(master, stream, trial)`, and results are collected in
//! trial order, so aggregates do not depend on the number of workers. The
//! seed does not depend on `N`: a search over `N` reuses the same trial
//! streams at every point, which keeps the empirical curve smooth.

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::feasibility::{gme_certify, regions_overlap, FeasibilityStatus, SolverOptions};
use crate::herm::HermOp;
use crate::mmap::{build_map, MeasurementMap};
use crate::regions::{region_from_estimate, region_r_from_estimate, Region, RegionKind, SchemeConstants};
use crate::schemes::{BuiltinScheme, Povm, MAX_SIM_QUBITS};

/// Named test states.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum StateFamily {
    Ghz { qubits: usize },
    W { qubits: usize },
    /// `|0…0⟩` or `|1…1⟩`.
    Basis { qubits: usize, ones: bool },
    /// `t ρ + (1 − t) 𝟙/d`.
    Depolarized { base: Box<StateFamily>, t: f64 },
    MaximallyMixed { qubits: usize },
    Haar { qubits: usize, seed: u64 },
}

impl StateFamily {
    pub fn qubits(&self) -> usize {
        match self {
            StateFamily::Ghz { qubits }
            | StateFamily::W { qubits }
            | StateFamily::Basis { qubits, .. }
            | StateFamily::MaximallyMixed { qubits }
            | StateFamily::Haar { qubits, .. } => *qubits,
            StateFamily::Depolarized { base, .. } => base.qubits(),
        }
    }

    pub fn depolarized(self, t: f64) -> StateFamily {
        StateFamily::Depolarized {
            base: Box::new(self),
            t,
        }
    }

    /// Parses `ghz`, `w`, `zeros`, `ones`, `mixed` or `haar`.
    pub fn from_name(name: &str, qubits: usize, seed: u64) -> Result<StateFamily> {
        Ok(match name {
            "ghz" => StateFamily::Ghz { qubits },
            "w" => StateFamily::W { qubits },
            "zeros" => StateFamily::Basis { qubits, ones: false },
            "ones" => StateFamily::Basis { qubits, ones: true },
            "mixed" => StateFamily::MaximallyMixed { qubits },
            "haar" => StateFamily::Haar { qubits, seed },
            _ => {
                return invalid(format!(
                    "unknown state {name:?} (expected ghz, w, zeros, ones, mixed or haar)"
                ))
            }
        })
    }

    fn ket(&self) -> Option<DVector<Complex64>> {
        let one = Complex64::new(1.0, 0.0);
        match self {
            StateFamily::Ghz { qubits } => {
                let d = 1usize << qubits;
                let mut v = DVector::zeros(d);
                v[0] = one / 2f64.sqrt();
                v[d - 1] = one / 2f64.sqrt();
                Some(v)
            }
            StateFamily::W { qubits } => {
                let mut v = DVector::zeros(1usize << qubits);
                for k in 0..*qubits {
                    v[1usize << k] = one / (*qubits as f64).sqrt();
                }
                Some(v)
            }
            StateFamily::Basis { qubits, ones } => {
                let d = 1usize << qubits;
                let mut v = DVector::zeros(d);
                v[if *ones { d - 1 } else { 0 }] = one;
                Some(v)
            }
            StateFamily::Haar { qubits, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let v = DVector::from_fn(1usize << qubits, |_, _| {
                    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                });
                let n = v.norm();
                Some(v / Complex64::new(n, 0.0))
            }
            _ => None,
        }
    }

    pub fn density(&self) -> Result<HermOp> {
        let q = self.qubits();
        if q == 0 || q > 8 {
            return invalid(format!("state families support 1 to 8 qubits, got {q}"));
        }
        let d = 1usize << q;
        match self {
            StateFamily::MaximallyMixed { .. } => Ok(HermOp::identity(d).scale(1.0 / d as f64)),
            StateFamily::Depolarized { base, t } => {
                if !(0.0..=1.0).contains(t) {
                    return invalid(format!("depolarizing parameter t must lie in [0,1], got {t}"));
                }
                Ok(base
                    .density()?
                    .scale(*t)
                    .add_scaled(&HermOp::identity(d), (1.0 - t) / d as f64))
            }
            pure => Ok(HermOp::projector(&pure.ket().expect("pure family"))),
        }
    }
}

/// Largest `t` for which `𝒟_t(ψ)` is still a PPT mixture, for the
/// families and sizes where it is tabulated.
pub fn ppt_threshold(family: &StateFamily) -> Option<f64> {
    match family {
        StateFamily::Ghz { qubits: 3 } => Some(0.429),
        StateFamily::Ghz { qubits: 4 } => Some(0.467),
        StateFamily::W { qubits: 3 } => Some(0.479),
        StateFamily::W { qubits: 4 } => Some(0.474),
        _ => None,
    }
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one trial, a hash of the master seed, a stream index and the
/// trial index.
pub fn trial_seed(master: u64, stream: u64, trial: u64) -> u64 {
    mix64(mix64(mix64(master) ^ stream) ^ trial)
}

/// Stream indices of the experiments.
const STREAM_RATIOS: u64 = 0;
const STREAM_FIRST: u64 = 1;
const STREAM_SECOND: u64 = 2;
const STREAM_GME: u64 = 3;

/// Outcome probabilities of `ρ`, with round-off negatives clipped.
pub fn outcome_probabilities(povm: &Povm, rho: &HermOp) -> Result<Vec<f64>> {
    let mut p = povm.probabilities(rho);
    if let Some(bad) = p.iter().find(|x| **x < -1e-12) {
        return Err(Error::Frequencies(format!(
            "outcome probability {bad:.3e} is negative; is the state positive semidefinite?"
        )));
    }
    let total: f64 = p.iter().map(|x| x.max(0.0)).sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::Frequencies(format!(
            "outcome probabilities sum to {total}; is the state normalized?"
        )));
    }
    for x in p.iter_mut() {
        *x = x.max(0.0) / total;
    }
    Ok(p)
}

/// One multinomial draw of size `n` by sequential conditional binomials.
pub fn sample_multinomial<R: Rng>(probs: &[f64], n: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = n;
    let mut mass = 1.0;
    for (a, p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if a + 1 == probs.len() {
            counts[a] = remaining;
            break;
        }
        let cond = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 1.0 };
        let c = Binomial::new(remaining, cond)
            .expect("conditional probability in [0,1]")
            .sample(rng);
        counts[a] = c;
        remaining -= c;
        mass -= p;
    }
    counts
}

/// Counts of `n` measurements of `ρ` with the merged POVM.
pub fn sample_counts(povm: &Povm, rho: &HermOp, n: u64, seed: u64) -> Result<Vec<u64>> {
    if n == 0 {
        return invalid("N must be at least 1");
    }
    let p = outcome_probabilities(povm, rho)?;
    Ok(sample_multinomial(&p, n, &mut ChaCha8Rng::seed_from_u64(seed)))
}

pub fn frequencies(counts: &[u64]) -> Vec<f64> {
    let n: u64 = counts.iter().sum();
    counts.iter().map(|c| *c as f64 / n as f64).collect()
}

/// Runs `f(trial)` for every trial on a pool of `workers` threads and
/// returns the results in trial order.
pub fn run_trials<T, F>(trials: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..trials).into_par_iter().map(&f).collect()))
}

/// A built-in scheme prepared for repeated sampling.
#[derive(Debug, Clone)]
pub struct PreparedScheme {
    pub scheme: BuiltinScheme,
    pub povm: Povm,
    pub map: Arc<MeasurementMap>,
    pub constants: Option<SchemeConstants>,
}

impl PreparedScheme {
    pub fn new(scheme: BuiltinScheme) -> Result<Self> {
        if scheme.qubits() > MAX_SIM_QUBITS {
            return Err(Error::Cap {
                what: "qubits for sampling-based experiments",
                value: scheme.qubits(),
                cap: MAX_SIM_QUBITS,
            });
        }
        let povm = scheme.build()?;
        let map = Arc::new(build_map(&povm));
        map.require_complete()?;
        Ok(Self {
            scheme,
            constants: SchemeConstants::for_builtin(scheme),
            povm,
            map,
        })
    }

    pub fn dim(&self) -> usize {
        self.povm.dim()
    }

    /// Region of `kind` around the estimate from `counts`.
    pub fn region(&self, counts: &[u64], delta: f64, kind: RegionKind) -> Result<Region> {
        let n: u64 = counts.iter().sum();
        let center = self.map.estimate_unchecked(&frequencies(counts));
        match kind {
            RegionKind::A | RegionKind::B => region_from_estimate(&self.map, center, n as f64, delta, kind),
            RegionKind::R => region_r_from_estimate(self.dim(), center, n as f64, delta, self.constants),
            RegionKind::G => {
                let mut g = crate::regions::build_region_g(
                    &self.map,
                    &self.povm,
                    &vec![1.0 / counts.len() as f64; counts.len()],
                    n as f64,
                    delta,
                )?;
                g.center = center;
                Ok(g)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RatiosConfig {
    pub scheme: String,
    pub qubits: usize,
    pub state: StateFamily,
    pub n: u64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(skip)]
    pub workers: usize,
    pub kinds: Vec<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KindSummary {
    pub kind: &'static str,
    pub quantile: f64,
    pub coverage: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct RatiosResult {
    /// `(trial, kind, r)` rows in trial order.
    pub rows: Vec<(usize, RegionKind, f64)>,
    pub summary: Vec<KindSummary>,
}

/// Empirical `1 − δ` quantile: the `⌈(1−δ)n⌉`-th smallest value.
pub fn empirical_quantile(values: &[f64], level: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let idx = ((level * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    v[idx]
}

fn kinds_from(names: &[&str]) -> Result<Vec<RegionKind>> {
    names.iter().map(|k| RegionKind::parse(k)).collect()
}

/// Ratios `‖ρ − ρ̂‖_⋆/(εσ)` over independent trials, with their `1 − δ`
/// quantiles and empirical coverage per region kind.
pub fn ratios_test(config: &RatiosConfig) -> Result<RatiosResult> {
    let scheme = BuiltinScheme::from_name(&config.scheme, config.qubits)?;
    let prepared = PreparedScheme::new(scheme)?;
    let rho = config.state.density()?;
    if rho.dim() != prepared.dim() {
        return Err(Error::DimensionMismatch {
            expected: prepared.dim(),
            got: rho.dim(),
        });
    }
    if config.trials == 0 {
        return invalid("at least one trial is required");
    }
    let kinds = kinds_from(&config.kinds)?;
    if kinds.contains(&RegionKind::R) && prepared.constants.is_none() {
        return invalid("region R requested but no reference-region constants are known for this scheme");
    }
    let probs = outcome_probabilities(&prepared.povm, &rho)?;
    let per_trial = run_trials(config.trials, config.workers, |t| -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(config.seed, STREAM_RATIOS, t as u64));
        let counts = sample_multinomial(&probs, config.n, &mut rng);
        kinds
            .iter()
            .map(|k| Ok(prepared.region(&counts, config.delta, *k)?.ratio(&rho)))
            .collect()
    })?;
    let mut rows = Vec::with_capacity(config.trials * kinds.len());
    for (t, r) in per_trial.into_iter().enumerate() {
        for (k, v) in kinds.iter().zip(r?) {
            rows.push((t, *k, v));
        }
    }
    let summary = kinds
        .iter()
        .map(|k| {
            let vals: Vec<f64> = rows.iter().filter(|r| r.1 == *k).map(|r| r.2).collect();
            KindSummary {
                kind: k.as_str(),
                quantile: empirical_quantile(&vals, 1.0 - config.delta),
                coverage: vals.iter().filter(|v| **v <= 1.0).count() as f64 / vals.len() as f64,
                max_ratio: vals.iter().cloned().fold(0.0, f64::max),
            }
        })
        .collect();
    Ok(RatiosResult { rows, summary })
}

/// Bisection protocol for the sample count at which an empirical
/// probability crosses `target`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SearchOptions {
    pub target: f64,
    pub band: f64,
    pub min_log2: f64,
    pub max_log2: f64,
    pub max_steps: usize,
    pub trials: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            target: 0.5,
            band: 0.02,
            min_log2: 3.0,
            max_log2: 24.0,
            max_steps: 12,
            trials: 256,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    /// `N` whose fraction lies in `target ± band`, if found.
    pub n_star: Option<u64>,
    pub fraction: Option<f64>,
    /// `(N, fraction)` for every evaluation, in order.
    pub evaluations: Vec<(u64, f64)>,
    /// Final `[lo, hi]` bracket in samples.
    pub bracket: (u64, u64),
    /// True when the budget ran out without landing in the band.
    pub inconclusive: bool,
}

fn search_n<F>(opts: &SearchOptions, mut fraction_at: F) -> Result<SearchResult>
where
    F: FnMut(u64) -> Result<f64>,
{
    if !(opts.band > 0.0 && opts.target > opts.band && opts.target + opts.band < 1.0) {
        return invalid("target ± band must lie inside (0,1)");
    }
    let n_of = |l: f64| 2f64.powf(l).round() as u64;
    let mut evaluations = Vec::new();
    let mut eval = |l: f64, evaluations: &mut Vec<(u64, f64)>| -> Result<f64> {
        let n = n_of(l);
        let f = fraction_at(n)?;
        evaluations.push((n, f));
        Ok(f)
    };
    let in_band = |f: f64| (f - opts.target).abs() <= opts.band;
    let (mut lo, mut hi) = (opts.min_log2, opts.max_log2);
    let f_hi = eval(hi, &mut evaluations)?;
    if in_band(f_hi) {
        return Ok(found(n_of(hi), f_hi, evaluations, (n_of(lo), n_of(hi))));
    }
    if f_hi < opts.target {
        return Ok(SearchResult {
            n_star: None,
            fraction: None,
            evaluations,
            bracket: (n_of(hi), u64::MAX),
            inconclusive: false,
        });
    }
    for _ in 0..opts.max_steps {
        if n_of(hi) <= n_of(lo) + 1 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f = eval(mid, &mut evaluations)?;
        if in_band(f) {
            return Ok(found(n_of(mid), f, evaluations, (n_of(lo), n_of(hi))));
        }
        if f < opts.target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(SearchResult {
        n_star: None,
        fraction: None,
        evaluations,
        bracket: (n_of(lo), n_of(hi)),
        inconclusive: true,
    })
}

fn found(n: u64, f: f64, evaluations: Vec<(u64, f64)>, bracket: (u64, u64)) -> SearchResult {
    SearchResult {
        n_star: Some(n),
        fraction: Some(f),
        evaluations,
        bracket,
        inconclusive: false,
    }
}

/// Solver settings for Monte Carlo experiments: the default tolerances
/// with a smaller iteration budget. Trials that exhaust it are
/// inconclusive, which the experiments score conservatively.
pub fn experiment_solver() -> SolverOptions {
    SolverOptions {
        max_iters: 20_000,
        ..SolverOptions::default()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DistinguishConfig {
    pub scheme: String,
    pub qubits: usize,
    pub state1: StateFamily,
    pub state2: StateFamily,
    pub kind: &'static str,
    pub delta: f64,
    pub seed: u64,
    #[serde(skip)]
    pub workers: usize,
    pub search: SearchOptions,
    pub solver: SolverOptions,
}

/// Fraction of trials at `n` in which the two regions share no state.
/// Inconclusive overlap solves count as overlapping.
pub fn non_overlap_fraction(
    prepared: &PreparedScheme,
    probs: (&[f64], &[f64]),
    kind: RegionKind,
    n: u64,
    config: &DistinguishConfig,
) -> Result<f64> {
    let hits = run_trials(config.search.trials, config.workers, |t| -> Result<bool> {
        let mut r1 = ChaCha8Rng::seed_from_u64(trial_seed(config.seed, STREAM_FIRST, t as u64));
        let mut r2 = ChaCha8Rng::seed_from_u64(trial_seed(config.seed, STREAM_SECOND, t as u64));
        let a = prepared.region(&sample_multinomial(probs.0, n, &mut r1), config.delta, kind)?;
        let b = prepared.region(&sample_multinomial(probs.1, n, &mut r2), config.delta, kind)?;
        let out = regions_overlap(&a, &b, &config.solver)?;
        Ok(out.status == FeasibilityStatus::EmptyWithinMargin)
    })?;
    let mut count = 0usize;
    for h in hits {
        count += h? as usize;
    }
    Ok(count as f64 / config.search.trials as f64)
}

/// Smallest-order `N` at which the regions of two states stop overlapping
/// in about `target` of the trials.
pub fn distinguish_n(config: &DistinguishConfig) -> Result<SearchResult> {
    let scheme = BuiltinScheme::from_name(&config.scheme, config.qubits)?;
    let prepared = PreparedScheme::new(scheme)?;
    let kind = RegionKind::parse(config.kind)?;
    if kind == RegionKind::R && prepared.constants.is_none() {
        return invalid("region R requested but no reference-region constants are known for this scheme");
    }
    let s1 = config.state1.density()?;
    let s2 = config.state2.density()?;
    if s1.dim() != prepared.dim() || s2.dim() != prepared.dim() {
        return Err(Error::DimensionMismatch {
            expected: prepared.dim(),
            got: if s1.dim() != prepared.dim() { s1.dim() } else { s2.dim() },
        });
    }
    let p1 = outcome_probabilities(&prepared.povm, &s1)?;
    let p2 = outcome_probabilities(&prepared.povm, &s2)?;
    search_n(&config.search, |n| {
        non_overlap_fraction(&prepared, (&p1, &p2), kind, n, config)
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GmeConfig {
    pub qubits: usize,
    pub state: StateFamily,
    pub delta: f64,
    pub seed: u64,
    #[serde(skip)]
    pub workers: usize,
    pub search: SearchOptions,
    pub solver: SolverOptions,
}

/// Rejects states at or below the PPT-mixture threshold of their family.
pub fn check_gme_state(state: &StateFamily) -> Result<()> {
    let StateFamily::Depolarized { base, t } = state else {
        return check_gme_state(&state.clone().depolarized(1.0));
    };
    let threshold = ppt_threshold(base).ok_or_else(|| {
        Error::InvalidArgument("entanglement sample cost needs a GHZ or W state on 3 or 4 qubits".into())
    })?;
    if *t <= threshold {
        return invalid(format!(
            "t = {t} is at or below the PPT-mixture threshold {threshold} for this state; \
             such states cannot be certified"
        ));
    }
    Ok(())
}

/// Fraction of trials in which the kind-B region of the local-SIC scheme
/// contains no PPT mixture.
pub fn gme_fraction(prepared: &PreparedScheme, probs: &[f64], n: u64, config: &GmeConfig) -> Result<f64> {
    let hits = run_trials(config.search.trials, config.workers, |t| -> Result<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(config.seed, STREAM_GME, t as u64));
        let region = prepared.region(&sample_multinomial(probs, n, &mut rng), config.delta, RegionKind::B)?;
        Ok(gme_certify(&region, config.qubits, &config.solver)?.status == FeasibilityStatus::EmptyWithinMargin)
    })?;
    let mut count = 0usize;
    for h in hits {
        count += h? as usize;
    }
    Ok(count as f64 / config.search.trials as f64)
}

pub fn gme_sample_cost(config: &GmeConfig) -> Result<SearchResult> {
    check_gme_state(&config.state)?;
    if config.state.qubits() != config.qubits {
        return invalid("state and scheme qubit counts differ");
    }
    let prepared = PreparedScheme::new(BuiltinScheme::Sic { qubits: config.qubits })?;
    let probs = outcome_probabilities(&prepared.povm, &config.state.density()?)?;
    search_n(&config.search, |n| gme_fraction(&prepared, &probs, n, config))
}

/// CSV of per-trial ratios: `trial,kind,r`.
pub fn ratios_csv(result: &RatiosResult) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["trial", "kind", "r"]).expect("in-memory write");
    for (t, k, r) in &result.rows {
        w.write_record([t.to_string(), k.as_str().to_string(), format!("{r:.17e}")])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}

/// CSV of the quantile summary: `kind,quantile,coverage,max_ratio`.
pub fn summary_csv(result: &RatiosResult) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "quantile", "coverage", "max_ratio"]).expect("in-memory write");
    for s in &result.summary {
        w.write_record([
            s.kind.to_string(),
            format!("{:.17e}", s.quantile),
            format!("{:.17e}", s.coverage),
            format!("{:.17e}", s.max_ratio),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}

/// CSV of a sample-count search: `q,N,fraction,N_star`, one row per
/// evaluation; `N_star` is empty when none was found.
pub fn search_csv(qubits: usize, result: &SearchResult) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["q", "N", "fraction", "N_star"]).expect("in-memory write");
    let star = result.n_star.map(|n| n.to_string()).unwrap_or_default();
    for (n, f) in &result.evaluations {
        w.write_record([qubits.to_string(), n.to_string(), format!("{f:.6}"), star.clone()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}
