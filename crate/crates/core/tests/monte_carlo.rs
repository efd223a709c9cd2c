use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tomoregion::bernstein::tail_bound;
use tomoregion::feasibility::SolverOptions;
use tomoregion::mmap::build_map;
use tomoregion::regions::REGION_ETA;
use tomoregion::schemes::BuiltinScheme;
use tomoregion::sim::*;
use tomoregion::HermOp;

#[test]
fn tail_bound_is_never_violated() {
    let povm = BuiltinScheme::Sic { qubits: 1 }.build().unwrap();
    let map = Arc::new(build_map(&povm));
    let rho = HermOp::diagonal(&[1.0, 0.0]);
    let probs = outcome_probabilities(&povm, &rho).unwrap();
    let n = 500u64;
    let trials = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let dists: Vec<f64> = (0..trials)
        .map(|_| {
            let f = frequencies(&sample_multinomial(&probs, n, &mut rng));
            (&map.estimate_state(&f).unwrap() - &rho).hs_norm()
        })
        .collect();
    for eps in [0.05, 0.1, 0.2] {
        let radius = eps * map.sigma_a();
        let hit = dists.iter().filter(|d| **d >= radius).count() as f64 / trials as f64;
        let bound = tail_bound(n as f64, REGION_ETA, eps);
        assert!(hit <= bound, "ε={eps}: empirical {hit} above bound {bound}");
    }
}

fn ratios(scheme: &str, qubits: usize, state: StateFamily, n: u64, kinds: Vec<&'static str>) -> RatiosResult {
    ratios_test(&RatiosConfig {
        scheme: scheme.into(),
        qubits,
        state,
        n,
        delta: 0.05,
        trials: 300,
        seed: 17,
        workers: 2,
        kinds,
    })
    .unwrap()
}

#[test]
fn every_kind_covers_the_true_state() {
    let cases = [
        ("pauli-bases", 1, StateFamily::Basis { qubits: 1, ones: false }, vec!["A", "B", "R", "G"]),
        ("sic", 2, StateFamily::Ghz { qubits: 2 }, vec!["A", "B"]),
        ("pauli-observables", 2, StateFamily::W { qubits: 2 }.depolarized(0.7), vec!["A", "B", "R"]),
        ("pauli-bases", 3, StateFamily::Haar { qubits: 3, seed: 8 }, vec!["A", "B", "R"]),
    ];
    for (scheme, q, state, kinds) in cases {
        let r = ratios(scheme, q, state, 5_000, kinds);
        for s in &r.summary {
            assert!(s.coverage >= 0.95, "{scheme} q={q}: {s:?}");
            assert!(s.quantile > 0.0 && s.quantile < 1.0, "{scheme} q={q}: {s:?}");
        }
    }
}

#[test]
fn non_overlap_grows_with_samples() {
    let cfg = DistinguishConfig {
        scheme: "pauli-bases".into(),
        qubits: 1,
        state1: StateFamily::Basis { qubits: 1, ones: false }.depolarized(0.5),
        state2: StateFamily::Basis { qubits: 1, ones: true }.depolarized(0.5),
        kind: "B",
        delta: 0.1,
        seed: 4,
        workers: 2,
        search: SearchOptions { trials: 128, ..SearchOptions::default() },
        solver: SolverOptions::default(),
    };
    let prepared = PreparedScheme::new(BuiltinScheme::PauliBases { qubits: 1 }).unwrap();
    let p1 = outcome_probabilities(&prepared.povm, &cfg.state1.density().unwrap()).unwrap();
    let p2 = outcome_probabilities(&prepared.povm, &cfg.state2.density().unwrap()).unwrap();
    let kind = tomoregion::regions::RegionKind::B;
    let ns = [100u64, 200, 400, 800, 1600];
    let fr: Vec<f64> = ns
        .iter()
        .map(|n| non_overlap_fraction(&prepared, (&p1, &p2), kind, *n, &cfg).unwrap())
        .collect();
    // least-squares slope of fraction against log N
    let xs: Vec<f64> = ns.iter().map(|n| (*n as f64).ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = fr.iter().sum::<f64>() / fr.len() as f64;
    let slope: f64 = xs.iter().zip(&fr).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!(slope > 0.0, "{fr:?}");
    assert!(fr[0] < 0.5 && fr[4] > 0.5, "{fr:?}");
}

#[test]
fn identical_states_are_never_told_apart() {
    let s = StateFamily::Haar { qubits: 1, seed: 2 };
    let r = distinguish_n(&DistinguishConfig {
        scheme: "pauli-bases".into(),
        qubits: 1,
        state1: s.clone(),
        state2: s,
        kind: "A",
        delta: 0.1,
        seed: 4,
        workers: 2,
        search: SearchOptions { trials: 64, ..SearchOptions::default() },
        solver: SolverOptions::default(),
    })
    .unwrap();
    assert!(r.n_star.is_none());
    assert!(!r.inconclusive);
}

#[test]
fn noisier_states_cost_more_samples() {
    let run = |t: f64| {
        let start = Instant::now();
        let r = gme_sample_cost(&GmeConfig {
            qubits: 3,
            state: StateFamily::Ghz { qubits: 3 }.depolarized(t),
            delta: 0.1,
            seed: 6,
            workers: 2,
            search: SearchOptions { trials: 32, band: 0.08, ..SearchOptions::default() },
            solver: experiment_solver(),
        })
        .unwrap();
        eprintln!("t={t}: {:?} {:?} in {:.1?}", r.n_star, r.evaluations, start.elapsed());
        r.n_star.expect("finite sample cost")
    };
    assert!(run(0.8) > run(1.0));
}
