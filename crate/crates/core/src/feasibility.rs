//! Convex feasibility over products of Hermitian-operator spaces.
//!
//! Each constraint acts on a subset of blocks. The solver runs Dykstra's
//! method on the replicated product space: every constraint keeps its own
//! copy of the blocks it touches, projects (copy + correction), and the
//! blocks are then set to the mean of their copies. A feasible answer is
//! certified by residuals; an empty answer is a stall of the iterates
//! with a visible gap between the copies, and is reported with that gap.

use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{invalid, Error, Result};
use crate::herm::{unvectorize_slice, vectorize, HermOp};
use crate::json::herm_to_json;
use crate::mmap::MeasurementMap;
use crate::regions::{Region, RegionKind};

/// A closed convex set acting on one or more blocks.
#[derive(Debug, Clone)]
pub enum ConvexSet {
    PsdCone { block: usize },
    TraceOne { block: usize },
    /// PSD and trace one together: the density operators.
    States { block: usize },
    HsBall { block: usize, center: HermOp, radius: f64 },
    MEllipsoid {
        block: usize,
        map: Arc<MeasurementMap>,
        center: HermOp,
        radius: f64,
    },
    SpectralBall { block: usize, center: HermOp, radius: f64 },
    /// `X` with `X^{⊺_mask} ⪰ 0`; `mask` bit `k` selects qubit `k` counted
    /// from the most significant.
    PartialTransposePsd { block: usize, qubits: usize, mask: usize },
    /// `Σ_i ω_i = ρ` together with `tr ρ = 1`.
    AffineSum { rho: usize, parts: Vec<usize> },
}

impl ConvexSet {
    pub fn blocks(&self) -> Vec<usize> {
        match self {
            ConvexSet::PsdCone { block }
            | ConvexSet::TraceOne { block }
            | ConvexSet::States { block }
            | ConvexSet::HsBall { block, .. }
            | ConvexSet::MEllipsoid { block, .. }
            | ConvexSet::SpectralBall { block, .. }
            | ConvexSet::PartialTransposePsd { block, .. } => vec![*block],
            ConvexSet::AffineSum { rho, parts } => {
                let mut b = vec![*rho];
                b.extend(parts);
                b
            }
        }
    }

    /// Affine sets need no Dykstra correction.
    pub fn is_affine(&self) -> bool {
        matches!(self, ConvexSet::TraceOne { .. } | ConvexSet::AffineSum { .. })
    }

    /// Nearest point in HS norm; `point` lists the blocks in the order of
    /// [`ConvexSet::blocks`].
    pub fn project(&self, point: &[HermOp]) -> Vec<HermOp> {
        match self {
            ConvexSet::PsdCone { .. } => vec![point[0].psd_project()],
            ConvexSet::TraceOne { .. } => vec![project_trace_one(&point[0])],
            ConvexSet::States { .. } => vec![project_states(&point[0])],
            ConvexSet::HsBall { center, radius, .. } => {
                vec![project_hs_ball(&point[0], center, *radius)]
            }
            ConvexSet::MEllipsoid {
                map, center, radius, ..
            } => vec![project_m_ellipsoid(&point[0], map, center, *radius).0],
            ConvexSet::SpectralBall { center, radius, .. } => {
                vec![project_spectral_ball(&point[0], center, *radius)]
            }
            ConvexSet::PartialTransposePsd { qubits, mask, .. } => {
                vec![project_pt_psd(&point[0], *qubits, *mask)]
            }
            ConvexSet::AffineSum { .. } => project_affine_sum(point),
        }
    }

    /// HS distance from `point` to the set.
    pub fn residual(&self, point: &[HermOp]) -> f64 {
        let proj = self.project(point);
        point
            .iter()
            .zip(&proj)
            .map(|(a, b)| (a - b).hs_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

pub fn project_trace_one(a: &HermOp) -> HermOp {
    a.shift((1.0 - a.trace()) / a.dim() as f64)
}

pub fn project_hs_ball(a: &HermOp, center: &HermOp, radius: f64) -> HermOp {
    let diff = a - center;
    let n = diff.hs_norm();
    if n <= radius {
        a.clone()
    } else {
        center.add_scaled(&diff, radius / n)
    }
}

/// Clips the eigenvalues of `A − C` to `[−r, r]`.
pub fn project_spectral_ball(a: &HermOp, center: &HermOp, radius: f64) -> HermOp {
    let diff = a - center;
    let eig = diff.eigh();
    if eig.values.iter().all(|v| v.abs() <= radius) {
        return a.clone();
    }
    let clipped: Vec<f64> = eig.values.iter().map(|v| v.clamp(-radius, radius)).collect();
    center + &HermOp::from_spectrum(&clipped, &eig.vectors)
}

pub fn project_pt_psd(a: &HermOp, qubits: usize, mask: usize) -> HermOp {
    a.partial_transpose(qubits, mask)
        .psd_project()
        .partial_transpose(qubits, mask)
}

/// Euclidean projection of `v` onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Nearest density operator: the eigenvalues projected onto the simplex.
pub fn project_states(a: &HermOp) -> HermOp {
    let eig = a.eigh();
    HermOp::from_spectrum(&project_simplex(&eig.values), &eig.vectors)
}

/// Projection onto `{X : ‖M v(X − C)‖₂ ≤ r}`. Returns the point and the
/// residual of the scalar KKT equation `Σ ξ_j w_j² = r²` (zero for interior
/// points).
pub fn project_m_ellipsoid(
    a: &HermOp,
    map: &MeasurementMap,
    center: &HermOp,
    radius: f64,
) -> (HermOp, f64) {
    if radius <= 0.0 {
        return (center.clone(), 0.0);
    }
    let x = map.gram_vectors();
    let xi = map.gram_values();
    let diff = DVector::from_vec(vectorize(&(a - center)).coords);
    let u = x.tr_mul(&diff);
    let r2 = radius * radius;
    let s_of = |mu: f64| -> f64 {
        u.iter()
            .zip(xi)
            .map(|(u, xi)| xi * u * u / (1.0 + mu * xi).powi(2))
            .sum()
    };
    if s_of(0.0) <= r2 {
        return (a.clone(), 0.0);
    }
    // Newton on h(μ) = s(μ)^{-1/2} − 1/r, concave and increasing, so the
    // iterates rise monotonically to the root.
    let mut mu = 0.0;
    for _ in 0..200 {
        let s = s_of(mu);
        if (s - r2).abs() <= 1e-15 * r2 {
            break;
        }
        let ds: f64 = -2.0
            * u.iter()
                .zip(xi)
                .map(|(u, xi)| xi * xi * u * u / (1.0 + mu * xi).powi(3))
                .sum::<f64>();
        let h = s.powf(-0.5) - 1.0 / radius;
        let dh = -0.5 * s.powf(-1.5) * ds;
        let step = h / dh;
        if !step.is_finite() || step.abs() <= 1e-17 * mu.max(1e-300) {
            break;
        }
        mu -= step;
    }
    let w: DVector<f64> = DVector::from_iterator(
        u.len(),
        u.iter().zip(xi).map(|(u, xi)| u / (1.0 + mu * xi)),
    );
    let kkt = (s_of(mu) - r2).abs() / r2;
    let back = x * w;
    (center + &unvectorize_slice(back.as_slice(), map.dim()), kkt)
}

/// Exact projection onto `{Σ_i ω_i = ρ, tr ρ = 1}`; `point = [ρ, ω_1, …, ω_k]`.
fn project_affine_sum(point: &[HermOp]) -> Vec<HermOp> {
    let r = &point[0];
    let parts = &point[1..];
    let k = parts.len() as f64;
    let d = r.dim() as f64;
    let w = parts
        .iter()
        .skip(1)
        .fold(parts[0].clone(), |acc, p| &acc + p);
    let mu = (k * r.trace() + w.trace() - (k + 1.0)) / (k * d);
    let s = r.scale(k).add_scaled(&w, 1.0).scale(1.0 / (k + 1.0)).shift(-k * mu / (k + 1.0));
    let offset = (r - &s).shift(-mu);
    let mut out = vec![s];
    out.extend(parts.iter().map(|p| p + &offset));
    out
}

/// Block layout and constraints of a feasibility problem.
#[derive(Debug, Clone)]
pub struct FeasibilityProblem {
    pub dims: Vec<usize>,
    pub sets: Vec<ConvexSet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibilityStatus {
    Feasible,
    EmptyWithinMargin,
    Inconclusive,
}

impl FeasibilityStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            FeasibilityStatus::Feasible => "feasible",
            FeasibilityStatus::EmptyWithinMargin => "empty_within_margin",
            FeasibilityStatus::Inconclusive => "inconclusive",
        }
    }
}

/// How an outcome was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Dykstra iterations.
    Projections,
    /// A candidate state checked exactly against every constraint.
    Candidate,
    /// A separating hyperplane between two regions.
    Hyperplane,
    /// An exactly verified certificate assembled from the iterates.
    Certificate,
}

#[derive(Debug, Clone)]
pub struct FeasibilityOutcome {
    pub status: FeasibilityStatus,
    pub witness: Option<Vec<HermOp>>,
    pub final_gap: f64,
    pub iterations: usize,
    pub method: SolveMethod,
}

impl FeasibilityOutcome {
    pub fn to_json(&self) -> Value {
        json!({
            "status": self.status.as_str(),
            "iterations": self.iterations,
            "final_gap": self.final_gap,
            "method": self.method,
            "witness": self.witness.as_ref().map(|w| herm_to_json(&w[0])),
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolverOptions {
    pub tol_feas: f64,
    pub tol_stall: f64,
    pub stall_window: usize,
    pub max_iters: usize,
    /// Residuals are evaluated every this many iterations.
    pub check_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_feas: 1e-7,
            tol_stall: 1e-9,
            stall_window: 200,
            max_iters: 200_000,
            check_every: 10,
        }
    }
}

fn sq_dist(a: &HermOp, b: &HermOp) -> f64 {
    (a - b).hs_norm().powi(2)
}

pub fn solve_feasibility(
    problem: &FeasibilityProblem,
    start: Vec<HermOp>,
    opts: &SolverOptions,
) -> Result<FeasibilityOutcome> {
    solve_with_hook(problem, start, opts, &mut |_| None)
}

/// Snapshot of the iteration handed to certificate hooks.
pub(crate) struct Iterate<'a> {
    pub x: &'a [HermOp],
    /// Dykstra corrections per set and block (zero for affine sets).
    pub corrections: &'a [Vec<HermOp>],
    /// Latest projections per set and block.
    pub copies: &'a [Vec<HermOp>],
}

/// How often, in iterations, hooks are offered the current iterate.
const HOOK_EVERY: usize = 50;

/// Dykstra iterations; every [`HOOK_EVERY`] iterations `hook` may settle
/// the problem with an exactly checked certificate.
pub(crate) fn solve_with_hook(
    problem: &FeasibilityProblem,
    start: Vec<HermOp>,
    opts: &SolverOptions,
    hook: &mut dyn FnMut(&Iterate) -> Option<FeasibilityOutcome>,
) -> Result<FeasibilityOutcome> {
    if problem.sets.is_empty() {
        return invalid("feasibility problem needs at least one set");
    }
    if start.len() != problem.dims.len() {
        return Err(Error::DimensionMismatch {
            expected: problem.dims.len(),
            got: start.len(),
        });
    }
    for (s, d) in start.iter().zip(&problem.dims) {
        if s.dim() != *d {
            return Err(Error::DimensionMismatch {
                expected: *d,
                got: s.dim(),
            });
        }
    }
    let set_blocks: Vec<Vec<usize>> = problem.sets.iter().map(ConvexSet::blocks).collect();
    for b in set_blocks.iter().flatten() {
        if *b >= problem.dims.len() {
            return invalid(format!("set refers to missing block {b}"));
        }
    }
    let mut touch = vec![0usize; problem.dims.len()];
    for b in set_blocks.iter().flatten() {
        touch[*b] += 1;
    }

    let mut x = start;
    let mut corrections: Vec<Vec<HermOp>> = set_blocks
        .iter()
        .map(|bs| bs.iter().map(|&b| HermOp::zeros(problem.dims[b])).collect())
        .collect();
    let mut copies: Vec<Vec<HermOp>> = Vec::new();
    let mut calm = 0usize;

    for it in 1..=opts.max_iters {
        copies.clear();
        for (i, set) in problem.sets.iter().enumerate() {
            let z: Vec<HermOp> = set_blocks[i]
                .iter()
                .zip(&corrections[i])
                .map(|(&b, p)| &x[b] + p)
                .collect();
            let y = set.project(&z);
            if !set.is_affine() {
                for ((p, zj), yj) in corrections[i].iter_mut().zip(&z).zip(&y) {
                    *p = zj - yj;
                }
            }
            copies.push(y);
        }
        let mut next: Vec<HermOp> = problem.dims.iter().map(|&d| HermOp::zeros(d)).collect();
        for (i, bs) in set_blocks.iter().enumerate() {
            for (j, &b) in bs.iter().enumerate() {
                next[b] = next[b].add_scaled(&copies[i][j], 1.0 / touch[b] as f64);
            }
        }
        for (b, n) in next.iter_mut().enumerate() {
            if touch[b] == 0 {
                *n = x[b].clone();
            }
        }
        let movement: f64 = x.iter().zip(&next).map(|(a, b)| sq_dist(a, b)).sum::<f64>().sqrt();
        x = next;

        if it == 1 || it % opts.check_every == 0 {
            let worst = problem
                .sets
                .iter()
                .zip(&set_blocks)
                .map(|(s, bs)| {
                    let pt: Vec<HermOp> = bs.iter().map(|&b| x[b].clone()).collect();
                    s.residual(&pt)
                })
                .fold(0.0, f64::max);
            if worst < opts.tol_feas {
                return Ok(FeasibilityOutcome {
                    status: FeasibilityStatus::Feasible,
                    witness: Some(x),
                    final_gap: worst,
                    iterations: it,
                    method: SolveMethod::Projections,
                });
            }
        }

        if it % HOOK_EVERY == 0 {
            let snapshot = Iterate {
                x: &x,
                corrections: &corrections,
                copies: &copies,
            };
            if let Some(mut out) = hook(&snapshot) {
                out.iterations = it;
                return Ok(out);
            }
        }

        calm = if movement < opts.tol_stall { calm + 1 } else { 0 };
        if calm >= opts.stall_window {
            let gap = copy_gap(&copies, &set_blocks, problem.dims.len());
            if gap > 10.0 * opts.tol_feas {
                return Ok(FeasibilityOutcome {
                    status: FeasibilityStatus::EmptyWithinMargin,
                    witness: None,
                    final_gap: gap,
                    iterations: it,
                    method: SolveMethod::Projections,
                });
            }
            calm = 0;
        }
    }
    let gap = copy_gap(&copies, &set_blocks, problem.dims.len());
    Ok(FeasibilityOutcome {
        status: FeasibilityStatus::Inconclusive,
        witness: None,
        final_gap: gap,
        iterations: opts.max_iters,
        method: SolveMethod::Projections,
    })
}

/// Largest HS distance between two copies of the same block.
fn copy_gap(copies: &[Vec<HermOp>], set_blocks: &[Vec<usize>], n_blocks: usize) -> f64 {
    let mut per_block: Vec<Vec<&HermOp>> = vec![Vec::new(); n_blocks];
    for (i, bs) in set_blocks.iter().enumerate() {
        for (j, &b) in bs.iter().enumerate() {
            per_block[b].push(&copies[i][j]);
        }
    }
    let mut gap: f64 = 0.0;
    for group in per_block {
        for (i, a) in group.iter().enumerate() {
            for b in &group[i + 1..] {
                gap = gap.max((*a - *b).hs_norm());
            }
        }
    }
    gap
}

/// The constraint a region places on block `block`.
pub fn region_set(region: &Region, block: usize) -> ConvexSet {
    match region.kind {
        RegionKind::A => ConvexSet::HsBall {
            block,
            center: region.center.clone(),
            radius: region.radius(),
        },
        RegionKind::B | RegionKind::G => ConvexSet::MEllipsoid {
            block,
            map: region.map.clone().expect("ellipsoidal region carries its map"),
            center: region.center.clone(),
            radius: region.radius(),
        },
        RegionKind::R => ConvexSet::SpectralBall {
            block,
            center: region.center.clone(),
            radius: region.radius(),
        },
    }
}

/// `max_{ρ ∈ region} tr(Wρ)`, ignoring positivity and trace.
fn support(region: &Region, w: &HermOp) -> f64 {
    let base = w.inner(&region.center);
    let r = region.radius();
    match region.kind {
        RegionKind::A => base + r * w.hs_norm(),
        RegionKind::R => base + r * w.norms().trace,
        RegionKind::B | RegionKind::G => {
            let map = region.map.as_ref().expect("ellipsoidal region carries its map");
            let wv = DVector::from_vec(vectorize(w).coords);
            let c = map.gram_vectors().tr_mul(&wv);
            let q: f64 = c.iter().zip(map.gram_values()).map(|(c, xi)| c * c / xi).sum();
            base + r * q.sqrt()
        }
    }
}

/// Relative margin applied to the exact shortcut tests so that rounding
/// cannot flip an answer.
const SHORTCUT_MARGIN: f64 = 1e-9;

/// Whether two regions contain a common density operator. Exact shortcuts
/// are tried first: a separating hyperplane through the traceless part of
/// the center difference, and candidate states that lie in both regions.
/// Otherwise Dykstra decides.
pub fn regions_overlap(a: &Region, b: &Region, opts: &SolverOptions) -> Result<FeasibilityOutcome> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let d = a.dim();
    let diff = &b.center - &a.center;
    let w = diff.shift(-diff.trace() / d as f64);
    let scale = w.hs_norm();
    if scale > 0.0 {
        // every ρ in A has tr(Wρ) ≤ h_A(W); every ρ in B has tr(Wρ) ≥ −h_B(−W)
        let upper_a = support(a, &w);
        let lower_b = -support(b, &w.scale(-1.0));
        if upper_a < lower_b - SHORTCUT_MARGIN * scale {
            return Ok(FeasibilityOutcome {
                status: FeasibilityStatus::EmptyWithinMargin,
                witness: None,
                final_gap: (lower_b - upper_a) / scale,
                iterations: 0,
                method: SolveMethod::Hyperplane,
            });
        }
    }
    let fits = |rho: &HermOp, r: &Region| r.norm_of(&(rho - &r.center)) <= r.radius() * (1.0 - SHORTCUT_MARGIN);
    let candidates = [
        project_states(&a.center.scale(0.5).add_scaled(&b.center, 0.5)),
        project_states(&a.center),
        project_states(&b.center),
    ];
    for c in candidates {
        if fits(&c, a) && fits(&c, b) {
            return Ok(FeasibilityOutcome {
                status: FeasibilityStatus::Feasible,
                witness: Some(vec![c]),
                final_gap: 0.0,
                iterations: 0,
                method: SolveMethod::Candidate,
            });
        }
    }
    let problem = FeasibilityProblem {
        dims: vec![d],
        sets: vec![ConvexSet::States { block: 0 }, region_set(a, 0), region_set(b, 0)],
    };
    let start = a.center.scale(0.5).add_scaled(&b.center, 0.5);
    solve_feasibility(&problem, vec![start], opts)
}

/// Desk-scale limits for the PPT-mixture program.
pub const GME_MIN_QUBITS: usize = 3;
pub const GME_MAX_QUBITS: usize = 4;

/// Partial-transpose masks of the `2^{q−1} − 1` bipartitions: non-empty
/// subsets of qubits `1..q` (qubit 0 is always on the other side).
pub fn bipartition_masks(qubits: usize) -> Vec<usize> {
    (1..(1usize << (qubits - 1))).collect()
}

/// The PPT-mixture program: is there `ρ` in the region with
/// `ρ = Σ_i ω_i`, `ω_i ⪰ 0`, `ω_i^{⊺_i} ⪰ 0`, `tr ρ = 1`? An empty answer
/// certifies genuine multipartite entanglement for every state in the region.
pub fn gme_certify(region: &Region, qubits: usize, opts: &SolverOptions) -> Result<FeasibilityOutcome> {
    if !(GME_MIN_QUBITS..=GME_MAX_QUBITS).contains(&qubits) {
        return Err(Error::Cap {
            what: "qubits for entanglement certification",
            value: qubits,
            cap: GME_MAX_QUBITS,
        });
    }
    let d = 1usize << qubits;
    if region.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: region.dim(),
        });
    }
    let masks = bipartition_masks(qubits);
    let k = masks.len();
    let mut sets = vec![
        region_set(region, 0),
        ConvexSet::AffineSum {
            rho: 0,
            parts: (1..=k).collect(),
        },
    ];
    for (i, &mask) in masks.iter().enumerate() {
        sets.push(ConvexSet::PsdCone { block: i + 1 });
        sets.push(ConvexSet::PartialTransposePsd {
            block: i + 1,
            qubits,
            mask,
        });
    }
    let problem = FeasibilityProblem {
        dims: vec![d; k + 1],
        sets,
    };
    let rho0 = project_states(&region.center);
    let mut start = vec![rho0.clone()];
    start.extend((0..k).map(|_| rho0.scale(1.0 / k as f64)));
    solve_with_hook(&problem, start, opts, &mut |snap| {
        ppt_mixture_member(region, qubits, &masks, snap.x)
            .or_else(|| ppt_witness(region, qubits, &masks, snap))
    })
}

/// Feasibility certificate: shifts each `ω_i` by the smallest multiple of
/// the identity making it PSD and PT-PSD, renormalizes, and accepts if the
/// resulting PPT mixture lies in the region.
fn ppt_mixture_member(region: &Region, qubits: usize, masks: &[usize], x: &[HermOp]) -> Option<FeasibilityOutcome> {
    let d = region.dim();
    let parts: Vec<HermOp> = x[1..]
        .iter()
        .zip(masks)
        .map(|(w, &mask)| {
            let low = w.min_eigenvalue().min(w.partial_transpose(qubits, mask).min_eigenvalue());
            w.shift((-low).max(0.0))
        })
        .collect();
    let mut rho = HermOp::zeros(d);
    for p in &parts {
        rho = &rho + p;
    }
    let tr = rho.trace();
    if tr <= 0.0 {
        return None;
    }
    let rho = rho.scale(1.0 / tr);
    if region.norm_of(&(&rho - &region.center)) > region.radius() * (1.0 - SHORTCUT_MARGIN) {
        return None;
    }
    let mut witness = vec![rho];
    witness.extend(parts.iter().map(|p| p.scale(1.0 / tr)));
    Some(FeasibilityOutcome {
        status: FeasibilityStatus::Feasible,
        witness: Some(witness),
        final_gap: 0.0,
        iterations: 0,
        method: SolveMethod::Certificate,
    })
}

/// `max_α λ_min(W − α Cᵀ)` over `α ≥ 0` by golden-section search; the
/// objective is concave in `α`.
fn best_decomposition(w: &HermOp, c_t: &HermOp) -> f64 {
    let f = |a: f64| w.add_scaled(c_t, -a).min_eigenvalue();
    let scale = c_t.hs_norm();
    if scale == 0.0 {
        return f(0.0);
    }
    let (mut lo, mut hi) = (0.0, 4.0 * w.hs_norm() / scale);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..40 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        }
    }
    f(0.0).max(fa).max(fb)
}

/// Emptiness certificate: a witness `W' = W + λ𝟙` with
/// `W' = P_i + Q_iᵀⁱ`, `P_i, Q_i ⪰ 0` for every bipartition, so that
/// `tr(W'σ) ≥ 0` on every PPT mixture, while `tr(W'ρ) < 0` on the whole
/// region. The direction `W` and the `Q_i` are read off the Dykstra
/// corrections; the decomposition and the sign are then checked exactly.
fn ppt_witness(region: &Region, qubits: usize, masks: &[usize], snap: &Iterate) -> Option<FeasibilityOutcome> {
    let d = region.dim() as f64;
    let candidates = [
        snap.corrections[0][0].clone(),
        &snap.copies[1][0] - &snap.copies[0][0],
    ];
    let mut best: Option<f64> = None;
    for w in candidates {
        let norm = w.hs_norm();
        if norm == 0.0 {
            continue;
        }
        let w = w.scale(1.0 / norm);
        let w0 = w.shift(-w.trace() / d);
        let w0_norm = w0.hs_norm();
        if w0_norm == 0.0 {
            continue;
        }
        // λ = max_i (−λ_min(P_i)) makes every P_i + λ𝟙 positive
        let mut lambda = f64::NEG_INFINITY;
        for (i, &mask) in masks.iter().enumerate() {
            let pt = &snap.corrections[3 + 2 * i][0];
            let q = pt.partial_transpose(qubits, mask).scale(-1.0).psd_project();
            let q_t = q.partial_transpose(qubits, mask);
            lambda = lambda.max(-best_decomposition(&w, &q_t));
        }
        // sup over trace-one points of the region of tr(W'ρ)
        let value = support(region, &w0) + w.trace() / d + lambda;
        if value < -SHORTCUT_MARGIN {
            let margin = -value / w0_norm;
            best = Some(best.map_or(margin, |b: f64| b.max(margin)));
        }
    }
    best.map(|margin| FeasibilityOutcome {
        status: FeasibilityStatus::EmptyWithinMargin,
        witness: None,
        final_gap: margin,
        iterations: 0,
        method: SolveMethod::Certificate,
    })
}
