//! The measurement map `M: ρ ↦ (tr E_a ρ)_a`, its pseudoinverse, the
//! linear-inversion estimator, and the analysis of alternative left-inverses.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::herm::{pauli_string, unvectorize_slice, vectorize, vectorize_into, HermOp};
use crate::schemes::{base4_digits, Povm};

/// Singular values below this fraction of the largest are treated as zero.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-10;

/// Real matrix of a measurement (row `a` is `v(E_a)`) with cached
/// pseudoinverse and spectral decomposition of `MᵀM`.
#[derive(Debug, Clone)]
pub struct MeasurementMap {
    dim: usize,
    mat: DMatrix<f64>,
    pinv: DMatrix<f64>,
    rank: usize,
    gram_values: Vec<f64>,
    gram_vectors: DMatrix<f64>,
    sigma_a: f64,
    sigma_b: f64,
}

impl MeasurementMap {
    /// Assembles `M` from the effects. Incomplete measurements are returned
    /// flagged rather than rejected; see [`MeasurementMap::require_complete`].
    pub fn new(povm: &Povm) -> MeasurementMap {
        let d = povm.dim();
        let d2 = d * d;
        let n = povm.len();
        let mut mat = DMatrix::zeros(n, d2);
        let mut row = vec![0.0; d2];
        for (a, e) in povm.effects().iter().enumerate() {
            vectorize_into(e, &mut row);
            for (k, x) in row.iter().enumerate() {
                mat[(a, k)] = *x;
            }
        }
        Self::from_matrix(d, mat)
    }

    pub(crate) fn from_matrix(dim: usize, mat: DMatrix<f64>) -> MeasurementMap {
        let svd = mat.clone().svd(true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let cutoff = PINV_RELATIVE_CUTOFF * smax;
        let rank = svd.singular_values.iter().filter(|s| **s > cutoff).count();
        let pinv = svd
            .pseudo_inverse(cutoff.max(f64::MIN_POSITIVE))
            .expect("SVD computed with both factors");
        let gram = mat.transpose() * &mat;
        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let gram_values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let gram_vectors = DMatrix::from_fn(order.len(), order.len(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        let sigma_a = col_norm_max(&pinv);
        let sigma_b = col_norm_max(&(&mat * &pinv));
        MeasurementMap {
            dim,
            mat,
            pinv,
            rank,
            gram_values,
            gram_vectors,
            sigma_a,
            sigma_b,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_out(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn pinv(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_complete(&self) -> bool {
        self.rank == self.dim * self.dim
    }

    pub fn require_complete(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::Incomplete {
                rank: self.rank,
                required: self.dim * self.dim,
            })
        }
    }

    /// Eigenvalues `ξ_j` of `MᵀM`, ascending.
    pub fn gram_values(&self) -> &[f64] {
        &self.gram_values
    }

    /// Orthonormal eigenvectors `x_j` of `MᵀM` as columns.
    pub fn gram_vectors(&self) -> &DMatrix<f64> {
        &self.gram_vectors
    }

    /// `Ξ_j = v⁻¹(x_j)`.
    pub fn gram_direction(&self, j: usize) -> HermOp {
        let col: Vec<f64> = self.gram_vectors.column(j).iter().cloned().collect();
        unvectorize_slice(&col, self.dim)
    }

    /// Largest column norm of `M⁺`.
    pub fn sigma_a(&self) -> f64 {
        self.sigma_a
    }

    /// Largest column norm of `MM⁺`.
    pub fn sigma_b(&self) -> f64 {
        self.sigma_b
    }

    /// `M v(A)`.
    pub fn apply(&self, a: &HermOp) -> DVector<f64> {
        &self.mat * DVector::from_vec(vectorize(a).coords)
    }

    /// `‖A‖_M = ‖M v(A)‖₂`.
    pub fn m_norm(&self, a: &HermOp) -> f64 {
        self.apply(a).norm()
    }

    /// Linear-inversion estimate `ρ̂ = v⁻¹(M⁺ f)`. Not clipped to PSD.
    pub fn estimate_state(&self, freqs: &[f64]) -> Result<HermOp> {
        self.check_freqs(freqs)?;
        Ok(self.estimate_unchecked(freqs))
    }

    pub(crate) fn estimate_unchecked(&self, freqs: &[f64]) -> HermOp {
        let v = &self.pinv * DVector::from_column_slice(freqs);
        unvectorize_slice(v.as_slice(), self.dim)
    }

    fn check_freqs(&self, freqs: &[f64]) -> Result<()> {
        if freqs.len() != self.n_out() {
            return Err(Error::DimensionMismatch {
                expected: self.n_out(),
                got: freqs.len(),
            });
        }
        if let Some(f) = freqs.iter().find(|f| !(**f >= 0.0)) {
            return Err(Error::Frequencies(format!("negative or NaN entry {f}")));
        }
        let total: f64 = freqs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Frequencies(format!("entries sum to {total}, not 1")));
        }
        Ok(())
    }

    /// Orthonormal rows spanning `ker Mᵀ`, i.e. the complement of the range.
    pub fn kernel_basis(&self) -> DMatrix<f64> {
        let n = self.n_out();
        let svd = self.mat.clone().svd(true, false);
        let u = svd.u.expect("requested U");
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > PINV_RELATIVE_CUTOFF * smax)
            .collect();
        let mut proj = DMatrix::<f64>::identity(n, n);
        for &i in &keep {
            let c = u.column(i);
            proj -= c * c.transpose();
        }
        let eig = SymmetricEigen::new(proj);
        let rows: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
        DMatrix::from_fn(rows.len(), n, |r, c| eig.eigenvectors[(c, rows[r])])
    }
}

/// Builds the measurement map of a POVM.
pub fn build_map(povm: &Povm) -> MeasurementMap {
    MeasurementMap::new(povm)
}

/// Euclidean norm of every column.
pub fn col_norms(mat: &DMatrix<f64>) -> Vec<f64> {
    mat.column_iter().map(|c| c.norm()).collect()
}

/// `‖G‖_{2,∞}`: the largest Euclidean norm among the columns.
pub fn col_norm_max(mat: &DMatrix<f64>) -> f64 {
    col_norms(mat).into_iter().fold(0.0, f64::max)
}

/// Closed forms for the Pauli-bases measurement on `q` qubits, in the outcome
/// order of [`crate::schemes::build_pauli_bases`].
#[derive(Debug, Clone)]
pub struct PauliClosedForms {
    /// `(M⁺ᵀσ_μ)_{a⃗,s⃗} = Π_k(δ_{μ_k,0} + 3a_kδ_{μ_k,s_k})`, rows indexed by `μ⃗`.
    pub pauli_coefficients: DMatrix<f64>,
    /// `M⁺` with column `(a⃗,s⃗)` equal to `v(⊗_k(3Π_{a_k|s_k} − 𝟙))`.
    pub pinv_entries: DMatrix<f64>,
    /// Distinct eigenvalues `3^{χ−2q}` of `MᵀM` with multiplicities
    /// `C(q,χ)·3^{q−χ}`, ascending.
    pub gram_eigs: Vec<(f64, usize)>,
    /// `(M⁺ᵀM⁺)_{(a⃗,s⃗),(b⃗,t⃗)} = 2^{−q}Π_k(1 + 9a_kb_kδ_{s_k,t_k})`.
    pub pinv_gram: DMatrix<f64>,
}

/// Maximum qubit count for which the dense closed forms are produced.
pub const MAX_CLOSED_FORM_QUBITS: usize = 3;

fn pauli_outcomes(q: usize) -> Vec<(Vec<usize>, Vec<f64>)> {
    let n_set = 3usize.pow(q as u32);
    let mut out = Vec::with_capacity(n_set << q);
    for s in 0..n_set {
        let settings: Vec<usize> = (0..q)
            .map(|k| (s / 3usize.pow((q - 1 - k) as u32)) % 3 + 1)
            .collect();
        for a in 0..(1usize << q) {
            let signs: Vec<f64> = (0..q)
                .map(|k| if a >> (q - 1 - k) & 1 == 0 { 1.0 } else { -1.0 })
                .collect();
            out.push((settings.clone(), signs));
        }
    }
    out
}

pub fn pauli_closed_forms(q: usize) -> Result<PauliClosedForms> {
    if q == 0 || q > MAX_CLOSED_FORM_QUBITS {
        return Err(Error::Cap {
            what: "qubits for Pauli closed forms",
            value: q,
            cap: MAX_CLOSED_FORM_QUBITS,
        });
    }
    let outcomes = pauli_outcomes(q);
    let n = outcomes.len();
    let n_mu = 4usize.pow(q as u32);
    let d = 1usize << q;

    let pauli_coefficients = DMatrix::from_fn(n_mu, n, |mu, j| {
        let (s, a) = &outcomes[j];
        base4_digits(mu, q)
            .iter()
            .enumerate()
            .map(|(k, &m)| {
                let zero = if m == 0 { 1.0 } else { 0.0 };
                let hit = if m == s[k] { 3.0 * a[k] } else { 0.0 };
                zero + hit
            })
            .product()
    });

    let mut pinv_entries = DMatrix::zeros(d * d, n);
    for (j, (s, a)) in outcomes.iter().enumerate() {
        let z = s.iter().zip(a).fold(HermOp::identity(1), |acc, (&sk, &ak)| {
            // 3Π_{a|s} − 𝟙 = (𝟙 + 3a σ_s)/2
            let local = HermOp::identity(2)
                .scale(0.5)
                .add_scaled(&pauli_string(&[sk]), 1.5 * ak);
            acc.kron(&local)
        });
        pinv_entries
            .column_mut(j)
            .copy_from_slice(&vectorize(&z).coords);
    }

    let gram_eigs = (0..=q)
        .map(|chi| {
            let value = 3f64.powi(chi as i32 - 2 * q as i32);
            (value, binomial(q, chi) * 3usize.pow((q - chi) as u32))
        })
        .collect();

    let pinv_gram = DMatrix::from_fn(n, n, |i, j| {
        let (s, a) = &outcomes[i];
        let (t, b) = &outcomes[j];
        let prod: f64 = (0..q)
            .map(|k| 1.0 + if s[k] == t[k] { 9.0 * a[k] * b[k] } else { 0.0 })
            .product();
        prod / d as f64
    });

    Ok(PauliClosedForms {
        pauli_coefficients,
        pinv_entries,
        gram_eigs,
        pinv_gram,
    })
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Which region's `σ` a left-inverse is judged by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeftInverseMode {
    /// Column norms of the left-inverse itself.
    A,
    /// Column norms of `M` times the left-inverse.
    B,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeftInverseBounds {
    pub lower: f64,
    pub upper: f64,
    pub pinv_is_optimal: bool,
}

fn mode_target(map: &MeasurementMap, mode: LeftInverseMode) -> DMatrix<f64> {
    match mode {
        LeftInverseMode::A => map.pinv.clone(),
        LeftInverseMode::B => &map.mat * &map.pinv,
    }
}

/// Primal/dual bounds on the smallest `σ` achievable by any left-inverse:
/// `‖Q‖²_{2,2}/‖Q‖_{2,1} ≤ σ̂ ≤ ‖Q‖_{2,∞}` with `Q = M⁺` or `MM⁺`.
pub fn left_inverse_bounds(map: &MeasurementMap, mode: LeftInverseMode) -> Result<LeftInverseBounds> {
    map.require_complete()?;
    let norms = col_norms(&mode_target(map, mode));
    let upper = norms.iter().cloned().fold(0.0, f64::max);
    let min = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    let sum: f64 = norms.iter().sum();
    let sum_sq: f64 = norms.iter().map(|x| x * x).sum();
    Ok(LeftInverseBounds {
        lower: sum_sq / sum,
        upper,
        pinv_is_optimal: upper - min <= 1e-9 * upper.max(1.0),
    })
}

/// A left-inverse `M⁺ + XK` with `K` spanning `ker Mᵀ`.
#[derive(Debug, Clone)]
pub struct LeftInverse {
    pub mode: LeftInverseMode,
    pub pinv: DMatrix<f64>,
    pub correction: DMatrix<f64>,
    pub kernel: DMatrix<f64>,
    pub objective: f64,
    pub pinv_objective: f64,
    /// Whether any iterate improved on the pseudoinverse.
    pub descended: bool,
    pub iterations: usize,
}

impl LeftInverse {
    pub fn matrix(&self) -> DMatrix<f64> {
        &self.pinv + &self.correction * &self.kernel
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SubgradientOptions {
    pub iters: usize,
    /// Step `c/√k` with `c = step_scale · σ(M⁺) / ‖T‖`.
    pub step_scale: f64,
}

impl Default for SubgradientOptions {
    fn default() -> Self {
        Self {
            iters: 2000,
            step_scale: 0.1,
        }
    }
}

/// Minimizes `‖Q + T X K‖_{2,∞}` over `X` by subgradient descent with
/// diminishing steps, keeping the best iterate. `T = 𝟙` for mode A and
/// `T = M` for mode B.
pub fn optimize_left_inverse(
    map: &MeasurementMap,
    mode: LeftInverseMode,
    opts: SubgradientOptions,
) -> Result<LeftInverse> {
    map.require_complete()?;
    let base = mode_target(map, mode);
    let kernel = map.kernel_basis();
    let d2 = map.dim * map.dim;
    let k = kernel.nrows();
    let pinv_objective = col_norm_max(&base);
    let mut best = LeftInverse {
        mode,
        pinv: map.pinv.clone(),
        correction: DMatrix::zeros(d2, k),
        kernel: kernel.clone(),
        objective: pinv_objective,
        pinv_objective,
        descended: false,
        iterations: 0,
    };
    if k == 0 {
        return Ok(best);
    }
    let t_norm = match mode {
        LeftInverseMode::A => 1.0,
        LeftInverseMode::B => map.gram_values.last().copied().unwrap_or(1.0).sqrt(),
    };
    let c = opts.step_scale * pinv_objective / t_norm;
    let mut x = DMatrix::<f64>::zeros(d2, k);
    for it in 0..opts.iters {
        let xk = &x * &kernel;
        let current = match mode {
            LeftInverseMode::A => &base + &xk,
            LeftInverseMode::B => &base + &map.mat * &xk,
        };
        let norms = col_norms(&current);
        let (j, obj) = norms
            .iter()
            .cloned()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        if obj < best.objective {
            best.objective = obj;
            best.correction = x.clone();
            best.descended = obj < pinv_objective - 1e-12;
        }
        best.iterations = it + 1;
        let u = current.column(j) / obj;
        let lifted = match mode {
            LeftInverseMode::A => u.into_owned(),
            LeftInverseMode::B => map.mat.transpose() * u,
        };
        let grad = &lifted * kernel.column(j).transpose();
        let gnorm = grad.norm();
        if gnorm < 1e-300 {
            break;
        }
        x -= grad * (c / ((it + 1) as f64).sqrt() / gnorm);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::herm::testutil::random_herm;
    use crate::schemes::{
        build_pauli_bases, build_pauli_observables, build_qubit_sic, merge_settings,
        tensor_local_scheme, Setting,
    };
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut ChaCha8Rng, d: usize) -> HermOp {
        let a = random_herm(rng, d);
        let p = HermOp::new(a.matrix() * a.matrix()).unwrap();
        p.scale(1.0 / p.trace())
    }

    fn sorted_close(values: &[f64], expected: &[f64], tol: f64) {
        assert_eq!(values.len(), expected.len());
        for (a, b) in values.iter().zip(expected) {
            assert!((a - b).abs() < tol, "{a} vs {b}");
        }
    }

    #[test]
    fn pauli_bases_gram_spectrum() {
        let map = build_map(&build_pauli_bases(1).unwrap());
        assert_eq!(map.rank(), 4);
        sorted_close(map.gram_values(), &[1.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0, 1.0 / 3.0], 1e-12);
        for q in 1..=3 {
            let map = build_map(&build_pauli_bases(q).unwrap());
            let mut expected = Vec::new();
            for (v, m) in pauli_closed_forms(q).unwrap().gram_eigs {
                expected.extend(std::iter::repeat_n(v, m));
            }
            sorted_close(map.gram_values(), &expected, 1e-10);
        }
    }

    #[test]
    fn sic_gram_spectrum() {
        let map = build_map(&build_qubit_sic());
        sorted_close(map.gram_values(), &[1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.5], 1e-12);
    }

    #[test]
    fn incomplete_map_is_flagged() {
        let half = HermOp::identity(2).scale(0.5);
        let x = Setting {
            label: "X".into(),
            weight: 1.0,
            effects: vec![
                half.add_scaled(&crate::herm::pauli(1), 0.5),
                half.add_scaled(&crate::herm::pauli(1), -0.5),
            ],
            outcome_labels: vec!["+".into(), "-".into()],
        };
        let map = build_map(&merge_settings(std::slice::from_ref(&x)).unwrap());
        assert!(!map.is_complete());
        assert_eq!(map.rank(), 2);
        let err = map.require_complete().unwrap_err();
        assert!(err.to_string().contains("not tomographically complete"));

        let z = Setting {
            label: "Z".into(),
            weight: 0.5,
            effects: vec![
                half.add_scaled(&crate::herm::pauli(3), 0.5),
                half.add_scaled(&crate::herm::pauli(3), -0.5),
            ],
            outcome_labels: vec!["+".into(), "-".into()],
        };
        let xz = build_map(&merge_settings(&[Setting { weight: 0.5, ..x }, z]).unwrap());
        assert!(matches!(
            left_inverse_bounds(&xz, LeftInverseMode::A),
            Err(Error::Incomplete { rank: 3, required: 4 })
        ));
    }

    #[test]
    fn map_invariants_for_builtin_schemes() {
        let povms = [
            build_pauli_bases(1).unwrap(),
            build_pauli_bases(2).unwrap(),
            build_pauli_observables(2).unwrap(),
            build_qubit_sic(),
            tensor_local_scheme(&build_qubit_sic(), 2).unwrap(),
        ];
        for p in &povms {
            let map = build_map(p);
            let d2 = map.dim() * map.dim();
            let left = map.pinv() * map.matrix();
            assert!((left - DMatrix::<f64>::identity(d2, d2)).amax() < 1e-9);
            let proj = map.matrix() * map.pinv();
            assert!((&proj - proj.transpose()).amax() < 1e-9);
            assert!((&proj * &proj - &proj).amax() < 1e-9);
            assert!(map.gram_values()[0] > 0.0);
        }
    }

    #[test]
    fn estimator_inverts_exact_probabilities() {
        let povm = build_pauli_bases(2).unwrap();
        let map = build_map(&povm);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_state(&mut rng, 4);
        let est = map.estimate_state(&povm.probabilities(&rho)).unwrap();
        assert!(est.max_abs_diff(&rho) < 1e-10);
        assert_abs_diff_eq!(est.trace(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn pauli_observable_estimator_closed_form() {
        let povm = build_pauli_observables(1).unwrap();
        let map = build_map(&povm);
        let zero = HermOp::diagonal(&[1.0, 0.0]);
        let f = povm.probabilities(&zero);
        let est = map.estimate_state(&f).unwrap();
        // 𝟙/d + ((d²−1)/d) Σ_s (f₊ − f₋) σ_s
        let mut closed = HermOp::identity(2).scale(0.5);
        for s in 0..3 {
            closed = closed.add_scaled(&crate::herm::pauli(s + 1), 1.5 * (f[2 * s] - f[2 * s + 1]));
        }
        assert!(est.max_abs_diff(&closed) < 1e-12);
        assert!(est.max_abs_diff(&zero) < 1e-12);
    }

    #[test]
    fn symmetric_estimator_closed_form() {
        let sic = build_qubit_sic();
        let map = build_map(&sic);
        let sym = *sic.symmetric().unwrap();
        let (d, r) = (sym.local_dim as f64, sym.rank as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = random_state(&mut rng, 2);
        let f = sic.probabilities(&rho);
        let mut closed = HermOp::identity(2).scale(-(d * r - 1.0) / (d - r));
        for (fa, e) in f.iter().zip(sic.effects()) {
            let proj = e.scale(1.0 / sym.theta());
            closed = closed.add_scaled(&proj, (d * d - 1.0) / (d - r) * fa);
        }
        assert!(map.estimate_state(&f).unwrap().max_abs_diff(&closed) < 1e-10);
    }

    #[test]
    fn estimator_is_linear_and_checks_input() {
        let povm = build_qubit_sic();
        let map = build_map(&povm);
        let f = [0.1, 0.2, 0.3, 0.4];
        let g = [0.4, 0.4, 0.1, 0.1];
        let lam = 0.3;
        let mix: Vec<f64> = f.iter().zip(&g).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
        let lhs = map.estimate_state(&mix).unwrap();
        let rhs = map
            .estimate_state(&f)
            .unwrap()
            .scale(lam)
            .add_scaled(&map.estimate_state(&g).unwrap(), 1.0 - lam);
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        assert!(matches!(map.estimate_state(&[0.5, 0.5]), Err(Error::DimensionMismatch { .. })));
        assert!(map.estimate_state(&[0.5, 0.6, 0.0, -0.1]).is_err());
        assert!(map.estimate_state(&[0.5, 0.6, 0.0, 0.1]).is_err());
    }

    #[test]
    fn col_norm_examples() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 2.0]);
        assert_abs_diff_eq!(col_norm_max(&m), 5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(col_norm_max(&DMatrix::identity(4, 4)), 1.0);
        let map = build_map(&build_pauli_bases(1).unwrap());
        assert_abs_diff_eq!(col_norm_max(map.pinv()), 5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn pauli_closed_forms_match_numeric() {
        for q in 1..=2 {
            let cf = pauli_closed_forms(q).unwrap();
            let map = build_map(&build_pauli_bases(q).unwrap());
            assert!((map.pinv() - &cf.pinv_entries).amax() < 1e-10);
            let gram = map.pinv().transpose() * map.pinv();
            assert!((gram - &cf.pinv_gram).amax() < 1e-10);
            // Coefficients tr(σ_μ Z_{a,s}) of the numeric pinv columns.
            for mu in 0..4usize.pow(q as u32) {
                let sigma = crate::herm::pauli_string(&base4_digits(mu, q));
                let sv = DVector::from_vec(vectorize(&sigma).coords);
                let row = map.pinv().transpose() * sv;
                for j in 0..row.len() {
                    assert!((row[j] - cf.pauli_coefficients[(mu, j)]).abs() < 1e-10);
                }
            }
        }
        let cf1 = pauli_closed_forms(1).unwrap();
        for i in 0..6 {
            assert_abs_diff_eq!(cf1.pinv_gram[(i, i)], 5.0, epsilon = 1e-15);
        }
        let cf2 = pauli_closed_forms(2).unwrap();
        let chi1 = cf2.gram_eigs.iter().find(|(_, m)| *m == 6).unwrap();
        assert_abs_diff_eq!(chi1.0, 1.0 / 27.0, epsilon = 1e-15);
        assert!(pauli_closed_forms(4).is_err());
    }

    #[test]
    fn bounds_for_symmetric_schemes() {
        let pb = build_map(&build_pauli_bases(1).unwrap());
        let a = left_inverse_bounds(&pb, LeftInverseMode::A).unwrap();
        assert!(a.pinv_is_optimal);
        assert_abs_diff_eq!(a.upper, 5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(a.lower, a.upper, epsilon = 1e-9);
        let sic = build_map(&build_qubit_sic());
        let b = left_inverse_bounds(&sic, LeftInverseMode::B).unwrap();
        assert!(b.pinv_is_optimal);
        assert_abs_diff_eq!(b.lower, b.upper, epsilon = 1e-9);
        assert_abs_diff_eq!(b.upper, sic.sigma_b(), epsilon = 1e-12);
    }

    #[test]
    fn optimizer_on_trivial_kernel_and_optimal_pinv() {
        let sic = build_map(&build_qubit_sic());
        assert_eq!(sic.kernel_basis().nrows(), 0);
        let li = optimize_left_inverse(&sic, LeftInverseMode::A, SubgradientOptions::default()).unwrap();
        assert_eq!(li.objective, li.pinv_objective);
        assert!((li.matrix() - sic.pinv()).amax() == 0.0);

        let pb = build_map(&build_pauli_bases(1).unwrap());
        assert_eq!(pb.kernel_basis().nrows(), 2);
        let li = optimize_left_inverse(&pb, LeftInverseMode::A, SubgradientOptions::default()).unwrap();
        assert!((li.objective - li.pinv_objective).abs() < 1e-6);
        let left = li.matrix() * pb.matrix();
        assert!((left - DMatrix::<f64>::identity(4, 4)).amax() < 1e-9);
    }

    fn random_povm(rng: &mut ChaCha8Rng, d: usize, n: usize) -> crate::schemes::Povm {
        let raw: Vec<HermOp> = (0..n)
            .map(|_| {
                let a = random_herm(rng, d);
                HermOp::new(a.matrix() * a.matrix()).unwrap()
            })
            .collect();
        let total = raw.iter().fold(HermOp::zeros(d), |acc, e| &acc + e);
        let eig = total.eigh();
        let inv_sqrt: Vec<f64> = eig.values.iter().map(|v| 1.0 / v.sqrt()).collect();
        let s = HermOp::from_spectrum(&inv_sqrt, &eig.vectors);
        let effects: Vec<HermOp> = raw
            .iter()
            .map(|e| HermOp::new(s.matrix() * e.matrix() * s.matrix()).unwrap())
            .collect();
        merge_settings(&[Setting {
            label: "random".into(),
            weight: 1.0,
            outcome_labels: (0..n).map(|i| i.to_string()).collect(),
            effects,
        }])
        .unwrap()
    }

    #[test]
    fn optimizer_sandwiched_by_bounds_on_random_povm() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..3 {
            let map = build_map(&random_povm(&mut rng, 2, 6));
            for mode in [LeftInverseMode::A, LeftInverseMode::B] {
                let bounds = left_inverse_bounds(&map, mode).unwrap();
                let li = optimize_left_inverse(&map, mode, SubgradientOptions::default()).unwrap();
                assert!(li.objective <= li.pinv_objective + 1e-9);
                assert!(li.objective >= bounds.lower - 1e-9, "{} < {}", li.objective, bounds.lower);
                assert!(li.objective <= bounds.upper + 1e-9);
                let left = li.matrix() * map.matrix();
                assert!((left - DMatrix::<f64>::identity(4, 4)).amax() < 1e-9);
            }
        }
        let _ = Complex64::new(0.0, 0.0);
    }
}
