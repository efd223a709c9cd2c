//! Confidence regions around the linear-inversion estimate.

use std::sync::Arc;

use serde_json::{json, Value};

use crate::bernstein::{epsilon_for_confidence, epsilon_for_confidence_spectral};
use crate::error::{invalid, Error, Result};
use crate::herm::HermOp;
use crate::json::herm_to_json;
use crate::mmap::{binomial, MeasurementMap};
use crate::schemes::{BuiltinScheme, Povm, SymmetricSpec};
use crate::special::chi2_inv_survival;

/// `η` for regions built from a single merged measurement.
pub const REGION_ETA: f64 = 2.0;

/// Relative tolerance for grouping equal gram eigenvalues into one semiaxis.
const SEMIAXIS_GROUP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionKind {
    /// Hilbert–Schmidt ball.
    A,
    /// Ellipsoid in the `‖·‖_M` norm.
    B,
    /// Spectral-norm ball with scheme-specific constants.
    R,
    /// Gaussian-approximation ellipsoid, same shape as B.
    G,
}

impl RegionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionKind::A => "A",
            RegionKind::B => "B",
            RegionKind::R => "R",
            RegionKind::G => "G",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(RegionKind::A),
            "B" | "b" => Ok(RegionKind::B),
            "R" | "r" => Ok(RegionKind::R),
            "G" | "g" => Ok(RegionKind::G),
            _ => invalid(format!("unknown region kind {s:?} (expected A, B, R or G)")),
        }
    }
}

/// Semiaxis lengths with multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Semiaxis {
    pub length: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone)]
pub struct Region {
    pub kind: RegionKind,
    pub center: HermOp,
    pub epsilon: f64,
    pub sigma: f64,
    pub n_samples: f64,
    pub delta: f64,
    /// Gram reference for the ellipsoidal kinds.
    pub map: Option<Arc<MeasurementMap>>,
    /// Degrees of freedom of the χ² quantile, kind G only.
    pub dof: Option<usize>,
}

impl Region {
    pub fn radius(&self) -> f64 {
        self.epsilon * self.sigma
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// The norm the region is a ball of, evaluated at `ρ − ρ̂`.
    pub fn norm_of(&self, diff: &HermOp) -> f64 {
        match self.kind {
            RegionKind::A => diff.hs_norm(),
            RegionKind::R => diff.norms().spectral,
            RegionKind::B | RegionKind::G => self
                .map
                .as_ref()
                .expect("ellipsoidal region carries its map")
                .m_norm(diff),
        }
    }

    /// `‖ρ − ρ̂‖_⋆ / (εσ)`: at most one for members.
    pub fn ratio(&self, rho: &HermOp) -> f64 {
        self.norm_of(&(rho - &self.center)) / self.radius()
    }

    pub fn contains(&self, rho: &HermOp) -> bool {
        self.norm_of(&(rho - &self.center)) <= self.radius()
    }

    /// Principal semiaxes `εσ/√ξ_j` grouped by equal length, longest first.
    /// Kind A reports one group of multiplicity `d²`; kind R is not an
    /// ellipsoid and reports none.
    pub fn semiaxes(&self) -> Vec<Semiaxis> {
        match self.kind {
            RegionKind::A => vec![Semiaxis {
                length: self.radius(),
                multiplicity: self.dim() * self.dim(),
            }],
            RegionKind::R => Vec::new(),
            RegionKind::B | RegionKind::G => {
                let map = self.map.as_ref().expect("ellipsoidal region carries its map");
                group_lengths(map.gram_values().iter().map(|xi| self.radius() / xi.sqrt()))
            }
        }
    }

    /// Semiaxes with their directions `Ξ_j`, one per gram eigenvector.
    pub fn semiaxis_directions(&self) -> Vec<(f64, HermOp)> {
        match (&self.map, self.kind) {
            (Some(map), RegionKind::B | RegionKind::G) => map
                .gram_values()
                .iter()
                .enumerate()
                .map(|(j, xi)| (self.radius() / xi.sqrt(), map.gram_direction(j)))
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn report_json(&self) -> Value {
        let semiaxes: Vec<Value> = self
            .semiaxes()
            .iter()
            .map(|s| json!({ "length": s.length, "multiplicity": s.multiplicity }))
            .collect();
        let mut v = json!({
            "kind": self.kind.as_str(),
            "confidence": 1.0 - self.delta,
            "N": self.n_samples,
            "epsilon": self.epsilon,
            "sigma": self.sigma,
            "radius": self.radius(),
            "estimate": herm_to_json(&self.center),
            "semiaxes": semiaxes,
        });
        if let Some(k) = self.dof {
            v["dof"] = json!(k);
        }
        v
    }
}

fn group_lengths(lengths: impl Iterator<Item = f64>) -> Vec<Semiaxis> {
    let mut sorted: Vec<f64> = lengths.collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut out: Vec<Semiaxis> = Vec::new();
    for l in sorted {
        match out.last_mut() {
            Some(g) if (g.length - l).abs() <= SEMIAXIS_GROUP_TOL * g.length => g.multiplicity += 1,
            _ => out.push(Semiaxis {
                length: l,
                multiplicity: 1,
            }),
        }
    }
    out
}

fn check_common(map: &MeasurementMap, n: f64, delta: f64) -> Result<()> {
    if !(n >= 1.0) {
        return invalid(format!("sample count N must be at least 1, got {n}"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("δ must lie in (0,1), got {delta}"));
    }
    map.require_complete()
}

/// Builds a region of kind A or B from frequencies of `N` samples.
pub fn build_region(
    map: &Arc<MeasurementMap>,
    freqs: &[f64],
    n: f64,
    delta: f64,
    kind: RegionKind,
) -> Result<Region> {
    check_common(map, n, delta)?;
    let center = map.estimate_state(freqs)?;
    region_from_estimate(map, center, n, delta, kind)
}

/// Like [`build_region`] for an already computed estimate.
pub fn region_from_estimate(
    map: &Arc<MeasurementMap>,
    center: HermOp,
    n: f64,
    delta: f64,
    kind: RegionKind,
) -> Result<Region> {
    check_common(map, n, delta)?;
    let epsilon = epsilon_for_confidence(n, delta, REGION_ETA)?;
    let (sigma, map) = match kind {
        RegionKind::A => (map.sigma_a(), None),
        RegionKind::B => (map.sigma_b(), Some(map.clone())),
        _ => return invalid("build_region handles kinds A and B only"),
    };
    Ok(Region {
        kind,
        center,
        epsilon,
        sigma,
        n_samples: n,
        delta,
        map,
        dof: None,
    })
}

/// `σ_R` and `η_R` of the spectral-norm reference region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConstants {
    pub sigma_r: f64,
    pub eta_r: f64,
}

impl SchemeConstants {
    /// Known constants for a built-in scheme, if any.
    pub fn for_builtin(scheme: BuiltinScheme) -> Option<SchemeConstants> {
        match scheme {
            BuiltinScheme::PauliBases { qubits } => {
                let q = qubits as f64;
                Some(SchemeConstants {
                    sigma_r: 3f64.powf(q / 2.0),
                    eta_r: 2.0 * (4.0f64 / 3.0).powf(q / 2.0),
                })
            }
            BuiltinScheme::Sic { qubits: 1 } => Some(Self::structured(2)),
            BuiltinScheme::Sic { .. } => None,
            BuiltinScheme::PauliObservables { qubits } => Some(SchemeConstants {
                sigma_r: (1usize << qubits) as f64,
                eta_r: 2.0,
            }),
        }
    }

    /// Single-qudit structured measurement in dimension `d`.
    pub fn structured(d: usize) -> SchemeConstants {
        let d = d as f64;
        SchemeConstants {
            sigma_r: (2.0 * d).sqrt(),
            eta_r: (d / 2.0).sqrt(),
        }
    }

    pub fn for_povm(povm: &Povm) -> Option<SchemeConstants> {
        povm.builtin().and_then(Self::for_builtin)
    }
}

fn missing_constants() -> Error {
    Error::InvalidArgument(
        "no reference-region constants are known for this scheme; supply sigma_R and eta_R".into(),
    )
}

/// The spectral-norm region `‖ρ − ρ̂‖_∞ ≤ εσ_R` with
/// `u = η_R² log(2d/δ)/(18N)`.
pub fn build_region_r(
    map: &Arc<MeasurementMap>,
    freqs: &[f64],
    n: f64,
    delta: f64,
    constants: Option<SchemeConstants>,
) -> Result<Region> {
    check_common(map, n, delta)?;
    let center = map.estimate_state(freqs)?;
    region_r_from_estimate(map.dim(), center, n, delta, constants)
}

pub fn region_r_from_estimate(
    dim: usize,
    center: HermOp,
    n: f64,
    delta: f64,
    constants: Option<SchemeConstants>,
) -> Result<Region> {
    let c = constants.ok_or_else(missing_constants)?;
    let epsilon = epsilon_for_confidence_spectral(n, delta, c.eta_r, dim)?;
    Ok(Region {
        kind: RegionKind::R,
        center,
        epsilon,
        sigma: c.sigma_r,
        n_samples: n,
        delta,
        map: None,
        dof: None,
    })
}

/// `σ_G = √(max_a ‖E_a‖_∞)` bounding the largest covariance eigenvalue of
/// the merged measurement.
pub fn gaussian_sigma(povm: &Povm) -> f64 {
    povm.max_effect_norm().sqrt()
}

/// The Gaussian-approximation ellipsoid
/// `‖ρ − ρ̂‖_M ≤ σ_G √(S⁻¹_{d²−1}(δ)/N)`.
pub fn build_region_g(
    map: &Arc<MeasurementMap>,
    povm: &Povm,
    freqs: &[f64],
    n: f64,
    delta: f64,
) -> Result<Region> {
    check_common(map, n, delta)?;
    let center = map.estimate_state(freqs)?;
    let d = map.dim();
    let dof = d * d - 1;
    Ok(Region {
        kind: RegionKind::G,
        center,
        epsilon: (chi2_inv_survival(dof, delta) / n).sqrt(),
        sigma: gaussian_sigma(povm),
        n_samples: n,
        delta,
        map: Some(map.clone()),
        dof: Some(dof),
    })
}

/// Closed forms for a local symmetric measurement tensored over `q` qudits.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricConstants {
    pub sigma_a: f64,
    pub sigma_b: f64,
    /// Semiaxis lengths divided by `ε`, longest first, with multiplicities.
    pub semiaxes: Vec<Semiaxis>,
}

pub fn symmetric_region_constants(sym: &SymmetricSpec) -> Result<SymmetricConstants> {
    let d = sym.local_dim as f64;
    let r = sym.rank as f64;
    let n = sym.outcomes as f64;
    let q = sym.qudits;
    if sym.rank >= sym.local_dim {
        return invalid("r = d is the trivial measurement");
    }
    let d21 = d * d - 1.0;
    let sigma_a_local = ((r / d) * d21 * d21 / (d - r) + 1.0 / d).sqrt();
    let sigma_b_local = d / n.sqrt();
    let stretch = r * d21 / (d - r);
    let semiaxes = (0..=q)
        .map(|chi| Semiaxis {
            length: stretch.powf((q - chi) as f64 / 2.0) * d.powf(q as f64 / 2.0),
            multiplicity: binomial(q, chi) * (sym.local_dim.pow(2) - 1).pow((q - chi) as u32),
        })
        .collect();
    Ok(SymmetricConstants {
        sigma_a: sigma_a_local.powi(q as i32),
        sigma_b: sigma_b_local.powi(q as i32),
        semiaxes,
    })
}

/// `ε_G = √(ϑ^q S⁻¹_{d^{2q}−1}(δ)/N)` for a symmetric scheme.
pub fn gaussian_region_size(sym: &SymmetricSpec, n: f64, delta: f64) -> f64 {
    let dof = sym.total_dim().pow(2) - 1;
    (sym.theta().powi(sym.qudits as i32) * chi2_inv_survival(dof, delta) / n).sqrt()
}

/// Large-`N` ratio `ε_B/ε_G = (r/d)^{q/2} √(2d^{2q} log(8/δ) / S⁻¹_{d^{2q}−1}(δ))`,
/// times `√2` for `m` projective settings instead of one merged measurement.
pub fn region_ratio_bg(sym: &SymmetricSpec, delta: f64, projective_variant: bool) -> f64 {
    let d = sym.local_dim as f64;
    let r = sym.rank as f64;
    let q = sym.qudits as f64;
    let big_d2 = (sym.total_dim() as f64).powi(2);
    let dof = sym.total_dim().pow(2) - 1;
    let ratio = (r / d).powf(q / 2.0)
        * (2.0 * big_d2 * (8.0 / delta).ln() / chi2_inv_survival(dof, delta)).sqrt();
    if projective_variant {
        ratio * std::f64::consts::SQRT_2
    } else {
        ratio
    }
}

/// Membership predicate matching the region's kind.
pub fn region_membership(region: &Region, rho: &HermOp) -> Result<bool> {
    if rho.dim() != region.dim() {
        return Err(Error::DimensionMismatch {
            expected: region.dim(),
            got: rho.dim(),
        });
    }
    Ok(region.contains(rho))
}
