//! Built-in measurement schemes and the merge of multi-setting schemes into
//! one generalized measurement with effects `E_{(a,s)} = q_s E'_{a|s}`.

use serde_json::{json, Value};

use crate::error::{invalid, Error, Result};
use crate::herm::{pauli, swap, HermOp};
use crate::json::{herm_from_json, herm_to_json};

/// Effects must be PSD and complete to this tolerance.
pub const POVM_TOL: f64 = 1e-10;
/// Largest number of qubits for Pauli-bases regions (closed forms).
pub const MAX_PAULI_BASES_QUBITS: usize = 7;
/// Largest number of qubits for sampling-based simulations.
pub const MAX_SIM_QUBITS: usize = 4;
/// Largest number of qubits for global Pauli observables.
pub const MAX_PAULI_OBSERVABLE_QUBITS: usize = 3;
/// Cap on `outcomes × d²` for explicitly built effect lists.
pub const MAX_EFFECT_ENTRIES: usize = 1 << 20;

/// One measurement setting: effects `E'_{a|s}` summing to the identity and
/// the probability `q_s` with which the setting is chosen.
#[derive(Debug, Clone)]
pub struct Setting {
    pub label: String,
    pub weight: f64,
    pub effects: Vec<HermOp>,
    pub outcome_labels: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeTag {
    PauliBases,
    PauliObservables,
    LocalSymmetric,
    Custom,
}

/// Built-in schemes, recorded so that scheme-specific constants can be
/// looked up later.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinScheme {
    PauliBases { qubits: usize },
    PauliObservables { qubits: usize },
    Sic { qubits: usize },
}

impl BuiltinScheme {
    pub fn name(&self) -> &'static str {
        match self {
            BuiltinScheme::PauliBases { .. } => "pauli-bases",
            BuiltinScheme::PauliObservables { .. } => "pauli-observables",
            BuiltinScheme::Sic { .. } => "sic",
        }
    }

    pub fn qubits(&self) -> usize {
        match *self {
            BuiltinScheme::PauliBases { qubits }
            | BuiltinScheme::PauliObservables { qubits }
            | BuiltinScheme::Sic { qubits } => qubits,
        }
    }

    pub fn from_name(name: &str, qubits: usize) -> Result<Self> {
        match name {
            "pauli-bases" => Ok(BuiltinScheme::PauliBases { qubits }),
            "pauli-observables" => Ok(BuiltinScheme::PauliObservables { qubits }),
            "sic" => Ok(BuiltinScheme::Sic { qubits }),
            other => invalid(format!(
                "unknown scheme '{other}' (expected pauli-bases, pauli-observables or sic)"
            )),
        }
    }

    pub fn build(&self) -> Result<Povm> {
        match *self {
            BuiltinScheme::PauliBases { qubits } => build_pauli_bases(qubits),
            BuiltinScheme::PauliObservables { qubits } => build_pauli_observables(qubits),
            BuiltinScheme::Sic { qubits } => tensor_local_scheme(&build_qubit_sic(), qubits),
        }
    }
}

/// Parameters of a local symmetric measurement: effects `ϑΠ_a` with rank-`r`
/// projectors satisfying `Σ_a E_a⊗E_a = αS + β𝟙`, applied to `qudits`
/// subsystems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricSpec {
    pub local_dim: usize,
    pub rank: usize,
    pub outcomes: usize,
    pub qudits: usize,
}

impl SymmetricSpec {
    pub fn new(local_dim: usize, rank: usize, outcomes: usize, qudits: usize) -> Result<Self> {
        if local_dim < 2 || rank == 0 || qudits == 0 {
            return invalid("symmetric spec needs d ≥ 2, r ≥ 1, q ≥ 1");
        }
        if rank >= local_dim {
            return invalid(format!(
                "rank r = {rank} must be smaller than d = {local_dim} (r = d is the trivial measurement)"
            ));
        }
        if outcomes * rank < local_dim * local_dim {
            return invalid(format!(
                "n = {outcomes} outcomes of rank {rank} cannot be informationally complete in d = {local_dim}"
            ));
        }
        let spec = Self {
            local_dim,
            rank,
            outcomes,
            qudits,
        };
        if spec.beta() <= 0.0 {
            return invalid("symmetric spec has β ≤ 0");
        }
        Ok(spec)
    }

    /// `ϑ = d/(nr)`.
    pub fn theta(&self) -> f64 {
        self.local_dim as f64 / (self.outcomes * self.rank) as f64
    }

    /// `α = ϑ(d−r)/(d²−1)`.
    pub fn alpha(&self) -> f64 {
        let d = self.local_dim as f64;
        self.theta() * (d - self.rank as f64) / (d * d - 1.0)
    }

    /// `β = ϑ − αd`.
    pub fn beta(&self) -> f64 {
        self.theta() - self.alpha() * self.local_dim as f64
    }

    pub fn total_dim(&self) -> usize {
        self.local_dim.pow(self.qudits as u32)
    }
}

/// Flat index entry: which setting and which outcome a merged effect is.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeLabel {
    pub setting: String,
    pub outcome: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SettingGroup {
    pub label: String,
    pub weight: f64,
    pub start: usize,
    pub len: usize,
}

/// A single generalized measurement.
#[derive(Debug, Clone)]
pub struct Povm {
    dim: usize,
    effects: Vec<HermOp>,
    outcome_index: Vec<OutcomeLabel>,
    groups: Vec<SettingGroup>,
    scheme_tag: SchemeTag,
    symmetric: Option<SymmetricSpec>,
    builtin: Option<BuiltinScheme>,
}

impl Povm {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn effects(&self) -> &[HermOp] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn outcome_index(&self) -> &[OutcomeLabel] {
        &self.outcome_index
    }

    pub fn groups(&self) -> &[SettingGroup] {
        &self.groups
    }

    pub fn scheme_tag(&self) -> SchemeTag {
        self.scheme_tag
    }

    pub fn symmetric(&self) -> Option<&SymmetricSpec> {
        self.symmetric.as_ref()
    }

    pub fn builtin(&self) -> Option<BuiltinScheme> {
        self.builtin
    }

    /// Outcome probabilities `tr(E_a ρ)`.
    pub fn probabilities(&self, rho: &HermOp) -> Vec<f64> {
        self.effects.iter().map(|e| e.inner(rho)).collect()
    }

    /// Splits the merged measurement back into its settings, `E' = E/q_s`.
    pub fn settings(&self) -> Vec<Setting> {
        self.groups
            .iter()
            .map(|g| Setting {
                label: g.label.clone(),
                weight: g.weight,
                effects: self.effects[g.start..g.start + g.len]
                    .iter()
                    .map(|e| e.scale(1.0 / g.weight))
                    .collect(),
                outcome_labels: self.outcome_index[g.start..g.start + g.len]
                    .iter()
                    .map(|l| l.outcome.clone())
                    .collect(),
            })
            .collect()
    }

    /// `max_a ‖E_a‖_∞`.
    pub fn max_effect_norm(&self) -> f64 {
        self.effects
            .iter()
            .map(|e| e.norms().spectral)
            .fold(0.0, f64::max)
    }

    /// Re-merges the settings with new weights `q_s` (for example `n_s/N`).
    pub fn reweighted(&self, weights: &[f64]) -> Result<Povm> {
        if weights.len() != self.groups.len() {
            return Err(Error::DimensionMismatch {
                expected: self.groups.len(),
                got: weights.len(),
            });
        }
        let mut settings = self.settings();
        for (s, w) in settings.iter_mut().zip(weights) {
            s.weight = *w;
        }
        let mut povm = merge_settings(&settings)?;
        if weights
            .iter()
            .zip(&self.groups)
            .all(|(w, g)| (w - g.weight).abs() < 1e-12)
        {
            povm.scheme_tag = self.scheme_tag;
            povm.symmetric = self.symmetric;
            povm.builtin = self.builtin;
        }
        Ok(povm)
    }

    /// `‖Σ_a E_a⊗E_a − αS − β𝟙‖_HS` for the local scheme.
    pub fn symmetry_residual(&self, spec: &SymmetricSpec) -> f64 {
        let d = self.dim;
        let mut acc = HermOp::zeros(d * d);
        for e in &self.effects {
            acc = &acc + &e.kron(e);
        }
        let target = &swap(d).scale(spec.alpha()) + &HermOp::identity(d * d).scale(spec.beta());
        (&acc - &target).hs_norm()
    }

    pub fn to_json(&self) -> Value {
        let settings: Vec<Value> = self
            .settings()
            .iter()
            .map(|s| {
                json!({
                    "label": s.label,
                    "weight": s.weight,
                    "outcomes": s.outcome_labels,
                    "effects": s.effects.iter().map(herm_to_json).collect::<Vec<_>>(),
                })
            })
            .collect();
        let mut out = json!({ "dimension": self.dim, "settings": settings });
        if let Some(b) = self.builtin {
            out["scheme"] = json!({ "name": b.name(), "qubits": b.qubits() });
        }
        out
    }

    /// Parses the POVM file format. Missing weights default to `1/m`.
    pub fn from_json(v: &Value) -> Result<Povm> {
        let dim = v
            .get("dimension")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("povm: missing integer field \"dimension\"".into()))?
            as usize;
        let raw = v
            .get("settings")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("povm: missing array field \"settings\"".into()))?;
        if raw.is_empty() {
            return Err(Error::Parse("povm: no settings".into()));
        }
        let m = raw.len();
        let mut settings = Vec::with_capacity(m);
        for (si, s) in raw.iter().enumerate() {
            let label = s
                .get("label")
                .and_then(Value::as_str)
                .map(str::to_owned)
                .unwrap_or_else(|| format!("s{si}"));
            let weight = match s.get("weight") {
                None | Some(Value::Null) => 1.0 / m as f64,
                Some(w) => w.as_f64().ok_or_else(|| {
                    Error::Parse(format!("povm setting {si}: \"weight\" must be a number"))
                })?,
            };
            let effects = s
                .get("effects")
                .and_then(Value::as_array)
                .ok_or_else(|| {
                    Error::Parse(format!("povm setting {si}: missing array \"effects\""))
                })?
                .iter()
                .map(herm_from_json)
                .collect::<Result<Vec<_>>>()?;
            let outcome_labels = match s.get("outcomes").and_then(Value::as_array) {
                Some(labels) => labels
                    .iter()
                    .map(|l| l.as_str().map(str::to_owned))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| {
                        Error::Parse(format!("povm setting {si}: outcomes must be strings"))
                    })?,
                None => (0..effects.len()).map(|i| i.to_string()).collect(),
            };
            if outcome_labels.len() != effects.len() {
                return Err(Error::Parse(format!(
                    "povm setting {si}: {} outcome labels for {} effects",
                    outcome_labels.len(),
                    effects.len()
                )));
            }
            if let Some(e) = effects.iter().find(|e| e.dim() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: e.dim(),
                });
            }
            settings.push(Setting {
                label,
                weight,
                effects,
                outcome_labels,
            });
        }
        let mut povm = merge_settings(&settings)?;
        if let Some(scheme) = v.get("scheme") {
            let name = scheme.get("name").and_then(Value::as_str).unwrap_or("");
            let qubits = scheme.get("qubits").and_then(Value::as_u64).unwrap_or(0) as usize;
            if let Ok(b) = BuiltinScheme::from_name(name, qubits) {
                // Only trust the tag if the effects really are that scheme.
                if let Ok(reference) = b.build() {
                    if same_effects(&reference, &povm, 1e-9) {
                        povm.scheme_tag = reference.scheme_tag;
                        povm.symmetric = reference.symmetric;
                        povm.builtin = reference.builtin;
                    }
                }
            }
        }
        Ok(povm)
    }
}

fn same_effects(a: &Povm, b: &Povm, tol: f64) -> bool {
    a.dim == b.dim
        && a.len() == b.len()
        && a
            .effects
            .iter()
            .zip(&b.effects)
            .all(|(x, y)| x.max_abs_diff(y) < tol)
}

fn check_effects(effects: &[HermOp], dim: usize) -> Result<()> {
    let mut total = HermOp::zeros(dim);
    for (index, e) in effects.iter().enumerate() {
        if e.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: e.dim(),
            });
        }
        let min_eig = e.min_eigenvalue();
        if min_eig < -POVM_TOL {
            return Err(Error::NotPsd { index, min_eig });
        }
        total = &total + e;
    }
    let dev = total.max_abs_diff(&HermOp::identity(dim));
    if dev > POVM_TOL {
        return Err(Error::NotComplete(dev));
    }
    Ok(())
}

/// Merges settings into one measurement, `E_{(a,s)} = q_s E'_{a|s}`.
pub fn merge_settings(settings: &[Setting]) -> Result<Povm> {
    let first = settings
        .first()
        .ok_or_else(|| Error::InvalidArgument("no settings to merge".into()))?;
    let dim = first
        .effects
        .first()
        .ok_or_else(|| Error::InvalidArgument("setting without effects".into()))?
        .dim();
    let total: f64 = settings.iter().map(|s| s.weight).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::WeightSum(total));
    }
    let mut effects = Vec::new();
    let mut outcome_index = Vec::new();
    let mut groups = Vec::new();
    for s in settings {
        if !(s.weight > 0.0 && s.weight <= 1.0 + 1e-12) {
            return invalid(format!(
                "setting '{}' has weight {} outside (0, 1]",
                s.label, s.weight
            ));
        }
        if s.outcome_labels.len() != s.effects.len() {
            return invalid(format!(
                "setting '{}' has {} outcome labels for {} effects",
                s.label,
                s.outcome_labels.len(),
                s.effects.len()
            ));
        }
        check_effects(&s.effects, dim)?;
        groups.push(SettingGroup {
            label: s.label.clone(),
            weight: s.weight,
            start: effects.len(),
            len: s.effects.len(),
        });
        for (e, l) in s.effects.iter().zip(&s.outcome_labels) {
            effects.push(e.scale(s.weight));
            outcome_index.push(OutcomeLabel {
                setting: s.label.clone(),
                outcome: l.clone(),
            });
        }
    }
    check_effects(&effects, dim)?;
    Ok(Povm {
        dim,
        effects,
        outcome_index,
        groups,
        scheme_tag: SchemeTag::Custom,
        symmetric: None,
        builtin: None,
    })
}

const PAULI_LETTERS: [char; 4] = ['I', 'X', 'Y', 'Z'];

fn pauli_bases_local() -> Povm {
    let settings: Vec<Setting> = (1..=3)
        .map(|s| Setting {
            label: PAULI_LETTERS[s].to_string(),
            weight: 1.0 / 3.0,
            effects: [1.0, -1.0]
                .iter()
                .map(|a| HermOp::identity(2).scale(0.5).add_scaled(&pauli(s), 0.5 * a))
                .collect(),
            outcome_labels: vec!["+".into(), "-".into()],
        })
        .collect();
    let mut povm = merge_settings(&settings).expect("Pauli bases are a valid POVM");
    povm.scheme_tag = SchemeTag::PauliBases;
    povm.symmetric = Some(SymmetricSpec::new(2, 1, 6, 1).unwrap());
    povm.builtin = Some(BuiltinScheme::PauliBases { qubits: 1 });
    povm
}

/// Each of `q` qubits measured in a uniformly chosen Pauli basis:
/// `6^q` effects `3^{−q} ⊗_k (𝟙 + a_k σ_{s_k})/2`.
pub fn build_pauli_bases(qubits: usize) -> Result<Povm> {
    if qubits == 0 || qubits > MAX_PAULI_BASES_QUBITS {
        return Err(Error::Cap {
            what: "qubits",
            value: qubits,
            cap: MAX_PAULI_BASES_QUBITS,
        });
    }
    tensor_local_scheme(&pauli_bases_local(), qubits)
}

/// All non-trivial global Pauli observables on `Q` qubits, each with weight
/// `1/(d²−1)` and outcomes `½(𝟙 ± σ_s)`.
pub fn build_pauli_observables(qubits: usize) -> Result<Povm> {
    if qubits == 0 || qubits > MAX_PAULI_OBSERVABLE_QUBITS {
        return Err(Error::Cap {
            what: "qubits",
            value: qubits,
            cap: MAX_PAULI_OBSERVABLE_QUBITS,
        });
    }
    let d = 1usize << qubits;
    let m = d * d - 1;
    let settings: Vec<Setting> = (1..d * d)
        .map(|code| {
            let indices = base4_digits(code, qubits);
            let sigma = crate::herm::pauli_string(&indices);
            let half_id = HermOp::identity(d).scale(0.5);
            Setting {
                label: indices.iter().map(|&k| PAULI_LETTERS[k]).collect(),
                weight: 1.0 / m as f64,
                effects: vec![half_id.add_scaled(&sigma, 0.5), half_id.add_scaled(&sigma, -0.5)],
                outcome_labels: vec!["+1".into(), "-1".into()],
            }
        })
        .collect();
    let mut povm = merge_settings(&settings)?;
    povm.scheme_tag = SchemeTag::PauliObservables;
    povm.symmetric = Some(SymmetricSpec::new(d, d / 2, 2 * m, 1)?);
    povm.builtin = Some(BuiltinScheme::PauliObservables { qubits });
    Ok(povm)
}

/// Digits of `code` in base 4, most significant first.
pub(crate) fn base4_digits(code: usize, len: usize) -> Vec<usize> {
    (0..len).rev().map(|k| (code >> (2 * k)) & 3).collect()
}

/// Unit Bloch vectors of the tetrahedral qubit SIC.
pub fn sic_bloch_vectors() -> [[f64; 3]; 4] {
    let s = 1.0 / 3f64.sqrt();
    [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]]
}

/// The qubit SIC: four effects `½(𝟙 + x_a·σ)/2`.
pub fn build_qubit_sic() -> Povm {
    let effects: Vec<HermOp> = sic_bloch_vectors()
        .iter()
        .map(|x| {
            let mut proj = HermOp::identity(2).scale(0.5);
            for (k, c) in x.iter().enumerate() {
                proj = proj.add_scaled(&pauli(k + 1), 0.5 * c);
            }
            proj
        })
        .collect();
    let setting = Setting {
        label: "SIC".into(),
        weight: 1.0,
        effects: effects.iter().map(|p| p.scale(0.5)).collect(),
        outcome_labels: (0..4).map(|a| a.to_string()).collect(),
    };
    let mut povm = merge_settings(&[setting]).expect("SIC is a valid POVM");
    povm.scheme_tag = SchemeTag::LocalSymmetric;
    povm.symmetric = Some(SymmetricSpec::new(2, 1, 4, 1).unwrap());
    povm.builtin = Some(BuiltinScheme::Sic { qubits: 1 });
    povm
}

/// The same local symmetric measurement on each of `qudits` subsystems,
/// `E_{a⃗} = ⊗_k E_{a_k}`. Settings combine as products of local settings.
pub fn tensor_local_scheme(local: &Povm, qudits: usize) -> Result<Povm> {
    let spec = local
        .symmetric
        .filter(|s| s.qudits == 1)
        .ok_or_else(|| Error::InvalidArgument("local scheme carries no single-qudit symmetric spec".into()))?;
    if qudits == 0 {
        return invalid("need at least one qudit");
    }
    let n_total = local.len().checked_pow(qudits as u32);
    let d_total = local.dim.checked_pow(qudits as u32);
    let entries = n_total
        .zip(d_total)
        .and_then(|(n, d)| n.checked_mul(d.checked_mul(d)?));
    match entries {
        Some(e) if e <= MAX_EFFECT_ENTRIES => {}
        _ => {
            return Err(Error::Cap {
                what: "outcomes × d² of the tensored scheme",
                value: entries.unwrap_or(usize::MAX),
                cap: MAX_EFFECT_ENTRIES,
            })
        }
    }
    let mut groups: Vec<(String, f64, Vec<usize>)> = vec![(String::new(), 1.0, Vec::new())];
    for _ in 0..qudits {
        let mut next = Vec::new();
        for (label, weight, idx) in &groups {
            for (gi, g) in local.groups.iter().enumerate() {
                let mut i = idx.clone();
                i.push(gi);
                next.push((format!("{label}{}", g.label), weight * g.weight, i));
            }
        }
        groups = next;
    }
    let mut settings = Vec::with_capacity(groups.len());
    for (label, weight, idx) in groups {
        let mut effects = vec![HermOp::identity(1)];
        let mut labels = vec![String::new()];
        for (k, &gi) in idx.iter().enumerate() {
            let g = &local.groups[gi];
            let mut ne = Vec::with_capacity(effects.len() * g.len);
            let mut nl = Vec::with_capacity(effects.len() * g.len);
            for (e, l) in effects.iter().zip(&labels) {
                for a in g.start..g.start + g.len {
                    ne.push(e.kron(&local.effects[a].scale(1.0 / g.weight)));
                    let sep = if k == 0 || local.outcome_index[a].outcome.len() == 1 { "" } else { "," };
                    nl.push(format!("{l}{sep}{}", local.outcome_index[a].outcome));
                }
            }
            effects = ne;
            labels = nl;
        }
        settings.push(Setting {
            label,
            weight,
            effects,
            outcome_labels: labels,
        });
    }
    let mut povm = merge_settings(&settings)?;
    povm.scheme_tag = match local.scheme_tag {
        SchemeTag::PauliBases => SchemeTag::PauliBases,
        _ => SchemeTag::LocalSymmetric,
    };
    povm.symmetric = Some(SymmetricSpec { qudits, ..spec });
    povm.builtin = match local.builtin {
        Some(BuiltinScheme::PauliBases { qubits: 1 }) => Some(BuiltinScheme::PauliBases { qubits: qudits }),
        Some(BuiltinScheme::Sic { qubits: 1 }) => Some(BuiltinScheme::Sic { qubits: qudits }),
        _ => None,
    };
    Ok(povm)
}
