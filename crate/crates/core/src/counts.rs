//! Measured outcome counts and their conversion to merged frequencies.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::schemes::Povm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingCounts {
    pub label: String,
    pub counts: Vec<u64>,
}

/// On-disk counts: per-setting integer tallies, optionally with the
/// setting probabilities `q_s` used during the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountsFile {
    pub settings: Vec<SettingCounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

/// Counts matched against a POVM, ready for region construction.
#[derive(Debug, Clone)]
pub struct Assembled {
    /// The POVM re-merged with the resolved weights.
    pub povm: Povm,
    /// `f_a = q_s c_{a|s} / n_s` in merged outcome order.
    pub frequencies: Vec<f64>,
    pub n_total: u64,
    pub weights: Vec<f64>,
}

impl CountsFile {
    pub fn from_json_str(s: &str) -> Result<CountsFile> {
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("counts: {e}")))
    }

    pub fn total(&self) -> u64 {
        self.settings.iter().map(|s| s.counts.iter().sum::<u64>()).sum()
    }

    /// Builds a counts file from merged counts in POVM outcome order.
    pub fn from_merged(povm: &Povm, merged: &[u64]) -> Result<CountsFile> {
        if merged.len() != povm.len() {
            return Err(Error::DimensionMismatch {
                expected: povm.len(),
                got: merged.len(),
            });
        }
        let settings = povm
            .groups()
            .iter()
            .map(|g| SettingCounts {
                label: g.label.clone(),
                counts: merged[g.start..g.start + g.len].to_vec(),
            })
            .collect();
        Ok(CountsFile {
            settings,
            weights: None,
        })
    }

    /// Matches settings by label. Weights come from the file when given,
    /// otherwise from the realized fractions `n_s / N`.
    pub fn assemble(&self, povm: &Povm) -> Result<Assembled> {
        let groups = povm.groups();
        if self.settings.len() != groups.len() {
            return invalid(format!(
                "counts list {} settings but the POVM has {}",
                self.settings.len(),
                groups.len()
            ));
        }
        let mut ordered = Vec::with_capacity(groups.len());
        for g in groups {
            let s = self
                .settings
                .iter()
                .find(|s| s.label == g.label)
                .ok_or_else(|| Error::InvalidArgument(format!("no counts for setting '{}'", g.label)))?;
            if s.counts.len() != g.len {
                return invalid(format!(
                    "setting '{}' has {} counts for {} outcomes",
                    g.label,
                    s.counts.len(),
                    g.len
                ));
            }
            ordered.push(s);
        }
        let n_s: Vec<u64> = ordered.iter().map(|s| s.counts.iter().sum()).collect();
        let n_total: u64 = n_s.iter().sum();
        if n_total == 0 {
            return invalid("counts are all zero");
        }
        if let Some((s, _)) = ordered.iter().zip(&n_s).find(|(_, n)| **n == 0) {
            return invalid(format!("setting '{}' has no counts", s.label));
        }
        let weights = match &self.weights {
            Some(w) => {
                if w.len() != groups.len() {
                    return Err(Error::DimensionMismatch {
                        expected: groups.len(),
                        got: w.len(),
                    });
                }
                w.clone()
            }
            None => n_s.iter().map(|n| *n as f64 / n_total as f64).collect(),
        };
        let povm = povm.reweighted(&weights)?;
        let mut frequencies = Vec::with_capacity(povm.len());
        for ((s, n), q) in ordered.iter().zip(&n_s).zip(&weights) {
            frequencies.extend(s.counts.iter().map(|c| q * *c as f64 / *n as f64));
        }
        Ok(Assembled {
            povm,
            frequencies,
            n_total,
            weights,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::build_pauli_bases;
    use approx::assert_abs_diff_eq;

    #[test]
    fn realized_fractions_become_weights() {
        let povm = build_pauli_bases(1).unwrap();
        let file = CountsFile::from_json_str(
            r#"{"settings":[{"label":"Z","counts":[300,0]},{"label":"X","counts":[100,100]},{"label":"Y","counts":[50,50]}]}"#,
        )
        .unwrap();
        let a = file.assemble(&povm).unwrap();
        assert_eq!(a.n_total, 600);
        assert_abs_diff_eq!(a.weights[0], 200.0 / 600.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a.weights[2], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a.frequencies.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a.frequencies[4], 0.5, epsilon = 1e-15);
        // not uniform, so the scheme is no longer recognized
        assert!(a.povm.builtin().is_none());
    }

    #[test]
    fn uniform_counts_keep_the_scheme() {
        let povm = build_pauli_bases(1).unwrap();
        let file = CountsFile::from_merged(&povm, &[600, 600, 1000, 200, 1200, 0]).unwrap();
        let a = file.assemble(&povm).unwrap();
        assert!(a.povm.builtin().is_some());
        assert_abs_diff_eq!(a.frequencies[0], 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn explicit_weights_win() {
        let povm = build_pauli_bases(1).unwrap();
        let mut file = CountsFile::from_merged(&povm, &[10, 10, 20, 0, 5, 5]).unwrap();
        file.weights = Some(vec![0.2, 0.3, 0.5]);
        let a = file.assemble(&povm).unwrap();
        assert_eq!(a.weights, vec![0.2, 0.3, 0.5]);
        assert_abs_diff_eq!(a.frequencies[2], 0.3, epsilon = 1e-15);
    }

    #[test]
    fn mismatches_rejected() {
        let povm = build_pauli_bases(1).unwrap();
        let bad_label = r#"{"settings":[{"label":"Q","counts":[1,1]},{"label":"X","counts":[1,1]},{"label":"Y","counts":[1,1]}]}"#;
        assert!(CountsFile::from_json_str(bad_label).unwrap().assemble(&povm).is_err());
        let short = r#"{"settings":[{"label":"Z","counts":[1]},{"label":"X","counts":[1,1]},{"label":"Y","counts":[1,1]}]}"#;
        assert!(CountsFile::from_json_str(short).unwrap().assemble(&povm).is_err());
        let empty = r#"{"settings":[{"label":"Z","counts":[0,0]},{"label":"X","counts":[1,1]},{"label":"Y","counts":[1,1]}]}"#;
        assert!(CountsFile::from_json_str(empty).unwrap().assemble(&povm).is_err());
        assert!(CountsFile::from_json_str(r#"{"settings":[{"label":"Z","counts":[-1,2]}]}"#).is_err());
        assert!(CountsFile::from_json_str(r#"{"settings":[], "extra": 1}"#).is_err());
    }
}
