//! JSON descriptions of systems, cocycles, and skew actions.
//!
//! Systems: `{"kind": "bernoulli", "alphabet": [...], "probs": [...],
//! "seed": n}` or `{"kind": "markov", "alphabet": [...], "transition":
//! [[...]], "seed": n}`.
//!
//! Cocycles: `{"d": n, "window": [lo, hi], "table": {"<symbols>": [[...]]}}`
//! with one row-major matrix per window word; the window defaults to the
//! single coordinate `x_0`. Skew actions add `{"z_size": m, "perms":
//! {"<symbol>": [...]}}`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cocycle::{CocycleSpec, SkewSystem};
use crate::dynamics::{Symbol, SymbolicSystem};
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SystemConfig {
    Bernoulli {
        alphabet: Vec<String>,
        probs: Vec<f64>,
        seed: u64,
    },
    Markov {
        alphabet: Vec<String>,
        transition: Vec<Vec<f64>>,
        seed: u64,
    },
}

impl SystemConfig {
    pub fn build(&self) -> Result<SymbolicSystem> {
        match self {
            SystemConfig::Bernoulli { alphabet, probs, seed } => {
                SymbolicSystem::bernoulli(alphabet.clone(), probs.clone(), *seed)
            }
            SystemConfig::Markov { alphabet, transition, seed } => {
                SymbolicSystem::markov(alphabet.clone(), transition.clone(), *seed)
            }
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            SystemConfig::Bernoulli { seed, .. } | SystemConfig::Markov { seed, .. } => *seed,
        }
    }

    pub fn with_seed(mut self, new_seed: u64) -> SystemConfig {
        match &mut self {
            SystemConfig::Bernoulli { seed, .. } | SystemConfig::Markov { seed, .. } => {
                *seed = new_seed;
            }
        }
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleConfig {
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(i64, i64)>,
    /// Window word (concatenated symbol names) -> row-major d x d matrix.
    pub table: BTreeMap<String, Vec<Vec<f64>>>,
}

/// Splits a concatenated window word into symbol indices, longest name
/// first at each position.
fn parse_window_word(word: &str, alphabet: &[String]) -> Result<Vec<Symbol>> {
    let mut out = Vec::new();
    let mut rest = word;
    'outer: while !rest.is_empty() {
        let mut candidates: Vec<(usize, &String)> = alphabet.iter().enumerate().collect();
        candidates.sort_by_key(|(_, name)| std::cmp::Reverse(name.len()));
        for (idx, name) in candidates {
            if !name.is_empty() && rest.starts_with(name.as_str()) {
                out.push(idx as Symbol);
                rest = &rest[name.len()..];
                continue 'outer;
            }
        }
        return Err(LabError::InvalidConfig(format!(
            "cannot parse window word {word:?} over the alphabet"
        )));
    }
    Ok(out)
}

impl CocycleConfig {
    pub fn build(&self, system: &SymbolicSystem) -> Result<CocycleSpec> {
        let window = self.window.unwrap_or((0, 0));
        let mut entries = Vec::with_capacity(self.table.len());
        for (word, rows) in &self.table {
            let key = parse_window_word(word, system.alphabet())?;
            if rows.len() != self.d || rows.iter().any(|r| r.len() != self.d) {
                return Err(LabError::InvalidConfig(format!(
                    "matrix for {word:?} is not {d}x{d}",
                    d = self.d
                )));
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            entries.push((key, DMatrix::from_row_slice(self.d, self.d, &flat)));
        }
        let spec = CocycleSpec::new(self.d, window, entries)?;
        spec.validate_total(system)?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkewConfig {
    pub z_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(i64, i64)>,
    pub perms: BTreeMap<String, Vec<usize>>,
}

impl SkewConfig {
    pub fn build(&self, system: &SymbolicSystem) -> Result<SkewSystem> {
        let window = self.window.unwrap_or((0, 0));
        let mut perms = Vec::with_capacity(self.perms.len());
        for (word, perm) in &self.perms {
            perms.push((parse_window_word(word, system.alphabet())?, perm.clone()));
        }
        SkewSystem::new(system.clone(), window, self.z_size, perms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_round_trip() {
        let json = r#"{"kind":"bernoulli","alphabet":["a","b"],"probs":[0.5,0.5],"seed":7}"#;
        let cfg: SystemConfig = serde_json::from_str(json).unwrap();
        let sys = cfg.build().unwrap();
        assert_eq!(sys.alphabet(), ["a", "b"]);
        assert_eq!(sys.seed(), 7);
    }

    #[test]
    fn markov_config_builds() {
        let json = r#"{"kind":"markov","alphabet":["a","b"],
            "transition":[[0.9,0.1],[0.2,0.8]],"seed":1}"#;
        let cfg: SystemConfig = serde_json::from_str(json).unwrap();
        assert!(cfg.build().is_ok());
    }

    #[test]
    fn malformed_kind_is_rejected() {
        let json = r#"{"kind":"poisson","alphabet":["a"],"probs":[1.0],"seed":0}"#;
        assert!(serde_json::from_str::<SystemConfig>(json).is_err());
    }

    #[test]
    fn cocycle_config_builds_and_validates_totality() {
        let sys_json = r#"{"kind":"bernoulli","alphabet":["a","b"],"probs":[0.5,0.5],"seed":0}"#;
        let sys: SystemConfig = serde_json::from_str(sys_json).unwrap();
        let sys = sys.build().unwrap();
        let coc_json = r#"{"d":2,"table":
            {"a":[[1.0,1.0],[0.0,1.0]],"b":[[1.0,0.0],[1.0,1.0]]}}"#;
        let coc: CocycleConfig = serde_json::from_str(coc_json).unwrap();
        let spec = coc.build(&sys).unwrap();
        assert_eq!(spec.dimension(), 2);
        assert_eq!(spec.window(), (0, 0));

        let missing = r#"{"d":2,"table":{"a":[[1.0,1.0],[0.0,1.0]]}}"#;
        let coc: CocycleConfig = serde_json::from_str(missing).unwrap();
        assert!(coc.build(&sys).is_err());
    }

    #[test]
    fn two_coordinate_window_words_parse() {
        let sys = SymbolicSystem::uniform(vec!["a".into(), "b".into()], 0).unwrap();
        assert_eq!(parse_window_word("ab", sys.alphabet()).unwrap(), vec![0, 1]);
        assert_eq!(parse_window_word("bb", sys.alphabet()).unwrap(), vec![1, 1]);
        assert!(parse_window_word("ac", sys.alphabet()).is_err());
    }

    #[test]
    fn skew_config_builds() {
        let sys = SymbolicSystem::uniform(vec!["a".into(), "b".into()], 0).unwrap();
        let json = r#"{"z_size":2,"perms":{"a":[1,0],"b":[0,1]}}"#;
        let cfg: SkewConfig = serde_json::from_str(json).unwrap();
        let skew = cfg.build(&sys).unwrap();
        assert_eq!(skew.z_size(), 2);
    }

    #[test]
    fn non_bijective_perm_is_rejected() {
        let sys = SymbolicSystem::uniform(vec!["a".into()], 0).unwrap();
        let json = r#"{"z_size":2,"perms":{"a":[0,0]}}"#;
        let cfg: SkewConfig = serde_json::from_str(json).unwrap();
        assert!(cfg.build(&sys).is_err());
    }
}
