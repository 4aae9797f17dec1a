use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Alignment parameters. Keys accepted by [`Config::set`] are the field
/// names (`L_max` and `l_max` both work).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Config {
    /// Relation similarity assumed for every pair before the first
    /// subrelation step.
    pub theta_r: f64,
    /// Minimum string-literal similarity.
    pub theta_s: f64,
    /// Entity matches must score strictly above this to be reported.
    pub theta_e: f64,
    /// Benefit of the doubt multiplier for subrelation scores.
    pub alpha: f64,
    /// Stop once an iteration raises the total score by less than this.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Longest matched fact list considered per entity pair.
    pub l_max: usize,
    /// Samples per relation-list functionality estimate.
    pub fun_budget: u32,
    /// Relation directions at or above this are reported as SUB/SUP/EQV.
    pub rel_report_threshold: f64,
    pub rng_seed: u64,
    /// Largest `(H, t)` pair count enumerated exactly.
    pub fun_exact_cap: u64,
    /// String matches kept per KG1 literal.
    pub top_k: usize,
    pub candidate_cap: usize,
    /// Counterpart heads with more incident facts are skipped during
    /// candidate counting.
    pub hub_cap: usize,
    /// Keep only row-and-column maximal entity pairs between iterations.
    pub pruning: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            theta_r: 0.1,
            theta_s: 0.7,
            theta_e: 0.1,
            alpha: 3.0,
            epsilon: 0.01,
            max_iters: 10,
            l_max: 8,
            fun_budget: 50,
            rel_report_threshold: 0.1,
            rng_seed: 0,
            fun_exact_cap: 1000,
            top_k: 10,
            candidate_cap: 50,
            hub_cap: 1000,
            pruning: true,
        }
    }
}

fn parse<T: core::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        for (k, v) in [
            ("theta_r", self.theta_r),
            ("theta_s", self.theta_s),
            ("theta_e", self.theta_e),
            ("rel_report_threshold", self.rel_report_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{k} must be in [0, 1], got {v}")));
            }
        }
        if !(self.alpha.is_finite() && self.alpha >= 1.0) {
            return Err(Error::Config(format!("alpha must be >= 1, got {}", self.alpha)));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::Config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if self.l_max == 0 {
            return Err(Error::Config("L_max must be >= 1".into()));
        }
        if self.fun_budget == 0 {
            return Err(Error::Config("fun_budget must be >= 1".into()));
        }
        Ok(())
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "theta_r" => self.theta_r = parse(key, value)?,
            "theta_s" => self.theta_s = parse(key, value)?,
            "theta_e" => self.theta_e = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "max_iters" => self.max_iters = parse(key, value)?,
            "L_max" | "l_max" => self.l_max = parse(key, value)?,
            "fun_budget" => self.fun_budget = parse(key, value)?,
            "rel_report_threshold" => self.rel_report_threshold = parse(key, value)?,
            "rng_seed" => self.rng_seed = parse(key, value)?,
            "fun_exact_cap" => self.fun_exact_cap = parse(key, value)?,
            "top_k" => self.top_k = parse(key, value)?,
            "candidate_cap" => self.candidate_cap = parse(key, value)?,
            "hub_cap" => self.hub_cap = parse(key, value)?,
            "pruning" => self.pruning = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// `(key, value)` pairs in declaration order; `set` accepts every one.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        alloc::vec![
            ("theta_r", self.theta_r.to_string()),
            ("theta_s", self.theta_s.to_string()),
            ("theta_e", self.theta_e.to_string()),
            ("alpha", self.alpha.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("max_iters", self.max_iters.to_string()),
            ("L_max", self.l_max.to_string()),
            ("fun_budget", self.fun_budget.to_string()),
            ("rel_report_threshold", self.rel_report_threshold.to_string()),
            ("rng_seed", self.rng_seed.to_string()),
            ("fun_exact_cap", self.fun_exact_cap.to_string()),
            ("top_k", self.top_k.to_string()),
            ("candidate_cap", self.candidate_cap.to_string()),
            ("hub_cap", self.hub_cap.to_string()),
            ("pruning", self.pruning.to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_valid() {
        let c = Config::default();
        c.validate().unwrap();
        assert_eq!((c.theta_r, c.alpha, c.theta_s, c.theta_e, c.epsilon), (0.1, 3.0, 0.7, 0.1, 0.01));
    }

    #[test]
    fn entries_round_trip() {
        let mut c = Config::default();
        c.set("alpha", "2.5").unwrap();
        c.set("L_max", "4").unwrap();
        c.set("pruning", "false").unwrap();
        let mut d = Config::default();
        for (k, v) in c.entries() {
            d.set(k, &v).unwrap();
        }
        assert_eq!(c, d);
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = Config::default();
        assert!(c.set("nope", "1").is_err());
        assert!(c.set("alpha", "x").is_err());
        c.set("alpha", "0.5").unwrap();
        assert!(c.validate().is_err());
        let mut c = Config::default();
        c.set("theta_e", "1.5").unwrap();
        assert!(c.validate().is_err());
    }
}
