use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dirichlet::{ContractionFunction, WeightFunction};
use crate::measure::{SiteParams, MAX_SITES};
use crate::{Error, Result};

/// Success probabilities: one value for every site, or one per site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbabilitySpec {
    Constant(f64),
    List(Vec<f64>),
}

impl Default for ProbabilitySpec {
    fn default() -> Self {
        Self::Constant(0.5)
    }
}

/// Site weights: `{"constant": c}`, `{"affine": {"a": a, "b": b}}` for
/// `w(k) = a k + b`, or `{"table": [..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSpec {
    Constant(f64),
    Affine { a: f64, b: f64 },
    Table(Vec<f64>),
}

impl Default for WeightSpec {
    fn default() -> Self {
        Self::Constant(1.0)
    }
}

/// Pass/fail thresholds; every report row records the one it used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub car: f64,
    pub round_trip: f64,
    pub parseval_relative: f64,
    pub energy_two_path_relative: f64,
    pub energy_norm_relative: f64,
    pub contraction_slack: f64,
    pub semigroup_norm_relative: f64,
    pub markov: f64,
    pub generator: f64,
    pub fd_ratio_min: f64,
    pub fd_ratio_max: f64,
    pub z_score: f64,
    pub min_pass_fraction: f64,
    pub detailed_balance: f64,
    pub eigenvalue: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            car: 0.0,
            round_trip: 1e-12,
            parseval_relative: 1e-10,
            energy_two_path_relative: 1e-12,
            energy_norm_relative: 1e-12,
            contraction_slack: crate::dirichlet::INEQUALITY_SLACK,
            semigroup_norm_relative: 1e-14,
            markov: crate::semigroup::MARKOV_SLACK,
            generator: 1e-11,
            fd_ratio_min: 5.0,
            fd_ratio_max: 20.0,
            z_score: 3.0,
            min_pass_fraction: 0.99,
            detailed_balance: 1e-12,
            eigenvalue: 1e-12,
        }
    }
}

fn default_t_grid() -> Vec<f64> {
    vec![1.0]
}

fn default_n_paths() -> usize {
    10_000
}

fn default_count() -> usize {
    100
}

/// One JSON experiment description shared by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    #[serde(default)]
    pub p: ProbabilitySpec,
    #[serde(default)]
    pub w: WeightSpec,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    /// Random trials for batteries run without an input vector.
    #[serde(default = "default_count")]
    pub trials: usize,
    /// Monte Carlo queries per time in `markov-verify`.
    #[serde(default = "default_count")]
    pub queries: usize,
    /// Catalog names for `contraction-check`; empty means the whole catalog.
    #[serde(default)]
    pub contractions: Vec<String>,
    /// Vector files, resolved against the config file's directory.
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub input_y: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub params: Arc<SiteParams>,
    pub w: WeightFunction,
    pub t_grid: Vec<f64>,
    pub seed: u64,
    pub n_paths: usize,
    pub trials: usize,
    pub queries: usize,
    pub contractions: Vec<ContractionFunction>,
    pub input: Option<PathBuf>,
    pub input_y: Option<PathBuf>,
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            p: ProbabilitySpec::default(),
            w: WeightSpec::default(),
            t_grid: default_t_grid(),
            seed: 0,
            n_paths: default_n_paths(),
            trials: default_count(),
            queries: default_count(),
            contractions: Vec::new(),
            input: None,
            input_y: None,
            tolerances: Tolerances::default(),
        }
    }

    /// Reads a config file; relative input paths are taken relative to it.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: Self = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for input in [&mut cfg.input, &mut cfg.input_y].into_iter().flatten() {
            if input.is_relative() {
                *input = base.join(&*input);
            }
        }
        Ok(cfg)
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let n = self.n;
        if n == 0 || n > MAX_SITES {
            return Err(Error::config("n", format!("must lie in 1..={MAX_SITES}, got {n}")));
        }
        let p = match &self.p {
            ProbabilitySpec::Constant(p) => vec![*p; n],
            ProbabilitySpec::List(list) if list.len() == n => list.clone(),
            ProbabilitySpec::List(list) => {
                return Err(Error::config("p", format!("expected {n} entries, got {}", list.len())))
            }
        };
        let params = SiteParams::new(p)
            .map_err(|e| Error::config("p", e.to_string()))?
            .shared();
        let w = match &self.w {
            WeightSpec::Constant(c) => WeightFunction::constant(n, *c),
            WeightSpec::Affine { a, b } => WeightFunction::affine(n, *a, *b),
            WeightSpec::Table(t) if t.len() == n => WeightFunction::new(t.clone()),
            WeightSpec::Table(t) => return Err(Error::config("w", format!("expected {n} entries, got {}", t.len()))),
        }
        .map_err(|e| Error::config("w", e.to_string()))?;

        if self.t_grid.is_empty() {
            return Err(Error::config("t_grid", "must not be empty"));
        }
        if let Some(t) = self.t_grid.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::config(
                "t_grid",
                format!("entries must be finite and >= 0, got {t}"),
            ));
        }
        if self.t_grid.windows(2).any(|pair| pair[1] < pair[0]) {
            return Err(Error::config("t_grid", "must be sorted ascending"));
        }
        for (field, value) in [
            ("n_paths", self.n_paths),
            ("trials", self.trials),
            ("queries", self.queries),
        ] {
            if value == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        let contractions = if self.contractions.is_empty() {
            ContractionFunction::catalog()
        } else {
            self.contractions
                .iter()
                .map(|name| ContractionFunction::by_name(name))
                .collect::<Result<_>>()
                .map_err(|e| Error::config("contractions", e.to_string()))?
        };
        let tol = &self.tolerances;
        let fields = [
            ("car", tol.car),
            ("round_trip", tol.round_trip),
            ("parseval_relative", tol.parseval_relative),
            ("energy_two_path_relative", tol.energy_two_path_relative),
            ("energy_norm_relative", tol.energy_norm_relative),
            ("contraction_slack", tol.contraction_slack),
            ("semigroup_norm_relative", tol.semigroup_norm_relative),
            ("markov", tol.markov),
            ("generator", tol.generator),
            ("fd_ratio_min", tol.fd_ratio_min),
            ("fd_ratio_max", tol.fd_ratio_max),
            ("z_score", tol.z_score),
            ("min_pass_fraction", tol.min_pass_fraction),
            ("detailed_balance", tol.detailed_balance),
            ("eigenvalue", tol.eigenvalue),
        ];
        if let Some((name, value)) = fields.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::config(
                format!("tolerances.{name}"),
                format!("must be finite and >= 0, got {value}"),
            ));
        }
        if tol.min_pass_fraction > 1.0 {
            return Err(Error::config("tolerances.min_pass_fraction", "must not exceed 1"));
        }

        Ok(Resolved {
            params,
            w,
            t_grid: self.t_grid.clone(),
            seed: self.seed,
            n_paths: self.n_paths,
            trials: self.trials,
            queries: self.queries,
            contractions,
            input: self.input.clone(),
            input_y: self.input_y.clone(),
            tolerances: self.tolerances.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> Result<Resolved> {
        serde_json::from_str::<ExperimentConfig>(json)?.resolve()
    }

    fn field_of(err: Error) -> String {
        match err {
            Error::Config { field, .. } => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn defaults() {
        let r = parse(r#"{"n": 3}"#).unwrap();
        assert_eq!(r.params.p(), &[0.5; 3]);
        assert_eq!(r.w.values(), &[1.0; 3]);
        assert_eq!(r.t_grid, vec![1.0]);
        assert_eq!(r.contractions.len(), 6);
        assert_eq!(r.tolerances, Tolerances::default());
    }

    #[test]
    fn weight_and_probability_specs() {
        let r = parse(r#"{"n": 3, "p": [0.2, 0.5, 0.9], "w": {"affine": {"a": 2.0, "b": 0.5}}}"#).unwrap();
        assert_eq!(r.params.p(), &[0.2, 0.5, 0.9]);
        assert_eq!(r.w.values(), &[0.5, 2.5, 4.5]);
        let r = parse(r#"{"n": 2, "w": {"table": [0.0, 3.0]}, "tolerances": {"z_score": 4.0}}"#).unwrap();
        assert_eq!(r.w.values(), &[0.0, 3.0]);
        assert_eq!(r.tolerances.z_score, 4.0);
        assert_eq!(r.tolerances.car, 0.0);
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(field_of(parse(r#"{"n": 0}"#).unwrap_err()), "n");
        assert_eq!(field_of(parse(r#"{"n": 2, "p": [0.5]}"#).unwrap_err()), "p");
        assert_eq!(field_of(parse(r#"{"n": 2, "p": 1.5}"#).unwrap_err()), "p");
        assert_eq!(field_of(parse(r#"{"n": 2, "w": {"constant": -1}}"#).unwrap_err()), "w");
        assert_eq!(
            field_of(parse(r#"{"n": 2, "t_grid": [1.0, 0.5]}"#).unwrap_err()),
            "t_grid"
        );
        assert_eq!(field_of(parse(r#"{"n": 2, "t_grid": [-1.0]}"#).unwrap_err()), "t_grid");
        assert_eq!(field_of(parse(r#"{"n": 2, "n_paths": 0}"#).unwrap_err()), "n_paths");
        assert_eq!(
            field_of(parse(r#"{"n": 2, "contractions": ["bogus"]}"#).unwrap_err()),
            "contractions"
        );
        assert_eq!(
            field_of(parse(r#"{"n": 2, "tolerances": {"markov": -1}}"#).unwrap_err()),
            "tolerances.markov"
        );
        assert!(matches!(parse(r#"{"n": 2, "bogus": 1}"#), Err(Error::Json(_))));
        assert!(matches!(
            parse(r#"{"n": 2, "tolerances": {"bogus": 1}}"#),
            Err(Error::Json(_))
        ));
    }
}
