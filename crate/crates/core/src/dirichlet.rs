//! The w-energy form and its contraction property.
//!
//! `E_w(x, y) = sum_k w(k) <∂_k x, ∂_k y>`, which in the chaos basis is the
//! diagonal form `sum_sigma #_w(sigma) x_sigma y_sigma`. At finite
//! truncation the summability condition defining the form domain holds for
//! every vector, so the domain is the whole space and completeness of the
//! `Ê_w` norm is automatic; neither is modelled as a type.

use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::Rng;

use crate::chaos::ChaosVector;
use crate::measure::MAX_SITES;
use crate::operators::annihilate;
use crate::rng::{stream, Purpose};
use crate::{Error, Result};

/// Additive slack for verified inequalities, scaled by `1 + magnitude`.
pub const INEQUALITY_SLACK: f64 = 1e-10;

/// Nonnegative site weights `w(0), .., w(n-1)`.
#[derive(Debug, Clone)]
pub struct WeightFunction {
    values: Vec<f64>,
    table: OnceLock<Arc<Vec<f64>>>,
}

impl PartialEq for WeightFunction {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

impl WeightFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() > MAX_SITES {
            return Err(Error::SiteCount(values.len()));
        }
        for (site, &value) in values.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::Weight { site, value });
            }
        }
        Ok(Self {
            values,
            table: OnceLock::new(),
        })
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        if n == 0 || n > MAX_SITES {
            return Err(Error::SiteCount(n));
        }
        Self::new(vec![value; n])
    }

    /// `w(k) = slope * k + intercept`.
    pub fn affine(n: usize, slope: f64, intercept: f64) -> Result<Self> {
        if n == 0 || n > MAX_SITES {
            return Err(Error::SiteCount(n));
        }
        Self::new((0..n).map(|k| slope * k as f64 + intercept).collect())
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn check_sites(&self, n: usize) -> Result<()> {
        if self.n() == n {
            Ok(())
        } else {
            Err(Error::Mismatch {
                what: "weight sites vs vector sites",
                left: self.n(),
                right: n,
            })
        }
    }

    /// `#_w(sigma) = sum_{j in sigma} w(j)`, zero for the empty set.
    pub fn w_count(&self, sigma: usize) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(j, _)| sigma >> j & 1 == 1)
            .fold(0.0, |acc, (_, w)| acc + w)
    }

    /// `#_w` for every subset mask, built once and shared.
    ///
    /// Entries are accumulated in ascending site order, so they agree
    /// bit for bit with [`WeightFunction::w_count`].
    pub fn counting_table(&self) -> Arc<Vec<f64>> {
        self.table
            .get_or_init(|| {
                let mut table = Vec::with_capacity(1 << self.n());
                table.push(0.0);
                for &w in &self.values {
                    let len = table.len();
                    for m in 0..len {
                        table.push(table[m] + w);
                    }
                }
                Arc::new(table)
            })
            .clone()
    }

    /// `min_{sigma != ∅} #_w(sigma)`, the gap above the constants.
    pub fn spectral_gap(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `E_w(x, y)` through the diagonal form; the production path.
pub fn energy_form(x: &ChaosVector, y: &ChaosVector, w: &WeightFunction) -> Result<f64> {
    x.check_compatible(y)?;
    w.check_sites(x.n())?;
    let table = w.counting_table();
    Ok(x.coeffs()
        .iter()
        .zip(y.coeffs())
        .zip(table.iter())
        .map(|((a, b), m)| m * a * b)
        .sum())
}

/// `E_w(x, y)` summed site by site over annihilated vectors.
pub fn energy_form_definitional(x: &ChaosVector, y: &ChaosVector, w: &WeightFunction) -> Result<f64> {
    x.check_compatible(y)?;
    w.check_sites(x.n())?;
    let mut total = 0.0;
    for (k, &wk) in w.values().iter().enumerate() {
        total += wk * annihilate(x, k)?.inner_product(&annihilate(y, k)?)?;
    }
    Ok(total)
}

/// `‖x‖²_Ê = sum_sigma (#_w(sigma) + 1) x_sigma²`.
pub fn energy_norm_squared(x: &ChaosVector, w: &WeightFunction) -> Result<f64> {
    w.check_sites(x.n())?;
    let table = w.counting_table();
    Ok(x.coeffs()
        .iter()
        .zip(table.iter())
        .map(|(c, m)| (m + 1.0) * c * c)
        .sum())
}

/// A map `C: R -> R` with `C(0) = 0` and Lipschitz constant at most one.
#[derive(Clone)]
pub struct ContractionFunction {
    name: String,
    map: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for ContractionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContractionFunction").field("name", &self.name).finish()
    }
}

const SPOT_CHECK_PAIRS: usize = 4096;

impl ContractionFunction {
    /// Wraps `map` after spot-checking `C(0) = 0` and the Lipschitz bound
    /// on a fixed pseudo-random set of pairs at several length scales.
    pub fn new(name: impl Into<String>, map: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let name = name.into();
        let at_zero = map(0.0);
        if at_zero.abs() > 1e-15 {
            return Err(Error::NotContraction {
                name,
                reason: format!("C(0) = {at_zero}"),
            });
        }
        let mut rng = stream(0, Purpose::Contractions, 0);
        for i in 0..SPOT_CHECK_PAIRS {
            let scale = [1e-6, 1e-2, 1.0, 10.0][i % 4];
            let s: f64 = rng.random_range(-4.0 * scale..=4.0 * scale);
            let t: f64 = rng.random_range(-4.0 * scale..=4.0 * scale);
            let (cs, ct) = (map(s), map(t));
            let bound = (s - t).abs() * (1.0 + 1e-12);
            if (cs - ct).abs().is_nan() || (cs - ct).abs() > bound {
                return Err(Error::NotContraction {
                    name,
                    reason: format!("|C({s}) - C({t})| = {} > |s - t|", (cs - ct).abs()),
                });
            }
        }
        Ok(Self {
            name,
            map: Arc::new(map),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.map)(t)
    }

    /// `min(max(t, 0), 1)`.
    pub fn unit() -> Self {
        Self::new("unit", |t: f64| t.clamp(0.0, 1.0)).expect("catalog entry")
    }

    pub fn absolute() -> Self {
        Self::new("abs", f64::abs).expect("catalog entry")
    }

    /// Clamp to `[-1, 1]`.
    pub fn clamp() -> Self {
        Self::new("clamp", |t: f64| t.clamp(-1.0, 1.0)).expect("catalog entry")
    }

    /// `t / (1 + |t|)`.
    pub fn soft_sign() -> Self {
        Self::new("soft_sign", |t: f64| t / (1.0 + t.abs())).expect("catalog entry")
    }

    /// `alpha * t` for `alpha ∈ [0, 1]`.
    pub fn scaled(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::NotContraction {
                name: format!("scaled({alpha})"),
                reason: "scale must lie in [0, 1]".into(),
            });
        }
        Self::new(format!("scaled({alpha})"), move |t| alpha * t)
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| 0.0).expect("catalog entry")
    }

    /// The shipped test contractions.
    pub fn catalog() -> Vec<Self> {
        vec![
            Self::unit(),
            Self::absolute(),
            Self::clamp(),
            Self::soft_sign(),
            Self::scaled(0.5).expect("catalog entry"),
            Self::zero(),
        ]
    }

    /// Looks up a catalog entry; `scaled(<alpha>)` takes any `alpha ∈ [0, 1]`.
    pub fn by_name(name: &str) -> Result<Self> {
        if let Some(alpha) = name.strip_prefix("scaled(").and_then(|r| r.strip_suffix(')')) {
            let alpha = alpha.trim().parse::<f64>().map_err(|e| Error::NotContraction {
                name: name.into(),
                reason: e.to_string(),
            })?;
            return Self::scaled(alpha);
        }
        match name {
            "unit" => Ok(Self::unit()),
            "abs" => Ok(Self::absolute()),
            "clamp" => Ok(Self::clamp()),
            "soft_sign" => Ok(Self::soft_sign()),
            "zero" => Ok(Self::zero()),
            _ => Err(Error::NotContraction {
                name: name.into(),
                reason: "not in the catalog".into(),
            }),
        }
    }
}

/// `C ∘ x`, evaluated at every sample point and transformed back.
pub fn apply_contraction(x: &ChaosVector, c: &ContractionFunction) -> Result<ChaosVector> {
    Ok(x.to_pointwise().map(|v| c.eval(v))?.to_chaos())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    /// `E_w(C∘x, C∘x)`.
    pub lhs: f64,
    /// `E_w(x, x)`.
    pub rhs: f64,
    pub pass: bool,
    /// `max_k (‖∂_k(C∘x)‖ - ‖∂_k x‖)`; nonpositive up to rounding.
    pub max_site_excess: f64,
    pub sites_pass: bool,
}

impl ContractionReport {
    pub fn passed(&self) -> bool {
        self.pass && self.sites_pass
    }
}

pub fn verify_contraction_property(
    x: &ChaosVector,
    c: &ContractionFunction,
    w: &WeightFunction,
) -> Result<ContractionReport> {
    w.check_sites(x.n())?;
    let contracted = apply_contraction(x, c)?;
    let lhs = energy_form(&contracted, &contracted, w)?;
    let rhs = energy_form(x, x, w)?;
    let mut max_site_excess = f64::NEG_INFINITY;
    for k in 0..x.n() {
        let after = annihilate(&contracted, k)?.norm();
        let before = annihilate(x, k)?.norm();
        max_site_excess = max_site_excess.max(after - before);
    }
    Ok(ContractionReport {
        lhs,
        rhs,
        pass: lhs <= rhs + INEQUALITY_SLACK * (1.0 + rhs),
        max_site_excess,
        sites_pass: max_site_excess <= INEQUALITY_SLACK,
    })
}
