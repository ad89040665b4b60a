//! Functionals in the chaos basis and at sample points.
//!
//! Index `m` of a [`ChaosVector`] holds `<Z_sigma, xi>` for the subset
//! `sigma` whose members are the set bits of `m`; index `m` of a
//! [`PointwiseVector`] holds `xi(omega)` for the sample point with bits `m`.
//! Since `Z_sigma` is the product of the single-site variables, the change
//! of representation factors into one 2x2 butterfly per site.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::measure::{SamplePoint, SiteParams};
use crate::{Error, Result};

/// Transforms on at least this many entries run their butterflies on the
/// rayon pool.
const PARALLEL_LEN: usize = 1 << 14;

fn check_entries(values: &[f64], dim: usize, what: &'static str) -> Result<()> {
    if values.len() != dim {
        return Err(Error::Mismatch {
            what,
            left: values.len(),
            right: dim,
        });
    }
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

fn same_params(a: &Arc<SiteParams>, b: &Arc<SiteParams>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::ParamsMismatch)
    }
}

/// Coefficients of a functional in the orthonormal basis `{Z_sigma}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosVector {
    params: Arc<SiteParams>,
    coeffs: Vec<f64>,
}

impl ChaosVector {
    pub fn new(params: Arc<SiteParams>, coeffs: Vec<f64>) -> Result<Self> {
        check_entries(&coeffs, params.dim(), "coefficient count vs 2^n")?;
        Ok(Self { params, coeffs })
    }

    pub(crate) fn from_raw(params: Arc<SiteParams>, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(coeffs.len(), params.dim());
        Self { params, coeffs }
    }

    pub fn zeros(params: Arc<SiteParams>) -> Self {
        let dim = params.dim();
        Self::from_raw(params, vec![0.0; dim])
    }

    /// The basis element `Z_sigma`.
    pub fn basis(params: Arc<SiteParams>, sigma: usize) -> Result<Self> {
        if sigma >= params.dim() {
            return Err(Error::Mismatch {
                what: "subset mask vs 2^n",
                left: sigma,
                right: params.dim(),
            });
        }
        let mut x = Self::zeros(params);
        x.coeffs[sigma] = 1.0;
        Ok(x)
    }

    /// Coefficients drawn uniformly from `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(params: Arc<SiteParams>, rng: &mut R) -> Self {
        let coeffs = (0..params.dim()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        Self::from_raw(params, coeffs)
    }

    pub fn params(&self) -> &Arc<SiteParams> {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        same_params(&self.params, &other.params)
    }

    /// `<x, y>` in `L^2(Omega)`, which by orthonormality is the Euclidean
    /// product of the coefficients.
    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }

    pub fn norm_squared(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(Self::from_raw(self.params.clone(), coeffs))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(max_abs_diff(&self.coeffs, &other.coeffs))
    }

    pub fn to_pointwise(&self) -> PointwiseVector {
        let mut values = self.coeffs.clone();
        to_pointwise_in_place(&self.params, &mut values);
        PointwiseVector::from_raw(self.params.clone(), values)
    }
}

/// Values of a functional at every sample point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseVector {
    params: Arc<SiteParams>,
    values: Vec<f64>,
}

impl PointwiseVector {
    pub fn new(params: Arc<SiteParams>, values: Vec<f64>) -> Result<Self> {
        check_entries(&values, params.dim(), "value count vs 2^n")?;
        Ok(Self { params, values })
    }

    pub(crate) fn from_raw(params: Arc<SiteParams>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), params.dim());
        Self { params, values }
    }

    pub fn constant(params: Arc<SiteParams>, value: f64) -> Result<Self> {
        let dim = params.dim();
        Self::new(params, vec![value; dim])
    }

    /// Indicator of a single sample point.
    pub fn indicator(params: Arc<SiteParams>, omega: SamplePoint) -> Result<Self> {
        let omega = SamplePoint::new(omega.bits(), params.n())?;
        let mut values = vec![0.0; params.dim()];
        values[omega.index()] = 1.0;
        Ok(Self::from_raw(params, values))
    }

    /// Values drawn uniformly from `[0, 1]`.
    pub fn random_unit_interval<R: Rng + ?Sized>(params: Arc<SiteParams>, rng: &mut R) -> Self {
        let values = (0..params.dim()).map(|_| rng.random_range(0.0..=1.0)).collect();
        Self::from_raw(params, values)
    }

    pub fn params(&self) -> &Arc<SiteParams> {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, omega: SamplePoint) -> f64 {
        self.values[omega.index()]
    }

    /// `E[x y]` under the product measure, summed point by point.
    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        same_params(&self.params, &other.params)?;
        Ok(self
            .params
            .point_masses()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| w * a * b)
            .sum())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        same_params(&self.params, &other.params)?;
        Ok(max_abs_diff(&self.values, &other.values))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Pointwise composition `f ∘ x`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.params.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn to_chaos(&self) -> ChaosVector {
        let mut coeffs = self.values.clone();
        to_chaos_in_place(&self.params, &mut coeffs);
        ChaosVector::from_raw(self.params.clone(), coeffs)
    }

    /// `omega ↦ sqrt(p_k q_k) [x(omega_k^+) - x(omega_k^-)]`, the pointwise
    /// form of the site-`k` annihilation operator.
    pub fn difference_operator(&self, site: usize) -> Result<Self> {
        self.params.check_site(site)?;
        let bit = 1usize << site;
        let scale = self.params.spread()[site];
        let values = (0..self.values.len())
            .map(|m| scale * (self.values[m | bit] - self.values[m & !bit]))
            .collect();
        Ok(Self::from_raw(self.params.clone(), values))
    }
}

/// `omega_k^+`: coordinate `k` forced to `+1`.
pub fn flip_plus(params: &SiteParams, omega: SamplePoint, site: usize) -> Result<SamplePoint> {
    params.check_site(site)?;
    Ok(omega.with_site(site, true))
}

/// `omega_k^-`: coordinate `k` forced to `-1`.
pub fn flip_minus(params: &SiteParams, omega: SamplePoint, site: usize) -> Result<SamplePoint> {
    params.check_site(site)?;
    Ok(omega.with_site(site, false))
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Runs `op(lo, hi)` over every pair of entries that differ only in bit `site`.
fn butterfly_pass(data: &mut [f64], site: usize, op: impl Fn(&mut f64, &mut f64) + Sync) {
    let half = 1usize << site;
    let pair = |block: &mut [f64]| {
        let (lo, hi) = block.split_at_mut(half);
        lo.iter_mut().zip(hi).for_each(|(a, b)| op(a, b));
    };
    if data.len() < PARALLEL_LEN {
        data.chunks_exact_mut(2 * half).for_each(pair);
    } else if data.len() / (2 * half) >= 64 {
        data.par_chunks_exact_mut(2 * half).for_each(pair);
    } else {
        for block in data.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            lo.par_iter_mut().zip(hi).for_each(|(a, b)| op(a, b));
        }
    }
}

/// Chaos coefficients to point values, in place.
///
/// Pass `k` maps the coefficient pair `(a, b)` (without / with site `k`) to
/// the values `a - b / theta_k` at `omega(k) = -1` and `a + b theta_k` at
/// `omega(k) = +1`.
pub fn to_pointwise_in_place(params: &SiteParams, data: &mut [f64]) {
    assert_eq!(data.len(), params.dim());
    for k in 0..params.n() {
        let (theta, inv_theta) = (params.theta()[k], params.inv_theta()[k]);
        butterfly_pass(data, k, |lo, hi| {
            let (a, b) = (*lo, *hi);
            *lo = a - b * inv_theta;
            *hi = a + b * theta;
        });
    }
}

/// Point values to chaos coefficients, in place; inverse of
/// [`to_pointwise_in_place`].
///
/// Pass `k` maps `(v-, v+)` to `(p_k v+ + q_k v-, sqrt(p_k q_k) (v+ - v-))`.
pub fn to_chaos_in_place(params: &SiteParams, data: &mut [f64]) {
    assert_eq!(data.len(), params.dim());
    for k in 0..params.n() {
        let (p, q, s) = (params.p()[k], params.q()[k], params.spread()[k]);
        butterfly_pass(data, k, |lo, hi| {
            let (down, up) = (*lo, *hi);
            *lo = p * up + q * down;
            *hi = s * (up - down);
        });
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    /// `sum_sigma c_sigma prod_{j in sigma} Z_j(omega)` by direct summation.
    pub(crate) fn naive_pointwise(x: &ChaosVector) -> Vec<f64> {
        let params = x.params();
        (0..params.dim())
            .map(|omega| {
                let omega = SamplePoint::new(omega as u32, params.n()).unwrap();
                x.coeffs()
                    .iter()
                    .enumerate()
                    .map(|(sigma, c)| {
                        let z: f64 = (0..params.n())
                            .filter(|j| sigma >> j & 1 == 1)
                            .map(|j| params.z_value(j, omega).unwrap())
                            .product();
                        c * z
                    })
                    .sum()
            })
            .collect()
    }

    fn skewed(n: usize) -> Arc<SiteParams> {
        let p = (0..n).map(|k| 0.1 + 0.8 * ((k * 7 + 3) % 11) as f64 / 10.0).collect();
        SiteParams::new(p).unwrap().shared()
    }

    #[test]
    fn single_site_transform_values() {
        let params = SiteParams::new(vec![0.8]).unwrap().shared();
        let x = ChaosVector::new(params.clone(), vec![1.0, 1.0]).unwrap();
        let v = x.to_pointwise();
        assert!((v.values()[0] + 1.0).abs() < 1e-15);
        assert!((v.values()[1] - 1.5).abs() < 1e-15);

        let v = PointwiseVector::new(params, vec![-1.0, 1.5]).unwrap();
        let c = v.to_chaos();
        assert!((c.coeffs()[0] - 1.0).abs() < 1e-15);
        assert!((c.coeffs()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_function_is_empty_set_coefficient() {
        let params = skewed(5);
        let one = ChaosVector::basis(params.clone(), 0).unwrap().to_pointwise();
        assert!(one.values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let back = PointwiseVector::constant(params, 1.0).unwrap().to_chaos();
        assert!((back.coeffs()[0] - 1.0).abs() < 1e-15);
        assert!(back.coeffs()[1..].iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn butterfly_matches_naive_evaluation() {
        for n in [1, 3, 6, 10] {
            let params = skewed(n);
            let mut rng = stream(n as u64, Purpose::Vectors, 0);
            let x = ChaosVector::random(params, &mut rng);
            let fast = x.to_pointwise();
            assert!(max_abs_diff(fast.values(), &naive_pointwise(&x)) < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn parallel_and_serial_passes_agree() {
        let params = skewed(16);
        let mut rng = stream(3, Purpose::Vectors, 0);
        let x = ChaosVector::random(params.clone(), &mut rng);
        let fast = x.to_pointwise();
        // Same butterflies evaluated one pass at a time through the serial path.
        let mut serial = x.coeffs().to_vec();
        for k in 0..params.n() {
            let (theta, inv_theta) = (params.theta()[k], params.inv_theta()[k]);
            let half = 1 << k;
            for block in serial.chunks_exact_mut(2 * half) {
                let (lo, hi) = block.split_at_mut(half);
                for (a, b) in lo.iter_mut().zip(hi) {
                    let (u, v) = (*a, *b);
                    *a = u - v * inv_theta;
                    *b = u + v * theta;
                }
            }
        }
        assert_eq!(fast.values(), &serial[..]);
    }

    #[test]
    fn round_trip_and_parseval() {
        for n in [1, 4, 10, 14] {
            let params = skewed(n);
            let mut rng = stream(n as u64, Purpose::Vectors, 1);
            let x = ChaosVector::random(params.clone(), &mut rng);
            let y = ChaosVector::random(params, &mut rng);
            let back = x.to_pointwise().to_chaos();
            assert!(back.max_abs_diff(&x).unwrap() < 1e-12);

            let chaos_side = x.inner_product(&y).unwrap();
            let point_side = x.to_pointwise().inner_product(&y.to_pointwise()).unwrap();
            assert!((chaos_side - point_side).abs() <= 1e-10 * chaos_side.abs().max(1.0));
            let norm = x.norm_squared();
            let point_norm = x.to_pointwise().inner_product(&x.to_pointwise()).unwrap();
            assert!((norm - point_norm).abs() <= 1e-10 * norm);
        }
    }

    #[test]
    fn basis_is_orthonormal() {
        let params = skewed(3);
        for s in 0..8 {
            for t in 0..8 {
                let zs = ChaosVector::basis(params.clone(), s).unwrap();
                let zt = ChaosVector::basis(params.clone(), t).unwrap();
                assert_eq!(zs.inner_product(&zt).unwrap(), (s == t) as u8 as f64);
                // Orthonormality also holds against the measure itself.
                let point = zs.to_pointwise().inner_product(&zt.to_pointwise()).unwrap();
                assert!((point - (s == t) as u8 as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mismatched_params_are_rejected() {
        let a = ChaosVector::zeros(skewed(3));
        let b = ChaosVector::zeros(SiteParams::uniform(3, 0.5).unwrap().shared());
        let c = ChaosVector::zeros(skewed(4));
        assert!(matches!(a.inner_product(&b), Err(Error::ParamsMismatch)));
        assert!(a.inner_product(&c).is_err());
        // Equal but separately allocated parameters are compatible.
        assert!(a.inner_product(&ChaosVector::zeros(skewed(3))).is_ok());
    }

    #[test]
    fn construction_checks() {
        let params = skewed(2);
        assert!(matches!(
            ChaosVector::new(params.clone(), vec![0.0; 3]),
            Err(Error::Mismatch { .. })
        ));
        assert!(matches!(
            PointwiseVector::new(params.clone(), vec![0.0, f64::NAN, 0.0, 0.0]),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(ChaosVector::basis(params, 4).is_err());
    }

    #[test]
    fn flips() {
        let params = SiteParams::uniform(3, 0.5).unwrap();
        let omega = params.point(0b010).unwrap();
        assert_eq!(flip_plus(&params, omega, 0).unwrap().bits(), 0b011);
        assert_eq!(flip_minus(&params, omega, 0).unwrap().bits(), 0b010);
        assert_eq!(flip_plus(&params, omega, 1).unwrap(), omega);
        let down = flip_minus(&params, flip_plus(&params, omega, 2).unwrap(), 2).unwrap();
        assert!(!down.is_up(2));
        assert_eq!(down.bits() & 0b011, omega.bits() & 0b011);
        assert!(matches!(
            flip_plus(&params, omega, 3),
            Err(Error::SiteOutOfRange { .. })
        ));
    }

    #[test]
    fn difference_operator_on_simple_functionals() {
        let params = skewed(4);
        for k in 0..4 {
            let zk = ChaosVector::basis(params.clone(), 1 << k).unwrap().to_pointwise();
            let d = zk.difference_operator(k).unwrap();
            assert!(d.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
        }
        let constant = PointwiseVector::constant(params.clone(), 3.5).unwrap();
        assert!(constant
            .difference_operator(2)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        assert!(constant.difference_operator(4).is_err());

        // Output does not depend on coordinate k.
        let mut rng = stream(1, Purpose::Vectors, 9);
        let v = PointwiseVector::random_unit_interval(params, &mut rng);
        let d = v.difference_operator(1).unwrap();
        for m in 0..16 {
            assert_eq!(d.values()[m], d.values()[m ^ 0b10]);
        }
    }

    #[test]
    fn transforms_are_linear() {
        let params = skewed(8);
        let mut rng = stream(2, Purpose::Vectors, 4);
        let x = ChaosVector::random(params.clone(), &mut rng);
        let y = ChaosVector::random(params, &mut rng);
        let (alpha, beta) = (0.7, -1.3);
        let lhs = x.combine(alpha, &y, beta).unwrap().to_pointwise();
        let (tx, ty) = (x.to_pointwise(), y.to_pointwise());
        let rhs: Vec<f64> = tx
            .values()
            .iter()
            .zip(ty.values())
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        assert!(max_abs_diff(lhs.values(), &rhs) < 1e-12);
    }
}
