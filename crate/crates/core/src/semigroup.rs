//! The w-Ornstein-Uhlenbeck semigroup `P_t = exp(-t N_w)`.
//!
//! `P_t` is diagonal in the chaos basis with factors `exp(-t #_w(sigma))`,
//! so every application is a single `O(2^n)` sweep over the precomputed
//! counting table.

use crate::chaos::ChaosVector;
use crate::dirichlet::{energy_form, WeightFunction};
use crate::operators::number_operator;
use crate::{Error, Result};

/// Pointwise slack when checking `0 <= P_t x <= 1`.
pub const MARKOV_SLACK: f64 = 1e-10;

/// Slack on the `[0, 1]` (or `>= 0`) precondition of the input. Inputs
/// given in the chaos basis pick up transform rounding before the check.
pub const PRECONDITION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupQuery {
    t: f64,
    w: WeightFunction,
}

impl SemigroupQuery {
    pub fn new(t: f64, w: WeightFunction) -> Result<Self> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidTime(t));
        }
        Ok(Self { t, w })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn w(&self) -> &WeightFunction {
        &self.w
    }

    pub fn at(&self, t: f64) -> Result<Self> {
        Self::new(t, self.w.clone())
    }
}

/// `P_t x`.
pub fn evolve(x: &ChaosVector, q: &SemigroupQuery) -> Result<ChaosVector> {
    let mut out = x.clone();
    evolve_in_place(&mut out, q)?;
    Ok(out)
}

pub fn evolve_in_place(x: &mut ChaosVector, q: &SemigroupQuery) -> Result<()> {
    q.w.check_sites(x.n())?;
    let table = q.w.counting_table();
    let t = q.t;
    for (c, m) in x.coeffs_mut().iter_mut().zip(table.iter()) {
        *c *= (-t * m).exp();
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupLawReport {
    /// `max |P_s P_t x - P_{s+t} x|`.
    pub composition_deviation: f64,
    /// Largest of `‖P_u x‖ / ‖x‖` over `u ∈ {s, t, s + t}`; 0 for `x = 0`.
    pub contraction_ratio: f64,
    /// `(h, ‖P_h x - x‖)` on a decreasing grid of `h`.
    pub continuity: Vec<(f64, f64)>,
    /// Whether the continuity distances are non-increasing as `h` shrinks.
    pub continuity_decreasing: bool,
}

/// Grid for the strong-continuity trend, largest first.
pub const CONTINUITY_GRID: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

pub fn check_semigroup_laws(w: &WeightFunction, s: f64, t: f64, x: &ChaosVector) -> Result<SemigroupLawReport> {
    let qs = SemigroupQuery::new(s, w.clone())?;
    let qt = qs.at(t)?;
    let qst = qs.at(s + t)?;
    let composed = evolve(&evolve(x, &qt)?, &qs)?;
    let direct = evolve(x, &qst)?;
    let composition_deviation = composed.max_abs_diff(&direct)?;

    let norm = x.norm();
    let contraction_ratio = if norm == 0.0 {
        0.0
    } else {
        [&qs, &qt, &qst]
            .iter()
            .map(|q| evolve(x, q).map(|y| y.norm() / norm))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max)
    };

    let continuity = CONTINUITY_GRID
        .iter()
        .map(|&h| Ok((h, evolve(x, &qs.at(h)?)?.combine(1.0, x, -1.0)?.norm())))
        .collect::<Result<Vec<_>>>()?;
    let continuity_decreasing = continuity.windows(2).all(|pair| pair[1].1 <= pair[0].1);

    Ok(SemigroupLawReport {
        composition_deviation,
        contraction_ratio,
        continuity,
        continuity_decreasing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorReport {
    /// `E_w(x, y)`.
    pub lhs: f64,
    /// `<x, N_w y>`.
    pub rhs: f64,
    pub deviation: f64,
}

pub fn check_generator_relation(x: &ChaosVector, y: &ChaosVector, w: &WeightFunction) -> Result<GeneratorReport> {
    let lhs = energy_form(x, y, w)?;
    let rhs = x.inner_product(&number_operator(y, w)?)?;
    Ok(GeneratorReport {
        lhs,
        rhs,
        deviation: (lhs - rhs).abs(),
    })
}

/// `‖(x - P_t x) / t - N_w x‖` for each `t` in `grid`.
pub fn generator_difference_quotients(x: &ChaosVector, w: &WeightFunction, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let nx = number_operator(x, w)?;
    grid.iter()
        .map(|&t| {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidTime(t));
            }
            let pt = evolve(x, &SemigroupQuery::new(t, w.clone())?)?;
            let quotient = x.combine(1.0 / t, &pt, -1.0 / t)?;
            Ok((t, quotient.combine(1.0, &nx, -1.0)?.norm()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovReport {
    pub min_value: f64,
    pub max_value: f64,
    pub pass: bool,
}

fn check_interval(x: &ChaosVector, lo: f64, hi: f64) -> Result<()> {
    let values = x.to_pointwise();
    let bad = values
        .values()
        .iter()
        .position(|&v| v < lo - PRECONDITION_SLACK || v > hi + PRECONDITION_SLACK);
    match bad {
        Some(point) => Err(Error::OutOfOrderInterval {
            point,
            value: values.values()[point],
            lo,
            hi,
        }),
        None => Ok(()),
    }
}

/// Evolves a `[0, 1]`-valued functional and reports the range of the result.
pub fn check_markov_property(x: &ChaosVector, q: &SemigroupQuery) -> Result<MarkovReport> {
    check_interval(x, 0.0, 1.0)?;
    let (min_value, max_value) = evolve(x, q)?.to_pointwise().min_max();
    Ok(MarkovReport {
        min_value,
        max_value,
        pass: min_value >= -MARKOV_SLACK && max_value <= 1.0 + MARKOV_SLACK,
    })
}

/// Evolves a nonnegative functional and checks the result stays nonnegative.
pub fn check_positivity_preservation(x: &ChaosVector, q: &SemigroupQuery) -> Result<bool> {
    check_interval(x, 0.0, f64::INFINITY)?;
    let (min_value, _) = evolve(x, q)?.to_pointwise().min_max();
    Ok(min_value >= -MARKOV_SLACK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::PointwiseVector;
    use crate::measure::SiteParams;
    use crate::rng::{stream, Purpose};
    use std::sync::Arc;

    fn params(n: usize) -> Arc<SiteParams> {
        let p = (0..n).map(|k| 0.25 + 0.5 * ((k * 4 + 1) % 5) as f64 / 4.0).collect();
        SiteParams::new(p).unwrap().shared()
    }

    fn random(n: usize, index: u64) -> ChaosVector {
        let mut rng = stream(13, Purpose::Vectors, index);
        ChaosVector::random(params(n), &mut rng)
    }

    #[test]
    fn evolution_factors() {
        let ps = params(2);
        let w = WeightFunction::new(vec![2.0, 1.0]).unwrap();
        let z0 = ChaosVector::basis(ps.clone(), 0b01).unwrap();
        let out = evolve(&z0, &SemigroupQuery::new(0.5, w.clone()).unwrap()).unwrap();
        assert!((out.coeffs()[1] - (-1.0f64).exp()).abs() < 1e-16);
        assert!((out.coeffs()[1] - 0.367879).abs() < 1e-6);

        let x = random(2, 0);
        assert_eq!(evolve(&x, &SemigroupQuery::new(0.0, w.clone()).unwrap()).unwrap(), x);

        let constant = ChaosVector::basis(ps, 0).unwrap();
        for t in [0.1, 3.0, 100.0] {
            assert_eq!(
                evolve(&constant, &SemigroupQuery::new(t, w.clone()).unwrap()).unwrap(),
                constant
            );
        }
    }

    #[test]
    fn query_validation() {
        let w = WeightFunction::constant(2, 1.0).unwrap();
        assert!(matches!(
            SemigroupQuery::new(-0.1, w.clone()),
            Err(Error::InvalidTime(_))
        ));
        assert!(SemigroupQuery::new(f64::NAN, w.clone()).is_err());
        let q = SemigroupQuery::new(1.0, WeightFunction::constant(3, 1.0).unwrap()).unwrap();
        assert!(matches!(evolve(&random(2, 1), &q), Err(Error::Mismatch { .. })));
    }

    #[test]
    fn semigroup_laws() {
        let x = random(9, 2);
        let w = WeightFunction::affine(9, 0.2, 0.3).unwrap();
        let report = check_semigroup_laws(&w, 0.3, 0.3, &x).unwrap();
        assert!(report.composition_deviation < 1e-12);
        assert!(report.contraction_ratio <= 1.0);
        assert!(report.continuity_decreasing);
        assert!(report.continuity.last().unwrap().1 < 1e-4);

        let at_zero = check_semigroup_laws(&w, 0.0, 0.0, &x).unwrap();
        assert_eq!(at_zero.composition_deviation, 0.0);
        for t in [0.1, 1.0, 10.0] {
            let r = check_semigroup_laws(&w, t, t, &x).unwrap();
            assert!(r.contraction_ratio <= 1.0);
        }
    }

    #[test]
    fn evolution_is_symmetric() {
        let (x, y) = (random(8, 3), random(8, 4));
        let q = SemigroupQuery::new(0.8, WeightFunction::affine(8, 0.1, 0.5).unwrap()).unwrap();
        let lhs = evolve(&x, &q).unwrap().inner_product(&y).unwrap();
        let rhs = x.inner_product(&evolve(&y, &q).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn generator_relation() {
        let ps = params(4);
        let w = WeightFunction::new(vec![0.5, 1.5, 0.0, 2.0]).unwrap();
        for sigma in 0..16 {
            let z = ChaosVector::basis(ps.clone(), sigma).unwrap();
            let r = check_generator_relation(&z, &z, &w).unwrap();
            assert_eq!(r.lhs, w.w_count(sigma));
            assert_eq!(r.rhs, w.w_count(sigma));
        }
        let r = check_generator_relation(&random(4, 5), &ChaosVector::basis(ps, 0).unwrap(), &w).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));

        let w12 = WeightFunction::affine(12, 0.1, 0.2).unwrap();
        let r = check_generator_relation(&random(12, 6), &random(12, 7), &w12).unwrap();
        assert!(r.deviation < 1e-11);
    }

    #[test]
    fn difference_quotients_shrink_linearly() {
        let x = random(8, 8);
        let w = WeightFunction::affine(8, 0.1, 0.5).unwrap();
        let d = generator_difference_quotients(&x, &w, &[1e-2, 1e-3, 1e-4]).unwrap();
        for pair in d.windows(2) {
            let ratio = pair[0].1 / pair[1].1;
            assert!((5.0..=20.0).contains(&ratio), "ratio {ratio}");
        }
        assert!(generator_difference_quotients(&x, &w, &[0.0]).is_err());
    }

    #[test]
    fn markov_property_examples() {
        let ps = params(5);
        let w = WeightFunction::affine(5, 0.7, 0.1).unwrap();
        let one = ChaosVector::basis(ps.clone(), 0).unwrap();
        let q = SemigroupQuery::new(1.0, w.clone()).unwrap();
        let r = check_markov_property(&one, &q).unwrap();
        assert!(r.pass && (r.min_value - 1.0).abs() < 1e-14 && (r.max_value - 1.0).abs() < 1e-14);

        let omega = ps.point(0b10110).unwrap();
        let indicator = PointwiseVector::indicator(ps.clone(), omega).unwrap().to_chaos();
        for t in [0.1, 1.0] {
            let q = q.at(t).unwrap();
            assert!(check_markov_property(&indicator, &q).unwrap().pass);
            assert!(check_positivity_preservation(&indicator, &q).unwrap());
            let scaled = indicator.combine(7.5, &indicator, 0.0).unwrap();
            assert!(check_positivity_preservation(&scaled, &q).unwrap());
        }

        let zero = ChaosVector::zeros(ps.clone());
        assert!(check_positivity_preservation(&zero, &q).unwrap());
        assert_eq!(evolve(&zero, &q).unwrap(), zero);
    }

    #[test]
    fn markov_precondition_names_the_point() {
        let ps = params(3);
        let mut values = vec![0.5; 8];
        values[5] = 1.25;
        let x = PointwiseVector::new(ps.clone(), values).unwrap().to_chaos();
        let q = SemigroupQuery::new(1.0, WeightFunction::constant(3, 1.0).unwrap()).unwrap();
        match check_markov_property(&x, &q) {
            Err(Error::OutOfOrderInterval { point, .. }) => assert_eq!(point, 5),
            other => panic!("unexpected {other:?}"),
        }
        let negative = PointwiseVector::new(ps, vec![-0.1; 8]).unwrap().to_chaos();
        assert!(check_positivity_preservation(&negative, &q).is_err());
    }
}
