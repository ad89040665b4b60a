//! Annihilation and creation operators on the chaos basis.
//!
//! `∂_k Z_sigma = 1_sigma(k) Z_{sigma \ k}` and its adjoint
//! `∂_k* Z_sigma = (1 - 1_sigma(k)) Z_{sigma ∪ k}` only move or zero
//! coefficients, so both are applied as index maps and never materialized
//! as matrices.

use std::fmt;

use crate::chaos::ChaosVector;
use crate::dirichlet::WeightFunction;
use crate::measure::SiteParams;
use crate::rng::{stream, Purpose, Stream};
use crate::{Error, Result};

/// Up to this many sites the anti-commutation relations are checked on
/// every basis vector.
pub const EXHAUSTIVE_CAR_SITES: usize = 12;

/// Random vectors used per identity when the basis is too large.
pub const DEFAULT_CAR_BATTERY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ladder {
    Annihilate,
    Create,
}

/// `∂_site` or `∂*_site`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OperatorLabel {
    pub kind: Ladder,
    pub site: usize,
}

impl fmt::Display for OperatorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            Ladder::Annihilate => write!(f, "d{}", self.site),
            Ladder::Create => write!(f, "d{}*", self.site),
        }
    }
}

impl OperatorLabel {
    pub fn annihilate(site: usize) -> Self {
        Self {
            kind: Ladder::Annihilate,
            site,
        }
    }

    pub fn create(site: usize) -> Self {
        Self {
            kind: Ladder::Create,
            site,
        }
    }

    /// Image of the basis element `Z_sigma`: `Some(tau)` for `Z_tau`, `None`
    /// for zero.
    pub fn act_on_basis(&self, sigma: usize) -> Option<usize> {
        let bit = 1usize << self.site;
        let contains = sigma & bit != 0;
        match (self.kind, contains) {
            (Ladder::Annihilate, true) => Some(sigma ^ bit),
            (Ladder::Create, false) => Some(sigma | bit),
            _ => None,
        }
    }

    pub fn apply(&self, x: &ChaosVector) -> Result<ChaosVector> {
        let mut out = x.clone();
        self.apply_in_place(&mut out)?;
        Ok(out)
    }

    pub fn apply_in_place(&self, x: &mut ChaosVector) -> Result<()> {
        x.params().check_site(self.site)?;
        let half = 1usize << self.site;
        let kind = self.kind;
        for block in x.coeffs_mut().chunks_exact_mut(2 * half) {
            let (without, with) = block.split_at_mut(half);
            for (lo, hi) in without.iter_mut().zip(with) {
                match kind {
                    Ladder::Annihilate => {
                        *lo = *hi;
                        *hi = 0.0;
                    }
                    Ladder::Create => {
                        *hi = *lo;
                        *lo = 0.0;
                    }
                }
            }
        }
        Ok(())
    }
}

/// `∂_k x`.
pub fn annihilate(x: &ChaosVector, site: usize) -> Result<ChaosVector> {
    OperatorLabel::annihilate(site).apply(x)
}

/// `∂_k* x`.
pub fn create(x: &ChaosVector, site: usize) -> Result<ChaosVector> {
    OperatorLabel::create(site).apply(x)
}

/// `N_w x`: multiplies the coefficient of `Z_sigma` by `#_w(sigma)`.
pub fn number_operator(x: &ChaosVector, w: &WeightFunction) -> Result<ChaosVector> {
    w.check_sites(x.n())?;
    let table = w.counting_table();
    let coeffs = x.coeffs().iter().zip(table.iter()).map(|(c, m)| m * c).collect();
    Ok(ChaosVector::from_raw(x.params().clone(), coeffs))
}

/// The family `(∂_k x)_{k < n}`.
pub fn gradient(x: &ChaosVector) -> Vec<ChaosVector> {
    (0..x.n()).map(|k| annihilate(x, k).expect("site below n")).collect()
}

/// An operator product, applied right to left; the empty word is the
/// identity.
type Word = Vec<OperatorLabel>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CarIdentity {
    /// `∂_j ∂_k = ∂_k ∂_j`
    AnnihilatorsCommute,
    /// `∂_j* ∂_k* = ∂_k* ∂_j*`
    CreatorsCommute,
    /// `∂_j* ∂_k = ∂_k ∂_j*`
    MixedCommute,
    /// `∂_k ∂_k = 0`
    AnnihilatorNilpotent,
    /// `∂_k* ∂_k* = 0`
    CreatorNilpotent,
    /// `∂_k ∂_k* + ∂_k* ∂_k = I`
    AntiCommutator,
}

impl CarIdentity {
    pub fn name(self) -> &'static str {
        match self {
            Self::AnnihilatorsCommute => "annihilators_commute",
            Self::CreatorsCommute => "creators_commute",
            Self::MixedCommute => "mixed_commute",
            Self::AnnihilatorNilpotent => "annihilator_nilpotent",
            Self::CreatorNilpotent => "creator_nilpotent",
            Self::AntiCommutator => "anti_commutator",
        }
    }

    /// `lhs - rhs` as a signed sum of words.
    fn residual(self, j: usize, k: usize) -> Vec<(f64, Word)> {
        let (a, c) = (OperatorLabel::annihilate, OperatorLabel::create);
        match self {
            Self::AnnihilatorsCommute => vec![(1.0, vec![a(j), a(k)]), (-1.0, vec![a(k), a(j)])],
            Self::CreatorsCommute => vec![(1.0, vec![c(j), c(k)]), (-1.0, vec![c(k), c(j)])],
            Self::MixedCommute => vec![(1.0, vec![c(j), a(k)]), (-1.0, vec![a(k), c(j)])],
            Self::AnnihilatorNilpotent => vec![(1.0, vec![a(k), a(k)])],
            Self::CreatorNilpotent => vec![(1.0, vec![c(k), c(k)])],
            Self::AntiCommutator => vec![(1.0, vec![a(k), c(k)]), (1.0, vec![c(k), a(k)]), (-1.0, vec![])],
        }
    }
}

/// How [`check_car_with`] probes the identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CarMethod {
    /// Every basis vector, through [`OperatorLabel::act_on_basis`].
    Exhaustive,
    /// Random vectors with `[-1, 1]` coefficients, through
    /// [`OperatorLabel::apply`].
    Battery { vectors: usize, seed: u64 },
}

impl CarMethod {
    pub fn default_for(n: usize) -> Self {
        if n <= EXHAUSTIVE_CAR_SITES {
            Self::Exhaustive
        } else {
            Self::Battery {
                vectors: DEFAULT_CAR_BATTERY,
                seed: 0,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarDeviation {
    pub identity: CarIdentity,
    pub max_abs_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarReport {
    pub j: usize,
    pub k: usize,
    pub method: CarMethod,
    pub deviations: Vec<CarDeviation>,
}

impl CarReport {
    pub fn max_deviation(&self) -> f64 {
        self.deviations.iter().map(|d| d.max_abs_deviation).fold(0.0, f64::max)
    }
}

/// Checks the anti-commutation relations for the pair `(j, k)`: the three
/// commutations when `j != k`, and the nilpotency and anti-commutator
/// identities at site `k`.
pub fn check_car(params: &SiteParams, j: usize, k: usize) -> Result<CarReport> {
    check_car_with(params, j, k, CarMethod::default_for(params.n()))
}

pub fn check_car_with(params: &SiteParams, j: usize, k: usize, method: CarMethod) -> Result<CarReport> {
    params.check_site(j)?;
    params.check_site(k)?;
    let mut identities = Vec::with_capacity(6);
    if j != k {
        identities.extend([
            CarIdentity::AnnihilatorsCommute,
            CarIdentity::CreatorsCommute,
            CarIdentity::MixedCommute,
        ]);
    }
    identities.extend([
        CarIdentity::AnnihilatorNilpotent,
        CarIdentity::CreatorNilpotent,
        CarIdentity::AntiCommutator,
    ]);

    let deviations = match method {
        CarMethod::Exhaustive => identities
            .into_iter()
            .map(|identity| CarDeviation {
                identity,
                max_abs_deviation: basis_deviation(params.dim(), &identity.residual(j, k)),
            })
            .collect(),
        CarMethod::Battery { vectors, seed } => {
            if vectors == 0 {
                return Err(Error::ZeroCount {
                    what: "CAR battery size",
                });
            }
            let shared = params.clone().shared();
            let mut rng: Stream = stream(seed, Purpose::Battery, (j * params.n() + k) as u64);
            let battery: Vec<ChaosVector> = (0..vectors)
                .map(|_| ChaosVector::random(shared.clone(), &mut rng))
                .collect();
            identities
                .into_iter()
                .map(|identity| {
                    let residual = identity.residual(j, k);
                    let worst = battery
                        .iter()
                        .map(|x| vector_deviation(x, &residual))
                        .fold(0.0, f64::max);
                    CarDeviation {
                        identity,
                        max_abs_deviation: worst,
                    }
                })
                .collect()
        }
    };
    Ok(CarReport {
        j,
        k,
        method,
        deviations,
    })
}

fn basis_deviation(dim: usize, residual: &[(f64, Word)]) -> f64 {
    let mut image: Vec<(usize, f64)> = Vec::with_capacity(residual.len());
    let mut worst = 0.0f64;
    for sigma in 0..dim {
        image.clear();
        for (coef, word) in residual {
            let target = word.iter().rev().try_fold(sigma, |tau, op| op.act_on_basis(tau));
            if let Some(tau) = target {
                match image.iter_mut().find(|(t, _)| *t == tau) {
                    Some((_, c)) => *c += coef,
                    None => image.push((tau, *coef)),
                }
            }
        }
        worst = image.iter().map(|(_, c)| c.abs()).fold(worst, f64::max);
    }
    worst
}

fn vector_deviation(x: &ChaosVector, residual: &[(f64, Word)]) -> f64 {
    let mut total = vec![0.0; x.coeffs().len()];
    for (coef, word) in residual {
        let mut image = x.clone();
        for op in word.iter().rev() {
            op.apply_in_place(&mut image).expect("sites validated");
        }
        for (t, c) in total.iter_mut().zip(image.coeffs()) {
            *t += coef * c;
        }
    }
    total.iter().map(|t| t.abs()).fold(0.0, f64::max)
}
