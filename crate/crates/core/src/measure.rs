//! The truncated Bernoulli probability space.

use std::sync::Arc;

use rand::Rng;

use crate::{Error, Result};

/// Largest supported truncation; dense vectors have length `2^n`.
pub const MAX_SITES: usize = 24;

/// Per-site probabilities of the product measure on `{-1, +1}^n`.
///
/// `q_k`, `theta_k = sqrt(q_k / p_k)` and `sqrt(p_k q_k)` are computed once
/// here; every other module reads the cached values.
#[derive(Debug, Clone)]
pub struct SiteParams {
    p: Vec<f64>,
    q: Vec<f64>,
    theta: Vec<f64>,
    inv_theta: Vec<f64>,
    spread: Vec<f64>,
}

impl PartialEq for SiteParams {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
    }
}

impl SiteParams {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.len() > MAX_SITES {
            return Err(Error::SiteCount(p.len()));
        }
        for (site, &value) in p.iter().enumerate() {
            // NaN fails both comparisons and is rejected too.
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::Probability { site, value });
            }
        }
        let q: Vec<f64> = p.iter().map(|&p| 1.0 - p).collect();
        let theta: Vec<f64> = p.iter().zip(&q).map(|(&p, &q)| (q / p).sqrt()).collect();
        let inv_theta = theta.iter().map(|t| 1.0 / t).collect();
        let spread = p.iter().zip(&q).map(|(&p, &q)| (p * q).sqrt()).collect();
        Ok(Self {
            p,
            q,
            theta,
            inv_theta,
            spread,
        })
    }

    /// `n` sites sharing the same success probability.
    pub fn uniform(n: usize, p: f64) -> Result<Self> {
        if n == 0 || n > MAX_SITES {
            return Err(Error::SiteCount(n));
        }
        Self::new(vec![p; n])
    }

    pub fn shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    /// Number of sample points, equivalently of chaos basis elements.
    pub fn dim(&self) -> usize {
        1 << self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn inv_theta(&self) -> &[f64] {
        &self.inv_theta
    }

    /// `sqrt(p_k q_k)`, the scale of the site-`k` difference operator.
    pub fn spread(&self) -> &[f64] {
        &self.spread
    }

    pub(crate) fn check_site(&self, site: usize) -> Result<()> {
        if site < self.n() {
            Ok(())
        } else {
            Err(Error::SiteOutOfRange { site, n: self.n() })
        }
    }

    pub fn point(&self, bits: u32) -> Result<SamplePoint> {
        SamplePoint::new(bits, self.n())
    }

    /// Value of the normalized variable `Z_k` at `omega`: `theta_k` on `+1`,
    /// `-1/theta_k` on `-1`.
    pub fn z_value(&self, site: usize, omega: SamplePoint) -> Result<f64> {
        self.check_site(site)?;
        Ok(if omega.is_up(site) {
            self.theta[site]
        } else {
            -self.inv_theta[site]
        })
    }

    /// Product-measure mass of a single sample point.
    pub fn point_mass(&self, omega: SamplePoint) -> f64 {
        (0..self.n())
            .map(|k| if omega.is_up(k) { self.p[k] } else { self.q[k] })
            .product()
    }

    /// Masses of all `2^n` sample points, indexed by bitmask.
    pub fn point_masses(&self) -> Vec<f64> {
        let mut masses = Vec::with_capacity(self.dim());
        masses.push(1.0);
        for k in 0..self.n() {
            let len = masses.len();
            for i in 0..len {
                let m = masses[i];
                masses[i] = m * self.q[k];
                masses.push(m * self.p[k]);
            }
        }
        masses
    }

    /// Draws a point with independent coordinates, `+1` with probability `p_k`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SamplePoint {
        let bits = self.p.iter().enumerate().fold(
            0u32,
            |acc, (k, &p)| if rng.random_bool(p) { acc | (1 << k) } else { acc },
        );
        SamplePoint(bits)
    }
}

/// A point `omega ∈ {-1, +1}^n`; bit `k` set means `omega(k) = +1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SamplePoint(u32);

impl SamplePoint {
    pub fn new(bits: u32, n: usize) -> Result<Self> {
        if n > MAX_SITES {
            return Err(Error::SiteCount(n));
        }
        if (bits as u64) >> n != 0 {
            return Err(Error::PointOutOfRange { bits, n });
        }
        Ok(Self(bits))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_up(self, site: usize) -> bool {
        self.0 >> site & 1 == 1
    }

    /// `omega(site)` as `+1` or `-1`.
    pub fn sign(self, site: usize) -> i8 {
        if self.is_up(site) {
            1
        } else {
            -1
        }
    }

    pub(crate) fn with_site(self, site: usize, up: bool) -> Self {
        if up {
            Self(self.0 | 1 << site)
        } else {
            Self(self.0 & !(1 << site))
        }
    }
}
