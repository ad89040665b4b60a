//! Continuous-time heat-bath (refresh) dynamics on `{-1, +1}^n`.
//!
//! Each site `k` carries a Poisson clock of rate `w(k)`; when it rings the
//! coordinate is redrawn from its marginal (`+1` with probability `p_k`)
//! regardless of its current value. Refreshing site `k` acts on functionals
//! as the conditional expectation over coordinate `k`, which equals
//! `I - ∂_k* ∂_k`, so the generator is `-N_w` and the transition semigroup
//! is the w-Ornstein-Uhlenbeck semigroup. This chain is the finite-`n`
//! candidate process for the form; the simulation is exact, with no time
//! discretization.

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Exp;
use rayon::prelude::*;

use crate::chaos::{to_chaos_in_place, ChaosVector};
use crate::dirichlet::WeightFunction;
use crate::measure::{SamplePoint, SiteParams};
use crate::rng::{stream, Purpose};
use crate::semigroup::{evolve, SemigroupQuery};
use crate::{Error, Result};

/// Paths per random stream; fixes the work split independently of the
/// thread count.
pub const PATHS_PER_STREAM: usize = 4096;

/// Largest `n` for which the dense `2^n x 2^n` rate matrix is built.
pub const DENSE_MAX_SITES: usize = 10;

#[derive(Debug, Clone)]
pub struct GlauberConfig {
    params: Arc<SiteParams>,
    w: WeightFunction,
    horizon: f64,
    n_paths: usize,
    seed: u64,
}

impl GlauberConfig {
    pub fn new(params: Arc<SiteParams>, w: WeightFunction, horizon: f64, n_paths: usize, seed: u64) -> Result<Self> {
        w.check_sites(params.n())?;
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(Error::InvalidTime(horizon));
        }
        if n_paths == 0 {
            return Err(Error::ZeroCount { what: "n_paths" });
        }
        Ok(Self {
            params,
            w,
            horizon,
            n_paths,
            seed,
        })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn params(&self) -> &Arc<SiteParams> {
        &self.params
    }

    pub fn w(&self) -> &WeightFunction {
        &self.w
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefreshEvent {
    pub time: f64,
    pub site: usize,
    /// The redrawn value of the coordinate, `true` for `+1`. May equal the
    /// previous value.
    pub up: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlauberTrajectory {
    pub initial: SamplePoint,
    pub horizon: f64,
    /// Refresh epochs in strictly increasing time order, all `<= horizon`.
    pub events: Vec<RefreshEvent>,
}

impl GlauberTrajectory {
    /// State at time `t`, after every event with `time <= t`.
    pub fn final_state(&self, t: f64) -> Result<SamplePoint> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::InvalidTime(t));
        }
        if t > self.horizon {
            return Err(Error::BeyondHorizon {
                t,
                horizon: self.horizon,
            });
        }
        Ok(self
            .events
            .iter()
            .take_while(|e| e.time <= t)
            .fold(self.initial, |state, e| state.with_site(e.site, e.up)))
    }

    pub fn event_count(&self, site: usize) -> usize {
        self.events.iter().filter(|e| e.site == site).count()
    }
}

/// The superposed clock: total rate and the site chooser.
struct Clock {
    holding: Option<(Exp<f64>, WeightedIndex<f64>)>,
}

impl Clock {
    fn new(w: &WeightFunction) -> Self {
        let total: f64 = w.values().iter().sum();
        let holding = (total > 0.0).then(|| {
            (
                Exp::new(total).expect("positive total rate"),
                WeightedIndex::new(w.values()).expect("nonnegative weights with positive sum"),
            )
        });
        Self { holding }
    }

    fn run<R: Rng + ?Sized>(
        &self,
        params: &SiteParams,
        start: SamplePoint,
        until: f64,
        rng: &mut R,
        mut on_event: impl FnMut(RefreshEvent),
    ) -> SamplePoint {
        let Some((holding, chooser)) = &self.holding else {
            return start;
        };
        let mut state = start;
        let mut time = 0.0;
        loop {
            time += holding.sample(rng);
            if time > until {
                return state;
            }
            let site = chooser.sample(rng);
            let up = rng.random_bool(params.p()[site]);
            state = state.with_site(site, up);
            on_event(RefreshEvent { time, site, up });
        }
    }
}

fn check_start(params: &SiteParams, start: SamplePoint) -> Result<()> {
    SamplePoint::new(start.bits(), params.n()).map(|_| ())
}

/// One trajectory on `[0, horizon]` from `start`.
pub fn simulate_path<R: Rng + ?Sized>(
    cfg: &GlauberConfig,
    start: SamplePoint,
    rng: &mut R,
) -> Result<GlauberTrajectory> {
    check_start(&cfg.params, start)?;
    let mut events = Vec::new();
    Clock::new(&cfg.w).run(&cfg.params, start, cfg.horizon, rng, |e| events.push(e));
    Ok(GlauberTrajectory {
        initial: start,
        horizon: cfg.horizon,
        events,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    /// Sample standard deviation over `sqrt(paths)`; zero with a single path.
    pub std_error: f64,
    pub paths: usize,
}

impl McEstimate {
    /// Standardized distance to `reference`. A zero standard error yields 0
    /// when the two agree to `1e-12` and infinity otherwise.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = self.estimate - reference;
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff.abs() <= 1e-12 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    }
}

/// Running mean and centred second moment, mergeable across chunks.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let (a, b) = (self.count as f64, other.count as f64);
        Self {
            count,
            mean: self.mean + delta * b / count as f64,
            m2: self.m2 + other.m2 + delta * delta * a * b / count as f64,
        }
    }
}

/// Monte Carlo estimate of `(P_t x)(start) = E[x(omega_t) | omega_0 = start]`
/// over `cfg.n_paths()` independent paths.
pub fn estimate_semigroup(cfg: &GlauberConfig, x: &ChaosVector, t: f64, start: SamplePoint) -> Result<McEstimate> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidTime(t));
    }
    if t > cfg.horizon {
        return Err(Error::BeyondHorizon {
            t,
            horizon: cfg.horizon,
        });
    }
    if **x.params() != *cfg.params {
        return Err(Error::ParamsMismatch);
    }
    check_start(&cfg.params, start)?;
    let values = x.to_pointwise();
    let clock = Clock::new(&cfg.w);
    let chunks = cfg.n_paths.div_ceil(PATHS_PER_STREAM);
    let partial: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream(cfg.seed, Purpose::Paths, chunk as u64);
            let paths = PATHS_PER_STREAM.min(cfg.n_paths - chunk * PATHS_PER_STREAM);
            let mut moments = Moments::default();
            for _ in 0..paths {
                let end = clock.run(&cfg.params, start, t, &mut rng, |_| {});
                moments.push(values.at(end));
            }
            moments
        })
        .collect();
    let total = partial.into_iter().fold(Moments::default(), Moments::merge);
    let std_error = if total.count > 1 {
        (total.m2.max(0.0) / (total.count - 1) as f64 / total.count as f64).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        estimate: total.mean,
        std_error,
        paths: total.count,
    })
}

/// `(P_t x)(start)` from the spectral side, for comparison with
/// [`estimate_semigroup`].
pub fn spectral_value(x: &ChaosVector, w: &WeightFunction, t: f64, start: SamplePoint) -> Result<f64> {
    check_start(x.params(), start)?;
    Ok(evolve(x, &SemigroupQuery::new(t, w.clone())?)?.to_pointwise().at(start))
}

/// Dense generator of the chain, row-major: entry `(from, to)` is the jump
/// rate, diagonal entries make rows sum to zero.
pub fn rate_matrix(params: &SiteParams, w: &WeightFunction) -> Result<Vec<f64>> {
    w.check_sites(params.n())?;
    if params.n() > DENSE_MAX_SITES {
        return Err(Error::DenseLimit {
            n: params.n(),
            max: DENSE_MAX_SITES,
        });
    }
    let dim = params.dim();
    let mut q = vec![0.0; dim * dim];
    for from in 0..dim {
        let mut leaving = 0.0;
        for k in 0..params.n() {
            let to = from ^ (1 << k);
            // Only a draw of the opposite sign moves the chain.
            let rate = w.values()[k] * if to >> k & 1 == 1 { params.p()[k] } else { params.q()[k] };
            q[from * dim + to] = rate;
            leaving += rate;
        }
        q[from * dim + from] = -leaving;
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReversibilityReport {
    /// `max |P(a) Q(a, b) - P(b) Q(b, a)|` over all pairs.
    pub detailed_balance_deviation: f64,
    /// `max` over `sigma` of the sup-norm distance between `Q Z_sigma`,
    /// expressed in the chaos basis, and `-#_w(sigma) Z_sigma`.
    pub eigenvalue_deviation: f64,
    /// `max |row sum of Q|`, i.e. `Q` applied to a constant.
    pub conservativity_deviation: f64,
    /// `min_{sigma != ∅} #_w(sigma)`, informational.
    pub spectral_gap: f64,
}

pub fn check_reversibility(cfg: &GlauberConfig) -> Result<ReversibilityReport> {
    let params = &cfg.params;
    let q = rate_matrix(params, &cfg.w)?;
    let dim = params.dim();
    let masses = params.point_masses();

    let mut detailed_balance_deviation = 0.0f64;
    let mut conservativity_deviation = 0.0f64;
    for a in 0..dim {
        let row = &q[a * dim..(a + 1) * dim];
        conservativity_deviation = conservativity_deviation.max(row.iter().sum::<f64>().abs());
        for b in 0..dim {
            let flux = masses[a] * row[b] - masses[b] * q[b * dim + a];
            detailed_balance_deviation = detailed_balance_deviation.max(flux.abs());
        }
    }

    let table = cfg.w.counting_table();
    let eigenvalue_deviation = (0..dim)
        .into_par_iter()
        .map(|sigma| {
            let z = ChaosVector::basis(params.clone(), sigma)
                .expect("mask below 2^n")
                .to_pointwise();
            let mut image: Vec<f64> = q
                .chunks_exact(dim)
                .map(|row| row.iter().zip(z.values()).map(|(r, v)| r * v).sum())
                .collect();
            to_chaos_in_place(params, &mut image);
            image[sigma] += table[sigma];
            image.iter().map(|c| c.abs()).fold(0.0, f64::max)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max);

    Ok(ReversibilityReport {
        detailed_balance_deviation,
        eigenvalue_deviation,
        conservativity_deviation,
        spectral_gap: cfg.w.spectral_gap(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::PointwiseVector;
    use crate::dirichlet::WeightFunction;

    fn config(p: Vec<f64>, w: Vec<f64>, horizon: f64, n_paths: usize) -> GlauberConfig {
        let params = SiteParams::new(p).unwrap().shared();
        GlauberConfig::new(params, WeightFunction::new(w).unwrap(), horizon, n_paths, 2024).unwrap()
    }

    #[test]
    fn config_validation() {
        let params = SiteParams::uniform(2, 0.5).unwrap().shared();
        let w = WeightFunction::constant(2, 1.0).unwrap();
        assert!(GlauberConfig::new(params.clone(), w.clone(), -1.0, 10, 0).is_err());
        assert!(GlauberConfig::new(params.clone(), w.clone(), 1.0, 0, 0).is_err());
        assert!(GlauberConfig::new(params, WeightFunction::constant(3, 1.0).unwrap(), 1.0, 1, 0).is_err());
    }

    #[test]
    fn frozen_dynamics() {
        let cfg = config(vec![0.3, 0.6], vec![0.0, 0.0], 5.0, 10);
        let start = cfg.params().point(0b10).unwrap();
        let mut rng = stream(1, Purpose::Paths, 0);
        let path = simulate_path(&cfg, start, &mut rng).unwrap();
        assert!(path.events.is_empty());
        for t in [0.0, 2.5, 5.0] {
            assert_eq!(path.final_state(t).unwrap(), start);
        }
        assert!(matches!(path.final_state(5.1), Err(Error::BeyondHorizon { .. })));
    }

    #[test]
    fn trajectory_structure() {
        let cfg = config(vec![0.3, 0.6, 0.5], vec![1.0, 2.0, 0.5], 4.0, 10);
        let mut rng = stream(2, Purpose::Paths, 0);
        let path = simulate_path(&cfg, cfg.params().point(0).unwrap(), &mut rng).unwrap();
        assert!(!path.events.is_empty());
        assert!(path.events.windows(2).all(|e| e[0].time < e[1].time));
        assert!(path.events.iter().all(|e| e.time <= 4.0));
        let last = path.events.last().unwrap();
        assert_eq!(path.final_state(4.0).unwrap().is_up(last.site), last.up);
    }

    #[test]
    fn poisson_event_counts() {
        let (rate, horizon, paths) = (1.5, 2.0, 20_000);
        let cfg = config(vec![0.3, 0.7, 0.5], vec![rate; 3], horizon, paths);
        let mut rng = stream(3, Purpose::Paths, 0);
        let mut counts = [0usize; 3];
        for _ in 0..paths {
            let path = simulate_path(&cfg, cfg.params().point(0b101).unwrap(), &mut rng).unwrap();
            for (k, c) in counts.iter_mut().enumerate() {
                *c += path.event_count(k);
            }
        }
        let expected = rate * horizon;
        for c in counts {
            let mean = c as f64 / paths as f64;
            assert!(
                (mean - expected).abs() <= 3.0 * (expected / paths as f64).sqrt(),
                "mean {mean}"
            );
        }
    }

    #[test]
    fn long_run_marginals() {
        let p = vec![0.25, 0.8];
        let paths = 20_000;
        let cfg = config(p.clone(), vec![1.0, 0.7], 30.0, paths);
        let mut rng = stream(4, Purpose::Paths, 0);
        let mut ups = [0usize; 2];
        for _ in 0..paths {
            let end = simulate_path(&cfg, cfg.params().point(0).unwrap(), &mut rng)
                .unwrap()
                .final_state(30.0)
                .unwrap();
            ups[0] += end.is_up(0) as usize;
            ups[1] += end.is_up(1) as usize;
        }
        for k in 0..2 {
            let sd = (p[k] * (1.0 - p[k]) / paths as f64).sqrt();
            assert!((ups[k] as f64 / paths as f64 - p[k]).abs() <= 3.0 * sd);
        }
    }

    #[test]
    fn constant_functional_is_exact() {
        let cfg = config(vec![0.3, 0.6], vec![1.0, 1.0], 1.0, 1000);
        let one = ChaosVector::basis(cfg.params().clone(), 0).unwrap();
        let est = estimate_semigroup(&cfg, &one, 0.7, cfg.params().point(1).unwrap()).unwrap();
        assert_eq!(est.estimate, 1.0);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.paths, 1000);
        assert!(matches!(
            estimate_semigroup(&cfg, &one, 1.5, cfg.params().point(1).unwrap()),
            Err(Error::BeyondHorizon { .. })
        ));
    }

    #[test]
    fn single_site_functional_against_no_refresh_oracle() {
        let cfg = config(vec![0.3, 0.65, 0.45], vec![0.8, 1.6, 0.4], 1.0, 50_000);
        let (t, start) = (0.7, cfg.params().point(0b011).unwrap());
        for k in 0..3 {
            let zk = ChaosVector::basis(cfg.params().clone(), 1 << k).unwrap();
            // A refreshed coordinate has mean zero; only paths without a
            // refresh of site k keep the initial value.
            let survival = (-t * cfg.w().values()[k]).exp();
            let oracle = survival * cfg.params().z_value(k, start).unwrap();
            let spectral = spectral_value(&zk, cfg.w(), t, start).unwrap();
            assert!((oracle - spectral).abs() < 1e-14);
            let est = estimate_semigroup(&cfg.with_seed(k as u64), &zk, t, start).unwrap();
            assert!(est.z_score(spectral).abs() <= 3.0, "site {k}: {est:?} vs {spectral}");
        }
    }

    #[test]
    fn estimates_are_deterministic_across_thread_counts() {
        let cfg = config(
            vec![0.3, 0.6, 0.5, 0.2],
            vec![1.0, 0.5, 2.0, 1.2],
            1.0,
            3 * PATHS_PER_STREAM + 17,
        );
        let mut rng = stream(5, Purpose::Vectors, 0);
        let x = PointwiseVector::random_unit_interval(cfg.params().clone(), &mut rng).to_chaos();
        let start = cfg.params().point(0b1001).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_semigroup(&cfg, &x, 0.5, start).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(4));
        assert_eq!(one.estimate.to_bits(), run(3).estimate.to_bits());
    }

    #[test]
    fn rate_matrix_symmetric_case() {
        let cfg = config(vec![0.5, 0.5], vec![1.0, 1.0], 1.0, 1);
        let report = check_reversibility(&cfg).unwrap();
        assert_eq!(report.detailed_balance_deviation, 0.0);
        assert_eq!(report.conservativity_deviation, 0.0);
        assert!(report.eigenvalue_deviation < 1e-14);
    }

    #[test]
    fn rate_matrix_skewed_case() {
        let cfg = config(vec![0.8, 0.3], vec![1.0, 2.0], 1.0, 1);
        let report = check_reversibility(&cfg).unwrap();
        assert!(report.detailed_balance_deviation < 1e-14);
        assert!(report.conservativity_deviation < 1e-14);
        assert!(report.eigenvalue_deviation < 1e-12);
        assert_eq!(report.spectral_gap, 1.0);

        // Eigenvalue of -Q on Z_{0,1} read off directly.
        let q = rate_matrix(cfg.params(), cfg.w()).unwrap();
        let z = ChaosVector::basis(cfg.params().clone(), 0b11).unwrap().to_pointwise();
        for a in 0..4 {
            let qz: f64 = (0..4).map(|b| q[a * 4 + b] * z.values()[b]).sum();
            assert!((-qz - 3.0 * z.values()[a]).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_limit() {
        let cfg = config(vec![0.5; 11], vec![1.0; 11], 1.0, 1);
        assert!(matches!(check_reversibility(&cfg), Err(Error::DenseLimit { .. })));
    }

    #[test]
    fn z_scores() {
        let e = McEstimate {
            estimate: 1.0,
            std_error: 0.5,
            paths: 10,
        };
        assert_eq!(e.z_score(0.0), 2.0);
        let exact = McEstimate {
            estimate: 1.0,
            std_error: 0.0,
            paths: 10,
        };
        assert_eq!(exact.z_score(1.0 + 1e-15), 0.0);
        assert!(exact.z_score(0.5).is_infinite());
    }
}
