use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;

use super::config::{ExperimentConfig, Resolved};
use super::io::{Report, Representation, VectorFile};
use crate::chaos::{ChaosVector, PointwiseVector};
use crate::dirichlet::{energy_form, energy_form_definitional, energy_norm_squared, verify_contraction_property};
use crate::glauber::{check_reversibility, estimate_semigroup, spectral_value, GlauberConfig, DENSE_MAX_SITES};
use crate::measure::SamplePoint;
use crate::operators::check_car;
use crate::rng::{derive_seed, stream, Purpose};
use crate::semigroup::{check_generator_relation, evolve, generator_difference_quotients, SemigroupQuery};
use crate::{Error, Result};

/// Step sizes of the finite-difference generator check.
const FD_GRID: [f64; 3] = [1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    CarCheck,
    Transform,
    FormEval,
    ContractionCheck,
    SemigroupEvolve,
    GeneratorCheck,
    MarkovVerify,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Self::CarCheck,
        Self::Transform,
        Self::FormEval,
        Self::ContractionCheck,
        Self::SemigroupEvolve,
        Self::GeneratorCheck,
        Self::MarkovVerify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::CarCheck => "car-check",
            Self::Transform => "transform",
            Self::FormEval => "form-eval",
            Self::ContractionCheck => "contraction-check",
            Self::SemigroupEvolve => "semigroup-evolve",
            Self::GeneratorCheck => "generator-check",
            Self::MarkovVerify => "markov-verify",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::config("command", format!("unknown command `{s}`")))
    }
}

/// Result of one command: overall verdict, the human-readable summary and
/// the files written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

struct Run<'a> {
    cfg: Resolved,
    out: &'a Path,
    summary: String,
    files: Vec<PathBuf>,
    passed: bool,
}

fn num(v: f64) -> String {
    v.to_string()
}

fn verdict(pass: bool) -> String {
    if pass { "true" } else { "false" }.to_string()
}

impl Run<'_> {
    fn write_report(&mut self, name: &str, report: &Report) -> Result<()> {
        let path = self.out.join(name);
        report.write(&path)?;
        self.files.push(path);
        Ok(())
    }

    fn write_vector(&mut self, name: &str, file: &VectorFile) -> Result<()> {
        let path = self.out.join(name);
        file.write(&path)?;
        self.files.push(path);
        Ok(())
    }

    fn line(&mut self, text: impl AsRef<str>) {
        self.summary.push_str(text.as_ref());
        self.summary.push('\n');
    }

    fn check(&mut self, label: &str, failures: usize, total: usize) {
        let ok = failures == 0;
        self.passed &= ok;
        let status = if ok { "PASS" } else { "FAIL" };
        self.line(format!(
            "[{status}] {label}: {} of {total} rows within tolerance",
            total - failures
        ));
    }

    fn read_input(&self, path: &Option<PathBuf>) -> Result<Option<VectorFile>> {
        path.as_deref().map(VectorFile::read).transpose()
    }

    fn input_chaos(&self, path: &Option<PathBuf>) -> Result<Option<ChaosVector>> {
        self.read_input(path)?
            .map(|f| f.into_chaos(self.cfg.params.clone()))
            .transpose()
    }

    /// The configured input pair, or `trials` random pairs.
    fn vector_pairs(&self) -> Result<Vec<(ChaosVector, ChaosVector)>> {
        if let Some(x) = self.input_chaos(&self.cfg.input)? {
            let y = self.input_chaos(&self.cfg.input_y)?.unwrap_or_else(|| x.clone());
            return Ok(vec![(x, y)]);
        }
        let mut rng = stream(self.cfg.seed, Purpose::Vectors, 0);
        Ok((0..self.cfg.trials)
            .map(|_| {
                let x = ChaosVector::random(self.cfg.params.clone(), &mut rng);
                let y = ChaosVector::random(self.cfg.params.clone(), &mut rng);
                (x, y)
            })
            .collect())
    }

    fn car_check(&mut self) -> Result<()> {
        let params = self.cfg.params.clone();
        let tol = self.cfg.tolerances.car;
        let mut report = Report::new(&["j", "k", "identity", "method", "deviation", "tolerance", "pass"]);
        let mut failures = 0;
        for j in 0..params.n() {
            for k in 0..params.n() {
                let car = check_car(&params, j, k)?;
                let method = match car.method {
                    crate::operators::CarMethod::Exhaustive => "exhaustive".to_string(),
                    crate::operators::CarMethod::Battery { vectors, .. } => format!("battery({vectors})"),
                };
                for d in &car.deviations {
                    let pass = d.max_abs_deviation <= tol;
                    failures += !pass as usize;
                    report.push(vec![
                        j.to_string(),
                        k.to_string(),
                        d.identity.name().to_string(),
                        method.clone(),
                        num(d.max_abs_deviation),
                        num(tol),
                        verdict(pass),
                    ]);
                }
            }
        }
        let total = report.rows.len();
        self.write_report("car.csv", &report)?;
        self.check("anti-commutation relations", failures, total);
        Ok(())
    }

    fn transform(&mut self) -> Result<()> {
        let file = self
            .read_input(&self.cfg.input)?
            .ok_or_else(|| Error::config("input", "transform needs an input vector file"))?;
        let params = self.cfg.params.clone();
        let tol = self.cfg.tolerances.clone();
        let repr = file.repr;
        let (converted, round_trip, parseval) = match repr {
            Representation::Chaos => {
                let x = file.into_chaos(params)?;
                let v = x.to_pointwise();
                let rt = v.to_chaos().max_abs_diff(&x)?;
                let pv = relative(x.norm_squared(), v.inner_product(&v)?);
                (VectorFile::from_pointwise(&v), rt, pv)
            }
            Representation::Pointwise => {
                let v = PointwiseVector::new(params, file.values)?;
                let x = v.to_chaos();
                let rt = x.to_pointwise().max_abs_diff(&v)?;
                let pv = relative(x.norm_squared(), v.inner_product(&v)?);
                (VectorFile::from_chaos(&x), rt, pv)
            }
        };
        self.write_vector("transformed.csv", &converted)?;
        let mut report = Report::new(&["quantity", "value", "tolerance", "pass"]);
        let rows = [
            ("round_trip_max_abs", round_trip, tol.round_trip),
            ("parseval_relative", parseval, tol.parseval_relative),
        ];
        let mut failures = 0;
        for (name, value, t) in rows {
            let pass = value <= t;
            failures += !pass as usize;
            report.push(vec![name.into(), num(value), num(t), verdict(pass)]);
        }
        self.write_report("transform.csv", &report)?;
        self.line(format!("converted {repr} vector to {}", converted.repr));
        self.check("transform consistency", failures, rows.len());
        Ok(())
    }

    fn form_eval(&mut self) -> Result<()> {
        let w = self.cfg.w.clone();
        let tol = self.cfg.tolerances.clone();
        let mut report = Report::new(&[
            "trial",
            "energy_closed",
            "energy_definitional",
            "two_path_deviation",
            "two_path_tolerance",
            "energy_norm_squared",
            "decomposition_deviation",
            "decomposition_tolerance",
            "pass",
        ]);
        let mut failures = 0;
        for (trial, (x, y)) in self.vector_pairs()?.iter().enumerate() {
            let closed = energy_form(x, y, &w)?;
            let summed = energy_form_definitional(x, y, &w)?;
            let two_path = relative(closed, summed);
            let norm = energy_norm_squared(x, &w)?;
            let split = relative(norm, energy_form(x, x, &w)? + x.norm_squared());
            let pass = two_path <= tol.energy_two_path_relative && split <= tol.energy_norm_relative;
            failures += !pass as usize;
            report.push(vec![
                trial.to_string(),
                num(closed),
                num(summed),
                num(two_path),
                num(tol.energy_two_path_relative),
                num(norm),
                num(split),
                num(tol.energy_norm_relative),
                verdict(pass),
            ]);
        }
        let total = report.rows.len();
        self.write_report("form.csv", &report)?;
        self.check("energy form two-path and norm identities", failures, total);
        Ok(())
    }

    fn contraction_check(&mut self) -> Result<()> {
        let w = self.cfg.w.clone();
        let slack = self.cfg.tolerances.contraction_slack;
        let inputs: Vec<ChaosVector> = self.vector_pairs()?.into_iter().map(|(x, _)| x).collect();
        let mut report = Report::new(&[
            "trial",
            "contraction",
            "lhs",
            "rhs",
            "energy_tolerance",
            "max_site_excess",
            "site_tolerance",
            "pass",
        ]);
        let mut failures = 0;
        for (trial, x) in inputs.iter().enumerate() {
            for c in &self.cfg.contractions {
                let r = verify_contraction_property(x, c, &w)?;
                let energy_tol = slack * (1.0 + r.rhs);
                let pass = r.lhs <= r.rhs + energy_tol && r.max_site_excess <= slack;
                failures += !pass as usize;
                report.push(vec![
                    trial.to_string(),
                    c.name().to_string(),
                    num(r.lhs),
                    num(r.rhs),
                    num(energy_tol),
                    num(r.max_site_excess),
                    num(slack),
                    verdict(pass),
                ]);
            }
        }
        let total = report.rows.len();
        self.write_report("contraction.csv", &report)?;
        self.check("contraction property", failures, total);
        Ok(())
    }

    fn semigroup_evolve(&mut self) -> Result<()> {
        let params = self.cfg.params.clone();
        let tol = self.cfg.tolerances.clone();
        let (x, repr) = match self.read_input(&self.cfg.input)? {
            Some(file) => {
                let repr = file.repr;
                (file.into_chaos(params.clone())?, repr)
            }
            None => {
                let mut rng = stream(self.cfg.seed, Purpose::Vectors, 0);
                let v = PointwiseVector::random_unit_interval(params.clone(), &mut rng);
                (v.to_chaos(), Representation::Pointwise)
            }
        };
        let (lo, hi) = x.to_pointwise().min_max();
        let order_interval =
            lo >= -crate::semigroup::PRECONDITION_SLACK && hi <= 1.0 + crate::semigroup::PRECONDITION_SLACK;
        let norm = x.norm();
        let mut report = Report::new(&[
            "t",
            "norm",
            "min_pointwise",
            "max_pointwise",
            "norm_ratio",
            "norm_tolerance",
            "markov_deviation",
            "markov_tolerance",
            "pass",
        ]);
        let mut failures = 0;
        for (i, &t) in self.cfg.t_grid.clone().iter().enumerate() {
            let evolved = evolve(&x, &SemigroupQuery::new(t, self.cfg.w.clone())?)?;
            let values = evolved.to_pointwise();
            let (min, max) = values.min_max();
            let ratio = if norm == 0.0 { 0.0 } else { evolved.norm() / norm };
            let mut pass = ratio <= 1.0 + tol.semigroup_norm_relative;
            let markov = if order_interval {
                let dev = (-min).max(max - 1.0).max(0.0);
                pass &= dev <= tol.markov;
                num(dev)
            } else {
                "NA".to_string()
            };
            failures += !pass as usize;
            report.push(vec![
                num(t),
                num(evolved.norm()),
                num(min),
                num(max),
                num(ratio),
                num(tol.semigroup_norm_relative),
                markov,
                num(tol.markov),
                verdict(pass),
            ]);
            let file = match repr {
                Representation::Chaos => VectorFile::from_chaos(&evolved),
                Representation::Pointwise => VectorFile::from_pointwise(&values),
            };
            self.write_vector(&format!("evolved_{i}.csv"), &file)?;
        }
        let total = report.rows.len();
        self.write_report("semigroup.csv", &report)?;
        if !order_interval {
            self.line("input is not [0, 1]-valued; Markov bound not checked");
        }
        self.check("semigroup contraction and Markov bounds", failures, total);
        Ok(())
    }

    fn generator_check(&mut self) -> Result<()> {
        let w = self.cfg.w.clone();
        let tol = self.cfg.tolerances.clone();
        let pairs = self.vector_pairs()?;
        let mut report = Report::new(&["trial", "lhs", "rhs", "deviation", "tolerance", "pass"]);
        let mut failures = 0;
        for (trial, (x, y)) in pairs.iter().enumerate() {
            let r = check_generator_relation(x, y, &w)?;
            let pass = r.deviation <= tol.generator;
            failures += !pass as usize;
            report.push(vec![
                trial.to_string(),
                num(r.lhs),
                num(r.rhs),
                num(r.deviation),
                num(tol.generator),
                verdict(pass),
            ]);
        }
        let total = report.rows.len();
        self.write_report("generator.csv", &report)?;
        self.check("generator relation", failures, total);

        let quotients = generator_difference_quotients(&pairs[0].0, &w, &FD_GRID)?;
        let mut fd = Report::new(&["t", "deviation", "ratio", "ratio_min", "ratio_max", "pass"]);
        let mut fd_failures = 0;
        for (i, &(t, dev)) in quotients.iter().enumerate() {
            let (ratio, pass) = if i == 0 {
                ("NA".to_string(), true)
            } else {
                let ratio = quotients[i - 1].1 / dev;
                (num(ratio), (tol.fd_ratio_min..=tol.fd_ratio_max).contains(&ratio))
            };
            fd_failures += !pass as usize;
            fd.push(vec![
                num(t),
                num(dev),
                ratio,
                num(tol.fd_ratio_min),
                num(tol.fd_ratio_max),
                verdict(pass),
            ]);
        }
        self.write_report("generator_fd.csv", &fd)?;
        self.check(
            "first-order generator difference quotients",
            fd_failures,
            quotients.len(),
        );
        Ok(())
    }

    fn markov_verify(&mut self) -> Result<()> {
        let params = self.cfg.params.clone();
        let w = self.cfg.w.clone();
        let tol = self.cfg.tolerances.clone();
        let horizon = self.cfg.t_grid.iter().copied().fold(0.0, f64::max);
        let base = GlauberConfig::new(params.clone(), w.clone(), horizon, self.cfg.n_paths, self.cfg.seed)?;
        self.line("process: finite-n heat-bath refresh chain (candidate process for the w-energy form)");

        let mut report = Report::new(&[
            "t",
            "start_point",
            "spectral_value",
            "mc_estimate",
            "std_error",
            "z_score",
            "z_tolerance",
            "within",
        ]);
        let mut query_rng = stream(self.cfg.seed, Purpose::Queries, 0);
        let mut index = 0u64;
        let mut within = 0;
        for &t in &self.cfg.t_grid {
            for _ in 0..self.cfg.queries {
                let x = PointwiseVector::random_unit_interval(params.clone(), &mut query_rng).to_chaos();
                let start = SamplePoint::new(query_rng.random_range(0..params.dim() as u32), params.n())?;
                let cfg = base.with_seed(derive_seed(self.cfg.seed, Purpose::Paths, index));
                index += 1;
                let spectral = spectral_value(&x, &w, t, start)?;
                let mc = estimate_semigroup(&cfg, &x, t, start)?;
                let z = mc.z_score(spectral);
                let ok = z.abs() <= tol.z_score;
                within += ok as usize;
                report.push(vec![
                    num(t),
                    start.bits().to_string(),
                    num(spectral),
                    num(mc.estimate),
                    num(mc.std_error),
                    num(z),
                    num(tol.z_score),
                    verdict(ok),
                ]);
            }
        }
        let total = report.rows.len();
        self.write_report("markov.csv", &report)?;
        let fraction = within as f64 / total as f64;
        let ok = fraction >= tol.min_pass_fraction;
        self.passed &= ok;
        self.line(format!(
            "[{}] Monte Carlo vs spectral semigroup: {within} of {total} queries with |z| <= {} (required fraction {})",
            if ok { "PASS" } else { "FAIL" },
            tol.z_score,
            tol.min_pass_fraction
        ));

        if params.n() <= DENSE_MAX_SITES {
            let r = check_reversibility(&base)?;
            let mut rev = Report::new(&["quantity", "value", "tolerance", "pass"]);
            let rows = [
                ("detailed_balance", r.detailed_balance_deviation, tol.detailed_balance),
                ("generator_eigenvalues", r.eigenvalue_deviation, tol.eigenvalue),
                ("conservativity", r.conservativity_deviation, tol.detailed_balance),
            ];
            let mut failures = 0;
            for (name, value, t) in rows {
                let pass = value <= t;
                failures += !pass as usize;
                rev.push(vec![name.into(), num(value), num(t), verdict(pass)]);
            }
            rev.push(vec![
                "spectral_gap".into(),
                num(r.spectral_gap),
                "NA".into(),
                "NA".into(),
            ]);
            self.write_report("reversibility.csv", &rev)?;
            self.check("detailed balance and generator spectrum", failures, rows.len());
        } else {
            self.line(format!("n > {DENSE_MAX_SITES}: dense reversibility check skipped"));
        }
        Ok(())
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(1.0)
}

/// Runs `command` under `cfg`, writing its CSV reports and `summary.txt`
/// into `out`. The returned outcome passes iff every check did.
pub fn run_command(command: Command, cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let resolved = cfg.resolve()?;
    std::fs::create_dir_all(out)?;
    let mut run = Run {
        cfg: resolved,
        out,
        summary: String::new(),
        files: Vec::new(),
        passed: true,
    };
    let mut header = String::new();
    let _ = writeln!(header, "{} (n = {}, seed = {})", command.name(), cfg.n, cfg.seed);
    run.summary.push_str(&header);
    match command {
        Command::CarCheck => run.car_check()?,
        Command::Transform => run.transform()?,
        Command::FormEval => run.form_eval()?,
        Command::ContractionCheck => run.contraction_check()?,
        Command::SemigroupEvolve => run.semigroup_evolve()?,
        Command::GeneratorCheck => run.generator_check()?,
        Command::MarkovVerify => run.markov_verify()?,
    }
    let verdict = if run.passed {
        "all checks passed"
    } else {
        "some checks FAILED"
    };
    run.line(verdict);
    let summary_path = out.join("summary.txt");
    std::fs::write(&summary_path, &run.summary)?;
    run.files.push(summary_path);
    Ok(Outcome {
        passed: run.passed,
        summary: run.summary,
        files: run.files,
    })
}
