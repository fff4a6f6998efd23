//! Run orchestration: auxiliary split, the streaming loop with periodic
//! evaluation, and the output files.
//!
//! Layout of the sample sequence: the first `tau` samples seed the
//! covariance estimates, the next `T` feed the solver, and the last
//! `max(ceil(5% n), 500)` form a holdout used for empirical objectives. The
//! holdout is dropped when the file is too short to keep it disjoint.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CcaError, Result};
use crate::evaluation::{
    lifted_objective, orthogonality_gap, saa_from_moments, trace_objective, GroundTruth, Moments,
    TheoryConstants,
};
use crate::harness::dataset::SampleSource;
use crate::harness::synthetic::stream;
use crate::meg::{meg_objective_scale, run_meg};
use crate::msg::run_msg;
use crate::oracle::{gradient_error, reference_gradient};
use crate::rounding::{extract_factors, meg_factor_heuristic, round_meg, round_msg, CcaSolution};
use crate::sample::PairedSample;
use crate::solver::{Snapshot, StepSize, StreamConfig};
use crate::spectral::sym_eig;
use crate::whitening::{min_aux_size, Whitener, WhitenerState};

const ROUNDING_STREAM: u64 = 3;
const FINAL_STREAM: u64 = 4;
const HOLDOUT_FRACTION: f64 = 0.05;
const HOLDOUT_MIN: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Msg,
    CappedMsg,
    Meg,
    Saa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EtaMode {
    /// Constant step from the convergence theorem.
    Theory,
    /// `eta_c / sqrt(t)`.
    Sqrt,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub algo: Algo,
    pub k: usize,
    /// Rank cap `K` for capped MSG; defaults to `2k`.
    pub cap_rank: Option<usize>,
    /// Number of streamed iterations `T`.
    pub iterations: usize,
    /// Auxiliary sample size; derived from the theory when absent.
    pub tau: Option<usize>,
    pub eta_mode: EtaMode,
    pub eta_c: f64,
    pub reg_lambda: f64,
    pub seed: u64,
    pub eval_every: usize,
    pub rounding_draws: usize,
    pub whitener_cadence: usize,
    /// Declared bound on `max(||x||^2, ||y||^2)`; samples above it are
    /// rejected. Defaults to the largest value seen in the auxiliary set.
    pub bound_b: Option<f64>,
    /// Report `wall_ms` as 0 so repeated runs produce identical files.
    pub freeze_clock: bool,
}

impl RunConfig {
    pub fn new(algo: Algo, k: usize, iterations: usize) -> Self {
        RunConfig {
            algo,
            k,
            cap_rank: None,
            iterations,
            tau: None,
            eta_mode: EtaMode::Sqrt,
            eta_c: 0.1,
            reg_lambda: 0.0,
            seed: 0,
            eval_every: 100,
            rounding_draws: 10,
            whitener_cadence: 1,
            bound_b: None,
            freeze_clock: false,
        }
    }

    fn validate(&self, d_x: usize, d_y: usize) -> Result<()> {
        if self.k == 0 || self.k > d_x.min(d_y) {
            return Err(CcaError::input(format!(
                "k = {} must lie in 1..={}",
                self.k,
                d_x.min(d_y)
            )));
        }
        if let Some(cap) = self.cap_rank {
            if cap < self.k {
                return Err(CcaError::input(format!(
                    "cap rank {cap} must be at least k = {}",
                    self.k
                )));
            }
        }
        if self.algo != Algo::Saa && self.iterations == 0 {
            return Err(CcaError::input("T must be positive"));
        }
        if self.tau == Some(0) {
            return Err(CcaError::input("tau must be positive"));
        }
        if !(self.eta_c > 0.0 && self.eta_c.is_finite()) {
            return Err(CcaError::input("eta_c must be positive"));
        }
        if !(self.reg_lambda >= 0.0 && self.reg_lambda.is_finite()) {
            return Err(CcaError::input("lambda must be nonnegative"));
        }
        if self.eval_every == 0 || self.rounding_draws == 0 || self.whitener_cadence == 0 {
            return Err(CcaError::input(
                "eval_every, rounding_draws and whitener_cadence must be positive",
            ));
        }
        if let Some(b) = self.bound_b {
            if !(b > 0.0 && b.is_finite()) {
                return Err(CcaError::input("bound B must be positive"));
            }
        }
        Ok(())
    }
}

/// One evaluation point. Absent quantities are written as empty CSV fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub iter: usize,
    pub wall_ms: f64,
    pub pop_obj_avg: Option<f64>,
    pub pop_obj_rounded_mean: Option<f64>,
    pub emp_obj_holdout: Option<f64>,
    pub subopt: Option<f64>,
    pub orth_x: Option<f64>,
    pub orth_y: Option<f64>,
    pub grad_err: Option<f64>,
}

impl MetricsRow {
    pub const HEADER: &'static str =
        "iter,wall_ms,pop_obj_avg,pop_obj_rounded_mean,emp_obj_holdout,subopt,orth_x,orth_y,grad_err";

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.iter,
            self.wall_ms,
            opt(self.pop_obj_avg),
            opt(self.pop_obj_rounded_mean),
            opt(self.emp_obj_holdout),
            opt(self.subopt),
            opt(self.orth_x),
            opt(self.orth_y),
            opt(self.grad_err)
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub algo: Algo,
    pub k: usize,
    pub iterations: usize,
    pub tau: usize,
    pub samples_total: usize,
    pub holdout: usize,
    pub bound_b: Option<f64>,
    /// Step at the first iteration.
    pub eta_first: Option<f64>,
    pub theory: Option<TheoryConstants>,
    pub optimum: Option<f64>,
    pub final_pop_obj_avg: Option<f64>,
    pub final_pop_obj_rounded_mean: Option<f64>,
    pub final_subopt: Option<f64>,
    /// Theorem bound for the algorithm that ran, when constants are known.
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
    pub final_emp_obj_holdout: Option<f64>,
    pub final_orth_x: Option<f64>,
    pub final_orth_y: Option<f64>,
    pub selected_count: usize,
    pub heuristic: bool,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<MetricsRow>,
    pub solution: CcaSolution,
    pub summary: RunSummary,
}

struct Clock {
    start: Instant,
    frozen: bool,
}

impl Clock {
    fn ms(&self) -> f64 {
        if self.frozen {
            0.0
        } else {
            self.start.elapsed().as_secs_f64() * 1e3
        }
    }
}

/// Population quantities available on synthetic runs.
struct Population {
    t: DMatrix<f64>,
    dilation: DMatrix<f64>,
    wx: DMatrix<f64>,
    wy: DMatrix<f64>,
    optimum: f64,
}

impl Population {
    fn new(gt: &GroundTruth, k: usize) -> Result<Self> {
        let t = gt.population_t()?;
        Ok(Population {
            dilation: dilate_matrix(&t),
            wx: gt.whitener_x()?,
            wy: gt.whitener_y()?,
            optimum: gt.optimum(k),
            t,
        })
    }
}

fn dilate_matrix(t: &DMatrix<f64>) -> DMatrix<f64> {
    let (dx, dy) = t.shape();
    let mut c = DMatrix::zeros(dx + dy, dx + dy);
    c.view_mut((0, dx), (dx, dy)).copy_from(t);
    c.view_mut((dx, 0), (dy, dx)).copy_from(&t.transpose());
    c
}

struct Holdout {
    cxy: DMatrix<f64>,
    cxx: DMatrix<f64>,
    cyy: DMatrix<f64>,
}

struct Evaluator<'a> {
    algo: Algo,
    k: usize,
    d_x: usize,
    draws: usize,
    pop: Option<&'a Population>,
    holdout: Option<&'a Holdout>,
    /// Covariances the orthogonality gaps are measured against.
    orth_ref: Option<(&'a DMatrix<f64>, &'a DMatrix<f64>)>,
    rng: ChaCha8Rng,
}

/// Metrics of one rounded draw.
struct DrawMetrics {
    pop: Option<f64>,
    emp: Option<f64>,
    orth: Option<(f64, f64)>,
}

impl Evaluator<'_> {
    fn round_once(
        &self,
        avg: &DMatrix<f64>,
        wx: &Whitener,
        wy: &Whitener,
        rng: &mut ChaCha8Rng,
    ) -> Result<(CcaSolution, DrawMetrics)> {
        let (pop, factors) = match self.algo {
            Algo::Meg => {
                let p = round_meg(avg, self.k, rng)?;
                let pop = self.pop.map(|pp| p.dot(&pp.dilation));
                (pop, meg_factor_heuristic(&p, self.d_x)?)
            }
            _ => {
                let (m, f) = round_msg(avg, self.k, rng)?;
                let pop = match self.pop {
                    Some(pp) => Some(lifted_objective(&m, &pp.t)?),
                    None => None,
                };
                (pop, f)
            }
        };
        let sol = extract_factors(&factors, wx, wy)?;
        let emp = match self.holdout {
            Some(h) => Some(trace_objective(&sol, &h.cxy)?),
            None => None,
        };
        let orth = match self.orth_ref {
            Some((cx, cy)) => Some((
                orthogonality_gap(&sol.u_tilde, cx)?,
                orthogonality_gap(&sol.v_tilde, cy)?,
            )),
            None => None,
        };
        Ok((sol, DrawMetrics { pop, emp, orth }))
    }

    fn objective_of_average(&self, avg: &DMatrix<f64>) -> Result<Option<f64>> {
        let Some(pp) = self.pop else { return Ok(None) };
        Ok(Some(match self.algo {
            Algo::Meg => meg_objective_scale(avg, &pp.dilation, self.k)?,
            _ => lifted_objective(avg, &pp.t)?,
        }))
    }

    fn evaluate(&mut self, snap: &Snapshot, wall_ms: f64) -> Result<MetricsRow> {
        let pop_obj_avg = self.objective_of_average(&snap.average)?;
        let mut rng = self.rng.clone();
        let mut pop = Mean::default();
        let mut emp = Mean::default();
        let mut ox = Mean::default();
        let mut oy = Mean::default();
        for _ in 0..self.draws {
            let (_, d) =
                self.round_once(&snap.average, &snap.whitener_x, &snap.whitener_y, &mut rng)?;
            pop.push(d.pop);
            emp.push(d.emp);
            if let Some((a, b)) = d.orth {
                ox.push(Some(a));
                oy.push(Some(b));
            }
        }
        self.rng = rng;
        let grad_err = match self.pop {
            Some(pp) => {
                let reference = reference_gradient(&pp.wx, &pp.wy, &snap.sample.x, &snap.sample.y)?;
                Some(gradient_error(&reference, &snap.gradient)?)
            }
            None => None,
        };
        Ok(MetricsRow {
            iter: snap.iter,
            wall_ms,
            pop_obj_avg,
            pop_obj_rounded_mean: pop.get(),
            emp_obj_holdout: emp.get(),
            subopt: self.pop.zip(pop_obj_avg).map(|(pp, v)| pp.optimum - v),
            orth_x: ox.get(),
            orth_y: oy.get(),
            grad_err,
        })
    }
}

#[derive(Default)]
struct Mean {
    sum: f64,
    n: usize,
}

impl Mean {
    fn push(&mut self, v: Option<f64>) {
        if let Some(v) = v {
            self.sum += v;
            self.n += 1;
        }
    }

    fn get(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

/// Holdout size for `n` samples.
pub fn holdout_size(n: usize) -> usize {
    ((n as f64 * HOLDOUT_FRACTION).ceil() as usize).max(HOLDOUT_MIN)
}

fn check_sample(s: &PairedSample, bound: Option<f64>, index: usize) -> Result<()> {
    if !s.is_finite() {
        return Err(CcaError::input(format!(
            "sample {index} has non-finite entries"
        )));
    }
    if let Some(b) = bound {
        let v = s.max_sq_norm();
        if v > b {
            return Err(CcaError::input(format!(
                "sample {index} has squared norm {v}, above the declared bound {b}"
            )));
        }
    }
    Ok(())
}

fn accumulate(src: &dyn SampleSource, start: usize, end: usize) -> Result<Moments> {
    let (dx, dy) = src.dims();
    let mut m = Moments::new(dx, dy);
    for s in src.stream(start, end)? {
        m.add(&s?)?;
    }
    Ok(m)
}

/// Run one configuration over `src`, with population metrics when `truth`
/// is given.
pub fn run(
    cfg: &RunConfig,
    src: &dyn SampleSource,
    truth: Option<&GroundTruth>,
) -> Result<RunOutput> {
    let (d_x, d_y) = src.dims();
    cfg.validate(d_x, d_y)?;
    if let Some(gt) = truth {
        if (gt.d_x(), gt.d_y()) != (d_x, d_y) {
            return Err(CcaError::input(format!(
                "truth is {}x{} but data is {d_x}x{d_y}",
                gt.d_x(),
                gt.d_y()
            )));
        }
    }
    let pop = truth.map(|gt| Population::new(gt, cfg.k)).transpose()?;
    match cfg.algo {
        Algo::Saa => run_saa(cfg, src, truth, pop.as_ref()),
        _ => run_streaming(cfg, src, truth, pop.as_ref()),
    }
}

fn run_saa(
    cfg: &RunConfig,
    src: &dyn SampleSource,
    truth: Option<&GroundTruth>,
    pop: Option<&Population>,
) -> Result<RunOutput> {
    let clock = Clock {
        start: Instant::now(),
        frozen: cfg.freeze_clock,
    };
    let n = src.len();
    if n == 0 {
        return Err(CcaError::InsufficientSamples {
            required: 1,
            available: 0,
        });
    }
    let (d_x, d_y) = src.dims();
    let mut moments = Moments::new(d_x, d_y);
    for (i, s) in src.stream(0, n)?.enumerate() {
        let s = s?;
        check_sample(&s, cfg.bound_b, i)?;
        moments.add(&s)?;
    }
    let (cxx, cyy, cxy) = moments.means()?;
    let saa = saa_from_moments(&cxx, &cyy, &cxy, cfg.k, cfg.reg_lambda)?;
    let sol = saa.solution;
    let pop_obj = match pop {
        Some(pp) => Some(lifted_objective(&(&sol.u * sol.v.transpose()), &pp.t)?),
        None => None,
    };
    let (cx, cy) = match truth {
        Some(gt) => (&gt.c_x, &gt.c_y),
        None => (&saa.cov_x, &saa.cov_y),
    };
    let row = MetricsRow {
        iter: n,
        wall_ms: clock.ms(),
        pop_obj_avg: pop_obj,
        pop_obj_rounded_mean: pop_obj,
        emp_obj_holdout: None,
        subopt: pop.zip(pop_obj).map(|(pp, v)| pp.optimum - v),
        orth_x: Some(orthogonality_gap(&sol.u_tilde, cx)?),
        orth_y: Some(orthogonality_gap(&sol.v_tilde, cy)?),
        grad_err: None,
    };
    let summary = RunSummary {
        algo: cfg.algo,
        k: cfg.k,
        iterations: n,
        tau: 0,
        samples_total: n,
        holdout: 0,
        bound_b: cfg.bound_b,
        eta_first: None,
        theory: None,
        optimum: pop.map(|pp| pp.optimum),
        final_pop_obj_avg: row.pop_obj_avg,
        final_pop_obj_rounded_mean: row.pop_obj_rounded_mean,
        final_subopt: row.subopt,
        bound: None,
        within_bound: None,
        final_emp_obj_holdout: None,
        final_orth_x: row.orth_x,
        final_orth_y: row.orth_y,
        selected_count: sol.selected_count,
        heuristic: false,
        wall_ms: row.wall_ms,
    };
    Ok(RunOutput {
        rows: vec![row],
        solution: sol,
        summary,
    })
}

fn resolve_tau(
    cfg: &RunConfig,
    truth: Option<&GroundTruth>,
    d_x: usize,
    d_y: usize,
) -> Result<usize> {
    if let Some(t) = cfg.tau {
        return Ok(t);
    }
    let b = cfg.bound_b.ok_or_else(|| {
        CcaError::input("deriving tau needs a declared bound B; pass tau or the bound")
    })?;
    let gt = truth.ok_or_else(|| {
        CcaError::input("deriving tau needs ground truth for r_x and r_y; pass tau or a truth file")
    })?;
    let (rx, ry) = gt.min_eigenvalues()?;
    min_aux_size(
        b,
        rx,
        ry,
        d_x,
        d_y,
        TheoryConstants::default_delta(cfg.iterations),
    )
}

fn run_streaming(
    cfg: &RunConfig,
    src: &dyn SampleSource,
    truth: Option<&GroundTruth>,
    pop: Option<&Population>,
) -> Result<RunOutput> {
    let (d_x, d_y) = src.dims();
    let n = src.len();
    let t = cfg.iterations;
    if cfg.algo != Algo::CappedMsg && cfg.cap_rank.is_some() {
        log::warn!("cap rank is only used by capped-msg; ignoring it");
    }
    let tau = resolve_tau(cfg, truth, d_x, d_y)?;
    let required = tau + t;
    if n < required {
        return Err(CcaError::InsufficientSamples {
            required,
            available: n,
        });
    }
    let holdout_len = holdout_size(n);
    let holdout_len = if n >= required + holdout_len {
        holdout_len
    } else {
        log::warn!("{n} samples leave no room for a {holdout_len}-sample holdout; running without");
        0
    };

    let aux: Vec<PairedSample> = src.stream(0, tau)?.collect::<Result<_>>()?;
    for (i, s) in aux.iter().enumerate() {
        check_sample(s, cfg.bound_b, i)?;
    }
    let b = match cfg.bound_b {
        Some(b) => b,
        None => aux
            .iter()
            .map(PairedSample::max_sq_norm)
            .fold(0.0, f64::max),
    };

    let cap = match cfg.algo {
        Algo::CappedMsg => Some(cfg.cap_rank.unwrap_or(2 * cfg.k)),
        _ => None,
    };
    let mut wx = WhitenerState::init_from_aux(aux.iter().map(|s| &s.x), cfg.reg_lambda, cap)?;
    let mut wy = WhitenerState::init_from_aux(aux.iter().map(|s| &s.y), cfg.reg_lambda, cap)?;
    drop(aux);

    let (r_x, r_y) = match truth {
        Some(gt) => gt.min_eigenvalues()?,
        None => (
            sym_eig(&wx.regularized_cov())?.min(),
            sym_eig(&wy.regularized_cov())?.min(),
        ),
    };
    let theory = match TheoryConstants::new(
        b,
        r_x,
        r_y,
        d_x,
        d_y,
        cfg.k,
        t,
        TheoryConstants::default_delta(t),
    ) {
        Ok(c) => Some(c),
        Err(e) => {
            log::warn!("theory constants unavailable: {e}");
            None
        }
    };
    let step = match cfg.eta_mode {
        EtaMode::Sqrt => StepSize::SqrtDecay { c: cfg.eta_c },
        EtaMode::Theory => {
            let c = theory.as_ref().ok_or_else(|| {
                CcaError::input("the theory step size needs positive B, r_x and r_y")
            })?;
            StepSize::Constant(match cfg.algo {
                Algo::Meg => c.eta_meg,
                _ => c.eta_msg,
            })
        }
    };

    let holdout = if holdout_len > 0 {
        let (cxx, cyy, cxy) = accumulate(src, n - holdout_len, n)?.means()?;
        Some(Holdout { cxy, cxx, cyy })
    } else {
        None
    };
    let orth_ref = match (truth, holdout.as_ref()) {
        (Some(gt), _) => Some((&gt.c_x, &gt.c_y)),
        (None, Some(h)) => Some((&h.cxx, &h.cyy)),
        (None, None) => None,
    };

    let mut scfg = StreamConfig::new(t, step);
    scfg.eval_every = cfg.eval_every;
    scfg.whitener_cadence = cfg.whitener_cadence;

    let mut eval = Evaluator {
        algo: cfg.algo,
        k: cfg.k,
        d_x,
        draws: cfg.rounding_draws,
        pop,
        holdout: holdout.as_ref(),
        orth_ref,
        rng: stream(cfg.seed, ROUNDING_STREAM),
    };
    let bound_b = cfg.bound_b;
    let training = src.stream(tau, tau + t)?.enumerate().map(move |(i, s)| {
        let s = s?;
        check_sample(&s, bound_b, tau + i)?;
        Ok(s)
    });

    let clock = Clock {
        start: Instant::now(),
        frozen: cfg.freeze_clock,
    };
    let mut rows = Vec::new();
    let mut hook = |snap: Snapshot| -> Result<()> {
        let row = eval.evaluate(&snap, clock.ms())?;
        log::debug!("iter {} subopt {:?}", row.iter, row.subopt);
        rows.push(row);
        Ok(())
    };
    let average = match cfg.algo {
        Algo::Meg => run_meg(training, &mut wx, &mut wy, cfg.k, &scfg, &mut hook)?.0,
        _ => run_msg(training, &mut wx, &mut wy, cfg.k, cap, &scfg, &mut hook)?.0,
    };

    let wx_final = wx.current()?.clone();
    let wy_final = wy.current()?.clone();
    let mut final_rng = stream(cfg.seed, FINAL_STREAM);
    let (solution, _) = eval.round_once(&average, &wx_final, &wy_final, &mut final_rng)?;

    let last = rows
        .last()
        .cloned()
        .expect("the hook runs at the final iteration");
    let bound = theory.as_ref().map(|c| match cfg.algo {
        Algo::Meg => c.bound_meg,
        _ => c.bound_msg,
    });
    let summary = RunSummary {
        algo: cfg.algo,
        k: cfg.k,
        iterations: t,
        tau,
        samples_total: n,
        holdout: holdout_len,
        bound_b: Some(b),
        eta_first: Some(step.at(1)),
        theory,
        optimum: pop.map(|pp| pp.optimum),
        final_pop_obj_avg: last.pop_obj_avg,
        final_pop_obj_rounded_mean: last.pop_obj_rounded_mean,
        final_subopt: last.subopt,
        bound,
        within_bound: last.subopt.zip(bound).map(|(s, b)| s <= b),
        final_emp_obj_holdout: last.emp_obj_holdout,
        final_orth_x: last.orth_x,
        final_orth_y: last.orth_y,
        selected_count: solution.selected_count,
        heuristic: solution.heuristic,
        wall_ms: last.wall_ms,
    };
    Ok(RunOutput {
        rows,
        solution,
        summary,
    })
}

fn with_suffix(prefix: &Path, suffix: &str) -> std::path::PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", MetricsRow::HEADER)?;
    for r in rows {
        writeln!(w, "{}", r.to_csv())?;
    }
    w.flush()?;
    Ok(())
}

/// Solution file: `d_x d_y selected_count heuristic`, then the rows of `U`,
/// `V`, `U_tilde` and `V_tilde`.
pub fn write_solution(path: &Path, sol: &CcaSolution) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "{} {} {} {}",
        sol.u.nrows(),
        sol.v.nrows(),
        sol.selected_count,
        u8::from(sol.heuristic)
    )?;
    for m in [&sol.u, &sol.v, &sol.u_tilde, &sol.v_tilde] {
        for r in 0..m.nrows() {
            let row: Vec<String> = m.row(r).iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write `<prefix>.metrics.csv`, `<prefix>.solution.txt` and
/// `<prefix>.summary.json`.
pub fn write_outputs(prefix: &Path, out: &RunOutput) -> Result<()> {
    write_metrics_csv(&with_suffix(prefix, ".metrics.csv"), &out.rows)?;
    write_solution(&with_suffix(prefix, ".solution.txt"), &out.solution)?;
    let json = serde_json::to_string_pretty(&out.summary)
        .map_err(|e| CcaError::Numerical(format!("summary serialization failed: {e}")))?;
    std::fs::write(with_suffix(prefix, ".summary.json"), json + "\n")?;
    Ok(())
}

pub fn metrics_path(prefix: &Path) -> std::path::PathBuf {
    with_suffix(prefix, ".metrics.csv")
}
