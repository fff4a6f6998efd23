//! Streaming loop shared by the MSG and MEG solvers: per sample, update both
//! covariance estimates, form the inexact gradient, and hand it to the
//! solver's step.

use nalgebra::DMatrix;

use crate::error::{CcaError, Result};
use crate::oracle::{inexact_gradient, GradientEstimate};
use crate::sample::PairedSample;
use crate::whitening::{Whitener, WhitenerState};

/// Step-size schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// The same step every iteration (theory mode).
    Constant(f64),
    /// `c / sqrt(t)` for iteration `t >= 1`.
    SqrtDecay { c: f64 },
}

impl StepSize {
    pub fn at(&self, t: usize) -> f64 {
        match *self {
            StepSize::Constant(eta) => eta,
            StepSize::SqrtDecay { c } => c / (t.max(1) as f64).sqrt(),
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            StepSize::Constant(eta) => eta,
            StepSize::SqrtDecay { c } => c,
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(CcaError::input(format!(
                "step size must be positive, got {v}"
            )))
        }
    }
}

#[derive(Debug, Clone)]
pub struct StreamConfig {
    pub iterations: usize,
    pub step: StepSize,
    /// Call the hook every this many iterations (and after the last one).
    pub eval_every: usize,
    /// Recompute whiteners every this many iterations; 1 recomputes every step.
    pub whitener_cadence: usize,
}

impl StreamConfig {
    pub fn new(iterations: usize, step: StepSize) -> Self {
        StreamConfig {
            iterations,
            step,
            eval_every: usize::MAX,
            whitener_cadence: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(CcaError::input("iteration count must be positive"));
        }
        if self.eval_every == 0 || self.whitener_cadence == 0 {
            return Err(CcaError::input(
                "eval_every and whitener_cadence must be positive",
            ));
        }
        self.step.validate()
    }
}

/// Owned copy of the solver state handed to evaluation hooks.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub iter: usize,
    pub average: DMatrix<f64>,
    pub whitener_x: Whitener,
    pub whitener_y: Whitener,
    pub sample: PairedSample,
    pub gradient: GradientEstimate,
}

/// A solver advanced one inexact gradient at a time.
pub trait IterateSolver {
    fn step(&mut self, grad: &GradientEstimate, eta: f64) -> Result<()>;
    /// Running average of the iterates seen so far.
    fn average(&self) -> DMatrix<f64>;
    fn iterations(&self) -> usize;
}

pub type Hook<'a> = dyn FnMut(Snapshot) -> Result<()> + 'a;

/// Run `cfg.iterations` steps of `solver` on `stream`, updating the two
/// whitener states in place. Returns the averaged iterate.
pub fn drive<S, I>(
    solver: &mut S,
    stream: I,
    wx: &mut WhitenerState,
    wy: &mut WhitenerState,
    cfg: &StreamConfig,
    hook: &mut Hook<'_>,
) -> Result<DMatrix<f64>>
where
    S: IterateSolver,
    I: IntoIterator<Item = Result<PairedSample>>,
{
    cfg.validate()?;
    let mut stream = stream.into_iter();
    for t in 1..=cfg.iterations {
        let sample = match stream.next() {
            Some(s) => s?,
            None => {
                return Err(CcaError::EarlyTermination {
                    completed: t - 1,
                    requested: cfg.iterations,
                })
            }
        };
        wx.update(&sample.x)?;
        wy.update(&sample.y)?;
        if (t - 1) % cfg.whitener_cadence == 0 {
            wx.refresh()?;
            wy.refresh()?;
        }
        let (wxm, wym) = match (wx.cached(), wy.cached()) {
            (Some(a), Some(b)) => (a, b),
            _ => unreachable!("whiteners refreshed on the first iteration"),
        };
        let grad = inexact_gradient(wxm, wym, &sample.x, &sample.y)?;
        solver.step(&grad, cfg.step.at(t))?;

        if t % cfg.eval_every == 0 || t == cfg.iterations {
            hook(Snapshot {
                iter: t,
                average: solver.average(),
                whitener_x: wxm.clone(),
                whitener_y: wym.clone(),
                sample,
                gradient: grad,
            })?;
        }
    }
    Ok(solver.average())
}
