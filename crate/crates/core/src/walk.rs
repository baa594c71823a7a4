//! Classifier-guided walks on the sphere.
//!
//! Each iteration takes a plain gradient step on the classifier's
//! cross-entropy with respect to `z`, renormalizes, and picks the step size
//! by bisection so the point moves exactly `delta` radians.

use std::f64::consts::FRAC_PI_4;
use std::path::Path;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::classifier::loss_and_input_gradient;
use crate::error::{Error, Result};
use crate::nn::MlpModel;
use crate::sphere::{self, geodesic_distance, LatentVector, UNIT_TOLERANCE};
use crate::textfmt;

pub const FORMAT_VERSION: u64 = 1;
pub const MAX_SEARCH_STEPS: usize = 50;
/// Bisection stops once the realized step is within this fraction of delta.
pub const STEP_RELATIVE_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Target label: 1 walks toward the attribute, 0 away from it.
    pub y: u8,
    /// Geodesic length of every step, in radians.
    pub delta: f64,
    pub iterations: usize,
    pub snapshot_every: usize,
    /// Stop once the loss is at or below this; 0 walks the full length.
    pub stop_loss: f64,
    pub grad_floor: f64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            y: 1,
            delta: 0.005,
            iterations: 500,
            snapshot_every: 50,
            stop_loss: 1e-3,
            grad_floor: 1e-12,
        }
    }
}

impl WalkConfig {
    pub fn toward(y: u8) -> Self {
        WalkConfig {
            y,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.y > 1 {
            return Err(Error::Spec(format!("target y must be 0 or 1, got {}", self.y)));
        }
        if !(self.delta > 0.0 && self.delta < FRAC_PI_4) {
            return Err(Error::Spec(format!("delta must lie in (0, π/4), got {}", self.delta)));
        }
        if self.iterations == 0 || self.snapshot_every == 0 || !self.iterations.is_multiple_of(self.snapshot_every) {
            return Err(Error::Spec(format!(
                "snapshot_every ({}) must divide iterations ({})",
                self.snapshot_every, self.iterations
            )));
        }
        if !(self.stop_loss >= 0.0) || !(self.grad_floor >= 0.0) {
            return Err(Error::Spec("stop_loss and grad_floor must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    StopLoss,
    VanishedGradient,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::StopLoss => "stop_loss",
            Termination::VanishedGradient => "vanished_gradient",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub delta: f64,
    pub y: u8,
    /// `z0`, every `snapshot_every`-th iterate, and the final point.
    pub snapshots: Vec<LatentVector>,
    /// Iteration index of each snapshot; 0 is `z0`.
    pub snapshot_iters: Vec<usize>,
    /// Loss at `z0`.
    pub initial_loss: f64,
    /// Loss after each executed iteration.
    pub losses: Vec<f64>,
    /// Geodesic distance moved by each executed iteration.
    pub steps: Vec<f64>,
    pub reason: Termination,
    pub diagnostic: Option<String>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.snapshots.first().map_or(0, LatentVector::dim)
    }

    pub fn iterations(&self) -> usize {
        self.losses.len()
    }

    pub fn final_point(&self) -> &LatentVector {
        self.snapshots.last().expect("a trajectory always holds z0")
    }

    /// Errors unless the trajectory lives in dimension `d`.
    pub fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim() != d {
            return Err(Error::Shape(format!(
                "trajectory has d = {}, pipeline has d = {d}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Fraction of iterations whose loss did not rise above the previous
    /// one (the first is compared with the initial loss).
    pub fn non_increasing_fraction(&self) -> f64 {
        if self.losses.is_empty() {
            return 1.0;
        }
        let mut prev = self.initial_loss;
        let mut ok = 0;
        for &l in &self.losses {
            if l <= prev {
                ok += 1;
            }
            prev = l;
        }
        ok as f64 / self.losses.len() as f64
    }
}

/// Result of the step-size search.
enum Step {
    Found(LatentVector),
    Unreachable(String),
}

/// Finds `eta` with `geodesic_distance(z, normalize(z − eta·g)) = delta`.
/// The distance grows monotonically with `eta` toward the angle between
/// `z` and `−g`, so the search brackets by doubling, then bisects.
fn constant_arc_step(z: &LatentVector, g: &Array1<f64>, delta: f64) -> Result<Step> {
    let gnorm = g.dot(g).sqrt();
    let tol = STEP_RELATIVE_TOLERANCE * delta;
    let moved = |eta: f64| -> Result<(LatentVector, f64)> {
        let next = sphere::normalize((z.as_array() - &(g * eta)).view())?;
        let d = geodesic_distance(z, &next)?;
        Ok((next, d))
    };

    let mut lo = 0.0;
    let mut hi = delta / gnorm;
    let mut at_hi = moved(hi)?;
    let mut doublings = 0;
    while at_hi.1 < delta - tol {
        if doublings == MAX_SEARCH_STEPS {
            return Ok(Step::Unreachable(format!(
                "step of {delta} rad unreachable: normalized update saturates at {:.6e} rad",
                at_hi.1
            )));
        }
        lo = hi;
        hi *= 2.0;
        at_hi = moved(hi)?;
        doublings += 1;
    }
    if (at_hi.1 - delta).abs() <= tol {
        return Ok(Step::Found(at_hi.0));
    }
    let mut best = at_hi;
    for _ in 0..MAX_SEARCH_STEPS {
        let mid = 0.5 * (lo + hi);
        let at_mid = moved(mid)?;
        if (at_mid.1 - delta).abs() < (best.1 - delta).abs() {
            best = at_mid.clone();
        }
        if (at_mid.1 - delta).abs() <= tol {
            return Ok(Step::Found(at_mid.0));
        }
        if at_mid.1 < delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Step::Unreachable(format!(
        "bisection did not reach {delta} rad; closest was {:.6e}",
        best.1
    )))
}

fn evaluate(classifier: &MlpModel, z: &LatentVector, y: u8, iteration: usize) -> Result<(f64, Array1<f64>)> {
    let (loss, g) = loss_and_input_gradient(classifier, z, y)?;
    if !loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite loss or gradient at iteration {iteration}"
        )));
    }
    Ok((loss, g))
}

/// Walks `z0` toward the classifier's label `cfg.y`.
pub fn semantic_walk(classifier: &MlpModel, z0: &LatentVector, cfg: &WalkConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if (z0.norm() - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::Invalid(format!("z0 has norm {}", z0.norm())));
    }
    let (initial_loss, mut g) = evaluate(classifier, z0, cfg.y, 0)?;
    let mut t = Trajectory {
        delta: cfg.delta,
        y: cfg.y,
        snapshots: vec![z0.clone()],
        snapshot_iters: vec![0],
        initial_loss,
        losses: Vec::new(),
        steps: Vec::new(),
        reason: Termination::Completed,
        diagnostic: None,
    };
    if initial_loss <= cfg.stop_loss {
        t.reason = Termination::StopLoss;
        return Ok(t);
    }

    let mut z = z0.clone();
    for i in 1..=cfg.iterations {
        let gnorm = g.dot(&g).sqrt();
        if gnorm < cfg.grad_floor || gnorm == 0.0 {
            t.reason = Termination::VanishedGradient;
            t.diagnostic = Some(format!("gradient norm {gnorm:e} below floor at iteration {i}"));
            break;
        }
        let next = match constant_arc_step(&z, &g, cfg.delta)? {
            Step::Found(next) => next,
            Step::Unreachable(why) => {
                t.reason = Termination::VanishedGradient;
                t.diagnostic = Some(format!("iteration {i}: {why}"));
                break;
            }
        };
        t.steps.push(geodesic_distance(&z, &next)?);
        z = next;
        let (loss, grad) = evaluate(classifier, &z, cfg.y, i)?;
        g = grad;
        t.losses.push(loss);
        if i % cfg.snapshot_every == 0 {
            t.snapshots.push(z.clone());
            t.snapshot_iters.push(i);
        }
        if loss <= cfg.stop_loss {
            t.reason = Termination::StopLoss;
            break;
        }
    }
    let done = t.losses.len();
    if *t.snapshot_iters.last().expect("z0 recorded") != done {
        t.snapshots.push(z);
        t.snapshot_iters.push(done);
    }
    Ok(t)
}

#[derive(Serialize, Deserialize)]
struct TrajectoryFile {
    format_version: u64,
    d: usize,
    delta: f64,
    y: u8,
    snapshots: Vec<Vec<f64>>,
    snapshot_iters: Vec<usize>,
    initial_loss: f64,
    losses: Vec<f64>,
    steps: Vec<f64>,
    reason: Termination,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diagnostic: Option<String>,
}

pub fn trajectory_to_text(t: &Trajectory) -> Result<String> {
    textfmt::to_string(&TrajectoryFile {
        format_version: FORMAT_VERSION,
        d: t.dim(),
        delta: t.delta,
        y: t.y,
        snapshots: t.snapshots.iter().map(LatentVector::to_vec).collect(),
        snapshot_iters: t.snapshot_iters.clone(),
        initial_loss: t.initial_loss,
        losses: t.losses.clone(),
        steps: t.steps.clone(),
        reason: t.reason,
        diagnostic: t.diagnostic.clone(),
    })
}

pub fn trajectory_from_text(text: &str) -> Result<Trajectory> {
    let version: serde_json::Value = textfmt::from_str(text, "trajectory")?;
    let found = version.get("format_version").and_then(|v| v.as_u64());
    if found != Some(FORMAT_VERSION) {
        return match found {
            Some(found) => Err(Error::Version {
                found,
                expected: FORMAT_VERSION,
            }),
            None => Err(Error::malformed("trajectory", "missing format_version")),
        };
    }
    let f: TrajectoryFile = textfmt::from_str(text, "trajectory")?;
    let bad = |d: String| Error::malformed("trajectory", d);
    if f.snapshots.is_empty() || f.snapshots.len() != f.snapshot_iters.len() {
        return Err(bad(
            "snapshots and snapshot_iters must be non-empty and equal length".into()
        ));
    }
    if f.losses.len() != f.steps.len() {
        return Err(bad(format!("{} losses but {} steps", f.losses.len(), f.steps.len())));
    }
    let mut snapshots = Vec::with_capacity(f.snapshots.len());
    for (i, s) in f.snapshots.into_iter().enumerate() {
        if s.len() != f.d {
            return Err(bad(format!("snapshot {i} has {} components, d = {}", s.len(), f.d)));
        }
        snapshots.push(LatentVector::from_unit(Array1::from(s)).map_err(|e| bad(format!("snapshot {i}: {e}")))?);
    }
    Ok(Trajectory {
        delta: f.delta,
        y: f.y,
        snapshots,
        snapshot_iters: f.snapshot_iters,
        initial_loss: f.initial_loss,
        losses: f.losses,
        steps: f.steps,
        reason: f.reason,
        diagnostic: f.diagnostic,
    })
}

pub fn export_trajectory(t: &Trajectory, path: &Path) -> Result<()> {
    textfmt::write_bytes(path, trajectory_to_text(t)?.as_bytes())
}

pub fn import_trajectory(path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    trajectory_from_text(&text)
}
