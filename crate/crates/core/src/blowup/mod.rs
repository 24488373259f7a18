//! Continuation of the regularizing parameter toward zero, classification of
//! the diverging/bounded regions, interface extraction, and verification of
//! the trapped-surface equation on the extracted interface.

mod extract;
mod run;

pub use extract::{
    extract_interface, extract_interface_at, suggested_fit_radius, verify_interface,
    ResidualReport,
};
pub use run::{run_blowup, warm_rescale};

use crate::geometry::{Interface, NodeClass, Problem};
use crate::{Error, Result};

/// Strictly decreasing, positive sequence of regularization parameters.
#[derive(Clone, Debug)]
pub struct ContinuationSchedule {
    pub ts: Vec<f64>,
}

impl ContinuationSchedule {
    /// Geometric schedule from `t0` down to (exactly) `t_floor`.
    pub fn geometric(t0: f64, ratio: f64, t_floor: f64) -> Result<Self> {
        if !(t0 > 0.0) || !(t_floor > 0.0) || t_floor > t0 {
            return Err(Error::InvalidInput(format!(
                "schedule needs 0 < t_floor <= t0, got t0 {t0}, floor {t_floor}"
            )));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidInput(format!(
                "schedule ratio must lie in (0,1), got {ratio}"
            )));
        }
        let mut ts = vec![t0];
        // Step geometrically while the next point stays at least half a step
        // (in log scale) above the floor, then land on the floor exactly.
        // The final jump therefore spans between half and one-and-a-half
        // regular steps, and no point ever dips below the floor.
        let cut = t_floor / ratio.sqrt();
        loop {
            let next = ts.last().unwrap() * ratio;
            if next < cut {
                break;
            }
            ts.push(next);
        }
        if *ts.last().unwrap() > t_floor * 1.000_001 {
            ts.push(t_floor);
        }
        Ok(Self { ts })
    }
}

/// Per-node blow-up classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionLabel {
    /// Diverging to +infinity (scaled value pinned at the +chi/2 level).
    Plus,
    /// Diverging to -infinity.
    Minus,
    /// Bounded: the unscaled solutions stopped moving.
    Zero,
    Undetermined,
    Exterior,
}

/// One completed continuation step.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub t: f64,
    pub u: Vec<f64>,
    pub sup_tu: f64,
    pub inf_tu: f64,
    pub clamp_count: usize,
    pub certified: bool,
    pub max_gradient: f64,
}

/// Full record of one continuation run.
#[derive(Clone, Debug)]
pub struct BlowUpRecord {
    pub chi: f64,
    pub delta: f64,
    pub c_big: f64,
    pub steps: Vec<StepRecord>,
    /// Parameters skipped because the barrier verification asked for a
    /// smaller t.
    pub skipped: Vec<f64>,
    /// Filled by `classify_regions`.
    pub labels: Vec<RegionLabel>,
    /// Filled by `extract_interface`.
    pub interface: Option<Interface>,
    /// Per-vertex trapped-surface residuals, filled by `verify_interface`.
    pub residuals: Vec<f64>,
}

impl BlowUpRecord {
    pub fn last_step(&self) -> Result<&StepRecord> {
        self.steps
            .last()
            .ok_or_else(|| Error::InvalidInput("continuation produced no solves".to_string()))
    }

    /// Both signed collars were reached at every step past the first.
    pub fn divergence_forcing_ok(&self) -> bool {
        self.steps
            .iter()
            .skip(1)
            .all(|s| s.sup_tu >= 0.5 * self.chi && s.inf_tu <= -0.5 * self.chi)
    }

    /// The scaled solution never left the barrier range.
    pub fn global_bound_ok(&self) -> bool {
        let tol = 1e-9 * self.c_big;
        self.steps
            .iter()
            .all(|s| s.sup_tu <= self.c_big + tol && s.inf_tu >= -self.c_big - tol)
    }

    /// Steepest gradient is non-decreasing along the schedule (blow-up
    /// proxy), up to the given relative slack.
    pub fn monotone_steepening_ok(&self, slack: f64) -> bool {
        self.steps
            .windows(2)
            .all(|w| w[1].max_gradient >= (1.0 - slack) * w[0].max_gradient)
    }
}

/// Labels every node from the tail of the continuation: nodes whose scaled
/// value held one signed collar level over the last three solves diverge;
/// nodes whose unscaled values stopped moving are bounded.
pub fn classify_regions(record: &mut BlowUpRecord, problem: &Problem) -> Result<()> {
    if record.steps.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "classification needs at least 3 completed solves, have {}",
            record.steps.len()
        )));
    }
    let tail = &record.steps[record.steps.len() - 3..];
    let t_last = tail[2].t;
    let chi = record.chi;
    let osc_window = 0.01 * chi / (2.0 * t_last);
    let n = problem.grid().len();
    let mut labels = vec![RegionLabel::Undetermined; n];
    for (node, label) in labels.iter_mut().enumerate() {
        if problem.domain.class[node] == NodeClass::Exterior {
            *label = RegionLabel::Exterior;
            continue;
        }
        let vals = [tail[0].u[node], tail[1].u[node], tail[2].u[node]];
        let scaled = [tail[0].t * vals[0], tail[1].t * vals[1], tail[2].t * vals[2]];
        if scaled.iter().all(|&s| s >= 0.5 * chi) {
            *label = RegionLabel::Plus;
        } else if scaled.iter().all(|&s| s <= -0.5 * chi) {
            *label = RegionLabel::Minus;
        } else {
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo <= osc_window {
                *label = RegionLabel::Zero;
            }
        }
    }
    record.labels = labels;
    Ok(())
}

/// Hopf-alternative verdict for a component of near-interface nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HarnackVerdict {
    /// The graph is vertical over the component: the tilt `1/v` is uniformly
    /// small, consistent with a cylinder over the interface.
    Cylindrical,
    /// The tilt is bounded away from zero: the limit stays a graph.
    Graphical,
    /// The tilt straddles the thresholds; reported, not fatal.
    Inconclusive,
}

pub const EPS_CYLINDRICAL: f64 = 1e-2;

/// Applies the dichotomy to the last solve on the given node set: the
/// reciprocal gradient factor `1/v` either vanishes uniformly (cylinder) or
/// is bounded away from zero (graph).
pub fn harnack_classify(
    problem: &Problem,
    u_last: &[f64],
    component: &[usize],
    eps: f64,
) -> Result<HarnackVerdict> {
    if component.is_empty() {
        return Err(Error::InvalidInput(
            "empty node component for the dichotomy check".to_string(),
        ));
    }
    let v = problem.tilt_field(u_last);
    let mut min_inv = f64::INFINITY;
    let mut max_inv = f64::NEG_INFINITY;
    for &node in component {
        let inv = 1.0 / v[node];
        if !inv.is_finite() {
            return Err(Error::InvalidInput(format!(
                "tilt undefined at node {node}"
            )));
        }
        min_inv = min_inv.min(inv);
        max_inv = max_inv.max(inv);
    }
    Ok(if min_inv <= eps {
        if max_inv <= 10.0 * eps {
            HarnackVerdict::Cylindrical
        } else {
            HarnackVerdict::Inconclusive
        }
    } else {
        HarnackVerdict::Graphical
    })
}
