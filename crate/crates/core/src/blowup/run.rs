//! The continuation driver: solves the regularized problem along a
//! decreasing parameter schedule with warm starts rescaled in the diverging
//! collars.

use super::{BlowUpRecord, ContinuationSchedule, StepRecord};
use crate::datasets::{trapping_margins, InitialData};
use crate::geometry::{gradient_sup, DomainVariant, NodeClass, Problem};
use crate::perron::{build_closed_barriers, build_plateau_barriers, perron_solve, SolveMode};
use crate::{Error, Result};

/// Rescales a previous solution for use as a warm start at a smaller
/// parameter: in the diverging collars (|t_prev * u| at the chi/2 level) the
/// scaled value t*u is preserved, in the bounded region the unscaled value
/// is, with a smooth blend between.
pub fn warm_rescale(u_prev: &[f64], t_prev: f64, t_next: f64, chi: f64) -> Vec<f64> {
    let ratio = t_prev / t_next;
    u_prev
        .iter()
        .map(|&v| {
            let s = (t_prev * v).abs();
            let lambda = if s <= 0.25 * chi {
                0.0
            } else if s >= 0.5 * chi {
                1.0
            } else {
                let x = (s - 0.25 * chi) / (0.25 * chi);
                x * x * (3.0 - 2.0 * x)
            };
            v * (1.0 + lambda * (ratio - 1.0))
        })
        .collect()
}

/// Runs the full continuation: margins, barriers at each scheduled
/// parameter (skipping parameters whose barrier verification demands a
/// smaller t), warm-started solves, and per-step confinement bookkeeping.
/// Classification, extraction, and verification are separate passes over the
/// returned record.
pub fn run_blowup(
    data: &InitialData,
    schedule: &ContinuationSchedule,
    mode: SolveMode,
) -> Result<BlowUpRecord> {
    let margins = trapping_margins(data)?;
    let problem = Problem {
        domain: &data.domain,
        geometry: &data.geometry,
    };
    let grid = &data.domain.grid;
    let mut record = BlowUpRecord {
        chi: margins.chi,
        delta: margins.delta,
        c_big: data.c_big,
        steps: Vec::new(),
        skipped: Vec::new(),
        labels: Vec::new(),
        interface: None,
        residuals: Vec::new(),
    };
    let mut prev: Option<(f64, Vec<f64>)> = None;
    for &t in &schedule.ts {
        let built = match data.domain.variant {
            DomainVariant::ClosedPair => {
                build_closed_barriers(&problem, margins.chi, margins.delta, data.c_big, t)
            }
            DomainVariant::Seamed => {
                build_plateau_barriers(&problem, margins.chi, margins.delta, data.c_big, t)
            }
        };
        let pair = match built {
            Ok(p) => p,
            Err(Error::BarrierVerificationFailed(_)) => {
                // The barrier wants a smaller parameter; skip this one.
                record.skipped.push(t);
                continue;
            }
            Err(e) => return Err(e.context(&format!("barriers at t {t:.6e}"))),
        };
        let warm = prev
            .as_ref()
            .map(|(tp, up)| warm_rescale(up, *tp, t, margins.chi));
        let (u, solve_rec) = perron_solve(&problem, &pair, warm.as_deref(), mode)
            .map_err(|e| e.context(&format!("solve at t {t:.6e}")))?;
        let mut sup_tu = f64::NEG_INFINITY;
        let mut inf_tu = f64::INFINITY;
        for node in 0..grid.len() {
            if data.domain.class[node] == NodeClass::Exterior {
                continue;
            }
            let s = t * u[node];
            sup_tu = sup_tu.max(s);
            inf_tu = inf_tu.min(s);
        }
        let max_gradient = gradient_sup(grid, &data.domain.class, &u);
        record.steps.push(StepRecord {
            t,
            u: u.clone(),
            sup_tu,
            inf_tu,
            clamp_count: solve_rec.clamp_count,
            certified: solve_rec.certified,
            max_gradient,
        });
        prev = Some((t, u));
    }
    if record.steps.is_empty() {
        return Err(Error::BarrierVerificationFailed(
            "every scheduled parameter was skipped by barrier verification".to_string(),
        ));
    }
    Ok(record)
}
