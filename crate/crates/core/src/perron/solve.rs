//! Maximal-solution machinery: lift-and-max sweeps over a ball cover
//! starting from the sub barrier, and the accelerated path that solves the
//! Dirichlet problem directly and certifies every ball at once.

use super::barriers::BarrierPair;
use crate::elliptic::{
    ball_cover, continuation_solve, newton_solve, radius_field, Ball, BallCover, SolveOptions,
};
use crate::geometry::Problem;
use crate::{Error, Result};

/// How the maximal solution is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMode {
    /// Literal lift-and-max sweeps over the ball cover.
    PureSweeps,
    /// One global Dirichlet solve with the barrier trace; the comparison
    /// principle keeps it between the barriers, and a vanishing interior
    /// residual certifies every ball solve as the identity lift.
    Accelerated,
}

/// Current sweep iterate.
#[derive(Clone, Debug)]
pub struct PerronState {
    pub u: Vec<f64>,
    pub sweeps: usize,
    pub last_increment: f64,
}

/// Convergence record of one maximal-solution computation.
#[derive(Clone, Debug)]
pub struct PerronRecord {
    pub accelerated: bool,
    pub sweeps: usize,
    pub last_increment: f64,
    /// Nodes clamped back into the barrier range beyond tolerance.
    pub clamp_count: usize,
    /// Most negative single-node decrement seen across sweeps.
    pub min_monotonicity: f64,
    /// Interior residual at the end; certifies all ball lifts when below
    /// the Newton tolerance.
    pub residual_sup: f64,
    pub certified: bool,
    pub newton_iterations: usize,
    /// Logged (not asserted) boundary trace range.
    pub trace_min: f64,
    pub trace_max: f64,
}

/// Tunables for the sweep engine.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    /// Sup-increment convergence target (default `1e-8 C/t`).
    pub tol: f64,
    /// Scale factor on the cover radii (cover-independence checks pass
    /// a value below 1 to refine).
    pub radius_scale: f64,
    /// Sweeps without improvement of the increment before declaring a stall.
    pub stall_window: usize,
    pub max_sweeps: usize,
}

impl SweepConfig {
    pub fn for_pair(pair: &BarrierPair) -> Self {
        Self {
            tol: 1e-8 * pair.c_big / pair.t,
            radius_scale: 1.0,
            stall_window: 50,
            max_sweeps: 20_000,
        }
    }
}

/// Replaces the iterate on one ball by the local Dirichlet solution with the
/// current values as data, clamped at the super barrier. Returns
/// (max increase, min signed change, clamp events).
pub fn lift(
    problem: &Problem,
    state: &mut PerronState,
    ball: &Ball,
    t: f64,
    pair: &BarrierPair,
    opts: &SolveOptions,
) -> Result<(f64, f64, usize)> {
    let saved: Vec<f64> = ball.free.iter().map(|&i| state.u[i]).collect();
    if let Err(e) = newton_solve(problem, &mut state.u, t, &ball.free, opts) {
        for (k, &i) in ball.free.iter().enumerate() {
            state.u[i] = saved[k];
        }
        return Err(e);
    }
    let clamp_tol = 1e-9 * pair.c_big / t;
    let mut rise = 0.0f64;
    let mut fall = 0.0f64;
    let mut clamps = 0usize;
    for (k, &i) in ball.free.iter().enumerate() {
        if state.u[i] > pair.sup[i] {
            if state.u[i] - pair.sup[i] > clamp_tol {
                clamps += 1;
            }
            state.u[i] = pair.sup[i];
        }
        let d = state.u[i] - saved[k];
        rise = rise.max(d);
        fall = fall.min(d);
    }
    Ok((rise, fall, clamps))
}

/// Greedy coloring of the cover's conflict graph: two balls conflict when
/// one's free set meets the stencil closure of the other's, so all balls of
/// one color could be solved concurrently without interaction.
fn color_cover(problem: &Problem, cover: &BallCover) -> Vec<Vec<usize>> {
    let grid = &problem.domain.grid;
    let n = grid.len();
    // Map node -> balls whose closure (free + Moore rim) contains it.
    let mut touching: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut nbrs = Vec::new();
    for (bi, ball) in cover.balls.iter().enumerate() {
        let mut seen: Vec<usize> = Vec::with_capacity(ball.free.len() * 2);
        for &i in &ball.free {
            seen.push(i);
            nbrs.clear();
            grid.moore_neighbors(i, &mut nbrs);
            seen.extend_from_slice(&nbrs);
        }
        seen.sort_unstable();
        seen.dedup();
        for i in seen {
            touching[i].push(bi as u32);
        }
    }
    let nb = cover.balls.len();
    let mut color = vec![usize::MAX; nb];
    let mut forbidden: Vec<usize> = Vec::new();
    for bi in 0..nb {
        forbidden.clear();
        for &i in &cover.balls[bi].free {
            for &other in &touching[i] {
                let other = other as usize;
                if other != bi && color[other] != usize::MAX {
                    forbidden.push(color[other]);
                }
            }
        }
        forbidden.sort_unstable();
        forbidden.dedup();
        let mut c = 0;
        for &f in &forbidden {
            if f == c {
                c += 1;
            } else if f > c {
                break;
            }
        }
        color[bi] = c;
    }
    let n_colors = color.iter().copied().max().map_or(0, |c| c + 1);
    let mut batches = vec![Vec::new(); n_colors];
    for (bi, &c) in color.iter().enumerate() {
        batches[c].push(bi);
    }
    batches
}

fn trace_range(problem: &Problem, u: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &b in problem.domain.boundary() {
        lo = lo.min(u[b]);
        hi = hi.max(u[b]);
    }
    (lo, hi)
}

/// Computes the maximal solution between the barriers. `warm` seeds the
/// iterate (interior values only; boundary data is taken from the pair).
pub fn perron_solve(
    problem: &Problem,
    pair: &BarrierPair,
    warm: Option<&[f64]>,
    mode: SolveMode,
) -> Result<(Vec<f64>, PerronRecord)> {
    let cfg = SweepConfig::for_pair(pair);
    perron_solve_with(problem, pair, warm, mode, &cfg)
}

pub fn perron_solve_with(
    problem: &Problem,
    pair: &BarrierPair,
    warm: Option<&[f64]>,
    mode: SolveMode,
    cfg: &SweepConfig,
) -> Result<(Vec<f64>, PerronRecord)> {
    match mode {
        SolveMode::Accelerated => accelerated_solve(problem, pair, warm),
        SolveMode::PureSweeps => sweep_solve(problem, pair, warm, cfg),
    }
}

fn accelerated_solve(
    problem: &Problem,
    pair: &BarrierPair,
    warm: Option<&[f64]>,
) -> Result<(Vec<f64>, PerronRecord)> {
    let domain = problem.domain;
    let t = pair.t;
    let phi = pair.dirichlet_trace(problem);
    let mut u = vec![0.0; domain.grid.len()];
    for &b in domain.boundary() {
        u[b] = phi[b];
    }
    let opts = SolveOptions::for_scale(pair.c_big, t);
    if let Some(w) = warm {
        for &i in domain.interior() {
            u[i] = w[i];
        }
    }
    // Adaptive homotopy in the boundary data, warm-started on the interior:
    // smooth problems cost a single full-step solve, steep boundary layers
    // get tracked in smaller increments.
    let newton_iterations =
        continuation_solve(problem, &mut u, t, domain.interior(), domain.boundary(), &phi, &opts)?;
    // Confinement: the comparison principle puts the solution between the
    // barriers; clamp and count anything beyond rounding tolerance.
    let clamp_tol = 1e-9 * pair.c_big / t;
    let mut clamps = 0usize;
    for &i in domain.interior() {
        if u[i] < pair.sub[i] {
            if pair.sub[i] - u[i] > clamp_tol {
                clamps += 1;
            }
            u[i] = pair.sub[i];
        } else if u[i] > pair.sup[i] {
            if u[i] - pair.sup[i] > clamp_tol {
                clamps += 1;
            }
            u[i] = pair.sup[i];
        }
    }
    let residual_sup = problem.residual_sup(&u, t, domain.interior());
    let (trace_min, trace_max) = trace_range(problem, &u);
    let certified = residual_sup <= opts.tol;
    Ok((
        u,
        PerronRecord {
            accelerated: true,
            sweeps: 0,
            last_increment: 0.0,
            clamp_count: clamps,
            min_monotonicity: 0.0,
            residual_sup,
            certified,
            newton_iterations,
            trace_min,
            trace_max,
        },
    ))
}

fn sweep_solve(
    problem: &Problem,
    pair: &BarrierPair,
    warm: Option<&[f64]>,
    cfg: &SweepConfig,
) -> Result<(Vec<f64>, PerronRecord)> {
    let domain = problem.domain;
    let t = pair.t;
    let mut state = PerronState {
        u: pair.sub.clone(),
        sweeps: 0,
        last_increment: f64::INFINITY,
    };
    if let Some(w) = warm {
        // A warm start must stay a sub-solution proxy: take the max with the
        // sub barrier so monotone convergence from below is preserved.
        for &i in domain.interior() {
            state.u[i] = w[i].max(pair.sub[i]).min(pair.sup[i]);
        }
    }
    let mut r = radius_field(problem, pair.c_big, pair.delta);
    for v in r.iter_mut() {
        *v *= cfg.radius_scale;
    }
    let cover = ball_cover(problem, &r)?;
    let batches = color_cover(problem, &cover);
    let opts = SolveOptions::for_scale(pair.c_big, t);

    let mut clamp_count = 0usize;
    let mut min_monotonicity = 0.0f64;
    let mut newton_iterations = 0usize;
    let mut best_increment = f64::INFINITY;
    let mut stall = 0usize;
    loop {
        let before = state.u.clone();
        for batch in &batches {
            for &bi in batch {
                let (_, fall, clamps) =
                    lift(problem, &mut state, &cover.balls[bi], t, pair, &opts)?;
                min_monotonicity = min_monotonicity.min(fall);
                clamp_count += clamps;
                newton_iterations += 1;
            }
        }
        let mut increment = 0.0f64;
        for i in 0..state.u.len() {
            increment = increment.max(state.u[i] - before[i]);
        }
        state.sweeps += 1;
        state.last_increment = increment;
        // Converged only when the increment is below tolerance AND the
        // iterate solves the equation on the covered interior: every ball
        // lift is then the identity to within the local solver tolerance.
        if increment <= cfg.tol
            && problem.residual_sup(&state.u, t, domain.interior()) <= opts.tol
        {
            break;
        }
        if increment < best_increment {
            best_increment = increment;
            stall = 0;
        } else {
            stall += 1;
            if stall >= cfg.stall_window {
                return Err(Error::StalledBelowTolerance(format!(
                    "sweep increment {increment:.3e} stopped improving above {:.3e} for {} sweeps",
                    cfg.tol, cfg.stall_window
                )));
            }
        }
        if state.sweeps >= cfg.max_sweeps {
            return Err(Error::StalledBelowTolerance(format!(
                "no convergence after {} sweeps; increment {increment:.3e}",
                cfg.max_sweeps
            )));
        }
    }
    let residual_sup = problem.residual_sup(&state.u, t, domain.interior());
    let (trace_min, trace_max) = trace_range(problem, &state.u);
    let certified = residual_sup <= opts.tol;
    let record = PerronRecord {
        accelerated: false,
        sweeps: state.sweeps,
        last_increment: state.last_increment,
        clamp_count,
        min_monotonicity,
        residual_sup,
        certified,
        newton_iterations,
        trace_min,
        trace_max,
    };
    Ok((state.u, record))
}
