//! Damped Newton solver for the graph operator on a free node set with
//! Dirichlet data on the complement. Small systems go through a dense LU;
//! larger ones use the banded factorization, with one step of iterative
//! refinement guarding the linear residual.

use super::banded::BandedMatrix;
use crate::geometry::{code_neighbor, Problem, StencilRow};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Tolerances and limits for a Newton run.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Sup-norm residual target.
    pub tol: f64,
    pub max_iter: usize,
    /// Step halvings allowed per iteration before declaring divergence.
    pub max_halvings: usize,
    /// Unknown-count ceiling for the dense linear path.
    pub dense_limit: usize,
    /// Relative linear residual allowed after one refinement pass.
    pub linear_tol: f64,
}

impl SolveOptions {
    /// Default scaling: the residual carries magnitudes up to `C / t`, so
    /// the target floor scales the same way.
    pub fn for_scale(c_big: f64, t: f64) -> Self {
        Self {
            tol: 1e-10 * (1.0 + c_big / t),
            max_iter: 60,
            max_halvings: 30,
            dense_limit: 700,
            linear_tol: 1e-12,
        }
    }
}

/// Outcome of a converged Newton run.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual_sup: f64,
    pub halvings_total: usize,
}

/// One assembled Newton system: residual vector and sparse Jacobian triples
/// in local (free-set) indices.
struct Assembled {
    f: Vec<f64>,
    /// (row, col, coeff) with row, col local.
    triples: Vec<(usize, usize, f64)>,
    bandwidth: usize,
}

fn assemble(
    problem: &Problem,
    u: &[f64],
    t: f64,
    free: &[usize],
    local: &[isize],
) -> Assembled {
    let grid = problem.grid();
    let codes = problem.stencil_len();
    let mut row = StencilRow::default();
    let mut f = vec![0.0; free.len()];
    let mut triples = Vec::with_capacity(free.len() * codes);
    let mut bandwidth = 0usize;
    for (li, &node) in free.iter().enumerate() {
        f[li] = problem.residual_and_row(u, t, node, &mut row);
        for code in 0..codes {
            let c = row.coeffs[code];
            if c == 0.0 {
                continue;
            }
            let nbr = code_neighbor(grid, node, code);
            let lj = local[nbr];
            if lj < 0 {
                continue; // Dirichlet neighbor: no column.
            }
            let lj = lj as usize;
            bandwidth = bandwidth.max(li.abs_diff(lj));
            triples.push((li, lj, c));
        }
    }
    Assembled {
        f,
        triples,
        bandwidth,
    }
}

/// Solves `J d = -f`, verifying the relative linear residual with one pass
/// of iterative refinement when needed.
fn linear_solve(a: &Assembled, m: usize, opts: &SolveOptions) -> Result<Vec<f64>> {
    let fnorm = a.f.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    // Row-sum norm of J for the backward-error denominator.
    let mut row_sum = vec![0.0f64; m];
    for &(i, _, c) in &a.triples {
        row_sum[i] += c.abs();
    }
    let jnorm = row_sum.iter().fold(0.0f64, |s, v| s.max(*v));
    let apply = |x: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0);
        for &(i, j, c) in &a.triples {
            out[i] += c * x[j];
        }
    };
    // Normwise backward error |J d + F| / (|J| |d| + |F|): the measure a
    // stable factorization can actually drive to rounding level.
    let residual = |d: &[f64], scratch: &mut [f64]| -> f64 {
        apply(d, scratch);
        let mut worst = 0.0f64;
        let mut dnorm = 0.0f64;
        for i in 0..m {
            worst = worst.max((scratch[i] + a.f[i]).abs());
            dnorm = dnorm.max(d[i].abs());
        }
        worst / (jnorm * dnorm + fnorm)
    };

    let mut scratch = vec![0.0; m];
    if m <= opts.dense_limit {
        let mut jm = DMatrix::<f64>::zeros(m, m);
        for &(i, j, c) in &a.triples {
            jm[(i, j)] += c;
        }
        let rhs = DVector::from_iterator(m, a.f.iter().map(|v| -v));
        let lu = jm.clone().lu();
        let mut d = lu
            .solve(&rhs)
            .ok_or_else(|| Error::LinearSolveFailed("singular dense Jacobian".to_string()))?
            .as_slice()
            .to_vec();
        if residual(&d, &mut scratch) > opts.linear_tol {
            // One refinement pass: correct with the same factorization.
            let mut r = DVector::zeros(m);
            apply(&d, scratch.as_mut_slice());
            for i in 0..m {
                r[i] = -(scratch[i] + a.f[i]);
            }
            if let Some(corr) = lu.solve(&r) {
                for i in 0..m {
                    d[i] += corr[i];
                }
            }
            let rel = residual(&d, &mut scratch);
            if rel > opts.linear_tol {
                return Err(Error::LinearSolveFailed(format!(
                    "linear residual {rel:.3e} above {:.1e} after refinement",
                    opts.linear_tol
                )));
            }
        }
        Ok(d)
    } else {
        let kb = a.bandwidth;
        let mut band = BandedMatrix::new(m, kb, kb);
        for &(i, j, c) in &a.triples {
            band.add(i, j, c);
        }
        band.factor()?;
        let mut d: Vec<f64> = a.f.iter().map(|v| -v).collect();
        band.solve(&mut d)?;
        if residual(&d, &mut scratch) > opts.linear_tol {
            apply(&d, &mut scratch);
            let mut r: Vec<f64> = (0..m).map(|i| -(scratch[i] + a.f[i])).collect();
            band.solve(&mut r)?;
            for i in 0..m {
                d[i] += r[i];
            }
            let rel = residual(&d, &mut scratch);
            if rel > opts.linear_tol {
                return Err(Error::LinearSolveFailed(format!(
                    "linear residual {rel:.3e} above {:.1e} after refinement",
                    opts.linear_tol
                )));
            }
        }
        Ok(d)
    }
}

/// Damped Newton iteration on `free` nodes; `u` holds Dirichlet data
/// everywhere else and is updated in place. Fails with `NewtonDiverged`
/// when no damped step reduces the residual.
pub fn newton_solve(
    problem: &Problem,
    u: &mut [f64],
    t: f64,
    free: &[usize],
    opts: &SolveOptions,
) -> Result<SolveReport> {
    if free.is_empty() {
        return Ok(SolveReport {
            iterations: 0,
            residual_sup: 0.0,
            halvings_total: 0,
        });
    }
    debug_assert!(free.iter().all(|&n| problem.domain.is_interior(n)));
    let mut local = vec![-1isize; problem.grid().len()];
    for (li, &node) in free.iter().enumerate() {
        local[node] = li as isize;
    }
    let m = free.len();
    let mut halvings_total = 0usize;

    let l2 = |f: &[f64]| f.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut a = assemble(problem, u, t, free, &local);
    let mut sup = a.f.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let mut nrm2 = l2(&a.f);
    for iter in 0..opts.max_iter {
        if sup <= opts.tol {
            return Ok(SolveReport {
                iterations: iter,
                residual_sup: sup,
                halvings_total,
            });
        }
        let d = linear_solve(&a, m, opts)?;
        // Backtracking line search. The Newton direction is a guaranteed
        // descent direction for the squared-residual merit, so acceptance
        // tests that norm as well as the sup-norm (which can resist descent
        // at a single node even while the step makes global progress).
        let saved: Vec<f64> = free.iter().map(|&n| u[n]).collect();
        let mut lambda = 1.0f64;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            for (li, &node) in free.iter().enumerate() {
                u[node] = saved[li] + lambda * d[li];
            }
            let trial = assemble(problem, u, t, free, &local);
            let trial_sup = trial.f.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            let trial_l2 = l2(&trial.f);
            if trial_sup <= (1.0 - 0.25 * lambda) * sup
                || trial_l2 <= (1.0 - 0.25 * lambda) * nrm2
                || trial_sup <= opts.tol
            {
                a = trial;
                sup = trial_sup;
                nrm2 = trial_l2;
                accepted = true;
                break;
            }
            lambda *= 0.5;
            halvings_total += 1;
        }
        if !accepted {
            for (li, &node) in free.iter().enumerate() {
                u[node] = saved[li];
            }
            return Err(Error::NewtonDiverged(format!(
                "no damped step reduced sup residual {sup:.6e} at iteration {iter}"
            )));
        }
    }
    if sup <= opts.tol {
        return Ok(SolveReport {
            iterations: opts.max_iter,
            residual_sup: sup,
            halvings_total,
        });
    }
    Err(Error::NewtonDiverged(format!(
        "residual {sup:.6e} above tol {:.6e} after {} iterations",
        opts.tol, opts.max_iter
    )))
}

/// Globalized Dirichlet solve: drives the values on `data_nodes` from zero
/// up to `target` along an adaptive homotopy, Newton-solving on `free` at
/// each fraction from the previously converged iterate. The zero-data state
/// is mild for any admissible geometry, so a base point always exists; the
/// full step is tried first, so well-conditioned problems cost one solve.
/// On success `u` carries the solution on `free` and `target` values on
/// `data_nodes`; returns total Newton iterations.
pub fn continuation_solve(
    problem: &Problem,
    u: &mut Vec<f64>,
    t: f64,
    free: &[usize],
    data_nodes: &[usize],
    target: &[f64],
    opts: &SolveOptions,
) -> Result<usize> {
    let mut gamma = 0.0f64;
    let mut step = 1.0f64;
    let mut attempts = 0usize;
    let mut iterations = 0usize;
    for &b in data_nodes {
        u[b] = 0.0;
    }
    while gamma < 1.0 {
        let g_try = (gamma + step).min(1.0);
        let mut trial = u.clone();
        for &b in data_nodes {
            trial[b] = g_try * target[b];
        }
        match newton_solve(problem, &mut trial, t, free, opts) {
            Ok(report) => {
                *u = trial;
                gamma = g_try;
                iterations += report.iterations;
                step = (step * 2.0).min(1.0);
            }
            Err(Error::NewtonDiverged(_)) if step > 1e-4 => {
                step *= 0.5;
            }
            Err(e) => return Err(e),
        }
        attempts += 1;
        if attempts > 500 && gamma < 1.0 {
            return Err(Error::NewtonDiverged(format!(
                "data continuation stalled at fraction {gamma:.4}"
            )));
        }
    }
    Ok(iterations)
}
