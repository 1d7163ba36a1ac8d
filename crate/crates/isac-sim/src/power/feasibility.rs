//! Projection-based solver for convex feasibility programs.
//!
//! A problem is a list of blocks, each mapping the decision vector affinely
//! into a simple convex set (second-order cone, Euclidean ball or box). The
//! solver runs an operator-splitting iteration: alternate between the least
//! squares projection onto the affine graph `z = A x + b` (one cached Cholesky
//! factorization) and the closed-form projections onto the per-block sets.
//!
//! Feasibility is decided by an external checker evaluated on the current
//! iterate, never by the solver's own residual alone; a stalled residual or
//! the iteration cap is reported as infeasible, which biases any enclosing
//! bisection downward rather than returning an invalid point.

use std::io::Write;

use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    /// `||z[1..]|| <= z[0]`
    Soc,
    /// `||z|| <= radius`
    Ball { radius: f64 },
    /// per-coordinate bounds (use infinities for one-sided constraints)
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

/// One constraint family: `rows * x + offset` must land in `set`.
#[derive(Debug, Clone)]
pub struct Block {
    pub set: ConvexSet,
    pub rows: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl Block {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Debug, Clone)]
pub struct FeasibilityProblem {
    pub n: usize,
    pub blocks: Vec<Block>,
}

impl FeasibilityProblem {
    pub fn total_rows(&self) -> usize {
        self.blocks.iter().map(Block::dim).sum()
    }

    /// Plain-text dump for cross-checking against external solvers.
    ///
    /// Format: `n <vars>`, then per block a header
    /// `block <soc|ball radius|box> rows <r>` followed by one line per row:
    /// the `n` coefficients, `|`, the offset (and for boxes the bounds).
    pub fn dump<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "n {}", self.n)?;
        for block in &self.blocks {
            match &block.set {
                ConvexSet::Soc => writeln!(w, "block soc rows {}", block.dim())?,
                ConvexSet::Ball { radius } => {
                    writeln!(w, "block ball {radius} rows {}", block.dim())?
                }
                ConvexSet::Box { .. } => writeln!(w, "block box rows {}", block.dim())?,
            }
            for (i, row) in block.rows.iter().enumerate() {
                for v in row {
                    write!(w, "{v} ")?;
                }
                write!(w, "| {}", block.offset[i])?;
                if let ConvexSet::Box { lo, hi } = &block.set {
                    write!(w, " [{} {}]", lo[i], hi[i])?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Primal residual tolerance.
    pub tol: f64,
    pub max_iterations: usize,
    /// How often the external feasibility checker runs on the iterate.
    pub check_every: usize,
    /// Iterations without residual progress before declaring a stall.
    pub stall_window: usize,
    pub over_relaxation: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iterations: 100_000,
            check_every: 25,
            stall_window: 1_000,
            over_relaxation: 1.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveStatus {
    Feasible,
    /// No point found; `iteration_cap_hit` distinguishes the budget running
    /// out from a detected stall.
    Infeasible { iteration_cap_hit: bool },
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub point: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Splitting state carried between related solves (bisection probes reuse it).
#[derive(Debug, Clone, Default)]
pub struct WarmStart {
    z: Vec<f64>,
    u: Vec<f64>,
}

impl WarmStart {
    /// True until a solve has populated the state.
    pub fn is_fresh(&self) -> bool {
        self.z.is_empty()
    }

    /// Drops the carried state so the next solve starts cold.
    pub fn clear(&mut self) {
        self.z.clear();
        self.u.clear();
    }
}

fn project(set: &ConvexSet, z: &mut [f64]) {
    match set {
        ConvexSet::Soc => {
            let t = z[0];
            let norm: f64 = z[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= t {
                // inside
            } else if norm <= -t {
                z.iter_mut().for_each(|v| *v = 0.0);
            } else {
                let s = (norm + t) / 2.0;
                z[0] = s;
                let scale = s / norm;
                z[1..].iter_mut().for_each(|v| *v *= scale);
            }
        }
        ConvexSet::Ball { radius } => {
            let norm: f64 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > *radius {
                let scale = if norm > 0.0 { radius / norm } else { 0.0 };
                z.iter_mut().for_each(|v| *v *= scale);
            }
        }
        ConvexSet::Box { lo, hi } => {
            for (i, v) in z.iter_mut().enumerate() {
                *v = v.clamp(lo[i], hi[i]);
            }
        }
    }
}

/// Runs the splitting iteration. `is_feasible` is the independent constraint
/// evaluator; the solver returns `Feasible` only for points it accepts.
pub fn solve<F>(
    problem: &FeasibilityProblem,
    opts: &SolverOptions,
    warm: Option<&mut WarmStart>,
    is_feasible: F,
) -> SolveOutcome
where
    F: Fn(&[f64]) -> bool,
{
    let n = problem.n;
    let rows = problem.total_rows();

    // flatten A and b
    let mut a = vec![0.0; rows * n];
    let mut b = vec![0.0; rows];
    let mut r = 0;
    for block in &problem.blocks {
        for (i, row) in block.rows.iter().enumerate() {
            a[(r + i) * n..(r + i + 1) * n].copy_from_slice(row);
            b[r + i] = block.offset[i];
        }
        r += block.dim();
    }

    // normal matrix A^T A, factorized once
    let mut h = vec![0.0; n * n];
    for row in a.chunks_exact(n) {
        for i in 0..n {
            if row[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                h[i * n + j] += row[i] * row[j];
            }
        }
    }
    let chol = match linalg::cholesky(&h, n) {
        Some(l) => l,
        None => {
            // decision vector not fully pinned by the constraints; a free
            // coordinate means any value works there, regularize mildly
            for i in 0..n {
                h[i * n + i] += 1e-10;
            }
            linalg::cholesky(&h, n).expect("regularized normal matrix must factor")
        }
    };

    let mut local_warm = WarmStart::default();
    let warm = warm.unwrap_or(&mut local_warm);
    if warm.z.len() != rows {
        warm.z = b.clone();
        // start inside the sets
        let mut rr = 0;
        for block in &problem.blocks {
            project(&block.set, &mut warm.z[rr..rr + block.dim()]);
            rr += block.dim();
        }
        warm.u = vec![0.0; rows];
    }

    let mut x = vec![0.0; n];
    let mut ax = vec![0.0; rows];
    let mut relaxed = vec![0.0; rows];
    let mut rhs = vec![0.0; n];
    let mut best_residual = f64::INFINITY;
    let mut best_residual_iter = 0usize;

    let matvec = |x: &[f64], out: &mut [f64]| {
        for (i, row) in a.chunks_exact(n).enumerate() {
            out[i] = row.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + b[i];
        }
    };

    for iter in 1..=opts.max_iterations {
        // x-update: least squares onto the affine graph
        rhs.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in a.chunks_exact(n).enumerate() {
            let w = warm.z[i] - warm.u[i] - b[i];
            if w == 0.0 {
                continue;
            }
            for j in 0..n {
                rhs[j] += row[j] * w;
            }
        }
        x.copy_from_slice(&rhs);
        linalg::cholesky_solve(&chol, n, &mut x);

        matvec(&x, &mut ax);
        let residual: f64 = ax
            .iter()
            .zip(&warm.z)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();

        // z-update with over-relaxation, then per-block projection
        let alpha = opts.over_relaxation;
        let mut rr = 0;
        for block in &problem.blocks {
            let dim = block.dim();
            for i in rr..rr + dim {
                relaxed[i] = alpha * ax[i] + (1.0 - alpha) * warm.z[i];
                warm.z[i] = relaxed[i] + warm.u[i];
            }
            project(&block.set, &mut warm.z[rr..rr + dim]);
            for i in rr..rr + dim {
                warm.u[i] += relaxed[i] - warm.z[i];
            }
            rr += dim;
        }

        if residual < best_residual * (1.0 - 1e-3) {
            best_residual = residual;
            best_residual_iter = iter;
        }

        let converged = residual < opts.tol;
        if converged || iter % opts.check_every == 0 {
            if is_feasible(&x) {
                return SolveOutcome {
                    status: SolveStatus::Feasible,
                    point: x,
                    iterations: iter,
                    residual,
                };
            }
            if converged {
                // the splitting has converged but the checker still rejects:
                // treat as infeasible (conservative)
                return SolveOutcome {
                    status: SolveStatus::Infeasible {
                        iteration_cap_hit: false,
                    },
                    point: x,
                    iterations: iter,
                    residual,
                };
            }
        }

        if iter >= 200 && iter - best_residual_iter > opts.stall_window {
            return SolveOutcome {
                status: SolveStatus::Infeasible {
                    iteration_cap_hit: false,
                },
                point: x,
                iterations: iter,
                residual,
            };
        }
    }

    SolveOutcome {
        status: SolveStatus::Infeasible {
            iteration_cap_hit: true,
        },
        point: x,
        iterations: opts.max_iterations,
        residual: best_residual,
    }
}
