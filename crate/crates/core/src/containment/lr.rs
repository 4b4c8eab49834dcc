//! The linear relaxation `LR_q = min { ||X||_{L(1,q)^T} : H X = G }`, its
//! dual `max { tr(G^T Y) : ||H^T Y||_{L(inf,q*)^T} <= 1 }`, and the
//! sign-structure certificate that upgrades the bound to the exact radius.

use nalgebra::DMatrix;

use crate::conic::{self, ConeProgram, LinExpr, Sense, SolveStatus};
use crate::norms::Exponent;
use crate::sets::rank_and_projection;

use super::{ContainmentError, Options};

#[derive(Debug, Clone)]
pub struct LrOutcome {
    pub value: f64,
    /// Optimal `X` with `H X = G`.
    pub witness: DMatrix<f64>,
}

pub(crate) fn require_surjective(h: &DMatrix<f64>, rel_tol: f64) -> Result<(), ContainmentError> {
    if rank_and_projection(h, rel_tol).rank < h.nrows() {
        return Err(ContainmentError::NotSurjective);
    }
    Ok(())
}

/// `LR_q(G, H)`: the q-norm of the vector of row 1-norms of `X`, minimized
/// over solutions of `H X = G`. Upper-bounds the containment radius of
/// `Z(G)` in `E_q(H)`.
pub fn lr_relaxation(
    g: &DMatrix<f64>,
    h: &DMatrix<f64>,
    q: Exponent,
    opts: &Options,
) -> Result<LrOutcome, ContainmentError> {
    require_surjective(h, opts.rank_rel_tol)?;
    let (n, m) = g.shape();
    let l = h.ncols();

    let mut prog = ConeProgram::new(Sense::Minimize);
    let x = prog.matrix("X", l, m);
    let s = prog.matrix("S", l, m);
    let t = prog.scalar("t");

    let mut eqs = Vec::with_capacity(n * m);
    for r in 0..n {
        for j in 0..m {
            let mut e = LinExpr::constant(-g[(r, j)]);
            for k in 0..l {
                let c = h[(r, k)];
                if c != 0.0 {
                    e = e.plus(x.index(k, j), c);
                }
            }
            eqs.push(e);
        }
    }
    prog.eq_zero(eqs);

    let mut abs_rows = Vec::with_capacity(2 * l * m);
    for i in 0..l {
        for j in 0..m {
            abs_rows.push(LinExpr::var(s.index(i, j)).plus(x.index(i, j), -1.0));
            abs_rows.push(LinExpr::var(s.index(i, j)).plus(x.index(i, j), 1.0));
        }
    }
    prog.nonneg(abs_rows);

    let row_sums: Vec<LinExpr> = (0..l)
        .map(|i| {
            let mut e = LinExpr::default();
            for j in 0..m {
                e = e.plus(s.index(i, j), 1.0);
            }
            e
        })
        .collect();
    prog.pnorm_epigraph(&row_sums, q, LinExpr::var(t));
    prog.set_objective(LinExpr::var(t));

    let sol = conic::solve(&prog, opts.feas_tol, opts.gap_tol)?;
    if sol.status != SolveStatus::Optimal {
        return Err(ContainmentError::SolverFailed(sol.status));
    }
    Ok(LrOutcome { value: sol.objective.max(0.0), witness: sol.matrix(x) })
}

/// Dual optimizer `Y` of `LR_q`; its trace objective matches the primal
/// value within the solver gap (strong duality), and any feasible `Y`
/// certifies `tr(G^T Y) <= LR_q`.
pub fn lr_dual(
    g: &DMatrix<f64>,
    h: &DMatrix<f64>,
    q: Exponent,
    opts: &Options,
) -> Result<DMatrix<f64>, ContainmentError> {
    require_surjective(h, opts.rank_rel_tol)?;
    let (n, m) = g.shape();
    let l = h.ncols();

    let mut prog = ConeProgram::new(Sense::Maximize);
    let y = prog.matrix("Y", n, m);
    let t = prog.vector("t", l);

    // t_i >= |h_i^T y_j| for every column j.
    let mut rows = Vec::with_capacity(2 * l * m);
    for i in 0..l {
        for j in 0..m {
            let mut dot = LinExpr::default();
            for r in 0..n {
                let c = h[(r, i)];
                if c != 0.0 {
                    dot = dot.plus(y.index(r, j), c);
                }
            }
            rows.push(LinExpr::var(t.index(i)).plus_expr(&dot, -1.0));
            rows.push(LinExpr::var(t.index(i)).plus_expr(&dot, 1.0));
        }
    }
    prog.nonneg(rows);

    let t_exprs: Vec<LinExpr> = (0..l).map(|i| LinExpr::var(t.index(i))).collect();
    prog.pnorm_epigraph(&t_exprs, q.conjugate(), LinExpr::constant(1.0));

    let mut obj = LinExpr::default();
    for r in 0..n {
        for j in 0..m {
            if g[(r, j)] != 0.0 {
                obj = obj.plus(y.index(r, j), g[(r, j)]);
            }
        }
    }
    prog.set_objective(obj);

    let sol = conic::solve(&prog, opts.feas_tol, opts.gap_tol)?;
    if sol.status != SolveStatus::Optimal {
        return Err(ContainmentError::SolverFailed(sol.status));
    }
    Ok(sol.matrix(y))
}

/// True when all columns of `Y` agree up to sign at relative tolerance
/// `tol`; the relaxation is then exact and `LR_q` equals the radius.
pub fn lr_exactness_certificate(y: &DMatrix<f64>, tol: f64) -> bool {
    let m = y.ncols();
    let scale = y
        .column_iter()
        .map(|c| c.amax())
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return true;
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let diff = (y.column(i) - y.column(j)).amax();
            let sum = (y.column(i) + y.column(j)).amax();
            if diff.min(sum) > tol * scale {
                return false;
            }
        }
    }
    true
}
