//! Semidefinite machinery: the exact ellipsoid-in-ellipsoid S-procedure SDP
//! and the diagonal-scaling relaxations `ZSR_q` / `SR_{p,q}` built on the
//! shared LMI
//! `[Diag(v) G^T; G H Diag(w) H^T] >= 0`.

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;

use crate::conic::{self, ConeProgram, LinExpr, Sense, SolveStatus};
use crate::norms::Exponent;

use super::lr::require_surjective;
use super::{pseudo_inverse, ContainmentError, MethodChoice, Options};

/// Exact containment radius of the ellipsoid `E(G, c)` in the
/// nondegenerate ellipsoid `E(H, d)`, as the square root of the optimal
/// `rho` of the S-procedure LMI with multiplier `delta >= 0`.
pub fn radius_ellipsoid_in_ellipsoid(
    g: &DMatrix<f64>,
    c: &DVector<f64>,
    h: &DMatrix<f64>,
    d: &DVector<f64>,
    opts: &Options,
) -> Result<(f64, f64, f64), ContainmentError> {
    require_surjective(h, opts.rank_rel_tol)?;
    let pinv = pseudo_inverse(h, opts.rank_rel_tol);
    let theta = &pinv * g;
    let offset = &pinv * (c - d);
    let m = theta.ncols();

    // M = [T'T T't; t'T t't], constraint: delta*diag(I, -1) - M + rho*E >= 0.
    let tt = theta.transpose() * &theta;
    let tb = theta.transpose() * &offset;
    let bb = offset.norm_squared();

    let mut prog = ConeProgram::new(Sense::Minimize);
    let rho = prog.scalar("rho");
    let delta = prog.scalar("delta");
    prog.set_objective(LinExpr::var(rho));
    prog.nonneg(vec![LinExpr::var(delta), LinExpr::var(rho)]);

    let dim = m + 1;
    let rows: Vec<Vec<LinExpr>> = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| {
                    let m_ij = match (i == m, j == m) {
                        (false, false) => tt[(i, j)],
                        (false, true) => tb[i],
                        (true, false) => tb[j],
                        (true, true) => bb,
                    };
                    let mut e = LinExpr::constant(-m_ij);
                    if i == j {
                        e = e.plus(delta, if i == m { -1.0 } else { 1.0 });
                        if i == m {
                            e = e.plus(rho, 1.0);
                        }
                    }
                    e
                })
                .collect()
        })
        .collect();
    prog.psd_from_rows(rows)?;

    let sol = conic::solve(&prog, opts.feas_tol, opts.gap_tol)?;
    if sol.status != SolveStatus::Optimal {
        return Err(ContainmentError::SolverFailed(sol.status));
    }
    let rho_val = sol.value(rho).max(0.0);
    Ok((rho_val.sqrt(), rho_val, sol.value(delta)))
}

/// Diagonal scalings solving one of the semidefinite relaxations.
#[derive(Debug, Clone)]
pub struct DiagonalWitness {
    pub v: DVector<f64>,
    pub w: DVector<f64>,
}

/// `ZSR_q(G, H) = 1/2 min ||v||_1 + ||w||_{q/(2-q)}` over the feasibility
/// LMI; for `q` in `(1, 2]` this is a tighter relaxation of the
/// zonotope-in-ellipsotope radius than `LR_q`.
pub fn zsr_relaxation(
    g: &DMatrix<f64>,
    h: &DMatrix<f64>,
    q: Exponent,
    opts: &Options,
) -> Result<(f64, DiagonalWitness), ContainmentError> {
    if !super::exponent_in_unit_two(q) {
        return Err(ContainmentError::ExponentRange {
            method: MethodChoice::Zsr,
            p: Exponent::Infinity,
            q,
        });
    }
    diagonal_relaxation(g, h, Exponent::One, q_over_two_minus_q(q)?, opts)
}

/// `SR_{p,q}(G, H) = 1/2 min ||v||_{p/(p-2)} + ||w||_{q*/(q*-2)}` for
/// `2 <= p < inf` and `q` in `(1, 2]`, same-center bodies.
pub fn sr_relaxation(
    g: &DMatrix<f64>,
    h: &DMatrix<f64>,
    p: Exponent,
    q: Exponent,
    opts: &Options,
) -> Result<(f64, DiagonalWitness), ContainmentError> {
    if !super::sr_exponents_ok(p, q) {
        return Err(ContainmentError::ExponentRange { method: MethodChoice::Sr, p, q });
    }
    let v_exp = p.over_self_minus_two()?;
    let w_exp = q.conjugate().over_self_minus_two()?;
    diagonal_relaxation(g, h, v_exp, w_exp, opts)
}

/// `q / (2 - q)` with the `q = 2 -> inf` convention, exact in rationals.
fn q_over_two_minus_q(q: Exponent) -> Result<Exponent, ContainmentError> {
    match q {
        Exponent::Finite(r) => {
            let two = Ratio::new(2, 1);
            if r == two {
                Ok(Exponent::Infinity)
            } else {
                Ok(Exponent::Finite(r / (two - r)))
            }
        }
        other => Err(ContainmentError::ExponentRange {
            method: MethodChoice::Zsr,
            p: Exponent::Infinity,
            q: other,
        }),
    }
}

fn diagonal_relaxation(
    g: &DMatrix<f64>,
    h: &DMatrix<f64>,
    v_exp: Exponent,
    w_exp: Exponent,
    opts: &Options,
) -> Result<(f64, DiagonalWitness), ContainmentError> {
    require_surjective(h, opts.rank_rel_tol)?;
    let (n, m) = g.shape();
    let l = h.ncols();

    let mut prog = ConeProgram::new(Sense::Minimize);
    let v = prog.vector("v", m);
    let w = prog.vector("w", l);
    let tv = prog.scalar("tv");
    let tw = prog.scalar("tw");

    prog.nonneg(
        (0..m)
            .map(|i| LinExpr::var(v.index(i)))
            .chain((0..l).map(|i| LinExpr::var(w.index(i))))
            .collect(),
    );

    let v_exprs: Vec<LinExpr> = (0..m).map(|i| LinExpr::var(v.index(i))).collect();
    prog.pnorm_epigraph(&v_exprs, v_exp, LinExpr::var(tv));
    let w_exprs: Vec<LinExpr> = (0..l).map(|i| LinExpr::var(w.index(i))).collect();
    prog.pnorm_epigraph(&w_exprs, w_exp, LinExpr::var(tw));

    // [Diag(v) G^T; G H Diag(w) H^T] >= 0
    let dim = m + n;
    let rows: Vec<Vec<LinExpr>> = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| {
                    if i < m && j < m {
                        if i == j {
                            LinExpr::var(v.index(i))
                        } else {
                            LinExpr::default()
                        }
                    } else if i < m {
                        LinExpr::constant(g[(j - m, i)])
                    } else if j < m {
                        LinExpr::constant(g[(i - m, j)])
                    } else {
                        let (r, s) = (i - m, j - m);
                        let mut e = LinExpr::default();
                        for k in 0..l {
                            let c = h[(r, k)] * h[(s, k)];
                            if c != 0.0 {
                                e = e.plus(w.index(k), c);
                            }
                        }
                        e
                    }
                })
                .collect()
        })
        .collect();
    prog.psd_from_rows(rows)?;

    prog.set_objective(LinExpr::term(tv, 0.5).plus(tw, 0.5));
    let sol = conic::solve(&prog, opts.feas_tol, opts.gap_tol)?;
    if sol.status != SolveStatus::Optimal {
        return Err(ContainmentError::SolverFailed(sol.status));
    }
    let witness = DiagonalWitness {
        v: DVector::from_vec(sol.vector(v)),
        w: DVector::from_vec(sol.vector(w)),
    };
    Ok((sol.objective.max(0.0), witness))
}
