//! Assembly of the synthesis cone program: geometric-mean objective over
//! the template scalings, the terminal containment rows, and the per-step
//! state/input polyhedron constraints, all affine in one decision block.

use nalgebra::DMatrix;

use crate::conic::{ConeProgram, LinExpr, MatBlock, Sense, VarBlock};
use crate::sets::HPolyhedron;

use super::affine::{AffineVector, AffineZonotope};
use super::reach::ReachModel;
use super::{SafeSetError, SafeSetProblem, TemplateData};

/// Floor keeping the scalings strictly positive so the `Z' = Diag(s) Z`
/// transformation stays valid.
pub const SCALING_FLOOR: f64 = 1e-6;

pub struct AssembledProgram {
    pub program: ConeProgram,
    /// The decision block occupies program variables `0..theta_len`.
    pub theta_len: usize,
    pub s_block: VarBlock,
    pub z_block: MatBlock,
    pub objective_var: usize,
}

/// Builds the full synthesis program over `(c_T, s, U_i, c_{u,i}, Z)`.
pub fn assemble_program(
    problem: &SafeSetProblem,
    template: &TemplateData,
    reach: &ReachModel,
) -> Result<AssembledProgram, SafeSetError> {
    let layout = &reach.layout;
    let l = template.h_fixed.ncols();
    let m_n = reach.generator_count();

    let mut prog = ConeProgram::new(Sense::Maximize);
    let theta = prog.vector("theta", layout.total);
    debug_assert_eq!(theta.start, 0);
    let s_block = VarBlock { start: layout.s(0), len: layout.m };

    let z = prog.matrix("Z", l, m_n + 1);
    let z_abs = prog.matrix("Zabs", l, m_n + 1);
    let t_geo = prog.scalar("geomean");

    // s >= floor.
    prog.nonneg(
        (0..layout.m)
            .map(|j| LinExpr::var(s_block.index(j)).plus_const(-SCALING_FLOOR))
            .collect(),
    );

    // Terminal containment: H Z = [G_N  c_N - c_T].
    let terminal = reach.terminal();
    let mut rows = Vec::with_capacity(terminal.center.len * (m_n + 1));
    for col in 0..=m_n {
        for r in 0..terminal.center.len {
            let mut e = if col < m_n {
                rhs_generator_expr(terminal, r, col).negated()
            } else {
                let mut center = terminal.center.entry_expr(r).negated();
                center = center.plus(layout.c_t(r), 1.0);
                center
            };
            for k in 0..l {
                let coef = template.h_fixed[(r, k)];
                if coef != 0.0 {
                    e = e.plus(z.index(k, col), coef);
                }
            }
            rows.push(e);
        }
    }
    prog.eq_zero(rows);

    // Row norms: ||zeta_j||_1 <= s_j / divisor.
    let mut abs_rows = Vec::with_capacity(2 * l * (m_n + 1));
    for j in 0..l {
        for k in 0..=m_n {
            abs_rows.push(LinExpr::var(z_abs.index(j, k)).plus(z.index(j, k), -1.0));
            abs_rows.push(LinExpr::var(z_abs.index(j, k)).plus(z.index(j, k), 1.0));
        }
    }
    prog.nonneg(abs_rows);
    // Rows of Z pair one-to-one with scaling entries for both templates.
    debug_assert_eq!(l, layout.m);
    let mut norm_rows = Vec::with_capacity(l);
    for j in 0..l {
        let mut e = LinExpr::term(s_block.index(j), 1.0 / template.divisor);
        for k in 0..=m_n {
            e = e.plus(z_abs.index(j, k), -1.0);
        }
        norm_rows.push(e);
    }
    prog.nonneg(norm_rows);

    // Path constraints on every step's state hull and input set.
    for hull in &reach.step_hulls {
        emit_zonotope_in_polyhedron(&mut prog, hull, &problem.state_constraints)?;
    }
    for input in &reach.input_sets {
        emit_zonotope_in_polyhedron(&mut prog, input, &problem.input_constraints)?;
    }

    // Objective: the geometric mean of the scalings.
    prog.geomean_hypograph(
        LinExpr::var(t_geo),
        (0..layout.m).map(|j| LinExpr::var(s_block.index(j))).collect(),
    );
    prog.set_objective(LinExpr::var(t_geo));

    Ok(AssembledProgram {
        program: prog,
        theta_len: layout.total,
        s_block,
        z_block: z,
        objective_var: t_geo,
    })
}

fn rhs_generator_expr(set: &AffineZonotope, r: usize, col: usize) -> LinExpr {
    if col < set.affine_cols.cols {
        set.affine_cols.entry_expr(r, col)
    } else {
        LinExpr::constant(set.const_cols[(r, col - set.affine_cols.cols)])
    }
}

/// Support-function rows `L c + sum_k |L g_k| <= lambda`, with constant
/// generators folded into the offset and one auxiliary absolute value per
/// decision-dependent generator.
fn emit_zonotope_in_polyhedron(
    prog: &mut ConeProgram,
    set: &AffineZonotope,
    poly: &HPolyhedron,
) -> Result<(), SafeSetError> {
    if poly.dim() != set.center.len {
        return Err(SafeSetError::Dimension(format!(
            "polyhedron dimension {} does not match set dimension {}",
            poly.dim(),
            set.center.len
        )));
    }
    for row in 0..poly.halfspaces.nrows() {
        let weights: Vec<f64> = poly.halfspaces.row(row).iter().copied().collect();
        let mut folded = 0.0;
        for k in 0..set.const_cols.ncols() {
            folded += set.const_cols.column(k).dot(&poly.halfspaces.row(row).transpose()).abs();
        }
        let n_affine = set.affine_cols.cols;
        let aux = prog.vector("suppabs", n_affine);
        let mut rows = Vec::with_capacity(2 * n_affine + 1);
        let mut total = LinExpr::constant(poly.offsets[row] - folded);
        for k in 0..n_affine {
            let dot = weighted_col_expr(set, k, &weights);
            rows.push(LinExpr::var(aux.index(k)).plus_expr(&dot, -1.0));
            rows.push(LinExpr::var(aux.index(k)).plus_expr(&dot, 1.0));
            total = total.plus(aux.index(k), -1.0);
        }
        total = total.plus_expr(&weighted_center_expr(&set.center, &weights), -1.0);
        rows.push(total);
        prog.nonneg(rows);
    }
    Ok(())
}

fn weighted_col_expr(set: &AffineZonotope, col: usize, weights: &[f64]) -> LinExpr {
    let mut e = LinExpr::constant(
        (0..set.affine_cols.rows)
            .map(|r| weights[r] * set.affine_cols.constant[(r, col)])
            .sum(),
    );
    for (&var, page) in &set.affine_cols.pages {
        let coef: f64 = (0..set.affine_cols.rows).map(|r| weights[r] * page[(r, col)]).sum();
        if coef != 0.0 {
            e = e.plus(var, coef);
        }
    }
    e
}

fn weighted_center_expr(center: &AffineVector, weights: &[f64]) -> LinExpr {
    let mut e = LinExpr::constant(
        (0..center.len).map(|r| weights[r] * center.constant[r]).sum(),
    );
    for (&var, page) in &center.pages {
        let coef: f64 = (0..center.len).map(|r| weights[r] * page[r]).sum();
        if coef != 0.0 {
            e = e.plus(var, coef);
        }
    }
    e
}

/// Numeric per-step sets evaluated at the optimal decision values.
pub fn evaluate_reach_sets(
    reach: &ReachModel,
    theta: &[f64],
) -> (Vec<(nalgebra::DVector<f64>, DMatrix<f64>)>, Vec<(nalgebra::DVector<f64>, DMatrix<f64>)>, Vec<(nalgebra::DVector<f64>, DMatrix<f64>)>) {
    let points = reach.time_points.iter().map(|s| s.eval(theta)).collect();
    let hulls = reach.step_hulls.iter().map(|s| s.eval(theta)).collect();
    let inputs = reach.input_sets.iter().map(|s| s.eval(theta)).collect();
    (points, hulls, inputs)
}
