//! Parametric reachability: per-step state and input zonotopes whose
//! centers and leading generator blocks are affine in the synthesis
//! decision variables, with constant disturbance generators appended each
//! step.
//!
//! The closed-loop step matrix is the Taylor truncation of
//! `exp((A + BK) dt)` at the configured order; its tail bound must pass the
//! problem's remainder tolerance. Disturbance contributions are enclosed
//! per Taylor term and per generator by axis-aligned boxes built from
//! absolute matrix powers, which keeps them sound for any measurable
//! disturbance signal and yields exactly `n_w (eta+1) n_x` fresh generators
//! per step.

use nalgebra::{DMatrix, DVector};

use crate::norms::{lpq_norm, Exponent};

use super::affine::{AffineMatrix, AffineVector, AffineZonotope, DecisionLayout};
use super::{SafeSetError, SafeSetProblem, TemplateData};

#[derive(Debug, Clone)]
pub struct ReachModel {
    pub layout: DecisionLayout,
    pub dt: f64,
    /// Taylor-truncated step matrix of the closed loop.
    pub phi: DMatrix<f64>,
    /// Taylor-truncated input integral.
    pub gamma: DMatrix<f64>,
    /// Infinity-norm tail bound of the step matrix truncation.
    pub phi_remainder: f64,
    pub gamma_remainder: f64,
    /// Time-point sets `X_0 .. X_N`.
    pub time_points: Vec<AffineZonotope>,
    /// Convex-hull enclosures of `[X_i, X_{i+1}]`, one per step.
    pub step_hulls: Vec<AffineZonotope>,
    /// Input sets over each step.
    pub input_sets: Vec<AffineZonotope>,
}

impl ReachModel {
    pub fn terminal(&self) -> &AffineZonotope {
        self.time_points.last().expect("at least the initial set exists")
    }

    /// Generator count of the terminal set.
    pub fn generator_count(&self) -> usize {
        self.terminal().generator_count()
    }
}

/// Taylor truncations of `exp(A dt)` and of the input integral, together
/// with rigorous infinity-norm tail bounds.
pub fn taylor_step_matrices(
    a: &DMatrix<f64>,
    dt: f64,
    eta: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>, f64, f64), SafeSetError> {
    let n = a.nrows();
    let nrm = lpq_norm(a, Exponent::One, Exponent::Infinity, true) * dt;
    if nrm >= (eta + 2) as f64 {
        return Err(SafeSetError::RemainderNotConverged { remainder: f64::INFINITY, eta });
    }
    let mut phi = DMatrix::<f64>::identity(n, n);
    let mut gamma = DMatrix::<f64>::identity(n, n) * dt;
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut factorial = 1.0;
    for j in 1..=eta {
        power = &power * a;
        factorial *= j as f64;
        phi += &power * (dt.powi(j as i32) / factorial);
        gamma += &power * (dt.powi(j as i32 + 1) / (factorial * (j as f64 + 1.0)));
    }
    let mut fact_next = factorial * (eta as f64 + 1.0);
    let phi_rem = nrm.powi(eta as i32 + 1) / fact_next / (1.0 - nrm / (eta as f64 + 2.0));
    fact_next *= eta as f64 + 2.0;
    let gamma_rem = dt * nrm.powi(eta as i32 + 1) / fact_next / (1.0 - nrm / (eta as f64 + 3.0));
    Ok((phi, gamma, phi_rem, gamma_rem))
}

/// Constant per-step disturbance generators: one axis-aligned box per
/// (Taylor order, disturbance generator) pair, with the series tail folded
/// into the last order's boxes.
fn disturbance_boxes(
    a_cl: &DMatrix<f64>,
    e_w: &DMatrix<f64>,
    dt: f64,
    eta: usize,
    gamma_rem: f64,
) -> DMatrix<f64> {
    let n = a_cl.nrows();
    let m_w = e_w.ncols();
    let mut boxes = DMatrix::zeros(n, (eta + 1) * m_w * n);
    let mut abs_power = DMatrix::<f64>::identity(n, n);
    let mut factorial = 1.0;
    let mut col = 0;
    for j in 0..=eta {
        if j > 0 {
            abs_power = &abs_power * a_cl.map(f64::abs);
            factorial *= j as f64;
        }
        let coef = dt.powi(j as i32 + 1) / (factorial * (j as f64 + 1.0));
        for k in 0..m_w {
            let gen_abs = e_w.column(k).map(f64::abs);
            let mut radius = &abs_power * gen_abs * coef;
            if j == eta {
                let tail = gamma_rem * e_w.column(k).amax();
                radius.add_scalar_mut(tail);
            }
            for axis in 0..n {
                boxes[(axis, col + axis)] = radius[axis];
            }
            col += n;
        }
    }
    boxes
}

/// Zonotope enclosure of the convex hull of two affine zonotopes whose
/// leading blocks are aligned; extra columns of `next` pass through.
fn enclose(current: &AffineZonotope, next: &AffineZonotope) -> AffineZonotope {
    let mid_center = current.center.add(&next.center).scale(0.5);
    let diff_center = current.center.sub(&next.center).scale(0.5);

    let mid_alpha = current.affine_cols.add(&next.affine_cols).scale(0.5);
    let diff_alpha = current.affine_cols.sub(&next.affine_cols).scale(0.5);

    let rows = current.center.len;
    let mut affine_cols =
        AffineMatrix::zeros(rows, mid_alpha.cols + diff_alpha.cols + 1);
    paste_affine(&mut affine_cols, &mid_alpha, 0);
    paste_affine(&mut affine_cols, &diff_alpha, mid_alpha.cols);
    let last = mid_alpha.cols + diff_alpha.cols;
    affine_cols.constant.set_column(last, &diff_center.constant);
    for (&var, page) in &diff_center.pages {
        let mut p = DMatrix::zeros(rows, affine_cols.cols);
        p.set_column(last, page);
        affine_cols.add_page(var, p);
    }

    let n_common = current.const_cols.ncols();
    let n_extra = next.const_cols.ncols() - n_common;
    let mut const_cols = DMatrix::zeros(rows, 2 * n_common + n_extra);
    for j in 0..n_common {
        let sum = 0.5 * (current.const_cols.column(j) + next.const_cols.column(j));
        let diff = 0.5 * (current.const_cols.column(j) - next.const_cols.column(j));
        const_cols.set_column(j, &sum);
        const_cols.set_column(n_common + j, &diff);
    }
    for j in 0..n_extra {
        const_cols.set_column(2 * n_common + j, &next.const_cols.column(n_common + j));
    }

    AffineZonotope { center: mid_center, affine_cols, const_cols }
}

fn paste_affine(target: &mut AffineMatrix, source: &AffineMatrix, col_offset: usize) {
    target
        .constant
        .view_mut((0, col_offset), (source.rows, source.cols))
        .copy_from(&source.constant);
    for (&var, page) in &source.pages {
        let mut p = DMatrix::zeros(target.rows, target.cols);
        p.view_mut((0, col_offset), (source.rows, source.cols)).copy_from(page);
        target.add_page(var, p);
    }
}

/// Builds the affine reach model for a fixed feedback gain and template.
pub fn parametric_reach_with(
    problem: &SafeSetProblem,
    k: &DMatrix<f64>,
    template: &TemplateData,
) -> Result<ReachModel, SafeSetError> {
    let sys = &problem.system;
    let n_x = sys.a.nrows();
    let n_u = sys.b.ncols();
    let m_alpha = template.t_hat_generators.cols;
    let m_u = template.beta_map.nrows();
    let layout = DecisionLayout::new(n_x, n_u, template.scaling_count, m_u, problem.n_steps);
    let dt = problem.t_end / problem.n_steps as f64;

    let a_cl = &sys.a + &sys.b * k;
    let (phi, gamma, phi_rem, gamma_rem) =
        taylor_step_matrices(&a_cl, dt, problem.taylor_order)?;
    if phi_rem > problem.remainder_tol {
        return Err(SafeSetError::RemainderNotConverged {
            remainder: phi_rem,
            eta: problem.taylor_order,
        });
    }

    let e_w = &sys.e * &problem.disturbance_generators;
    let boxes = disturbance_boxes(&a_cl, &e_w, dt, problem.taylor_order, gamma_rem);
    let gamma_b = &gamma * &sys.b;
    let gamma_chi = &gamma * &sys.chi;

    // X_0 = T_hat: center c_T, generators affine in s.
    let mut center = AffineVector::zeros(n_x);
    for r in 0..n_x {
        let mut page = DVector::zeros(n_x);
        page[r] = 1.0;
        center.add_page(layout.c_t(r), page);
    }
    let mut x = AffineZonotope {
        center,
        affine_cols: template.t_hat_generators.clone(),
        const_cols: DMatrix::zeros(n_x, 0),
    };

    let mut time_points = vec![x.clone()];
    let mut step_hulls = Vec::with_capacity(problem.n_steps);
    let mut input_sets = Vec::with_capacity(problem.n_steps);

    for i in 0..problem.n_steps {
        // Center: c_{i+1} = Phi c_i + Gamma (B c_{u,i} + chi).
        let mut next_center = x.center.left_mul(&phi).add_constant(&gamma_chi);
        for r in 0..n_u {
            next_center.add_page(layout.c_u(i, r), gamma_b.column(r).into_owned());
        }

        // Alpha block: B_{i+1} = Phi B_i + Gamma B U_i beta_map.
        let mut next_alpha = x.affine_cols.left_mul(&phi);
        for r in 0..n_u {
            for c in 0..m_u {
                let page = gamma_b.column(r) * template.beta_map.row(c);
                next_alpha.add_page(layout.u(i, r, c), page);
            }
        }

        let mut next_const = DMatrix::zeros(n_x, x.const_cols.ncols() + boxes.ncols());
        next_const
            .view_mut((0, 0), (n_x, x.const_cols.ncols()))
            .copy_from(&(&phi * &x.const_cols));
        next_const
            .view_mut((0, x.const_cols.ncols()), (n_x, boxes.ncols()))
            .copy_from(&boxes);

        let next = AffineZonotope {
            center: next_center,
            affine_cols: next_alpha,
            const_cols: next_const,
        };

        let hull = enclose(&x, &next);

        // Input set over the step: u = K x + c_{u,i} + U_i beta, with beta
        // riding on the alpha coordinates of the hull's leading block.
        let mut u_center = hull.center.left_mul(k);
        for r in 0..n_u {
            let mut page = DVector::zeros(n_u);
            page[r] = 1.0;
            u_center.add_page(layout.c_u(i, r), page);
        }
        let mut u_alpha = hull.affine_cols.left_mul(k);
        for r in 0..n_u {
            for c in 0..m_u {
                let mut page = DMatrix::zeros(n_u, u_alpha.cols);
                for j in 0..m_alpha {
                    page[(r, j)] = template.beta_map[(c, j)];
                }
                u_alpha.add_page(layout.u(i, r, c), page);
            }
        }
        let input_set = AffineZonotope {
            center: u_center,
            affine_cols: u_alpha,
            const_cols: k * &hull.const_cols,
        };

        step_hulls.push(hull);
        input_sets.push(input_set);
        time_points.push(next.clone());
        x = next;
    }

    Ok(ReachModel {
        layout,
        dt,
        phi,
        gamma,
        phi_remainder: phi_rem,
        gamma_remainder: gamma_rem,
        time_points,
        step_hulls,
        input_sets,
    })
}
