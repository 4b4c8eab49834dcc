//! Closed-loop simulation against a synthesized controller: exact stepping
//! of the affine closed loop per substep with piecewise-constant
//! disturbances drawn uniformly from the disturbance zonotope.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::sets::contains_point;

use super::{SafeSetError, SafeSetProblem, SafeSetResult};

#[derive(Debug, Clone)]
pub struct SimSample {
    pub t: f64,
    pub state: DVector<f64>,
    pub input: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub samples: Vec<SimSample>,
    pub state_violations: usize,
    pub input_violations: usize,
    /// Most negative constraint margin observed (positive when clean).
    pub worst_state_margin: f64,
    pub worst_input_margin: f64,
    pub final_state: DVector<f64>,
    pub final_in_safe_set: bool,
}

/// Integrates the closed loop from `x0` over the full horizon. Constraint
/// violations are reported as data, never as errors; only an initial state
/// outside the safe set is rejected.
pub fn simulate_closed_loop(
    problem: &SafeSetProblem,
    result: &SafeSetResult,
    x0: &DVector<f64>,
    disturbance_seed: u64,
    substeps: usize,
) -> Result<Simulation, SafeSetError> {
    let controller = &result.controller;
    let beta = controller.beta(x0)?;
    let sys = &problem.system;
    let n_x = sys.state_dim();
    let a_cl = &sys.a + &sys.b * &controller.k;
    let h = problem.dt() / substeps.max(1) as f64;

    // Exact substep transition of the affine closed loop.
    let mut block = DMatrix::zeros(2 * n_x, 2 * n_x);
    block.view_mut((0, 0), (n_x, n_x)).copy_from(&a_cl);
    block.view_mut((0, n_x), (n_x, n_x)).copy_from(&DMatrix::identity(n_x, n_x));
    let em = (block * h).exp();
    let phi_h = em.view((0, 0), (n_x, n_x)).into_owned();
    let gamma_h = em.view((0, n_x), (n_x, n_x)).into_owned();

    let mut rng = ChaCha8Rng::seed_from_u64(disturbance_seed);
    let m_w = problem.disturbance_generators.ncols();

    let mut x = x0.clone();
    let mut samples = Vec::new();
    let mut state_violations = 0;
    let mut input_violations = 0;
    let mut worst_state_margin = f64::INFINITY;
    let mut worst_input_margin = f64::INFINITY;

    let mut check = |t: f64,
                     x: &DVector<f64>,
                     u: &DVector<f64>,
                     samples: &mut Vec<SimSample>,
                     sv: &mut usize,
                     iv: &mut usize,
                     wsm: &mut f64,
                     wim: &mut f64| {
        let sm = (&problem.state_constraints.offsets
            - &problem.state_constraints.halfspaces * x)
            .min();
        let im = (&problem.input_constraints.offsets
            - &problem.input_constraints.halfspaces * u)
            .min();
        if sm < -1e-9 {
            *sv += 1;
        }
        if im < -1e-9 {
            *iv += 1;
        }
        *wsm = wsm.min(sm);
        *wim = wim.min(im);
        samples.push(SimSample { t, state: x.clone(), input: u.clone() });
    };

    for i in 0..problem.n_steps {
        let corr = &controller.c_u[i] + &controller.u_blocks[i] * &beta;
        for sub in 0..substeps.max(1) {
            let t = (i as f64 + sub as f64 / substeps.max(1) as f64) * problem.dt();
            let u = &controller.k * &x + &corr;
            check(
                t,
                &x,
                &u,
                &mut samples,
                &mut state_violations,
                &mut input_violations,
                &mut worst_state_margin,
                &mut worst_input_margin,
            );
            let coeffs = DVector::from_fn(m_w, |_, _| rng.random_range(-1.0..=1.0f64));
            let w = &problem.disturbance_generators * coeffs;
            let drive = &sys.b * &corr + &sys.e * w + &sys.chi;
            x = &phi_h * &x + &gamma_h * drive;
        }
    }
    let u_final = &controller.k * &x + &controller.c_u[problem.n_steps - 1]
        + &controller.u_blocks[problem.n_steps - 1] * &beta;
    check(
        problem.t_end,
        &x,
        &u_final,
        &mut samples,
        &mut state_violations,
        &mut input_violations,
        &mut worst_state_margin,
        &mut worst_input_margin,
    );

    let final_in_safe_set = contains_point(&result.safe_set, &x, 1e-6)?;
    Ok(Simulation {
        samples,
        state_violations,
        input_violations,
        worst_state_margin,
        worst_input_margin,
        final_state: x,
        final_in_safe_set,
    })
}
