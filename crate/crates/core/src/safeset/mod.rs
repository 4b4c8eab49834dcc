//! Safe sets and sampled-data controllers for disturbed LTI systems.
//!
//! Given `dx = A x + B u + E w + chi` with polyhedral state and input
//! constraints and a zonotopic disturbance bound, the synthesis finds a
//! terminal region `T` (zonotope or ellipsoid template), per-step input
//! corrections `c_{u,i}` and parametric gains `U_i` such that every
//! closed-loop trajectory started in `T` stays in the constraints and
//! returns to `T` after the horizon. The terminal condition is one
//! containment constraint handled by the linear relaxation; everything
//! lands in a single conic program maximizing the geometric mean of the
//! template scalings.

mod affine;
mod lqr;
mod platoon;
mod program;
mod reach;
mod simulate;

pub use affine::{AffineMatrix, AffineVector, AffineZonotope, DecisionLayout};
pub use lqr::{discretize, lqr_gain, solve_dare, LqrGain};
pub use platoon::platoon_benchmark;
pub use program::{assemble_program, AssembledProgram, SCALING_FLOOR};
pub use reach::{parametric_reach_with, taylor_step_matrices, ReachModel};
pub use simulate::{simulate_closed_loop, SimSample, Simulation};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::conic::{self, ConicError, SolveStatus};
use crate::containment::{self, ContainmentError, MethodChoice};
use crate::norms::{Exponent, NormError};
use crate::sets::{
    self, contains_point, unit_ball_zonotope, zonotope_in_polyhedron, BallApproximation,
    Ellipsotope, HPolyhedron, MinNormSolver, SetError,
};

#[derive(Debug, Error)]
pub enum SafeSetError {
    #[error("inconsistent problem data: {0}")]
    Dimension(String),
    #[error("Riccati solve failed: {0}")]
    Riccati(String),
    #[error("step-matrix remainder {remainder:e} does not converge at Taylor order {eta}")]
    RemainderNotConverged { remainder: f64, eta: usize },
    #[error("no safe set found with this template (program infeasible)")]
    Infeasible,
    #[error("synthesis solve failed with status {0:?}")]
    Solver(SolveStatus),
    #[error("post-verification failed: {0}")]
    PostVerification(String),
    #[error("initial state lies outside the safe set")]
    OutsideSafeSet,
    #[error("no admissible parametrization of the initial state")]
    BetaInfeasible,
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error(transparent)]
    Containment(#[from] ContainmentError),
    #[error(transparent)]
    Norm(#[from] NormError),
}

/// `dx = A x + B u + E w + chi`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub chi: DVector<f64>,
}

impl LtiSystem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        e: DMatrix<f64>,
        chi: DVector<f64>,
    ) -> Result<Self, SafeSetError> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || e.nrows() != n || chi.len() != n {
            return Err(SafeSetError::Dimension(
                "system matrices must share the state dimension".into(),
            ));
        }
        Ok(LtiSystem { a, b, e, chi })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
}

/// Template family of the safe set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateKind {
    /// `T = Z(R G_fixed Diag(s), c_T)` with `generators` columns.
    Zonotope { generators: usize },
    /// `T = E(R Diag(s), c_T)`, over-approximated for the reach model by a
    /// zonotope with `hat_generators` columns.
    Ellipsoid { hat_generators: usize },
}

#[derive(Debug, Clone)]
pub struct SafeSetProblem {
    pub system: LtiSystem,
    pub state_constraints: HPolyhedron,
    pub input_constraints: HPolyhedron,
    /// Generator matrix of the origin-centered disturbance zonotope.
    pub disturbance_generators: DMatrix<f64>,
    pub t_end: f64,
    pub n_steps: usize,
    /// Taylor order of the step-matrix truncation.
    pub taylor_order: usize,
    pub template: TemplateKind,
    /// Columns of each parametric input block `U_i`.
    pub m_u: usize,
    pub lqr_state_weight: DMatrix<f64>,
    pub lqr_input_weight: DMatrix<f64>,
    /// Acceptable step-matrix truncation tail.
    pub remainder_tol: f64,
}

impl SafeSetProblem {
    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    fn validate(&self) -> Result<(), SafeSetError> {
        let n_x = self.system.state_dim();
        if self.t_end <= 0.0 || self.n_steps == 0 || self.taylor_order == 0 {
            return Err(SafeSetError::Dimension(
                "horizon, step count and Taylor order must be positive".into(),
            ));
        }
        if self.state_constraints.dim() != n_x {
            return Err(SafeSetError::Dimension("state constraints dimension".into()));
        }
        if self.input_constraints.dim() != self.system.input_dim() {
            return Err(SafeSetError::Dimension("input constraints dimension".into()));
        }
        if self.system.e.ncols() != self.disturbance_generators.nrows() {
            return Err(SafeSetError::Dimension(
                "disturbance generators do not match the disturbance channel".into(),
            ));
        }
        let expected_m_u = match self.template {
            TemplateKind::Zonotope { generators } => generators,
            TemplateKind::Ellipsoid { .. } => n_x,
        };
        if self.m_u != expected_m_u {
            return Err(SafeSetError::Dimension(format!(
                "m_u must equal the template parameter dimension {expected_m_u}, got {}",
                self.m_u
            )));
        }
        match self.template {
            TemplateKind::Zonotope { generators } if generators < n_x => {
                return Err(SafeSetError::Dimension(
                    "zonotope template needs at least n_x generators".into(),
                ))
            }
            TemplateKind::Ellipsoid { hat_generators } if hat_generators < n_x => {
                return Err(SafeSetError::Dimension(
                    "over-approximation template needs at least n_x generators".into(),
                ))
            }
            _ => {}
        }
        Ok(())
    }
}

/// Template data shared by the reach model and the program assembly.
#[derive(Debug, Clone)]
pub struct TemplateData {
    pub q: Exponent,
    /// Circumbody matrix `H` of the containment rows (`R G_fixed` or `R`).
    pub h_fixed: DMatrix<f64>,
    /// Number of scaling variables.
    pub scaling_count: usize,
    /// Generators of `T` as an affine function of `s`.
    pub t_generators: AffineMatrix,
    /// Generators of the zonotopic over-approximation driving the reach
    /// model (`T` itself for zonotope templates).
    pub t_hat_generators: AffineMatrix,
    /// Maps reach parameters `alpha` to controller parameters `beta`.
    pub beta_map: DMatrix<f64>,
    pub g_fixed: DMatrix<f64>,
    /// Row-norm divisor of the containment rows (1 or sqrt(m)).
    pub divisor: f64,
}

/// Builds the template for a given orientation matrix `R`.
pub fn build_template(
    problem: &SafeSetProblem,
    r: &DMatrix<f64>,
) -> Result<TemplateData, SafeSetError> {
    let n_x = problem.system.state_dim();
    match problem.template {
        TemplateKind::Zonotope { generators } => {
            let g_fixed = unit_ball_zonotope(n_x, generators, BallApproximation::Inner)?;
            let h_fixed = r * &g_fixed;
            let mut t_generators = AffineMatrix::zeros(n_x, generators);
            for j in 0..generators {
                let mut page = DMatrix::zeros(n_x, generators);
                page.set_column(j, &h_fixed.column(j));
                t_generators.add_page(n_x + j, page);
            }
            Ok(TemplateData {
                q: Exponent::Infinity,
                h_fixed,
                scaling_count: generators,
                t_hat_generators: t_generators.clone(),
                t_generators,
                beta_map: DMatrix::identity(generators, generators),
                g_fixed,
                divisor: 1.0,
            })
        }
        TemplateKind::Ellipsoid { hat_generators } => {
            let g_fixed = if hat_generators == n_x {
                DMatrix::identity(n_x, n_x)
            } else {
                unit_ball_zonotope(n_x, hat_generators, BallApproximation::Outer)?
            };
            let mut t_generators = AffineMatrix::zeros(n_x, n_x);
            for j in 0..n_x {
                let mut page = DMatrix::zeros(n_x, n_x);
                page.set_column(j, &r.column(j));
                t_generators.add_page(n_x + j, page);
            }
            // T_hat columns: (R Diag(s) G_fixed)_j = sum_k s_k R_k Gf[k, j].
            let mut t_hat = AffineMatrix::zeros(n_x, hat_generators);
            for k in 0..n_x {
                let mut page = DMatrix::zeros(n_x, hat_generators);
                for j in 0..hat_generators {
                    let coef = g_fixed[(k, j)];
                    if coef != 0.0 {
                        page.set_column(j, &(r.column(k) * coef));
                    }
                }
                t_hat.add_page(n_x + k, page);
            }
            Ok(TemplateData {
                q: Exponent::two(),
                h_fixed: r.clone(),
                scaling_count: n_x,
                t_generators,
                t_hat_generators: t_hat,
                beta_map: g_fixed.clone(),
                g_fixed,
                divisor: (n_x as f64).sqrt(),
            })
        }
    }
}

/// Reach model for the problem's own LQR gain.
pub fn parametric_reach(
    problem: &SafeSetProblem,
    gain: &LqrGain,
) -> Result<ReachModel, SafeSetError> {
    let template = build_template(problem, &gain.r)?;
    parametric_reach_with(problem, &gain.k, &template)
}

/// Sampled-data state feedback controller `u = K x + c_{u,i} + U_i beta`.
#[derive(Debug, Clone)]
pub struct Controller {
    pub k: DMatrix<f64>,
    pub c_u: Vec<DVector<f64>>,
    pub u_blocks: Vec<DMatrix<f64>>,
    pub q: Exponent,
    pub g_t: DMatrix<f64>,
    pub c_t: DVector<f64>,
    pub t_end: f64,
}

impl Controller {
    pub fn n_steps(&self) -> usize {
        self.c_u.len()
    }

    pub fn safe_set(&self) -> Ellipsotope {
        Ellipsotope::new(self.q, self.g_t.clone(), self.c_t.clone())
            .expect("controller stores a valid template")
    }

    pub fn interval_index(&self, t: f64) -> usize {
        let n = self.n_steps();
        (((t * n as f64) / self.t_end).floor() as usize).min(n - 1)
    }

    /// Fixed per-trajectory parametrization of the initial state: the
    /// closed-form `G_T^{-1}(x0 - c_T)` for ellipsoids, a feasibility LP
    /// for zonotopes. Fails when `x0` lies outside the safe set.
    pub fn beta(&self, x0: &DVector<f64>) -> Result<DVector<f64>, SafeSetError> {
        if self.q.is_two() {
            let shifted = x0 - &self.c_t;
            let beta = self
                .g_t
                .clone()
                .lu()
                .solve(&shifted)
                .ok_or(SafeSetError::BetaInfeasible)?;
            if beta.norm() > 1.0 + 1e-6 {
                return Err(SafeSetError::OutsideSafeSet);
            }
            Ok(beta)
        } else {
            let solver = MinNormSolver::new(&self.g_t, Exponent::Infinity);
            let shifted = x0 - &self.c_t;
            match solver.minimizer(&shifted)? {
                Some((value, beta)) if value <= 1.0 + 1e-6 => Ok(beta),
                Some(_) => Err(SafeSetError::OutsideSafeSet),
                None => Err(SafeSetError::OutsideSafeSet),
            }
        }
    }

    /// `u(t, x) = K x + c_{u,i} + U_i beta` with `i` the interval of `t`.
    pub fn input(&self, x: &DVector<f64>, beta: &DVector<f64>, t: f64) -> DVector<f64> {
        let i = self.interval_index(t);
        &self.k * x + &self.c_u[i] + &self.u_blocks[i] * beta
    }
}

/// Quality data recorded by a successful synthesis.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub objective: f64,
    pub solver_iterations: u32,
    pub primal_residual: f64,
    pub gap: f64,
    pub generator_count: usize,
    pub phi_remainder: f64,
    /// Upper bound of the independently recomputed terminal containment.
    pub terminal_radius_upper: f64,
    /// Smallest state/input margin over all steps.
    pub worst_margin: f64,
}

#[derive(Debug, Clone)]
pub struct SafeSetResult {
    /// The synthesized safe set `T`.
    pub safe_set: Ellipsotope,
    /// Zonotopic over-approximation driving the reach model (`T` itself for
    /// zonotope templates).
    pub t_hat: Ellipsotope,
    pub scaling: DVector<f64>,
    pub controller: Controller,
    /// Numeric time-point reach sets `X_0 .. X_N`.
    pub reach_sets: Vec<Ellipsotope>,
    /// Numeric per-step time-interval enclosures.
    pub interval_sets: Vec<Ellipsotope>,
    /// Numeric per-step input sets.
    pub input_sets: Vec<Ellipsotope>,
    pub diagnostics: Diagnostics,
}

/// Solver tolerances of the synthesis program.
#[derive(Debug, Clone)]
pub struct SynthesisOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    /// Tolerance of the independent terminal containment re-check.
    pub post_verify_tol: f64,
    /// Slack allowed on per-step polyhedron margins.
    pub margin_tol: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            feas_tol: 1e-7,
            gap_tol: 1e-7,
            post_verify_tol: 1e-6,
            margin_tol: 1e-8,
        }
    }
}

pub fn synthesize_safe_set(problem: &SafeSetProblem) -> Result<SafeSetResult, SafeSetError> {
    synthesize_safe_set_with(problem, &SynthesisOptions::default())
}

/// End-to-end pipeline: LQR gain, template, parametric reach model, one
/// conic solve, then independent post-verification of the terminal
/// containment and of every per-step margin on the numeric optimum.
pub fn synthesize_safe_set_with(
    problem: &SafeSetProblem,
    opts: &SynthesisOptions,
) -> Result<SafeSetResult, SafeSetError> {
    problem.validate()?;
    let sys = &problem.system;
    let gain = lqr_gain(
        &sys.a,
        &sys.b,
        &problem.lqr_state_weight,
        &problem.lqr_input_weight,
        problem.dt(),
    )?;
    let template = build_template(problem, &gain.r)?;
    let reach = parametric_reach_with(problem, &gain.k, &template)?;
    let assembled = assemble_program(problem, &template, &reach)?;

    let solution = conic::solve(&assembled.program, opts.feas_tol, opts.gap_tol)?;
    match solution.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Err(SafeSetError::Infeasible),
        other => return Err(SafeSetError::Solver(other)),
    }
    let violations = conic::verify_solution(&assembled.program, &solution, opts.feas_tol * 10.0);
    if !violations.is_empty() {
        return Err(SafeSetError::PostVerification(format!(
            "{} constraint residuals above tolerance after solve",
            violations.len()
        )));
    }

    let theta = &solution.primal[..assembled.theta_len];
    let layout = &reach.layout;
    let scaling = DVector::from_iterator(layout.m, (0..layout.m).map(|j| theta[layout.s(j)]));
    let c_t = DVector::from_iterator(sys.state_dim(), (0..sys.state_dim()).map(|r| theta[layout.c_t(r)]));
    let g_t = template.t_generators.eval(theta);
    let t_hat_g = template.t_hat_generators.eval(theta);

    let safe_set = Ellipsotope::new(template.q, g_t.clone(), c_t.clone())?;
    let t_hat = Ellipsotope::zonotope(t_hat_g, c_t.clone())?;

    let controller = Controller {
        k: gain.k.clone(),
        c_u: (0..problem.n_steps)
            .map(|i| {
                DVector::from_iterator(
                    sys.input_dim(),
                    (0..sys.input_dim()).map(|r| theta[layout.c_u(i, r)]),
                )
            })
            .collect(),
        u_blocks: (0..problem.n_steps)
            .map(|i| {
                DMatrix::from_fn(sys.input_dim(), layout.m_u, |r, c| theta[layout.u(i, r, c)])
            })
            .collect(),
        q: template.q,
        g_t: g_t.clone(),
        c_t: c_t.clone(),
        t_end: problem.t_end,
    };

    let (points, hulls, inputs) = program::evaluate_reach_sets(&reach, theta);
    let reach_sets = numeric_zonotopes(points)?;
    let interval_sets = numeric_zonotopes(hulls)?;
    let input_sets = numeric_zonotopes(inputs)?;

    // Independent terminal containment re-check on the numeric optimum.
    let terminal = reach_sets.last().expect("terminal set exists");
    let method = if template.q.is_infinite() { MethodChoice::Lr } else { MethodChoice::Auto };
    let check = containment::containment_radius(terminal, &safe_set, method)?;
    if check.r_upper > 1.0 + opts.post_verify_tol {
        return Err(SafeSetError::PostVerification(format!(
            "terminal containment radius {} exceeds 1",
            check.r_upper
        )));
    }

    // Per-step margins on the numeric sets.
    let mut worst_margin = f64::INFINITY;
    for set in &interval_sets {
        let margins = zonotope_in_polyhedron(set, &problem.state_constraints)?;
        worst_margin = worst_margin.min(margins.min());
    }
    for set in &input_sets {
        let margins = zonotope_in_polyhedron(set, &problem.input_constraints)?;
        worst_margin = worst_margin.min(margins.min());
    }
    if worst_margin < -opts.margin_tol {
        return Err(SafeSetError::PostVerification(format!(
            "path constraint margin {worst_margin} below tolerance"
        )));
    }

    // Ellipsoid templates: T must sit inside its zonotopic stand-in.
    if template.q.is_two() {
        verify_hat_cover(&safe_set, &t_hat)?;
    }

    let diagnostics = Diagnostics {
        objective: solution.objective,
        solver_iterations: solution.iterations,
        primal_residual: solution.primal_residual,
        gap: solution.gap,
        generator_count: reach.generator_count(),
        phi_remainder: reach.phi_remainder,
        terminal_radius_upper: check.r_upper,
        worst_margin,
    };

    Ok(SafeSetResult {
        safe_set,
        t_hat,
        scaling,
        controller,
        reach_sets,
        interval_sets,
        input_sets,
        diagnostics,
    })
}

fn numeric_zonotopes(
    sets: Vec<(DVector<f64>, DMatrix<f64>)>,
) -> Result<Vec<Ellipsotope>, SafeSetError> {
    sets.into_iter()
        .map(|(c, g)| Ellipsotope::zonotope(g, c).map_err(SafeSetError::from))
        .collect()
}

/// Sampled support-function check that `T` is covered by `T_hat`.
fn verify_hat_cover(safe_set: &Ellipsotope, t_hat: &Ellipsotope) -> Result<(), SafeSetError> {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x7468_6174);
    let n = safe_set.dim();
    for _ in 0..128 {
        let mut l = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0f64));
        if l.norm() < 1e-9 {
            continue;
        }
        l /= l.norm();
        let h_t = sets::support_function(safe_set, &l)?;
        let h_hat = sets::support_function(t_hat, &l)?;
        if h_t > h_hat + 1e-8 {
            return Err(SafeSetError::PostVerification(format!(
                "ellipsoid support {h_t} exceeds its zonotope cover {h_hat}"
            )));
        }
    }
    Ok(())
}

/// Membership check against a synthesized safe set at tolerance `tol`.
pub fn safe_set_contains(result: &SafeSetResult, x: &DVector<f64>, tol: f64) -> bool {
    contains_point(&result.safe_set, x, tol).unwrap_or(false)
}
