//! Set representations: ellipsotopes and H-polyhedra, the ellipsotope norm,
//! membership, degeneracy analysis, support functions and unit-ball zonotope
//! templates.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::conic::{self, ConeProgram, ConicError, LinExpr, Sense, SolveStatus};
use crate::norms::{self, vector_norm, Exponent};

/// Default relative tolerance for rank decisions.
pub const RANK_REL_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SetError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operation requires a zonotope (p = inf), got p = {0}")]
    NotAZonotope(Exponent),
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("need at least {need} generators in dimension {dim}, got {got}")]
    TooFewGenerators { need: usize, dim: usize, got: usize },
    #[error("conic subproblem failed: {0}")]
    Conic(#[from] ConicError),
    #[error("solver could not resolve the norm program (status {0:?})")]
    NormSolveFailed(SolveStatus),
}

/// `E_p(G, c) = {c + G a : ||a||_p <= 1}`.
///
/// `p = inf` is a zonotope, `p = 2` an ellipsoid, `p = 1` a centrally
/// symmetric V-polytope whose vertices are `c +- g_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsotope {
    pub p: Exponent,
    /// Generator matrix, one generator per column (n x m).
    pub generators: DMatrix<f64>,
    pub center: DVector<f64>,
}

impl Ellipsotope {
    pub fn new(p: Exponent, generators: DMatrix<f64>, center: DVector<f64>) -> Result<Self, SetError> {
        if generators.nrows() == 0 || generators.ncols() == 0 {
            return Err(SetError::TooFewGenerators {
                need: 1,
                dim: generators.nrows(),
                got: generators.ncols(),
            });
        }
        if generators.nrows() != center.len() {
            return Err(SetError::DimensionMismatch {
                expected: generators.nrows(),
                got: center.len(),
            });
        }
        if generators.iter().any(|v| !v.is_finite()) || center.iter().any(|v| !v.is_finite()) {
            return Err(SetError::NonFinite);
        }
        Ok(Ellipsotope { p, generators, center })
    }

    pub fn zonotope(generators: DMatrix<f64>, center: DVector<f64>) -> Result<Self, SetError> {
        Self::new(Exponent::Infinity, generators, center)
    }

    pub fn ellipsoid(generators: DMatrix<f64>, center: DVector<f64>) -> Result<Self, SetError> {
        Self::new(Exponent::two(), generators, center)
    }

    pub fn centered(p: Exponent, generators: DMatrix<f64>) -> Result<Self, SetError> {
        let n = generators.nrows();
        Self::new(p, generators, DVector::zeros(n))
    }

    /// Ambient dimension n.
    pub fn dim(&self) -> usize {
        self.generators.nrows()
    }

    /// Number of generators m.
    pub fn num_generators(&self) -> usize {
        self.generators.ncols()
    }

    /// Full rank and at least as many generators as dimensions.
    pub fn is_nondegenerate(&self, rel_tol: f64) -> bool {
        self.dim() <= self.num_generators()
            && rank_and_projection(&self.generators, rel_tol).rank == self.dim()
    }

    /// The point of the set maximizing `l^T x`.
    pub fn support_point(&self, direction: &DVector<f64>) -> DVector<f64> {
        let c = self.generators.transpose() * direction;
        let alpha = holder_maximizer(&c, self.p);
        &self.center + &self.generators * alpha
    }
}

/// `P(Lambda, lambda) = {x : Lambda x <= lambda}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HPolyhedron {
    pub halfspaces: DMatrix<f64>,
    pub offsets: DVector<f64>,
}

impl HPolyhedron {
    pub fn new(halfspaces: DMatrix<f64>, offsets: DVector<f64>) -> Result<Self, SetError> {
        if halfspaces.nrows() != offsets.len() {
            return Err(SetError::DimensionMismatch {
                expected: halfspaces.nrows(),
                got: offsets.len(),
            });
        }
        Ok(HPolyhedron { halfspaces, offsets })
    }

    /// The axis-aligned box `|x_i| <= radius`.
    pub fn symmetric_box(dim: usize, radius: f64) -> Self {
        let mut halfspaces = DMatrix::zeros(2 * dim, dim);
        for i in 0..dim {
            halfspaces[(i, i)] = 1.0;
            halfspaces[(dim + i, i)] = -1.0;
        }
        HPolyhedron { halfspaces, offsets: DVector::from_element(2 * dim, radius) }
    }

    pub fn dim(&self) -> usize {
        self.halfspaces.ncols()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        (&self.halfspaces * x - &self.offsets).iter().all(|&v| v <= tol)
    }
}

/// SVD-based rank decision together with the orthonormal projector onto the
/// coordinates of the column space.
#[derive(Debug, Clone)]
pub struct RankReport {
    pub rank: usize,
    /// `k x n` matrix with orthonormal rows mapping onto Im(H) coordinates.
    pub projector: DMatrix<f64>,
    /// Singular values in nonincreasing order.
    pub singular_values: Vec<f64>,
}

/// Rank of `h` at threshold `rel_tol * sigma_max`, plus the projector
/// `[I_k 0] U^T` from the sorted SVD.
pub fn rank_and_projection(h: &DMatrix<f64>, rel_tol: f64) -> RankReport {
    let n = h.nrows();
    let svd = h.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    let rank = singular_values
        .iter()
        .take_while(|&&s| s > rel_tol * sigma_max && s > 0.0)
        .count();
    let mut projector = DMatrix::zeros(rank, n);
    for (row, &i) in order.iter().take(rank).enumerate() {
        projector.set_row(row, &u.column(i).transpose());
    }
    RankReport { rank, projector, singular_values }
}

/// Reusable minimum-norm solver for one generator matrix: evaluates
/// `min ||a||_p subject to G a = x` for many right-hand sides. The SVD is
/// factored once; square invertible matrices take a closed-form path and
/// `p = 2` reduces to the pseudo-inverse solution.
pub struct MinNormSolver {
    p: Exponent,
    rank: usize,
    ncols: usize,
    /// U restricted to the range (n x r).
    u_r: DMatrix<f64>,
    /// Projected equality system `S_r V_r^T` (r x m).
    reduced: DMatrix<f64>,
    /// `V_r S_r^{-1}` (m x r), applying the pseudo-inverse after `U_r^T`.
    pinv_tail: DMatrix<f64>,
    rel_tol: f64,
}

impl MinNormSolver {
    pub fn new(g: &DMatrix<f64>, p: Exponent) -> Self {
        Self::with_tolerance(g, p, RANK_REL_TOL)
    }

    pub fn with_tolerance(g: &DMatrix<f64>, p: Exponent, rel_tol: f64) -> Self {
        let (n, m) = g.shape();
        let svd = g.clone().svd(true, true);
        let u = svd.u.expect("u requested");
        let vt = svd.v_t.expect("v_t requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let sigma_max = order.first().map(|&i| svd.singular_values[i]).unwrap_or(0.0);
        let rank = order
            .iter()
            .filter(|&&i| svd.singular_values[i] > rel_tol * sigma_max && svd.singular_values[i] > 0.0)
            .count();
        let mut u_r = DMatrix::zeros(n, rank);
        let mut reduced = DMatrix::zeros(rank, m);
        let mut pinv_tail = DMatrix::zeros(m, rank);
        for (k, &i) in order.iter().take(rank).enumerate() {
            let s = svd.singular_values[i];
            u_r.set_column(k, &u.column(i));
            reduced.set_row(k, &(vt.row(i) * s));
            pinv_tail.set_column(k, &(vt.row(i).transpose() / s));
        }
        MinNormSolver { p, rank, ncols: m, u_r, reduced, pinv_tail, rel_tol }
    }

    pub fn is_feasible(&self, x: &DVector<f64>) -> bool {
        let projected = &self.u_r * (self.u_r.transpose() * x);
        (projected - x).norm() <= self.rel_tol * (1.0 + x.norm())
    }

    /// Like [`Self::eval`] but also returns a minimizing coefficient vector.
    pub fn minimizer(&self, x: &DVector<f64>) -> Result<Option<(f64, DVector<f64>)>, SetError> {
        if !self.is_feasible(x) {
            return Ok(None);
        }
        let coords = self.u_r.transpose() * x;
        if self.rank == self.ncols || self.p.is_two() {
            let alpha = &self.pinv_tail * &coords;
            return Ok(Some((vector_norm(alpha.as_slice(), self.p), alpha)));
        }
        let mut prog = ConeProgram::new(Sense::Minimize);
        let alpha = prog.vector("alpha", self.ncols);
        let t = prog.scalar("t");
        prog.set_objective(LinExpr::var(t));
        let rows: Vec<LinExpr> = (0..self.rank)
            .map(|r| {
                let mut e = LinExpr::constant(-coords[r]);
                for j in 0..self.ncols {
                    let c = self.reduced[(r, j)];
                    if c != 0.0 {
                        e = e.plus(alpha.index(j), c);
                    }
                }
                e
            })
            .collect();
        prog.eq_zero(rows);
        let exprs: Vec<LinExpr> = (0..self.ncols).map(|j| LinExpr::var(alpha.index(j))).collect();
        prog.pnorm_epigraph(&exprs, self.p, LinExpr::var(t));
        let sol = conic::solve(&prog, conic::DEFAULT_FEAS_TOL, conic::DEFAULT_GAP_TOL)?;
        match sol.status {
            SolveStatus::Optimal => Ok(Some((
                sol.objective.max(0.0),
                DVector::from_vec(sol.vector(alpha)),
            ))),
            SolveStatus::Infeasible => Ok(None),
            other => Err(SetError::NormSolveFailed(other)),
        }
    }

    /// `min ||a||_p : G a = x`, or `None` when `x` is outside Im(G).
    pub fn eval(&self, x: &DVector<f64>) -> Result<Option<f64>, SetError> {
        if !self.is_feasible(x) {
            return Ok(None);
        }
        let coords = self.u_r.transpose() * x;
        // Unique solution: any p-norm evaluates in closed form.
        if self.rank == self.ncols {
            let alpha = &self.pinv_tail * &coords;
            return Ok(Some(vector_norm(alpha.as_slice(), self.p)));
        }
        if self.p.is_two() {
            // Pseudo-inverse gives the minimum 2-norm solution directly.
            let alpha = &self.pinv_tail * &coords;
            return Ok(Some(alpha.norm()));
        }
        let mut prog = ConeProgram::new(Sense::Minimize);
        let alpha = prog.vector("alpha", self.ncols);
        let t = prog.scalar("t");
        prog.set_objective(LinExpr::var(t));
        let rows: Vec<LinExpr> = (0..self.rank)
            .map(|r| {
                let mut e = LinExpr::constant(-coords[r]);
                for j in 0..self.ncols {
                    let c = self.reduced[(r, j)];
                    if c != 0.0 {
                        e = e.plus(alpha.index(j), c);
                    }
                }
                e
            })
            .collect();
        prog.eq_zero(rows);
        let exprs: Vec<LinExpr> = (0..self.ncols).map(|j| LinExpr::var(alpha.index(j))).collect();
        prog.pnorm_epigraph(&exprs, self.p, LinExpr::var(t));
        let sol = conic::solve(&prog, conic::DEFAULT_FEAS_TOL, conic::DEFAULT_GAP_TOL)?;
        match sol.status {
            SolveStatus::Optimal => Ok(Some(sol.objective.max(0.0))),
            // The equality system was pre-checked for consistency, so an
            // infeasibility claim here is numerical noise on a tiny value.
            SolveStatus::Infeasible => Ok(None),
            other => Err(SetError::NormSolveFailed(other)),
        }
    }
}

/// The ellipsotope norm `min ||a||_p : G a = x` of Proposition-style unit
/// balls; `None` marks `x` outside the column space of `G`.
pub fn ellipsotope_norm(e: &Ellipsotope, x: &DVector<f64>) -> Result<Option<f64>, SetError> {
    if x.len() != e.dim() {
        return Err(SetError::DimensionMismatch { expected: e.dim(), got: x.len() });
    }
    MinNormSolver::new(&e.generators, e.p).eval(x)
}

/// Membership at tolerance: `||x - c||_E <= 1 + tol`.
pub fn contains_point(e: &Ellipsotope, x: &DVector<f64>, tol: f64) -> Result<bool, SetError> {
    let shifted = x - &e.center;
    Ok(matches!(ellipsotope_norm(e, &shifted)?, Some(v) if v <= 1.0 + tol))
}

/// Support function `h_E(l) = l^T c + ||G^T l||_{p*}`.
pub fn support_function(e: &Ellipsotope, direction: &DVector<f64>) -> Result<f64, SetError> {
    if direction.len() != e.dim() {
        return Err(SetError::DimensionMismatch { expected: e.dim(), got: direction.len() });
    }
    let gt_l = e.generators.transpose() * direction;
    Ok(direction.dot(&e.center) + vector_norm(gt_l.as_slice(), e.p.conjugate()))
}

/// Margins `lambda - (Lambda c + |Lambda G| 1)`; the zonotope lies in the
/// polyhedron iff all entries are nonnegative.
pub fn zonotope_in_polyhedron(z: &Ellipsotope, p: &HPolyhedron) -> Result<DVector<f64>, SetError> {
    if !z.p.is_infinite() {
        return Err(SetError::NotAZonotope(z.p));
    }
    if p.dim() != z.dim() {
        return Err(SetError::DimensionMismatch { expected: z.dim(), got: p.dim() });
    }
    let lg = &p.halfspaces * &z.generators;
    let support = lg.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>());
    let base = &p.halfspaces * &z.center;
    let mut margins = DVector::zeros(p.offsets.len());
    for (i, s) in support.enumerate() {
        margins[i] = p.offsets[i] - base[i] - s;
    }
    Ok(margins)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallApproximation {
    /// `Z(G)` is contained in the unit 2-ball.
    Inner,
    /// The unit 2-ball is contained in `Z(G)`.
    Outer,
}

/// Zonotope templates for the unit 2-ball with `m` generators in dimension
/// `n`. Inner templates are scaled so every vertex lies in the ball; outer
/// ones so every sampled support direction is covered, with `G = I` when
/// `m = n`.
pub fn unit_ball_zonotope(n: usize, m: usize, mode: BallApproximation) -> Result<DMatrix<f64>, SetError> {
    if m < n {
        return Err(SetError::TooFewGenerators { need: n, dim: n, got: m });
    }
    if n == m {
        return Ok(match mode {
            // The unit box: inner needs vertices inside, so scale by 1/sqrt(n).
            BallApproximation::Inner => DMatrix::identity(n, n) / (n as f64).sqrt(),
            BallApproximation::Outer => DMatrix::identity(n, n),
        });
    }
    let directions = template_directions(n, m);
    match mode {
        BallApproximation::Inner => {
            let scale = if m <= norms::ENUMERATION_LIMIT {
                let (max_vertex, _) = norms::sign_enumeration_max(&directions, |v| v.norm());
                1.0 / max_vertex
            } else {
                // ||G s||_2 <= || |G| 1 ||_2 for any sign vector s.
                let mut bound = DVector::<f64>::zeros(n);
                for c in directions.column_iter() {
                    for i in 0..n {
                        bound[i] += c[i].abs();
                    }
                }
                1.0 / bound.norm()
            };
            Ok(directions * scale)
        }
        BallApproximation::Outer => {
            let min_support = min_support_one_norm(&directions, n, m);
            Ok(directions * ((1.0 + 1e-9) / min_support))
        }
    }
}

/// Evenly rotated generators in the plane, quasi-uniform directions above.
fn template_directions(n: usize, m: usize) -> DMatrix<f64> {
    if n == 1 {
        return DMatrix::from_element(1, m, 1.0 / m as f64);
    }
    if n == 2 {
        return DMatrix::from_fn(2, m, |r, j| {
            let theta = std::f64::consts::PI * j as f64 / m as f64;
            if r == 0 {
                theta.cos()
            } else {
                theta.sin()
            }
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x62616c6c);
    let mut g = DMatrix::zeros(n, m);
    for j in 0..m {
        loop {
            let v = DVector::from_fn(n, |_, _| gauss(&mut rng));
            let norm = v.norm();
            if norm > 1e-6 {
                g.set_column(j, &(v / norm));
                break;
            }
        }
    }
    g
}

fn gauss<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// `min_{||l||_2 = 1} ||G^T l||_1`: exact over breakpoints in the plane,
/// sampled with subgradient polish otherwise.
fn min_support_one_norm(g: &DMatrix<f64>, n: usize, m: usize) -> f64 {
    let phi = |l: &DVector<f64>| -> f64 { (g.transpose() * l).iter().map(|v| v.abs()).sum() };
    if n == 2 {
        // Piecewise sinusoidal sum: interior minima only occur where some
        // generator is orthogonal to l, so checking breakpoints is exact.
        let mut best = f64::INFINITY;
        for j in 0..m {
            let gj = g.column(j);
            let theta = gj[1].atan2(gj[0]) + std::f64::consts::FRAC_PI_2;
            let l = DVector::from_column_slice(&[theta.cos(), theta.sin()]);
            best = best.min(phi(&l));
        }
        return best;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6f757465);
    let mut best = f64::INFINITY;
    for _ in 0..200 {
        let mut l = DVector::from_fn(n, |_, _| gauss(&mut rng));
        l /= l.norm();
        let mut step = 0.2;
        for _ in 0..100 {
            let sub = g * (g.transpose() * &l).map(|v| v.signum());
            let mut candidate = &l - step * &sub / sub.norm().max(1e-12);
            let norm = candidate.norm();
            if norm < 1e-9 {
                step *= 0.5;
                continue;
            }
            candidate /= norm;
            if phi(&candidate) < phi(&l) {
                l = candidate;
            } else {
                step *= 0.7;
            }
        }
        best = best.min(phi(&l));
    }
    best
}

use crate::norms::holder_maximizer;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows.len(), rows[0].len(), &rows.concat())
    }

    fn vec2(a: f64, b: f64) -> DVector<f64> {
        DVector::from_column_slice(&[a, b])
    }

    #[test]
    fn ellipsotope_norm_examples() {
        let e2 = Ellipsotope::centered(Exponent::two(), DMatrix::identity(2, 2)).unwrap();
        assert_relative_eq!(ellipsotope_norm(&e2, &vec2(3.0, 4.0)).unwrap().unwrap(), 5.0);

        let einf = Ellipsotope::centered(Exponent::Infinity, DMatrix::identity(2, 2)).unwrap();
        assert_relative_eq!(ellipsotope_norm(&einf, &vec2(3.0, 4.0)).unwrap().unwrap(), 4.0);

        let g = mat(&[&[1.0, 1.0], &[1.0, -1.0]]);
        let e = Ellipsotope::centered(Exponent::Infinity, g).unwrap();
        assert_relative_eq!(
            ellipsotope_norm(&e, &vec2(2.0, 0.0)).unwrap().unwrap(),
            1.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn ellipsotope_norm_reports_infeasible_off_subspace() {
        let g = mat(&[&[1.0], &[0.0]]);
        let e = Ellipsotope::centered(Exponent::two(), g).unwrap();
        assert!(ellipsotope_norm(&e, &vec2(0.0, 1.0)).unwrap().is_none());
        assert!(ellipsotope_norm(&e, &vec2(0.5, 0.0)).unwrap().is_some());
    }

    #[test]
    fn contains_point_examples() {
        let e2 = Ellipsotope::centered(Exponent::two(), DMatrix::identity(2, 2)).unwrap();
        assert!(contains_point(&e2, &vec2(1.0, 0.0), 0.0).unwrap());
        assert!(!contains_point(&e2, &vec2(1.1, 0.0), 0.0).unwrap());

        let g = mat(&[&[1.0, 1.0], &[1.0, -1.0]]);
        let e = Ellipsotope::centered(Exponent::Infinity, g).unwrap();
        assert!(contains_point(&e, &vec2(2.0, 0.0), 1e-9).unwrap());
    }

    #[test]
    fn rank_and_projection_examples() {
        let r = rank_and_projection(&mat(&[&[1.0, 0.0], &[0.0, 0.0]]), RANK_REL_TOL);
        assert_eq!(r.rank, 1);
        assert_relative_eq!(r.projector[(0, 0)].abs(), 1.0, epsilon = 1e-12);

        let r = rank_and_projection(&DMatrix::identity(3, 3), RANK_REL_TOL);
        assert_eq!(r.rank, 3);
        let p = &r.projector;
        let gram = p * p.transpose();
        assert_relative_eq!((gram - DMatrix::identity(3, 3)).norm(), 0.0, epsilon = 1e-12);

        let r = rank_and_projection(&mat(&[&[1.0, 1.0], &[1.0, 1.0]]), RANK_REL_TOL);
        assert_eq!(r.rank, 1);
        assert_relative_eq!(r.singular_values[0], 2.0, epsilon = 1e-12);
        assert!(r.singular_values[1] < 1e-12);
    }

    #[test]
    fn support_function_examples() {
        let e2 = Ellipsotope::centered(Exponent::two(), DMatrix::identity(2, 2)).unwrap();
        assert_relative_eq!(support_function(&e2, &vec2(1.0, 0.0)).unwrap(), 1.0);

        let einf =
            Ellipsotope::new(Exponent::Infinity, DMatrix::identity(2, 2), vec2(1.0, 1.0)).unwrap();
        assert_relative_eq!(support_function(&einf, &vec2(1.0, 1.0)).unwrap(), 4.0);

        // p = 1: the dual norm is the max absolute generator response.
        let g = mat(&[&[1.0, -2.0], &[0.5, 3.0]]);
        let e1 = Ellipsotope::centered(Exponent::One, g.clone()).unwrap();
        let l = vec2(0.3, -0.7);
        let expected = (g.transpose() * &l).iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        assert_relative_eq!(support_function(&e1, &l).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn zonotope_in_polyhedron_margins() {
        let z = Ellipsotope::centered(Exponent::Infinity, DMatrix::identity(2, 2)).unwrap();
        let margins = zonotope_in_polyhedron(&z, &HPolyhedron::symmetric_box(2, 2.0)).unwrap();
        assert!(margins.iter().all(|&m| (m - 1.0).abs() < 1e-12));

        let margins = zonotope_in_polyhedron(&z, &HPolyhedron::symmetric_box(2, 1.0)).unwrap();
        assert!(margins.iter().all(|&m| m.abs() < 1e-12));

        let shifted =
            Ellipsotope::new(Exponent::Infinity, DMatrix::identity(2, 2), vec2(3.0, 0.0)).unwrap();
        let margins = zonotope_in_polyhedron(&shifted, &HPolyhedron::symmetric_box(2, 1.0)).unwrap();
        assert!(margins[0] < 0.0);
    }

    #[test]
    fn unit_ball_zonotope_modes() {
        assert_relative_eq!(
            unit_ball_zonotope(2, 2, BallApproximation::Outer).unwrap(),
            DMatrix::identity(2, 2)
        );
        let g = unit_ball_zonotope(1, 1, BallApproximation::Inner).unwrap();
        assert_relative_eq!(g[(0, 0)], 1.0);
        assert!(unit_ball_zonotope(2, 1, BallApproximation::Inner).is_err());

        // 4 evenly rotated generators, scaled by the worst vertex norm.
        let g = unit_ball_zonotope(2, 4, BallApproximation::Inner).unwrap();
        let mut worst: f64 = 0.0;
        for signs in 0..16u32 {
            let mut v = DVector::zeros(2);
            for j in 0..4 {
                let s = if signs >> j & 1 == 1 { 1.0 } else { -1.0 };
                v += s * g.column(j);
            }
            worst = worst.max(v.norm());
        }
        assert_relative_eq!(worst, 1.0, epsilon = 1e-12);

        // Inner: sampled support functions stay below the ball's.
        for (n, m) in [(2usize, 5usize), (3, 6), (4, 10)] {
            let g = unit_ball_zonotope(n, m, BallApproximation::Inner).unwrap();
            let z = Ellipsotope::centered(Exponent::Infinity, g).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for _ in 0..50 {
                let mut l = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0f64));
                if l.norm() < 1e-9 {
                    continue;
                }
                l /= l.norm();
                assert!(support_function(&z, &l).unwrap() <= 1.0 + 1e-9);
            }
        }

        // Outer: sampled support functions dominate the ball's.
        for (n, m) in [(2usize, 5usize), (3, 7)] {
            let g = unit_ball_zonotope(n, m, BallApproximation::Outer).unwrap();
            let z = Ellipsotope::centered(Exponent::Infinity, g).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(6);
            for _ in 0..200 {
                let mut l = DVector::from_fn(n, |_, _| gauss(&mut rng));
                if l.norm() < 1e-9 {
                    continue;
                }
                l /= l.norm();
                assert!(support_function(&z, &l).unwrap() >= 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn norm_axioms_and_unit_ball_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let exps = [
            Exponent::One,
            Exponent::new(1.5).unwrap(),
            Exponent::two(),
            Exponent::new(3.0).unwrap(),
            Exponent::Infinity,
        ];
        for &p in &exps {
            let n = 2;
            let m = 4;
            let g = DMatrix::from_fn(n, m, |_, _| rng.random_range(-2.0..2.0f64));
            let e = Ellipsotope::centered(p, g.clone()).unwrap();
            let solver = MinNormSolver::new(&g, p);
            for _ in 0..8 {
                let x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0f64));
                let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0f64));
                let nx = solver.eval(&x).unwrap().unwrap();
                let ny = solver.eval(&y).unwrap().unwrap();
                let nxy = solver.eval(&(&x + &y)).unwrap().unwrap();
                assert!(nxy <= nx + ny + 1e-8);
                let lam: f64 = rng.random_range(0.1..3.0);
                let nl = solver.eval(&(&x * lam)).unwrap().unwrap();
                assert_relative_eq!(nl, lam * nx, epsilon = 1e-7, max_relative = 1e-6);

                // Unit-ball statement: ||G a||_E <= ||a||_p.
                let alpha = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0f64));
                let na = solver.eval(&(&g * &alpha)).unwrap().unwrap();
                assert!(na <= vector_norm(alpha.as_slice(), p) + 1e-7);

                // Membership of sampled points of the unit ball.
                let scale = vector_norm(alpha.as_slice(), p).max(1e-9);
                let inside = &g * (&alpha / scale) * rng.random_range(0.0..1.0f64);
                assert!(contains_point(&e, &inside, 1e-8).unwrap());
            }
        }
    }

    #[test]
    fn support_function_central_symmetry() {
        // Reflecting an ellipsotope through its center is the identity, so
        // h(l) = h_reflected(-l) + 2 l'c.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let g = DMatrix::from_fn(3, 5, |_, _| rng.random_range(-1.0..1.0f64));
            let c = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0f64));
            let e = Ellipsotope::new(Exponent::new(1.5).unwrap(), g.clone(), c.clone()).unwrap();
            let reflected = Ellipsotope::new(e.p, g * -1.0, c.clone()).unwrap();
            let l = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0f64));
            let lhs = support_function(&e, &l).unwrap();
            let rhs = support_function(&reflected, &(-&l)).unwrap() + 2.0 * l.dot(&c);
            assert_relative_eq!(lhs, rhs, epsilon = 1e-10);
        }
    }
}
