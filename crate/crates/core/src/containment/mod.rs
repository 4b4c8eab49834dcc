//! The containment radius `r(inbody, circumbody)`: exact algorithms where
//! they exist, certified convex relaxations with two-sided bounds otherwise,
//! and a dispatcher that picks the method from the exponent pair.
//!
//! Methods and their certified intervals:
//! * `p = 1` — vertex scan over `+-g_i`, exact.
//! * `p = q = 2` — S-procedure SDP, exact (cross-checkable against the
//!   quadratic-over-ball eigen oracle).
//! * `p = inf` — center reduction, then the linear relaxation `LR_q`
//!   (upper bound `LR`, lower bound `LR * g1 / (g_{q*} sqrt(m))`), plus the
//!   tighter semidefinite relaxation `ZSR_q` for `q` in `(1, 2]`; the dual
//!   optimizer can certify `LR` exact when its columns agree up to sign.
//! * `2 <= p < inf`, `q` in `(1, 2]`, equal centers — the relaxation
//!   `SR_{p,q}` with ratio `g_{q*} g_p`.
//! * anything else — norm-equivalence mapping onto a tractable pair, with
//!   dimension-dependent factors widening the interval.

mod lr;
mod sdp;

pub use lr::{lr_dual, lr_exactness_certificate, lr_relaxation, LrOutcome};
pub use sdp::{radius_ellipsoid_in_ellipsoid, sr_relaxation, zsr_relaxation, DiagonalWitness};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::conic::ConicError;
use crate::norms::{gaussian_moment, Exponent, NormError};
use crate::oracles::{self, OracleBudget, OracleError};
use crate::sets::{rank_and_projection, Ellipsotope, MinNormSolver, SetError, RANK_REL_TOL};

#[derive(Debug, Error)]
pub enum ContainmentError {
    #[error("ambient dimensions differ: inbody {inbody}, circumbody {circumbody}")]
    DimensionMismatch { inbody: usize, circumbody: usize },
    #[error("circumbody generator matrix must be surjective; project first")]
    NotSurjective,
    #[error("method {method:?} does not apply to exponents p = {p}, q = {q}")]
    ExponentRange { method: MethodChoice, p: Exponent, q: Exponent },
    #[error("this method requires equal centers")]
    CenterMismatch,
    #[error("no exact method for p = {p}, q = {q}")]
    NoExactMethod { p: Exponent, q: Exponent },
    #[error("solver failed: {0:?}")]
    SolverFailed(crate::conic::SolveStatus),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Norm(#[from] NormError),
}

/// Requested resolution strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    Auto,
    Lr,
    Zsr,
    Sr,
    Exact,
    BruteForce,
}

/// Method that actually produced the reported interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    VertexScan,
    EllipsoidSdp,
    EllipsoidEigen,
    Lr,
    Zsr,
    LrZsr,
    Sr,
    NormEquivalence,
    BruteForce,
    DegenerateRankGap,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::VertexScan => "vertex-scan",
            Method::EllipsoidSdp => "ellipsoid-sdp",
            Method::EllipsoidEigen => "ellipsoid-eigen",
            Method::Lr => "lr",
            Method::Zsr => "zsr",
            Method::LrZsr => "lr+zsr",
            Method::Sr => "sr",
            Method::NormEquivalence => "norm-equivalence",
            Method::BruteForce => "bruteforce",
            Method::DegenerateRankGap => "degenerate-rank-gap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Contained,
    NotContained,
    Unknown,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Contained => "contained",
            Verdict::NotContained => "not_contained",
            Verdict::Unknown => "unknown",
        }
    }
}

/// Optimizer data backing a reported interval.
#[derive(Debug, Clone)]
pub enum Witness {
    /// Primal `X` of the linear relaxation, plus the dual `Y` and the
    /// sign-structure exactness flag when they were computed.
    Lr { x: DMatrix<f64>, y: Option<DMatrix<f64>>, certified_exact: bool },
    /// Multipliers `(rho, delta)` of the ellipsoid S-procedure SDP.
    EllipsoidMultipliers { rho: f64, delta: f64 },
    /// Diagonal scalings `(v, w)` of the semidefinite relaxations.
    DiagonalPair { v: DVector<f64>, w: DVector<f64> },
    /// Maximizing inbody coefficients from an exact or sampling method.
    MaximizingAlpha { alpha: DVector<f64> },
}

/// Certified two-sided bounds on the containment radius.
#[derive(Debug, Clone)]
pub struct ContainmentResult {
    pub r_lower: f64,
    pub r_upper: f64,
    pub method: Method,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
}

impl ContainmentResult {
    fn from_bounds(
        r_lower: f64,
        r_upper: f64,
        method: Method,
        witness: Option<Witness>,
        deadband: f64,
    ) -> Self {
        debug_assert!(r_lower <= r_upper + 1e-12 * r_upper.abs().max(1.0));
        let verdict = if r_upper <= 1.0 + deadband {
            Verdict::Contained
        } else if r_lower > 1.0 + deadband {
            Verdict::NotContained
        } else {
            Verdict::Unknown
        };
        ContainmentResult { r_lower, r_upper, method, verdict, witness }
    }

    /// Keeps the tighter of two certified intervals.
    fn merged(self, other: ContainmentResult, method: Method, deadband: f64) -> Self {
        let witness = if other.r_upper < self.r_upper { other.witness.clone() } else { self.witness.clone() };
        ContainmentResult::from_bounds(
            self.r_lower.max(other.r_lower),
            self.r_upper.min(other.r_upper),
            method,
            witness,
            deadband,
        )
    }
}

/// Tolerances and budgets shared by the containment methods.
#[derive(Debug, Clone)]
pub struct Options {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub rank_rel_tol: f64,
    /// Relative tolerance of the dual sign-structure certificate.
    pub exactness_tol: f64,
    /// Dead band around 1 separating the three verdicts.
    pub verdict_deadband: f64,
    pub oracle_budget: OracleBudget,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            rank_rel_tol: RANK_REL_TOL,
            exactness_tol: 1e-6,
            verdict_deadband: 1e-9,
            oracle_budget: OracleBudget::default(),
        }
    }
}

/// Containment radius with default options.
pub fn containment_radius(
    inbody: &Ellipsotope,
    circumbody: &Ellipsotope,
    choice: MethodChoice,
) -> Result<ContainmentResult, ContainmentError> {
    containment_radius_with(inbody, circumbody, choice, &Options::default())
}

/// Containment radius of `inbody` in `circumbody`.
///
/// Degenerate circumbodies are resolved first: when the joint matrix
/// `[G c-d H]` has larger rank than `H` the inbody leaves the affine span
/// and `r = +inf`; otherwise both bodies are projected onto the span and
/// the query recurses. Nondegenerate instances dispatch on `(p, q)`.
pub fn containment_radius_with(
    inbody: &Ellipsotope,
    circumbody: &Ellipsotope,
    choice: MethodChoice,
    opts: &Options,
) -> Result<ContainmentResult, ContainmentError> {
    if inbody.dim() != circumbody.dim() {
        return Err(ContainmentError::DimensionMismatch {
            inbody: inbody.dim(),
            circumbody: circumbody.dim(),
        });
    }
    let n = circumbody.dim();
    let h_rank = rank_and_projection(&circumbody.generators, opts.rank_rel_tol);
    if h_rank.rank < n {
        let shift = &inbody.center - &circumbody.center;
        let mut joint = DMatrix::zeros(n, inbody.num_generators() + 1 + circumbody.num_generators());
        joint.view_mut((0, 0), (n, inbody.num_generators())).copy_from(&inbody.generators);
        joint.view_mut((0, inbody.num_generators()), (n, 1)).copy_from(&shift);
        joint
            .view_mut((0, inbody.num_generators() + 1), (n, circumbody.num_generators()))
            .copy_from(&circumbody.generators);
        if rank_and_projection(&joint, opts.rank_rel_tol).rank != h_rank.rank {
            return Ok(ContainmentResult::from_bounds(
                f64::INFINITY,
                f64::INFINITY,
                Method::DegenerateRankGap,
                None,
                opts.verdict_deadband,
            ));
        }
        let p = &h_rank.projector;
        let inbody_proj = Ellipsotope::new(inbody.p, p * &inbody.generators, p * &inbody.center)?;
        let circ_proj =
            Ellipsotope::new(circumbody.p, p * &circumbody.generators, p * &circumbody.center)?;
        return containment_radius_with(&inbody_proj, &circ_proj, choice, opts);
    }

    let p = inbody.p;
    let q = circumbody.p;
    match choice {
        MethodChoice::Auto => dispatch_auto(inbody, circumbody, opts),
        MethodChoice::Exact => match (p, q) {
            (Exponent::One, _) => vertex_scan_result(inbody, circumbody, opts),
            (pp, qq) if pp.is_two() && qq.is_two() => ellipsoid_result(inbody, circumbody, opts),
            _ => Err(ContainmentError::NoExactMethod { p, q }),
        },
        MethodChoice::Lr => {
            if !p.is_infinite() {
                return Err(ContainmentError::ExponentRange { method: choice, p, q });
            }
            lr_result(inbody, circumbody, opts, true)
        }
        MethodChoice::Zsr => {
            if !p.is_infinite() || !exponent_in_unit_two(q) {
                return Err(ContainmentError::ExponentRange { method: choice, p, q });
            }
            zsr_result(inbody, circumbody, opts)
        }
        MethodChoice::Sr => {
            if !sr_exponents_ok(p, q) {
                return Err(ContainmentError::ExponentRange { method: choice, p, q });
            }
            if !centers_equal(inbody, circumbody) {
                return Err(ContainmentError::CenterMismatch);
            }
            sr_result(inbody, circumbody, opts)
        }
        MethodChoice::BruteForce => match p {
            Exponent::One => vertex_scan_result(inbody, circumbody, opts),
            Exponent::Infinity => {
                let w = oracles::radius_bruteforce_zonotope_inbody(
                    &inbody.generators,
                    &inbody.center,
                    &circumbody.generators,
                    &circumbody.center,
                    q,
                    &opts.oracle_budget,
                )?;
                Ok(ContainmentResult::from_bounds(
                    w.value,
                    w.value,
                    Method::BruteForce,
                    Some(Witness::MaximizingAlpha { alpha: w.alpha }),
                    opts.verdict_deadband,
                ))
            }
            _ => Err(ContainmentError::ExponentRange { method: choice, p, q }),
        },
    }
}

fn dispatch_auto(
    inbody: &Ellipsotope,
    circumbody: &Ellipsotope,
    opts: &Options,
) -> Result<ContainmentResult, ContainmentError> {
    let p = inbody.p;
    let q = circumbody.p;
    if p.is_one() {
        return vertex_scan_result(inbody, circumbody, opts);
    }
    if p.is_two() && q.is_two() {
        return ellipsoid_result(inbody, circumbody, opts);
    }
    if p.is_infinite() {
        if exponent_in_unit_two(q) {
            // LR and ZSR both apply; run them in parallel and intersect.
            let (lr, zsr) = rayon::join(
                || lr_result(inbody, circumbody, opts, false),
                || zsr_result(inbody, circumbody, opts),
            );
            let lr = lr?;
            let zsr = zsr?;
            return Ok(lr.merged(zsr, Method::LrZsr, opts.verdict_deadband));
        }
        return lr_result(inbody, circumbody, opts, false);
    }
    if sr_exponents_ok(p, q) && centers_equal(inbody, circumbody) {
        return sr_result(inbody, circumbody, opts);
    }
    norm_equivalence_fallback(inbody, circumbody, opts)
}

fn exponent_in_unit_two(q: Exponent) -> bool {
    !q.is_one() && !q.is_infinite() && q.as_f64() <= 2.0
}

fn sr_exponents_ok(p: Exponent, q: Exponent) -> bool {
    !p.is_infinite() && p.as_f64() >= 2.0 && exponent_in_unit_two(q)
}

fn centers_equal(a: &Ellipsotope, b: &Ellipsotope) -> bool {
    let scale = 1.0 + a.center.amax().max(b.center.amax());
    (&a.center - &b.center).amax() <= 1e-12 * scale
}

/// `G' = [G c-d]`: shifts a zonotope containment to the origin-centered
/// problem by appending the center offset as one extra generator.
pub fn center_reduction(g: &DMatrix<f64>, c: &DVector<f64>, d: &DVector<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let m = g.ncols();
    let mut out = DMatrix::zeros(n, m + 1);
    out.view_mut((0, 0), (n, m)).copy_from(g);
    out.view_mut((0, m), (n, 1)).copy_from(&(c - d));
    out
}

/// Exact radius for a symmetric V-polytope inbody (`p = 1`): the maximum of
/// the circumbody norm over the `2m` vertices `+-g_i + c - d`. Ties go to
/// the first column index.
pub fn radius_vpoly_in_ellipsotope(
    g: &DMatrix<f64>,
    c: &DVector<f64>,
    h: &DMatrix<f64>,
    d: &DVector<f64>,
    q: Exponent,
) -> Result<(f64, DVector<f64>), ContainmentError> {
    let solver = MinNormSolver::new(h, q);
    let shift = c - d;
    let mut best = f64::NEG_INFINITY;
    let mut best_alpha = DVector::zeros(g.ncols());
    for j in 0..g.ncols() {
        for sign in [1.0, -1.0] {
            let x = sign * g.column(j) + &shift;
            let value = match solver.eval(&x)? {
                Some(v) => v,
                None => f64::INFINITY,
            };
            if value > best {
                best = value;
                best_alpha = DVector::zeros(g.ncols());
                best_alpha[j] = sign;
            }
        }
    }
    Ok((best, best_alpha))
}

fn vertex_scan_result(
    inbody: &Ellipsotope,
    circumbody: &Ellipsotope,
    opts: &Options,
) -> Result<ContainmentResult, ContainmentError> {
    let (value, alpha) = radius_vpoly_in_ellipsotope(
        &inbody.generators,
        &inbody.center,
        &circumbody.generators,
        &circumbody.center,
        circumbody.p,
    )?;
    Ok(ContainmentResult::from_bounds(
        value,
        value,
        Method::VertexScan,
        Some(Witness::MaximizingAlpha { alpha }),
        opts.verdict_deadband,
    ))
}

fn ellipsoid_result(
    inbody: &Ellipsotope,
    circumbody: &Ellipsotope,
    opts: &Options,
) -> Result<ContainmentResult, ContainmentError> {
    match radius_ellipsoid_in_ellipsoid(
        &inbody.generators,
        &inbody.center,
        &circumbody.generators,
        &circumbody.center,
        opts,
    ) {
        Ok((r, rho, delta)) => Ok(ContainmentResult::from_bounds(
            r,
            r,
            Method::EllipsoidSdp,
            Some(Witness::EllipsoidMultipliers { rho, delta }),
            opts.verdict_deadband,
        )),
        Err(ContainmentError::SolverFailed(_)) => {
            // Fall back to the exact eigenvalue route.
            let pinv = pseudo_inverse(&circumbody.generators, opts.rank_rel_tol);
            let theta = &pinv * &inbody.generators;
            let offset = &pinv * (&inbody.center - &circumbody.center);
            let r = oracles::quadratic_over_ball(&theta, &offset);
            let pad = 1e-9 * r.max(1.0);
            Ok(ContainmentResult::from_bounds(
                (r - pad).max(0.0),
                r + pad,
                Method::EllipsoidEigen,
                None,
                opts.verdict_deadband,
            ))
        }
        Err(e) => Err(e),
    }
}

pub(crate) fn pseudo_inverse(h: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let svd = h.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    svd.pseudo_inverse(rel_tol * sigma_max.max(f64::MIN_POSITIVE))
        .expect("svd computed")
}

fn lr_result(
    inbody: &Ellipsotope,
    circumbody: &Ellipsotope,
    opts: &Options,
    with_certificate: bool,
) -> Result<ContainmentResult, ContainmentError> {
    let q = circumbody.p;
    let g_eff = effective_zonotope_generators(inbody, circumbody);
    let outcome = lr_relaxation(&g_eff, &circumbody.generators, q, opts)?;
    let m = g_eff.ncols() as f64;
    let upper = outcome.value;

    let mut lower = if q.is_one() {
        // gamma_{q*} is infinite; fall back to the sampling oracle.
        let centered_in = Ellipsotope::centered(Exponent::Infinity, g_eff.clone())?;
        let centered_circ =
            Ellipsotope::centered(circumbody.p, circumbody.generators.clone())?;
        oracles::radius_sampling_lower_bound(&centered_in, &centered_circ, &opts.oracle_budget)?
            .value
            .min(upper)
    } else {
        let gamma1 = gaussian_moment(Exponent::One)?;
        let gamma_qs = gaussian_moment(q.conjugate())?;
        upper * gamma1 / (gamma_qs * m.sqrt())
    };

    let mut certified = false;
    let mut dual = None;
    if with_certificate {
        let y = lr_dual(&g_eff, &circumbody.generators, q, opts)?;
        certified = lr_exactness_certificate(&y, opts.exactness_tol);
        if certified {
            lower = upper;
        }
        dual = Some(y);
    }

    Ok(ContainmentResult::from_bounds(
        lower.min(upper),
        upper,
        Method::Lr,
        Some(Witness::Lr { x: outcome.witness, y: dual, certified_exact: certified }),
        opts.verdict_deadband,
    ))
}

/// The inbody generator matrix of the origin-centered equivalent problem:
/// the center offset is appended as an extra generator when present.
fn effective_zonotope_generators(inbody: &Ellipsotope, circumbody: &Ellipsotope) -> DMatrix<f64> {
    if centers_equal(inbody, circumbody) {
        inbody.generators.clone()
    } else {
        center_reduction(&inbody.generators, &inbody.center, &circumbody.center)
    }
}

fn zsr_result(
    inbody: &Ellipsotope,
    circumbody: &Ellipsotope,
    opts: &Options,
) -> Result<ContainmentResult, ContainmentError> {
    let q = circumbody.p;
    let g_eff = effective_zonotope_generators(inbody, circumbody);
    let (value, witness) = zsr_relaxation(&g_eff, &circumbody.generators, q, opts)?;
    let gamma1 = gaussian_moment(Exponent::One)?;
    let gamma_qs = gaussian_moment(q.conjugate())?;
    Ok(ContainmentResult::from_bounds(
        value * gamma1 / gamma_qs,
        value,
        Method::Zsr,
        Some(Witness::DiagonalPair { v: witness.v, w: witness.w }),
        opts.verdict_deadband,
    ))
}

fn sr_result(
    inbody: &Ellipsotope,
    circumbody: &Ellipsotope,
    opts: &Options,
) -> Result<ContainmentResult, ContainmentError> {
    let p = inbody.p;
    let q = circumbody.p;
    let (value, witness) = sr_relaxation(&inbody.generators, &circumbody.generators, p, q, opts)?;
    let gamma_p = gaussian_moment(p)?;
    let gamma_qs = gaussian_moment(q.conjugate())?;
    Ok(ContainmentResult::from_bounds(
        value / (gamma_qs * gamma_p),
        value,
        Method::Sr,
        Some(Witness::DiagonalPair { v: witness.v, w: witness.w }),
        opts.verdict_deadband,
    ))
}

/// Replaces intractable exponents by the nearest tractable pair and widens
/// the certified interval by the norm-equivalence factors
/// `||x||_t <= ||x||_s <= n^(1/s - 1/t) ||x||_t` on each side.
pub fn norm_equivalence_fallback(
    inbody: &Ellipsotope,
    circumbody: &Ellipsotope,
    opts: &Options,
) -> Result<ContainmentResult, ContainmentError> {
    let same_center = centers_equal(inbody, circumbody);
    let m = inbody.num_generators() as f64;
    let l = circumbody.num_generators() as f64;

    let p_candidates = [Exponent::One, Exponent::two(), Exponent::Infinity, inbody.p];
    let q_candidates = [Exponent::One, Exponent::two(), Exponent::Infinity, circumbody.p];

    let mut best: Option<(f64, Exponent, Exponent)> = None;
    for &pc in &p_candidates {
        for &qc in &q_candidates {
            if !directly_tractable(pc, qc, same_center) {
                continue;
            }
            let (in_lo, in_up) = exponent_change_factors(inbody.p, pc, m);
            let (c_lo, c_up) = exponent_change_factors(circumbody.p, qc, l);
            // For the circumbody the factor acts inversely on the radius.
            let lo = in_lo * c_up.recip();
            let up = in_up * c_lo.recip();
            let width = up / lo;
            if best.map_or(true, |(w, _, _)| width < w) {
                best = Some((width, pc, qc));
            }
        }
    }
    let (_, pc, qc) = best.expect("p=inf with any q is always tractable");

    let mapped_in = Ellipsotope::new(pc, inbody.generators.clone(), inbody.center.clone())?;
    let mapped_circ =
        Ellipsotope::new(qc, circumbody.generators.clone(), circumbody.center.clone())?;
    let inner = containment_radius_with(&mapped_in, &mapped_circ, MethodChoice::Auto, opts)?;

    let (in_lo, in_up) = exponent_change_factors(inbody.p, pc, m);
    let (c_lo, c_up) = exponent_change_factors(circumbody.p, qc, l);
    let r_lower = inner.r_lower * in_lo / c_up;
    let r_upper = inner.r_upper * in_up / c_lo;
    Ok(ContainmentResult::from_bounds(
        r_lower,
        r_upper,
        Method::NormEquivalence,
        inner.witness,
        opts.verdict_deadband,
    ))
}

/// Pairs the auto dispatcher resolves without falling back again.
fn directly_tractable(p: Exponent, q: Exponent, same_center: bool) -> bool {
    if p.is_one() || p.is_infinite() {
        return true;
    }
    if p.is_two() && q.is_two() {
        return true;
    }
    same_center && sr_exponents_ok(p, q)
}

/// Multipliers `(lo, up)` with `lo * r' <= r <= up * r'` when the exponent
/// of a unit ball in dimension `dim` changes from `from` to `to`.
fn exponent_change_factors(from: Exponent, to: Exponent, dim: f64) -> (f64, f64) {
    let rf = from.recip_f64();
    let rt = to.recip_f64();
    if (rf - rt).abs() < 1e-15 {
        return (1.0, 1.0);
    }
    if rt > rf {
        // to < from: the smaller ball B_to satisfies B_to <= B_from <= dim^(1/to-1/from) B_to.
        (1.0, dim.powf(rt - rf))
    } else {
        // to > from: B_from <= B_to <= dim^(1/from-1/to) B_from.
        (dim.powf(rt - rf), 1.0)
    }
}
