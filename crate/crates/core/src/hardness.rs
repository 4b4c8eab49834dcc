//! Reduction from operator `p -> 1` norm computation to ellipsotope-in-
//! zonotope containment queries.
//!
//! The construction pairs a fixed `(n+1)`-dimensional circumbody zonotope
//! `Z(H/2, n e_{n+1})` — whose lower slices are scaled cross-polytopes —
//! with the block inbody `E_p(G_{A/xi}, n e_{n+1})`. The scalar function
//! `sigma(xi) = r(E_p(G_{A/xi}), Z(H/2))` is continuous, passes through 1
//! exactly at `xi = ||A||_{p->1}`, and a bisection over `xi` recovers that
//! norm to any relative accuracy. This doubles as a self-test of the
//! containment stack and as a demonstration generator.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::containment::{self, ContainmentError, MethodChoice, Options};
use crate::norms::{lpq_norm, Exponent};
use crate::oracles::{self, OracleBudget, OracleError};
use crate::sets::{Ellipsotope, SetError};

#[derive(Debug, Error)]
pub enum HardnessError {
    #[error("construction needs n >= 2 rows, got {0}")]
    BadDimension(usize),
    #[error("exponent must lie in (1, inf], got {0}")]
    BadExponent(Exponent),
    #[error("zero matrix has no meaningful p -> 1 norm reduction")]
    ZeroMatrix,
    #[error("L/rho residual {residual:e} exceeds 1e-10")]
    ResidualTooLarge { residual: f64 },
    #[error("bisection did not settle within {0} iterations")]
    NonConvergence(usize),
    #[error(transparent)]
    Containment(#[from] ContainmentError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Set(#[from] SetError),
}

/// Constants of the construction: `rho = n^(-1/(p-1))` and
/// `L = (n - rho) / (1 - rho^p)^(1/p)` for finite `p`; `(n-1, 1)` for
/// `p = inf`. Both defining equations are residual-checked to 1e-10.
pub fn compute_l_rho(n: usize, p: Exponent) -> Result<(f64, f64), HardnessError> {
    if n < 2 {
        return Err(HardnessError::BadDimension(n));
    }
    if p.is_one() {
        return Err(HardnessError::BadExponent(p));
    }
    if p.is_infinite() {
        return Ok((n as f64 - 1.0, 1.0));
    }
    let pf = p.as_f64();
    let nf = n as f64;
    let rho = nf.powf(-1.0 / (pf - 1.0));
    let l = (nf - rho) / (1.0 - rho.powf(pf)).powf(1.0 / pf);

    let ratio = (nf - rho) / l;
    let res1 = (1.0 - rho.powf(pf) - ratio.powf(pf)).abs();
    let res2 =
        (l - (1.0 - ratio.powf(pf)).powf(1.0 / pf - 1.0) * ratio.powf(pf - 1.0)).abs();
    let residual = res1.max(res2);
    if residual > 1e-10 {
        return Err(HardnessError::ResidualTooLarge { residual });
    }
    Ok((l, rho))
}

/// The fixed circumbody data and inbody template for one matrix `A`.
#[derive(Debug, Clone)]
pub struct HardnessInstance {
    pub n: usize,
    pub p: Exponent,
    pub a: DMatrix<f64>,
    pub l_const: f64,
    pub rho_star: f64,
    /// `[I -I; 1' 1']`, shape `(n+1) x 2n`.
    pub h: DMatrix<f64>,
    /// `Z(H/2, n e_{n+1})`.
    pub circumbody: Ellipsotope,
}

impl HardnessInstance {
    /// Inbody `E_p(G_{A/xi}, n e_{n+1})` at scale `xi`.
    pub fn inbody(&self, xi: f64) -> Ellipsotope {
        let g = block_generator(&(&self.a / xi), self.l_const);
        Ellipsotope::new(self.p, g, self.center()).expect("template dimensions are valid")
    }

    pub fn center(&self) -> DVector<f64> {
        let mut c = DVector::zeros(self.n + 1);
        c[self.n] = self.n as f64;
        c
    }

    /// Inbody generator column count (`m + 1`).
    pub fn inbody_generators(&self) -> usize {
        self.a.ncols() + 1
    }
}

/// `G_A = [A 0; 0 -L]`.
fn block_generator(a: &DMatrix<f64>, l_const: f64) -> DMatrix<f64> {
    let (n, m) = a.shape();
    let mut g = DMatrix::zeros(n + 1, m + 1);
    g.view_mut((0, 0), (n, m)).copy_from(a);
    g[(n, m)] = -l_const;
    g
}

pub fn build_instance(a: DMatrix<f64>, p: Exponent) -> Result<HardnessInstance, HardnessError> {
    let n = a.nrows();
    if n < 2 {
        return Err(HardnessError::BadDimension(n));
    }
    let (l_const, rho_star) = compute_l_rho(n, p)?;
    let mut h = DMatrix::zeros(n + 1, 2 * n);
    for i in 0..n {
        h[(i, i)] = 1.0;
        h[(i, n + i)] = -1.0;
        h[(n, i)] = 1.0;
        h[(n, n + i)] = 1.0;
    }
    let mut center = DVector::zeros(n + 1);
    center[n] = n as f64;
    let circumbody = Ellipsotope::zonotope(0.5 * &h, center)?;
    Ok(HardnessInstance { n, p, a, l_const, rho_star, h, circumbody })
}

/// Inner containment method driving a `sigma` evaluation.
#[derive(Debug, Clone)]
pub enum InnerMethod {
    /// Exact vertex enumeration; needs `p = inf` and few generators.
    ExactOracle(OracleBudget),
    /// Linear relaxation upper bound; exact only when the dual certificate
    /// fires.
    LrCertified,
    /// Oracle for small zonotope inbodies, LR otherwise.
    Default,
}

/// One evaluation of `sigma`; `exact` distinguishes certified values from
/// upper bounds.
#[derive(Debug, Clone, Copy)]
pub struct SigmaEval {
    pub value: f64,
    pub exact: bool,
}

/// `sigma(xi) = r(E_p(G_{A/xi}), Z(H/2))`, evaluated by the chosen inner
/// containment method.
pub fn sigma(
    instance: &HardnessInstance,
    xi: f64,
    inner: &InnerMethod,
) -> Result<SigmaEval, HardnessError> {
    assert!(xi > 0.0, "sigma is only defined for positive scales");
    let inbody = instance.inbody(xi);
    match inner {
        InnerMethod::ExactOracle(budget) => {
            let w = oracles::radius_bruteforce_zonotope_inbody(
                &inbody.generators,
                &inbody.center,
                &instance.circumbody.generators,
                &instance.circumbody.center,
                Exponent::Infinity,
                budget,
            )?;
            Ok(SigmaEval { value: w.value, exact: true })
        }
        InnerMethod::LrCertified => {
            let result =
                containment::containment_radius(&inbody, &instance.circumbody, MethodChoice::Lr)?;
            Ok(SigmaEval {
                value: result.r_upper,
                exact: matches!(
                    result.witness,
                    Some(containment::Witness::Lr { certified_exact: true, .. })
                ),
            })
        }
        InnerMethod::Default => {
            if instance.p.is_infinite() && instance.inbody_generators() <= 12 {
                sigma(instance, xi, &InnerMethod::ExactOracle(OracleBudget::default()))
            } else if instance.p.is_infinite() {
                sigma(instance, xi, &InnerMethod::LrCertified)
            } else {
                let result = containment::containment_radius_with(
                    &inbody,
                    &instance.circumbody,
                    MethodChoice::Auto,
                    &Options::default(),
                )?;
                Ok(SigmaEval { value: result.r_upper, exact: false })
            }
        }
    }
}

/// Bisection parameters of the reduction, derived from the target relative
/// accuracy `delta` and the cheap norms of `A`.
#[derive(Debug, Clone)]
pub struct BisectionConfig {
    pub delta: f64,
    /// Interval floor `(delta/2) ||A||_{1->1}`.
    pub mu: f64,
    /// Accuracy demanded of the inner approximation.
    pub epsilon: f64,
    /// Initial upper end `m^((p-1)/p) ||A||_{1->1}`.
    pub xi_hat: f64,
    pub max_iterations: usize,
}

impl BisectionConfig {
    pub fn for_matrix(a: &DMatrix<f64>, p: Exponent, delta: f64) -> Result<Self, HardnessError> {
        if p.is_one() {
            return Err(HardnessError::BadExponent(p));
        }
        let norm_11 = lpq_norm(a, Exponent::One, Exponent::Infinity, false);
        if norm_11 == 0.0 {
            return Err(HardnessError::ZeroMatrix);
        }
        let norm_1inf = a.amax();
        let m = a.ncols() as f64;
        let xi_hat = m.powf(1.0 - p.recip_f64()) * norm_11;
        let mu = 0.5 * delta * norm_11;
        let epsilon = delta * norm_11 * norm_1inf / (2.0 * xi_hat * xi_hat);
        let max_iterations = (xi_hat / mu).log2().ceil() as usize + 1;
        Ok(BisectionConfig { delta, mu, epsilon, xi_hat, max_iterations })
    }
}

#[derive(Debug, Clone)]
pub struct BisectionRecord {
    pub iteration: usize,
    pub xi: f64,
    pub sigma: f64,
    pub interval: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct BisectionOutcome {
    pub xi_star: f64,
    /// False when the run ended on the `1 < approx < 1 + eps` exit, where
    /// the inner approximation vouches for no certificate.
    pub certified: bool,
    pub trace: Vec<BisectionRecord>,
}

/// Approximates `||A||_{p->1}` by bisecting `sigma - 1` over the initial
/// interval `(0, xi_hat)`. With a `(1+eps)`-accurate inner upper bound the
/// result satisfies `|xi_star - ||A||_{p->1}| <= delta ||A||_{p->1}`.
pub fn p_to_1_norm_via_bisection(
    a: &DMatrix<f64>,
    p: Exponent,
    config: &BisectionConfig,
    inner: &InnerMethod,
) -> Result<BisectionOutcome, HardnessError> {
    if p.is_one() {
        return Err(HardnessError::BadExponent(p));
    }
    let instance = build_instance(a.clone(), p)?;
    let (mut lo, mut hi) = (0.0f64, config.xi_hat);
    let mut trace = Vec::new();
    for iteration in 0..=config.max_iterations {
        if hi - lo <= 2.0 * config.mu {
            return Ok(BisectionOutcome { xi_star: 0.5 * (lo + hi), certified: true, trace });
        }
        let xi = 0.5 * (lo + hi);
        let eval = sigma(&instance, xi, inner)?;
        trace.push(BisectionRecord { iteration, xi, sigma: eval.value, interval: (lo, hi) });
        if eval.value <= 1.0 {
            hi = xi;
        } else if eval.value >= 1.0 + config.epsilon {
            lo = xi;
        } else {
            return Ok(BisectionOutcome { xi_star: xi, certified: false, trace });
        }
    }
    Err(HardnessError::NonConvergence(config.max_iterations))
}
