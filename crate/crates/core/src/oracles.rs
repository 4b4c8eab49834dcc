//! Independent ground-truth computations at desk scale: exhaustive and
//! sampling-based containment radii, the exact quadratic-over-ball
//! maximizer, and `p -> 1` operator norms.
//!
//! These are the oracles the test suite and the fallback bounds lean on;
//! they never claim exactness they lack.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::norms::{self, vector_norm, Exponent, OperatorNormBound};
use crate::sets::{Ellipsotope, MinNormSolver, SetError};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("enumeration over {cols} sign vectors exceeds the budget of {limit} columns")]
    TooManyColumns { cols: usize, limit: usize },
    #[error("oracle requires p in (1, inf], got {0}")]
    BadExponent(Exponent),
    #[error(transparent)]
    Set(#[from] SetError),
}

/// Budgets for the enumeration and sampling oracles. Sampling is driven by
/// a counter-based generator keyed by `seed`, so every run is reproducible.
#[derive(Debug, Clone)]
pub struct OracleBudget {
    pub max_enumeration_columns: usize,
    pub sample_count: usize,
    pub ascent_iterations: usize,
    pub seed: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_enumeration_columns: norms::ENUMERATION_LIMIT,
            sample_count: 200,
            ascent_iterations: 60,
            seed: 0x6f7261_636c,
        }
    }
}

/// A radius value together with the inbody coefficient vector attaining it.
#[derive(Debug, Clone)]
pub struct RadiusWitness {
    pub value: f64,
    pub alpha: DVector<f64>,
}

/// Exact containment radius of `Z(G, c)` in `E_q(H, d)` by enumerating all
/// `2^m` sign vertices in Gray-code order, reusing the running image so each
/// step costs one column update plus one inner norm evaluation. `+inf` when
/// some vertex leaves the affine span of the circumbody.
pub fn radius_bruteforce_zonotope_inbody(
    g: &DMatrix<f64>,
    c: &DVector<f64>,
    h: &DMatrix<f64>,
    d: &DVector<f64>,
    q: Exponent,
    budget: &OracleBudget,
) -> Result<RadiusWitness, OracleError> {
    let m = g.ncols();
    if m > budget.max_enumeration_columns || m >= 63 {
        return Err(OracleError::TooManyColumns { cols: m, limit: budget.max_enumeration_columns });
    }
    let shift = c - d;
    let solver = MinNormSolver::new(h, q);
    let total: u64 = 1u64 << m;
    let chunk: u64 = if m > 12 { 1u64 << (m - 4) } else { total };
    let ranges: Vec<(u64, u64)> = (0..total.div_ceil(chunk))
        .map(|i| (i * chunk, ((i + 1) * chunk).min(total)))
        .collect();

    // Each chunk walks its own Gray-code segment; the merge keys on
    // (value, lowest enumeration index) so the result is independent of
    // scheduling.
    let best = ranges
        .par_iter()
        .map(|&(start, end)| {
            let mut signs = signs_of_gray(start, m);
            let mut image = g * &signs + &shift;
            let mut best_val = f64::NEG_INFINITY;
            let mut best_k = start;
            for k in start..end {
                if k > start {
                    let gray_prev = (k - 1) ^ ((k - 1) >> 1);
                    let gray = k ^ (k >> 1);
                    let flipped = (gray ^ gray_prev).trailing_zeros() as usize;
                    let old = signs[flipped];
                    signs[flipped] = -old;
                    image.axpy(-2.0 * old, &g.column(flipped).clone_owned(), 1.0);
                }
                let val = match solver.eval(&image) {
                    Ok(Some(v)) => v,
                    Ok(None) => f64::INFINITY,
                    Err(_) => f64::NAN,
                };
                if val > best_val {
                    best_val = val;
                    best_k = k;
                }
            }
            (best_val, best_k)
        })
        .reduce(
            || (f64::NEG_INFINITY, u64::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );

    Ok(RadiusWitness { value: best.0, alpha: signs_of_gray(best.1, m) })
}

fn signs_of_gray(k: u64, m: usize) -> DVector<f64> {
    let gray = k ^ (k >> 1);
    DVector::from_fn(m, |j, _| if gray >> j & 1 == 1 { -1.0 } else { 1.0 })
}

/// Sampling plus hill-climbing lower bound on the containment radius for
/// arbitrary inbody exponents; every evaluated point certifies the bound.
pub fn radius_sampling_lower_bound(
    inbody: &Ellipsotope,
    circumbody: &Ellipsotope,
    budget: &OracleBudget,
) -> Result<RadiusWitness, OracleError> {
    let m = inbody.num_generators();
    let solver = MinNormSolver::new(&circumbody.generators, circumbody.p);
    let shift = &inbody.center - &circumbody.center;
    let eval = |alpha: &DVector<f64>| -> f64 {
        let x = &inbody.generators * alpha + &shift;
        match solver.eval(&x) {
            Ok(Some(v)) => v,
            Ok(None) => f64::INFINITY,
            Err(_) => f64::NEG_INFINITY,
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut starts: Vec<DVector<f64>> = Vec::new();
    for j in 0..m {
        let mut e = DVector::zeros(m);
        e[j] = 1.0;
        starts.push(e.clone());
        starts.push(-e);
    }
    for _ in 0..budget.sample_count {
        let v = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0f64));
        let norm = vector_norm(v.as_slice(), inbody.p);
        if norm > 1e-12 {
            starts.push(v / norm);
        }
    }

    let mut best = RadiusWitness { value: f64::NEG_INFINITY, alpha: DVector::zeros(m) };
    for start in starts {
        let (val, alpha) = if inbody.p.is_infinite() {
            ascend_signs(&eval, start.map(f64::signum), budget.ascent_iterations)
        } else {
            ascend_sphere(&eval, start, inbody.p, budget.ascent_iterations, &mut rng)
        };
        if val > best.value {
            best = RadiusWitness { value: val, alpha };
        }
        if best.value.is_infinite() {
            break;
        }
    }
    Ok(best)
}

fn ascend_signs<F: Fn(&DVector<f64>) -> f64>(
    eval: &F,
    mut signs: DVector<f64>,
    iterations: usize,
) -> (f64, DVector<f64>) {
    for v in signs.iter_mut() {
        if *v == 0.0 {
            *v = 1.0;
        }
    }
    let mut best = eval(&signs);
    for _ in 0..iterations {
        let mut improved = false;
        for j in 0..signs.len() {
            signs[j] = -signs[j];
            let val = eval(&signs);
            if val > best {
                best = val;
                improved = true;
            } else {
                signs[j] = -signs[j];
            }
        }
        if !improved {
            break;
        }
    }
    (best, signs)
}

fn ascend_sphere<F: Fn(&DVector<f64>) -> f64>(
    eval: &F,
    start: DVector<f64>,
    p: Exponent,
    iterations: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, DVector<f64>) {
    let mut alpha = start;
    let norm = vector_norm(alpha.as_slice(), p);
    if norm > 1e-12 {
        alpha /= norm;
    }
    let mut best = eval(&alpha);
    let mut step = 0.5;
    for _ in 0..iterations {
        let noise = DVector::from_fn(alpha.len(), |_, _| rng.random_range(-1.0..1.0f64));
        let mut candidate = &alpha + step * noise;
        let norm = vector_norm(candidate.as_slice(), p);
        if norm < 1e-12 {
            continue;
        }
        candidate /= norm;
        let val = eval(&candidate);
        if val > best {
            best = val;
            alpha = candidate;
        } else {
            step *= 0.8;
        }
    }
    (best, alpha)
}

/// Exact `max ||T a + t||_2 over ||a||_2 <= 1` (trust-region subproblem for
/// a convex quadratic) by eigen-decomposition of `T^T T` plus a secular
/// equation root find on `(lambda_max, lambda_max + ||b||]`.
pub fn quadratic_over_ball(theta: &DMatrix<f64>, offset: &DVector<f64>) -> f64 {
    let m = theta.ncols();
    if m == 0 {
        return offset.norm();
    }
    let a = theta.transpose() * theta;
    let eig = a.symmetric_eigen();
    let lambda = &eig.eigenvalues;
    let b_raw = theta.transpose() * offset;
    let b = eig.eigenvectors.transpose() * &b_raw;
    let c0 = offset.norm_squared();
    let lam_max = lambda.max();

    let f_of = |alpha_eig: &DVector<f64>| -> f64 {
        let mut f = c0;
        for i in 0..m {
            f += lambda[i] * alpha_eig[i] * alpha_eig[i] + 2.0 * b[i] * alpha_eig[i];
        }
        f
    };

    let norm_sq_at = |nu: f64| -> f64 {
        (0..m)
            .map(|i| {
                let den = nu - lambda[i];
                if den.abs() < 1e-300 {
                    f64::INFINITY
                } else {
                    (b[i] / den).powi(2)
                }
            })
            .sum()
    };

    let top_tol = 1e-12 * lam_max.abs().max(1.0);
    let b_top_energy: f64 = (0..m)
        .filter(|&i| lambda[i] >= lam_max - top_tol)
        .map(|i| b[i] * b[i])
        .sum();

    let alpha_eig = if b.norm() <= 1e-14 * (1.0 + offset.norm()) {
        // Pure quadratic: the top eigenvector.
        let idx = (0..m).max_by(|&i, &j| lambda[i].total_cmp(&lambda[j])).unwrap();
        let mut e = DVector::zeros(m);
        e[idx] = 1.0;
        e
    } else if b_top_energy > 1e-24 {
        // Easy case: the secular equation has a root right of lambda_max.
        let mut lo = lam_max + 1e-300;
        let mut hi = lam_max + b.norm() + 1.0;
        while norm_sq_at(hi) > 1.0 {
            hi = lam_max + 2.0 * (hi - lam_max);
        }
        // norm_sq_at is decreasing on (lam_max, inf): bisect.
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lam_max || norm_sq_at(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.abs().max(1.0) {
                break;
            }
        }
        let nu = hi;
        DVector::from_fn(m, |i, _| b[i] / (nu - lambda[i]))
    } else {
        // Hard case: b has no component on the top eigenspace.
        let mut alpha = DVector::from_fn(m, |i, _| {
            if lambda[i] >= lam_max - top_tol {
                0.0
            } else {
                b[i] / (lam_max - lambda[i])
            }
        });
        let deficit = 1.0 - alpha.norm_squared();
        if deficit > 0.0 {
            let idx = (0..m).find(|&i| lambda[i] >= lam_max - top_tol).unwrap();
            alpha[idx] = deficit.sqrt();
        }
        alpha
    };

    // The maximum of a convex function over the ball sits on the sphere.
    let norm = alpha_eig.norm();
    let alpha_eig = if norm > 1.0 { alpha_eig / norm } else { alpha_eig };
    f_of(&alpha_eig).max(c0).max(0.0).sqrt()
}

/// Operator `p -> 1` norm: exact sign enumeration for `p = inf`, multi-start
/// ascent lower bound for finite `p` in `(1, inf)`.
pub fn opnorm_p_to_1_oracle(
    a: &DMatrix<f64>,
    p: Exponent,
    budget: &OracleBudget,
) -> Result<OperatorNormBound, OracleError> {
    if p.is_one() {
        return Err(OracleError::BadExponent(p));
    }
    if p.is_infinite() {
        if a.ncols() > budget.max_enumeration_columns {
            return Err(OracleError::TooManyColumns {
                cols: a.ncols(),
                limit: budget.max_enumeration_columns,
            });
        }
        let (value, witness) =
            norms::sign_enumeration_max(a, |v| v.iter().map(|x| x.abs()).sum());
        return Ok(OperatorNormBound { value, witness, exact: true });
    }
    Ok(norms::operator_norm_oracle(a, p, Exponent::One, budget.sample_count.max(1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows.len(), rows[0].len(), &rows.concat())
    }

    #[test]
    fn bruteforce_examples() {
        let budget = OracleBudget::default();
        let id = DMatrix::<f64>::identity(2, 2);
        let z = DVector::zeros(2);

        let r = radius_bruteforce_zonotope_inbody(
            &id,
            &z,
            &(2.0 * DMatrix::<f64>::identity(2, 2)),
            &z,
            Exponent::Infinity,
            &budget,
        )
        .unwrap();
        assert_relative_eq!(r.value, 0.5, epsilon = 1e-9);

        let r =
            radius_bruteforce_zonotope_inbody(&id, &z, &id, &z, Exponent::two(), &budget).unwrap();
        assert_relative_eq!(r.value, 2.0f64.sqrt(), epsilon = 1e-9);
        assert_eq!(r.alpha.len(), 2);
        assert_relative_eq!(r.alpha[0].abs(), 1.0);
    }

    #[test]
    fn bruteforce_enforces_budget() {
        let g = DMatrix::<f64>::repeat(2, 21, 1.0);
        let z = DVector::zeros(2);
        let err = radius_bruteforce_zonotope_inbody(
            &g,
            &z,
            &DMatrix::identity(2, 2),
            &z,
            Exponent::two(),
            &OracleBudget::default(),
        )
        .unwrap_err();
        assert!(matches!(err, OracleError::TooManyColumns { .. }));
    }

    #[test]
    fn bruteforce_invariant_under_symmetries() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let budget = OracleBudget::default();
        for _ in 0..10 {
            let g = DMatrix::from_fn(2, 5, |_, _| rng.random_range(-1.0..1.0f64));
            let h = DMatrix::from_fn(2, 3, |_, _| rng.random_range(-1.0..1.0f64))
                + DMatrix::identity(2, 3);
            let c = DVector::from_fn(2, |_, _| rng.random_range(-0.3..0.3f64));
            let z = DVector::zeros(2);
            let base =
                radius_bruteforce_zonotope_inbody(&g, &c, &h, &z, Exponent::two(), &budget)
                    .unwrap();

            let mut permuted = g.clone();
            permuted.swap_columns(0, 3);
            let r =
                radius_bruteforce_zonotope_inbody(&permuted, &c, &h, &z, Exponent::two(), &budget)
                    .unwrap();
            assert_relative_eq!(base.value, r.value, epsilon = 1e-10);

            let mut flipped = g.clone();
            flipped.column_mut(1).neg_mut();
            let r =
                radius_bruteforce_zonotope_inbody(&flipped, &c, &h, &z, Exponent::two(), &budget)
                    .unwrap();
            assert_relative_eq!(base.value, r.value, epsilon = 1e-10);
        }
    }

    #[test]
    fn gray_walk_matches_naive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let g = DMatrix::from_fn(3, 6, |_, _| rng.random_range(-1.0..1.0f64));
        let h = DMatrix::<f64>::identity(3, 3);
        let z = DVector::zeros(3);
        let fast = radius_bruteforce_zonotope_inbody(
            &g,
            &z,
            &h,
            &z,
            Exponent::two(),
            &OracleBudget::default(),
        )
        .unwrap();
        let mut naive: f64 = 0.0;
        for k in 0..64u32 {
            let signs =
                DVector::from_fn(6, |j, _| if k >> j & 1 == 1 { -1.0 } else { 1.0 });
            naive = naive.max((&g * signs).norm());
        }
        assert_relative_eq!(fast.value, naive, epsilon = 1e-12);
    }

    #[test]
    fn sampling_lower_bound_identical_and_scaled_bodies() {
        let budget = OracleBudget::default();
        let g = mat(&[&[1.0, 0.3], &[0.0, 1.0]]);
        let e = Ellipsotope::centered(Exponent::Infinity, g.clone()).unwrap();
        let r = radius_sampling_lower_bound(&e, &e, &budget).unwrap();
        assert!(r.value >= 1.0 - 1e-6);
        assert!(r.value <= 1.0 + 1e-6);

        let doubled = Ellipsotope::centered(Exponent::Infinity, 2.0 * g).unwrap();
        let r = radius_sampling_lower_bound(&doubled, &e, &budget).unwrap();
        assert!(r.value >= 2.0 - 1e-4);
        assert!(r.value <= 2.0 + 1e-6);
    }

    #[test]
    fn sampling_lower_bound_ellipsoid_inbody() {
        let budget = OracleBudget::default();
        let e = Ellipsotope::centered(Exponent::two(), mat(&[&[2.0, 0.0], &[0.0, 1.0]])).unwrap();
        let ball = Ellipsotope::centered(Exponent::two(), DMatrix::identity(2, 2)).unwrap();
        let r = radius_sampling_lower_bound(&e, &ball, &budget).unwrap();
        assert!(r.value >= 2.0 - 1e-4);
        assert!(r.value <= 2.0 + 1e-9);
    }

    #[test]
    fn quadratic_over_ball_examples() {
        assert_relative_eq!(
            quadratic_over_ball(&DMatrix::identity(3, 3), &DVector::zeros(3)),
            1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            quadratic_over_ball(
                &DMatrix::zeros(2, 2),
                &DVector::from_column_slice(&[3.0, 4.0])
            ),
            5.0,
            epsilon = 1e-12
        );
        let theta = mat(&[&[2.0, 0.0], &[0.0, 1.0]]);
        let t = DVector::from_column_slice(&[0.5, 0.0]);
        assert_relative_eq!(quadratic_over_ball(&theta, &t), 2.5, epsilon = 1e-9);
    }

    #[test]
    fn quadratic_over_ball_matches_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let theta = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-2.0..2.0f64));
            let t = DVector::from_fn(2, |_, _| rng.random_range(-2.0..2.0f64));
            let exact = quadratic_over_ball(&theta, &t);
            let mut grid: f64 = t.norm();
            let steps = 2000;
            for k in 0..steps {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / steps as f64;
                let alpha = DVector::from_column_slice(&[phi.cos(), phi.sin()]);
                grid = grid.max((&theta * alpha + &t).norm());
            }
            assert!(exact >= grid - 1e-9);
            assert!(exact <= grid + 1e-5);
        }
    }

    #[test]
    fn opnorm_oracle_examples() {
        let budget = OracleBudget::default();
        let r = opnorm_p_to_1_oracle(&DMatrix::identity(2, 2), Exponent::Infinity, &budget)
            .unwrap();
        assert!(r.exact);
        assert_relative_eq!(r.value, 2.0);

        let h = mat(&[&[1.0, 1.0], &[1.0, -1.0]]);
        let r = opnorm_p_to_1_oracle(&h, Exponent::Infinity, &budget).unwrap();
        assert!(r.exact);
        assert_relative_eq!(r.value, 2.0);

        let ones = DMatrix::<f64>::repeat(1, 5, 1.0);
        let r = opnorm_p_to_1_oracle(&ones, Exponent::two(), &budget).unwrap();
        assert!(!r.exact);
        assert_relative_eq!(r.value, 5.0f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn opnorm_inf_matches_lpq_over_sign_patterns() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let budget = OracleBudget::default();
        for _ in 0..10 {
            let a = DMatrix::from_fn(3, 4, |_, _| rng.random_range(-2.0..2.0f64));
            let oracle = opnorm_p_to_1_oracle(&a, Exponent::Infinity, &budget).unwrap();
            let mut naive: f64 = 0.0;
            for k in 0..16u32 {
                let signs =
                    DVector::from_fn(4, |j, _| if k >> j & 1 == 1 { -1.0 } else { 1.0 });
                naive = naive.max(vector_norm((&a * signs).as_slice(), Exponent::One));
            }
            assert_relative_eq!(oracle.value, naive, epsilon = 1e-12);
        }
    }
}
