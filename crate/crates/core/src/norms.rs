//! Vector p-norms, entrywise `L_{p,q}` matrix norms, operator `p -> q` norm
//! oracles, and the Gaussian moment constants entering every approximation
//! ratio.
//!
//! Exponents are kept symbolic: `p = 1`, `p = inf` and rational finite values
//! are distinct variants, so conjugation and the exponent arithmetic of the
//! semidefinite relaxations (`p/(p-2)` and friends) stay exact instead of
//! degrading into float infinities.

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use num_traits::{FromPrimitive, ToPrimitive};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Columns above which exact sign enumeration for `p = inf` is refused.
pub const ENUMERATION_LIMIT: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum NormError {
    #[error("exponent must lie in [1, inf], got {0}")]
    InvalidExponent(f64),
    #[error("oracle infeasible: exact enumeration needs <= {limit} columns, got {cols}")]
    EnumerationLimit { cols: usize, limit: usize },
    #[error("oracle infeasible: no exact method for operator {p} -> {q} norm")]
    ExactUnavailable { p: Exponent, q: Exponent },
    #[error("gaussian moment is undefined for k = inf")]
    InfiniteMoment,
}

/// An extended-real exponent in `[1, inf]` with `inf` represented exactly.
///
/// Finite values are stored as rationals so that conjugation is an exact
/// involution: `conjugate(conjugate(p)) == p` holds bit-for-bit, including
/// the endpoint pair `(1, inf)` and the fixed point `2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exponent {
    One,
    /// A rational value strictly between 1 and infinity.
    Finite(Ratio<i128>),
    Infinity,
}

impl Exponent {
    pub const fn infinity() -> Self {
        Exponent::Infinity
    }

    pub const fn one() -> Self {
        Exponent::One
    }

    pub fn two() -> Self {
        Exponent::Finite(Ratio::new(2, 1))
    }

    /// Builds an exponent from a float, snapping to a small-denominator
    /// rational when one reproduces the value to 1e-12 relative accuracy
    /// (so `1.3333333333333333` becomes `4/3`).
    pub fn new(value: f64) -> Result<Self, NormError> {
        if value.is_nan() || value < 1.0 {
            return Err(NormError::InvalidExponent(value));
        }
        if value == 1.0 {
            return Ok(Exponent::One);
        }
        if value.is_infinite() {
            return Ok(Exponent::Infinity);
        }
        for den in 1..=64i128 {
            let num = (value * den as f64).round() as i128;
            let candidate = num as f64 / den as f64;
            if num > den && (candidate - value).abs() <= 1e-12 * value {
                return Ok(Exponent::Finite(Ratio::new(num, den)));
            }
        }
        let ratio = Ratio::<i128>::from_f64(value).ok_or(NormError::InvalidExponent(value))?;
        Ok(Exponent::Finite(ratio))
    }

    pub fn from_ratio(num: i128, den: i128) -> Result<Self, NormError> {
        let r = Ratio::new(num, den);
        if r < Ratio::new(1, 1) {
            return Err(NormError::InvalidExponent(r.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(if r == Ratio::new(1, 1) {
            Exponent::One
        } else {
            Exponent::Finite(r)
        })
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Exponent::One => 1.0,
            Exponent::Finite(r) => r.to_f64().unwrap_or(f64::NAN),
            Exponent::Infinity => f64::INFINITY,
        }
    }

    /// `1/p`, with `1/inf = 0`.
    pub fn recip_f64(&self) -> f64 {
        match self {
            Exponent::One => 1.0,
            Exponent::Finite(r) => r.recip().to_f64().unwrap_or(f64::NAN),
            Exponent::Infinity => 0.0,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Exponent::One)
    }

    pub fn is_two(&self) -> bool {
        matches!(self, Exponent::Finite(r) if *r == Ratio::new(2, 1))
    }

    /// The Hölder conjugate `p*` with `1/p + 1/p* = 1`.
    pub fn conjugate(&self) -> Self {
        match self {
            Exponent::One => Exponent::Infinity,
            Exponent::Infinity => Exponent::One,
            Exponent::Finite(r) => {
                let one = Ratio::new(1, 1);
                Exponent::Finite(*r / (*r - one))
            }
        }
    }

    /// `p / (p - 2)` with the convention `2 -> inf`; the exponent appearing
    /// in the semidefinite relaxation objectives. Only valid for `p >= 2`.
    pub fn over_self_minus_two(&self) -> Result<Self, NormError> {
        match self {
            Exponent::Infinity => Ok(Exponent::One),
            Exponent::One => Err(NormError::InvalidExponent(1.0)),
            Exponent::Finite(r) => {
                let two = Ratio::new(2, 1);
                if *r == two {
                    Ok(Exponent::Infinity)
                } else if *r < two {
                    Err(NormError::InvalidExponent(r.to_f64().unwrap_or(f64::NAN)))
                } else {
                    Ok(Exponent::Finite(*r / (*r - two)))
                }
            }
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::One => write!(f, "1"),
            Exponent::Infinity => write!(f, "inf"),
            Exponent::Finite(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}", self.as_f64())
                }
            }
        }
    }
}

/// The matrix norm selected on the CLI surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatrixNormKind {
    Lpq { p: Exponent, q: Exponent },
    LpqTransposed { p: Exponent, q: Exponent },
    Operator { p: Exponent, q: Exponent },
}

/// Hölder conjugate of `p`.
pub fn holder_conjugate(p: Exponent) -> Exponent {
    p.conjugate()
}

/// The vector p-norm; `p = inf` returns `max |v_i|`.
pub fn vector_norm(v: &[f64], p: Exponent) -> f64 {
    match p {
        Exponent::One => v.iter().map(|x| x.abs()).sum(),
        Exponent::Infinity => v.iter().fold(0.0, |acc, x| acc.max(x.abs())),
        Exponent::Finite(_) => {
            let pf = p.as_f64();
            if pf == 2.0 {
                return v.iter().map(|x| x * x).sum::<f64>().sqrt();
            }
            let scale = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            if scale == 0.0 {
                return 0.0;
            }
            let sum: f64 = v.iter().map(|x| (x.abs() / scale).powf(pf)).sum();
            scale * sum.powf(1.0 / pf)
        }
    }
}

/// Entrywise `L_{p,q}` norm: column p-norms aggregated by the q-norm.
/// With `transposed` set, the same applied to the transpose.
pub fn lpq_norm(a: &DMatrix<f64>, p: Exponent, q: Exponent, transposed: bool) -> f64 {
    if transposed {
        return lpq_norm(&a.transpose(), p, q, false);
    }
    let col_norms: Vec<f64> = a
        .column_iter()
        .map(|c| vector_norm(c.as_slice(), p))
        .collect();
    vector_norm(&col_norms, q)
}

/// A certified lower bound on an operator norm, exact where flagged.
#[derive(Debug, Clone)]
pub struct OperatorNormBound {
    pub value: f64,
    /// A maximizing (or best found) unit vector of the p-ball.
    pub witness: DVector<f64>,
    /// True when `value` is the exact operator norm, not just a lower bound.
    pub exact: bool,
}

/// Certified lower bound on `sup_{||v||_p <= 1} ||A v||_q` by multi-start
/// ascent, upgraded to the exact value where one is computable:
/// `p = 1` (column scan), `p = inf` with at most [`ENUMERATION_LIMIT`]
/// columns (sign enumeration), `p = 2, q = 2` (largest singular value) and
/// `p = 2, q = inf` (row scan).
pub fn operator_norm_oracle(
    a: &DMatrix<f64>,
    p: Exponent,
    q: Exponent,
    budget: usize,
) -> OperatorNormBound {
    assert!(budget >= 1, "ascent budget must be at least 1");
    if let Some(exact) = exact_operator_norm(a, p, q) {
        return exact;
    }
    ascent_lower_bound(a, p, q, budget)
}

/// Exact operator norm where a polynomial (or small-enumeration) method
/// exists; errors otherwise instead of silently degrading to a bound.
pub fn operator_norm_exact(
    a: &DMatrix<f64>,
    p: Exponent,
    q: Exponent,
) -> Result<OperatorNormBound, NormError> {
    if p.is_infinite() && a.ncols() > ENUMERATION_LIMIT {
        return Err(NormError::EnumerationLimit {
            cols: a.ncols(),
            limit: ENUMERATION_LIMIT,
        });
    }
    exact_operator_norm(a, p, q).ok_or(NormError::ExactUnavailable { p, q })
}

fn exact_operator_norm(a: &DMatrix<f64>, p: Exponent, q: Exponent) -> Option<OperatorNormBound> {
    match (p, q) {
        // sup over the cross-polytope is attained at a vertex +-e_j.
        (Exponent::One, _) => {
            let (mut best, mut best_j) = (0.0, 0);
            for (j, c) in a.column_iter().enumerate() {
                let n = vector_norm(c.as_slice(), q);
                if n > best {
                    best = n;
                    best_j = j;
                }
            }
            let mut w = DVector::zeros(a.ncols());
            if a.ncols() > 0 {
                w[best_j] = 1.0;
            }
            Some(OperatorNormBound { value: best, witness: w, exact: true })
        }
        (Exponent::Infinity, _) if a.ncols() <= ENUMERATION_LIMIT => {
            let (value, witness) = sign_enumeration_max(a, |v| vector_norm(v.as_slice(), q));
            Some(OperatorNormBound { value, witness, exact: true })
        }
        (pp, qq) if pp.is_two() && qq.is_two() => {
            let svd = a.clone().svd(true, true);
            let value = svd.singular_values.max();
            let idx = svd
                .singular_values
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.total_cmp(y.1))
                .map(|(i, _)| i)
                .unwrap_or(0);
            let witness = svd
                .v_t
                .map(|vt| vt.row(idx).transpose())
                .unwrap_or_else(|| DVector::zeros(a.ncols()));
            Some(OperatorNormBound { value, witness, exact: true })
        }
        (pp, Exponent::Infinity) if pp.is_two() => {
            // max_i ||row_i||_2, attained at the normalized dominant row.
            let (mut best, mut best_i) = (0.0, 0);
            for (i, r) in a.row_iter().enumerate() {
                let n = r.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > best {
                    best = n;
                    best_i = i;
                }
            }
            let witness = if best > 0.0 {
                a.row(best_i).transpose() / best
            } else {
                DVector::zeros(a.ncols())
            };
            Some(OperatorNormBound { value: best, witness, exact: true })
        }
        _ => None,
    }
}

/// Maximize a convex function of `A v` over the sign vertices `{+-1}^m`,
/// walking a Gray code so each step updates the running image by one column.
pub(crate) fn sign_enumeration_max<F>(a: &DMatrix<f64>, f: F) -> (f64, DVector<f64>)
where
    F: Fn(&DVector<f64>) -> f64,
{
    let m = a.ncols();
    let mut signs = DVector::from_element(m, 1.0);
    let mut image = a * &signs;
    let mut best = f(&image);
    let mut best_signs = signs.clone();
    let steps: u64 = 1u64 << m;
    let mut gray_prev: u64 = 0;
    for k in 1..steps {
        let gray = k ^ (k >> 1);
        let flipped = (gray ^ gray_prev).trailing_zeros() as usize;
        gray_prev = gray;
        let old = signs[flipped];
        signs[flipped] = -old;
        // image += (new - old) * col = -2*old*col
        image.axpy(-2.0 * old, &a.column(flipped).clone_owned(), 1.0);
        let val = f(&image);
        if val > best {
            best = val;
            best_signs = signs.clone();
        }
    }
    (best, best_signs)
}

fn ascent_lower_bound(a: &DMatrix<f64>, p: Exponent, q: Exponent, budget: usize) -> OperatorNormBound {
    let m = a.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6f70_6e72);
    let mut best = 0.0;
    let mut witness = DVector::zeros(m);
    let mut starts: Vec<DVector<f64>> = Vec::new();
    for j in 0..m {
        let mut e = DVector::zeros(m);
        e[j] = 1.0;
        starts.push(e);
    }
    for _ in 0..budget {
        let v = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        starts.push(v);
    }
    for start in starts {
        let mut v = normalize_to_ball(&start, p);
        for _ in 0..60 {
            let w = a * &v;
            let u = dual_ascent_direction(&w, q);
            let c = a.transpose() * u;
            let next = holder_maximizer(&c, p);
            if (&next - &v).norm() <= 1e-12 {
                v = next;
                break;
            }
            v = next;
        }
        let val = vector_norm((a * &v).as_slice(), q);
        if val > best {
            best = val;
            witness = v;
        }
    }
    OperatorNormBound { value: best, witness, exact: false }
}

fn normalize_to_ball(v: &DVector<f64>, p: Exponent) -> DVector<f64> {
    let n = vector_norm(v.as_slice(), p);
    if n == 0.0 {
        v.clone()
    } else {
        v / n
    }
}

/// Subgradient of the q-norm at `w`, scaled so that `<u, w> = ||w||_q`.
fn dual_ascent_direction(w: &DVector<f64>, q: Exponent) -> DVector<f64> {
    match q {
        Exponent::One => w.map(|x| x.signum()),
        Exponent::Infinity => {
            let idx = w
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
                .map(|(i, _)| i)
                .unwrap_or(0);
            let mut u = DVector::zeros(w.len());
            u[idx] = w[idx].signum();
            u
        }
        Exponent::Finite(_) => {
            let qf = q.as_f64();
            let norm = vector_norm(w.as_slice(), q);
            if norm == 0.0 {
                return DVector::zeros(w.len());
            }
            w.map(|x| x.signum() * (x.abs() / norm).powf(qf - 1.0))
        }
    }
}

/// The vector of unit p-norm maximizing `<c, v>` (Hölder equality case).
pub(crate) fn holder_maximizer(c: &DVector<f64>, p: Exponent) -> DVector<f64> {
    match p {
        Exponent::One => {
            let idx = c
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
                .map(|(i, _)| i)
                .unwrap_or(0);
            let mut v = DVector::zeros(c.len());
            v[idx] = c[idx].signum();
            v
        }
        Exponent::Infinity => c.map(|x| if x == 0.0 { 1.0 } else { x.signum() }),
        Exponent::Finite(_) => {
            let pstar = p.conjugate().as_f64();
            let scale = c.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            if scale == 0.0 {
                let mut v = DVector::zeros(c.len());
                if !v.is_empty() {
                    v[0] = 1.0;
                }
                return v;
            }
            let raw = c.map(|x| x.signum() * (x.abs() / scale).powf(pstar - 1.0));
            normalize_to_ball(&raw, p)
        }
    }
}

/// `gamma_k`, the k-th root of the k-th absolute moment of a standard
/// normal: `(2^{k/2} Gamma((k+1)/2) / sqrt(pi))^{1/k}`. Rejects `k = inf`.
pub fn gaussian_moment(k: Exponent) -> Result<f64, NormError> {
    if k.is_infinite() {
        return Err(NormError::InfiniteMoment);
    }
    let kf = k.as_f64();
    let moment = 2.0f64.powf(kf / 2.0) * statrs::function::gamma::gamma((kf + 1.0) / 2.0)
        / std::f64::consts::PI.sqrt();
    Ok(moment.powf(1.0 / kf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows.len(), rows[0].len(), &rows.concat())
    }

    #[test]
    fn conjugate_pairs_are_exact_involutions() {
        let four = Exponent::new(4.0).unwrap();
        assert_eq!(holder_conjugate(Exponent::two()), Exponent::two());
        assert_eq!(holder_conjugate(Exponent::One), Exponent::Infinity);
        assert_eq!(holder_conjugate(Exponent::Infinity), Exponent::One);
        assert_eq!(holder_conjugate(four), Exponent::from_ratio(4, 3).unwrap());
        for p in [
            Exponent::One,
            Exponent::two(),
            four,
            Exponent::new(1.5).unwrap(),
            Exponent::new(10.0).unwrap(),
            Exponent::Infinity,
        ] {
            assert_eq!(holder_conjugate(holder_conjugate(p)), p);
        }
    }

    #[test]
    fn exponent_rejects_invalid_values() {
        assert!(Exponent::new(0.5).is_err());
        assert!(Exponent::new(f64::NAN).is_err());
        assert_eq!(Exponent::new(1.0).unwrap(), Exponent::One);
    }

    #[test]
    fn vector_norms_match_hand_values() {
        assert_relative_eq!(vector_norm(&[3.0, 4.0], Exponent::two()), 5.0);
        assert_relative_eq!(vector_norm(&[1.0, -1.0, 1.0], Exponent::One), 3.0);
        assert_relative_eq!(vector_norm(&[1.0, -2.0], Exponent::Infinity), 2.0);
    }

    #[test]
    fn lpq_norm_matches_hand_values() {
        let id = DMatrix::<f64>::identity(2, 2);
        assert_relative_eq!(lpq_norm(&id, Exponent::two(), Exponent::One, false), 2.0);
        let a = mat(&[&[1.0, -2.0], &[0.0, 3.0]]);
        assert_relative_eq!(
            lpq_norm(&a, Exponent::One, Exponent::Infinity, false),
            5.0
        );
    }

    #[test]
    fn lpq_identities_of_operator_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let n = rng.random_range(1..5);
            let m = rng.random_range(1..5);
            let a = DMatrix::from_fn(n, m, |_, _| rng.random_range(-2.0..2.0));
            let one_one = operator_norm_exact(&a, Exponent::One, Exponent::One).unwrap();
            assert_relative_eq!(
                lpq_norm(&a, Exponent::One, Exponent::Infinity, false),
                one_one.value,
                epsilon = 1e-12
            );
            let inf_inf = operator_norm_exact(&a, Exponent::Infinity, Exponent::Infinity).unwrap();
            assert_relative_eq!(
                lpq_norm(&a, Exponent::One, Exponent::Infinity, true),
                inf_inf.value,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn operator_norm_examples() {
        let id3 = DMatrix::<f64>::identity(3, 3);
        let b = operator_norm_oracle(&id3, Exponent::Infinity, Exponent::One, 1);
        assert!(b.exact);
        assert_relative_eq!(b.value, 3.0);

        let d = mat(&[&[2.0, 0.0], &[0.0, 3.0]]);
        let b = operator_norm_oracle(&d, Exponent::two(), Exponent::two(), 1);
        assert!(b.exact);
        assert_relative_eq!(b.value, 3.0, epsilon = 1e-12);

        // Brute force over the 4 sign vectors of [[1,1],[1,-1]]: both
        // (1,1) and (1,-1) map to a vector of 1-norm 2.
        let h = mat(&[&[1.0, 1.0], &[1.0, -1.0]]);
        let b = operator_norm_oracle(&h, Exponent::Infinity, Exponent::One, 1);
        assert!(b.exact);
        let mut naive: f64 = 0.0;
        for s in [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]] {
            let v = &h * DVector::from_row_slice(&s);
            naive = naive.max(v[0].abs() + v[1].abs());
        }
        assert_relative_eq!(b.value, naive);
        assert_relative_eq!(b.value, 2.0);
    }

    #[test]
    fn enumeration_limit_is_enforced() {
        let wide = DMatrix::<f64>::repeat(2, ENUMERATION_LIMIT + 1, 1.0);
        let err = operator_norm_exact(&wide, Exponent::Infinity, Exponent::One).unwrap_err();
        assert!(matches!(err, NormError::EnumerationLimit { .. }));
        // The oracle itself degrades to a non-exact bound instead.
        let b = operator_norm_oracle(&wide, Exponent::Infinity, Exponent::One, 3);
        assert!(!b.exact);
        assert!(b.value > 0.0);
    }

    #[test]
    fn ascent_is_a_valid_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = DMatrix::from_fn(3, 4, |_, _| rng.random_range(-1.0..1.0));
            let p = Exponent::new(3.0).unwrap();
            let bound = operator_norm_oracle(&a, p, Exponent::two(), 5);
            assert!(!bound.exact);
            assert!(vector_norm(bound.witness.as_slice(), p) <= 1.0 + 1e-9);
            let attained = vector_norm((&a * &bound.witness).as_slice(), Exponent::two());
            assert_relative_eq!(bound.value, attained, epsilon = 1e-9);
        }
    }

    #[test]
    fn duality_identity_where_both_sides_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let exps = [Exponent::One, Exponent::two(), Exponent::Infinity];
        let mut checked = 0;
        for _ in 0..100 {
            let n = rng.random_range(1..5);
            let m = rng.random_range(1..5);
            let a = DMatrix::from_fn(n, m, |_, _| rng.random_range(-2.0..2.0));
            for &p in &exps {
                for &q in &exps {
                    let lhs = match operator_norm_exact(&a, p, q) {
                        Ok(b) => b,
                        Err(_) => continue,
                    };
                    let rhs = match operator_norm_exact(
                        &a.transpose(),
                        holder_conjugate(q),
                        holder_conjugate(p),
                    ) {
                        Ok(b) => b,
                        Err(_) => continue,
                    };
                    assert_relative_eq!(lhs.value, rhs.value, epsilon = 1e-6, max_relative = 1e-6);
                    checked += 1;
                }
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn gaussian_moment_values() {
        assert_relative_eq!(gaussian_moment(Exponent::two()).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            gaussian_moment(Exponent::One).unwrap(),
            (2.0 / std::f64::consts::PI).sqrt(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            gaussian_moment(Exponent::new(4.0).unwrap()).unwrap(),
            3.0f64.powf(0.25),
            epsilon = 1e-12
        );
        assert_eq!(
            gaussian_moment(Exponent::Infinity).unwrap_err(),
            NormError::InfiniteMoment
        );
    }

    #[test]
    fn gaussian_moment_is_increasing() {
        let grid = [1.0, 1.5, 2.0, 3.0, 4.0];
        let values: Vec<f64> = grid
            .iter()
            .map(|&k| gaussian_moment(Exponent::new(k).unwrap()).unwrap())
            .collect();
        for w in values.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn lpq_norm_axioms_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let exps = [
            Exponent::One,
            Exponent::new(1.5).unwrap(),
            Exponent::two(),
            Exponent::new(3.0).unwrap(),
            Exponent::Infinity,
        ];
        for _ in 0..50 {
            let n = rng.random_range(1..4);
            let m = rng.random_range(1..4);
            let a = DMatrix::from_fn(n, m, |_, _| rng.random_range(-3.0..3.0));
            let b = DMatrix::from_fn(n, m, |_, _| rng.random_range(-3.0..3.0));
            let lam: f64 = rng.random_range(-2.0..2.0);
            for &p in &exps {
                for &q in &exps {
                    let na = lpq_norm(&a, p, q, false);
                    let nb = lpq_norm(&b, p, q, false);
                    assert!(na >= 0.0);
                    assert_relative_eq!(
                        lpq_norm(&(&a * lam), p, q, false),
                        lam.abs() * na,
                        epsilon = 1e-10,
                        max_relative = 1e-10
                    );
                    assert!(lpq_norm(&(&a + &b), p, q, false) <= na + nb + 1e-10);
                }
            }
        }
    }
}
