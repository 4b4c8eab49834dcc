//! Zero-order-hold discretization, the discrete-time algebraic Riccati
//! equation, and the template orientation matrix `R = P^(-1/2)`.

use nalgebra::DMatrix;

use super::SafeSetError;

/// Exact ZOH discretization `(A_d, B_d)` of `(A, B)` at step `dt`, via the
/// block-matrix exponential `exp([[A, B], [0, 0]] dt)`.
pub fn discretize(a: &DMatrix<f64>, b: &DMatrix<f64>, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let nu = b.ncols();
    let mut block = DMatrix::zeros(n + nu, n + nu);
    block.view_mut((0, 0), (n, n)).copy_from(a);
    block.view_mut((0, n), (n, nu)).copy_from(b);
    let em = (block * dt).exp();
    (
        em.view((0, 0), (n, n)).into_owned(),
        em.view((0, n), (n, nu)).into_owned(),
    )
}

/// Stabilizing solution of `P = A'PA - A'PB (R + B'PB)^-1 B'PA + Q` by the
/// structure-preserving doubling algorithm, residual-checked to 1e-10.
pub fn solve_dare(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>, SafeSetError> {
    let n = a.nrows();
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| SafeSetError::Riccati("input weight R is singular".into()))?;
    let mut a_k = a.clone();
    let mut g_k = b * &r_inv * b.transpose();
    let mut h_k = q.clone();
    let identity = DMatrix::<f64>::identity(n, n);
    for _ in 0..120 {
        let w = &identity + &g_k * &h_k;
        let w_inv = w
            .try_inverse()
            .ok_or_else(|| SafeSetError::Riccati("doubling step became singular".into()))?;
        let wa = &w_inv * &a_k;
        let a_next = &a_k * &wa;
        let g_next = &g_k + &a_k * &w_inv * &g_k * a_k.transpose();
        let h_next = &h_k + a_k.transpose() * &h_k * &wa;
        let delta = (&h_next - &h_k).norm() / h_next.norm().max(1.0);
        a_k = a_next;
        g_k = g_next;
        h_k = h_next;
        if delta < 1e-15 {
            break;
        }
    }
    let p = 0.5 * (&h_k + h_k.transpose());
    let residual = dare_residual(a, b, q, r, &p)?;
    if residual > 1e-10 {
        return Err(SafeSetError::Riccati(format!(
            "doubling iteration stalled at residual {residual:e}"
        )));
    }
    Ok(p)
}

pub fn dare_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<f64, SafeSetError> {
    let btpb = r + b.transpose() * p * b;
    let inv = btpb
        .try_inverse()
        .ok_or_else(|| SafeSetError::Riccati("R + B'PB is singular".into()))?;
    let rhs = a.transpose() * p * a - a.transpose() * p * b * inv * b.transpose() * p * a + q;
    Ok((p - rhs).norm() / p.norm().max(1.0))
}

/// Discrete LQR data: the feedback gain (`u = K x`), the Riccati solution,
/// and the orientation matrix `R = P^(-1/2)`.
#[derive(Debug, Clone)]
pub struct LqrGain {
    pub k: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

pub fn lqr_gain(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    rw: &DMatrix<f64>,
    dt: f64,
) -> Result<LqrGain, SafeSetError> {
    let (a_d, b_d) = discretize(a, b, dt);
    let p = solve_dare(&a_d, &b_d, q, rw)?;
    let gain_inv = (rw + b_d.transpose() * &p * &b_d)
        .try_inverse()
        .ok_or_else(|| SafeSetError::Riccati("R + B'PB is singular".into()))?;
    let k = -(gain_inv * b_d.transpose() * &p * &a_d);
    let r = inverse_sqrt(&p)?;
    Ok(LqrGain { k, p, r })
}

/// `P^(-1/2)` through the symmetric eigendecomposition.
pub fn inverse_sqrt(p: &DMatrix<f64>) -> Result<DMatrix<f64>, SafeSetError> {
    let eig = p.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(SafeSetError::Riccati("Riccati solution is not positive definite".into()));
    }
    let scaled = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.powf(-0.5)));
    Ok(scaled * eig.eigenvectors.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spectral_radius(m: &DMatrix<f64>) -> f64 {
        m.complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn scalar_fixed_point() {
        // A = 0, B = I, Q = R = I, dt = 1: A_d = B_d = I and the scalar
        // recursion settles at the positive root of p^2 - p - 1.
        let id = DMatrix::<f64>::identity(2, 2);
        let zero = DMatrix::<f64>::zeros(2, 2);
        let gain = lqr_gain(&zero, &id, &id, &id, 1.0).unwrap();
        let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
        for i in 0..2 {
            assert_relative_eq!(gain.p[(i, i)], golden, epsilon = 1e-10);
        }
        let (a_d, b_d) = discretize(&zero, &id, 1.0);
        assert!(spectral_radius(&(a_d + b_d * &gain.k)) < 1.0);
        assert!(
            dare_residual(&DMatrix::identity(2, 2), &id, &id, &id, &gain.p).unwrap() <= 1e-10
        );
    }

    #[test]
    fn double_integrator_is_stabilized() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let q = DMatrix::<f64>::identity(2, 2);
        let rw = DMatrix::<f64>::identity(1, 1);
        let gain = lqr_gain(&a, &b, &q, &rw, 0.1).unwrap();
        let (a_d, b_d) = discretize(&a, &b, 0.1);
        assert!(spectral_radius(&(a_d + b_d * &gain.k)) < 1.0);
    }

    #[test]
    fn r_is_the_inverse_square_root() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let gain = lqr_gain(
            &a,
            &b,
            &DMatrix::identity(2, 2),
            &DMatrix::identity(1, 1),
            0.1,
        )
        .unwrap();
        let p_inv = gain.p.clone().try_inverse().unwrap();
        let residual = (&gain.r * &gain.r - &p_inv).norm() / p_inv.norm();
        assert!(residual <= 1e-10, "residual {residual:e}");
    }
}
