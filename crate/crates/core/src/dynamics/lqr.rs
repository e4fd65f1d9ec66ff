//! Zero-order-hold discretization and discrete-time LQR synthesis.

use nalgebra::DMatrix;

use super::DynamicsError;

const MAX_DOUBLING_STEPS: usize = 200;

/// Exact zero-order-hold discretization of `x' = A x + B u` over `dt`.
///
/// Uses the block exponential `exp([[A, B], [0, 0]] dt)`.
pub fn discretize(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    dt: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>), DynamicsError> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n {
        return Err(DynamicsError::InvalidArgument(format!(
            "A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(DynamicsError::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let mut block = DMatrix::zeros(n + m, n + m);
    block.view_mut((0, 0), (n, n)).copy_from(&(a * dt));
    block.view_mut((0, n), (n, m)).copy_from(&(b * dt));
    let e = block.exp();
    Ok((e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, m)).into_owned()))
}

/// Stabilizing solution of the discrete algebraic Riccati equation
/// `P = A'PA - A'PB (R + B'PB)^-1 B'PA + Q`, via the structure-preserving
/// doubling iteration.
pub fn solve_dare(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>, DynamicsError> {
    let n = a.nrows();
    let r_inv = r
        .clone()
        .cholesky()
        .ok_or_else(|| DynamicsError::InvalidArgument("R must be positive definite".into()))?
        .inverse();
    let eye = DMatrix::<f64>::identity(n, n);

    let mut ak = a.clone();
    let mut gk = b * &r_inv * b.transpose();
    let mut hk = q.clone();
    for _ in 0..MAX_DOUBLING_STEPS {
        let w = (&eye + &gk * &hk)
            .lu()
            .try_inverse()
            .ok_or(DynamicsError::RiccatiDiverged)?;
        let a_next = &ak * &w * &ak;
        let g_next = &gk + &ak * &w * &gk * ak.transpose();
        let h_next = &hk + ak.transpose() * &hk * &w * &ak;
        let delta = (&h_next - &hk).amax();
        let scale = h_next.amax().max(1.0);
        ak = a_next;
        gk = g_next;
        hk = h_next;
        if !hk.iter().all(|v| v.is_finite()) {
            return Err(DynamicsError::RiccatiDiverged);
        }
        if delta <= 1e-13 * scale {
            let p = 0.5 * (&hk + hk.transpose());
            return Ok(p);
        }
    }
    Err(DynamicsError::RiccatiDiverged)
}

/// Feedback gain `K = (R + B'PB)^-1 B'PA` for `u = -K x` on the discrete pair.
pub fn dare_gain(
    ad: &DMatrix<f64>,
    bd: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>, DynamicsError> {
    let p = solve_dare(ad, bd, q, r)?;
    let bt_p = bd.transpose() * &p;
    let lhs = r + &bt_p * bd;
    let k = lhs
        .lu()
        .solve(&(&bt_p * ad))
        .ok_or(DynamicsError::RiccatiDiverged)?;
    let closed = ad - bd * &k;
    if spectral_radius(&closed) >= 1.0 {
        return Err(DynamicsError::RiccatiDiverged);
    }
    Ok(k)
}

/// Largest eigenvalue magnitude.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}
