//! Closed-form metrics: IEP bounds, code rate, reliability and overheads.
//!
//! Analytic curves accept a real-valued `q` implied by the subcarrier budget
//! `N_P = q [1 + K(k-1)]`, so they can be drawn through non-prime-power points.

use crate::error::{Error, Result};

/// RS length `1 + K(k-1)`.
pub fn rs_len(users: usize, dim: usize) -> usize {
    1 + users * (dim - 1)
}

/// Smallest usable subcarrier budget `K(k-1) [1 + K(k-1)]`.
pub fn min_subcarriers(users: usize, dim: usize) -> usize {
    users * (dim - 1) * rs_len(users, dim)
}

/// `(N/C, 1/(2KN))`.
pub fn iep_bounds(size: f64, users: usize, segments: f64) -> (f64, f64) {
    (segments / size, 1.0 / (2.0 * users as f64 * segments))
}

/// Real-valued optimal segment count `sqrt(C/(2K))`.
pub fn optimal_segments_real(size: f64, users: usize) -> f64 {
    (size / (2.0 * users as f64)).sqrt()
}

/// `N_P >= K(k-1) [1 + K(k-1)]`, i.e. a prime power `q >= K(k-1)` could fit.
pub fn meets_min_budget(users: usize, dim: usize, np: f64) -> bool {
    np >= min_subcarriers(users, dim) as f64
}

/// Analytic curves only need `q = N_P / n0 >= 1`; points below the minimum
/// budget are still evaluated (the published curves include some).
fn check_budget(users: usize, dim: usize, np: f64) -> Result<()> {
    if users < 2 || dim < 2 {
        return Err(Error::ConstraintViolation(format!("K = {users}, k = {dim}")));
    }
    let n0 = rs_len(users, dim) as f64;
    if np.is_nan() || np < n0 {
        return Err(Error::ConstraintViolation(format!(
            "N_P = {np} below n0 = {n0} (q < 1)"
        )));
    }
    Ok(())
}

/// `(q, C)` implied by a subcarrier budget.
pub fn implied_code(users: usize, dim: usize, np: f64) -> (f64, f64) {
    let q = np / rs_len(users, dim) as f64;
    (q, q.powi(dim as i32))
}

/// IEP at the optimal segmentation: `sqrt(n0^k / (2 N_P^k K))`.
pub fn iep_closed_form(users: usize, dim: usize, np: f64) -> Result<f64> {
    check_budget(users, dim, np)?;
    let n0 = rs_len(users, dim) as f64;
    let k = dim as i32;
    Ok((n0.powi(k) / (2.0 * np.powi(k) * users as f64)).sqrt())
}

/// `log2(C) / B`.
pub fn code_rate(size: f64, len: f64) -> f64 {
    size.log2() / len
}

/// Code rate for a subcarrier budget, with `C = (N_P / n0)^k`.
pub fn code_rate_for(users: usize, dim: usize, np: f64) -> Result<f64> {
    check_budget(users, dim, np)?;
    let (_, c) = implied_code(users, dim, np);
    Ok(code_rate(c, np))
}

/// `log10(P_upper / P_lower) = log10(C / (2 K N^2))`.
pub fn instability(size: f64, users: usize, segments: f64) -> f64 {
    let (lo, hi) = iep_bounds(size, users, segments);
    (hi / lo).log10()
}

/// The same quantity as `-2 log10 N + G` with
/// `G = k log10 N_P - k log10 n0 - log10 2K`.
pub fn instability_g_form(users: usize, dim: usize, np: f64, segments: f64) -> f64 {
    let k = dim as f64;
    let g = k * np.log10() - k * (rs_len(users, dim) as f64).log10() - (2.0 * users as f64).log10();
    -2.0 * segments.log10() + g
}

/// `-log10 P`.
pub fn reliability(p: f64) -> f64 {
    -p.log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverheadPoint {
    pub q: u32,
    pub size: f64,
    pub subcarriers: usize,
}

/// `N_P = q n0` and `C = q^k` for each `q`.
pub fn overhead_curve(
    users: usize,
    dim: usize,
    qs: impl IntoIterator<Item = u32>,
) -> Vec<OverheadPoint> {
    let n0 = rs_len(users, dim);
    qs.into_iter()
        .map(|q| OverheadPoint {
            q,
            size: (q as f64).powi(dim as i32),
            subcarriers: q as usize * n0,
        })
        .collect()
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// 95% two-sided normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
