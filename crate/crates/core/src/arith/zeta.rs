use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::sum::NeumaierSum;

/// Requested tolerances below this are treated as this value; the partial sum
/// itself carries rounding error of a few ulps.
pub const MIN_ZETA_TOL: f64 = 1e-15;
const MIN_CUTOFF: u64 = 16;
const MAX_CUTOFF: u64 = 10_000_000;
// 2 ζ(3) / (2π)^3
const REMAINDER_CONST: f64 = 2.0 * 1.202_056_903_159_594_3 / (8.0 * PI * PI * PI);

/// Riemann zeta at real `s > 1`, with `|result - ζ(s)| ≤ tol`.
///
/// Sums `n^{-s}` for `n < M` and adds the Euler–Maclaurin tail
/// `M^{1-s}/(s-1) + M^{-s}/2 + s M^{-s-1}/12`. The remainder after the `B_2`
/// term is at most `2ζ(3)/(2π)^3 · s(s+1) M^{-s-2}`, and `M` is the smallest
/// cutoff (at least 16) making that bound fall below `tol / 2`.
pub fn zeta(s: f64, tol: f64) -> Result<f64> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::Domain(format!("zeta requires real s > 1, got {s}")));
    }
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let tol = tol.max(MIN_ZETA_TOL);
    let m = cutoff(s, tol);
    let mut acc = NeumaierSum::new();
    // small terms first
    for n in (1..m).rev() {
        acc.add((n as f64).powf(-s));
    }
    let mf = m as f64;
    let m_s = mf.powf(-s);
    acc.add(mf * m_s / (s - 1.0));
    acc.add(0.5 * m_s);
    acc.add(s * m_s / (12.0 * mf));
    Ok(acc.value())
}

/// Certified bound on the Euler–Maclaurin remainder at cutoff `m`.
pub fn remainder_bound(s: f64, m: u64) -> f64 {
    REMAINDER_CONST * s * (s + 1.0) * (m as f64).powf(-s - 2.0)
}

fn cutoff(s: f64, tol: f64) -> u64 {
    let target = 0.5 * tol;
    // solve REMAINDER_CONST s (s+1) M^{-(s+2)} = target, then round up
    let guess = (REMAINDER_CONST * s * (s + 1.0) / target).powf(1.0 / (s + 2.0));
    let mut m = (guess.ceil() as u64).clamp(MIN_CUTOFF, MAX_CUTOFF);
    while m < MAX_CUTOFF && remainder_bound(s, m) > target {
        m += 1;
    }
    m
}
