//! The singular integrals
//!
//! ```text
//! I_i(a) = 2^{i-1} int_{[a, pi/2]^i} dy / (sin^2 y_1 + ... + sin^2 y_i)
//! ```
//!
//! with `a = pi / 2n` for an n-site lattice or `a = 0` in the large-n limit,
//! where they converge only for `i >= 3`.
//!
//! Two independent routes are provided. The direct route integrates the
//! innermost coordinate in closed form,
//! `int_a^{pi/2} dz / (A + sin^2 z) = atan(sqrt(A/(A+1)) / tan a) / sqrt(A(A+1))`,
//! and runs nested adaptive quadrature over the rest (i <= 3). The Laplace
//! route writes `1/A = int_0^inf e^{-tA} dt`, which factorises the integrand:
//! `I_i = 2^{i-1} int_0^inf F_a(t)^i dt` with
//! `F_a(t) = int_a^{pi/2} e^{-t sin^2 y} dy` and
//! `F_0(t) = (pi/2) e^{-t/2} I_0(t/2)`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, Tolerance};

/// Catalan's constant.
pub const CATALAN: f64 = 0.915_965_594_177_219_015_054_603_514_932_384_110_774;

/// Highest integral dimension accepted.
pub const MAX_ORDER: usize = 6;

/// Target absolute accuracy of the integrals.
pub const ABS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowerLimit {
    /// `a = pi / (2n)`.
    Lattice(usize),
    /// `a = 0`.
    Asymptotic,
}

impl LowerLimit {
    pub fn value(self) -> f64 {
        match self {
            LowerLimit::Lattice(n) => PI / (2.0 * n as f64),
            LowerLimit::Asymptotic => 0.0,
        }
    }
}

fn check(order: usize, limit: LowerLimit) -> Result<()> {
    if order == 0 || order > MAX_ORDER {
        return Err(invalid(format!("integral order {order} outside 1..={MAX_ORDER}")));
    }
    match limit {
        LowerLimit::Asymptotic if order <= 2 => Err(Error::DivergentLimit(order)),
        LowerLimit::Lattice(n) if n < 2 => Err(invalid("lattice side must be at least 2")),
        _ => Ok(()),
    }
}

/// `e^{-x} I_0(x)` for `x >= 0`.
pub fn scaled_bessel_i0(x: f64) -> f64 {
    assert!(x >= 0.0, "scaled_bessel_i0 needs x >= 0");
    if x <= 30.0 {
        // power series; all terms positive
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        // e^{-x} I_0(x) ~ (2 pi x)^{-1/2} sum_k ((2k-1)!!)^2 / (k! (8x)^k)
        let mut term: f64 = 1.0;
        let mut sum = 1.0;
        let mut k: f64 = 1.0;
        loop {
            let next = term * (2.0 * k - 1.0).powi(2) / (8.0 * x * k);
            if next >= term || next < 1e-17 * sum {
                break;
            }
            term = next;
            sum += term;
            k += 1.0;
        }
        sum / (2.0 * PI * x).sqrt()
    }
}

/// `int_a^{pi/2} dz / (s + sin^2 z)` for `s > 0`.
pub fn inner_integral(s: f64, a: f64) -> f64 {
    let root = (s * (s + 1.0)).sqrt();
    if a == 0.0 {
        FRAC_PI_2 / root
    } else {
        ((s / (s + 1.0)).sqrt() / a.tan()).atan() / root
    }
}

/// `I_i` by the default route: direct for `i <= 3`, Laplace above.
pub fn i_integral(order: usize, limit: LowerLimit) -> Result<f64> {
    if order <= 3 {
        i_integral_direct(order, limit)
    } else {
        i_integral_laplace(order, limit)
    }
}

fn finish(r: crate::quadrature::QuadResult, what: &str) -> Result<f64> {
    if r.converged {
        Ok(r.value)
    } else {
        Err(Error::Diagnostic(format!(
            "{what}: quadrature did not converge (estimate {:.3e} after {} panels)",
            r.error, r.intervals
        )))
    }
}

/// Nested quadrature with the innermost coordinate done analytically.
pub fn i_integral_direct(order: usize, limit: LowerLimit) -> Result<f64> {
    check(order, limit)?;
    if order > 3 {
        return Err(invalid("the direct route is implemented for orders up to 3"));
    }
    let a = limit.value();
    let tol = Tolerance::new(ABS_TOL * 0.1, 1e-13).with_max_intervals(20_000);
    let inner_tol = Tolerance::new(ABS_TOL * 1e-3, 1e-13).with_max_intervals(20_000);
    match order {
        1 => finish(integrate(|y: f64| 1.0 / y.sin().powi(2), a, FRAC_PI_2, tol), "I_1"),
        2 => finish(integrate(|x: f64| 2.0 * inner_integral(x.sin().powi(2), a), a, FRAC_PI_2, tol), "I_2"),
        _ => {
            // the integrand is symmetric in (x, y): integrate over y >= x only
            let outer = |x: f64| {
                let sx = x.sin().powi(2);
                integrate(|y: f64| inner_integral(sx + y.sin().powi(2), a), x, FRAC_PI_2, inner_tol).value
            };
            finish(integrate(|x: f64| 8.0 * outer(x), a, FRAC_PI_2, tol), "I_3")
        }
    }
}

/// `F_a(t) = int_a^{pi/2} e^{-t sin^2 y} dy`.
fn laplace_kernel(t: f64, a: f64) -> f64 {
    if a == 0.0 {
        FRAC_PI_2 * scaled_bessel_i0(0.5 * t)
    } else {
        let tol = Tolerance::new(1e-300, 1e-13).with_max_intervals(2_000);
        integrate(|y: f64| (-t * y.sin().powi(2)).exp(), a, FRAC_PI_2, tol).value
    }
}

/// `2^{i-1} int_0^inf F_a(t)^i dt`, integrated in `u = ln t`.
pub fn i_integral_laplace(order: usize, limit: LowerLimit) -> Result<f64> {
    check(order, limit)?;
    let a = limit.value();
    let p = order as i32;
    const U_MIN: f64 = -40.0;
    // t -> 0: F -> pi/2 - a
    let head = (FRAC_PI_2 - a).powi(p) * U_MIN.exp();
    let (u_max, tail) = if a == 0.0 {
        // t -> inf: F_0(t) ~ sqrt(pi / 4t)
        let u_max = 60.0;
        let half = 0.5 * order as f64;
        let tail = (PI / 4.0).powf(half) * (u_max * (1.0 - half)).exp() / (half - 1.0);
        (u_max, tail)
    } else {
        // F_a(t) < (pi/2) e^{-t sin^2 a}
        ((750.0 / a.sin().powi(2)).ln(), 0.0)
    };
    let tol = Tolerance::new(ABS_TOL * 0.1, 1e-13).with_max_intervals(20_000);
    let body = integrate(
        |u: f64| {
            let t = u.exp();
            laplace_kernel(t, a).powi(p) * t
        },
        U_MIN,
        u_max,
        tol,
    );
    let scale = 2f64.powi(p - 1);
    finish(body, "Laplace route").map(|v| scale * (v + head + tail))
}

/// Large-n expansion `pi ln n + pi ln(4/pi) - 2K - (pi/2) ln 2` of `I_2`.
pub fn i2_closed_form(n: usize) -> f64 {
    let n = n as f64;
    PI * n.ln() + PI * (4.0 / PI).ln() - 2.0 * CATALAN - FRAC_PI_2 * 2f64.ln()
}

/// `I_1 = cot(pi / 2n)`.
pub fn i1_closed_form(n: usize) -> f64 {
    1.0 / (PI / (2.0 * n as f64)).tan()
}
