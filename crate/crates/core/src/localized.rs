//! The localized approximate eigenvector `nu_1` of the search walk and its
//! normalization constant `b`.
//!
//! At `lambda = 1` the coefficients are
//! `a_k^+- = -2b alpha^{-k.v} e^{+-i theta_k} / (sqrt(2N) (1 - e^{+-i theta_k}))`
//! with no `phi_0` component, and normalizing gives
//!
//! ```text
//! 1/b^2 = (2d/N) sum_{k != 0} 1 / (d - sum_i cos(2 pi k_i / n)).
//! ```
//!
//! Grouping the modes by their number `i` of nonzero components turns the
//! sum into `(2d/N) sum_i C(d, i) S_i`, where `S_i` is a lattice version of
//! `(n/pi)^i I_i`; see [`crate::integrals`].

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::fourier::{self, ModeData};
use crate::integrals::{i2_closed_form, i_integral, LowerLimit, MAX_ORDER};
use crate::lattice::LatticeConfig;
use crate::sum::{tree_merge, CompensatedSum};
use crate::walk::StateVector;

/// Largest number of terms an exact lattice sum may have.
pub const MAX_SUM_TERMS: u64 = 1 << 30;

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ExactSum,
    Asymptotic,
    Quadrature,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ExactSum => "exact-sum",
            Method::Asymptotic => "asymptotic",
            Method::Quadrature => "quadrature",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-sum" | "exact" => Ok(Method::ExactSum),
            "asymptotic" => Ok(Method::Asymptotic),
            "quadrature" => Ok(Method::Quadrature),
            other => Err(invalid(format!("unknown method '{other}' (expected exact-sum, asymptotic or quadrature)"))),
        }
    }
}

/// One group of modes with `i` nonzero components.
#[derive(Debug, Clone, PartialEq)]
pub struct NormTerm {
    pub i: usize,
    pub binomial: u64,
    /// `I_i`, or its lattice analogue `(pi/n)^i S_i` for the exact sum.
    pub integral: f64,
    /// `(n/pi)^i I_i` (or `S_i`), when a lattice size is known.
    pub scaled: Option<f64>,
    /// Share of `1/b^2` carried by this group.
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormResult {
    pub inv_b2: f64,
    pub method: Method,
    pub breakdown: Vec<NormTerm>,
}

impl NormResult {
    pub fn b2(&self) -> f64 {
        1.0 / self.inv_b2
    }

    pub fn b(&self) -> f64 {
        self.b2().sqrt()
    }
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    (0..k).fold(1u64, |acc, j| acc * (n - j) / (j + 1))
}

/// `2 sin^2(pi j / n) = 1 - cos(2 pi j / n)` for `j` in `0..n`, computed
/// without cancellation.
fn half_gap_table(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let j = j.min(n - j);
            2.0 * (PI * j as f64 / n as f64).sin().powi(2)
        })
        .collect()
}

fn count_terms(base: usize, order: usize) -> Result<u64> {
    let mut total: u64 = 1;
    for _ in 0..order {
        total = total.checked_mul(base as u64).filter(|&t| t <= MAX_SUM_TERMS).ok_or_else(|| {
            Error::SizeLimit(format!("{base}^{order} terms exceed the exact-sum limit of {MAX_SUM_TERMS}"))
        })?;
    }
    Ok(total)
}

/// Compensated sum of `f(sum_l table[offset + j_l])` over all tuples
/// `j in [0, base)^order`, optionally skipping the all-zero tuple. The
/// reduction tree is fixed, so the result does not depend on thread count.
fn grid_sum<F>(order: usize, base: usize, offset: usize, table: &[f64], skip_origin: bool, f: F) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    let total = count_terms(base, order)?;
    let chunks = total.div_ceil(CHUNK);
    let parts: Vec<CompensatedSum> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut digits = vec![0usize; order];
            let mut rest = start;
            for d in digits.iter_mut().rev() {
                *d = (rest % base as u64) as usize;
                rest /= base as u64;
            }
            let mut acc = CompensatedSum::new();
            for idx in start..end {
                if !(skip_origin && idx == 0) {
                    let s: f64 = digits.iter().map(|&j| table[j + offset]).sum();
                    acc.add(f(s));
                }
                for d in digits.iter_mut().rev() {
                    *d += 1;
                    if *d < base {
                        break;
                    }
                    *d = 0;
                }
            }
            acc
        })
        .collect();
    Ok(tree_merge(parts).value())
}

fn check_sizes(d: usize, n: usize) -> Result<()> {
    if d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if n < 2 {
        return Err(invalid("side length must be at least 2"));
    }
    Ok(())
}

/// Exact `1/b^2` from the direct mode sum, with the grouped sums `S_i` as
/// breakdown.
pub fn inv_b2_exact(d: usize, n: usize) -> Result<NormResult> {
    check_sizes(d, n)?;
    let table = half_gap_table(n);
    let nv = count_terms(n, d)? as f64;
    let direct = grid_sum(d, n, 0, &table, true, |s| 1.0 / s)?;
    let prefactor = 2.0 * d as f64 / nv;
    let breakdown = grouped_sums(d, n)?
        .into_iter()
        .map(|(i, s)| {
            let binomial = binomial(d, i);
            NormTerm {
                i,
                binomial,
                integral: s * (PI / n as f64).powi(i as i32),
                scaled: Some(s),
                contribution: prefactor * binomial as f64 * s,
            }
        })
        .collect();
    Ok(NormResult { inv_b2: prefactor * direct, method: Method::ExactSum, breakdown })
}

/// `S_i = sum_{j in [1, n-1]^i} 1 / (i - sum_l cos(2 pi j_l / n))` for `i = 1..=d`.
pub fn grouped_sums(d: usize, n: usize) -> Result<Vec<(usize, f64)>> {
    check_sizes(d, n)?;
    let table = half_gap_table(n);
    (1..=d).map(|i| Ok((i, grid_sum(i, n - 1, 1, &table, false, |s| 1.0 / s)?))).collect()
}

/// `1/b^2` rebuilt from the grouped sums.
pub fn inv_b2_regrouped(d: usize, n: usize) -> Result<f64> {
    let nv = count_terms(n, d)? as f64;
    let mut acc = CompensatedSum::new();
    for (i, s) in grouped_sums(d, n)? {
        acc.add(binomial(d, i) as f64 * s);
    }
    Ok(2.0 * d as f64 / nv * acc.value())
}

fn integral_term(d: usize, n: Option<usize>, i: usize, integral: f64) -> NormTerm {
    let binomial = binomial(d, i);
    // (2d/N) C(d,i) (n/pi)^i I_i = 2d C(d,i) n^{i-d} pi^{-i} I_i
    let weight = 2.0 * d as f64 * binomial as f64 / PI.powi(i as i32);
    let (scaled, contribution) = match n {
        Some(n) => {
            let n = n as f64;
            (Some(integral * (n / PI).powi(i as i32)), weight * n.powi(i as i32 - d as i32) * integral)
        }
        None => (None, weight * integral),
    };
    NormTerm { i, binomial, integral, scaled, contribution }
}

fn total(breakdown: &[NormTerm]) -> f64 {
    breakdown.iter().map(|t| t.contribution).sum::<CompensatedSum>().value()
}

/// Large-n prediction of `1/b^2`.
///
/// `d = 2`: `(2/pi) ln N + (8/pi^2)(2 - K) + (2/pi) ln(8/pi^2)`, i.e. the
/// grouped form with `I_1 ~ 2n/pi` and the large-n `I_2`. `d >= 3`:
/// `(2d/pi^d) I_d` at lower limit 0. The lower groups fall off like
/// `n^{i-d}`; adding them to the limiting `I_d` would count the faces of the
/// integration cube twice, so finite-n corrections are left to
/// [`inv_b2_quadrature`].
/// The lattice size is only used for `d = 2`.
pub fn inv_b2_asymptotic(d: usize, n: Option<usize>) -> Result<NormResult> {
    if let Some(n) = n {
        check_sizes(d, n)?;
    }
    if d < 2 {
        return Err(invalid("the large-n normalization needs d >= 2"));
    }
    if d > MAX_ORDER {
        return Err(invalid(format!("dimension {d} above the supported maximum {MAX_ORDER}")));
    }
    let breakdown = match d {
        2 => {
            let n = n.ok_or_else(|| invalid("the two-dimensional form needs the lattice size"))?;
            vec![integral_term(2, Some(n), 1, 2.0 * n as f64 / PI), integral_term(2, Some(n), 2, i2_closed_form(n))]
        }
        _ => vec![integral_term(d, None, d, i_integral(d, LowerLimit::Asymptotic)?)],
    };
    Ok(NormResult { inv_b2: total(&breakdown), method: Method::Asymptotic, breakdown })
}

/// `1/b^2` from quadrature of every `I_i` at lower limit `pi/2n`, or, without
/// a lattice size, the top group alone at lower limit 0 (`d >= 3`).
pub fn inv_b2_quadrature(d: usize, n: Option<usize>) -> Result<NormResult> {
    if d == 0 || d > MAX_ORDER {
        return Err(invalid(format!("dimension {d} outside 1..={MAX_ORDER}")));
    }
    let breakdown = match n {
        Some(n) => {
            check_sizes(d, n)?;
            (1..=d)
                .map(|i| Ok(integral_term(d, Some(n), i, i_integral(i, LowerLimit::Lattice(n))?)))
                .collect::<Result<Vec<_>>>()?
        }
        None => vec![integral_term(d, None, d, i_integral(d, LowerLimit::Asymptotic)?)],
    };
    Ok(NormResult { inv_b2: total(&breakdown), method: Method::Quadrature, breakdown })
}

pub fn inv_b2(d: usize, n: usize, method: Method) -> Result<NormResult> {
    match method {
        Method::ExactSum => inv_b2_exact(d, n),
        Method::Asymptotic => inv_b2_asymptotic(d, Some(n)),
        Method::Quadrature => inv_b2_quadrature(d, Some(n)),
    }
}

/// `((e^{i pi lambda} - 1) / 2N) sum_{k != 0} sum_+- e^{+-i theta_k} / (e^{i g} - e^{+-i theta_k})`,
/// the solvability sum for the localized ansatz; it must equal 1 for an
/// exact eigenvector.
pub fn secular_sum(d: usize, n: usize, lambda: f64, g: f64) -> Result<Complex64> {
    check_sizes(d, n)?;
    let nv = count_terms(n, d)?;
    let table = fourier::cos_table(n);
    let eg = Complex64::from_polar(1.0, g);
    let chunks = nv.div_ceil(CHUNK);
    let parts: Vec<(CompensatedSum, CompensatedSum)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut re = CompensatedSum::new();
            let mut im = CompensatedSum::new();
            for idx in (c * CHUNK).max(1)..((c + 1) * CHUNK).min(nv) {
                let mut rest = idx;
                let mut cs = 0.0;
                for _ in 0..d {
                    cs += table[(rest % n as u64) as usize];
                    rest /= n as u64;
                }
                let th = (cs / d as f64).clamp(-1.0, 1.0).acos();
                for sign in [1.0, -1.0] {
                    let e = Complex64::from_polar(1.0, sign * th);
                    let z = e / (eg - e);
                    re.add(z.re);
                    im.add(z.im);
                }
            }
            (re, im)
        })
        .collect();
    let (re, im): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    let s = Complex64::new(tree_merge(re).value(), tree_merge(im).value());
    let pref = (Complex64::from_polar(1.0, PI * lambda) - 1.0) / (2.0 * nv as f64);
    Ok(pref * s)
}

/// The solvability sum at `lambda = 1`, `g = 0`; analytically `1 - 1/N`.
pub fn consistency_sum(d: usize, n: usize) -> Result<f64> {
    let s = secular_sum(d, n, 1.0, 0.0)?;
    if s.im.abs() > 1e-9 * s.re.abs().max(1.0) {
        return Err(Error::Diagnostic(format!("solvability sum has imaginary part {}", s.im)));
    }
    Ok(s.re)
}

/// `nu_1` in reduced coordinates (`phi_0` first, then `(k, +), (k, -)`).
#[derive(Debug, Clone, PartialEq)]
pub struct NuState {
    pub coeffs: Vec<Complex64>,
    pub b: f64,
    /// `1/b^2` as obtained from normalizing the coefficients.
    pub inv_b2: f64,
}

/// Builds `nu_1` for the lattice's marked vertex. Requires odd `n`.
pub fn nu_state(lattice: &LatticeConfig) -> Result<NuState> {
    let phases = fourier::reduced_phases(lattice);
    let reduced = fourier::reduced_u_lambda(lattice, 1.0)?;
    let mut raw = vec![Complex64::new(0.0, 0.0); phases.len()];
    let mut norm = CompensatedSum::new();
    for a in 1..phases.len() {
        let th = phases[a];
        if th.abs() < 1e-12 {
            return Err(Error::Degenerate(format!("reduced basis state {a} has phase 0")));
        }
        // e^{i th} / (1 - e^{i th}) = -1/2 + (i/2) cot(th/2)
        let ratio = Complex64::new(-0.5, 0.5 / (0.5 * th).tan());
        raw[a] = reduced.coeffs[a] * ratio;
        norm.add(raw[a].norm_sqr());
    }
    let inv_b2 = 4.0 * norm.value();
    let b = inv_b2.sqrt().recip();
    let coeffs = raw.into_iter().map(|r| r * (-2.0 * b)).collect();
    Ok(NuState { coeffs, b, inv_b2 })
}

impl NuState {
    pub fn full_state(&self, lattice: &LatticeConfig, modes: &[ModeData]) -> Result<StateVector> {
        fourier::reduced_to_full(lattice, modes, &self.coeffs)
    }

    /// `<sv|nu_1>` from reduced coordinates.
    pub fn overlap_sv(&self, lattice: &LatticeConfig) -> Complex64 {
        fourier::sv_coefficients(lattice).iter().zip(&self.coeffs).map(|(c, a)| c.conj() * a).sum()
    }
}

/// `<nu_1|U_0|sv>`, using that `U_0` is diagonal on the reduced basis.
pub fn overlap_nu_u0sv(lattice: &LatticeConfig, nu: &NuState) -> Complex64 {
    let phases = fourier::reduced_phases(lattice);
    fourier::sv_coefficients(lattice)
        .iter()
        .zip(&nu.coeffs)
        .zip(&phases)
        .map(|((c, a), &th)| a.conj() * Complex64::from_polar(1.0, th) * c)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::Walk;

    // independent double-precision sums of 2d/N sum 1/(d - sum cos)
    const EXACT: [(usize, usize, f64); 8] = [
        (2, 11, 3.441356050028071),
        (2, 15, 3.837101557997519),
        (2, 31, 4.762171001006243),
        (2, 51, 5.3961911490151415),
        (3, 5, 2.497163636363636),
        (3, 7, 2.6475557519547275),
        (3, 11, 2.786879894783171),
        (3, 21, 2.90380893333283),
    ];

    #[test]
    fn toy_lattice_is_sixteen_ninths() {
        let r = inv_b2_exact(2, 3).unwrap();
        assert!((r.inv_b2 - 16.0 / 9.0).abs() < 1e-14);
        assert!((r.b() - 0.75).abs() < 1e-14);
    }

    #[test]
    fn exact_sums_match_reference() {
        for (d, n, want) in EXACT {
            let got = inv_b2_exact(d, n).unwrap().inv_b2;
            assert!((got - want).abs() < 1e-12 * want, "d={d} n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn one_dimensional_pair() {
        assert!((inv_b2_exact(1, 2).unwrap().inv_b2 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn regrouped_equals_direct() {
        for d in [2, 3] {
            for n in [3, 5, 7, 11] {
                let direct = inv_b2_exact(d, n).unwrap();
                let grouped = inv_b2_regrouped(d, n).unwrap();
                assert!((direct.inv_b2 - grouped).abs() < 1e-10);
                let from_terms: f64 = direct.breakdown.iter().map(|t| t.contribution).sum();
                assert!((direct.inv_b2 - from_terms).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(3, 0), 1);
        assert_eq!(binomial(3, 2), 3);
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(2, 3), 0);
    }

    #[test]
    fn monotone_in_n() {
        let two: Vec<f64> = [5, 7, 9, 11, 15].iter().map(|&n| inv_b2_exact(2, n).unwrap().inv_b2).collect();
        assert!(two.windows(2).all(|w| w[1] > w[0]));
        let three: Vec<f64> = [5, 7, 9, 11, 13].iter().map(|&n| inv_b2_exact(3, n).unwrap().inv_b2).collect();
        assert!(three.windows(2).all(|w| w[1] > w[0]));
        let steps: Vec<f64> = three.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(steps.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn size_limit() {
        assert!(matches!(inv_b2_exact(6, 100), Err(Error::SizeLimit(_))));
        assert!(inv_b2_exact(0, 5).is_err());
        assert!(inv_b2_exact(2, 1).is_err());
    }

    #[test]
    fn consistency_identity() {
        for (d, n) in [(2, 3), (2, 11), (3, 5), (3, 7)] {
            let nv = (n as f64).powi(d as i32);
            assert!((consistency_sum(d, n).unwrap() - (1.0 - 1.0 / nv)).abs() < 1e-12);
        }
    }

    #[test]
    fn asymptotic_two_dimensional_form() {
        // (2/pi) ln 961 + (8/pi^2)(2 - K) + (2/pi) ln(8/pi^2)
        let r = inv_b2_asymptotic(2, Some(31)).unwrap();
        assert!((r.inv_b2 - 5.117271739933186).abs() < 1e-12);
        assert_eq!(r.breakdown.len(), 2);
        assert!(inv_b2_asymptotic(1, Some(31)).is_err());
        assert!(inv_b2_asymptotic(2, None).is_err());
    }

    #[test]
    fn asymptotic_three_dimensional_constant() {
        let r = inv_b2_asymptotic(3, Some(21)).unwrap();
        assert!((r.inv_b2 - 3.0327721183039555).abs() < 1e-8);
        assert!((1.0 / r.inv_b2 - 0.33).abs() < 0.005);
        let q = inv_b2_quadrature(3, None).unwrap();
        assert!((q.inv_b2 - r.inv_b2).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_four_dimensions_approaches_exact() {
        let a = inv_b2_asymptotic(4, Some(15)).unwrap().inv_b2;
        let e = inv_b2_exact(4, 15).unwrap().inv_b2;
        assert!(((a - e) / e).abs() < 0.05, "{a} vs {e}");
    }

    #[test]
    fn quadrature_tracks_exact_sum() {
        for (d, n) in [(2, 31), (3, 11)] {
            let q = inv_b2_quadrature(d, Some(n)).unwrap().inv_b2;
            let e = inv_b2_exact(d, n).unwrap().inv_b2;
            assert!(((q - e) / e).abs() < 0.1, "d={d} n={n}: {q} vs {e}");
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::ExactSum, Method::Asymptotic, Method::Quadrature] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("fourier".parse::<Method>().is_err());
    }

    #[test]
    fn nu_identities_reduced() {
        for (d, n) in [(2, 11), (3, 5)] {
            let l = LatticeConfig::new(d, n).unwrap();
            let nu = nu_state(&l).unwrap();
            let nv = l.num_vertices() as f64;
            assert_eq!(nu.coeffs[0], Complex64::new(0.0, 0.0));
            let norm: f64 = nu.coeffs.iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            let exact = inv_b2_exact(d, n).unwrap();
            assert!((nu.b - exact.b()).abs() < 1e-10);
            let sv = nu.overlap_sv(&l);
            assert!((sv - Complex64::new(nu.b * (1.0 - 1.0 / nv), 0.0)).norm() < 1e-12);
            let u0 = overlap_nu_u0sv(&l, &nu);
            assert!((u0 + Complex64::new(nu.b * (1.0 - 1.0 / nv), 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn nu_full_space_residual() {
        let l = LatticeConfig::with_marked(2, 11, vec![3, 8]).unwrap();
        let nu = nu_state(&l).unwrap();
        let modes = fourier::modes(&l).unwrap();
        let walk = Walk::new(l.clone());
        let state = nu.full_state(&l, &modes).unwrap();
        let nv = l.num_vertices() as f64;
        assert!((state.norm() - 1.0).abs() < 1e-12);
        assert!(walk.make_phi0().inner(&state).norm() < 1e-12);
        let sv = walk.make_sv().inner(&state);
        assert!((sv - Complex64::new(nu.b * (1.0 - 1.0 / nv), 0.0)).norm() < 1e-12);

        let mut r = walk.apply_u1(&state).unwrap().sub(&state);
        r.axpy(Complex64::new(2.0 * nu.b * (1.0 - 1.0 / nv) / nv.sqrt(), 0.0), &walk.make_phi0());
        let expect = 2.0 * nu.b / nv * (1.0 - 1.0 / nv).sqrt();
        assert!((r.norm() - expect).abs() < 1e-10, "{} vs {expect}", r.norm());
        assert!(r.norm() <= 3.0 * nu.b / nv);
    }

    #[test]
    fn nu_needs_odd_side() {
        assert!(nu_state(&LatticeConfig::new(2, 4).unwrap()).is_err());
    }
}
