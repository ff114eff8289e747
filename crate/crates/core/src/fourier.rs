//! Fourier-mode decomposition of the free walk.
//!
//! On the plane wave `X_k(x) = prod_i alpha^{k_i x_i} / sqrt(n)`,
//! `alpha = e^{2 pi i / n}`, the free walk acts as a 2d x 2d coin block
//! `B_k`. For `k != 0` exactly two of its eigenvectors overlap the uniform
//! coin state `|s>`, with eigenvalues `e^{+-i theta_k}`; together with
//! `phi_0 = |s> (x) X_0` they span the reduced space of dimension 2N - 1.
//!
//! Reduced-space coordinates are ordered `phi_0, (k_1,+), (k_1,-), (k_2,+), ...`
//! with the nonzero modes `k` in flat vertex order.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::dense::unitary_eigen;
use crate::error::{invalid, Error, Result};
use crate::lattice::LatticeConfig;
use crate::secular;
use crate::walk::StateVector;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `cos(2 pi j / n)` for `j` in `0..n`, with `table[j] == table[n - j]` bitwise.
pub fn cos_table(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n];
    for j in 0..=n / 2 {
        let c = (2.0 * PI * j as f64 / n as f64).cos();
        t[j] = c;
        t[(n - j) % n] = c;
    }
    t
}

/// `alpha^p` for `p` in `0..n`.
pub fn root_table(n: usize) -> Vec<Complex64> {
    (0..n).map(|p| Complex64::from_polar(1.0, 2.0 * PI * p as f64 / n as f64)).collect()
}

/// Sum of `table[k_i]` in ascending order of the terms, so that modes
/// related by a lattice symmetry get bitwise identical sums.
pub(crate) fn cos_sum(table: &[f64], k: &[usize]) -> f64 {
    let mut terms: Vec<f64> = k.iter().map(|&ki| table[ki]).collect();
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

fn check_mode(lattice: &LatticeConfig, k: &[usize]) -> Result<()> {
    if k.len() != lattice.dim() || k.iter().any(|&ki| ki >= lattice.side()) {
        return Err(invalid(format!(
            "mode {k:?} is not a vector of {} components in [0, {}]",
            lattice.dim(),
            lattice.side() - 1
        )));
    }
    Ok(())
}

/// `theta_k = arccos((1/d) sum_i cos(2 pi k_i / n))` in `[0, pi]`.
pub fn theta(lattice: &LatticeConfig, k: &[usize]) -> Result<f64> {
    check_mode(lattice, k)?;
    if k.iter().all(|&ki| ki == 0) {
        return Err(invalid("k = 0 is the uniform mode phi_0 and has no theta_k"));
    }
    let table = cos_table(lattice.side());
    Ok(theta_from_table(&table, k))
}

fn theta_from_table(table: &[f64], k: &[usize]) -> f64 {
    (cos_sum(table, k) / k.len() as f64).clamp(-1.0, 1.0).acos()
}

/// Coin index of direction `i+` / `i-` (0-based axis `i`).
#[inline]
pub fn dir_plus(axis: usize) -> usize {
    2 * axis
}

#[inline]
pub fn dir_minus(axis: usize) -> usize {
    2 * axis + 1
}

/// The 2d x 2d block with `U0 (u (x) X_k) = (B_k u) (x) X_k`.
pub fn mode_block(lattice: &LatticeConfig, k: &[usize]) -> Result<DMatrix<Complex64>> {
    check_mode(lattice, k)?;
    let nd = lattice.num_directions();
    let roots = root_table(lattice.side());
    let n = lattice.side();
    let coin = DMatrix::from_fn(nd, nd, |r, c| {
        let v = 1.0 / lattice.dim() as f64 - if r == c { 1.0 } else { 0.0 };
        Complex64::new(v, 0.0)
    });
    // shift: (i+) <- alpha^{k_i} (i-), (i-) <- alpha^{-k_i} (i+)
    let mut shift = DMatrix::from_element(nd, nd, ZERO);
    for (axis, &ki) in k.iter().enumerate() {
        shift[(dir_plus(axis), dir_minus(axis))] = roots[ki % n];
        shift[(dir_minus(axis), dir_plus(axis))] = roots[(n - ki % n) % n];
    }
    Ok(shift * coin)
}

/// Eigenvectors of `B_k` for `e^{+i theta_k}` and `e^{-i theta_k}`, each
/// with the gauge `<s|u> = 1/sqrt(2)` real and positive.
pub fn coin_eigenvectors(lattice: &LatticeConfig, k: &[usize]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let th = theta(lattice, k)?;
    if th < 1e-12 || PI - th < 1e-12 {
        return Err(Error::Degenerate(format!("theta_k = {th} for k = {k:?}: the e^(+-i theta) pair coincides")));
    }
    let block = mode_block(lattice, k)?;
    let eig = unitary_eigen(&block)?;
    let nd = lattice.num_directions();
    let s = 1.0 / (nd as f64).sqrt();
    let pick = |target: Complex64| -> Result<Vec<Complex64>> {
        let (j, dist) = eig
            .values
            .iter()
            .enumerate()
            .map(|(j, z)| (j, (z - target).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty block");
        if dist > 1e-8 {
            return Err(Error::Diagnostic(format!(
                "B_k for k = {k:?} has no eigenvalue near {target} (closest {dist:.2e})"
            )));
        }
        let u = eig.vector(j);
        let overlap: Complex64 = u.iter().sum::<Complex64>() * s;
        if (overlap.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() > 1e-10 {
            return Err(Error::Diagnostic(format!("|<s|u>| = {} for k = {k:?}, expected 1/sqrt(2)", overlap.norm())));
        }
        let gauge = overlap.conj() / overlap.norm();
        Ok(u.iter().map(|z| z * gauge).collect())
    };
    Ok((pick(Complex64::from_polar(1.0, th))?, pick(Complex64::from_polar(1.0, -th))?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeData {
    pub k: Vec<usize>,
    pub theta: f64,
    pub u_plus: Vec<Complex64>,
    pub u_minus: Vec<Complex64>,
    /// `<phi_k^+-|sv> = alpha^{-k.v} / sqrt(2N)`; identical for both signs.
    pub c_k: Complex64,
}

fn ensure_odd(lattice: &LatticeConfig) -> Result<()> {
    if lattice.side().is_multiple_of(2) {
        return Err(Error::Degenerate(format!(
            "n = {} is even: some theta_k equal pi; spectral features need odd n",
            lattice.side()
        )));
    }
    Ok(())
}

/// `alpha^{-k.v} / sqrt(2N)`.
fn sv_coefficient(lattice: &LatticeConfig, roots: &[Complex64], k: &[usize]) -> Complex64 {
    let n = lattice.side();
    let kv: usize = k.iter().zip(lattice.marked()).map(|(a, b)| a * b).sum::<usize>() % n;
    roots[(n - kv) % n] / (2.0 * lattice.num_vertices() as f64).sqrt()
}

/// Mode data for every `k != 0`, in flat order. Requires odd `n`.
pub fn modes(lattice: &LatticeConfig) -> Result<Vec<ModeData>> {
    ensure_odd(lattice)?;
    let table = cos_table(lattice.side());
    let roots = root_table(lattice.side());
    (1..lattice.num_vertices())
        .into_par_iter()
        .map(|idx| {
            let k = lattice.coords(idx);
            let (u_plus, u_minus) = coin_eigenvectors(lattice, &k)?;
            Ok(ModeData {
                theta: theta_from_table(&table, &k),
                c_k: sv_coefficient(lattice, &roots, &k),
                k,
                u_plus,
                u_minus,
            })
        })
        .collect()
}

/// Eigenphases of the free walk on the reduced basis: `0, +theta_k, -theta_k, ...`.
pub fn reduced_phases(lattice: &LatticeConfig) -> Vec<f64> {
    let table = cos_table(lattice.side());
    let mut out = Vec::with_capacity(2 * lattice.num_vertices() - 1);
    out.push(0.0);
    for idx in 1..lattice.num_vertices() {
        let th = theta_from_table(&table, &lattice.coords(idx));
        out.push(th);
        out.push(-th);
    }
    out
}

/// Expansion coefficients of `|sv>` on the reduced basis: `1/sqrt(N)` on
/// `phi_0` and `alpha^{-k.v}/sqrt(2N)` on each `phi_k^+-`.
pub fn sv_coefficients(lattice: &LatticeConfig) -> Vec<Complex64> {
    let roots = root_table(lattice.side());
    let nv = lattice.num_vertices();
    let mut out = Vec::with_capacity(2 * nv - 1);
    out.push(Complex64::new(1.0 / (nv as f64).sqrt(), 0.0));
    for idx in 1..nv {
        let c = sv_coefficient(lattice, &roots, &lattice.coords(idx));
        out.push(c);
        out.push(c);
    }
    out
}

/// `U_lambda` restricted to the reduced space, stored implicitly as
/// `M = D (1 + (e^{i pi lambda} - 1) c c^*)` with `D = diag(e^{i theta_a})`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedMatrix {
    pub phases: Vec<f64>,
    pub coeffs: Vec<Complex64>,
    pub lambda: f64,
}

impl ReducedMatrix {
    pub fn from_parts(phases: Vec<f64>, coeffs: Vec<Complex64>, lambda: f64) -> Result<Self> {
        if phases.len() != coeffs.len() || phases.is_empty() {
            return Err(invalid("phases and coefficients must be non-empty and of equal length"));
        }
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(invalid(format!("coefficient vector has squared norm {norm}, expected 1")));
        }
        Ok(Self { phases, coeffs, lambda })
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    fn perturbation(&self) -> Complex64 {
        Complex64::from_polar(1.0, PI * self.lambda) - 1.0
    }

    pub fn dense(&self) -> DMatrix<Complex64> {
        let beta = self.perturbation();
        DMatrix::from_fn(self.dim(), self.dim(), |a, b| {
            let delta = if a == b { 1.0 } else { 0.0 };
            Complex64::from_polar(1.0, self.phases[a]) * (delta + beta * self.coeffs[a] * self.coeffs[b].conj())
        })
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim());
        let proj: Complex64 = self.coeffs.iter().zip(x).map(|(c, xi)| c.conj() * xi).sum();
        let beta = self.perturbation() * proj;
        self.phases
            .iter()
            .zip(x)
            .zip(&self.coeffs)
            .map(|((&th, &xi), &c)| Complex64::from_polar(1.0, th) * (xi + beta * c))
            .collect()
    }

    /// Eigenphases in (-pi, pi], ascending, from the secular equation.
    pub fn eigenphases(&self) -> Vec<f64> {
        secular::eigenphases(&self.phases, &self.coeffs, self.lambda)
    }
}

/// Reduced `U_lambda` for the lattice's marked vertex. Requires odd `n`.
pub fn reduced_u_lambda(lattice: &LatticeConfig, lambda: f64) -> Result<ReducedMatrix> {
    ensure_odd(lattice)?;
    ReducedMatrix::from_parts(reduced_phases(lattice), sv_coefficients(lattice), lambda)
}

/// In-place unitary lattice Fourier transform of one vertex plane:
/// `out(y) = N^{-1/2} sum_x in(x) alpha^{sign k.x}` applied axis by axis.
pub fn lattice_dft(lattice: &LatticeConfig, data: &mut [Complex64], sign: i32) {
    let n = lattice.side();
    assert_eq!(data.len(), lattice.num_vertices());
    let roots = root_table(n);
    let scale = 1.0 / (n as f64).sqrt();
    let mut line = vec![ZERO; n];
    for axis in 0..lattice.dim() {
        let stride = lattice.stride(axis);
        let block = n * stride;
        for start in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                let base = start + inner;
                for (j, l) in line.iter_mut().enumerate() {
                    *l = data[base + j * stride];
                }
                for m in 0..n {
                    let mut acc = ZERO;
                    for (j, l) in line.iter().enumerate() {
                        let p = (m * j) % n;
                        let r = if sign >= 0 { roots[p] } else { roots[(n - p) % n] };
                        acc += l * r;
                    }
                    data[base + m * stride] = acc * scale;
                }
            }
        }
    }
}

/// Full-space vector `sum_a coeffs[a] phi_a` for reduced coordinates `coeffs`.
pub fn reduced_to_full(lattice: &LatticeConfig, modes: &[ModeData], coeffs: &[Complex64]) -> Result<StateVector> {
    let nv = lattice.num_vertices();
    let nd = lattice.num_directions();
    if coeffs.len() != 2 * nv - 1 || modes.len() != nv - 1 {
        return Err(invalid("reduced coordinates do not match the lattice"));
    }
    let s = 1.0 / (nd as f64).sqrt();
    let mut amps = vec![ZERO; nd * nv];
    for (c, plane) in amps.chunks_exact_mut(nv).enumerate() {
        plane[0] = coeffs[0] * s;
        for (m, mode) in modes.iter().enumerate() {
            plane[m + 1] = coeffs[2 * m + 1] * mode.u_plus[c] + coeffs[2 * m + 2] * mode.u_minus[c];
        }
        lattice_dft(lattice, plane, 1);
    }
    Ok(StateVector::from_amplitudes(amps))
}

/// Reduced coordinates `<phi_a|psi>` of a full-space state.
pub fn full_to_reduced(lattice: &LatticeConfig, modes: &[ModeData], psi: &StateVector) -> Result<Vec<Complex64>> {
    let nv = lattice.num_vertices();
    let nd = lattice.num_directions();
    if psi.len() != nd * nv || modes.len() != nv - 1 {
        return Err(invalid("state does not match the lattice"));
    }
    let s = 1.0 / (nd as f64).sqrt();
    let mut out = vec![ZERO; 2 * nv - 1];
    for (c, plane) in psi.amplitudes().chunks_exact(nv).enumerate() {
        let mut hat = plane.to_vec();
        lattice_dft(lattice, &mut hat, -1);
        out[0] += hat[0] * s;
        for (m, mode) in modes.iter().enumerate() {
            out[2 * m + 1] += mode.u_plus[c].conj() * hat[m + 1];
            out[2 * m + 2] += mode.u_minus[c].conj() * hat[m + 1];
        }
    }
    Ok(out)
}

/// `u (x) X_k` as a full-space state.
pub fn mode_state(lattice: &LatticeConfig, k: &[usize], u: &[Complex64]) -> Result<StateVector> {
    check_mode(lattice, k)?;
    let nv = lattice.num_vertices();
    let n = lattice.side();
    let roots = root_table(n);
    let scale = 1.0 / (nv as f64).sqrt();
    let plane: Vec<Complex64> = (0..nv)
        .map(|x| {
            let kx: usize = lattice.coords(x).iter().zip(k).map(|(a, b)| a * b).sum::<usize>() % n;
            roots[kx] * scale
        })
        .collect();
    let mut amps = Vec::with_capacity(nv * u.len());
    for &uc in u {
        amps.extend(plane.iter().map(|p| p * uc));
    }
    Ok(StateVector::from_amplitudes(amps))
}
