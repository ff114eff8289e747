//! Two-level model of the search on `span{phi_0, nu_1}`.
//!
//! To leading order `U_1` acts there as `[[1, -eps], [eps, 1]] = e^{-iH}` with
//! `eps = 2b/sqrt(N)` and `H = [[0, -i eps], [i eps, 0]]`. Starting from
//! `phi_0` the state rotates as `(cos eps t, sin eps t)` and reaches `nu_1`
//! after `T = pi / (2 eps) = pi sqrt(N) / (4b)` steps.

use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{invalid, Result};
use crate::fourier;
use crate::lattice::LatticeConfig;
use crate::localized::{self, Method, NuState};
use crate::walk::Walk;

pub type Matrix2 = [[Complex64; 2]; 2];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveModel {
    pub b: f64,
    pub num_vertices: usize,
    pub epsilon: f64,
    /// Gap at the avoided crossing, `2 eps`.
    pub delta: f64,
    pub t_real: f64,
    pub t_steps: usize,
    pub u2x2: Matrix2,
}

/// Nearest integer, half-integers rounding up.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

pub fn build_model(b: f64, num_vertices: usize) -> Result<EffectiveModel> {
    if !(b > 0.0 && b <= 1.0) {
        return Err(invalid(format!("b = {b} must lie in (0, 1]")));
    }
    if num_vertices < 2 {
        return Err(invalid("the lattice needs at least two vertices"));
    }
    let epsilon = 2.0 * b / (num_vertices as f64).sqrt();
    let t_real = PI / (2.0 * epsilon);
    Ok(EffectiveModel {
        b,
        num_vertices,
        epsilon,
        delta: 2.0 * epsilon,
        t_real,
        t_steps: round_half_up(t_real),
        u2x2: [[c(1.0, 0.0), c(-epsilon, 0.0)], [c(epsilon, 0.0), c(1.0, 0.0)]],
    })
}

impl EffectiveModel {
    pub fn hamiltonian(&self) -> Matrix2 {
        let e = self.epsilon;
        [[c(0.0, 0.0), c(0.0, -e)], [c(0.0, e), c(0.0, 0.0)]]
    }

    /// Eigenpairs of `H`, ascending: `-eps` on `(1, -i)/sqrt 2`, `+eps` on `(1, i)/sqrt 2`.
    pub fn eigenpairs(&self) -> [(f64, [Complex64; 2]); 2] {
        let s = FRAC_1_SQRT_2;
        [(-self.epsilon, [c(s, 0.0), c(0.0, -s)]), (self.epsilon, [c(s, 0.0), c(0.0, s)])]
    }

    /// `e^{-iHt} (1, 0) = (cos eps t, sin eps t)`.
    pub fn rotation_at(&self, t: f64) -> [Complex64; 2] {
        let (s, co) = (self.epsilon * t).sin_cos();
        [c(co, 0.0), c(s, 0.0)]
    }

    pub fn rotation_trajectory(&self, t_max: usize) -> Vec<[Complex64; 2]> {
        (0..=t_max).map(|t| self.rotation_at(t as f64)).collect()
    }
}

/// Model built from `b` by the chosen method.
pub fn predict(d: usize, n: usize, method: Method) -> Result<EffectiveModel> {
    let norm = localized::inv_b2(d, n, method)?;
    let nv = (n as f64).powi(d as i32);
    if nv > usize::MAX as f64 {
        return Err(invalid("lattice too large"));
    }
    build_model(norm.b(), nv as usize)
}

/// Predicted number of search steps, `round(pi sqrt(N) / (4b))`.
pub fn search_time(d: usize, n: usize, method: Method) -> Result<usize> {
    Ok(predict(d, n, method)?.t_steps)
}

/// Matrix of `U_1` on `(phi_0, nu_1)`: entry `[i][j] = <e_i|U_1|e_j>`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredElements {
    pub matrix: Matrix2,
    pub b: f64,
    pub num_vertices: usize,
}

/// Measures the four matrix elements by full-space inner products.
pub fn matrix_elements(lattice: &LatticeConfig) -> Result<MeasuredElements> {
    let nu: NuState = localized::nu_state(lattice)?;
    let modes = fourier::modes(lattice)?;
    let walk = Walk::new(lattice.clone());
    let basis = [walk.make_phi0(), nu.full_state(lattice, &modes)?];
    let images = [walk.apply_u1(&basis[0])?, walk.apply_u1(&basis[1])?];
    let mut matrix = [[c(0.0, 0.0); 2]; 2];
    for (i, bra) in basis.iter().enumerate() {
        for (j, ket) in images.iter().enumerate() {
            matrix[i][j] = bra.inner(ket);
        }
    }
    Ok(MeasuredElements { matrix, b: nu.b, num_vertices: lattice.num_vertices() })
}

/// Leading-order values `1 - 2/N`, `-2b/sqrt N`, `(2b/sqrt N)(1 - 1/N)`, `1`.
pub fn leading_order_elements(b: f64, num_vertices: usize) -> Matrix2 {
    let nv = num_vertices as f64;
    let e = 2.0 * b / nv.sqrt();
    [[c(1.0 - 2.0 / nv, 0.0), c(-e, 0.0)], [c(e * (1.0 - 1.0 / nv), 0.0), c(1.0, 0.0)]]
}

pub fn max_entry_difference(a: &Matrix2, b: &Matrix2) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

impl MeasuredElements {
    /// `N max |measured - model|` against the two-level model `u2x2`.
    pub fn model_deviation_constant(&self) -> Result<f64> {
        let model = build_model(self.b, self.num_vertices)?;
        Ok(self.num_vertices as f64 * max_entry_difference(&self.matrix, &model.u2x2))
    }
}
