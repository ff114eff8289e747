//! Eigenphases of `U_lambda` on the reduced space across a range of `lambda`,
//! and the avoided crossing at `lambda = 1`, `omega = 0`.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::str::FromStr;

use crate::dense::{unitary_eigen, wrap_phase};
use crate::error::{invalid, Error, Result};
use crate::fourier::{self, ReducedMatrix};
use crate::lattice::LatticeConfig;
use crate::localized;
use crate::secular;

/// Default window and resolution around the crossing.
pub const DEFAULT_LAMBDA_MIN: f64 = 0.8;
pub const DEFAULT_LAMBDA_MAX: f64 = 1.2;
pub const DEFAULT_POINTS: usize = 81;

/// Default reduced dimension limit, `2 * 21^2 - 1`.
pub const DEFAULT_MAX_DIM: usize = 881;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// Roots of the secular equation of the diagonal-plus-rank-one form.
    Secular,
    /// Dense Schur decomposition of the assembled matrix.
    Dense,
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "secular" => Ok(Solver::Secular),
            "dense" => Ok(Solver::Dense),
            other => Err(invalid(format!("unknown solver '{other}' (expected secular or dense)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub solver: Solver,
    pub max_dim: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { solver: Solver::Secular, max_dim: DEFAULT_MAX_DIM }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub lambdas: Vec<f64>,
    /// Sorted eigenphases in (-pi, pi] for each lambda.
    pub phases: Vec<Vec<f64>>,
    /// `branches[s][j]`: curve index of `phases[s][j]`.
    pub branches: Vec<Vec<usize>>,
    /// Splitting of the two eigenphases nearest 0 at `lambda = 1`.
    pub gap: f64,
    /// `4b/sqrt(N)` with the exact-sum `b`.
    pub gap_model: f64,
    pub subspace_overlap: f64,
}

impl ScanResult {
    /// Phase of curve `branch` at grid point `s`.
    pub fn branch_phase(&self, s: usize, branch: usize) -> f64 {
        let j = self.branches[s].iter().position(|&b| b == branch).expect("valid branch");
        self.phases[s][j]
    }
}

fn check_dim(lattice: &LatticeConfig, max_dim: usize) -> Result<()> {
    let dim = 2 * lattice.num_vertices() - 1;
    if dim > max_dim {
        return Err(Error::SizeLimit(format!(
            "reduced dimension {dim} exceeds the scan limit {max_dim}; use the walk simulation for larger lattices"
        )));
    }
    Ok(())
}

/// Sorted eigenphases of the reduced `U_lambda`.
pub fn eigenphases_at(matrix: &ReducedMatrix, solver: Solver) -> Result<Vec<f64>> {
    match solver {
        Solver::Secular => Ok(matrix.eigenphases()),
        Solver::Dense => {
            let dense = matrix.dense();
            let eig = unitary_eigen(&dense)?;
            let residual = eig.residual(&dense);
            if residual > 1e-8 {
                return Err(Error::Diagnostic(format!("dense eigensolve residual {residual:.2e}")));
            }
            // -1 can come back as -pi + tiny
            let mut ph: Vec<f64> = eig.phases().into_iter().map(|p| if p < -PI + 1e-12 { PI } else { p }).collect();
            ph.sort_by(f64::total_cmp);
            Ok(ph)
        }
    }
}

/// The two eigenphases nearest 0, ascending.
fn nearest_pair(phases: &[f64]) -> Result<(f64, f64)> {
    let mut near: Vec<f64> = phases.to_vec();
    near.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    if near.len() < 2 {
        return Err(Error::Diagnostic("fewer than two eigenphases".into()));
    }
    Ok((near[0].min(near[1]), near[0].max(near[1])))
}

/// Splitting of the two eigenphases nearest 0.
pub fn gap_near_zero(phases: &[f64]) -> Result<f64> {
    let (a, b) = nearest_pair(phases)?;
    Ok(b - a)
}

/// Branch labels for `next` that continue the labels of `prev`.
///
/// A rank-one perturbation moves all eigenphases the same way, so between
/// nearby `lambda` the sorted lists differ by a cyclic shift (curves
/// passing through `pi`); the shift with the least total phase motion wins.
fn track(prev: &[f64], prev_labels: &[usize], next: &[f64]) -> Vec<usize> {
    let m = prev.len();
    let cost = |shift: isize| -> f64 {
        (0..m)
            .map(|j| {
                let k = (j as isize + shift).rem_euclid(m as isize) as usize;
                wrap_phase(next[k] - prev[j]).abs()
            })
            .sum()
    };
    let shift = (-2isize..=2).min_by(|&a, &b| cost(a).total_cmp(&cost(b)).then(a.abs().cmp(&b.abs()))).unwrap_or(0);
    let mut labels = vec![0; m];
    for (j, &label) in prev_labels.iter().enumerate() {
        let k = (j as isize + shift).rem_euclid(m as isize) as usize;
        labels[k] = label;
    }
    labels
}

/// Eigenphases over `points` equally spaced values in `[lambda_min, lambda_max]`.
pub fn scan(
    lattice: &LatticeConfig,
    lambda_min: f64,
    lambda_max: f64,
    points: usize,
    options: ScanOptions,
) -> Result<ScanResult> {
    if points < 2 {
        return Err(invalid("a scan needs at least two points"));
    }
    if !(lambda_min.is_finite() && lambda_max.is_finite() && lambda_min < lambda_max) {
        return Err(invalid(format!("invalid lambda window [{lambda_min}, {lambda_max}]")));
    }
    check_dim(lattice, options.max_dim)?;
    let base = fourier::reduced_u_lambda(lattice, 0.0)?;
    let lambdas: Vec<f64> =
        (0..points).map(|s| lambda_min + (lambda_max - lambda_min) * s as f64 / (points - 1) as f64).collect();
    let phases = lambdas
        .par_iter()
        .map(|&lambda| {
            let m = ReducedMatrix { lambda, ..base.clone() };
            eigenphases_at(&m, options.solver)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut branches = Vec::with_capacity(points);
    branches.push((0..phases[0].len()).collect::<Vec<_>>());
    for s in 1..points {
        let labels = track(&phases[s - 1], &branches[s - 1], &phases[s]);
        branches.push(labels);
    }

    let at_one = eigenphases_at(&ReducedMatrix { lambda: 1.0, ..base.clone() }, options.solver)?;
    let gap = gap_near_zero(&at_one)?;
    let b = localized::inv_b2_exact(lattice.dim(), lattice.side())?.b();
    let gap_model = 4.0 * b / (lattice.num_vertices() as f64).sqrt();
    let subspace_overlap = crossing_subspace_overlap_with(lattice, options)?;
    Ok(ScanResult { lambdas, phases, branches, gap, gap_model, subspace_overlap })
}

/// Eigenpairs of the reduced `U_1` nearest phase 0.
fn crossing_pair(lattice: &LatticeConfig, options: ScanOptions) -> Result<Vec<(f64, Vec<Complex64>)>> {
    check_dim(lattice, options.max_dim)?;
    let m = fourier::reduced_u_lambda(lattice, 1.0)?;
    let pairs = match options.solver {
        Solver::Secular => secular::nearest_eigenpairs(&m.phases, &m.coeffs, 1.0, 0.0, 2),
        Solver::Dense => {
            let eig = unitary_eigen(&m.dense())?;
            let mut idx: Vec<usize> = (0..m.dim()).collect();
            let ph = eig.phases();
            idx.sort_by(|&a, &b| ph[a].abs().total_cmp(&ph[b].abs()));
            idx.truncate(2);
            idx.sort_by(|&a, &b| ph[a].total_cmp(&ph[b]));
            idx.into_iter().map(|j| (ph[j], eig.vector(j).iter().copied().collect())).collect()
        }
    };
    // the crossing pair must be split off from the rest of the spectrum
    let theta_min = m.phases.iter().skip(1).map(|p| p.abs()).fold(f64::INFINITY, f64::min);
    let near = pairs.iter().filter(|(w, _)| w.abs() < theta_min).count();
    if near < 2 {
        return Err(Error::Diagnostic(format!(
            "only {near} eigenphases of U_1 lie inside the smallest free phase {theta_min:.4}"
        )));
    }
    Ok(pairs)
}

/// `(1/2) sum_{i,j} |<x_i|y_j>|^2` for orthonormal pairs: 1 for equal spans.
pub fn subspace_overlap(x: &[Vec<Complex64>], y: &[Vec<Complex64>]) -> f64 {
    let mut total = 0.0;
    for xi in x {
        for yj in y {
            let ip: Complex64 = xi.iter().zip(yj).map(|(a, b)| a.conj() * b).sum();
            total += ip.norm_sqr();
        }
    }
    total / x.len().max(1) as f64
}

/// Overlap of the two crossing eigenvectors of `U_1` with `span{phi_0, nu_1}`.
pub fn crossing_subspace_overlap(lattice: &LatticeConfig) -> Result<f64> {
    crossing_subspace_overlap_with(lattice, ScanOptions::default())
}

pub fn crossing_subspace_overlap_with(lattice: &LatticeConfig, options: ScanOptions) -> Result<f64> {
    let pairs = crossing_pair(lattice, options)?;
    let nu = localized::nu_state(lattice)?;
    let mut phi0 = vec![Complex64::new(0.0, 0.0); nu.coeffs.len()];
    phi0[0] = Complex64::new(1.0, 0.0);
    let exact: Vec<Vec<Complex64>> = pairs.into_iter().map(|(_, v)| v).collect();
    Ok(subspace_overlap(&exact, &[phi0, nu.coeffs]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(d: usize, n: usize) -> LatticeConfig {
        LatticeConfig::new(d, n).unwrap()
    }

    #[test]
    fn unperturbed_spectrum_is_free_phases() {
        let l = lat(2, 7);
        let r = scan(&l, 0.0, 0.1, 2, ScanOptions::default()).unwrap();
        let mut want = fourier::reduced_phases(&l);
        want.sort_by(f64::total_cmp);
        assert_eq!(r.phases[0].len(), 97);
        for (a, b) in r.phases[0].iter().zip(&want) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn secular_and_dense_agree() {
        let l = lat(2, 7);
        let s = scan(&l, 0.9, 1.1, 5, ScanOptions::default()).unwrap();
        let d = scan(&l, 0.9, 1.1, 5, ScanOptions { solver: Solver::Dense, ..Default::default() }).unwrap();
        for (a, b) in s.phases.iter().flatten().zip(d.phases.iter().flatten()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((s.gap - d.gap).abs() < 1e-10);
        assert!((s.subspace_overlap - d.subspace_overlap).abs() < 1e-9);
    }

    #[test]
    fn phases_in_range_and_counted() {
        let l = lat(2, 5);
        let r = scan(&l, 0.0, 2.0, 21, ScanOptions::default()).unwrap();
        for ph in &r.phases {
            assert_eq!(ph.len(), 49);
            assert!(ph.iter().all(|&p| p > -PI && p <= PI));
        }
        for labels in &r.branches {
            let mut sorted = labels.clone();
            sorted.sort();
            assert_eq!(sorted, (0..49).collect::<Vec<_>>());
        }
    }

    #[test]
    fn tracked_curves_are_continuous() {
        let l = lat(2, 11);
        let r = scan(&l, 0.8, 1.2, 81, ScanOptions::default()).unwrap();
        let step_bound = 0.2;
        for s in 1..r.lambdas.len() {
            for branch in 0..r.phases[0].len() {
                let jump = wrap_phase(r.branch_phase(s, branch) - r.branch_phase(s - 1, branch)).abs();
                assert!(jump < step_bound, "branch {branch} jumps by {jump} at step {s}");
            }
        }
    }

    #[test]
    fn avoided_crossing_near_one() {
        let l = lat(2, 11);
        let r = scan(&l, 0.9, 1.1, 41, ScanOptions::default()).unwrap();
        let ratio = r.gap / r.gap_model;
        assert!((0.9..=1.1).contains(&ratio), "{ratio}");
        let gaps: Vec<f64> = r.phases.iter().map(|p| gap_near_zero(p).unwrap()).collect();
        let argmin = (0..gaps.len()).min_by(|&a, &b| gaps[a].total_cmp(&gaps[b])).unwrap();
        assert!((r.lambdas[argmin] - 1.0).abs() <= 0.02, "minimum at {}", r.lambdas[argmin]);
        // no curve passes through 0 close to the crossing
        let window: Vec<usize> = (0..r.lambdas.len()).filter(|&s| (r.lambdas[s] - 1.0).abs() <= 0.01).collect();
        let centre = r.lambdas.iter().position(|&x| (x - 1.0).abs() < 1e-12).unwrap();
        for branch in (0..r.phases[0].len()).filter(|&b| r.branch_phase(centre, b).abs() < 0.5) {
            let signs: Vec<bool> = window.iter().map(|&s| r.branch_phase(s, branch) > 0.0).collect();
            assert!(signs.windows(2).all(|w| w[0] == w[1]), "branch {branch} crosses 0");
        }
        assert!(r.subspace_overlap >= 0.9, "{}", r.subspace_overlap);
    }

    #[test]
    fn overlap_grows_with_side_in_three_dimensions() {
        let opts = ScanOptions { max_dim: 2000, ..Default::default() };
        let o: Vec<f64> =
            [5, 7, 9].iter().map(|&n| crossing_subspace_overlap_with(&lat(3, n), opts).unwrap()).collect();
        assert!(o.windows(2).all(|w| w[1] > w[0]), "{o:?}");
    }

    #[test]
    fn overlap_is_gauge_independent() {
        let a = vec![
            vec![Complex64::new(0.6, 0.0), Complex64::new(0.8, 0.0), Complex64::new(0.0, 0.0)],
            vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        ];
        let b = vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
            vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.6), Complex64::new(0.0, 0.8)],
        ];
        let twisted: Vec<Vec<Complex64>> = b
            .iter()
            .enumerate()
            .map(|(j, v)| v.iter().map(|z| z * Complex64::from_polar(1.0, 0.7 + j as f64)).collect())
            .collect();
        assert!((subspace_overlap(&a, &b) - subspace_overlap(&a, &twisted)).abs() < 1e-15);
        assert!((subspace_overlap(&a, &a) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cap_and_parity_errors() {
        let big = lat(2, 23);
        assert!(matches!(scan(&big, 0.8, 1.2, 3, ScanOptions::default()), Err(Error::SizeLimit(_))));
        assert!(scan(&big, 0.8, 1.2, 3, ScanOptions { max_dim: 2000, ..Default::default() }).is_ok());
        assert!(scan(&lat(2, 6), 0.8, 1.2, 3, ScanOptions::default()).is_err());
        assert!(scan(&lat(2, 5), 0.8, 1.2, 1, ScanOptions::default()).is_err());
        assert!(scan(&lat(2, 5), 1.2, 0.8, 3, ScanOptions::default()).is_err());
    }
}
