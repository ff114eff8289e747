//! Eigenproblem of a unitary diagonal-plus-rank-one matrix
//! `M = D (1 + beta c c^*)`, with `D = diag(e^{i theta_a})`, `|c| = 1` and
//! `beta = e^{i pi lambda} - 1`.
//!
//! Diagonal entries sharing a phase are merged into one pole of weight
//! `W_g = sum |c_a|^2`; each pole of multiplicity `r` keeps `r - 1`
//! eigenvectors orthogonal to `c` at its own phase. The remaining
//! eigenphases solve
//!
//! ```text
//! sum_g W_g cot((omega - p_g) / 2) = cot(pi lambda / 2)
//! ```
//!
//! whose left side falls from +inf to -inf between neighbouring poles on
//! the circle, so each gap holds exactly one root. The eigenvector of a
//! root has components `e^{i theta_a} c_a / (e^{i omega} - e^{i theta_a})`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::dense::{wrap_phase, UnitaryEigen};

/// Diagonal phases closer than this are treated as one pole.
pub const CLUSTER_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone)]
struct Cluster {
    phase: f64,
    members: Vec<usize>,
    weight: f64,
}

fn clusters(phases: &[f64], coeffs: &[Complex64]) -> Vec<Cluster> {
    let wrapped: Vec<f64> = phases.iter().map(|&p| wrap_phase(p)).collect();
    let mut order: Vec<usize> = (0..phases.len()).collect();
    order.sort_by(|&a, &b| wrapped[a].total_cmp(&wrapped[b]).then(a.cmp(&b)));
    let mut out: Vec<Cluster> = Vec::new();
    for idx in order {
        let p = wrapped[idx];
        match out.last_mut() {
            Some(c) if p - c.phase <= CLUSTER_TOL => c.members.push(idx),
            _ => out.push(Cluster { phase: p, members: vec![idx], weight: 0.0 }),
        }
    }
    // phases straddling -pi / pi
    if out.len() > 1 {
        let first = out[0].phase;
        let last = out[out.len() - 1].phase;
        if first + 2.0 * PI - last <= CLUSTER_TOL {
            let tail = out.pop().expect("len > 1");
            out[0].members.extend(tail.members);
        }
    }
    for c in &mut out {
        c.weight = c.members.iter().map(|&a| coeffs[a].norm_sqr()).sum();
    }
    out
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    /// Secular root between two neighbouring poles.
    Root,
    /// `slot`-th deflated eigenvector of cluster `cluster`.
    Deflated { cluster: usize, slot: usize },
}

#[derive(Debug, Clone, Copy)]
struct Item {
    phase: f64,
    kind: Kind,
}

struct Spectrum {
    clusters: Vec<Cluster>,
    items: Vec<Item>,
}

fn spectrum(phases: &[f64], coeffs: &[Complex64], lambda: f64) -> Spectrum {
    assert_eq!(phases.len(), coeffs.len(), "phases and coefficients differ in length");
    let clusters = clusters(phases, coeffs);
    let half = 0.5 * PI * lambda;
    let unperturbed = half.sin() == 0.0;
    let mut items = Vec::with_capacity(phases.len());
    let mut poles = Vec::new();
    for (ci, c) in clusters.iter().enumerate() {
        let is_pole = c.weight > 0.0 && !unperturbed;
        let slots = c.members.len() - usize::from(is_pole);
        for slot in 0..slots {
            items.push(Item { phase: c.phase, kind: Kind::Deflated { cluster: ci, slot } });
        }
        if is_pole {
            poles.push((c.phase, c.weight));
        }
    }
    if !poles.is_empty() {
        let kappa = half.cos() / half.sin();
        for omega in secular_roots(&poles, kappa) {
            items.push(Item { phase: omega, kind: Kind::Root });
        }
    }
    items.sort_by(|a, b| a.phase.total_cmp(&b.phase));
    Spectrum { clusters, items }
}

/// Roots of `sum_g W_g cot((omega - p_g)/2) = kappa`, one per gap between
/// consecutive poles (sorted ascending in (-pi, pi]). Returned wrapped.
pub fn secular_roots(poles: &[(f64, f64)], kappa: f64) -> Vec<f64> {
    let g = poles.len();
    let mut out = Vec::with_capacity(g);
    for i in 0..g {
        let lo = poles[i].0;
        let hi = if i + 1 < g { poles[i + 1].0 } else { poles[0].0 + 2.0 * PI };
        // cot((omega - p)/2) has period 2 pi in omega, so raw offsets suffice
        let offsets: Vec<(f64, f64)> = poles.iter().map(|&(p, w)| (lo - p, w)).collect();
        let f = |x: f64| -> f64 { offsets.iter().map(|&(d, w)| w / (0.5 * (x + d)).tan()).sum::<f64>() - kappa };
        let (mut a, mut b) = (0.0, hi - lo);
        loop {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if f(mid) > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        out.push(wrap_phase(lo + 0.5 * (a + b)));
    }
    out
}

/// All eigenphases in (-pi, pi], ascending.
pub fn eigenphases(phases: &[f64], coeffs: &[Complex64], lambda: f64) -> Vec<f64> {
    spectrum(phases, coeffs, lambda).items.into_iter().map(|it| it.phase).collect()
}

/// Normalised eigenvector for a secular root `omega`.
pub fn root_eigenvector(phases: &[f64], coeffs: &[Complex64], omega: f64) -> Vec<Complex64> {
    // e^{i t} c / (e^{i w} - e^{i t}) = c e^{i (t - w)/2} / (2i sin((w - t)/2))
    let mut v: Vec<Complex64> = phases
        .iter()
        .zip(coeffs)
        .map(|(&t, &c)| {
            let s = (0.5 * (omega - t)).sin();
            c * Complex64::from_polar(1.0, 0.5 * (t - omega)) / Complex64::new(0.0, 2.0 * s)
        })
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

/// Orthonormal basis of the complement of `c` inside the cluster, from the
/// trailing columns of a Householder reflector taking `c` to `e_1`.
fn cluster_complement(cluster: &Cluster, coeffs: &[Complex64], dim: usize) -> Vec<Vec<Complex64>> {
    let r = cluster.members.len();
    let local: Vec<Complex64> = cluster.members.iter().map(|&a| coeffs[a]).collect();
    let norm = cluster.weight.sqrt();
    let basis_cols: Vec<Vec<Complex64>> = if norm == 0.0 {
        (0..r).map(|j| (0..r).map(|i| if i == j { Complex64::new(1.0, 0.0) } else { ZERO }).collect()).collect()
    } else {
        let e: Vec<Complex64> = local.iter().map(|z| z / norm).collect();
        let phase = if e[0].norm() > 0.0 { e[0] / e[0].norm() } else { Complex64::new(1.0, 0.0) };
        let mut u = e.clone();
        u[0] += phase;
        let uu: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        // H = I - 2 u u^* / (u^* u); columns 1..r span e^perp
        (1..r)
            .map(|j| {
                (0..r)
                    .map(|i| {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        Complex64::new(delta, 0.0) - 2.0 * u[i] * u[j].conj() / uu
                    })
                    .collect()
            })
            .collect()
    };
    basis_cols
        .into_iter()
        .map(|col| {
            let mut full = vec![ZERO; dim];
            for (&a, z) in cluster.members.iter().zip(col) {
                full[a] = z;
            }
            full
        })
        .collect()
}

fn materialise(sp: &Spectrum, phases: &[f64], coeffs: &[Complex64], picked: &[Item]) -> Vec<Vec<Complex64>> {
    let dim = phases.len();
    let mut complements: Vec<Option<Vec<Vec<Complex64>>>> = vec![None; sp.clusters.len()];
    picked
        .iter()
        .map(|it| match it.kind {
            Kind::Root => root_eigenvector(phases, coeffs, it.phase),
            Kind::Deflated { cluster, slot } => {
                let basis =
                    complements[cluster].get_or_insert_with(|| cluster_complement(&sp.clusters[cluster], coeffs, dim));
                basis[slot].clone()
            }
        })
        .collect()
}

/// Full eigendecomposition, eigenphases ascending.
pub fn decompose(phases: &[f64], coeffs: &[Complex64], lambda: f64) -> UnitaryEigen {
    let sp = spectrum(phases, coeffs, lambda);
    let vecs = materialise(&sp, phases, coeffs, &sp.items);
    let dim = phases.len();
    let vectors = DMatrix::from_fn(dim, dim, |i, j| vecs[j][i]);
    let values = sp.items.iter().map(|it| Complex64::from_polar(1.0, it.phase)).collect();
    UnitaryEigen { values, vectors }
}

/// The `count` eigenpairs whose phases lie closest to `target` on the
/// circle, ordered by phase.
pub fn nearest_eigenpairs(
    phases: &[f64],
    coeffs: &[Complex64],
    lambda: f64,
    target: f64,
    count: usize,
) -> Vec<(f64, Vec<Complex64>)> {
    let sp = spectrum(phases, coeffs, lambda);
    let mut picked = sp.items.clone();
    picked.sort_by(|a, b| {
        let da = wrap_phase(a.phase - target).abs();
        let db = wrap_phase(b.phase - target).abs();
        da.total_cmp(&db)
    });
    picked.truncate(count);
    picked.sort_by(|a, b| a.phase.total_cmp(&b.phase));
    let vecs = materialise(&sp, phases, coeffs, &picked);
    picked.iter().map(|it| it.phase).zip(vecs).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{unitarity_defect, unitary_eigen};

    fn dense(phases: &[f64], coeffs: &[Complex64], lambda: f64) -> DMatrix<Complex64> {
        let beta = Complex64::from_polar(1.0, PI * lambda) - 1.0;
        DMatrix::from_fn(phases.len(), phases.len(), |a, b| {
            let delta = if a == b { 1.0 } else { 0.0 };
            Complex64::from_polar(1.0, phases[a]) * (delta + beta * coeffs[a] * coeffs[b].conj())
        })
    }

    fn sample() -> (Vec<f64>, Vec<Complex64>) {
        // includes a triple and a double degeneracy and a phase at pi
        let phases = vec![0.0, 0.4, -0.4, 0.4, 1.3, -1.3, 0.4, PI, 2.0, -2.0];
        let raw: Vec<Complex64> =
            (0..phases.len()).map(|i| Complex64::from_polar(0.5 + 0.1 * i as f64, 0.7 * i as f64)).collect();
        let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        (phases, raw.iter().map(|z| z / norm).collect())
    }

    fn sorted_dense_phases(m: &DMatrix<Complex64>) -> Vec<f64> {
        let mut ph = unitary_eigen(m).unwrap().phases();
        ph.sort_by(f64::total_cmp);
        ph
    }

    fn circle_match(a: &[f64], b: &[f64]) -> f64 {
        // greedy nearest matching on the unit circle
        let mut used = vec![false; b.len()];
        let mut worst: f64 = 0.0;
        for &x in a {
            let (j, d) = b
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, &y)| (j, (Complex64::from_polar(1.0, x) - Complex64::from_polar(1.0, y)).norm()))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .unwrap();
            used[j] = true;
            worst = worst.max(d);
        }
        worst
    }

    #[test]
    fn matches_dense_solver() {
        let (phases, coeffs) = sample();
        for lambda in [0.0, 0.3, 1.0, 1.7, 2.0] {
            let ours = eigenphases(&phases, &coeffs, lambda);
            let reference = sorted_dense_phases(&dense(&phases, &coeffs, lambda));
            assert_eq!(ours.len(), phases.len());
            assert!(circle_match(&ours, &reference) < 1e-10, "lambda = {lambda}");
        }
    }

    #[test]
    fn decomposition_reconstructs() {
        let (phases, coeffs) = sample();
        for lambda in [0.5, 1.0, 1.5] {
            let m = dense(&phases, &coeffs, lambda);
            let e = decompose(&phases, &coeffs, lambda);
            assert!(e.residual(&m) < 1e-10);
            assert!(unitarity_defect(&e.vectors) < 1e-10);
        }
    }

    #[test]
    fn single_pole_closed_form() {
        // M = e^{i p} e^{i pi lambda} on a 1-d space
        let e = eigenphases(&[0.3], &[Complex64::new(1.0, 0.0)], 0.5);
        assert!((e[0] - (0.3 + 0.5 * PI)).abs() < 1e-14);
    }

    #[test]
    fn nearest_pairs_are_eigenvectors() {
        let (phases, coeffs) = sample();
        let m = dense(&phases, &coeffs, 1.0);
        for (ph, v) in nearest_eigenpairs(&phases, &coeffs, 1.0, 0.4, 4) {
            let x = nalgebra::DVector::from_vec(v);
            let r = &m * &x - &x * Complex64::from_polar(1.0, ph);
            assert!(r.norm() < 1e-10);
            assert!((x.norm() - 1.0).abs() < 1e-12);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn problem() -> impl Strategy<Value = (Vec<f64>, Vec<Complex64>, f64)> {
            (2usize..24)
                .prop_flat_map(|m| {
                    (
                        // a coarse phase grid produces repeated poles
                        prop::collection::vec((-8i32..=8).prop_map(|j| j as f64 * PI / 8.0), m),
                        prop::collection::vec((0.05f64..1.0, -PI..PI), m),
                        0.0f64..2.0,
                    )
                })
                .prop_map(|(phases, polar, lambda)| {
                    let raw: Vec<Complex64> = polar.iter().map(|&(r, t)| Complex64::from_polar(r, t)).collect();
                    let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    let phases = phases.into_iter().map(wrap_phase).collect();
                    (phases, raw.into_iter().map(|z| z / norm).collect(), lambda)
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn secular_spectrum_matches_dense((phases, coeffs, lambda) in problem()) {
                let m = dense(&phases, &coeffs, lambda);
                let ours = eigenphases(&phases, &coeffs, lambda);
                prop_assert_eq!(ours.len(), phases.len());
                prop_assert!(circle_match(&ours, &sorted_dense_phases(&m)) < 1e-9);
                let e = decompose(&phases, &coeffs, lambda);
                prop_assert!(e.residual(&m) < 1e-9);
            }
        }
    }
}
