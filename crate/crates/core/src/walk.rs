//! Matrix-free coined walk on the lattice.
//!
//! Amplitudes are stored direction-major: plane `c` holds the N vertex
//! amplitudes of coin direction `c`, with directions ordered
//! `1+, 1-, 2+, 2-, ...`. The moving shift is then a cyclic rotation of
//! each plane along a single axis.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::lattice::LatticeConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zeros(len: usize) -> Self {
        Self { amps: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Self {
        Self { amps }
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        assert_eq!(self.len(), other.len(), "inner product of mismatched states");
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scale(&mut self, s: Complex64) {
        self.amps.iter_mut().for_each(|a| *a *= s);
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: Complex64, other: &StateVector) {
        assert_eq!(self.len(), other.len(), "axpy of mismatched states");
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += s * b;
        }
    }

    pub fn sub(&self, other: &StateVector) -> StateVector {
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other);
        out
    }
}

/// Which walk operator to iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Operator {
    /// Unperturbed walk `U0 = S C`.
    Free,
    /// Search walk `U1 = U0 (1 - 2|sv><sv|)`.
    Search,
    /// Interpolation `U0 (1 + (e^{i pi lambda} - 1)|sv><sv|)`.
    Interpolated(f64),
}

impl Operator {
    fn oracle_factor(self) -> Option<Complex64> {
        match self {
            Operator::Free => None,
            Operator::Search => Some(Complex64::new(-2.0, 0.0)),
            Operator::Interpolated(lambda) => Some(Complex64::from_polar(1.0, PI * lambda) - 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub step: usize,
    /// Probability on the marked vertex, summed over all coin directions.
    pub p_target: f64,
    /// `|<sv|psi>|^2`.
    pub p_sv: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn p_target(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.p_target).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Walk {
    lattice: LatticeConfig,
}

impl Walk {
    pub fn new(lattice: LatticeConfig) -> Self {
        Self { lattice }
    }

    pub fn lattice(&self) -> &LatticeConfig {
        &self.lattice
    }

    fn check(&self, psi: &StateVector) -> Result<()> {
        if psi.len() != self.lattice.state_len() {
            return Err(invalid(format!(
                "state has {} amplitudes, lattice needs {}",
                psi.len(),
                self.lattice.state_len()
            )));
        }
        Ok(())
    }

    /// `|s> (x) |v>` for the lattice's marked vertex.
    pub fn make_sv(&self) -> StateVector {
        self.make_s_at(self.lattice.marked_index())
    }

    /// `|s> (x) |x>` for an arbitrary flat vertex index.
    pub fn make_s_at(&self, vertex: usize) -> StateVector {
        let nv = self.lattice.num_vertices();
        let nd = self.lattice.num_directions();
        let mut psi = StateVector::zeros(self.lattice.state_len());
        let amp = Complex64::new(1.0 / (nd as f64).sqrt(), 0.0);
        for c in 0..nd {
            psi.amps[c * nv + vertex] = amp;
        }
        psi
    }

    /// Uniform superposition `|s> (x) |X_0>`.
    pub fn make_phi0(&self) -> StateVector {
        let len = self.lattice.state_len();
        StateVector { amps: vec![Complex64::new(1.0 / (len as f64).sqrt(), 0.0); len] }
    }

    pub fn apply_coin(&self, psi: &StateVector) -> Result<StateVector> {
        self.check(psi)?;
        let mut out = psi.clone();
        self.coin_in_place(&mut out.amps);
        Ok(out)
    }

    pub fn apply_shift(&self, psi: &StateVector) -> Result<StateVector> {
        self.check(psi)?;
        let mut out = StateVector::zeros(psi.len());
        self.shift_into(&psi.amps, &mut out.amps);
        Ok(out)
    }

    pub fn apply(&self, op: Operator, psi: &StateVector) -> Result<StateVector> {
        self.check(psi)?;
        let mut work = psi.amps.clone();
        let mut out = vec![Complex64::new(0.0, 0.0); work.len()];
        self.step(op, &mut work, &mut out);
        Ok(StateVector { amps: out })
    }

    pub fn apply_u0(&self, psi: &StateVector) -> Result<StateVector> {
        self.apply(Operator::Free, psi)
    }

    pub fn apply_u1(&self, psi: &StateVector) -> Result<StateVector> {
        self.apply(Operator::Search, psi)
    }

    pub fn apply_u_lambda(&self, psi: &StateVector, lambda: f64) -> Result<StateVector> {
        self.apply(Operator::Interpolated(lambda), psi)
    }

    /// One step of `op`. `work` is clobbered; the result lands in `out`.
    fn step(&self, op: Operator, work: &mut [Complex64], out: &mut [Complex64]) {
        if let Some(factor) = op.oracle_factor() {
            self.oracle_in_place(work, factor);
        }
        self.coin_in_place(work);
        self.shift_into(work, out);
    }

    /// `psi += factor * |sv><sv|psi>`.
    fn oracle_in_place(&self, amps: &mut [Complex64], factor: Complex64) {
        let nv = self.lattice.num_vertices();
        let nd = self.lattice.num_directions();
        let v = self.lattice.marked_index();
        let sum: Complex64 = (0..nd).map(|c| amps[c * nv + v]).sum();
        if sum == Complex64::new(0.0, 0.0) {
            return;
        }
        // <s|a> |s> has components sum / 2d
        let delta = factor * sum / nd as f64;
        for c in 0..nd {
            amps[c * nv + v] += delta;
        }
    }

    fn coin_in_place(&self, amps: &mut [Complex64]) {
        let nv = self.lattice.num_vertices();
        let nd = self.lattice.num_directions();
        let inv_d = 1.0 / self.lattice.dim() as f64;
        for x in 0..nv {
            let sum: Complex64 = (0..nd).map(|c| amps[c * nv + x]).sum();
            let mean2 = sum * inv_d;
            for c in 0..nd {
                let a = &mut amps[c * nv + x];
                *a = mean2 - *a;
            }
        }
    }

    /// (i+, x) -> (i-, x + e_i) and (i-, x) -> (i+, x - e_i). An involution.
    fn shift_into(&self, src: &[Complex64], dst: &mut [Complex64]) {
        let nv = self.lattice.num_vertices();
        for axis in 0..self.lattice.dim() {
            let plus = &src[(2 * axis) * nv..(2 * axis + 1) * nv];
            let minus = &src[(2 * axis + 1) * nv..(2 * axis + 2) * nv];
            let (dplus, dminus) = dst[(2 * axis) * nv..(2 * axis + 2) * nv].split_at_mut(nv);
            self.rotate_axis(plus, dminus, axis, 1);
            self.rotate_axis(minus, dplus, axis, self.lattice.side() - 1);
        }
    }

    /// `dst[x + by * e_axis] = src[x]` with periodic wrap.
    fn rotate_axis(&self, src: &[Complex64], dst: &mut [Complex64], axis: usize, by: usize) {
        let n = self.lattice.side();
        let stride = self.lattice.stride(axis);
        let block = n * stride;
        for (sblock, dblock) in src.chunks_exact(block).zip(dst.chunks_exact_mut(block)) {
            for j in 0..n {
                let jd = (j + by) % n;
                dblock[jd * stride..(jd + 1) * stride].copy_from_slice(&sblock[j * stride..(j + 1) * stride]);
            }
        }
    }

    fn probabilities(&self, amps: &[Complex64]) -> (f64, f64) {
        let nv = self.lattice.num_vertices();
        let nd = self.lattice.num_directions();
        let v = self.lattice.marked_index();
        let mut p_target = 0.0;
        let mut sum = Complex64::new(0.0, 0.0);
        for c in 0..nd {
            let a = amps[c * nv + v];
            p_target += a.norm_sqr();
            sum += a;
        }
        (p_target, sum.norm_sqr() / nd as f64)
    }

    /// Iterate `op` from `psi0`, recording the marked-vertex probabilities
    /// before the first step and after every step.
    pub fn evolve(&self, psi0: &StateVector, op: Operator, steps: usize) -> Result<Trajectory> {
        self.evolve_with(psi0, op, steps, |_, _| {}).map(|(t, _)| t)
    }

    /// Like [`evolve`](Self::evolve), calling `visit(t, state)` at every
    /// recorded step. Returns the final state as well.
    pub fn evolve_with<F>(
        &self,
        psi0: &StateVector,
        op: Operator,
        steps: usize,
        mut visit: F,
    ) -> Result<(Trajectory, StateVector)>
    where
        F: FnMut(usize, &StateVector),
    {
        self.check(psi0)?;
        let mut cur = psi0.clone();
        let mut next = StateVector::zeros(cur.len());
        let mut points = Vec::with_capacity(steps + 1);
        for t in 0..=steps {
            let (p_target, p_sv) = self.probabilities(&cur.amps);
            points.push(TrajectoryPoint { step: t, p_target, p_sv });
            visit(t, &cur);
            if t < steps {
                self.step(op, &mut cur.amps, &mut next.amps);
                std::mem::swap(&mut cur, &mut next);
            }
        }
        Ok((Trajectory { points }, cur))
    }

    /// Per-vertex probability summed over coin directions, in flat vertex order.
    pub fn snapshot(&self, psi: &StateVector) -> Result<Vec<f64>> {
        self.check(psi)?;
        let nv = self.lattice.num_vertices();
        let mut grid = vec![0.0; nv];
        for plane in psi.amps.chunks_exact(nv) {
            for (g, a) in grid.iter_mut().zip(plane) {
                *g += a.norm_sqr();
            }
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub step: usize,
    pub p_target: f64,
}

/// Maximum of the first localisation hump of `p_target`.
///
/// Only samples above ten times the initial probability qualify. The hump
/// ends at the first sample that drops below half of the best qualifying
/// value seen so far; the best sample up to there is returned, earliest
/// step on ties. Search walks oscillate with period two on top of the
/// slow rotation, so a plain first-local-maximum rule stops early.
pub fn find_peak(traj: &Trajectory) -> crate::error::Result<Peak> {
    use crate::error::Error;
    let first = traj.points.first().ok_or_else(|| Error::NoPeak("empty trajectory".into()))?;
    let threshold = 10.0 * first.p_target;
    let mut best: Option<Peak> = None;
    let mut closed = false;
    for pt in &traj.points {
        if let Some(b) = best {
            if pt.p_target < 0.5 * b.p_target {
                closed = true;
                break;
            }
        }
        if pt.p_target > threshold && best.is_none_or(|b| pt.p_target > b.p_target) {
            best = Some(Peak { step: pt.step, p_target: pt.p_target });
        }
    }
    match best {
        Some(b) if closed || b.step < traj.points.last().map_or(0, |p| p.step) => Ok(b),
        Some(b) => {
            Err(Error::NoPeak(format!("p_target still rising at the last step {} ({:.3e})", b.step, b.p_target)))
        }
        None => Err(Error::NoPeak(format!("p_target never exceeds 10x its initial value {:.3e}", first.p_target))),
    }
}
