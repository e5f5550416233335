//! Dense state-vector simulation of the rotating-frame Ising dynamics.
//!
//! Qubit `q` is bit `q` of the amplitude index; bit value 0 is the ground state.

use crate::density::DensityMatrix;
use crate::device::DeviceGraph;
use crate::error::{Error, Result};
use crate::gate::{eigenvector, expm_hermitian2, Basis, Gate, Mat2, Outcome};
use crate::policy::{MeasurementRecord, OutcomePolicy};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::io::{Read, Write};

pub const MAX_DENSE_QUBITS: usize = 24;
pub const MAX_REDUCED_QUBITS: usize = 6;
const PAR_THRESHOLD: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalState {
    Ground,
    Excited,
    Plus,
    Minus,
    PlusI,
    MinusI,
}

impl LocalState {
    pub fn amplitudes(self) -> [C64; 2] {
        match self {
            LocalState::Ground => eigenvector(Basis::Z, Outcome::Minus),
            LocalState::Excited => eigenvector(Basis::Z, Outcome::Plus),
            LocalState::Plus => eigenvector(Basis::X, Outcome::Plus),
            LocalState::Minus => eigenvector(Basis::X, Outcome::Minus),
            LocalState::PlusI => eigenvector(Basis::Y, Outcome::Plus),
            LocalState::MinusI => eigenvector(Basis::Y, Outcome::Minus),
        }
    }
}

/// Piecewise-constant resonant drive on one qubit.
///
/// The driven qubit sees `(λ/2) Â^θ` on top of the diagonal Ising terms, in a
/// drive frame detuned from the qubit frame by `frame_shift`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrivePulse {
    pub qubit: usize,
    pub lambda: f64,
    pub theta: f64,
    pub duration: f64,
    #[serde(default)]
    pub frame_shift: f64,
}

impl DrivePulse {
    /// Rotation by `angle` about the equatorial axis at phase `theta`, with
    /// duration `angle / λ`.
    pub fn rotation(qubit: usize, lambda: f64, theta: f64, angle: f64) -> Result<Self> {
        if !(lambda > 0.0) || angle < 0.0 {
            return Err(Error::InvalidParameter(format!("drive needs λ > 0 and angle >= 0, got {lambda}, {angle}")));
        }
        Ok(DrivePulse { qubit, lambda, theta, duration: angle / lambda, frame_shift: 0.0 })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.duration >= 0.0 && self.lambda.is_finite() && self.duration.is_finite()) {
            return Err(Error::InvalidParameter(format!("drive needs λ >= 0 and duration >= 0, got {self:?}")));
        }
        Ok(())
    }
}

/// Diagonal energy of every basis configuration:
/// `E(x) = Σ_edges g x_a x_b + Σ_q h_q x_q` with `h` from [`DeviceGraph::linear_terms`].
pub fn diagonal_energies(graph: &DeviceGraph) -> Vec<f64> {
    let n = graph.num_qubits();
    let lin = graph.linear_terms();
    let mut e = vec![0.0; 1usize << n];
    for idx in 1..e.len() {
        let b = idx.trailing_zeros() as usize;
        let rest = idx & (idx - 1);
        let mut v = e[rest] + lin[b];
        for &(j, g) in graph.neighbors(b) {
            if rest >> j & 1 == 1 {
                v += g;
            }
        }
        e[idx] = v;
    }
    e
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_DENSE_QUBITS {
        return Err(Error::TooManyQubits { got: n, max: MAX_DENSE_QUBITS });
    }
    Ok(())
}

impl StateVector {
    pub fn ground(n: usize) -> Result<Self> {
        check_size(n)?;
        let mut amps = vec![C64::new(0.0, 0.0); 1usize << n];
        amps[0] = C64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<C64>) -> Result<Self> {
        check_size(n)?;
        if amps.len() != 1usize << n {
            return Err(Error::DimensionMismatch(1usize << n, amps.len()));
        }
        let mut s = StateVector { n, amps };
        let norm = s.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        s.scale(1.0 / norm);
        Ok(s)
    }

    /// Tensor product of single-qubit states, `locals[q]` on qubit `q`.
    pub fn product(locals: &[[C64; 2]]) -> Result<Self> {
        let n = locals.len();
        check_size(n)?;
        let mut amps = vec![C64::new(1.0, 0.0)];
        for (q, l) in locals.iter().enumerate() {
            let mut next = vec![C64::new(0.0, 0.0); amps.len() * 2];
            next[..amps.len()].iter_mut().zip(&amps).for_each(|(d, a)| *d = a * l[0]);
            next[amps.len()..].iter_mut().zip(&amps).for_each(|(d, a)| *d = a * l[1]);
            amps = next;
            debug_assert_eq!(amps.len(), 1 << (q + 1));
        }
        StateVector::from_amplitudes(n, amps)
    }

    pub fn init_product_state(graph: &DeviceGraph, assignment: &BTreeMap<usize, LocalState>) -> Result<Self> {
        let n = graph.num_qubits();
        if let Some(&q) = assignment.keys().find(|&&q| q >= n) {
            return Err(Error::QubitOutOfRange(q));
        }
        let locals = (0..n)
            .map(|q| {
                assignment
                    .get(&q)
                    .map(|s| s.amplitudes())
                    .ok_or_else(|| Error::InvalidParameter(format!("no initial state for qubit {q}")))
            })
            .collect::<Result<Vec<_>>>()?;
        StateVector::product(&locals)
    }

    /// Gaussian-random normalized state (uniform on the unit sphere).
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Result<Self> {
        check_size(n)?;
        let amps = (0..1usize << n)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        StateVector::from_amplitudes(n, amps)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn scale(&mut self, s: f64) {
        self.amps.iter_mut().for_each(|a| *a *= s);
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q < self.n {
            Ok(())
        } else {
            Err(Error::QubitOutOfRange(q))
        }
    }

    fn check_graph(&self, graph: &DeviceGraph) -> Result<()> {
        if graph.num_qubits() != self.n {
            return Err(Error::DimensionMismatch(self.n, graph.num_qubits()));
        }
        Ok(())
    }

    /// Embed into a larger register: this state on the low qubits, the rest ground.
    pub fn extend_ground(&self, n: usize) -> Result<Self> {
        check_size(n)?;
        if n < self.n {
            return Err(Error::DimensionMismatch(self.n, n));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1usize << n];
        amps[..self.amps.len()].copy_from_slice(&self.amps);
        Ok(StateVector { n, amps })
    }

    /// Multiply amplitude `i` by `e^{-i E_i t}`.
    pub fn apply_diagonal_phases(&mut self, energies: &[f64], t: f64) -> Result<()> {
        if energies.len() != self.amps.len() {
            return Err(Error::DimensionMismatch(self.amps.len(), energies.len()));
        }
        let kick = |(a, &e): (&mut C64, &f64)| *a *= C64::from_polar(1.0, -e * t);
        if self.amps.len() >= PAR_THRESHOLD {
            self.amps.par_iter_mut().zip(energies.par_iter()).for_each(kick);
        } else {
            self.amps.iter_mut().zip(energies.iter()).for_each(kick);
        }
        Ok(())
    }

    /// Free evolution under the diagonal Ising Hamiltonian; exact.
    pub fn evolve_diagonal(&mut self, graph: &DeviceGraph, duration: f64) -> Result<()> {
        self.check_graph(graph)?;
        if duration < 0.0 {
            return Err(Error::InvalidParameter(format!("negative duration {duration}")));
        }
        self.apply_diagonal_phases(&diagonal_energies(graph), duration)
    }

    /// Evolution with one driven qubit, exact by block decomposition: every
    /// configuration of the other qubits leaves the driven qubit a 2×2 problem.
    pub fn evolve_driven(&mut self, graph: &DeviceGraph, pulse: &DrivePulse) -> Result<()> {
        self.check_graph(graph)?;
        self.check_qubit(pulse.qubit)?;
        pulse.validate()?;
        let energies = diagonal_energies(graph);
        let bit = 1usize << pulse.qubit;
        let half = C64::from_polar(0.5 * pulse.lambda, -pulse.theta);
        let t = pulse.duration;
        for i0 in (0..self.amps.len()).filter(|i| i & bit == 0) {
            let i1 = i0 | bit;
            let (e0, e1) = (energies[i0], energies[i1]);
            let h: Mat2 = [[C64::new(0.0, 0.0), half], [half.conj(), C64::new(e1 - e0 - pulse.frame_shift, 0.0)]];
            let u = expm_hermitian2(&h, t);
            let phase = C64::from_polar(1.0, -e0 * t);
            let (a0, a1) = (self.amps[i0], self.amps[i1]);
            self.amps[i0] = phase * (u[0][0] * a0 + u[0][1] * a1);
            self.amps[i1] = phase * (u[1][0] * a0 + u[1][1] * a1);
        }
        Ok(())
    }

    pub fn apply_matrix(&mut self, q: usize, m: &Mat2) -> Result<()> {
        self.check_qubit(q)?;
        let bit = 1usize << q;
        for i0 in (0..self.amps.len()).filter(|i| i & bit == 0) {
            let i1 = i0 | bit;
            let (a0, a1) = (self.amps[i0], self.amps[i1]);
            self.amps[i0] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[i1] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(())
    }

    /// Idealized instantaneous single-qubit gate.
    pub fn apply_instant_gate(&mut self, q: usize, gate: Gate) -> Result<()> {
        self.apply_matrix(q, &gate.matrix())
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        let mask = (1usize << a) | (1usize << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
        Ok(())
    }

    fn projected_overlaps(&self, q: usize, v: [C64; 2]) -> impl Iterator<Item = (usize, C64)> + '_ {
        let bit = 1usize << q;
        (0..self.amps.len())
            .filter(move |i| i & bit == 0)
            .map(move |i0| (i0, v[0].conj() * self.amps[i0] + v[1].conj() * self.amps[i0 | bit]))
    }

    /// Probability of `outcome` for a measurement of `q` in `basis`.
    pub fn probability(&self, q: usize, basis: Basis, outcome: Outcome) -> Result<f64> {
        self.check_qubit(q)?;
        Ok(self.projected_overlaps(q, eigenvector(basis, outcome)).map(|(_, o)| o.norm_sqr()).sum())
    }

    /// Projective measurement; the state collapses onto the chosen eigenvector.
    pub fn measure(&mut self, q: usize, basis: Basis, policy: &mut OutcomePolicy) -> Result<MeasurementRecord> {
        let p_plus = self.probability(q, basis, Outcome::Plus)?;
        let (outcome, probability) = policy.choose(q, p_plus)?;
        self.project(q, basis, outcome)?;
        Ok(MeasurementRecord { qubit: q, basis, outcome, probability })
    }

    /// Project onto the `outcome` eigenvector of `basis` on `q` and renormalize.
    pub fn project(&mut self, q: usize, basis: Basis, outcome: Outcome) -> Result<()> {
        self.check_qubit(q)?;
        let v = eigenvector(basis, outcome);
        let bit = 1usize << q;
        let overlaps: Vec<(usize, C64)> = self.projected_overlaps(q, v).collect();
        let p: f64 = overlaps.iter().map(|(_, o)| o.norm_sqr()).sum();
        if p < crate::policy::PROB_EPS {
            return Err(Error::ImpossibleOutcome { qubit: q, outcome: outcome.value() });
        }
        let s = 1.0 / p.sqrt();
        for (i0, o) in overlaps {
            self.amps[i0] = o * v[0] * s;
            self.amps[i0 | bit] = o * v[1] * s;
        }
        Ok(())
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨a|b⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Expectation of a Pauli string given as `(qubit, basis)` factors.
    pub fn pauli_expectation(&self, factors: &[(usize, Basis)]) -> Result<f64> {
        let mut moved = self.clone();
        for &(q, b) in factors {
            let g = match b {
                Basis::X => Gate::X,
                Basis::Y => Gate::Y,
                Basis::Z => Gate::Z,
            };
            moved.apply_instant_gate(q, g)?;
        }
        Ok(self.inner(&moved)?.re)
    }

    /// Probability that `q` is excited.
    pub fn excited_population(&self, q: usize) -> Result<f64> {
        self.probability(q, Basis::Z, Outcome::Plus)
    }

    /// Partial trace onto `keep`; `keep[k]` becomes bit `k` of the reduced index.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if keep.len() > MAX_REDUCED_QUBITS {
            return Err(Error::InvalidParameter(format!(
                "reduced state limited to {MAX_REDUCED_QUBITS} qubits, got {}",
                keep.len()
            )));
        }
        for (k, &q) in keep.iter().enumerate() {
            self.check_qubit(q)?;
            if keep[..k].contains(&q) {
                return Err(Error::InvalidParameter(format!("qubit {q} kept twice")));
            }
        }
        let kmask: usize = keep.iter().map(|&q| 1usize << q).sum();
        let dim = 1usize << keep.len();
        let local = |i: usize| keep.iter().enumerate().map(|(k, &q)| (i >> q & 1) << k).sum::<usize>();
        let spread = |r: usize| keep.iter().enumerate().map(|(k, &q)| (r >> k & 1) << q).sum::<usize>();
        let mut rho = nalgebra::DMatrix::<C64>::zeros(dim, dim);
        for i in 0..self.amps.len() {
            if self.amps[i].norm_sqr() == 0.0 {
                continue;
            }
            let env = i & !kmask;
            let ri = local(i);
            for rj in 0..dim {
                let j = env | spread(rj);
                rho[(ri, rj)] += self.amps[i] * self.amps[j].conj();
            }
        }
        DensityMatrix::from_matrix(keep.len(), rho)
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        let all: Vec<usize> = (0..self.n).collect();
        self.reduced_density(&all)
    }

    /// One dephasing interval: each qubit independently gets `Z` with
    /// probability `(1 - e^{-dt/T2}) / 2`.
    pub fn apply_dephasing<R: Rng>(&mut self, dt: f64, t2: f64, rng: &mut R) -> Result<usize> {
        if !(t2 > 0.0) || dt < 0.0 {
            return Err(Error::InvalidParameter(format!("dephasing needs T2 > 0 and dt >= 0, got {t2}, {dt}")));
        }
        let p = 0.5 * (1.0 - (-dt / t2).exp());
        let mut flips = 0;
        for q in 0..self.n {
            if rng.gen::<f64>() < p {
                self.apply_instant_gate(q, Gate::Z)?;
                flips += 1;
            }
        }
        Ok(flips)
    }

    /// Binary dump: qubit count as u64 LE, then `(re, im)` f64 LE pairs.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n as u64).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self> {
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        check_size(n)?;
        let mut amps = Vec::with_capacity(1usize << n);
        for _ in 0..1usize << n {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            amps.push(C64::new(re, f64::from_le_bytes(b8)));
        }
        Ok(StateVector { n, amps })
    }
}

/// `|+⟩` amplitudes, handy for building reference states.
pub const PLUS: [C64; 2] = [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)];
pub const GROUND: [C64; 2] = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{build_chain, Couplings};
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    const ZERO: C64 = C64::new(0.0, 0.0);

    fn chain3(g: f64) -> DeviceGraph {
        build_chain(2, &Couplings::Uniform(g)).unwrap()
    }

    /// Full Hamiltonian with one drive, as a dense matrix.
    fn dense_hamiltonian(graph: &DeviceGraph, pulse: &DrivePulse) -> DMatrix<C64> {
        let e = diagonal_energies(graph);
        let dim = e.len();
        let bit = 1 << pulse.qubit;
        let half = C64::from_polar(0.5 * pulse.lambda, -pulse.theta);
        DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                C64::new(e[i] - if i & bit != 0 { pulse.frame_shift } else { 0.0 }, 0.0)
            } else if i ^ j == bit {
                if i & bit == 0 {
                    half
                } else {
                    half.conj()
                }
            } else {
                ZERO
            }
        })
    }

    fn rk4(h: &DMatrix<C64>, psi: &[C64], t: f64, steps: usize) -> Vec<C64> {
        let dt = t / steps as f64;
        let mi = C64::new(0.0, -1.0);
        let f = |v: &nalgebra::DVector<C64>| (h * v) * mi;
        let mut v = nalgebra::DVector::from_column_slice(psi);
        for _ in 0..steps {
            let k1 = f(&v);
            let k2 = f(&(&v + &k1 * C64::new(dt / 2.0, 0.0)));
            let k3 = f(&(&v + &k2 * C64::new(dt / 2.0, 0.0)));
            let k4 = f(&(&v + &k3 * C64::new(dt, 0.0)));
            v += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0);
        }
        v.iter().copied().collect()
    }

    fn max_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn product_ordering() {
        let g = chain3(1.0);
        let assign = BTreeMap::from([(0, LocalState::Ground), (1, LocalState::Plus), (2, LocalState::Ground)]);
        let s = StateVector::init_product_state(&g, &assign).unwrap();
        let h = FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0] - h).norm() < 1e-15);
        assert!((s.amplitudes()[2] - h).norm() < 1e-15);
        let s = StateVector::product(&[LocalState::PlusI.amplitudes()]).unwrap();
        assert!((s.pauli_expectation(&[(0, Basis::Y)]).unwrap() - 1.0).abs() < 1e-15);
        assert!(StateVector::init_product_state(&g, &BTreeMap::new()).is_err());
    }

    #[test]
    fn zero_duration_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = StateVector::random(3, &mut rng).unwrap();
        let mut t = s.clone();
        t.evolve_diagonal(&chain3(1.3), 0.0).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn free_evolution_is_double_cz_on_three_chain() {
        let g = 0.8;
        let graph = chain3(g);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let mut s = StateVector::random(3, &mut rng).unwrap();
            let mut expected = s.clone();
            // brute-force 8×8 unitary: CZ_AB CZ_BC
            let u = DMatrix::from_fn(8, 8, |i, j| {
                if i != j {
                    return ZERO;
                }
                let (a, b, c) = (i & 1, i >> 1 & 1, i >> 2 & 1);
                C64::new(if (a & b) ^ (b & c) == 1 { -1.0 } else { 1.0 }, 0.0)
            });
            let v = &u * nalgebra::DVector::from_column_slice(expected.amplitudes());
            expected = StateVector::from_amplitudes(3, v.iter().copied().collect()).unwrap();
            s.evolve_diagonal(&graph, PI / g).unwrap();
            assert!((s.fidelity(&expected).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_phases_are_additive() {
        let graph = chain3(1.7);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = StateVector::random(3, &mut rng).unwrap();
        let mut a = s.clone();
        a.evolve_diagonal(&graph, 0.3).unwrap();
        a.evolve_diagonal(&graph, 0.9).unwrap();
        let mut b = s;
        b.evolve_diagonal(&graph, 1.2).unwrap();
        assert!(max_diff(a.amplitudes(), b.amplitudes()) < 1e-12);
    }

    #[test]
    fn ground_neighbor_decouples() {
        // A ground: B and C marginals independent of g_AB
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let bc = StateVector::random(2, &mut rng).unwrap();
        let locals_ac = bc.amplitudes().to_vec();
        let mut amps = vec![ZERO; 8];
        for (k, a) in locals_ac.iter().enumerate() {
            amps[k << 1] = *a;
        }
        let s = StateVector::from_amplitudes(3, amps).unwrap();
        let reduced = |g1: f64| {
            let graph = build_chain(2, &Couplings::PerEdge(vec![g1, 1.0])).unwrap();
            let mut t = s.clone();
            t.evolve_diagonal(&graph, 2.1).unwrap();
            t.reduced_density(&[1, 2]).unwrap()
        };
        assert!(reduced(0.5).trace_distance(&reduced(2.5)).unwrap() < 1e-12);
    }

    #[test]
    fn pi_half_pulse_resonant_when_neighbors_ground() {
        let lambda = 40.0;
        let graph = chain3(3.0);
        let mut s = StateVector::ground(3).unwrap();
        s.evolve_driven(&graph, &DrivePulse::rotation(1, lambda, FRAC_PI_2, FRAC_PI_2).unwrap()).unwrap();
        let expected = StateVector::product(&[GROUND, PLUS, GROUND]).unwrap();
        assert!((s.fidelity(&expected).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn excited_neighbors_give_gz_block() {
        let (g, lambda, t) = (1.1, 2.3, 0.7);
        let graph = chain3(g);
        let pulse = DrivePulse { qubit: 1, lambda, theta: FRAC_PI_2, duration: t, frame_shift: 0.0 };
        let mut s = StateVector::product(&[[ZERO, C64::new(1.0, 0.0)], GROUND, [ZERO, C64::new(1.0, 0.0)]]).unwrap();
        s.evolve_driven(&graph, &pulse).unwrap();
        // H_B = g Z + (λ/2) Y in the Hamiltonian's Z = 2n - 1, up to a constant
        let y = Gate::Y.matrix();
        let h: Mat2 = [[C64::new(-g, 0.0), y[0][1] * (lambda / 2.0)], [y[1][0] * (lambda / 2.0), C64::new(g, 0.0)]];
        let u = expm_hermitian2(&h, t);
        let expected = StateVector::product(&[[ZERO, C64::new(1.0, 0.0)], [u[0][0], u[1][0]], [ZERO, C64::new(1.0, 0.0)]])
            .unwrap();
        assert!((s.fidelity(&expected).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn driven_matches_rk4() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let graph = build_chain(2, &Couplings::PerEdge(vec![rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)]))
                .unwrap();
            let pulse = DrivePulse {
                qubit: rng.gen_range(0..3),
                lambda: rng.gen_range(0.5..4.0),
                theta: rng.gen_range(0.0..2.0 * PI),
                duration: rng.gen_range(0.1..1.5),
                frame_shift: rng.gen_range(-0.5..0.5),
            };
            let s = StateVector::random(3, &mut rng).unwrap();
            let mut exact = s.clone();
            exact.evolve_driven(&graph, &pulse).unwrap();
            let oracle = rk4(&dense_hamiltonian(&graph, &pulse), s.amplitudes(), pulse.duration, 4000);
            assert!(max_diff(exact.amplitudes(), &oracle) < 1e-9);
        }
    }

    #[test]
    fn driven_matches_dense_expm_up_to_four_qubits() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for m in [2usize] {
            let base = build_chain(m, &Couplings::Uniform(1.0)).unwrap();
            for n in 1..=4usize {
                let ids: Vec<usize> = (0..n.min(base.num_qubits())).collect();
                let sub = base.subgraph(&ids).unwrap().randomize_couplings(0.3, 3.0, &mut rng).unwrap();
                let pulse = DrivePulse {
                    qubit: rng.gen_range(0..sub.num_qubits()),
                    lambda: rng.gen_range(0.0..5.0),
                    theta: rng.gen_range(0.0..2.0 * PI),
                    duration: rng.gen_range(0.0..3.0),
                    frame_shift: 0.0,
                };
                let s = StateVector::random(sub.num_qubits(), &mut rng).unwrap();
                let mut exact = s.clone();
                exact.evolve_driven(&sub, &pulse).unwrap();
                let h = dense_hamiltonian(&sub, &pulse);
                let u = (h * C64::new(0.0, -pulse.duration)).exp();
                let v = u * nalgebra::DVector::from_column_slice(s.amplitudes());
                assert!(max_diff(exact.amplitudes(), v.as_slice()) < 1e-9);
            }
        }
        // 4 qubits with a node of degree 3
        let g4 = DeviceGraph::new(
            (0..4).map(|id| crate::device::Qubit { id, role: crate::device::QubitRole::Ancilla, omega: 0.0, pos: None }).collect(),
            vec![
                crate::device::Edge { a: 0, b: 1, g: 0.7 },
                crate::device::Edge { a: 0, b: 2, g: 1.9 },
                crate::device::Edge { a: 0, b: 3, g: 1.2 },
            ],
            BTreeMap::new(),
        )
        .unwrap()
        .assign_frame();
        for q in 0..4 {
            let pulse = DrivePulse { qubit: q, lambda: 2.2, theta: 0.4, duration: 1.3, frame_shift: 0.0 };
            let s = StateVector::random(4, &mut rng).unwrap();
            let mut exact = s.clone();
            exact.evolve_driven(&g4, &pulse).unwrap();
            let u = (dense_hamiltonian(&g4, &pulse) * C64::new(0.0, -pulse.duration)).exp();
            let v = u * nalgebra::DVector::from_column_slice(s.amplitudes());
            assert!(max_diff(exact.amplitudes(), v.as_slice()) < 1e-9);
        }
    }

    #[test]
    fn zero_rabi_drive_is_free_evolution() {
        let graph = chain3(1.4);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = StateVector::random(3, &mut rng).unwrap();
        let mut a = s.clone();
        a.evolve_driven(&graph, &DrivePulse { qubit: 1, lambda: 0.0, theta: 0.3, duration: 0.9, frame_shift: 0.0 })
            .unwrap();
        let mut b = s;
        b.evolve_diagonal(&graph, 0.9).unwrap();
        assert!(max_diff(a.amplitudes(), b.amplitudes()) < 1e-12);
    }

    #[test]
    fn strong_drive_approaches_instant_gate() {
        let graph = chain3(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = StateVector::random(3, &mut rng).unwrap();
        let mut driven = s.clone();
        // θ = π rotates about -X: Â^π = -X, so exp(-i(λt/2)(-X)) = Rx(-λt)
        driven.evolve_driven(&graph, &DrivePulse::rotation(1, 1e9, PI, FRAC_PI_2).unwrap()).unwrap();
        let mut instant = s;
        instant.apply_instant_gate(1, Gate::Rx(-FRAC_PI_2)).unwrap();
        assert!(max_diff(driven.amplitudes(), instant.amplitudes()) < 1e-6);
    }

    #[test]
    fn measurement_probabilities() {
        let mut s = StateVector::product(&[PLUS]).unwrap();
        assert!((s.probability(0, Basis::Y, Outcome::Plus).unwrap() - 0.5).abs() < 1e-15);
        let rec = s.measure(0, Basis::Y, &mut OutcomePolicy::force([Outcome::Plus])).unwrap();
        assert!((rec.probability - 0.5).abs() < 1e-15);
        let rec = s.measure(0, Basis::Y, &mut OutcomePolicy::sample(1)).unwrap();
        assert_eq!(rec.outcome, Outcome::Plus);
        assert!(rec.is_deterministic());
        assert!(s.measure(0, Basis::Y, &mut OutcomePolicy::force([Outcome::Minus])).is_err());
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn y_measurement_after_evolution_matches_projector_oracle() {
        // (A, C) random, B in |+⟩, evolve π/g, project B on |±i⟩
        let g = 1.0;
        let graph = chain3(g);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ac = StateVector::random(2, &mut rng).unwrap();
        let mut amps = vec![ZERO; 8];
        for i in 0..4 {
            let (a, c) = (i & 1, i >> 1);
            for b in 0..2 {
                amps[a | b << 1 | c << 2] = ac.amplitudes()[i] * FRAC_1_SQRT_2;
            }
        }
        let mut s = StateVector::from_amplitudes(3, amps).unwrap();
        s.evolve_diagonal(&graph, PI / g).unwrap();
        for o in Outcome::BOTH {
            let mut t = s.clone();
            t.measure(1, Basis::Y, &mut OutcomePolicy::force([o])).unwrap();
            // oracle: (1 + s Y_B)/2 as a dense 8×8 matrix
            let y = Gate::Y.matrix();
            let proj = DMatrix::from_fn(8, 8, |i, j| {
                if (i ^ j) & !2 != 0 {
                    return ZERO;
                }
                let id = if i == j { 1.0 } else { 0.0 };
                (C64::new(id, 0.0) + y[i >> 1 & 1][j >> 1 & 1] * o.sign()) * 0.5
            });
            let v = proj * nalgebra::DVector::from_column_slice(s.amplitudes());
            let oracle = StateVector::from_amplitudes(3, v.iter().copied().collect()).unwrap();
            assert!((t.fidelity(&oracle).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_density_cases() {
        let bell = StateVector::from_amplitudes(
            2,
            vec![C64::new(1.0, 0.0), ZERO, ZERO, C64::new(1.0, 0.0)],
        )
        .unwrap();
        let r = bell.reduced_density(&[1]).unwrap();
        assert!((r.get(0, 0).re - 0.5).abs() < 1e-15 && r.get(0, 1).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = StateVector::random(1, &mut rng).unwrap();
        let b = StateVector::random(1, &mut rng).unwrap();
        let prod = StateVector::product(&[
            [a.amplitudes()[0], a.amplitudes()[1]],
            [b.amplitudes()[0], b.amplitudes()[1]],
        ])
        .unwrap();
        let r = prod.reduced_density(&[0]).unwrap();
        assert!((r.purity() - 1.0).abs() < 1e-12);
        assert!(r.is_valid_state(1e-10));
        assert!(StateVector::ground(8).unwrap().reduced_density(&[0, 1, 2, 3, 4, 5, 6]).is_err());
    }

    #[test]
    fn dump_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = StateVector::random(3, &mut rng).unwrap();
        let mut buf = Vec::new();
        s.dump(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 16 * 8);
        assert_eq!(StateVector::load(&buf[..]).unwrap(), s);
    }

    #[test]
    fn rejects_oversized_register() {
        assert!(matches!(StateVector::ground(25), Err(Error::TooManyQubits { .. })));
    }

    proptest::proptest! {
        #[test]
        fn unitary_steps_preserve_norm(seed in 0u64..1000, t in 0.0f64..5.0, lambda in 0.0f64..10.0, theta in 0.0f64..6.3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let graph = build_chain(2, &Couplings::PerEdge(vec![rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0)])).unwrap();
            let mut s = StateVector::random(3, &mut rng).unwrap();
            s.evolve_diagonal(&graph, t).unwrap();
            s.evolve_driven(&graph, &DrivePulse { qubit: 1, lambda, theta, duration: t, frame_shift: 0.0 }).unwrap();
            s.apply_instant_gate(0, Gate::Rx(theta)).unwrap();
            proptest::prop_assert!((s.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn fidelity_is_symmetric(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = StateVector::random(3, &mut rng).unwrap();
            let b = StateVector::random(3, &mut rng).unwrap();
            proptest::prop_assert!((a.fidelity(&b).unwrap() - b.fidelity(&a).unwrap()).abs() < 1e-15);
            proptest::prop_assert!((a.fidelity(&a).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
