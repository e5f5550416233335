//! Stabilizer tableau with destabilizers, bit-packed rows and native
//! single-qubit Pauli measurement.
//!
//! Diagonal evolution that is not Clifford on its own (echo segments, frame
//! corrections) is held as a pending phase polynomial
//! `exp(-i Σ θ_q n_q - i Σ θ_ab n_a n_b)` and only turned into `S`/`Z`/`CZ`
//! when a non-diagonal operation needs the qubit. Terms on qubits that are
//! deterministically ground drop out, which is what makes ancilla-mediated
//! schedules exact here.

use crate::certificate::{CertificateReport, GraphStateCertificate, StabilizerResult};
use crate::device::DeviceGraph;
use crate::error::{Error, Result};
use crate::gate::{quantize_angle, wrap_angle, Basis, Gate, Outcome, HALF_PI};
use crate::policy::{MeasurementRecord, OutcomePolicy};
use std::collections::BTreeMap;
use std::f64::consts::PI;

pub const MAX_TABLEAU_QUBITS: usize = 4096;
const ANGLE_TOL: f64 = 1e-9;

/// A Pauli operator with a ±1 sign, stored sparsely.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliString {
    pub negative: bool,
    pub factors: Vec<(usize, Basis)>,
}

#[derive(Clone, Debug)]
pub struct StabilizerTableau {
    n: usize,
    words: usize,
    /// Rows `0..n` destabilizers, `n..2n` stabilizers, `2n` scratch.
    x: Vec<u64>,
    z: Vec<u64>,
    r: Vec<bool>,
    linear: Vec<f64>,
    pairs: BTreeMap<(usize, usize), f64>,
}

fn bit(q: usize) -> (usize, u64) {
    (q / 64, 1u64 << (q % 64))
}

impl StabilizerTableau {
    /// All qubits in the ground state (`+Z` stabilized).
    pub fn ground(n: usize) -> Result<Self> {
        if n > MAX_TABLEAU_QUBITS {
            return Err(Error::TooManyQubits { got: n, max: MAX_TABLEAU_QUBITS });
        }
        let words = n.div_ceil(64).max(1);
        let rows = 2 * n + 1;
        let mut t = StabilizerTableau {
            n,
            words,
            x: vec![0; rows * words],
            z: vec![0; rows * words],
            r: vec![false; rows],
            linear: vec![0.0; n],
            pairs: BTreeMap::new(),
        };
        for q in 0..n {
            let (w, m) = bit(q);
            t.x[q * words + w] |= m;
            t.z[(q + n) * words + w] |= m;
        }
        Ok(t)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q < self.n {
            Ok(())
        } else {
            Err(Error::QubitOutOfRange(q))
        }
    }

    fn xb(&self, row: usize, q: usize) -> bool {
        let (w, m) = bit(q);
        self.x[row * self.words + w] & m != 0
    }

    fn zb(&self, row: usize, q: usize) -> bool {
        let (w, m) = bit(q);
        self.z[row * self.words + w] & m != 0
    }

    /// Row `h` ← row `i` · row `h`, with the sign tracked exactly.
    fn rowsum(&mut self, h: usize, i: usize) {
        let (hw, iw) = (h * self.words, i * self.words);
        let (mut plus, mut minus) = (0u32, 0u32);
        for k in 0..self.words {
            let (x1, z1) = (self.x[iw + k], self.z[iw + k]);
            let (x2, z2) = (self.x[hw + k], self.z[hw + k]);
            let y1 = x1 & z1;
            let xo = x1 & !z1;
            let zo = !x1 & z1;
            plus += ((y1 & z2 & !x2) | (xo & z2 & x2) | (zo & x2 & !z2)).count_ones();
            minus += ((y1 & x2 & !z2) | (xo & z2 & !x2) | (zo & x2 & z2)).count_ones();
            self.x[hw + k] = x1 ^ x2;
            self.z[hw + k] = z1 ^ z2;
        }
        let total = 2 * (self.r[h] as i64) + 2 * (self.r[i] as i64) + plus as i64 - minus as i64;
        self.r[h] = total.rem_euclid(4) == 2;
    }

    fn for_each_row(&mut self, q: usize, f: impl Fn(bool, bool, bool) -> (bool, bool, bool)) {
        let (w, m) = bit(q);
        for row in 0..2 * self.n {
            let idx = row * self.words + w;
            let (x, z) = (self.x[idx] & m != 0, self.z[idx] & m != 0);
            let (nx, nz, flip) = f(x, z, self.r[row]);
            self.r[row] = flip;
            self.x[idx] = if nx { self.x[idx] | m } else { self.x[idx] & !m };
            self.z[idx] = if nz { self.z[idx] | m } else { self.z[idx] & !m };
        }
    }

    fn raw_h(&mut self, q: usize) {
        self.for_each_row(q, |x, z, r| (z, x, r ^ (x & z)));
    }

    fn raw_s(&mut self, q: usize) {
        self.for_each_row(q, |x, z, r| (x, z ^ x, r ^ (x & z)));
    }

    fn raw_sdg(&mut self, q: usize) {
        self.for_each_row(q, |x, z, r| (x, z ^ x, r ^ (x & !z)));
    }

    fn raw_pauli(&mut self, q: usize, basis: Basis) {
        match basis {
            Basis::X => self.for_each_row(q, |x, z, r| (x, z, r ^ z)),
            Basis::Y => self.for_each_row(q, |x, z, r| (x, z, r ^ x ^ z)),
            Basis::Z => self.for_each_row(q, |x, z, r| (x, z, r ^ x)),
        }
    }

    fn raw_cz(&mut self, a: usize, b: usize) {
        let (wa, ma) = bit(a);
        let (wb, mb) = bit(b);
        for row in 0..2 * self.n {
            let (ia, ib) = (row * self.words + wa, row * self.words + wb);
            let (xa, za) = (self.x[ia] & ma != 0, self.z[ia] & ma != 0);
            let (xb, zb) = (self.x[ib] & mb != 0, self.z[ib] & mb != 0);
            self.r[row] ^= xa & xb & (za ^ zb);
            if xb {
                self.z[ia] ^= ma;
            }
            if xa {
                self.z[ib] ^= mb;
            }
        }
    }

    /// Accumulate `exp(-i Σ h_q t n_q - i Σ g t n_a n_b)` from free evolution.
    pub fn evolve_diagonal(&mut self, graph: &DeviceGraph, duration: f64) -> Result<()> {
        if graph.num_qubits() != self.n {
            return Err(Error::DimensionMismatch(self.n, graph.num_qubits()));
        }
        for (q, h) in graph.linear_terms().into_iter().enumerate() {
            self.linear[q] += h * duration;
        }
        for e in graph.edges() {
            *self.pairs.entry((e.a.min(e.b), e.a.max(e.b))).or_insert(0.0) += e.g * duration;
        }
        Ok(())
    }

    /// `X` or `Y` on `q` maps `n_q → 1 - n_q` inside the pending phase.
    fn reflect_pending(&mut self, q: usize) {
        self.linear[q] = -self.linear[q];
        for (&(a, b), theta) in self.pairs.iter_mut() {
            if a == q || b == q {
                let other = if a == q { b } else { a };
                self.linear[other] += *theta;
                *theta = -*theta;
            }
        }
    }

    /// Deterministic Z value of `q`: `Some(true)` for ground, `Some(false)` for excited.
    pub fn z_state(&mut self, q: usize) -> Option<bool> {
        if (self.n..2 * self.n).any(|row| self.xb(row, q)) {
            return None;
        }
        Some(!self.deterministic_sign(&[(q, Basis::Z)]))
    }

    pub fn is_ground(&mut self, q: usize) -> bool {
        self.z_state(q) == Some(true)
    }

    fn flush_qubit(&mut self, q: usize) -> Result<()> {
        let keys: Vec<(usize, usize)> = self.pairs.keys().copied().filter(|&(a, b)| a == q || b == q).collect();
        for key in keys {
            let theta = wrap_angle(self.pairs.remove(&key).expect("key present"));
            if theta.abs() < ANGLE_TOL {
                continue;
            }
            let other = if key.0 == q { key.1 } else { key.0 };
            match (self.z_state(q), self.z_state(other)) {
                (Some(true), _) | (_, Some(true)) => continue,
                (Some(false), _) => self.linear[other] += theta,
                (_, Some(false)) => self.linear[q] += theta,
                (None, None) => match quantize_angle(theta, PI, ANGLE_TOL) {
                    Some(1) => self.raw_cz(q, other),
                    Some(_) => {}
                    None => {
                        return Err(Error::NonClifford(format!("pending phase {theta} on pair ({q}, {other})")))
                    }
                },
            }
        }
        let theta = std::mem::take(&mut self.linear[q]);
        match quantize_angle(theta, HALF_PI, ANGLE_TOL) {
            Some(0) => {}
            Some(1) => self.raw_sdg(q),
            Some(2) => self.raw_pauli(q, Basis::Z),
            Some(_) => self.raw_s(q),
            None => {
                if self.z_state(q).is_none() {
                    return Err(Error::NonClifford(format!("pending phase {theta} on qubit {q}")));
                }
            }
        }
        Ok(())
    }

    /// Resolve every pending phase term into Clifford gates.
    pub fn flush(&mut self) -> Result<()> {
        let mut qubits: Vec<usize> = (0..self.n).filter(|&q| self.linear[q] != 0.0).collect();
        qubits.extend(self.pairs.keys().flat_map(|&(a, b)| [a, b]));
        qubits.sort_unstable();
        qubits.dedup();
        for q in qubits {
            self.flush_qubit(q)?;
        }
        Ok(())
    }

    pub fn has_pending_phases(&self) -> bool {
        !self.pairs.is_empty() || self.linear.iter().any(|&t| t != 0.0)
    }

    pub fn apply_h(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        self.flush_qubit(q)?;
        self.raw_h(q);
        Ok(())
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(Error::InvalidParameter(format!("CZ on a single qubit {a}")));
        }
        self.raw_cz(a, b);
        Ok(())
    }

    /// Apply a single-qubit gate; rotations must be multiples of π/2.
    pub fn apply_gate(&mut self, q: usize, gate: Gate) -> Result<()> {
        self.check_qubit(q)?;
        match gate {
            Gate::X => {
                self.reflect_pending(q);
                self.raw_pauli(q, Basis::X);
            }
            Gate::Y => {
                self.reflect_pending(q);
                self.raw_pauli(q, Basis::Y);
            }
            Gate::Z => self.raw_pauli(q, Basis::Z),
            Gate::SPlus => self.raw_s(q),
            Gate::SMinus => self.raw_sdg(q),
            Gate::Phase(phi) => self.linear[q] -= phi,
            Gate::H => self.apply_h(q)?,
            Gate::Rx(theta) | Gate::Ry(theta) => {
                let k = quantize_angle(theta, HALF_PI, ANGLE_TOL)
                    .ok_or_else(|| Error::NonClifford(format!("{gate} on qubit {q}")))?;
                let is_x = matches!(gate, Gate::Rx(_));
                match (k, is_x) {
                    (0, _) => {}
                    (2, true) => self.apply_gate(q, Gate::X)?,
                    (2, false) => self.apply_gate(q, Gate::Y)?,
                    (1, true) => {
                        self.flush_qubit(q)?;
                        self.raw_h(q);
                        self.raw_s(q);
                        self.raw_h(q);
                    }
                    (3, true) => {
                        self.flush_qubit(q)?;
                        self.raw_h(q);
                        self.raw_sdg(q);
                        self.raw_h(q);
                    }
                    (1, false) => {
                        self.flush_qubit(q)?;
                        self.raw_pauli(q, Basis::Z);
                        self.raw_h(q);
                    }
                    (_, false) => {
                        self.flush_qubit(q)?;
                        self.raw_h(q);
                        self.raw_pauli(q, Basis::Z);
                    }
                    _ => unreachable!("quantized to 0..4"),
                }
            }
        }
        Ok(())
    }

    fn pauli_masks(&self, factors: &[(usize, Basis)]) -> Result<(Vec<u64>, Vec<u64>)> {
        let mut px = vec![0u64; self.words];
        let mut pz = vec![0u64; self.words];
        for &(q, b) in factors {
            self.check_qubit(q)?;
            let (w, m) = bit(q);
            if (px[w] | pz[w]) & m != 0 {
                return Err(Error::InvalidParameter(format!("qubit {q} repeated in Pauli string")));
            }
            if b != Basis::Z {
                px[w] |= m;
            }
            if b != Basis::X {
                pz[w] |= m;
            }
        }
        Ok((px, pz))
    }

    fn anticommutes(&self, row: usize, px: &[u64], pz: &[u64]) -> bool {
        let base = row * self.words;
        let mut parity = 0u32;
        for k in 0..self.words {
            parity ^= ((self.x[base + k] & pz[k]) ^ (self.z[base + k] & px[k])).count_ones() & 1;
        }
        parity == 1
    }

    /// Sign of `P` when it is (up to sign) in the stabilizer group: `true` for `-P`.
    fn deterministic_sign(&mut self, factors: &[(usize, Basis)]) -> bool {
        let (px, pz) = self.pauli_masks(factors).expect("checked by caller");
        let scratch = 2 * self.n;
        let base = scratch * self.words;
        self.x[base..base + self.words].fill(0);
        self.z[base..base + self.words].fill(0);
        self.r[scratch] = false;
        for i in 0..self.n {
            if self.anticommutes(i, &px, &pz) {
                self.rowsum(scratch, i + self.n);
            }
        }
        self.r[scratch]
    }

    /// `⟨P⟩ ∈ {-1, 0, +1}` for a Pauli string on distinct qubits.
    pub fn expectation(&mut self, factors: &[(usize, Basis)]) -> Result<i8> {
        let (px, pz) = self.pauli_masks(factors)?;
        for &(q, _) in factors {
            self.flush_qubit(q)?;
        }
        if (self.n..2 * self.n).any(|row| self.anticommutes(row, &px, &pz)) {
            return Ok(0);
        }
        Ok(if self.deterministic_sign(factors) { -1 } else { 1 })
    }

    /// Measure the single-qubit Pauli `basis` on `q`.
    ///
    /// Outcomes use the crate convention: for Z, `Minus` is ground.
    pub fn measure_pauli(&mut self, q: usize, basis: Basis, policy: &mut OutcomePolicy) -> Result<MeasurementRecord> {
        self.check_qubit(q)?;
        if basis != Basis::Z {
            self.flush_qubit(q)?;
        }
        let factors = [(q, basis)];
        let (px, pz) = self.pauli_masks(&factors)?;
        let to_outcome = |negative: bool| {
            // tableau sign bit: false is the +1 eigenvalue of the std Pauli
            let o = if negative { Outcome::Minus } else { Outcome::Plus };
            if basis == Basis::Z {
                o.flip()
            } else {
                o
            }
        };
        let p = (self.n..2 * self.n).find(|&row| self.anticommutes(row, &px, &pz));
        let (outcome, probability) = match p {
            None => {
                let o = to_outcome(self.deterministic_sign(&factors));
                let p_plus = if o == Outcome::Plus { 1.0 } else { 0.0 };
                policy.choose(q, p_plus)?
            }
            Some(p) => {
                let chosen = policy.choose(q, 0.5)?;
                for row in 0..2 * self.n {
                    if row != p && self.anticommutes(row, &px, &pz) {
                        self.rowsum(row, p);
                    }
                }
                let d = p - self.n;
                let w = self.words;
                self.x.copy_within(p * w..(p + 1) * w, d * w);
                self.z.copy_within(p * w..(p + 1) * w, d * w);
                self.r[d] = self.r[p];
                self.x[p * w..(p + 1) * w].copy_from_slice(&px);
                self.z[p * w..(p + 1) * w].copy_from_slice(&pz);
                self.r[p] = to_outcome(true) == chosen.0;
                chosen
            }
        };
        Ok(MeasurementRecord { qubit: q, basis, outcome, probability })
    }

    /// Current stabilizer generators; pending phases are flushed first.
    pub fn generators(&mut self) -> Result<Vec<PauliString>> {
        self.flush()?;
        Ok((self.n..2 * self.n)
            .map(|row| {
                let factors = (0..self.n)
                    .filter_map(|q| match (self.xb(row, q), self.zb(row, q)) {
                        (false, false) => None,
                        (true, false) => Some((q, Basis::X)),
                        (true, true) => Some((q, Basis::Y)),
                        (false, true) => Some((q, Basis::Z)),
                    })
                    .collect();
                PauliString { negative: self.r[row], factors }
            })
            .collect())
    }

    /// Check every `K_a` of the certificate and that all other qubits are ground.
    pub fn check_certificate(&mut self, cert: &GraphStateCertificate) -> Result<CertificateReport> {
        self.flush()?;
        let mut results = Vec::new();
        for (vertex, k) in cert.stabilizers() {
            let e = self.expectation(&k)?;
            results.push(StabilizerResult { vertex, expectation: e as f64, pass: e == 1 });
        }
        let spectators_ground = (0..self.n).filter(|q| !cert.contains(*q)).all(|q| self.is_ground(q));
        Ok(CertificateReport::from_parts(results, spectators_ground))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{build_chain, Couplings};
    use crate::statevector::{StateVector, GROUND, PLUS};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn clifford_gates() -> Vec<Gate> {
        vec![
            Gate::H,
            Gate::SPlus,
            Gate::SMinus,
            Gate::X,
            Gate::Y,
            Gate::Z,
            Gate::Rx(FRAC_PI_2),
            Gate::Rx(-FRAC_PI_2),
            Gate::Ry(FRAC_PI_2),
            Gate::Ry(-FRAC_PI_2),
            Gate::Rx(PI),
        ]
    }

    fn assert_same_state(tab: &mut StabilizerTableau, dense: &StateVector) {
        for p in tab.generators().unwrap() {
            let e = dense.pauli_expectation(&p.factors).unwrap();
            let want = if p.negative { -1.0 } else { 1.0 };
            assert!((e - want).abs() < 1e-10, "generator {p:?} has dense expectation {e}");
        }
    }

    #[test]
    fn hadamard_on_ground_gives_plus_x() {
        let mut t = StabilizerTableau::ground(1).unwrap();
        t.apply_h(0).unwrap();
        assert_eq!(t.generators().unwrap(), vec![PauliString { negative: false, factors: vec![(0, Basis::X)] }]);
    }

    #[test]
    fn cz_twice_is_identity() {
        let mut t = StabilizerTableau::ground(2).unwrap();
        t.apply_h(0).unwrap();
        t.apply_gate(1, Gate::Ry(FRAC_PI_2)).unwrap();
        let before = t.generators().unwrap();
        t.apply_cz(0, 1).unwrap();
        t.apply_cz(0, 1).unwrap();
        assert_eq!(t.generators().unwrap(), before);
    }

    #[test]
    fn cz_on_plus_plus() {
        let mut t = StabilizerTableau::ground(2).unwrap();
        t.apply_h(0).unwrap();
        t.apply_h(1).unwrap();
        t.apply_cz(0, 1).unwrap();
        assert_eq!(t.expectation(&[(0, Basis::X), (1, Basis::Z)]).unwrap(), 1);
        assert_eq!(t.expectation(&[(0, Basis::Z), (1, Basis::X)]).unwrap(), 1);
        assert_eq!(t.expectation(&[(0, Basis::X)]).unwrap(), 0);
        let mut d = StateVector::product(&[PLUS, PLUS]).unwrap();
        d.apply_cz(0, 1).unwrap();
        assert_same_state(&mut t, &d);
    }

    #[test]
    fn random_clifford_circuits_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let gates = clifford_gates();
        for _ in 0..40 {
            let n = 4;
            let mut t = StabilizerTableau::ground(n).unwrap();
            let mut d = StateVector::ground(n).unwrap();
            for _ in 0..30 {
                if rng.gen_bool(0.3) {
                    let a = rng.gen_range(0..n);
                    let b = (a + rng.gen_range(1..n)) % n;
                    t.apply_cz(a, b).unwrap();
                    d.apply_cz(a, b).unwrap();
                } else {
                    let q = rng.gen_range(0..n);
                    let g = gates[rng.gen_range(0..gates.len())];
                    t.apply_gate(q, g).unwrap();
                    d.apply_instant_gate(q, g).unwrap();
                }
            }
            assert_same_state(&mut t, &d);
            // measurement statistics and post-states agree
            let q = rng.gen_range(0..n);
            let basis = [Basis::X, Basis::Y, Basis::Z][rng.gen_range(0..3)];
            let p_dense = d.probability(q, basis, Outcome::Plus).unwrap();
            let o = if p_dense > 0.25 { Outcome::Plus } else { Outcome::Minus };
            let rec = t.measure_pauli(q, basis, &mut OutcomePolicy::force([o])).unwrap();
            let rd = d.measure(q, basis, &mut OutcomePolicy::force([o])).unwrap();
            assert!((rec.probability - rd.probability).abs() < 1e-10);
            assert_same_state(&mut t, &d);
        }
    }

    #[test]
    fn z_measurement_of_fresh_qubit_is_ground() {
        let mut t = StabilizerTableau::ground(3).unwrap();
        let rec = t.measure_pauli(1, Basis::Z, &mut OutcomePolicy::sample(0)).unwrap();
        assert_eq!(rec.outcome, Outcome::Minus);
        assert_eq!(rec.probability, 1.0);
        assert!(t.is_ground(1));
        t.apply_gate(1, Gate::X).unwrap();
        assert_eq!(t.z_state(1), Some(false));
    }

    #[test]
    fn y_measurement_of_plus_is_random_both_branches_valid() {
        for o in Outcome::BOTH {
            let mut t = StabilizerTableau::ground(1).unwrap();
            t.apply_h(0).unwrap();
            let rec = t.measure_pauli(0, Basis::Y, &mut OutcomePolicy::force([o])).unwrap();
            assert_eq!((rec.outcome, rec.probability), (o, 0.5));
            assert_eq!(t.expectation(&[(0, Basis::Y)]).unwrap(), o.value());
            let again = t.measure_pauli(0, Basis::Y, &mut OutcomePolicy::sample(3)).unwrap();
            assert_eq!((again.outcome, again.probability), (o, 1.0));
        }
    }

    #[test]
    fn pending_phase_resolves_through_ground_ancilla() {
        // a - b - c chain, b ground: any evolution time is Clifford
        let graph = build_chain(2, &Couplings::PerEdge(vec![1.3, 0.4])).unwrap();
        let mut t = StabilizerTableau::ground(3).unwrap();
        t.apply_h(0).unwrap();
        t.apply_h(2).unwrap();
        t.evolve_diagonal(&graph, 0.77).unwrap();
        t.apply_h(0).unwrap();
        assert_eq!(t.expectation(&[(0, Basis::Z)]).unwrap(), 1);
        // with b in |+⟩ the same phase is not Clifford
        let mut t = StabilizerTableau::ground(3).unwrap();
        t.apply_h(0).unwrap();
        t.apply_h(1).unwrap();
        t.evolve_diagonal(&graph, 0.77).unwrap();
        assert!(matches!(t.apply_h(1), Err(Error::NonClifford(_))));
    }

    #[test]
    fn switching_sequence_matches_dense() {
        let g = 1.0;
        let graph = build_chain(2, &Couplings::Uniform(g)).unwrap();
        for o in Outcome::BOTH {
            let mut t = StabilizerTableau::ground(3).unwrap();
            let mut d = StateVector::product(&[PLUS, GROUND, PLUS]).unwrap();
            t.apply_h(0).unwrap();
            t.apply_h(2).unwrap();
            t.apply_gate(1, Gate::Ry(FRAC_PI_2)).unwrap();
            d.apply_instant_gate(1, Gate::Ry(FRAC_PI_2)).unwrap();
            t.evolve_diagonal(&graph, PI / g).unwrap();
            d.evolve_diagonal(&graph, PI / g).unwrap();
            let a = t.measure_pauli(1, Basis::Y, &mut OutcomePolicy::force([o])).unwrap();
            let b = d.measure(1, Basis::Y, &mut OutcomePolicy::force([o])).unwrap();
            assert_eq!(a.probability, 0.5);
            assert!((b.probability - 0.5).abs() < 1e-12);
            assert_same_state(&mut t, &d);
        }
    }

    #[test]
    fn phase_gate_and_echo_reflection() {
        // X e^{-iθ n_a n_b} X = e^{-iθ n_b} e^{+iθ n_a n_b}: check by dense replay
        let graph = build_chain(2, &Couplings::PerEdge(vec![2.0, 1.0])).unwrap();
        let et = crate::device::spin_echo_times(2.0, 1.0).unwrap();
        let mut t = StabilizerTableau::ground(3).unwrap();
        let mut d = StateVector::product(&[PLUS, GROUND, PLUS]).unwrap();
        t.apply_h(0).unwrap();
        t.apply_h(2).unwrap();
        let ops: Vec<Box<dyn Fn(&mut StabilizerTableau, &mut StateVector)>> = vec![
            Box::new(|t, d| {
                t.apply_gate(1, Gate::Ry(FRAC_PI_2)).unwrap();
                d.apply_instant_gate(1, Gate::Ry(FRAC_PI_2)).unwrap();
            }),
            Box::new(|t, d| {
                t.evolve_diagonal(&graph, et.t1).unwrap();
                d.evolve_diagonal(&graph, et.t1).unwrap();
            }),
            Box::new(|t, d| {
                t.apply_gate(0, Gate::X).unwrap();
                d.apply_instant_gate(0, Gate::X).unwrap();
            }),
            Box::new(|t, d| {
                t.evolve_diagonal(&graph, et.t2).unwrap();
                d.evolve_diagonal(&graph, et.t2).unwrap();
            }),
            Box::new(|t, d| {
                t.apply_gate(0, Gate::X).unwrap();
                d.apply_instant_gate(0, Gate::X).unwrap();
            }),
            Box::new(|t, d| {
                t.apply_gate(1, Gate::Phase(2.0 * et.t2)).unwrap();
                d.apply_instant_gate(1, Gate::Phase(2.0 * et.t2)).unwrap();
            }),
        ];
        for op in &ops {
            op(&mut t, &mut d);
        }
        t.measure_pauli(1, Basis::Y, &mut OutcomePolicy::force([Outcome::Plus])).unwrap();
        d.measure(1, Basis::Y, &mut OutcomePolicy::force([Outcome::Plus])).unwrap();
        assert_same_state(&mut t, &d);
    }

    #[test]
    fn certificate_detects_missing_edge() {
        let n = 4;
        let edges = vec![(0, 1), (1, 2), (2, 3)];
        let cert = GraphStateCertificate::new((0..n).collect(), edges.clone()).unwrap();
        let mut t = StabilizerTableau::ground(n + 1).unwrap();
        for q in 0..n {
            t.apply_h(q).unwrap();
        }
        for &(a, b) in &edges[..2] {
            t.apply_cz(a, b).unwrap();
        }
        let mut full = t.clone();
        full.apply_cz(2, 3).unwrap();
        assert!(full.check_certificate(&cert).unwrap().pass);
        let report = t.check_certificate(&cert).unwrap();
        assert!(!report.pass);
        assert_eq!(report.failing_vertices(), vec![2, 3]);
        full.apply_gate(4, Gate::X).unwrap();
        assert!(!full.check_certificate(&cert).unwrap().spectators_ground);
    }

    #[test]
    fn large_register() {
        let n = 200;
        let mut t = StabilizerTableau::ground(n).unwrap();
        for q in 0..n {
            t.apply_h(q).unwrap();
        }
        for q in 0..n - 1 {
            t.apply_cz(q, q + 1).unwrap();
        }
        let edges = (0..n - 1).map(|q| (q, q + 1)).collect();
        let cert = GraphStateCertificate::new((0..n).collect(), edges).unwrap();
        assert!(t.check_certificate(&cert).unwrap().pass);
        assert!(StabilizerTableau::ground(MAX_TABLEAU_QUBITS + 1).is_err());
    }
}
