//! Pulse schedules as data, and their execution on either backend.

use crate::certificate::{CertificateReport, GraphStateCertificate, StabilizerResult};
use crate::device::DeviceGraph;
use crate::error::{Error, Result};
use crate::gate::{quantize_angle, Basis, Gate, Outcome, HALF_PI};
use crate::policy::{MeasurementRecord, OutcomePolicy};
use crate::stabilizer::StabilizerTableau;
use crate::statevector::{DrivePulse, StateVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::f64::consts::PI;

/// Operation allowed inside a feedforward branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum BranchOp {
    Instant { qubit: usize, gate: Gate },
    Drive { pulse: DrivePulse },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    /// Outcomes of the referenced measurements, in the same order.
    pub outcomes: Vec<Outcome>,
    pub ops: Vec<BranchOp>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum Step {
    FreeEvolve { duration: f64 },
    Drive { pulse: DrivePulse },
    Instant { qubit: usize, gate: Gate },
    Measure { qubit: usize, basis: Basis },
    /// `measurements` index the schedule's earlier `Measure` steps, counted
    /// from zero. A pattern without a branch applies nothing.
    Feedforward { measurements: Vec<usize>, branches: Vec<Branch> },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub num_qubits: usize,
    pub steps: Vec<Step>,
}

fn check_gate_qubit(n: usize, q: usize) -> Result<()> {
    if q < n {
        Ok(())
    } else {
        Err(Error::QubitOutOfRange(q))
    }
}

impl PulseSchedule {
    pub fn new(num_qubits: usize) -> Self {
        PulseSchedule { num_qubits, steps: Vec::new() }
    }

    pub fn push(&mut self, step: Step) {
        if let Step::FreeEvolve { duration } = step {
            if duration == 0.0 {
                return;
            }
            if let Some(Step::FreeEvolve { duration: last }) = self.steps.last_mut() {
                *last += duration;
                return;
            }
        }
        self.steps.push(step);
    }

    pub fn gate(&mut self, qubit: usize, gate: Gate) {
        self.push(Step::Instant { qubit, gate });
    }

    pub fn evolve(&mut self, duration: f64) {
        self.push(Step::FreeEvolve { duration });
    }

    /// Add a measurement and return its index for feedforward references.
    pub fn measure(&mut self, qubit: usize, basis: Basis) -> usize {
        let idx = self.num_measurements();
        self.push(Step::Measure { qubit, basis });
        idx
    }

    pub fn feedforward(&mut self, measurements: Vec<usize>, branches: Vec<Branch>) {
        self.push(Step::Feedforward { measurements, branches });
    }

    /// Append another schedule's steps, shifting its measurement indices.
    pub fn extend(&mut self, other: PulseSchedule) {
        let offset = self.num_measurements();
        for step in other.steps {
            match step {
                Step::Feedforward { measurements, branches } => self.push(Step::Feedforward {
                    measurements: measurements.into_iter().map(|m| m + offset).collect(),
                    branches,
                }),
                s => self.push(s),
            }
        }
    }

    pub fn num_measurements(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s, Step::Measure { .. })).count()
    }

    pub fn total_duration(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| match s {
                Step::FreeEvolve { duration } => *duration,
                Step::Drive { pulse } => pulse.duration,
                _ => 0.0,
            })
            .sum()
    }

    /// Number of π rotations outside feedforward branches.
    pub fn pi_pulse_count(&self) -> usize {
        let is_pi = |a: f64| quantize_angle(a, PI, 1e-9) == Some(1);
        self.steps
            .iter()
            .filter(|s| match s {
                Step::Instant { gate: Gate::X | Gate::Y, .. } => true,
                Step::Instant { gate: Gate::Rx(a) | Gate::Ry(a), .. } => is_pi(*a),
                Step::Drive { pulse } => is_pi(pulse.lambda * pulse.duration),
                _ => false,
            })
            .count()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_qubits;
        let mut measured = 0usize;
        for (i, step) in self.steps.iter().enumerate() {
            match step {
                Step::FreeEvolve { duration } => {
                    if !(*duration >= 0.0 && duration.is_finite()) {
                        return Err(Error::Schedule(format!("step {i}: negative duration {duration}")));
                    }
                }
                Step::Drive { pulse } => {
                    check_gate_qubit(n, pulse.qubit)?;
                    pulse.validate()?;
                }
                Step::Instant { qubit, .. } => check_gate_qubit(n, *qubit)?,
                Step::Measure { qubit, .. } => {
                    check_gate_qubit(n, *qubit)?;
                    measured += 1;
                }
                Step::Feedforward { measurements, branches } => {
                    if let Some(m) = measurements.iter().find(|&&m| m >= measured) {
                        return Err(Error::Schedule(format!("step {i}: feedforward on future measurement {m}")));
                    }
                    let mut patterns = BTreeSet::new();
                    for b in branches {
                        if b.outcomes.len() != measurements.len() {
                            return Err(Error::Schedule(format!("step {i}: branch pattern length mismatch")));
                        }
                        if !patterns.insert(b.outcomes.clone()) {
                            return Err(Error::Schedule(format!("step {i}: duplicate branch pattern")));
                        }
                        for op in &b.ops {
                            match op {
                                BranchOp::Instant { qubit, .. } => check_gate_qubit(n, *qubit)?,
                                BranchOp::Drive { pulse } => {
                                    check_gate_qubit(n, pulse.qubit)?;
                                    pulse.validate()?;
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sched: PulseSchedule = serde_json::from_str(s)?;
        sched.validate()?;
        Ok(sched)
    }

    /// Replace instantaneous rotations by finite-λ drives; diagonal gates stay
    /// instantaneous. Angles are reduced to `(-π, π]` and negative rotations
    /// use the opposite drive phase.
    pub fn to_physical(&self, lambda: f64) -> Result<PulseSchedule> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("Rabi frequency must be positive, got {lambda}")));
        }
        let convert = |qubit: usize, gate: Gate| -> Result<Vec<BranchOp>> {
            let drive = |axis: f64, angle: f64| -> Result<BranchOp> {
                let a = crate::gate::wrap_angle(angle);
                let theta = if a >= 0.0 { axis } else { axis + PI };
                Ok(BranchOp::Drive { pulse: DrivePulse::rotation(qubit, lambda, theta, a.abs())? })
            };
            Ok(match gate {
                Gate::X => vec![drive(0.0, PI)?],
                Gate::Y => vec![drive(HALF_PI, PI)?],
                Gate::Rx(a) => vec![drive(0.0, a)?],
                Gate::Ry(a) => vec![drive(HALF_PI, a)?],
                Gate::H => vec![BranchOp::Instant { qubit, gate: Gate::Z }, drive(HALF_PI, HALF_PI)?],
                g => vec![BranchOp::Instant { qubit, gate: g }],
            })
        };
        let mut out = PulseSchedule::new(self.num_qubits);
        for step in &self.steps {
            match step {
                Step::Instant { qubit, gate } => {
                    for op in convert(*qubit, *gate)? {
                        out.steps.push(match op {
                            BranchOp::Instant { qubit, gate } => Step::Instant { qubit, gate },
                            BranchOp::Drive { pulse } => Step::Drive { pulse },
                        });
                    }
                }
                Step::Feedforward { measurements, branches } => {
                    let branches = branches
                        .iter()
                        .map(|b| {
                            let mut ops = Vec::new();
                            for op in &b.ops {
                                match op {
                                    BranchOp::Instant { qubit, gate } => ops.extend(convert(*qubit, *gate)?),
                                    d => ops.push(*d),
                                }
                            }
                            Ok(Branch { outcomes: b.outcomes.clone(), ops })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    out.steps.push(Step::Feedforward { measurements: measurements.clone(), branches });
                }
                s => out.steps.push(s.clone()),
            }
        }
        Ok(out)
    }
}

/// A simulator that can run schedule steps.
pub trait Backend {
    fn free_evolve(&mut self, graph: &DeviceGraph, duration: f64) -> Result<()>;
    fn drive(&mut self, graph: &DeviceGraph, pulse: &DrivePulse) -> Result<()>;
    fn gate(&mut self, qubit: usize, gate: Gate) -> Result<()>;
    fn measure(&mut self, qubit: usize, basis: Basis, policy: &mut OutcomePolicy) -> Result<MeasurementRecord>;
    fn num_qubits(&self) -> usize;
    /// Called once after the last step.
    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

impl Backend for StateVector {
    fn free_evolve(&mut self, graph: &DeviceGraph, duration: f64) -> Result<()> {
        self.evolve_diagonal(graph, duration)
    }
    fn drive(&mut self, graph: &DeviceGraph, pulse: &DrivePulse) -> Result<()> {
        self.evolve_driven(graph, pulse)
    }
    fn gate(&mut self, qubit: usize, gate: Gate) -> Result<()> {
        self.apply_instant_gate(qubit, gate)
    }
    fn measure(&mut self, qubit: usize, basis: Basis, policy: &mut OutcomePolicy) -> Result<MeasurementRecord> {
        StateVector::measure(self, qubit, basis, policy)
    }
    fn num_qubits(&self) -> usize {
        StateVector::num_qubits(self)
    }
}

impl Backend for StabilizerTableau {
    fn free_evolve(&mut self, graph: &DeviceGraph, duration: f64) -> Result<()> {
        self.evolve_diagonal(graph, duration)
    }
    fn drive(&mut self, _: &DeviceGraph, pulse: &DrivePulse) -> Result<()> {
        Err(Error::Unsupported(format!("finite drive on qubit {}", pulse.qubit)))
    }
    fn gate(&mut self, qubit: usize, gate: Gate) -> Result<()> {
        self.apply_gate(qubit, gate)
    }
    fn measure(&mut self, qubit: usize, basis: Basis, policy: &mut OutcomePolicy) -> Result<MeasurementRecord> {
        self.measure_pauli(qubit, basis, policy)
    }
    fn num_qubits(&self) -> usize {
        StabilizerTableau::num_qubits(self)
    }
    fn finish(&mut self) -> Result<()> {
        self.flush()
    }
}

/// Run `schedule` on `backend`; returns the measurement records in order.
pub fn execute<B: Backend>(
    schedule: &PulseSchedule,
    graph: &DeviceGraph,
    backend: &mut B,
    policy: &mut OutcomePolicy,
) -> Result<Vec<MeasurementRecord>> {
    schedule.validate()?;
    if schedule.num_qubits != graph.num_qubits() || backend.num_qubits() != graph.num_qubits() {
        return Err(Error::DimensionMismatch(graph.num_qubits(), schedule.num_qubits));
    }
    let mut records: Vec<MeasurementRecord> = Vec::new();
    for step in &schedule.steps {
        match step {
            Step::FreeEvolve { duration } => backend.free_evolve(graph, *duration)?,
            Step::Drive { pulse } => backend.drive(graph, pulse)?,
            Step::Instant { qubit, gate } => backend.gate(*qubit, *gate)?,
            Step::Measure { qubit, basis } => records.push(backend.measure(*qubit, *basis, policy)?),
            Step::Feedforward { measurements, branches } => {
                let pattern: Vec<Outcome> = measurements.iter().map(|&m| records[m].outcome).collect();
                if let Some(branch) = branches.iter().find(|b| b.outcomes == pattern) {
                    for op in &branch.ops {
                        match op {
                            BranchOp::Instant { qubit, gate } => backend.gate(*qubit, *gate)?,
                            BranchOp::Drive { pulse } => backend.drive(graph, pulse)?,
                        }
                    }
                }
            }
        }
    }
    backend.finish()?;
    Ok(records)
}

/// Certificate check on a dense state; stabilizers pass within `tol` of +1.
pub fn check_certificate_dense(state: &StateVector, cert: &GraphStateCertificate, tol: f64) -> Result<CertificateReport> {
    let mut results = Vec::new();
    for (vertex, k) in cert.stabilizers() {
        let e = state.pauli_expectation(&k)?;
        results.push(StabilizerResult { vertex, expectation: e, pass: (e - 1.0).abs() <= tol });
    }
    let mut spectators_ground = true;
    for q in (0..state.num_qubits()).filter(|q| !cert.contains(*q)) {
        spectators_ground &= state.excited_population(q)? <= tol;
    }
    Ok(CertificateReport::from_parts(results, spectators_ground))
}
