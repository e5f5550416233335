//! CZ gates through ancillas, cluster-state generators and the
//! measurement-failure model, all expressed as [`PulseSchedule`]s.
//!
//! Every generator assumes all qubits start in the ground state.
//!
//! A CZ between mains `a` and `c` through ancilla `b`: rotate `b` to `|+⟩`,
//! let the always-on couplings run until each has accumulated a phase of π,
//! measure `b` in Y and feed forward. For outcome `+1` the correction is
//! `S-` on `a` and `c` and `Rx(π/2)` on `b`; for `-1` it is `S+` and
//! `Rx(-π/2)`. Both leave `b` in the ground state.

use crate::certificate::GraphStateCertificate;
use crate::density::DensityMatrix;
use crate::device::{spin_echo_times, BilayerLayout, Cross, DeviceGraph, QubitRole};
use crate::error::{Error, Result};
use crate::gate::{Basis, Gate, Outcome, HALF_PI};
use crate::policy::OutcomePolicy;
use crate::schedule::{execute, Branch, BranchOp, PulseSchedule};
use crate::statevector::StateVector;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

const COUPLING_RTOL: f64 = 1e-12;

/// How a three-qubit link is realized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkMode {
    /// Plain switching when both couplings are equal, spin echo otherwise.
    #[default]
    Auto,
    /// Always spin echo.
    Echo,
}

/// Instantaneous gates, or finite drives at Rabi frequency `lambda`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PulseMode {
    Ideal,
    Physical { lambda: f64 },
}

impl PulseMode {
    fn apply(self, s: PulseSchedule) -> Result<PulseSchedule> {
        match self {
            PulseMode::Ideal => Ok(s),
            PulseMode::Physical { lambda } => s.to_physical(lambda),
        }
    }
}

/// A schedule together with the graph state it should produce.
#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub schedule: PulseSchedule,
    pub certificate: GraphStateCertificate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Leg {
    a: usize,
    b: usize,
    c: usize,
    /// Pulsed end and its coupling to `b`, for echo legs.
    echo: Option<(usize, f64)>,
    t1: f64,
    t2: f64,
}

impl Leg {
    fn plan(graph: &DeviceGraph, a: usize, b: usize, c: usize, mode: LinkMode) -> Result<Leg> {
        for q in [a, b, c] {
            graph.check_qubit(q)?;
        }
        if a == c || a == b || b == c {
            return Err(Error::Topology(format!("link ({a}, {b}, {c}) repeats a qubit")));
        }
        if graph.role(b) != QubitRole::Ancilla {
            return Err(Error::Topology(format!("qubit {b} is not an ancilla")));
        }
        let g1 = graph.coupling(a, b).ok_or_else(|| Error::Topology(format!("no edge ({a}, {b})")))?;
        let g2 = graph.coupling(b, c).ok_or_else(|| Error::Topology(format!("no edge ({b}, {c})")))?;
        let equal = (g1 - g2).abs() <= COUPLING_RTOL * g1.max(g2);
        if mode == LinkMode::Auto && equal {
            return Ok(Leg { a, b, c, echo: None, t1: PI / g1, t2: 0.0 });
        }
        let timing = spin_echo_times(g1, g2)?;
        let pulsed = if timing.swapped { c } else { a };
        Ok(Leg { a, b, c, echo: Some((pulsed, timing.g1)), t1: timing.t1, t2: timing.t2 })
    }

    fn duration(&self) -> f64 {
        self.t1 + self.t2
    }
}

/// Feedforward after a Y measurement of ancilla `b` whose CZ phases reached
/// `ends`: `S∓` on the ends, `Rx(±π/2)` on `b`.
pub fn cz_feedforward(b: usize, ends: &[usize]) -> Vec<Branch> {
    Outcome::BOTH
        .iter()
        .map(|&o| {
            let (s, angle) = match o {
                Outcome::Plus => (Gate::SMinus, HALF_PI),
                Outcome::Minus => (Gate::SPlus, -HALF_PI),
            };
            let mut ops: Vec<BranchOp> = ends.iter().map(|&q| BranchOp::Instant { qubit: q, gate: s }).collect();
            ops.push(BranchOp::Instant { qubit: b, gate: Gate::Rx(angle) });
            Branch { outcomes: vec![o], ops }
        })
        .collect()
}

fn finish_link(s: &mut PulseSchedule, b: usize, ends: &[usize]) {
    let m = s.measure(b, Basis::Y);
    s.feedforward(vec![m], cz_feedforward(b, ends));
}

/// Run legs simultaneously on one merged timeline.
///
/// Switch legs may share mains. Echo legs must not share any qubit with
/// another leg, since their π pulses would disturb it.
fn emit_legs(s: &mut PulseSchedule, legs: &[Leg]) -> Result<()> {
    let ancillas: BTreeSet<usize> = legs.iter().map(|l| l.b).collect();
    if ancillas.len() != legs.len() {
        return Err(Error::Schedule("two simultaneous legs share an ancilla".into()));
    }
    for (i, l) in legs.iter().enumerate() {
        if ancillas.contains(&l.a) || ancillas.contains(&l.c) {
            return Err(Error::Schedule(format!("leg ancilla {} is an end of another leg", l.b)));
        }
        if l.echo.is_some() {
            let mine = [l.a, l.b, l.c];
            for (j, o) in legs.iter().enumerate() {
                if i != j && [o.a, o.b, o.c].iter().any(|q| mine.contains(q)) {
                    return Err(Error::Schedule(format!("echo leg through {} overlaps another leg", l.b)));
                }
            }
        }
    }
    for l in legs {
        s.gate(l.b, Gate::Ry(HALF_PI));
    }
    // (time, kind, ancilla, leg): kind 0 is the echo pulse, 1 the finish
    let mut events: Vec<(f64, u8, usize, usize)> = Vec::new();
    for (i, l) in legs.iter().enumerate() {
        if l.echo.is_some() {
            events.push((l.t1, 0, l.b, i));
        }
        events.push((l.duration(), 1, l.b, i));
    }
    events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.2.cmp(&y.2)).then(x.1.cmp(&y.1)));
    let mut now = 0.0;
    for (t, kind, _, i) in events {
        s.evolve(t - now);
        now = t;
        let l = &legs[i];
        match (kind, l.echo) {
            (0, Some((p, _))) => s.gate(p, Gate::X),
            (_, Some((p, gp))) => {
                s.gate(p, Gate::X);
                if l.t2 != 0.0 {
                    // the pulse leaves g_p t2 on the ancilla's own phase
                    s.gate(l.b, Gate::Phase(gp * l.t2));
                }
                finish_link(s, l.b, &[l.a, l.c]);
            }
            _ => finish_link(s, l.b, &[l.a, l.c]),
        }
    }
    Ok(())
}

fn chain5_into(s: &mut PulseSchedule, graph: &DeviceGraph, path: [usize; 5], mode: LinkMode) -> Result<()> {
    let [a, b, c, d, e] = path;
    if graph.role(c) != QubitRole::Ancilla {
        return Err(Error::Topology(format!("qubit {c} is not an ancilla")));
    }
    let first = Leg::plan(graph, a, b, c, mode)?;
    let second = Leg::plan(graph, c, d, e, mode)?;
    s.gate(c, Gate::Ry(HALF_PI));
    if first.echo.is_none() && second.echo.is_none() {
        emit_legs(s, &[first, second])?;
    } else {
        emit_legs(s, &[first])?;
        emit_legs(s, &[second])?;
    }
    finish_link(s, c, &[a, e]);
    Ok(())
}

fn check_switch_topology(graph: &DeviceGraph, a: usize, b: usize, c: usize) -> Result<()> {
    graph.check_qubit(b)?;
    let mut nb: Vec<usize> = graph.neighbors(b).iter().map(|&(j, _)| j).collect();
    nb.sort_unstable();
    let mut want = vec![a, c];
    want.sort_unstable();
    if nb != want {
        return Err(Error::Topology(format!("ancilla {b} must be adjacent to exactly {a} and {c}")));
    }
    Ok(())
}

/// CZ between `a` and `c` through ancilla `b` with equal couplings.
pub fn switching_cz(graph: &DeviceGraph, a: usize, b: usize, c: usize, mode: PulseMode) -> Result<PulseSchedule> {
    check_switch_topology(graph, a, b, c)?;
    let leg = Leg::plan(graph, a, b, c, LinkMode::Auto)?;
    if leg.echo.is_some() {
        return Err(Error::InvalidParameter(format!(
            "couplings around ancilla {b} differ; use the spin-echo variant"
        )));
    }
    let mut s = PulseSchedule::new(graph.num_qubits());
    emit_legs(&mut s, &[leg])?;
    mode.apply(s)
}

/// Spin-echo CZ between `a` and `c` through `b` for arbitrary positive couplings.
pub fn echo_cz_pair(graph: &DeviceGraph, a: usize, b: usize, c: usize, mode: PulseMode) -> Result<PulseSchedule> {
    check_switch_topology(graph, a, b, c)?;
    let leg = Leg::plan(graph, a, b, c, LinkMode::Echo)?;
    let mut s = PulseSchedule::new(graph.num_qubits());
    emit_legs(&mut s, &[leg])?;
    mode.apply(s)
}

/// CZ between the ends of `a - b - c - d - e`, with `b`, `c`, `d` ancillas.
pub fn chain_cz_5(graph: &DeviceGraph, path: [usize; 5], link: LinkMode, mode: PulseMode) -> Result<PulseSchedule> {
    for &q in &path[1..4] {
        graph.check_qubit(q)?;
        if graph.role(q) != QubitRole::Ancilla {
            return Err(Error::Topology(format!("qubit {q} on the inner path is not an ancilla")));
        }
    }
    let mut s = PulseSchedule::new(graph.num_qubits());
    chain5_into(&mut s, graph, path, link)?;
    mode.apply(s)
}

/// Locate the single cross in a standalone cross-shaped graph.
pub fn find_cross(graph: &DeviceGraph) -> Result<Cross> {
    let is_anc = |q: usize| graph.role(q) == QubitRole::Ancilla;
    let centers: Vec<usize> = (0..graph.num_qubits())
        .filter(|&q| is_anc(q) && graph.neighbors(q).len() == 4 && graph.neighbors(q).iter().all(|&(j, _)| is_anc(j)))
        .collect();
    let [center] = centers.as_slice() else {
        return Err(Error::Topology(format!("expected one cross centre, found {}", centers.len())));
    };
    let mut arms = [0; 4];
    let mut mains = [0; 4];
    for (k, &(arm, _)) in graph.neighbors(*center).iter().enumerate() {
        let others: Vec<usize> = graph.neighbors(arm).iter().map(|&(j, _)| j).filter(|j| j != center).collect();
        match others.as_slice() {
            [m] if !is_anc(*m) => {
                arms[k] = arm;
                mains[k] = *m;
            }
            _ => return Err(Error::Topology(format!("cross arm {arm} must lead to exactly one main qubit"))),
        }
    }
    Ok(Cross { center: *center, arms, mains })
}

/// CZ between two of the four mains of a cross; the unused arms stay ground.
pub fn cross_cz(graph: &DeviceGraph, cross: &Cross, pair: (usize, usize), link: LinkMode, mode: PulseMode) -> Result<PulseSchedule> {
    let i = cross.arm_of(pair.0).ok_or_else(|| Error::Topology(format!("qubit {} is not on the cross", pair.0)))?;
    let j = cross.arm_of(pair.1).ok_or_else(|| Error::Topology(format!("qubit {} is not on the cross", pair.1)))?;
    if i == j {
        return Err(Error::Topology("cross CZ needs two distinct mains".into()));
    }
    chain_cz_5(graph, cross.path(i, j), link, mode)
}

/// Steps of CZ links; links within a step run together.
#[derive(Clone, Debug, PartialEq)]
pub enum LinkStep {
    Legs(Vec<(usize, usize, usize)>),
    Chains(Vec<[usize; 5]>),
}

fn compile(graph: &DeviceGraph, mains: &[usize], steps: &[LinkStep], link: LinkMode) -> Result<Generated> {
    let mut s = PulseSchedule::new(graph.num_qubits());
    for &q in mains {
        s.gate(q, Gate::Ry(HALF_PI));
    }
    let mut edges = Vec::new();
    for step in steps {
        match step {
            LinkStep::Legs(triples) => {
                let legs = triples
                    .iter()
                    .map(|&(a, b, c)| Leg::plan(graph, a, b, c, link))
                    .collect::<Result<Vec<_>>>()?;
                edges.extend(triples.iter().map(|&(a, _, c)| (a, c)));
                let (echo, switch): (Vec<Leg>, Vec<Leg>) = legs.into_iter().partition(|l| l.echo.is_some());
                emit_legs(&mut s, &switch)?;
                emit_legs(&mut s, &echo)?;
            }
            LinkStep::Chains(paths) => {
                for &p in paths {
                    chain5_into(&mut s, graph, p, link)?;
                    edges.push((p[0], p[4]));
                }
            }
        }
    }
    Ok(Generated { schedule: s, certificate: GraphStateCertificate::new(mains.to_vec(), edges)? })
}

fn same_topology(graph: &DeviceGraph, reference: &DeviceGraph) -> bool {
    let key = |g: &DeviceGraph| g.edges().iter().map(|e| (e.a.min(e.b), e.a.max(e.b))).collect::<BTreeSet<_>>();
    graph.num_qubits() == reference.num_qubits()
        && graph.qubits().iter().zip(reference.qubits()).all(|(a, b)| a.role.is_main() == b.role.is_main())
        && key(graph) == key(reference)
}

/// 1D cluster state on the mains of a chain, in two rounds of disjoint links.
pub fn generate_1d(graph: &DeviceGraph, asymmetric: bool) -> Result<Generated> {
    let n = graph.num_qubits();
    if n < 3 || n % 2 == 0 {
        return Err(Error::Topology(format!("chain must have 2m-1 qubits, got {n}")));
    }
    let m = n.div_ceil(2);
    if m % 2 != 0 {
        return Err(Error::InvalidParameter(format!("chain needs an even number of main qubits, got {m}")));
    }
    let reference = crate::device::build_chain(m, &crate::device::Couplings::Uniform(1.0))?;
    if !same_topology(graph, &reference) {
        return Err(Error::Topology("graph is not a main/ancilla chain".into()));
    }
    let mains: Vec<usize> = (0..m).map(|k| 2 * k).collect();
    let link = |k: usize| (2 * k, 2 * k + 1, 2 * k + 2);
    let step1 = (0..m / 2).map(|p| link(2 * p)).collect();
    let step2 = (0..m / 2 - 1).map(|p| link(2 * p + 1)).collect();
    let mode = if asymmetric { LinkMode::Echo } else { LinkMode::Auto };
    compile(graph, &mains, &[LinkStep::Legs(step1), LinkStep::Legs(step2)], mode)
}

/// Schedule variant for the square lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeSchedule {
    /// All ancillas at once; every ancilla needs equal couplings on both sides.
    Simultaneous,
    /// Column pairs, column chains, then the two halves of the rows.
    FourStep,
}

/// 2D cluster state on the `m × m` mains of a lattice graph.
pub fn generate_2d(graph: &DeviceGraph, variant: LatticeSchedule, link: LinkMode) -> Result<Generated> {
    let n_mains = graph.mains().len();
    let m = (n_mains as f64).sqrt().round() as usize;
    if m * m != n_mains || m < 2 || m % 2 != 0 {
        return Err(Error::Topology(format!("lattice needs an even m × m block of mains, got {n_mains}")));
    }
    let reference = crate::device::build_2d_lattice(m, 1.0)?;
    if !same_topology(graph, &reference) || graph.qubits().iter().zip(reference.qubits()).any(|(a, b)| a.pos != b.pos) {
        return Err(Error::Topology("graph is not a square lattice with ancillas on the edges".into()));
    }
    let at: BTreeMap<[i64; 2], usize> = graph.qubits().iter().filter_map(|q| Some((q.pos?, q.id))).collect();
    let main = |r: usize, c: usize| at[&[2 * c as i64, 2 * r as i64]];
    let vertical = |r: usize, c: usize| (main(r, c), at[&[2 * c as i64, 2 * r as i64 + 1]], main(r + 1, c));
    let horizontal = |r: usize, c: usize| (main(r, c), at[&[2 * c as i64 + 1, 2 * r as i64]], main(r, c + 1));
    let mains: Vec<usize> = (0..m).flat_map(|r| (0..m).map(move |c| (r, c))).map(|(r, c)| main(r, c)).collect();
    let steps = match variant {
        LatticeSchedule::Simultaneous => {
            let mut legs: Vec<(usize, usize, usize)> = Vec::new();
            for r in 0..m {
                for c in 0..m {
                    if r + 1 < m {
                        legs.push(vertical(r, c));
                    }
                    if c + 1 < m {
                        legs.push(horizontal(r, c));
                    }
                }
            }
            legs.sort_by_key(|l| l.1);
            for &(a, b, c) in &legs {
                if Leg::plan(graph, a, b, c, LinkMode::Auto)?.echo.is_some() || link == LinkMode::Echo {
                    return Err(Error::InvalidParameter(format!(
                        "simultaneous schedule needs equal couplings around every ancilla (ancilla {b})"
                    )));
                }
            }
            vec![LinkStep::Legs(legs)]
        }
        LatticeSchedule::FourStep => {
            let cols = |parity: usize| {
                (0..m)
                    .flat_map(|c| (0..m - 1).filter(move |r| r % 2 == parity).map(move |r| (r, c)))
                    .map(|(r, c)| vertical(r, c))
                    .collect::<Vec<_>>()
            };
            // syndrome qubits sit where r + c is odd
            let rows = |syndrome_left: bool| {
                (0..m)
                    .flat_map(|r| (0..m - 1).map(move |c| (r, c)))
                    .filter(|&(r, c)| ((r + c) % 2 == 1) == syndrome_left)
                    .map(|(r, c)| horizontal(r, c))
                    .collect::<Vec<_>>()
            };
            vec![
                LinkStep::Legs(cols(0)),
                LinkStep::Legs(cols(1)),
                LinkStep::Legs(rows(true)),
                LinkStep::Legs(rows(false)),
            ]
        }
    };
    compile(graph, &mains, &steps, link)
}

/// Link steps of the bilayer generator.
///
/// 1. row chains inside each tile (two rounds of disjoint links);
/// 2. closing each row across the tile boundary through the boundary cross,
///    after which the state is a product of the top-row and bottom-row graphs;
/// 3. vertical links, then slant links through the two inner crosses.
pub fn bilayer_steps(layout: &BilayerLayout) -> Vec<LinkStep> {
    let triples = |pick: &dyn Fn(usize) -> Vec<(usize, usize, usize)>| {
        (0..layout.tiles).flat_map(pick).collect::<Vec<_>>()
    };
    let h = &layout.horizontal;
    let step1a = triples(&|t| vec![h[t][0], h[t][2]]);
    let step1b = triples(&|t| vec![h[t][1], h[t][3]]);
    let boundary: Vec<[usize; 5]> = (0..layout.tiles)
        .flat_map(|t| {
            let x = layout.crosses[t][2];
            [x.path(0, 1), x.path(2, 3)]
        })
        .collect();
    let vertical = triples(&|t| layout.vertical[t].to_vec());
    let slant: Vec<[usize; 5]> = (0..layout.tiles)
        .flat_map(|t| {
            let [left, mid, _] = layout.crosses[t];
            [left.path(0, 3), mid.path(1, 2)]
        })
        .collect();
    vec![
        LinkStep::Legs(step1a),
        LinkStep::Legs(step1b),
        LinkStep::Chains(boundary),
        LinkStep::Legs(vertical),
        LinkStep::Chains(slant),
    ]
}

/// Bilayer cluster state; `through_step` in `1..=3` stops after that step.
pub fn generate_3d_bilayer_partial(graph: &DeviceGraph, link: LinkMode, through_step: usize) -> Result<Generated> {
    let layout = BilayerLayout::from_graph(graph)?;
    let steps = bilayer_steps(&layout);
    let take = match through_step {
        1 => 2,
        2 => 3,
        3 => 5,
        k => return Err(Error::InvalidParameter(format!("bilayer has steps 1..=3, got {k}"))),
    };
    let mains: Vec<usize> = layout.mains.iter().flatten().copied().collect();
    let mut mains_sorted = mains.clone();
    mains_sorted.sort_unstable();
    compile(graph, &mains_sorted, &steps[..take], link)
}

pub fn generate_3d_bilayer(graph: &DeviceGraph, link: LinkMode) -> Result<Generated> {
    generate_3d_bilayer_partial(graph, link, 3)
}

/// Measure each qubit in `basis` (no correction).
pub fn measure_out(num_qubits: usize, qubits: &[usize], basis: Basis) -> PulseSchedule {
    let mut s = PulseSchedule::new(num_qubits);
    for &q in qubits {
        s.measure(q, basis);
    }
    s
}

/// Return each qubit to ground: Z measurement, then `X` if it was excited.
pub fn reset_schedule(num_qubits: usize, qubits: &[usize]) -> PulseSchedule {
    let mut s = PulseSchedule::new(num_qubits);
    for &q in qubits {
        let m = s.measure(q, Basis::Z);
        s.feedforward(
            vec![m],
            vec![Branch { outcomes: vec![Outcome::Plus], ops: vec![BranchOp::Instant { qubit: q, gate: Gate::X }] }],
        );
    }
    s
}

/// Probability that a measurement or its feedforward fails.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureModel {
    pub epsilon_m: f64,
}

impl FailureModel {
    pub fn new(epsilon_m: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon_m) {
            return Err(Error::InvalidParameter(format!("ε_m must lie in [0, 1], got {epsilon_m}")));
        }
        Ok(FailureModel { epsilon_m })
    }
}

/// Dense state with `phi` on (`a`, `c`) and every other qubit ground.
pub fn embed_pair(n: usize, a: usize, c: usize, phi: &StateVector) -> Result<StateVector> {
    if phi.num_qubits() != 2 {
        return Err(Error::DimensionMismatch(2, phi.num_qubits()));
    }
    let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); 1usize << n];
    for (k, amp) in phi.amplitudes().iter().enumerate() {
        amps[(k & 1) << a | (k >> 1) << c] = *amp;
    }
    StateVector::from_amplitudes(n, amps)
}

/// Ideal switching CZ on `phi`, returning the full final state.
fn switched_state(graph: &DeviceGraph, abc: (usize, usize, usize), phi: &StateVector) -> Result<StateVector> {
    let (a, b, c) = abc;
    let sched = switching_cz(graph, a, b, c, PulseMode::Ideal)?;
    let mut state = embed_pair(graph.num_qubits(), a, c, phi)?;
    execute(&sched, graph, &mut state, &mut OutcomePolicy::force([Outcome::Plus]))?;
    Ok(state)
}

/// Reduced state of (`a`, `c`) when, with probability ε_m, the ancilla is left
/// excited and the couplings keep acting for `residual_time`.
pub fn apply_failure_model(
    graph: &DeviceGraph,
    abc: (usize, usize, usize),
    phi: &StateVector,
    model: FailureModel,
    residual_time: f64,
) -> Result<DensityMatrix> {
    let (a, b, c) = abc;
    FailureModel::new(model.epsilon_m)?;
    let ideal = switched_state(graph, abc, phi)?;
    let mut failed = ideal.clone();
    failed.apply_instant_gate(b, Gate::X)?;
    failed.evolve_diagonal(graph, residual_time)?;
    ideal.reduced_density(&[a, c])?.mix(&failed.reduced_density(&[a, c])?, model.epsilon_m)
}

/// Fidelity of (`a`, `c`) with the ideal CZ output when the ancilla is left
/// excited after the switching protocol and the couplings act for `t`.
pub fn excited_ancilla_residual(graph: &DeviceGraph, abc: (usize, usize, usize), phi: &StateVector, t: f64) -> Result<f64> {
    let (a, b, c) = abc;
    let ideal = switched_state(graph, abc, phi)?;
    let mut wrong = ideal.clone();
    wrong.apply_instant_gate(b, Gate::X)?;
    wrong.evolve_diagonal(graph, t)?;
    let mut target = phi.clone();
    target.apply_cz(0, 1)?;
    wrong.reduced_density(&[a, c])?.fidelity_with_pure(target.amplitudes())
}
