//! Qubit lattices, always-on coupling graphs and rotating-frame assignment.
//!
//! Rates are in units of 1/T2 and times in units of T2. Only detunings
//! `ω - ω'` enter the dynamics, so builders set every `ω` to zero and store the
//! frame offsets.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitRole {
    Logical,
    SyndromeX,
    SyndromeZ,
    Ancilla,
}

impl QubitRole {
    pub fn is_main(self) -> bool {
        self != QubitRole::Ancilla
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Qubit {
    pub id: usize,
    pub role: QubitRole,
    pub omega: f64,
    /// Integer lattice coordinate (x, y), when the builder has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<[i64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub g: f64,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    qubits: Vec<Qubit>,
    edges: Vec<Edge>,
    #[serde(default)]
    frame: BTreeMap<usize, f64>,
}

/// A simple graph of qubits with always-on Ising couplings.
///
/// Qubit ids are dense `0..n` and double as bit positions in dense states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct DeviceGraph {
    qubits: Vec<Qubit>,
    edges: Vec<Edge>,
    frame: BTreeMap<usize, f64>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl TryFrom<RawGraph> for DeviceGraph {
    type Error = Error;
    fn try_from(raw: RawGraph) -> Result<Self> {
        DeviceGraph::new(raw.qubits, raw.edges, raw.frame)
    }
}

impl From<DeviceGraph> for RawGraph {
    fn from(g: DeviceGraph) -> Self {
        RawGraph { qubits: g.qubits, edges: g.edges, frame: g.frame }
    }
}

impl DeviceGraph {
    pub fn new(mut qubits: Vec<Qubit>, edges: Vec<Edge>, frame: BTreeMap<usize, f64>) -> Result<Self> {
        qubits.sort_by_key(|q| q.id);
        for (i, q) in qubits.iter().enumerate() {
            if q.id != i {
                return Err(Error::InvalidGraph(format!("qubit ids must be dense 0..n, missing {i}")));
            }
            if !q.omega.is_finite() {
                return Err(Error::InvalidGraph(format!("qubit {i} has non-finite omega")));
            }
        }
        let n = qubits.len();
        let mut seen = BTreeSet::new();
        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            if e.a >= n || e.b >= n {
                return Err(Error::InvalidGraph(format!("edge ({}, {}) references unknown qubit", e.a, e.b)));
            }
            if e.a == e.b {
                return Err(Error::InvalidGraph(format!("self-loop on qubit {}", e.a)));
            }
            if !(e.g > 0.0 && e.g.is_finite()) {
                return Err(Error::InvalidGraph(format!("edge ({}, {}) has coupling {} <= 0", e.a, e.b, e.g)));
            }
            if !seen.insert((e.a.min(e.b), e.a.max(e.b))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", e.a, e.b)));
            }
            adjacency[e.a].push((e.b, e.g));
            adjacency[e.b].push((e.a, e.g));
        }
        for adj in adjacency.iter_mut() {
            adj.sort_by_key(|&(j, _)| j);
        }
        if let Some(&k) = frame.keys().find(|&&k| k >= n) {
            return Err(Error::InvalidGraph(format!("frame entry for unknown qubit {k}")));
        }
        Ok(DeviceGraph { qubits, edges, frame, adjacency })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubits(&self) -> &[Qubit] {
        &self.qubits
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn frame(&self) -> &BTreeMap<usize, f64> {
        &self.frame
    }

    pub fn role(&self, q: usize) -> QubitRole {
        self.qubits[q].role
    }

    pub fn pos(&self, q: usize) -> Option<[i64; 2]> {
        self.qubits[q].pos
    }

    pub fn neighbors(&self, q: usize) -> &[(usize, f64)] {
        &self.adjacency[q]
    }

    pub fn coupling(&self, a: usize, b: usize) -> Option<f64> {
        self.adjacency.get(a)?.iter().find(|&&(j, _)| j == b).map(|&(_, g)| g)
    }

    pub fn check_qubit(&self, q: usize) -> Result<()> {
        if q < self.num_qubits() {
            Ok(())
        } else {
            Err(Error::QubitOutOfRange(q))
        }
    }

    /// `ω - ω'` for qubit `q`; a qubit without a frame entry sits in its own frame.
    pub fn detuning(&self, q: usize) -> f64 {
        let omega = self.qubits[q].omega;
        omega - self.frame.get(&q).copied().unwrap_or(omega)
    }

    /// Coefficient of `n_q` in the diagonal Hamiltonian,
    /// `(ω_q - ω'_q) - Σ_j g_(q,j) / 2`; zero in the frame of [`assign_frame`].
    pub fn linear_terms(&self) -> Vec<f64> {
        (0..self.num_qubits())
            .map(|q| self.detuning(q) - self.adjacency[q].iter().map(|&(_, g)| 0.5 * g).sum::<f64>())
            .collect()
    }

    pub fn mains(&self) -> Vec<usize> {
        self.qubits.iter().filter(|q| q.role.is_main()).map(|q| q.id).collect()
    }

    pub fn ancillas(&self) -> Vec<usize> {
        self.qubits.iter().filter(|q| !q.role.is_main()).map(|q| q.id).collect()
    }

    /// Frame in which a ground-state qubit decouples all of its neighbours:
    /// `ω_q - ω'_q = Σ_j g_(q,j) / 2`.
    pub fn assign_frame(&self) -> DeviceGraph {
        let mut out = self.clone();
        out.frame = (0..self.num_qubits())
            .map(|q| {
                let half_sum: f64 = self.adjacency[q].iter().map(|&(_, g)| 0.5 * g).sum();
                (q, self.qubits[q].omega - half_sum)
            })
            .collect();
        out
    }

    /// True when every qubit satisfies the resonance condition of [`assign_frame`].
    pub fn frame_is_assigned(&self, tol: f64) -> bool {
        (0..self.num_qubits()).all(|q| {
            let half_sum: f64 = self.adjacency[q].iter().map(|&(_, g)| 0.5 * g).sum();
            (self.detuning(q) - half_sum).abs() <= tol * half_sum.max(1.0)
        })
    }

    /// Copy with every coupling replaced by `f(edge)`, frame reassigned.
    pub fn with_couplings(&self, mut f: impl FnMut(&Edge) -> f64) -> Result<DeviceGraph> {
        let edges = self.edges.iter().map(|e| Edge { a: e.a, b: e.b, g: f(e) }).collect();
        Ok(DeviceGraph::new(self.qubits.clone(), edges, BTreeMap::new())?.assign_frame())
    }

    /// Couplings drawn uniformly from `[g_min, g_max]` per edge, frame reassigned.
    pub fn randomize_couplings<R: Rng>(&self, g_min: f64, g_max: f64, rng: &mut R) -> Result<DeviceGraph> {
        if !(g_min > 0.0 && g_max >= g_min) {
            return Err(Error::InvalidParameter(format!("coupling range [{g_min}, {g_max}]")));
        }
        self.with_couplings(|_| if g_max > g_min { rng.gen_range(g_min..=g_max) } else { g_min })
    }

    /// Induced subgraph on `ids`, renumbered in the given order, frame reassigned.
    pub fn subgraph(&self, ids: &[usize]) -> Result<DeviceGraph> {
        let index: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(i, &q)| (q, i)).collect();
        if index.len() != ids.len() {
            return Err(Error::InvalidParameter("subgraph ids must be distinct".into()));
        }
        let mut qubits = Vec::with_capacity(ids.len());
        for (i, &q) in ids.iter().enumerate() {
            self.check_qubit(q)?;
            qubits.push(Qubit { id: i, ..self.qubits[q].clone() });
        }
        let edges = self
            .edges
            .iter()
            .filter_map(|e| Some(Edge { a: *index.get(&e.a)?, b: *index.get(&e.b)?, g: e.g }))
            .collect();
        Ok(DeviceGraph::new(qubits, edges, BTreeMap::new())?.assign_frame())
    }

    /// Ancilla sitting between mains `a` and `c`, if exactly one exists.
    pub fn mediating_ancilla(&self, a: usize, c: usize) -> Option<usize> {
        let na: BTreeSet<usize> = self.adjacency[a].iter().map(|&(j, _)| j).collect();
        let shared: Vec<usize> = self.adjacency[c]
            .iter()
            .map(|&(j, _)| j)
            .filter(|j| na.contains(j) && self.qubits[*j].role == QubitRole::Ancilla)
            .collect();
        match shared.as_slice() {
            [b] => Some(*b),
            _ => None,
        }
    }

    fn from_sites(sites: Vec<([i64; 2], QubitRole)>, links: Vec<([i64; 2], [i64; 2], f64)>) -> Result<DeviceGraph> {
        // row-major: y first, then x
        let mut sites = sites;
        sites.sort_by_key(|&([x, y], _)| (y, x));
        let index: BTreeMap<[i64; 2], usize> = sites.iter().enumerate().map(|(i, &(p, _))| (p, i)).collect();
        let qubits = sites
            .iter()
            .enumerate()
            .map(|(id, &(p, role))| Qubit { id, role, omega: 0.0, pos: Some(p) })
            .collect();
        let mut edges = Vec::with_capacity(links.len());
        for (p, q, g) in links {
            let (a, b) = (index[&p], index[&q]);
            edges.push(Edge { a: a.min(b), b: a.max(b), g });
        }
        edges.sort_by_key(|e| (e.a, e.b));
        Ok(DeviceGraph::new(qubits, edges, BTreeMap::new())?.assign_frame())
    }
}

/// Coupling specification for [`build_chain`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Couplings {
    Uniform(f64),
    PerEdge(Vec<f64>),
}

impl Couplings {
    /// One value per edge; a single per-edge value is broadcast.
    pub fn expand(&self, n_edges: usize) -> Result<Vec<f64>> {
        match self {
            Couplings::Uniform(g) => Ok(vec![*g; n_edges]),
            Couplings::PerEdge(v) if v.len() == n_edges => Ok(v.clone()),
            Couplings::PerEdge(v) if v.len() == 1 => Ok(vec![v[0]; n_edges]),
            Couplings::PerEdge(v) => Err(Error::InvalidParameter(format!("expected {n_edges} couplings, got {}", v.len()))),
        }
    }
}

/// `m` main qubits interleaved with `m - 1` ancillas: M A M A ... M.
pub fn build_chain(m: usize, couplings: &Couplings) -> Result<DeviceGraph> {
    if m < 2 || m % 2 != 0 {
        return Err(Error::InvalidParameter(format!("chain needs an even number of main qubits >= 2, got {m}")));
    }
    let n_edges = 2 * (m - 1);
    let gs = couplings.expand(n_edges)?;
    let sites = (0..2 * m - 1)
        .map(|x| {
            let role = if x % 2 == 0 { QubitRole::Logical } else { QubitRole::Ancilla };
            ([x as i64, 0], role)
        })
        .collect();
    let links = (0..n_edges).map(|k| ([k as i64, 0], [k as i64 + 1, 0], gs[k])).collect();
    DeviceGraph::from_sites(sites, links)
}

/// Two main qubits joined by a line of `ancillas` ancillas: M A ... A M.
pub fn build_ancilla_path(ancillas: usize, couplings: &Couplings) -> Result<DeviceGraph> {
    if ancillas == 0 {
        return Err(Error::InvalidParameter("path needs at least one ancilla".into()));
    }
    let gs = couplings.expand(ancillas + 1)?;
    let sites = (0..=ancillas + 1)
        .map(|x| {
            let role = if x == 0 || x == ancillas + 1 { QubitRole::Logical } else { QubitRole::Ancilla };
            ([x as i64, 0], role)
        })
        .collect();
    let links = gs.iter().enumerate().map(|(k, &g)| ([k as i64, 0], [k as i64 + 1, 0], g)).collect();
    DeviceGraph::from_sites(sites, links)
}

/// Role of the main qubit in lattice row `r`, column `c` of the 2D layout.
///
/// Logical qubits sit on the even sublattice; syndrome qubits on the odd one,
/// bit-flip type on even rows and dephasing type on odd rows.
pub fn lattice_role(r: usize, c: usize) -> QubitRole {
    if (r + c) % 2 == 0 {
        QubitRole::Logical
    } else if r % 2 == 0 {
        QubitRole::SyndromeX
    } else {
        QubitRole::SyndromeZ
    }
}

/// `m × m` main qubits on a square grid with an ancilla on every edge midpoint.
///
/// Mains sit at lattice coordinates `(2c, 2r)`.
pub fn build_2d_lattice(m: usize, g: f64) -> Result<DeviceGraph> {
    if m < 2 || m % 2 != 0 {
        return Err(Error::InvalidParameter(format!("lattice side must be even and >= 2, got {m}")));
    }
    let mut sites = Vec::new();
    let mut links = Vec::new();
    let size = 2 * m as i64 - 1;
    for y in 0..size {
        for x in 0..size {
            match (x % 2, y % 2) {
                (0, 0) => sites.push(([x, y], lattice_role((y / 2) as usize, (x / 2) as usize))),
                (1, 0) => {
                    sites.push(([x, y], QubitRole::Ancilla));
                    links.push(([x - 1, y], [x, y], g));
                    links.push(([x, y], [x + 1, y], g));
                }
                (0, 1) => {
                    sites.push(([x, y], QubitRole::Ancilla));
                    links.push(([x, y - 1], [x, y], g));
                    links.push(([x, y], [x, y + 1], g));
                }
                _ => {}
            }
        }
    }
    DeviceGraph::from_sites(sites, links)
}

/// Four main qubits joined through a centre ancilla and four arm ancillas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cross {
    pub center: usize,
    /// `arms[i]` links `mains[i]` to the centre.
    pub arms: [usize; 4],
    pub mains: [usize; 4],
}

impl Cross {
    /// Ancilla path `main_i - arm_i - center - arm_j - main_j`.
    pub fn path(&self, i: usize, j: usize) -> [usize; 5] {
        [self.mains[i], self.arms[i], self.center, self.arms[j], self.mains[j]]
    }

    pub fn arm_of(&self, main: usize) -> Option<usize> {
        self.mains.iter().position(|&m| m == main)
    }

    pub fn qubits(&self) -> [usize; 9] {
        let [a0, a1, a2, a3] = self.arms;
        let [m0, m1, m2, m3] = self.mains;
        [m0, m1, m2, m3, a0, a1, a2, a3, self.center]
    }
}

/// Width of one bilayer tile along x.
pub const BILAYER_TILE_WIDTH: i64 = 12;

// One bilayer tile, coordinates relative to the tile origin. Tiles repeat
// along x with period 12 and wrap around, so the tile owns the cross on its
// right boundary and that cross reaches the next tile's first column.
//
//   y=0   T0 -a- T1 -a- T2          T0' (next tile)
//          |  \ /  |  \ /  |  \ /
//   y=2    a   X   a   X   a   X
//          |  / \  |  / \  |  / \
//   y=4   B0 -a- B1 -a- B2          B0'
//
// Mains: top row logical / syndrome_x / logical, bottom row
// syndrome_z / logical / syndrome_z. Single ancillas sit on the horizontal
// and vertical midpoints (4 + 3); each X is a cross (centre at (x, 2), arms
// on the diagonals), three per tile. 6 mains + 7 + 15 ancillas = 28 qubits.
const BILAYER_MAINS: [([i64; 2], QubitRole); 6] = [
    ([0, 0], QubitRole::Logical),
    ([4, 0], QubitRole::SyndromeX),
    ([8, 0], QubitRole::Logical),
    ([0, 4], QubitRole::SyndromeZ),
    ([4, 4], QubitRole::Logical),
    ([8, 4], QubitRole::SyndromeZ),
];
const BILAYER_SINGLES: [[i64; 2]; 7] = [[2, 0], [6, 0], [2, 4], [6, 4], [0, 2], [4, 2], [8, 2]];
const BILAYER_CROSS_CENTERS: [[i64; 2]; 3] = [[2, 2], [6, 2], [10, 2]];
const CROSS_ARM_OFFSETS: [[i64; 2]; 4] = [[-1, -1], [1, -1], [-1, 1], [1, 1]];

/// Tiled bilayer unit cells (28 qubits per tile), periodic along x.
pub fn build_bilayer_unit(tiles: usize, g: f64) -> Result<DeviceGraph> {
    if tiles == 0 {
        return Err(Error::InvalidParameter("bilayer needs at least one tile".into()));
    }
    let period = BILAYER_TILE_WIDTH * tiles as i64;
    let wrap = |[x, y]: [i64; 2]| [x.rem_euclid(period), y];
    let mut sites = Vec::new();
    let mut links = Vec::new();
    for t in 0..tiles as i64 {
        let x0 = t * BILAYER_TILE_WIDTH;
        for &([x, y], role) in &BILAYER_MAINS {
            sites.push(([x0 + x, y], role));
        }
        for &[x, y] in &BILAYER_SINGLES {
            let p = [x0 + x, y];
            sites.push((p, QubitRole::Ancilla));
            let (u, v) = if y != 2 { ([p[0] - 2, y], [p[0] + 2, y]) } else { ([p[0], y - 2], [p[0], y + 2]) };
            links.push((u, p, g));
            links.push((p, v, g));
        }
        for &[cx, cy] in &BILAYER_CROSS_CENTERS {
            let c = [x0 + cx, cy];
            sites.push((c, QubitRole::Ancilla));
            for [dx, dy] in CROSS_ARM_OFFSETS {
                let arm = [c[0] + dx, cy + dy];
                sites.push((arm, QubitRole::Ancilla));
                links.push((c, arm, g));
                links.push((arm, wrap([c[0] + 2 * dx, cy + 2 * dy]), g));
            }
        }
    }
    DeviceGraph::from_sites(sites, links)
}

/// Structure of a graph produced by [`build_bilayer_unit`].
#[derive(Clone, Debug, PartialEq)]
pub struct BilayerLayout {
    pub tiles: usize,
    /// Per tile: [T0, T1, T2, B0, B1, B2].
    pub mains: Vec<[usize; 6]>,
    /// Per tile: horizontal singles [T0-T1, T1-T2, B0-B1, B1-B2] as (main, ancilla, main).
    pub horizontal: Vec<[(usize, usize, usize); 4]>,
    /// Per tile: vertical singles [T0-B0, T1-B1, T2-B2].
    pub vertical: Vec<[(usize, usize, usize); 3]>,
    /// Per tile: crosses at x = 2, 6, 10. Main order in each cross is
    /// [upper-left, upper-right, lower-left, lower-right].
    pub crosses: Vec<[Cross; 3]>,
}

impl BilayerLayout {
    /// Recover the layout from a bilayer graph, checking its topology.
    pub fn from_graph(graph: &DeviceGraph) -> Result<BilayerLayout> {
        let n = graph.num_qubits();
        if n == 0 || n % 28 != 0 {
            return Err(Error::Topology(format!("bilayer graph must have 28 qubits per tile, got {n}")));
        }
        let tiles = n / 28;
        let reference = build_bilayer_unit(tiles, 1.0)?;
        let same_sites = graph.qubits().iter().zip(reference.qubits()).all(|(a, b)| a.pos == b.pos && a.role == b.role);
        let key = |g: &DeviceGraph| g.edges().iter().map(|e| (e.a.min(e.b), e.a.max(e.b))).collect::<BTreeSet<_>>();
        if !same_sites || key(graph) != key(&reference) {
            return Err(Error::Topology("graph is not a bilayer unit layout".into()));
        }
        let period = BILAYER_TILE_WIDTH * tiles as i64;
        let at: BTreeMap<[i64; 2], usize> = graph.qubits().iter().filter_map(|q| Some((q.pos?, q.id))).collect();
        let id = |x: i64, y: i64| at[&[x.rem_euclid(period), y]];
        let mut layout = BilayerLayout { tiles, mains: vec![], horizontal: vec![], vertical: vec![], crosses: vec![] };
        for t in 0..tiles as i64 {
            let x0 = t * BILAYER_TILE_WIDTH;
            let m = BILAYER_MAINS.map(|([x, y], _)| id(x0 + x, y));
            layout.mains.push(m);
            layout.horizontal.push([
                (m[0], id(x0 + 2, 0), m[1]),
                (m[1], id(x0 + 6, 0), m[2]),
                (m[3], id(x0 + 2, 4), m[4]),
                (m[4], id(x0 + 6, 4), m[5]),
            ]);
            layout.vertical.push([
                (m[0], id(x0, 2), m[3]),
                (m[1], id(x0 + 4, 2), m[4]),
                (m[2], id(x0 + 8, 2), m[5]),
            ]);
            layout.crosses.push(BILAYER_CROSS_CENTERS.map(|[cx, cy]| {
                let c = [x0 + cx, cy];
                Cross {
                    center: id(c[0], c[1]),
                    arms: CROSS_ARM_OFFSETS.map(|[dx, dy]| id(c[0] + dx, cy + dy)),
                    mains: CROSS_ARM_OFFSETS.map(|[dx, dy]| id(c[0] + 2 * dx, cy + 2 * dy)),
                }
            }));
        }
        Ok(layout)
    }

    /// Standalone 9-qubit graph of one cross (mains first, then arms, then centre).
    pub fn extract_cross(&self, graph: &DeviceGraph, tile: usize, which: usize) -> Result<(DeviceGraph, Cross)> {
        let cross = *self
            .crosses
            .get(tile)
            .and_then(|c| c.get(which))
            .ok_or_else(|| Error::InvalidParameter(format!("no cross {which} in tile {tile}")))?;
        let sub = graph.subgraph(&cross.qubits())?;
        Ok((sub, Cross { center: 8, arms: [4, 5, 6, 7], mains: [0, 1, 2, 3] }))
    }
}

/// Spin-echo timing for a three-qubit line with couplings `g1` and `g2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EchoTiming {
    pub t1: f64,
    pub t2: f64,
    /// Larger coupling used in the formulas.
    pub g1: f64,
    pub g2: f64,
    /// The caller passed `g1 < g2`; the roles were exchanged so the π pulse
    /// belongs on the other end of the line.
    pub swapped: bool,
}

/// `t1 = π(g1+g2)/(2 g1 g2)`, `t2 = π(g1-g2)/(2 g1 g2)`, so that
/// `g1 (t1 - t2) = g2 (t1 + t2) = π`.
pub fn spin_echo_times(g1: f64, g2: f64) -> Result<EchoTiming> {
    if !(g1 > 0.0 && g2 > 0.0 && g1.is_finite() && g2.is_finite()) {
        return Err(Error::InvalidParameter(format!("couplings must be positive, got {g1}, {g2}")));
    }
    let (hi, lo, swapped) = if g1 >= g2 { (g1, g2, false) } else { (g2, g1, true) };
    let denom = 2.0 * hi * lo;
    Ok(EchoTiming { t1: PI * (hi + lo) / denom, t2: PI * (hi - lo) / denom, g1: hi, g2: lo, swapped })
}
