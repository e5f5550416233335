//! Graph-state stabilizer certificates.

use crate::error::{Error, Result};
use crate::gate::Basis;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Target graph state on a subset of qubits; every other qubit must be ground.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStateCertificate {
    pub vertices: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

impl GraphStateCertificate {
    pub fn new(vertices: Vec<usize>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let set: BTreeSet<usize> = vertices.iter().copied().collect();
        if set.len() != vertices.len() {
            return Err(Error::InvalidParameter("duplicate certificate vertex".into()));
        }
        let mut seen = BTreeSet::new();
        for &(a, b) in &edges {
            if a == b || !set.contains(&a) || !set.contains(&b) || !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidParameter(format!("bad certificate edge ({a}, {b})")));
            }
        }
        Ok(GraphStateCertificate { vertices, edges })
    }

    /// `K_a = X_a Π_{b ∈ N(a)} Z_b` for every vertex, in vertex order.
    pub fn stabilizers(&self) -> Vec<(usize, Vec<(usize, Basis)>)> {
        let mut nbrs: BTreeMap<usize, Vec<usize>> = self.vertices.iter().map(|&v| (v, vec![])).collect();
        for &(a, b) in &self.edges {
            nbrs.get_mut(&a).expect("validated").push(b);
            nbrs.get_mut(&b).expect("validated").push(a);
        }
        self.vertices
            .iter()
            .map(|&v| {
                let mut k = vec![(v, Basis::X)];
                let mut ns = nbrs[&v].clone();
                ns.sort_unstable();
                k.extend(ns.into_iter().map(|b| (b, Basis::Z)));
                (v, k)
            })
            .collect()
    }

    pub fn contains(&self, q: usize) -> bool {
        self.vertices.contains(&q)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilizerResult {
    pub vertex: usize,
    pub expectation: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub stabilizers: Vec<StabilizerResult>,
    /// Every qubit outside the certificate is in the ground state.
    pub spectators_ground: bool,
    pub pass: bool,
}

impl CertificateReport {
    pub fn from_parts(stabilizers: Vec<StabilizerResult>, spectators_ground: bool) -> Self {
        let pass = spectators_ground && stabilizers.iter().all(|s| s.pass);
        CertificateReport { stabilizers, spectators_ground, pass }
    }

    pub fn failing_vertices(&self) -> Vec<usize> {
        self.stabilizers.iter().filter(|s| !s.pass).map(|s| s.vertex).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
