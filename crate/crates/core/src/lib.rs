//! Simulation of measurement-based CZ gates on always-on Ising-coupled qubits.

pub mod certificate;
pub mod density;
pub mod device;
pub mod error;
pub mod error_analysis;
pub mod gate;
pub mod policy;
pub mod protocols;
pub mod schedule;
pub mod stabilizer;
pub mod statevector;

pub use density::DensityMatrix;
pub use device::{BilayerLayout, Couplings, Cross, DeviceGraph, Edge, EchoTiming, Qubit, QubitRole};
pub use error::{Error, Result};
pub use gate::{Basis, Gate, Outcome};
pub use policy::{MeasurementRecord, OutcomePolicy};
pub use statevector::{DrivePulse, LocalState, StateVector};
pub use certificate::{CertificateReport, GraphStateCertificate};
pub use stabilizer::StabilizerTableau;
pub use protocols::{FailureModel, Generated, LatticeSchedule, LinkMode, PulseMode};
pub use schedule::{execute, Backend, PulseSchedule, Step};
pub use error_analysis::{DephasingForm, ErrorBudget, Variant};
