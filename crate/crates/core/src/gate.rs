//! Single-qubit gates, measurement bases and 2×2 matrix helpers.
//!
//! Matrices act on the (ground, excited) basis of one qubit: index 0 is the
//! state annihilated by the excitation projector `n = (1+Z)/2`, index 1 is the
//! excited state. `X`, `Y` and the instant `Z` gate use the usual
//! computational-basis matrices in this ordering, so `Z` here equals `1 - 2n`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::fmt;

pub type Mat2 = [[C64; 2]; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Instantaneous single-qubit gate, the λ→∞ limit of a drive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", content = "angle")]
pub enum Gate {
    X,
    Y,
    Z,
    H,
    /// diag(1, i)
    SPlus,
    /// diag(1, -i)
    SMinus,
    /// exp(-i θ X / 2)
    Rx(f64),
    /// exp(-i θ Y / 2)
    Ry(f64),
    /// diag(1, e^{iφ}); used for frame bookkeeping after echo pulses.
    Phase(f64),
}

impl Gate {
    pub fn matrix(&self) -> Mat2 {
        match *self {
            Gate::X => [[ZERO, ONE], [ONE, ZERO]],
            Gate::Y => [[ZERO, -I], [I, ZERO]],
            Gate::Z => [[ONE, ZERO], [ZERO, -ONE]],
            Gate::H => {
                let h = C64::new(FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            Gate::SPlus => [[ONE, ZERO], [ZERO, I]],
            Gate::SMinus => [[ONE, ZERO], [ZERO, -I]],
            Gate::Rx(t) => {
                let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
                [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
            }
            Gate::Ry(t) => {
                let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
                [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
            }
            Gate::Phase(p) => [[ONE, ZERO], [ZERO, C64::from_polar(1.0, p)]],
        }
    }

    /// Diagonal gates commute with the Ising evolution and never need a drive.
    pub fn is_diagonal(&self) -> bool {
        matches!(self, Gate::Z | Gate::SPlus | Gate::SMinus | Gate::Phase(_))
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Rx(t) => write!(f, "Rx({t})"),
            Gate::Ry(t) => write!(f, "Ry({t})"),
            Gate::Phase(p) => write!(f, "Phase({p})"),
            other => write!(f, "{other:?}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

/// A ±1 measurement result.
///
/// For the Z basis the sign follows the Hamiltonian's `Z = 2n - 1`: `Minus` is
/// the ground state and `Plus` the excited state. For X and Y it is the usual
/// eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn sign(self) -> f64 {
        self.value() as f64
    }

    pub fn flip(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }

    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];
}

impl From<Outcome> for i8 {
    fn from(o: Outcome) -> i8 {
        o.value()
    }
}

impl TryFrom<i8> for Outcome {
    type Error = String;
    fn try_from(v: i8) -> Result<Self, String> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            _ => Err(format!("outcome must be +1 or -1, got {v}")),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+1",
            Outcome::Minus => "-1",
        })
    }
}

/// Eigenvector of `basis` with the given outcome, in (ground, excited) order.
pub fn eigenvector(basis: Basis, outcome: Outcome) -> [C64; 2] {
    let h = FRAC_1_SQRT_2;
    match (basis, outcome) {
        (Basis::Z, Outcome::Minus) => [ONE, ZERO],
        (Basis::Z, Outcome::Plus) => [ZERO, ONE],
        (Basis::X, o) => [C64::new(h, 0.0), C64::new(h * o.sign(), 0.0)],
        (Basis::Y, o) => [C64::new(h, 0.0), C64::new(0.0, h * o.sign())],
    }
}

/// exp(-i H t) for a Hermitian 2×2 `H`, in closed form.
///
/// `H = m·1 + K` with `K` traceless; `exp(-iKt) = cos(Ωt) - i sin(Ωt)/Ω · K`
/// where `Ω² = -det K`.
pub fn expm_hermitian2(h: &Mat2, t: f64) -> Mat2 {
    let m = 0.5 * (h[0][0].re + h[1][1].re);
    let kz = 0.5 * (h[0][0].re - h[1][1].re);
    let w = h[0][1];
    let omega = (kz * kz + w.norm_sqr()).sqrt();
    let (c, sinc) = if omega * t.abs() < 1e-8 {
        // sin(Ωt)/Ω ≈ t (1 - (Ωt)²/6)
        let x = omega * t;
        (1.0 - 0.5 * x * x, t * (1.0 - x * x / 6.0))
    } else {
        ((omega * t).cos(), (omega * t).sin() / omega)
    };
    let phase = C64::from_polar(1.0, -m * t);
    let mi = C64::new(0.0, -sinc);
    [
        [phase * (c + mi * kz), phase * mi * w],
        [phase * mi * w.conj(), phase * (c - mi * kz)],
    ]
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Drive operator `Â^θ = [[0, e^{-iθ}], [e^{iθ}, 0]]`.
pub fn drive_operator(theta: f64) -> Mat2 {
    [[ZERO, C64::from_polar(1.0, -theta)], [C64::from_polar(1.0, theta), ZERO]]
}

/// Reduce an angle to (-π, π].
pub(crate) fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// If `a` is within `tol` of an integer multiple of `unit` (mod 2π), return
/// that multiple reduced to `0..(2π/unit)`.
pub(crate) fn quantize_angle(a: f64, unit: f64, tol: f64) -> Option<u32> {
    let r = a.rem_euclid(2.0 * PI);
    let k = (r / unit).round();
    if (r - k * unit).abs() <= tol {
        let period = (2.0 * PI / unit).round() as u32;
        Some((k as u32) % period)
    } else {
        None
    }
}

pub(crate) const HALF_PI: f64 = FRAC_PI_2;
