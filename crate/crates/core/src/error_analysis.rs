//! Error budget of the switching protocols and the optimal coupling strength.
//!
//! All rates are in units of 1/T2 when `t2 = 1`.

use crate::device::{build_chain, Couplings};
use crate::error::{Error, Result};
use crate::statevector::{DrivePulse, StateVector, GROUND, PLUS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

/// Infidelity of a π/2 pulse on a qubit whose `n_neighbors` neighbours are
/// all excited, with the drive resonant for the all-ground configuration.
///
/// The qubit sees `H = (g n / 2) Z + (λ/2) Y` for `t = π / (2λ)`.
pub fn epsilon_pi2(g: f64, lambda: f64, n_neighbors: u32) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("Rabi frequency must be positive, got {lambda}")));
    }
    if !(g >= 0.0) {
        return Err(Error::InvalidParameter(format!("coupling must be non-negative, got {g}")));
    }
    let z = 0.5 * g * n_neighbors as f64;
    let w = (4.0 * z * z + lambda * lambda).sqrt();
    let a = 0.5 * (PI / (2.0 * lambda)) * w;
    let amp = (num_complex::Complex64::new(lambda, 2.0 * z) * (a.sin() / w) + a.cos()) / std::f64::consts::SQRT_2;
    Ok((1.0 - amp.norm_sqr()).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DephasingForm {
    /// `T_CZ / T2`, the small-`T_CZ` expansion used in the fidelity budget.
    #[default]
    Linearized,
    /// `(1 - e^{-T_CZ/T2}) / 2`, the dephasing probability of a single qubit.
    Exact,
}

/// Dephasing error of one qubit over one CZ duration `π / g`.
pub fn epsilon_d(g: f64, t2: f64, form: DephasingForm) -> Result<f64> {
    if !(g > 0.0 && t2 > 0.0) {
        return Err(Error::InvalidParameter(format!("need g > 0 and T2 > 0, got {g}, {t2}")));
    }
    let x = PI / g / t2;
    Ok(match form {
        DephasingForm::Linearized => x,
        DephasingForm::Exact => -0.5 * (-x).exp_m1(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Three-qubit switching: `F = 1 - (2 ε_π/2 + 3 ε_d)`.
    Switch3,
    /// Five-qubit chain of the bilayer: `F = 1 - (4 ε_π/2 + 15 ε_d)`.
    Chain5,
}

impl Variant {
    pub fn counts(self) -> (u32, u32) {
        match self {
            Variant::Switch3 => (2, 3),
            Variant::Chain5 => (4, 15),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub eps_pi2: f64,
    pub eps_d: f64,
    pub n_pi2: u32,
    pub n_d: u32,
    /// `1 - (n_pi2 ε_π/2 + n_d ε_d)` clamped to `[0, 1]`.
    pub fidelity: f64,
    /// The same budget before clamping.
    pub raw_fidelity: f64,
    pub clamped: bool,
    pub t2: f64,
    pub t_cz: f64,
}

/// Achievable fidelity of one protocol variant.
pub fn fidelity_model(g: f64, lambda: f64, t2: f64, variant: Variant, form: DephasingForm) -> Result<ErrorBudget> {
    let (n_pi2, n_d) = variant.counts();
    // the worst case puts both neighbours of the driven qubit in the excited state
    let eps_pi2 = epsilon_pi2(g, lambda, 2)?;
    let eps_d = epsilon_d(g, t2, form)?;
    let raw = 1.0 - (n_pi2 as f64 * eps_pi2 + n_d as f64 * eps_d);
    let fidelity = raw.clamp(0.0, 1.0);
    Ok(ErrorBudget { eps_pi2, eps_d, n_pi2, n_d, fidelity, raw_fidelity: raw, clamped: fidelity != raw, t2, t_cz: PI / g })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalCoupling {
    pub g_star: f64,
    pub f_star: f64,
    /// Grid maximum sat on a search boundary; `g_star` is the grid argmax.
    pub fallback: bool,
    /// The coarse grid of the budget rose then fell with no other local maximum.
    pub unimodal: bool,
}

pub const GRID_POINTS: usize = 200;
pub const LOG_G_TOL: f64 = 1e-6;

/// Maximize the (unclamped) budget over `g ∈ [1/T2, λ]`: log-spaced grid,
/// then golden-section search on `ln g` around the best grid point.
pub fn optimal_g(lambda: f64, t2: f64, variant: Variant, form: DephasingForm) -> Result<OptimalCoupling> {
    let (lo, hi) = (1.0 / t2, lambda);
    if !(lambda > 0.0 && t2 > 0.0) || !(hi > lo) {
        return Err(Error::InvalidParameter(format!("need λ > 1/T2 > 0, got λ = {lambda}, T2 = {t2}")));
    }
    let f = |ln_g: f64| fidelity_model(ln_g.exp(), lambda, t2, variant, form).map(|b| b.raw_fidelity);
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let step = (ln_hi - ln_lo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|k| ln_lo + step * k as f64).collect();
    let values = grid.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let k = (0..GRID_POINTS).fold(0, |best, i| if values[i] > values[best] { i } else { best });
    let peak = values.iter().rposition(|&v| v == values[k]).unwrap_or(k);
    let unimodal = values[..=k].windows(2).all(|w| w[1] >= w[0]) && values[peak..].windows(2).all(|w| w[1] <= w[0]);
    let clamp_f = |v: f64| v.clamp(0.0, 1.0);
    if k == 0 || k == GRID_POINTS - 1 {
        return Ok(OptimalCoupling { g_star: grid[k].exp(), f_star: clamp_f(values[k]), fallback: true, unimodal });
    }
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (grid[k - 1], grid[k + 1]);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > LOG_G_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x)?;
    let (x, fx) = if fx >= values[k] { (x, fx) } else { (grid[k], values[k]) };
    Ok(OptimalCoupling { g_star: x.exp(), f_star: clamp_f(fx), fallback: false, unimodal })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda_t2: f64,
    pub g_t2: f64,
    pub eps_pi2: f64,
    pub eps_d: f64,
    pub fidelity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimumRow {
    pub lambda_t2: f64,
    pub g_star_t2: f64,
    pub f_star: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub optima: Vec<OptimumRow>,
}

/// Logarithmically spaced grid from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || points == 0 {
        return Err(Error::InvalidParameter(format!("bad log grid [{lo}, {hi}] with {points} points")));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    let mut v: Vec<f64> = (0..points).map(|k| 10f64.powf(a + (b - a) * k as f64 / (points - 1) as f64)).collect();
    v[0] = lo;
    v[points - 1] = hi;
    Ok(v)
}

/// Evaluate the budget on the Cartesian grid and find the optimum per λ.
///
/// Grid values are in units of 1/T2. The optimum is the better of the
/// continuous search and the best grid point.
pub fn sweep(lambda_grid: &[f64], g_grid: &[f64], t2: f64, variant: Variant, form: DephasingForm) -> Result<SweepResult> {
    if lambda_grid.is_empty() || g_grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grids must be nonempty".into()));
    }
    let sorted = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s.dedup();
        s
    };
    let (lambdas, gs) = (sorted(lambda_grid), sorted(g_grid));
    let points: Vec<(f64, f64)> = lambdas.iter().flat_map(|&l| gs.iter().map(move |&g| (l, g))).collect();
    let rows = points
        .par_iter()
        .map(|&(l, g)| {
            let b = fidelity_model(g / t2, l / t2, t2, variant, form)?;
            Ok(SweepRow { lambda_t2: l, g_t2: g, eps_pi2: b.eps_pi2, eps_d: b.eps_d, fidelity: b.fidelity })
        })
        .collect::<Result<Vec<_>>>()?;
    let optima = lambdas
        .par_iter()
        .enumerate()
        .map(|(i, &l)| {
            let at_l = &rows[i * gs.len()..(i + 1) * gs.len()];
            let best = at_l.iter().fold(at_l[0], |b, r| if r.fidelity > b.fidelity { *r } else { b });
            let mut opt = OptimumRow { lambda_t2: l, g_star_t2: best.g_t2, f_star: best.fidelity };
            if l > 1.0 {
                let c = optimal_g(l / t2, t2, variant, form)?;
                if c.f_star >= opt.f_star {
                    opt = OptimumRow { lambda_t2: l, g_star_t2: c.g_star * t2, f_star: c.f_star };
                }
            }
            Ok(opt)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows, optima })
}

/// C-style `%.17g`.
pub fn fmt_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..17).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa), sign, exp.abs())
    } else {
        let decimals = (16 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}"))
    }
}

pub const SWEEP_HEADER: &str = "lambda_T2,g_T2,eps_pi2,eps_d,F";
pub const OPTIMUM_HEADER: &str = "lambda_T2,g_star_T2,F_star";

pub fn write_sweep_csv<W: Write>(mut w: W, result: &SweepResult) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in &result.rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_g17(r.lambda_t2),
            fmt_g17(r.g_t2),
            fmt_g17(r.eps_pi2),
            fmt_g17(r.eps_d),
            fmt_g17(r.fidelity)
        )?;
    }
    Ok(())
}

pub fn write_optimum_csv<W: Write>(mut w: W, result: &SweepResult) -> Result<()> {
    writeln!(w, "{OPTIMUM_HEADER}")?;
    for r in &result.optima {
        writeln!(w, "{},{},{}", fmt_g17(r.lambda_t2), fmt_g17(r.g_star_t2), fmt_g17(r.f_star))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborRow {
    /// Neighbour states `[A, C]`, `true` for excited.
    pub excited: [bool; 2],
    pub simulated: f64,
    pub analytic: f64,
    pub abs_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseValidation {
    pub g: f64,
    pub lambda: f64,
    pub rows: Vec<NeighborRow>,
    /// Every row matches its closed form within the tolerance.
    pub matches: bool,
    /// The doubly excited row has the largest simulated infidelity.
    pub worst_is_both_excited: bool,
}

pub const VALIDATION_TOL: f64 = 1e-9;

/// Dense simulation of the π/2 pulse on the middle of a three-qubit chain for
/// each neighbour configuration, compared with [`epsilon_pi2`].
pub fn validate_against_simulation(g: f64, lambda: f64) -> Result<PulseValidation> {
    let graph = build_chain(2, &Couplings::Uniform(g))?;
    let excited = [num_complex::Complex64::new(0.0, 0.0), num_complex::Complex64::new(1.0, 0.0)];
    let pulse = DrivePulse::rotation(1, lambda, FRAC_PI_2, FRAC_PI_2)?;
    let mut rows = Vec::new();
    for config in [[false, false], [true, false], [false, true], [true, true]] {
        let local = |e: bool| if e { excited } else { GROUND };
        let mut s = StateVector::product(&[local(config[0]), GROUND, local(config[1])])?;
        s.evolve_driven(&graph, &pulse)?;
        let simulated = 1.0 - s.reduced_density(&[1])?.fidelity_with_pure(&PLUS)?;
        let analytic = epsilon_pi2(g, lambda, config.iter().filter(|&&e| e).count() as u32)?;
        rows.push(NeighborRow { excited: config, simulated, analytic, abs_error: (simulated - analytic).abs() });
    }
    let matches = rows.iter().all(|r| r.abs_error <= VALIDATION_TOL);
    let worst_is_both_excited = rows[..3].iter().all(|r| r.simulated <= rows[3].simulated);
    Ok(PulseValidation { g, lambda, rows, matches, worst_is_both_excited })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DephasingEstimate {
    pub mean_infidelity: f64,
    pub standard_error: f64,
    /// `1 - (1 - ε_d)^n` with the exact single-qubit ε_d.
    pub analytic: f64,
    pub samples: usize,
}

impl DephasingEstimate {
    pub fn within_sigmas(&self, k: f64) -> bool {
        (self.mean_infidelity - self.analytic).abs() <= k * self.standard_error
    }
}

/// Monte Carlo dephasing trajectories: `n` qubits in `|+⟩` idle for one CZ
/// duration `π / g`, split into `intervals`, with a random `Z` per qubit per
/// interval. Returns the mean infidelity against the noiseless state.
pub fn dephasing_monte_carlo(g: f64, t2: f64, n: usize, intervals: usize, samples: usize, seed: u64) -> Result<DephasingEstimate> {
    if n == 0 || intervals == 0 || samples < 2 {
        return Err(Error::InvalidParameter("need n, intervals >= 1 and samples >= 2".into()));
    }
    let t_cz = PI / g;
    let dt = t_cz / intervals as f64;
    let clean = StateVector::product(&vec![PLUS; n])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let mut s = clean.clone();
        for _ in 0..intervals {
            s.apply_dephasing(dt, t2, &mut rng)?;
        }
        let inf = 1.0 - s.fidelity(&clean)?;
        sum += inf;
        sum_sq += inf * inf;
    }
    let mean = sum / samples as f64;
    let var = (sum_sq / samples as f64 - mean * mean).max(0.0) * samples as f64 / (samples - 1) as f64;
    let eps = epsilon_d(g, t2, DephasingForm::Exact)?;
    Ok(DephasingEstimate {
        mean_infidelity: mean,
        standard_error: (var / samples as f64).sqrt(),
        analytic: 1.0 - (1.0 - eps).powi(n as i32),
        samples,
    })
}
