use crate::config::{ConfigError, FailureConfig, OptimalConfig, Protocol, SweepConfig, VerifyConfig};
use qsim_core::device::{build_2d_lattice, build_ancilla_path, build_bilayer_unit, build_chain};
use qsim_core::error_analysis::{optimal_g, sweep, write_optimum_csv, write_sweep_csv, OptimumRow, SweepResult};
use qsim_core::protocols::{
    apply_failure_model, chain_cz_5, cross_cz, echo_cz_pair, embed_pair, find_cross, generate_1d, generate_2d,
    generate_3d_bilayer, switching_cz, FailureModel, PulseMode,
};
use qsim_core::schedule::check_certificate_dense;
use qsim_core::statevector::PLUS;
use qsim_core::{
    execute, BilayerLayout, Couplings, DeviceGraph, Gate, Generated, GraphStateCertificate, OutcomePolicy, PulseSchedule,
    StabilizerTableau, StateVector,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

/// Outcome of a command that ran to completion.
pub struct Finished {
    pub pass: bool,
    pub summary: String,
}

pub enum Failure {
    Config(String),
    Io(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<qsim_core::Error> for Failure {
    fn from(e: qsim_core::Error) -> Self {
        match e {
            qsim_core::Error::Io(io) => Failure::Io(io.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    std::fs::create_dir_all(out)?;
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<(), Failure> {
    let mut w = create(out, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Io(e.to_string()))?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(())
}

#[derive(Serialize)]
struct CheckEntry {
    name: String,
    backend: &'static str,
    value: f64,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    protocol: String,
    num_qubits: usize,
    checks: Vec<CheckEntry>,
    pass: bool,
}

fn device(cfg: &VerifyConfig, base: DeviceGraph) -> Result<DeviceGraph, Failure> {
    let graph = if cfg.g.len() == 1 {
        base.with_couplings(|_| cfg.g[0])?
    } else {
        let gs = Couplings::PerEdge(cfg.g.clone()).expand(base.edges().len())?;
        let mut k = 0;
        base.with_couplings(|_| {
            k += 1;
            gs[k - 1]
        })?
    };
    match cfg.randomize_couplings {
        Some([lo, hi]) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
            Ok(graph.randomize_couplings(lo, hi, &mut rng)?)
        }
        None => Ok(graph),
    }
}

fn uniform(graph: &DeviceGraph) -> bool {
    let g0 = graph.edges()[0].g;
    graph.edges().iter().all(|e| (e.g - g0).abs() <= 1e-12 * g0)
}

/// CZ schedules between pairs of mains on a small graph.
fn gate_cases(cfg: &VerifyConfig) -> Result<(DeviceGraph, Vec<(usize, usize, PulseSchedule)>), Failure> {
    let unit = Couplings::Uniform(1.0);
    match cfg.protocol {
        Protocol::Switch3 | Protocol::Echo => {
            let g = device(cfg, build_chain(2, &unit)?)?;
            let s = if cfg.protocol == Protocol::Switch3 {
                switching_cz(&g, 0, 1, 2, cfg.mode)?
            } else {
                echo_cz_pair(&g, 0, 1, 2, cfg.mode)?
            };
            Ok((g, vec![(0, 2, s)]))
        }
        Protocol::Chain5 => {
            let g = device(cfg, build_ancilla_path(3, &unit)?)?;
            let s = chain_cz_5(&g, [0, 1, 2, 3, 4], cfg.link, cfg.mode)?;
            Ok((g, vec![(0, 4, s)]))
        }
        Protocol::Cross => {
            let bil = device(cfg, build_bilayer_unit(1, 1.0)?)?;
            let (g, _) = BilayerLayout::from_graph(&bil)?.extract_cross(&bil, 0, 1)?;
            let cross = find_cross(&g)?;
            let mut cases = Vec::new();
            for i in 0..4 {
                for j in i + 1..4 {
                    let pair = (cross.mains[i], cross.mains[j]);
                    cases.push((pair.0, pair.1, cross_cz(&g, &cross, pair, cfg.link, cfg.mode)?));
                }
            }
            Ok((g, cases))
        }
        _ => unreachable!("generator protocols are handled separately"),
    }
}

fn verify_gates(cfg: &VerifyConfig, checks: &mut Vec<CheckEntry>) -> Result<usize, Failure> {
    let (graph, cases) = gate_cases(cfg)?;
    let n = graph.num_qubits();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for (k, (a, c, s)) in cases.iter().enumerate() {
        if cfg.backend.dense() {
            let mut worst = 1.0f64;
            for i in 0..cfg.inputs {
                let phi = StateVector::random(2, &mut rng)?;
                let mut st = embed_pair(n, *a, *c, &phi)?;
                let mut want = st.clone();
                want.apply_cz(*a, *c)?;
                execute(s, &graph, &mut st, &mut OutcomePolicy::sample(cfg.seed.wrapping_add((k * 1000 + i) as u64)))?;
                worst = worst.min(st.fidelity(&want)?);
            }
            checks.push(CheckEntry {
                name: format!("cz({a},{c}) min fidelity"),
                backend: "dense",
                value: worst,
                pass: worst >= 1.0 - cfg.tolerance,
            });
        }
        if cfg.backend.tableau() {
            let mains = graph.mains();
            let mut full = PulseSchedule::new(n);
            for &q in &mains {
                full.gate(q, Gate::H);
            }
            full.extend(s.clone());
            let cert = GraphStateCertificate::new(mains, vec![(*a, *c)])?;
            let mut tab = StabilizerTableau::ground(n)?;
            execute(&full, &graph, &mut tab, &mut OutcomePolicy::sample(cfg.seed.wrapping_add(k as u64)))?;
            let report = tab.check_certificate(&cert)?;
            checks.push(CheckEntry {
                name: format!("cz({a},{c}) certificate"),
                backend: "tableau",
                value: report.stabilizers.iter().map(|s| s.expectation).fold(1.0, f64::min),
                pass: report.pass,
            });
        }
    }
    Ok(n)
}

fn generated(cfg: &VerifyConfig) -> Result<(DeviceGraph, Generated), Failure> {
    match cfg.protocol {
        Protocol::Gen1d => {
            let g = device(cfg, build_chain(cfg.m.unwrap_or(4), &Couplings::Uniform(1.0))?)?;
            let asymmetric = !uniform(&g) || cfg.link == qsim_core::LinkMode::Echo;
            let gen = generate_1d(&g, asymmetric)?;
            Ok((g, gen))
        }
        Protocol::Gen2d => {
            let g = device(cfg, build_2d_lattice(cfg.m.unwrap_or(2), 1.0)?)?;
            let gen = generate_2d(&g, cfg.lattice, cfg.link)?;
            Ok((g, gen))
        }
        Protocol::Gen3d => {
            let g = device(cfg, build_bilayer_unit(cfg.tiles.unwrap_or(1), 1.0)?)?;
            let gen = generate_3d_bilayer(&g, cfg.link)?;
            Ok((g, gen))
        }
        _ => unreachable!("gate protocols are handled separately"),
    }
}

fn verify_generator(cfg: &VerifyConfig, checks: &mut Vec<CheckEntry>) -> Result<usize, Failure> {
    let (graph, gen) = generated(cfg)?;
    let n = graph.num_qubits();
    let schedule = match cfg.mode {
        PulseMode::Ideal => gen.schedule.clone(),
        PulseMode::Physical { lambda } => gen.schedule.to_physical(lambda)?,
    };
    if cfg.backend.dense() {
        let mut st = StateVector::ground(n)?;
        execute(&schedule, &graph, &mut st, &mut OutcomePolicy::sample(cfg.seed))?;
        let report = check_certificate_dense(&st, &gen.certificate, cfg.tolerance)?;
        checks.push(CheckEntry {
            name: "graph-state certificate".into(),
            backend: "dense",
            value: report.stabilizers.iter().map(|s| s.expectation).fold(1.0, f64::min),
            pass: report.pass,
        });
    }
    if cfg.backend.tableau() {
        let mut tab = StabilizerTableau::ground(n)?;
        execute(&schedule, &graph, &mut tab, &mut OutcomePolicy::sample(cfg.seed))?;
        let report = tab.check_certificate(&gen.certificate)?;
        checks.push(CheckEntry {
            name: "graph-state certificate".into(),
            backend: "tableau",
            value: report.stabilizers.iter().map(|s| s.expectation).fold(1.0, f64::min),
            pass: report.pass,
        });
    }
    Ok(n)
}

pub fn verify(cfg: &VerifyConfig, out: &Path) -> Result<Finished, Failure> {
    cfg.validate()?;
    let mut checks = Vec::new();
    let num_qubits = match cfg.protocol {
        Protocol::Switch3 | Protocol::Echo | Protocol::Chain5 | Protocol::Cross => verify_gates(cfg, &mut checks)?,
        _ => verify_generator(cfg, &mut checks)?,
    };
    let pass = checks.iter().all(|c| c.pass);
    let protocol = format!("{:?}", cfg.protocol).to_lowercase();
    let summary = format!(
        "{protocol}: {} of {} checks passed on {num_qubits} qubits",
        checks.iter().filter(|c| c.pass).count(),
        checks.len()
    );
    write_json(out, "report.json", &VerifyReport { protocol, num_qubits, checks, pass })?;
    Ok(Finished { pass, summary })
}

pub fn sweep_cmd(cfg: &SweepConfig, out: &Path) -> Result<Finished, Failure> {
    let lambdas = cfg.lambda_t2.values("lambda_t2")?;
    let gs = cfg.g_t2.values("g_t2")?;
    let result: SweepResult = sweep(&lambdas, &gs, 1.0, cfg.variant, cfg.eps_d)?;
    write_sweep_csv(create(out, "sweep.csv")?, &result)?;
    write_optimum_csv(create(out, "optimum.csv")?, &result)?;
    Ok(Finished { pass: true, summary: format!("{} sweep rows, {} optima", result.rows.len(), result.optima.len()) })
}

#[derive(Serialize)]
struct OptimalEntry {
    lambda_t2: f64,
    g_star_t2: f64,
    f_star: f64,
    fallback: bool,
    unimodal: bool,
}

#[derive(Serialize)]
struct OptimalReport {
    entries: Vec<OptimalEntry>,
    target_fidelity: Option<f64>,
    /// Smallest λT2 whose optimum reaches the target.
    first_lambda_t2_reaching_target: Option<f64>,
    pass: bool,
}

pub fn optimal_cmd(cfg: &OptimalConfig, out: &Path) -> Result<Finished, Failure> {
    let mut lambdas = cfg.lambda_t2.values("lambda_t2")?;
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    if let Some(t) = cfg.target_fidelity {
        if !(0.0..=1.0).contains(&t) {
            return Err(Failure::Config(format!("target fidelity must lie in [0, 1], got {t}")));
        }
    }
    let mut entries = Vec::new();
    for &l in &lambdas {
        let o = optimal_g(l, 1.0, cfg.variant, cfg.eps_d)?;
        entries.push(OptimalEntry { lambda_t2: l, g_star_t2: o.g_star, f_star: o.f_star, fallback: o.fallback, unimodal: o.unimodal });
    }
    let first = cfg.target_fidelity.and_then(|t| entries.iter().find(|e| e.f_star >= t).map(|e| e.lambda_t2));
    let pass = cfg.target_fidelity.is_none() || first.is_some();
    let rows = SweepResult {
        rows: vec![],
        optima: entries.iter().map(|e| OptimumRow { lambda_t2: e.lambda_t2, g_star_t2: e.g_star_t2, f_star: e.f_star }).collect(),
    };
    write_optimum_csv(create(out, "optimum.csv")?, &rows)?;
    let summary = match first {
        Some(l) => format!("{} optima; target reached from λT2 = {l}", entries.len()),
        None => format!("{} optima", entries.len()),
    };
    write_json(
        out,
        "optimal.json",
        &OptimalReport { entries, target_fidelity: cfg.target_fidelity, first_lambda_t2_reaching_target: first, pass },
    )?;
    Ok(Finished { pass, summary })
}

#[derive(Serialize)]
struct FailurePoint {
    epsilon_m: f64,
    residual_time: f64,
    trace_distance: f64,
    /// `1 - ‖offdiag ρ‖ / ‖offdiag ρ_ideal‖` in the Frobenius norm.
    off_diagonal_attenuation: f64,
    within_bound: bool,
}

#[derive(Serialize)]
struct FailureReport {
    points: Vec<FailurePoint>,
    monotone: bool,
    pass: bool,
}

fn off_diagonal_norm(rho: &qsim_core::DensityMatrix) -> f64 {
    let m = rho.matrix();
    let mut s = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                s += m[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

pub fn demo_failure(cfg: &FailureConfig, out: &Path) -> Result<Finished, Failure> {
    cfg.validate()?;
    let graph = build_chain(2, &Couplings::Uniform(cfg.g))?;
    let phi = match cfg.seed {
        Some(seed) => StateVector::random(2, &mut ChaCha8Rng::seed_from_u64(seed))?,
        None => StateVector::product(&[PLUS, PLUS])?,
    };
    let ideal = apply_failure_model(&graph, (0, 1, 2), &phi, FailureModel::new(0.0)?, 0.0)?;
    let ideal_off = off_diagonal_norm(&ideal);
    let mut eps = cfg.epsilon_m.clone();
    eps.sort_by(f64::total_cmp);
    let mut points = Vec::new();
    let mut monotone = true;
    for &t in &cfg.residual_times {
        let mut prev = 0.0;
        for &e in &eps {
            let rho = apply_failure_model(&graph, (0, 1, 2), &phi, FailureModel::new(e)?, t)?;
            let td = rho.trace_distance(&ideal)?;
            monotone &= td >= prev - 1e-12;
            prev = td;
            let attenuation = if ideal_off > 0.0 { 1.0 - off_diagonal_norm(&rho) / ideal_off } else { 0.0 };
            points.push(FailurePoint {
                epsilon_m: e,
                residual_time: t,
                trace_distance: td,
                off_diagonal_attenuation: attenuation,
                within_bound: td <= e + 1e-12,
            });
        }
    }
    let pass = monotone && points.iter().all(|p| p.within_bound);
    let summary = format!("{} points, bound holds: {}, monotone: {monotone}", points.len(), points.iter().all(|p| p.within_bound));
    write_json(out, "failure.json", &FailureReport { points, monotone, pass })?;
    Ok(Finished { pass, summary })
}
