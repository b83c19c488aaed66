use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use qhermit::dynamics::{
    self, coriolis, dyson_provider, expectation, heisenberg_trajectory, omega_cauchy_evolve, state_pair_trajectory, EvolutionGenerator,
    MetricChoice, Provider, ProviderError, StatePair,
};
use qhermit::flow::{
    jordan_profile, locate_ep, sweep_spectrum, EpLocation, EpOptions, JordanProfile, MarkerKind, Refine, SpectrumOptions, SweepOptions,
};
use qhermit::io::{write_flow_csv, write_matrix_trajectory, write_state_trajectory, FlowSidecar};
use qhermit::matrixkit::{eig_full, CMatrix, MpMatrix};
use qhermit::metric::{diagonal_metric, dyson_from_metric, hermitize, metric_family, DysonMap, MapDirection, MetricResult};
use qhermit::models::{MatrixFamily, MatrixSample, ModelError, ModelKind, ModelSpec, SampledFamily, CRUNCHBANG_DIM};

use crate::args::{EpArgs, EvolveArgs, ExpectArgs, JordanArgs, KindArg, MetricArgs, ModeArg, RefineArg, ScanArgs, Source};
use crate::error::CliError;
use crate::output::{sibling, to_json, write_atomic};

/// What a command produced: JSON for stdout, plus the files it wrote.
pub struct Outcome {
    pub stdout: String,
    pub files: Vec<PathBuf>,
}

#[derive(Clone)]
pub enum FamilySource {
    Model(ModelSpec),
    Sampled(SampledFamily),
}

impl MatrixFamily for FamilySource {
    fn dim(&self) -> usize {
        match self {
            FamilySource::Model(m) => m.dim(),
            FamilySource::Sampled(s) => s.dim(),
        }
    }

    fn matrix_at(&self, t: f64) -> Result<CMatrix, ModelError> {
        match self {
            FamilySource::Model(m) => m.matrix_at(t),
            FamilySource::Sampled(s) => s.matrix_at(t),
        }
    }

    fn matrix_at_precise(&self, t: f64, bits: usize) -> Option<Result<MpMatrix, ModelError>> {
        match self {
            FamilySource::Model(m) => m.matrix_at_precise(t, bits),
            FamilySource::Sampled(s) => s.matrix_at_precise(t, bits),
        }
    }

    fn describe(&self) -> String {
        match self {
            FamilySource::Model(m) => m.describe(),
            FamilySource::Sampled(s) => s.describe(),
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn family(src: &Source) -> Result<FamilySource, CliError> {
    if let Some(path) = &src.matrix_file {
        if src.n.is_some() {
            return Err(CliError::Input("--n does not apply to --matrix-file".into()));
        }
        let samples: Vec<MatrixSample> = read_json(path)?;
        return Ok(FamilySource::Sampled(SampledFamily::new(samples)?));
    }
    let kind = match src.model {
        Some(KindArg::Bang) => ModelKind::Bang,
        Some(KindArg::Cyclic) => ModelKind::Cyclic,
        Some(KindArg::Crunchbang) => ModelKind::CrunchBang,
        None => return Err(CliError::Input("either --model or --matrix-file is required".into())),
    };
    let n = match (kind, src.n) {
        (_, Some(n)) => n,
        (ModelKind::CrunchBang, None) => CRUNCHBANG_DIM,
        (k, None) => return Err(CliError::Input(format!("--n is required for {k}"))),
    };
    Ok(FamilySource::Model(ModelSpec::new(kind, n)?))
}

fn metric_choice(kappa: &Option<Vec<f64>>, diagonal: bool) -> MetricChoice {
    if diagonal {
        MetricChoice::Diagonal
    } else {
        MetricChoice::Family {
            kappa: kappa.clone().unwrap_or_default(),
        }
    }
}

fn metric_at(q: &CMatrix, choice: &MetricChoice, tol: f64) -> Result<MetricResult, CliError> {
    match choice {
        MetricChoice::Family { kappa } => {
            let eig = eig_full(q, tol)?;
            let ones = vec![1.0; q.rows()];
            let k = if kappa.is_empty() { &ones } else { kappa };
            Ok(metric_family(&eig, k, tol)?)
        }
        MetricChoice::Diagonal => diagonal_metric(q, tol)?.ok_or_else(|| CliError::Domain("no positive diagonal metric: the off-diagonal ratios are not all positive".into())),
    }
}

#[derive(Serialize)]
struct ScanSummary {
    model: String,
    t_min: f64,
    t_max: f64,
    steps: usize,
    dim: usize,
    refined_points: usize,
    real_count_first: usize,
    real_count_last: usize,
    clusters: usize,
    discontinuities: usize,
    failed_points: usize,
    out: Option<PathBuf>,
    markers: Option<PathBuf>,
}

pub fn scan(a: &ScanArgs) -> Result<Outcome, CliError> {
    let fam = family(&a.source)?;
    let opts = SweepOptions {
        spectrum: SpectrumOptions {
            tol: a.source.tol,
            refine: match a.refine {
                RefineArg::Auto => Refine::Auto,
                RefineArg::Never => Refine::Never,
                RefineArg::Always => Refine::Always,
            },
            bits: None,
        },
        reality_tol: a.reality_tol,
        cluster_tol: a.cluster_tol,
        continuity_factor: a.continuity_factor,
    };
    let trace = sweep_spectrum(&fam, a.t_min, a.t_max, a.steps, &opts)?;
    let csv = write_flow_csv(&trace)?;
    let Some(out) = &a.out else {
        return Ok(Outcome { stdout: csv, files: vec![] });
    };
    let markers = sibling(out, "markers.json");
    write_atomic(out, &csv)?;
    write_atomic(&markers, &to_json(&FlowSidecar::of(&trace)))?;
    let count = |k: MarkerKind| trace.degeneracy_markers.iter().filter(|m| m.kind == k).count();
    let summary = ScanSummary {
        model: fam.describe(),
        t_min: a.t_min,
        t_max: a.t_max,
        steps: trace.len(),
        dim: trace.dim(),
        refined_points: trace.refined.iter().filter(|&&r| r).count(),
        real_count_first: trace.real_count(0),
        real_count_last: trace.real_count(trace.len() - 1),
        clusters: count(MarkerKind::Cluster),
        discontinuities: count(MarkerKind::Discontinuity),
        failed_points: trace.gaps.len(),
        out: Some(out.clone()),
        markers: Some(markers.clone()),
    };
    Ok(Outcome {
        stdout: to_json(&summary),
        files: vec![out.clone(), markers],
    })
}

#[derive(Serialize)]
struct MetricReport {
    model: String,
    t: f64,
    #[serde(flatten)]
    metric: MetricResult,
    relative_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dyson: Option<DysonReport>,
}

#[derive(Serialize)]
struct DysonReport {
    #[serde(flatten)]
    map: DysonMap,
    /// `Ω Q Ω⁻¹`
    hermitian: CMatrix,
    hermitian_defect: f64,
}

fn finish_json<T: Serialize>(value: &T, out: &Option<PathBuf>) -> Result<Outcome, CliError> {
    let json = to_json(value);
    let mut files = vec![];
    if let Some(p) = out {
        write_atomic(p, &json)?;
        files.push(p.clone());
    }
    Ok(Outcome { stdout: json, files })
}

pub fn metric(a: &MetricArgs, with_dyson: bool) -> Result<Outcome, CliError> {
    let fam = family(&a.source)?;
    let tol = a.source.tol;
    let q = fam.matrix_at(a.t)?;
    let mr = metric_at(&q, &metric_choice(&a.kappa, a.diagonal), tol)?;
    let dyson = if with_dyson {
        let map = dyson_from_metric(&mr, tol)?;
        let h = hermitize(&q, &map, MapDirection::Forward, tol)?;
        Some(DysonReport {
            hermitian_defect: h.hermitian_defect(),
            hermitian: h,
            map,
        })
    } else {
        None
    };
    let report = MetricReport {
        model: fam.describe(),
        t: a.t,
        relative_residual: mr.relative_residual(&q),
        metric: mr,
        dyson,
    };
    finish_json(&report, &a.out)
}

#[derive(Serialize)]
struct EpReport {
    model: String,
    t_lo: f64,
    t_hi: f64,
    #[serde(flatten)]
    location: EpLocation,
}

pub fn ep(a: &EpArgs) -> Result<Outcome, CliError> {
    let fam = family(&a.source)?;
    let opts = EpOptions {
        tol: a.ep_tol,
        coarse_points: a.coarse,
        bits: None,
    };
    let loc = locate_ep(&fam, a.t_lo, a.t_hi, &opts)?
        .ok_or_else(|| CliError::Domain(format!("no exceptional point in [{}, {}]: the spectrum stays separated", a.t_lo, a.t_hi)))?;
    let report = EpReport {
        model: fam.describe(),
        t_lo: a.t_lo,
        t_hi: a.t_hi,
        location: loc,
    };
    finish_json(&report, &a.out)
}

#[derive(Serialize)]
struct JordanReport {
    model: String,
    t: f64,
    #[serde(flatten)]
    profile: JordanProfile,
    algebraic_multiplicity: usize,
    geometric_multiplicity: usize,
}

pub fn jordan(a: &JordanArgs) -> Result<Outcome, CliError> {
    let fam = family(&a.source)?;
    let q = fam.matrix_at(a.t)?;
    let profile = jordan_profile(&q, a.lambda, a.rank_tol)?;
    let report = JordanReport {
        model: fam.describe(),
        t: a.t,
        algebraic_multiplicity: profile.algebraic_multiplicity(),
        geometric_multiplicity: profile.geometric_multiplicity(),
        profile,
    };
    finish_json(&report, &a.out)
}

/// State file: `ketket` may be omitted.
#[derive(Deserialize)]
struct StateFile {
    ket: Vec<Complex64>,
    ketket: Option<Vec<Complex64>>,
}

fn load_state(path: &Path, theta: impl FnOnce() -> Result<CMatrix, CliError>) -> Result<StatePair, CliError> {
    let s: StateFile = read_json(path)?;
    match s.ketket {
        Some(kk) => Ok(StatePair::new(s.ket, kk)?),
        None => Ok(StatePair::from_metric(s.ket, &theta()?)?),
    }
}

fn load_matrix(path: &Path, n: usize) -> Result<CMatrix, CliError> {
    let m: CMatrix = read_json(path)?;
    if m.rows() != n || m.cols() != n {
        return Err(CliError::Input(format!("{} holds a {}x{} matrix, expected {n}x{n}", path.display(), m.rows(), m.cols())));
    }
    Ok(m)
}

#[derive(Serialize)]
struct ExpectReport {
    model: String,
    t: f64,
    /// `⟨⟨ψ| A |ψ⟩`
    value: Complex64,
    /// `⟨⟨ψ|ψ⟩`
    overlap: Complex64,
    normalized: Complex64,
}

pub fn expect(a: &ExpectArgs) -> Result<Outcome, CliError> {
    let fam = family(&a.source)?;
    let tol = a.source.tol;
    let q = fam.matrix_at(a.t)?;
    let choice = metric_choice(&a.kappa, a.diagonal);
    let state = load_state(&a.state, || Ok(metric_at(&q, &choice, tol)?.theta))?;
    let obs = match &a.observable {
        Some(p) => load_matrix(p, q.rows())?,
        None => q.clone(),
    };
    let value = expectation(&state, &obs)?;
    let overlap = state.overlap();
    let report = ExpectReport {
        model: fam.describe(),
        t: a.t,
        value,
        overlap,
        normalized: value / overlap,
    };
    finish_json(&report, &a.out)
}

#[derive(Serialize)]
struct EvolveSummary {
    model: String,
    mode: &'static str,
    t0: f64,
    t1: f64,
    steps: usize,
    metric: MetricChoice,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_observable: Option<CMatrix>,
    /// `‖Ω(t1) A(t1) Ω(t1)⁻¹ − Ω(t0) A(t0) Ω(t0)⁻¹‖_F`; zero for exact
    /// Heisenberg dynamics with `H = Σ`.
    #[serde(skip_serializing_if = "Option::is_none")]
    image_drift: Option<f64>,
    /// `‖Ω_cauchy(t1) − Ω(t1)‖_F / ‖Ω(t1)‖_F`
    #[serde(skip_serializing_if = "Option::is_none")]
    cauchy_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_state: Option<StatePair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    overlap_initial: Option<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    overlap_final: Option<Complex64>,
    out: Option<PathBuf>,
}

fn sigma_provider(omega: Provider, h_step: Option<f64>) -> Provider {
    Arc::new(move |t| coriolis(&omega, t, h_step, None).map_err(|e| Box::new(e) as ProviderError))
}

fn map_at(omega: &Provider, t: f64) -> Result<DysonMap, CliError> {
    let w = omega(t).map_err(|e| CliError::Domain(format!("Dyson map at t = {t}: {e}")))?;
    let omega_inv = w.inverse()?;
    let cond = w.spectral_norm() * omega_inv.spectral_norm();
    Ok(DysonMap { omega: w, omega_inv, cond })
}

pub fn evolve(a: &EvolveArgs) -> Result<Outcome, CliError> {
    let fam = family(&a.source)?;
    let tol = a.source.tol;
    let n = fam.dim();
    let choice = metric_choice(&a.kappa, a.diagonal);
    let omega = dyson_provider(fam.clone(), choice.clone(), tol);
    let sigma = sigma_provider(omega.clone(), a.h_step);
    let map0 = map_at(&omega, a.t0)?;

    let mut summary = EvolveSummary {
        model: fam.describe(),
        mode: "heisenberg",
        t0: a.t0,
        t1: a.t1,
        steps: a.steps,
        metric: choice.clone(),
        final_observable: None,
        image_drift: None,
        cauchy_error: None,
        final_state: None,
        overlap_initial: None,
        overlap_final: None,
        out: a.out.clone(),
    };
    let csv = match a.mode {
        ModeArg::Heisenberg => {
            if a.state.is_some() || a.hamiltonian.is_some() {
                return Err(CliError::Input("--state and --hamiltonian need --mode schrodinger".into()));
            }
            let a0 = match (&a.observable, &a.hermitian) {
                (Some(p), _) => load_matrix(p, n)?,
                (None, Some(p)) => hermitize(&load_matrix(p, n)?, &map0, MapDirection::Pullback, tol)?,
                (None, None) => fam.matrix_at(a.t0)?,
            };
            let gen = EvolutionGenerator::heisenberg(sigma.clone(), None);
            let traj = heisenberg_trajectory(&a0, &gen, a.t0, a.t1, a.steps)?;
            let a1 = traj.last().expect("trajectory has both endpoints").1.clone();

            let map1 = map_at(&omega, a.t1)?;
            let img0 = hermitize(&a0, &map0, MapDirection::Forward, tol)?;
            let img1 = hermitize(&a1, &map1, MapDirection::Forward, tol)?;
            summary.image_drift = Some((&img1 - &img0).frobenius_norm());
            let cauchy = omega_cauchy_evolve(&map0.omega, &sigma, a.t0, a.t1, a.steps)?;
            summary.cauchy_error = Some((&cauchy - &map1.omega).frobenius_norm() / map1.omega.frobenius_norm());
            summary.final_observable = Some(a1);
            write_matrix_trajectory(&traj)?
        }
        ModeArg::Schrodinger => {
            if a.observable.is_some() || a.hermitian.is_some() {
                return Err(CliError::Input("--observable and --hermitian belong to --mode heisenberg".into()));
            }
            let path = a.state.as_ref().ok_or_else(|| CliError::Input("--mode schrodinger needs --state".into()))?;
            let s0 = load_state(path, || {
                let q = fam.matrix_at(a.t0)?;
                Ok(metric_at(&q, &choice, tol)?.theta)
            })?;
            if s0.dim() != n {
                return Err(CliError::Input(format!("state has dimension {}, the model {n}", s0.dim())));
            }
            let h = match &a.hamiltonian {
                Some(p) => load_matrix(p, n)?,
                None => CMatrix::zeros(n, n),
            };
            let gen = EvolutionGenerator::schrodinger(dynamics::constant(h), sigma, None);
            let traj = state_pair_trajectory(&s0, &gen, a.t0, a.t1, a.steps)?;
            let s1 = traj.last().expect("trajectory has both endpoints").1.clone();
            summary.mode = "schrodinger";
            summary.overlap_initial = Some(s0.overlap());
            summary.overlap_final = Some(s1.overlap());
            summary.final_state = Some(s1);
            write_state_trajectory(&traj)?
        }
    };
    let mut files = vec![];
    if let Some(p) = &a.out {
        write_atomic(p, &csv)?;
        files.push(p.clone());
    }
    Ok(Outcome {
        stdout: to_json(&summary),
        files,
    })
}
