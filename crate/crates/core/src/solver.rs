//! Global minimization with certification.
//!
//! The loop alternates two phases. Local optimization from every starting
//! point gives a level γ. The certificate for γ (slightly lowered) is then
//! interpolated over the angle domain. Any sampled zero marks a ray that
//! reaches below γ, and its candidate points become new starts. If those
//! starts lower γ by at least `restart_rel`, the round is abandoned and a new
//! one begins; otherwise sampling resumes. When an interpolant completes, the
//! certificate is also evaluated at the interpolant's global minimizers and
//! between consecutive roots. The run converges when a full round lowers γ by
//! less than `term_rel`.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certificates::{self, Certificate, CertificateError, CertificateValue, EvalPolicy};
use crate::chebinterp::{ApproxError, Approximator, InterpError, InterpOptions, PiecewiseCheb, SamplingOutcome};
use crate::linalg::{self, C64, ComplexMatrix, LinalgError};
use crate::localopt::{self, LocalMin, LocalOptConfig, LocalOptError};
use crate::objective::Objective;
use crate::pencils::{PencilError, PencilKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Converge when a round lowers γ by less than this, relatively.
    pub term_rel: f64,
    /// Abandon a round mid-sampling only for at least this relative decrease.
    pub restart_rel: f64,
    /// Certificates are evaluated at `γ (1 − gamma_guard)`.
    pub gamma_guard: f64,
    pub policy: EvalPolicy,
    #[serde(skip, default)]
    pub interp: InterpOptions,
    pub local: LocalOptConfig,
    pub max_restarts: usize,
    pub workers: usize,
    /// Continuous time only: shift the matrix by `i ȳ`, with `ȳ` the mean
    /// imaginary part of its eigenvalues, before searching.
    pub shift_center: bool,
    /// Record every certificate evaluation.
    pub trace: bool,
    /// Angle interval to certify instead of the default one.
    pub domain_override: Option<(f64, f64)>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            term_rel: 1e-14,
            restart_rel: 1e-6,
            gamma_guard: 1e-14,
            policy: EvalPolicy::default(),
            interp: InterpOptions::default(),
            local: LocalOptConfig::default(),
            max_restarts: 50,
            workers: 1,
            shift_center: false,
            trace: false,
            domain_override: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    UnstableInfinite,
    TrivialNormal,
    MaxRestarts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trigger {
    Probe,
    FinalMinCheck,
    RootMidpointCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub gamma_before: f64,
    pub gamma_after: f64,
    pub trigger: Trigger,
    /// Starting points of the local searches that produced `gamma_after`.
    pub points_used: Vec<C64>,
    /// The decrease cut a certificate round short.
    pub mid_round: bool,
    /// Decrease below `term_rel` recorded as the run ended.
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceStage {
    Probe,
    FinalMin,
    RootMidpoint,
}

impl TraceStage {
    pub fn name(self) -> &'static str {
        match self {
            TraceStage::Probe => "probe",
            TraceStage::FinalMin => "final-min",
            TraceStage::RootMidpoint => "root-midpoint",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: usize,
    pub gamma: f64,
    pub theta: f64,
    pub value: f64,
    pub n_candidates: usize,
    pub stage: TraceStage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub kind: PencilKind,
    /// Kreiss constant `1/γ`, or the distance `γ`. Infinite when unstable.
    pub quantity: f64,
    pub gamma_final: f64,
    /// Absent when the optimum is only approached at infinity.
    pub minimizer: Option<C64>,
    pub status: Status,
    pub restarts: Vec<RestartRecord>,
    /// Certificate evaluations in each round.
    pub certificate_samples: Vec<usize>,
    pub trace: Vec<TraceRecord>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("A has a numerically zero eigenvalue; the continuous-time pencil needs 0 outside the spectrum")]
    ZeroEigenvalue,
    #[error("starting point {z} is outside the domain of the {} objective", kind.name())]
    InfeasibleStart { z: C64, kind: PencilKind },
    #[error(transparent)]
    Input(#[from] PencilError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error(transparent)]
    LocalOpt(#[from] LocalOptError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("could not build a worker pool: {0}")]
    Workers(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl From<ApproxError<SolveError>> for SolveError {
    fn from(e: ApproxError<SolveError>) -> Self {
        match e {
            ApproxError::Interp(i) => SolveError::Interp(i),
            ApproxError::Sampler(s) => s,
        }
    }
}

/// Continuous-time Kreiss constant `sup_{Re z > 0} Re z ‖(zI − A)⁻¹‖`.
pub fn kreiss_continuous(a: &ComplexMatrix, starts: &[C64], cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    solve(&Objective::kreiss_continuous(a.clone())?, starts, cfg)
}

/// Discrete-time Kreiss constant `sup_{|z| > 1} (|z| − 1) ‖(zI − A)⁻¹‖`.
pub fn kreiss_discrete(a: &ComplexMatrix, starts: &[C64], cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    solve(&Objective::kreiss_discrete(a.clone())?, starts, cfg)
}

/// Distance to uncontrollability `min_z σ_min([A − zI, B])`.
pub fn dist_uncontrollability(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    starts: &[C64],
    cfg: &SolverConfig,
) -> Result<SolveResult, SolveError> {
    solve(&Objective::dist_uncontrollability(a.clone(), b.clone())?, starts, cfg)
}

/// Starting points used when the caller gives none: each eigenvalue of `A`
/// moved into the feasible region, plus the origin for the distance.
pub fn default_starts(obj: &Objective) -> Result<Vec<C64>, SolveError> {
    let spec = linalg::eigenvalues(&obj.a)?;
    let mut out: Vec<C64> = Vec::new();
    for l in spec.values {
        let z = match obj.kind {
            PencilKind::KreissContinuous => {
                let x = l.re.abs().max(1e-3 * l.norm().max(1.0));
                C64::new(x, l.im)
            }
            PencilKind::KreissDiscrete => {
                let th = if l.norm() > 0.0 { l.arg() } else { 0.0 };
                C64::from_polar((2.0 - l.norm()).max(1.0 + 1e-3), th)
            }
            PencilKind::DistUncontrollability => l,
        };
        if !out.contains(&z) {
            out.push(z);
        }
    }
    Ok(out)
}

struct Runner<'a> {
    obj: &'a Objective,
    cfg: &'a SolverConfig,
    pool: Option<rayon::ThreadPool>,
    trace: Vec<TraceRecord>,
    notes: Vec<String>,
    full_circle: bool,
}

/// Relative size of imaginary (or anti-Hermitian) parts treated as rounding.
const REAL_TOL: f64 = 1e-14;

fn better(a: &LocalMin, b: &LocalMin) -> bool {
    a.value < b.value
}

impl<'a> Runner<'a> {
    fn par_map<T: Sync, R: Send>(&self, xs: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
        match &self.pool {
            Some(pool) => pool.install(|| xs.par_iter().map(&f).collect()),
            None => xs.iter().map(f).collect(),
        }
    }

    /// Local minimizations from all points; the best by value, earliest on ties.
    fn optimize_from(&self, points: &[C64]) -> Result<Option<LocalMin>, SolveError> {
        let results = self.par_map(points, |&z| localopt::minimize(self.obj, z, &self.cfg.local));
        let mut best: Option<LocalMin> = None;
        for r in results {
            let m = r?;
            if best.as_ref().is_none_or(|b| better(&m, b)) {
                best = Some(m);
            }
        }
        Ok(best)
    }

    fn eval_batch(
        &self,
        cert: &Certificate,
        fallback: &Certificate,
        thetas: &[f64],
    ) -> Result<Vec<CertificateValue>, SolveError> {
        let out = self.par_map(thetas, |&t| match cert.eval(t) {
            Err(CertificateError::Pencil(PencilError::NearSingularSecondMember { .. })) => fallback.eval(t).map(|mut v| {
                v.recheck_used = true;
                v
            }),
            other => other,
        });
        out.into_iter().map(|r| r.map_err(SolveError::from)).collect()
    }

    fn record(&mut self, round: usize, gamma: f64, thetas: &[f64], vals: &[CertificateValue], stage: TraceStage) {
        if !self.cfg.trace {
            return;
        }
        for (&theta, v) in thetas.iter().zip(vals) {
            self.trace.push(TraceRecord { round, gamma, theta, value: v.value, n_candidates: v.n_accepted(), stage });
        }
    }

    fn domain(&self) -> (f64, f64) {
        if let Some(d) = self.cfg.domain_override {
            return d;
        }
        let half = !self.full_circle;
        match self.obj.kind {
            PencilKind::KreissContinuous => (if half { 0.0 } else { -FRAC_PI_2 }, FRAC_PI_2),
            _ => (if half { 0.0 } else { -PI }, PI),
        }
    }

    /// Certificate level for the current γ, nudged away from values where the
    /// pencil degenerates.
    fn guarded_level(&self, gamma: f64, extra: &LevelData) -> f64 {
        let g = self.cfg.gamma_guard;
        let mut gc = gamma * (1.0 - g);
        match self.obj.kind {
            PencilKind::KreissContinuous => {
                if (1.0 - gc).abs() <= 1e-11 {
                    gc = 1.0 - 1e-11;
                }
            }
            PencilKind::KreissDiscrete => {
                if (1.0 - gc).abs() <= 1e-11 {
                    gc = 1.0 - 1e-11;
                }
                let tol = 1e-12 * extra.norm_sq;
                if extra.gram_eigs.iter().any(|&l| (gc * gc - l).abs() <= tol) {
                    gc *= 1.0 - 10.0 * g;
                }
            }
            PencilKind::DistUncontrollability => {
                if gc >= extra.f0 * (1.0 - 1e-12) {
                    gc = extra.f0 * (1.0 - 10.0 * g);
                }
            }
        }
        gc
    }
}

struct LevelData {
    gram_eigs: Vec<f64>,
    norm_sq: f64,
    f0: f64,
}

struct RoundEnd {
    best: Option<(LocalMin, Trigger, Vec<C64>)>,
    restart: bool,
    samples: usize,
}

/// Runs the certified minimization for any objective. `starts` may be empty.
pub fn solve(obj: &Objective, starts: &[C64], cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    if cfg.workers == 0 {
        return Err(SolveError::Config("workers must be at least 1".into()));
    }
    if !(cfg.term_rel > 0.0 && cfg.gamma_guard > 0.0 && cfg.gamma_guard < cfg.restart_rel && cfg.restart_rel < 1.0) {
        return Err(SolveError::Config("need term_rel > 0 and 0 < gamma_guard < restart_rel < 1".into()));
    }
    if let Some((lo, hi)) = cfg.domain_override {
        if !(lo.is_finite() && hi.is_finite() && lo < hi && hi - lo <= 2.0 * PI + 1e-12) {
            return Err(SolveError::Config(format!("invalid angle domain [{lo}, {hi}]")));
        }
    }
    for &z in starts {
        if !obj.is_feasible(z) {
            return Err(SolveError::InfeasibleStart { z, kind: obj.kind });
        }
    }
    let kind = obj.kind;
    let trivial = |status: Status, quantity: f64| SolveResult {
        kind,
        quantity,
        gamma_final: if quantity.is_infinite() { 0.0 } else { 1.0 / quantity },
        minimizer: None,
        status,
        restarts: Vec::new(),
        certificate_samples: Vec::new(),
        trace: Vec::new(),
        notes: Vec::new(),
    };

    let spec = linalg::eigenvalues(&obj.a)?;
    let anorm = obj.a.norm2()?;
    match kind {
        PencilKind::KreissContinuous => {
            if spec.abscissa() > 1e-12 * anorm {
                return Ok(trivial(Status::UnstableInfinite, f64::INFINITY));
            }
            if spec.min_modulus() <= 1e-12 * anorm {
                return Err(SolveError::ZeroEigenvalue);
            }
            if linalg::is_normal(&obj.a, 1e-12) {
                return Ok(trivial(Status::TrivialNormal, 1.0));
            }
        }
        PencilKind::KreissDiscrete => {
            if spec.radius() > 1.0 + 1e-12 {
                return Ok(trivial(Status::UnstableInfinite, f64::INFINITY));
            }
            if linalg::is_normal(&obj.a, 1e-12) {
                return Ok(trivial(Status::TrivialNormal, 1.0));
            }
        }
        PencilKind::DistUncontrollability => {}
    }

    // Optional imaginary shift for the continuous case; K is invariant under it.
    let mut shift = C64::new(0.0, 0.0);
    let shifted;
    let obj = if cfg.shift_center && kind == PencilKind::KreissContinuous && !obj.a.is_real(0.0) {
        let ybar = spec.values.iter().map(|l| l.im).sum::<f64>() / spec.len() as f64;
        shift = C64::new(0.0, ybar);
        shifted = Objective::kreiss_continuous(obj.a.shift(-shift))?;
        &shifted
    } else {
        obj
    };

    let real_a = obj.a.is_real(REAL_TOL);
    let full_circle = match kind {
        PencilKind::KreissContinuous | PencilKind::KreissDiscrete => !real_a,
        PencilKind::DistUncontrollability => {
            let real_b = obj.b.as_ref().is_some_and(|b| b.is_real(REAL_TOL));
            !((real_a && real_b) || obj.a.is_hermitian(REAL_TOL))
        }
    };
    let pool = if cfg.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.workers)
                .build()
                .map_err(|e| SolveError::Workers(e.to_string()))?,
        )
    } else {
        None
    };
    let full_circle = match cfg.domain_override {
        Some((lo, hi)) => kind != PencilKind::KreissContinuous && hi - lo >= 2.0 * PI - 1e-12,
        None => full_circle && kind != PencilKind::KreissContinuous,
    };
    let mut run = Runner { obj, cfg, pool, trace: Vec::new(), notes: Vec::new(), full_circle };

    let level = LevelData {
        gram_eigs: if kind == PencilKind::KreissDiscrete {
            linalg::hermitian_eigenvalues(&(&obj.a * &obj.a.adjoint()))?
        } else {
            Vec::new()
        },
        norm_sq: anorm * anorm,
        f0: if kind == PencilKind::DistUncontrollability {
            obj.value(C64::new(0.0, 0.0))?
        } else {
            f64::NAN
        },
    };

    let mut start_pts: Vec<C64> = starts.iter().map(|&z| z - shift).collect();
    if start_pts.is_empty() {
        start_pts = default_starts(obj)?;
    }
    if kind == PencilKind::DistUncontrollability && !start_pts.contains(&C64::new(0.0, 0.0)) {
        start_pts.push(C64::new(0.0, 0.0));
    }
    let mut best = run.optimize_from(&start_pts)?.expect("at least one start");
    let mut restarts: Vec<RestartRecord> = Vec::new();
    let mut samples_per_round: Vec<usize> = Vec::new();
    let zero_level = if kind == PencilKind::DistUncontrollability {
        f64::EPSILON * obj.a.hstack(obj.b.as_ref().unwrap())?.norm_fro()
    } else {
        0.0
    };

    let mut status = Status::Converged;
    let mut round = 0usize;
    loop {
        if best.value <= zero_level {
            run.notes.push(format!("level {:e} is numerically zero; certificate skipped", best.value));
            break;
        }
        if restarts.iter().filter(|r| !r.terminal).count() > cfg.max_restarts {
            status = Status::MaxRestarts;
            break;
        }
        let gamma = best.value;
        let end = certificate_round(&mut run, round, gamma, &level)?;
        samples_per_round.push(end.samples);
        round += 1;
        match end.best {
            Some((m, trigger, used)) if m.value < gamma => {
                let significant = if end.restart { true } else { m.value < gamma * (1.0 - cfg.term_rel) };
                restarts.push(RestartRecord {
                    gamma_before: gamma,
                    gamma_after: m.value,
                    trigger,
                    points_used: used,
                    mid_round: end.restart,
                    terminal: !significant,
                });
                best = m;
                if !significant {
                    break;
                }
            }
            _ => break,
        }
    }

    let gamma_final = best.value;
    let quantity = match kind {
        PencilKind::DistUncontrollability => gamma_final,
        _ => 1.0 / gamma_final,
    };
    Ok(SolveResult {
        kind,
        quantity,
        gamma_final,
        minimizer: Some(best.z + shift),
        status,
        restarts,
        certificate_samples: samples_per_round,
        trace: run.trace,
        notes: run.notes,
    })
}

fn accepted_points(vals: &[CertificateValue]) -> Vec<C64> {
    let mut pts: Vec<C64> = Vec::new();
    // Samples without an accepted candidate count as nonzero and add nothing.
    for v in vals {
        for z in certificates::extract_restart_points(v).unwrap_or_default() {
            if !pts.contains(&z) {
                pts.push(z);
            }
        }
    }
    pts
}

fn certificate_round(run: &mut Runner, round: usize, gamma: f64, level: &LevelData) -> Result<RoundEnd, SolveError> {
    let cfg = run.cfg;
    let gc = run.guarded_level(gamma, level);
    let cert = Certificate::new(run.obj, gc, cfg.policy)?;
    let fallback = Certificate::new(run.obj, gc * (1.0 - 1e-10), cfg.policy)?;
    let (lo, hi) = run.domain();
    let mut approx: Approximator<CertificateValue> = Approximator::new(lo, hi, cfg.interp)?;
    let mut pending: Option<(LocalMin, Trigger, Vec<C64>)> = None;
    let keep = |slot: &mut Option<(LocalMin, Trigger, Vec<C64>)>, m: LocalMin, t: Trigger, n: Vec<C64>| {
        if slot.as_ref().is_none_or(|(b, _, _)| m.value < b.value) {
            *slot = Some((m, t, n));
        }
    };

    let interp: PiecewiseCheb = loop {
        let outcome = {
            let runner = &*run;
            let mut trace_buf: Vec<(Vec<f64>, Vec<CertificateValue>)> = Vec::new();
            let mut eval = |xs: &[f64]| -> Result<Vec<CertificateValue>, SolveError> {
                let v = runner.eval_batch(&cert, &fallback, xs)?;
                if cfg.trace {
                    trace_buf.push((xs.to_vec(), v.clone()));
                }
                Ok(v)
            };
            let out = approx.run(&mut eval, &|v: &CertificateValue| v.value, &|v: &CertificateValue| v.value == 0.0);
            for (xs, vs) in &trace_buf {
                run.record(round, gc, xs, vs, TraceStage::Probe);
            }
            out
        };
        match outcome {
            Ok(SamplingOutcome::Aborted { triggers, .. }) => {
                let vals: Vec<CertificateValue> = triggers.into_iter().map(|(_, v)| v).collect();
                let pts = accepted_points(&vals);
                if let Some(m) = run.optimize_from(&pts)? {
                    if m.value < gamma * (1.0 - cfg.restart_rel) {
                        let samples = approx.stats().samples;
                        return Ok(RoundEnd { best: Some((m, Trigger::Probe, pts.clone())), restart: true, samples });
                    }
                    keep(&mut pending, m, Trigger::Probe, pts.clone());
                }
            }
            Ok(SamplingOutcome::Completed { interpolant, .. }) => break interpolant,
            Err(ApproxError::Interp(InterpError::BudgetExceeded { best, est_error })) => {
                run.notes.push(format!(
                    "round {round}: interpolation budget exhausted (estimated error {est_error:e}); final checks use the partial interpolant"
                ));
                break *best;
            }
            Err(e) => return Err(e.into()),
        }
    };
    let mut samples = approx.stats().samples;

    // Final checks on the completed interpolant.
    let argmins = interp.global_min().argmins;
    let vals = run.eval_batch(&cert, &fallback, &argmins)?;
    samples += argmins.len();
    run.record(round, gc, &argmins, &vals, TraceStage::FinalMin);
    let pts = accepted_points(&vals);
    if let Some(m) = run.optimize_from(&pts)? {
        keep(&mut pending, m, Trigger::FinalMinCheck, pts.clone());
    }

    let roots = interp.roots();
    let mut mids: Vec<f64> = roots.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    if run.full_circle && roots.len() >= 2 {
        let (lo, _) = run.domain();
        let mut w = 0.5 * (roots[roots.len() - 1] + roots[0] + 2.0 * PI);
        if w > lo + 2.0 * PI {
            w -= 2.0 * PI;
        }
        mids.push(w);
    }
    if !mids.is_empty() {
        let vals = run.eval_batch(&cert, &fallback, &mids)?;
        samples += mids.len();
        run.record(round, gc, &mids, &vals, TraceStage::RootMidpoint);
        let pts = accepted_points(&vals);
        if let Some(m) = run.optimize_from(&pts)? {
            keep(&mut pending, m, Trigger::RootMidpointCheck, pts.clone());
        }
    }
    Ok(RoundEnd { best: pending, restart: false, samples })
}
