//! Scalar certificate functions of the angle θ.
//!
//! For a level γ, each certificate is zero exactly at the angles whose ray
//! meets the γ-level set of the objective, and positive elsewhere. A positive
//! value is the squared angle by which the nearest relevant pencil eigenvalue
//! misses the positive imaginary axis, so the functions vary continuously
//! and can be interpolated.
//!
//! Eigenvalues that land within `imag_tol` of the axis are not trusted as
//! they are: each one is turned into a radius and checked by a direct
//! singular value computation on the ray.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, C64, ComplexMatrix, LinalgError};
use crate::objective::Objective;
use crate::pencils::{self, PencilError, PencilKind};

/// Thresholds used when reading pencil eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPolicy {
    /// Distance to the imaginary axis, relative to the pencil's Frobenius
    /// norm, below which an eigenvalue is a level-set candidate.
    pub imag_tol: f64,
    /// Semi-axis of the thin ellipse around `[−i, i]` whose eigenvalues the
    /// discrete-time certificate discards.
    pub ellipse_delta: f64,
    /// A candidate is accepted when `σ_min ≤ γ (1 + verify_tol)` at its radius.
    pub verify_tol: f64,
}

impl Default for EvalPolicy {
    fn default() -> Self {
        Self { imag_tol: 1e-8, ellipse_delta: 1e-8, verify_tol: 1e-10 }
    }
}

/// A radius on the ray at angle θ suggested by a near-axis eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidatePoint {
    pub r: f64,
    pub theta: f64,
    /// Objective value at `r e^{iθ}`, or infinity if the point is infeasible.
    pub verified_value: f64,
    pub accepted: bool,
}

impl CandidatePoint {
    pub fn z(&self) -> C64 {
        C64::from_polar(self.r, self.theta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateValue {
    /// Zero iff some candidate was accepted.
    pub value: f64,
    pub candidates: Vec<CandidatePoint>,
    /// Set when a near-axis eigenvalue had to be refined or was rejected by
    /// the direct check.
    pub recheck_used: bool,
}

impl CertificateValue {
    pub fn accepted(&self) -> impl Iterator<Item = &CandidatePoint> {
        self.candidates.iter().filter(|c| c.accepted)
    }

    pub fn n_accepted(&self) -> usize {
        self.accepted().count()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertificateError {
    #[error("pencil has a numerically zero relevant eigenvalue at theta = {theta}")]
    ZeroEigenvalue { theta: f64 },
    #[error("no candidate passed verification")]
    NoAcceptedCandidates,
    #[error(transparent)]
    Pencil(#[from] PencilError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Certificate evaluator for one objective at one level γ. Construction
/// does the θ-independent work.
#[derive(Debug, Clone)]
pub struct Certificate<'a> {
    obj: &'a Objective,
    gamma: f64,
    policy: EvalPolicy,
    btilde: Option<ComplexMatrix>,
}

/// Relative radius separation below which two candidates are the same.
const RADIUS_DEDUP: f64 = 1e-10;
/// Eigenvalues smaller than this, relative to the pencil norm, are zero.
const ZERO_EIG: f64 = 1e-14;
/// Newton steps allowed when refining a candidate radius.
const REFINE_STEPS: usize = 4;
/// Half-width of the refinement window, relative to the radius.
const REFINE_WINDOW: f64 = 1e-6;

impl<'a> Certificate<'a> {
    pub fn new(obj: &'a Objective, gamma: f64, policy: EvalPolicy) -> Result<Self, CertificateError> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(PencilError::InvalidGamma(gamma).into());
        }
        let btilde = obj.b.as_ref().map(|b| pencils::dtu_btilde(b, gamma));
        Ok(Self { obj, gamma, policy, btilde })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn objective(&self) -> &Objective {
        self.obj
    }

    fn reduced(&self, theta: f64) -> Result<ComplexMatrix, CertificateError> {
        Ok(match self.obj.kind {
            PencilKind::KreissContinuous => pencils::reduced_kc(&self.obj.a, self.gamma, theta)?.matrix,
            PencilKind::KreissDiscrete => pencils::reduced_kd(&self.obj.a, self.gamma, theta)?.matrix,
            PencilKind::DistUncontrollability => {
                if !theta.is_finite() {
                    return Err(PencilError::InvalidTheta(theta).into());
                }
                pencils::reduced_dtu_with(&self.obj.a, self.btilde.as_ref().unwrap(), self.gamma, theta, self.obj.n())
            }
        })
    }

    /// Evaluates the certificate at angle θ.
    pub fn eval(&self, theta: f64) -> Result<CertificateValue, CertificateError> {
        let m = self.reduced(theta)?;
        let scale = m.norm_fro();
        let spectrum = linalg::eigenvalues(&m)?;
        let kind = self.obj.kind;
        let delta = self.policy.ellipse_delta;

        let relevant: Vec<C64> = spectrum
            .values
            .into_iter()
            .filter(|l| {
                if kind != PencilKind::KreissDiscrete {
                    return true;
                }
                let on_segment = l.re == 0.0 && (0.0..=1.0).contains(&l.im);
                let in_ellipse = (l.re / delta).powi(2) + l.im * l.im < 1.0;
                !(on_segment || in_ellipse)
            })
            .collect();

        if relevant.iter().any(|l| l.norm() < ZERO_EIG * scale) {
            return Err(CertificateError::ZeroEigenvalue { theta });
        }

        let tol = self.policy.imag_tol * scale;
        let mut radii: Vec<f64> = relevant
            .iter()
            .filter(|l| {
                let dist = match kind {
                    PencilKind::KreissDiscrete if l.im < 1.0 => (*l - linalg::I).norm(),
                    _ if l.im <= 0.0 => l.norm(),
                    _ => l.re.abs(),
                };
                dist <= tol && l.im > 0.0
            })
            .map(|l| l.im)
            .collect();
        radii.sort_by(f64::total_cmp);
        radii.dedup_by(|b, a| (*b - *a).abs() <= RADIUS_DEDUP * a.abs().max(b.abs()));

        let mut recheck_used = false;
        let mut candidates = Vec::with_capacity(radii.len());
        for r in radii {
            let (cand, rechecked) = self.verify(r, theta)?;
            recheck_used |= rechecked;
            candidates.push(cand);
        }

        let value = if candidates.iter().any(|c| c.accepted) {
            0.0
        } else {
            let v = relevant
                .iter()
                .map(|l| l.re.abs().atan2(l.im).powi(2))
                .fold(f64::INFINITY, f64::min);
            if v.is_infinite() {
                PI * PI
            } else {
                v.max(f64::MIN_POSITIVE)
            }
        };
        Ok(CertificateValue { value, candidates, recheck_used })
    }

    /// Direct check of a candidate radius, with a few Newton steps on
    /// `σ_min(r) = γ` when the eigenvalue is slightly off.
    fn verify(&self, r0: f64, theta: f64) -> Result<(CandidatePoint, bool), CertificateError> {
        let kind = self.obj.kind;
        let limit = self.gamma * (1.0 + self.policy.verify_tol);
        if !pencils::radial_feasible(kind, r0, theta) {
            let cand = CandidatePoint { r: r0, theta, verified_value: f64::INFINITY, accepted: false };
            return Ok((cand, true));
        }
        let (mut s, mut ds) = self.obj.radial_value_and_slope(r0, theta)?;
        if s <= limit {
            return Ok((CandidatePoint { r: r0, theta, verified_value: s, accepted: true }, false));
        }
        let (lo, hi) = (r0 * (1.0 - REFINE_WINDOW), r0 * (1.0 + REFINE_WINDOW));
        let (mut best_r, mut best_s) = (r0, s);
        let mut r = r0;
        for _ in 0..REFINE_STEPS {
            if ds == 0.0 || !ds.is_finite() {
                break;
            }
            let next = r - (s - self.gamma) / ds;
            if !(next > lo && next < hi) || !pencils::radial_feasible(kind, next, theta) {
                break;
            }
            r = next;
            (s, ds) = self.obj.radial_value_and_slope(r, theta)?;
            if s < best_s {
                best_r = r;
                best_s = s;
            }
            if best_s <= limit {
                break;
            }
        }
        let cand = CandidatePoint { r: best_r, theta, verified_value: best_s, accepted: best_s <= limit };
        Ok((cand, true))
    }
}

/// Continuous-time Kreiss certificate at one angle.
pub fn eval_g(a: &ComplexMatrix, gamma: f64, theta: f64, policy: EvalPolicy) -> Result<CertificateValue, CertificateError> {
    let obj = Objective::kreiss_continuous(a.clone())?;
    Certificate::new(&obj, gamma, policy)?.eval(theta)
}

/// Discrete-time Kreiss certificate at one angle.
pub fn eval_h(a: &ComplexMatrix, gamma: f64, theta: f64, policy: EvalPolicy) -> Result<CertificateValue, CertificateError> {
    let obj = Objective::kreiss_discrete(a.clone())?;
    Certificate::new(&obj, gamma, policy)?.eval(theta)
}

/// Uncontrollability certificate at one angle.
pub fn eval_f(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    gamma: f64,
    theta: f64,
    policy: EvalPolicy,
) -> Result<CertificateValue, CertificateError> {
    let obj = Objective::dist_uncontrollability(a.clone(), b.clone())?;
    Certificate::new(&obj, gamma, policy)?.eval(theta)
}

/// Accepted candidates as starting points, best verified value first.
pub fn extract_restart_points(value: &CertificateValue) -> Result<Vec<C64>, CertificateError> {
    let mut acc: Vec<&CandidatePoint> = value.accepted().collect();
    if acc.is_empty() {
        return Err(CertificateError::NoAcceptedCandidates);
    }
    acc.sort_by(|a, b| a.verified_value.total_cmp(&b.verified_value).then(a.r.total_cmp(&b.r)));
    Ok(acc.into_iter().map(|c| c.z()).collect())
}
