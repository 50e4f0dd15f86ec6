//! Structured pencils for the three level-set problems.
//!
//! For a fixed angle θ and level γ, each quantity has a pencil whose
//! eigenvalues on the positive imaginary axis, `λ = i r`, are exactly the radii
//! `r` at which the ray `r e^{iθ}` meets the γ-level set of the radial
//! singular value function. The second member of each pencil has the scalar
//! block form `[[aI, bI], [cI, dI]]`, so it is inverted in closed form and the
//! pencil collapses to a single matrix.
//!
//! | quantity | radial matrix | lhs | rhs |
//! |---|---|---|---|
//! | continuous Kreiss | `(r e^{iθ} I − A) / (r cos θ)` | `[[A, 0], [0, −A*]]` | `[[−i e^{iθ} I, i γ cos θ I], [−i γ cos θ I, i e^{−iθ} I]]` |
//! | discrete Kreiss | `(r e^{iθ} I − A) / (r − 1)` | `[[A, −γI], [γI, −A*]]` | `[[−i e^{iθ} I, iγI], [−iγI, i e^{−iθ} I]]` |
//! | uncontrollability | `[A − r e^{iθ} I, B]` | `[[A, BB*/γ − γI], [γI, −A*]]` | `diag(−i e^{iθ} I, i e^{−iθ} I)` |

use thiserror::Error;

use crate::linalg::{self, C64, ComplexMatrix, LinalgError, I};

/// Relative distance from singularity below which the second member is
/// treated as singular.
pub const SINGULAR_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum PencilKind {
    KreissContinuous,
    KreissDiscrete,
    DistUncontrollability,
}

impl PencilKind {
    pub fn name(self) -> &'static str {
        match self {
            PencilKind::KreissContinuous => "kreiss-continuous",
            PencilKind::KreissDiscrete => "kreiss-discrete",
            PencilKind::DistUncontrollability => "dist-uncontrollability",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PencilError {
    #[error("second pencil member is numerically singular for {} at gamma = {gamma}, theta = {theta}", kind.name())]
    NearSingularSecondMember { kind: PencilKind, gamma: f64, theta: f64 },
    #[error("gamma must be positive and finite, got {0}")]
    InvalidGamma(f64),
    #[error("theta must be finite, got {0}")]
    InvalidTheta(f64),
    #[error("point r = {r}, theta = {theta} is outside the domain of the {} objective", kind.name())]
    InfeasiblePoint { kind: PencilKind, r: f64, theta: f64 },
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The two members `(lhs, rhs)` of a pencil `lhs − λ rhs`.
#[derive(Debug, Clone)]
pub struct PencilPair {
    pub lhs: ComplexMatrix,
    pub rhs: ComplexMatrix,
}

/// `rhs⁻¹ lhs`, together with the parameters it was built for.
#[derive(Debug, Clone)]
pub struct ReducedPencil {
    pub kind: PencilKind,
    pub gamma: f64,
    pub theta: f64,
    pub matrix: ComplexMatrix,
}

fn check_square(a: &ComplexMatrix) -> Result<usize, PencilError> {
    if a.rows() == 0 || !a.is_square() {
        return Err(PencilError::Shape(format!("A must be square and nonempty, got {}x{}", a.rows(), a.cols())));
    }
    a.validate_finite()?;
    Ok(a.rows())
}

fn check_b(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<(), PencilError> {
    if b.rows() != a.rows() || b.cols() == 0 {
        return Err(PencilError::Shape(format!(
            "B must have {} rows and at least one column, got {}x{}",
            a.rows(),
            b.rows(),
            b.cols()
        )));
    }
    b.validate_finite()?;
    Ok(())
}

fn check_params(gamma: f64, theta: f64) -> Result<(), PencilError> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(PencilError::InvalidGamma(gamma));
    }
    if !theta.is_finite() {
        return Err(PencilError::InvalidTheta(theta));
    }
    Ok(())
}

fn scalar_blocks(n: usize, a: C64, b: C64, c: C64, d: C64) -> ComplexMatrix {
    ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, bj) = (i / n, j / n);
        if i % n != j % n {
            return C64::new(0.0, 0.0);
        }
        match (bi, bj) {
            (0, 0) => a,
            (0, _) => b,
            (_, 0) => c,
            _ => d,
        }
    })
}

/// 2-norm condition number of the second member, in closed form.
///
/// A matrix `[[aI, bI], [b̄I, āI]]` has condition number
/// `(|a| + |b|) / ||a| − |b||`; the uncontrollability member is unitary up to
/// phases and has condition number 1.
pub fn second_member_condition(kind: PencilKind, gamma: f64, theta: f64) -> f64 {
    let b = match kind {
        PencilKind::KreissContinuous => (gamma * theta.cos()).abs(),
        PencilKind::KreissDiscrete => gamma.abs(),
        PencilKind::DistUncontrollability => return 1.0,
    };
    (1.0 + b) / (1.0 - b).abs()
}

fn guard(kind: PencilKind, off: f64, gamma: f64, theta: f64) -> Result<(), PencilError> {
    if (1.0 - off.abs()).abs() <= SINGULAR_GUARD {
        Err(PencilError::NearSingularSecondMember { kind, gamma, theta })
    } else {
        Ok(())
    }
}

/// Reduced continuous-time Kreiss pencil
/// `i/(1−c²) [[e^{−iθ}A, cA*], [cA, e^{iθ}A*]]` with `c = γ cos θ`.
pub fn reduced_kc(a: &ComplexMatrix, gamma: f64, theta: f64) -> Result<ReducedPencil, PencilError> {
    let n = check_square(a)?;
    check_params(gamma, theta)?;
    let c = gamma * theta.cos();
    guard(PencilKind::KreissContinuous, c, gamma, theta)?;
    let s = I / (1.0 - c * c);
    let em = C64::from_polar(1.0, -theta);
    let ep = C64::from_polar(1.0, theta);
    let ah = a.adjoint();
    let matrix = ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (ii, jj) = (i % n, j % n);
        s * match (i < n, j < n) {
            (true, true) => em * a.get(ii, jj),
            (true, false) => c * ah.get(ii, jj),
            (false, true) => c * a.get(ii, jj),
            (false, false) => ep * ah.get(ii, jj),
        }
    });
    Ok(ReducedPencil { kind: PencilKind::KreissContinuous, gamma, theta, matrix })
}

/// Reduced discrete-time Kreiss pencil
/// `i/(1−γ²) [[e^{−iθ}A − γ²I, γ(A* − e^{−iθ}I)], [γ(A − e^{iθ}I), e^{iθ}A* − γ²I]]`.
pub fn reduced_kd(a: &ComplexMatrix, gamma: f64, theta: f64) -> Result<ReducedPencil, PencilError> {
    let n = check_square(a)?;
    check_params(gamma, theta)?;
    guard(PencilKind::KreissDiscrete, gamma, gamma, theta)?;
    let s = I / (1.0 - gamma * gamma);
    let em = C64::from_polar(1.0, -theta);
    let ep = C64::from_polar(1.0, theta);
    let g2 = C64::new(gamma * gamma, 0.0);
    let ah = a.adjoint();
    let matrix = ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (ii, jj) = (i % n, j % n);
        let diag = ii == jj;
        let dz = |z: C64| if diag { z } else { C64::new(0.0, 0.0) };
        s * match (i < n, j < n) {
            (true, true) => em * a.get(ii, jj) - dz(g2),
            (true, false) => gamma * (ah.get(ii, jj) - dz(em)),
            (false, true) => gamma * (a.get(ii, jj) - dz(ep)),
            (false, false) => ep * ah.get(ii, jj) - dz(g2),
        }
    });
    Ok(ReducedPencil { kind: PencilKind::KreissDiscrete, gamma, theta, matrix })
}

/// `BB*/γ − γI`.
pub fn dtu_btilde(b: &ComplexMatrix, gamma: f64) -> ComplexMatrix {
    let bb = b * &b.adjoint();
    bb.scale(C64::new(1.0 / gamma, 0.0)).shift(C64::new(-gamma, 0.0))
}

/// Reduced uncontrollability pencil
/// `i [[e^{−iθ}A, e^{−iθ}B̃], [−γ e^{iθ} I, e^{iθ}A*]]` with `B̃ = BB*/γ − γI`.
pub fn reduced_dtu(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    gamma: f64,
    theta: f64,
) -> Result<ReducedPencil, PencilError> {
    let n = check_square(a)?;
    check_b(a, b)?;
    check_params(gamma, theta)?;
    let bt = dtu_btilde(b, gamma);
    Ok(ReducedPencil { kind: PencilKind::DistUncontrollability, gamma, theta, matrix: reduced_dtu_with(a, &bt, gamma, theta, n) })
}

/// Same as [`reduced_dtu`] with a precomputed `B̃`, for repeated angles at
/// one level.
pub fn reduced_dtu_with(a: &ComplexMatrix, btilde: &ComplexMatrix, gamma: f64, theta: f64, n: usize) -> ComplexMatrix {
    let em = C64::from_polar(1.0, -theta);
    let ep = C64::from_polar(1.0, theta);
    ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (ii, jj) = (i % n, j % n);
        I * match (i < n, j < n) {
            (true, true) => em * a.get(ii, jj),
            (true, false) => em * btilde.get(ii, jj),
            (false, true) => {
                if ii == jj {
                    -gamma * ep
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            (false, false) => ep * a.get(jj, ii).conj(),
        }
    })
}

/// Builds the reduced pencil for any kind. `b` is required for the
/// uncontrollability kind and ignored otherwise.
pub fn reduced_pencil(
    kind: PencilKind,
    a: &ComplexMatrix,
    b: Option<&ComplexMatrix>,
    gamma: f64,
    theta: f64,
) -> Result<ReducedPencil, PencilError> {
    match kind {
        PencilKind::KreissContinuous => reduced_kc(a, gamma, theta),
        PencilKind::KreissDiscrete => reduced_kd(a, gamma, theta),
        PencilKind::DistUncontrollability => {
            let b = b.ok_or_else(|| PencilError::Shape("the uncontrollability pencil needs B".into()))?;
            reduced_dtu(a, b, gamma, theta)
        }
    }
}

/// Unreduced members `(lhs, rhs)`. Useful for structure checks; the
/// certificates only use the reduced form.
pub fn pencil_pair(
    kind: PencilKind,
    a: &ComplexMatrix,
    b: Option<&ComplexMatrix>,
    gamma: f64,
    theta: f64,
) -> Result<PencilPair, PencilError> {
    let n = check_square(a)?;
    check_params(gamma, theta)?;
    let ep = C64::from_polar(1.0, theta);
    let em = C64::from_polar(1.0, -theta);
    let zero = ComplexMatrix::zeros(n, n);
    let ah = a.adjoint();
    let gi = ComplexMatrix::identity(n).scale(C64::new(gamma, 0.0));
    match kind {
        PencilKind::KreissContinuous => {
            let c = gamma * theta.cos();
            let lhs = ComplexMatrix::block2x2(a, &zero, &zero, &(-&ah))?;
            let rhs = scalar_blocks(n, -I * ep, I * c, -I * c, I * em);
            Ok(PencilPair { lhs, rhs })
        }
        PencilKind::KreissDiscrete => {
            let lhs = ComplexMatrix::block2x2(a, &(-&gi), &gi, &(-&ah))?;
            let rhs = scalar_blocks(n, -I * ep, I * gamma, -I * gamma, I * em);
            Ok(PencilPair { lhs, rhs })
        }
        PencilKind::DistUncontrollability => {
            let b = b.ok_or_else(|| PencilError::Shape("the uncontrollability pencil needs B".into()))?;
            check_b(a, b)?;
            let lhs = ComplexMatrix::block2x2(a, &dtu_btilde(b, gamma), &gi, &(-&ah))?;
            let z = C64::new(0.0, 0.0);
            let rhs = scalar_blocks(n, -I * ep, z, z, I * em);
            Ok(PencilPair { lhs, rhs })
        }
    }
}

/// Both members and the reduced matrix in one call.
pub fn build_pencil(
    kind: PencilKind,
    a: &ComplexMatrix,
    b: Option<&ComplexMatrix>,
    gamma: f64,
    theta: f64,
) -> Result<(PencilPair, ReducedPencil), PencilError> {
    let red = reduced_pencil(kind, a, b, gamma, theta)?;
    let pair = pencil_pair(kind, a, b, gamma, theta)?;
    Ok((pair, red))
}

/// `J = [[0, I], [−I, 0]]` of order `2n`.
pub fn j_matrix(n: usize) -> ComplexMatrix {
    let one = C64::new(1.0, 0.0);
    let z = C64::new(0.0, 0.0);
    scalar_blocks(n, z, one, -one, z)
}

/// Whether the radial point `(r, θ)` lies in the domain of the objective.
pub fn radial_feasible(kind: PencilKind, r: f64, theta: f64) -> bool {
    if !(r.is_finite() && theta.is_finite()) {
        return false;
    }
    match kind {
        PencilKind::KreissContinuous => r > 0.0 && theta.cos() > 0.0,
        PencilKind::KreissDiscrete => r > 1.0,
        PencilKind::DistUncontrollability => r >= 0.0,
    }
}

/// The radial matrix whose smallest singular value defines each objective:
/// `(z I − A)/(r cos θ)`, `(z I − A)/(r − 1)` or `[A − z I, B]` with
/// `z = r e^{iθ}`.
pub fn radial_matrix(
    kind: PencilKind,
    a: &ComplexMatrix,
    b: Option<&ComplexMatrix>,
    r: f64,
    theta: f64,
) -> Result<ComplexMatrix, PencilError> {
    check_square(a)?;
    if !radial_feasible(kind, r, theta) {
        return Err(PencilError::InfeasiblePoint { kind, r, theta });
    }
    let z = C64::from_polar(r, theta);
    match kind {
        PencilKind::KreissContinuous => {
            let d = r * theta.cos();
            Ok((-a).shift(z).scale(C64::new(1.0 / d, 0.0)))
        }
        PencilKind::KreissDiscrete => Ok((-a).shift(z).scale(C64::new(1.0 / (r - 1.0), 0.0))),
        PencilKind::DistUncontrollability => {
            let b = b.ok_or_else(|| PencilError::Shape("the uncontrollability objective needs B".into()))?;
            check_b(a, b)?;
            Ok(a.shift(-z).hstack(b)?)
        }
    }
}

/// Smallest singular value of [`radial_matrix`].
pub fn radial_sigma_min(
    kind: PencilKind,
    a: &ComplexMatrix,
    b: Option<&ComplexMatrix>,
    r: f64,
    theta: f64,
) -> Result<f64, PencilError> {
    let m = radial_matrix(kind, a, b, r, theta)?;
    Ok(linalg::smallest_singular_triplet(&m)?.sigma)
}
