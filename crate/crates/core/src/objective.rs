//! Problem data shared by the certificates, the local optimizer and the solver.

use crate::linalg::{self, C64, ComplexMatrix};
use crate::pencils::{self, PencilError, PencilKind};

/// One of the three quantities, with its matrices.
///
/// * continuous Kreiss: `σ_min(zI − A) / Re z` over `Re z > 0`
/// * discrete Kreiss: `σ_min(zI − A) / (|z| − 1)` over `|z| > 1`
/// * uncontrollability: `σ_min([A − zI, B])` over all `z`
#[derive(Debug, Clone)]
pub struct Objective {
    pub kind: PencilKind,
    pub a: ComplexMatrix,
    pub b: Option<ComplexMatrix>,
}

fn check_a(a: &ComplexMatrix) -> Result<(), PencilError> {
    if a.rows() == 0 || !a.is_square() {
        return Err(PencilError::Shape(format!("A must be square and nonempty, got {}x{}", a.rows(), a.cols())));
    }
    a.validate_finite()?;
    Ok(())
}

impl Objective {
    pub fn kreiss_continuous(a: ComplexMatrix) -> Result<Self, PencilError> {
        check_a(&a)?;
        Ok(Self { kind: PencilKind::KreissContinuous, a, b: None })
    }

    pub fn kreiss_discrete(a: ComplexMatrix) -> Result<Self, PencilError> {
        check_a(&a)?;
        Ok(Self { kind: PencilKind::KreissDiscrete, a, b: None })
    }

    pub fn dist_uncontrollability(a: ComplexMatrix, b: ComplexMatrix) -> Result<Self, PencilError> {
        check_a(&a)?;
        if b.rows() != a.rows() || b.cols() == 0 {
            return Err(PencilError::Shape(format!(
                "B must have {} rows and at least one column, got {}x{}",
                a.rows(),
                b.rows(),
                b.cols()
            )));
        }
        b.validate_finite()?;
        Ok(Self { kind: PencilKind::DistUncontrollability, a, b: Some(b) })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn is_feasible(&self, z: C64) -> bool {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return false;
        }
        match self.kind {
            PencilKind::KreissContinuous => z.re > 0.0,
            PencilKind::KreissDiscrete => z.norm() > 1.0,
            PencilKind::DistUncontrollability => true,
        }
    }

    /// Matrix whose smallest singular value is the objective at `z`.
    pub fn matrix_at(&self, z: C64) -> Result<ComplexMatrix, PencilError> {
        if !self.is_feasible(z) {
            return Err(PencilError::InfeasiblePoint { kind: self.kind, r: z.norm(), theta: z.arg() });
        }
        Ok(match self.kind {
            PencilKind::KreissContinuous => (-&self.a).shift(z).scale(C64::new(1.0 / z.re, 0.0)),
            PencilKind::KreissDiscrete => (-&self.a).shift(z).scale(C64::new(1.0 / (z.norm() - 1.0), 0.0)),
            PencilKind::DistUncontrollability => self.a.shift(-z).hstack(self.b.as_ref().unwrap())?,
        })
    }

    /// Objective value at `z`.
    pub fn value(&self, z: C64) -> Result<f64, PencilError> {
        Ok(linalg::smallest_singular_triplet(&self.matrix_at(z)?)?.sigma)
    }

    /// Objective value along the ray `r e^{iθ}` and its derivative in `r`.
    pub fn radial_value_and_slope(&self, r: f64, theta: f64) -> Result<(f64, f64), PencilError> {
        let m = pencils::radial_matrix(self.kind, &self.a, self.b.as_ref(), r, theta)?;
        let t = linalg::smallest_singular_triplet(&m)?;
        let n = self.n();
        let uv: C64 = (0..n).map(|i| t.u[i].conj() * t.v[i]).sum();
        let e = C64::from_polar(1.0, theta);
        let slope = match self.kind {
            PencilKind::KreissContinuous => (e * uv).re / (r * theta.cos()) - t.sigma / r,
            PencilKind::KreissDiscrete => ((e * uv).re - t.sigma) / (r - 1.0),
            PencilKind::DistUncontrollability => -(e * uv).re,
        };
        Ok((t.sigma, slope))
    }

    /// Whether the matrices are real, so the objective is symmetric under
    /// conjugation of `z`.
    pub fn is_real(&self) -> bool {
        self.a.is_real(0.0) && self.b.as_ref().is_none_or(|b| b.is_real(0.0))
    }
}
