//! Brute-force references for testing the solver.
//!
//! These are deliberately slow and simple. Apart from `linalg` and the local
//! polish in [`grid_min`], nothing here shares code with the certified path.

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{self, C64, ComplexMatrix, LinalgError};
use crate::localopt::{self, LocalOptConfig};
use crate::objective::Objective;
use crate::pencils::{PencilError, PencilKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("grid needs at least 50 points per axis, got {0}")]
    Resolution(usize),
    #[error("invalid grid region: {0}")]
    Region(String),
    #[error("matrix exponential overflowed at t = {t}")]
    Overflow { t: f64 },
    #[error(transparent)]
    Pencil(#[from] PencilError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A tensor grid in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// `x + iy` with `x` in `re` and `y` in `im`.
    Cartesian { re: (f64, f64), im: (f64, f64) },
    /// `r e^{iθ}` with `r` in `r` and `θ` in `theta`.
    Polar { r: (f64, f64), theta: (f64, f64) },
    /// `(1 + g) e^{iθ}`, for grids that crowd toward the unit circle.
    Annulus { gap: (f64, f64), theta: (f64, f64) },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub region: Region,
    pub n1: usize,
    pub n2: usize,
    /// Space the first axis logarithmically (needs a positive range).
    pub log_first: bool,
    pub polish: bool,
}

impl GridSpec {
    pub fn cartesian(re: (f64, f64), im: (f64, f64), n: usize) -> Self {
        Self { region: Region::Cartesian { re, im }, n1: n, n2: n, log_first: false, polish: true }
    }

    pub fn polar(r: (f64, f64), theta: (f64, f64), n: usize) -> Self {
        Self { region: Region::Polar { r, theta }, n1: n, n2: n, log_first: false, polish: true }
    }

    fn axis(lo: f64, hi: f64, n: usize, log: bool) -> Vec<f64> {
        (0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                if log {
                    (lo.ln() + t * (hi.ln() - lo.ln())).exp()
                } else {
                    lo + t * (hi - lo)
                }
            })
            .collect()
    }

    /// Grid points, row-major in (first axis, second axis).
    pub fn points(&self) -> Result<Vec<C64>, OracleError> {
        if self.n1 < 50 || self.n2 < 50 {
            return Err(OracleError::Resolution(self.n1.min(self.n2)));
        }
        let ((a0, a1), (b0, b1)) = match self.region {
            Region::Cartesian { re, im } => (re, im),
            Region::Polar { r, theta } => (r, theta),
            Region::Annulus { gap, theta } => (gap, theta),
        };
        if !(a0 < a1 && b0 < b1) || (self.log_first && a0 <= 0.0) {
            return Err(OracleError::Region(format!("[{a0}, {a1}] x [{b0}, {b1}]")));
        }
        let ax = Self::axis(a0, a1, self.n1, self.log_first);
        let bx = Self::axis(b0, b1, self.n2, false);
        let mut out = Vec::with_capacity(ax.len() * bx.len());
        for &a in &ax {
            for &b in &bx {
                out.push(match self.region {
                    Region::Cartesian { .. } => C64::new(a, b),
                    Region::Polar { .. } => C64::from_polar(a, b),
                    Region::Annulus { .. } => C64::from_polar(1.0 + a, b),
                });
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMin {
    pub z: C64,
    pub value: f64,
}

/// Grid minimum of the objective, optionally polished by local searches from
/// the 10 best grid local minima. Infeasible grid points are skipped.
pub fn grid_min(obj: &Objective, spec: &GridSpec) -> Result<GridMin, OracleError> {
    let pts = spec.points()?;
    let vals: Vec<f64> = pts
        .par_iter()
        .map(|&z| if obj.is_feasible(z) { obj.value(z).unwrap_or(f64::INFINITY) } else { f64::INFINITY })
        .collect();
    let (n1, n2) = (spec.n1, spec.n2);
    let idx = |i: usize, j: usize| i * n2 + j;
    let mut best = GridMin { z: C64::new(f64::NAN, f64::NAN), value: f64::INFINITY };
    for (k, &v) in vals.iter().enumerate() {
        if v < best.value {
            best = GridMin { z: pts[k], value: v };
        }
    }
    if !best.value.is_finite() {
        return Err(OracleError::Region("no feasible grid point".into()));
    }
    if !spec.polish {
        return Ok(best);
    }
    let mut locals: Vec<(f64, usize)> = Vec::new();
    for i in 0..n1 {
        for j in 0..n2 {
            let v = vals[idx(i, j)];
            if !v.is_finite() {
                continue;
            }
            let mut is_min = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || ii < 0 || jj < 0 || ii >= n1 as i64 || jj >= n2 as i64 {
                        continue;
                    }
                    if vals[idx(ii as usize, jj as usize)] < v {
                        is_min = false;
                    }
                }
            }
            if is_min {
                locals.push((v, idx(i, j)));
            }
        }
    }
    locals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    locals.truncate(10);
    let cfg = LocalOptConfig::default();
    let polished: Vec<_> = locals.par_iter().map(|&(_, k)| localopt::minimize(obj, pts[k], &cfg)).collect();
    for m in polished.into_iter().flatten() {
        if m.value < best.value {
            best = GridMin { z: m.z, value: m.value };
        }
    }
    Ok(best)
}

/// Logarithmically spaced radii.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    GridSpec::axis(lo, hi, n, true)
}

/// Whether the objective minus `gamma` changes sign, or comes within 1e-9 of
/// zero, between consecutive radii of the ray at angle `theta`.
pub fn ray_scan(obj: &Objective, gamma: f64, theta: f64, r_grid: &[f64]) -> Result<bool, OracleError> {
    let e = C64::from_polar(1.0, theta);
    let mut prev: Option<f64> = None;
    for &r in r_grid {
        let z = e * r;
        // Continuous rays leave the half-plane for |θ| ≥ π/2.
        if !obj.is_feasible(z) {
            prev = None;
            continue;
        }
        let d = obj.value(z)? - gamma;
        if d.abs() <= 1e-9 {
            return Ok(true);
        }
        if let Some(p) = prev {
            if (p < 0.0) != (d < 0.0) {
                return Ok(true);
            }
        }
        prev = Some(d);
    }
    Ok(false)
}

// Padé-13 scaling and squaring for exp(A).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential.
pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix, OracleError> {
    let n = a.rows();
    let norm = a.norm_one();
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a.scale(C64::new(2f64.powi(-s), 0.0));
    let id = ComplexMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| C64::new(PADE13[k], 0.0);
    let u_inner = &(&a6.scale(b(13)) + &a4.scale(b(11))) + &a2.scale(b(9));
    let u = &a
        * &(&(&(&a6 * &u_inner) + &a6.scale(b(7))) + &(&(&a4.scale(b(5)) + &a2.scale(b(3))) + &id.scale(b(1))));
    let v_inner = &(&a6.scale(b(12)) + &a4.scale(b(10))) + &a2.scale(b(8));
    let v = &(&(&a6 * &v_inner) + &a6.scale(b(6))) + &(&(&a4.scale(b(4)) + &a2.scale(b(2))) + &id.scale(b(0)));
    let mut r = linalg::solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// `‖e^{tA}‖₂` at each `t`.
pub fn transient_samples(a: &ComplexMatrix, t_grid: &[f64]) -> Result<Vec<f64>, OracleError> {
    t_grid
        .iter()
        .map(|&t| {
            let e = expm(&a.scale(C64::new(t, 0.0)))?;
            if !e.max_abs().is_finite() {
                return Err(OracleError::Overflow { t });
            }
            Ok(e.norm2()?)
        })
        .collect()
}

/// `‖A^k‖₂` for `k = 0..=kmax`.
pub fn power_norms(a: &ComplexMatrix, kmax: usize) -> Result<Vec<f64>, OracleError> {
    let mut p = ComplexMatrix::identity(a.rows());
    let mut out = Vec::with_capacity(kmax + 1);
    for _ in 0..=kmax {
        out.push(p.norm2()?);
        p = &p * a;
    }
    Ok(out)
}

/// Lower bound on the ε-pseudospectral abscissa: the largest `Re z` over the
/// grid points with `σ_min(zI − A) ≤ ε`, refined along the real direction by
/// bisection toward the boundary. `-∞` if no grid point qualifies.
pub fn psa_grid_estimate(a: &ComplexMatrix, eps: f64, grid: &[C64]) -> Result<f64, OracleError> {
    let smin = |z: C64| -> Result<f64, OracleError> {
        Ok(linalg::smallest_singular_triplet(&(-a).shift(z))?.sigma)
    };
    let vals: Vec<Result<f64, OracleError>> = grid.par_iter().map(|&z| smin(z)).collect();
    let mut best: Option<C64> = None;
    for (&z, v) in grid.iter().zip(vals) {
        if v? <= eps && best.is_none_or(|b| z.re > b.re) {
            best = Some(z);
        }
    }
    let Some(z0) = best else {
        return Ok(f64::NEG_INFINITY);
    };
    // Walk right until outside, then bisect; every accepted point is inside.
    let scale = a.norm_fro().max(eps).max(z0.norm());
    let mut step = 1e-3 * scale;
    let mut inside = z0.re;
    let mut outside = None;
    for _ in 0..200 {
        let x = inside + step;
        if smin(C64::new(x, z0.im))? <= eps {
            inside = x;
            step *= 2.0;
        } else {
            outside = Some(x);
            break;
        }
    }
    if let Some(mut out) = outside {
        for _ in 0..60 {
            let mid = 0.5 * (inside + out);
            if smin(C64::new(mid, z0.im))? <= eps {
                inside = mid;
            } else {
                out = mid;
            }
        }
    }
    Ok(inside)
}

/// [`grid_min`] with `n × n` points over default regions for the kind, the
/// better of two grids: one scaled by `‖A‖₂` and, for the continuous Kreiss
/// and distance objectives, one fitted to the spectrum. The second matters
/// when `‖A‖₂` is far larger than the eigenvalues.
pub fn reference_min(obj: &Objective, n: usize) -> Result<GridMin, OracleError> {
    let s = obj.a.norm2()?.max(1e-3);
    let spec = linalg::eigenvalues(&obj.a)?;
    let rho = spec.radius().max(1e-6 * s);
    let (im_lo, im_hi) = spec.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), l| (lo.min(l.im), hi.max(l.im)));
    let (re_lo, re_hi) = spec.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), l| (lo.min(l.re), hi.max(l.re)));
    let log_cartesian = |re: (f64, f64), im: (f64, f64)| GridSpec { region: Region::Cartesian { re, im }, n1: n, n2: n, log_first: true, polish: true };
    let specs = match obj.kind {
        PencilKind::KreissContinuous => vec![
            log_cartesian((1e-4 * s, 10.0 * s), (-1.5 * s, 1.5 * s)),
            log_cartesian((1e-4 * rho, 10.0 * rho), (im_lo - rho, im_hi + rho)),
        ],
        PencilKind::KreissDiscrete => vec![GridSpec {
            region: Region::Annulus { gap: (1e-5, 10.0 * s.max(1.0)), theta: (-std::f64::consts::PI, std::f64::consts::PI) },
            n1: n,
            n2: n,
            log_first: true,
            polish: true,
        }],
        PencilKind::DistUncontrollability => {
            let pad = obj.b.as_ref().map_or(Ok(0.0), |b| b.norm2())?.max(0.1 * rho);
            vec![
                GridSpec::cartesian((-1.5 * s, 1.5 * s), (-1.5 * s, 1.5 * s), n),
                GridSpec::cartesian((re_lo - pad, re_hi + pad), (im_lo - pad, im_hi + pad), n),
            ]
        }
    };
    let mut best: Option<GridMin> = None;
    for spec in &specs {
        let g = grid_min(obj, spec)?;
        if best.as_ref().is_none_or(|b| g.value < b.value) {
            best = Some(g);
        }
    }
    Ok(best.expect("at least one region"))
}
