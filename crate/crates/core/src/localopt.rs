//! Local minimization of the three objectives by BFGS with backtracking.
//!
//! Gradients come from the smallest singular triplet: for `F(t)` depending on
//! a real parameter `t`, `dσ_min/dt = Re(u* F'(t) v)` wherever `σ_min` is
//! simple. The optimizer works in unconstrained coordinates that keep every
//! iterate feasible:
//!
//! * continuous Kreiss: `z = e^{w₀} + i w₁`
//! * discrete Kreiss: `z = (1 + e^{w₀}) e^{i w₁}`
//! * uncontrollability: `z = w₀ + i w₁`

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, C64, LinalgError};
use crate::pencils::{PencilError, PencilKind};

pub use crate::objective::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalOptConfig {
    pub max_iter: usize,
    /// Stop when the gradient norm is below `grad_tol · max(1, value)`.
    pub grad_tol: f64,
    /// Stop when a step is below `step_tol` relative to the iterate.
    pub step_tol: f64,
}

impl Default for LocalOptConfig {
    fn default() -> Self {
        Self { max_iter: 200, grad_tol: 1e-12, step_tol: 1e-14 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocalExit {
    GradientSmall,
    StepSmall,
    /// No step along the search direction decreased the objective.
    NoDescent,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalMin {
    pub z: C64,
    pub value: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub exit: LocalExit,
    /// The two smallest singular values agreed to `1e-12` at `z`.
    pub degenerate: bool,
}

/// Objective value and gradient. The gradient is with respect to
/// `(Re z, Im z)` for the continuous Kreiss and uncontrollability objectives
/// and `(|z|, arg z)` for the discrete Kreiss objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueGrad {
    pub value: f64,
    pub grad: [f64; 2],
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocalOptError {
    #[error("starting point {z} is outside the domain of the {} objective", kind.name())]
    InfeasibleStart { z: C64, kind: PencilKind },
    #[error("point {z} is outside the domain of the {} objective", kind.name())]
    InfeasiblePoint { z: C64, kind: PencilKind },
    #[error(transparent)]
    Pencil(#[from] PencilError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

const DEGENERACY: f64 = 1e-12;

pub fn objective_value_grad(obj: &Objective, z: C64) -> Result<ValueGrad, LocalOptError> {
    if !obj.is_feasible(z) {
        return Err(LocalOptError::InfeasiblePoint { z, kind: obj.kind });
    }
    let n = obj.n();
    let m = match obj.kind {
        PencilKind::DistUncontrollability => obj.a.shift(-z).hstack(obj.b.as_ref().unwrap())?,
        _ => (-&obj.a).shift(z),
    };
    let t = linalg::smallest_singular_triplet(&m)?;
    let s = t.sigma;
    let degenerate = t.sigma_next.is_some_and(|nx| nx - s <= DEGENERACY * nx.max(f64::MIN_POSITIVE));
    let uv: C64 = (0..n).map(|i| t.u[i].conj() * t.v[i]).sum();
    Ok(match obj.kind {
        PencilKind::KreissContinuous => {
            let x = z.re;
            let (sx, sy) = (uv.re, -uv.im);
            ValueGrad { value: s / x, grad: [(x * sx - s) / (x * x), sy / x], degenerate }
        }
        PencilKind::KreissDiscrete => {
            let (r, th) = (z.norm(), z.arg());
            let e = C64::from_polar(1.0, th) * uv;
            let (sr, st) = (e.re, -r * e.im);
            let d = r - 1.0;
            ValueGrad { value: s / d, grad: [(sr * d - s) / (d * d), st / d], degenerate }
        }
        PencilKind::DistUncontrollability => ValueGrad { value: s, grad: [-uv.re, uv.im], degenerate },
    })
}

fn to_z(kind: PencilKind, w: [f64; 2]) -> C64 {
    match kind {
        PencilKind::KreissContinuous => C64::new(w[0].exp(), w[1]),
        PencilKind::KreissDiscrete => C64::from_polar(1.0 + w[0].exp(), w[1]),
        PencilKind::DistUncontrollability => C64::new(w[0], w[1]),
    }
}

fn to_w(kind: PencilKind, z: C64) -> [f64; 2] {
    match kind {
        PencilKind::KreissContinuous => [z.re.ln(), z.im],
        PencilKind::KreissDiscrete => [(z.norm() - 1.0).ln(), z.arg()],
        PencilKind::DistUncontrollability => [z.re, z.im],
    }
}

struct Eval {
    w: [f64; 2],
    z: C64,
    f: f64,
    g: [f64; 2],
    natural_grad: f64,
    degenerate: bool,
}

fn eval_w(obj: &Objective, w: [f64; 2]) -> Result<Option<Eval>, LocalOptError> {
    let z = to_z(obj.kind, w);
    if !obj.is_feasible(z) {
        return Ok(None);
    }
    let vg = objective_value_grad(obj, z)?;
    let g = match obj.kind {
        PencilKind::KreissContinuous => [vg.grad[0] * z.re, vg.grad[1]],
        PencilKind::KreissDiscrete => [vg.grad[0] * w[0].exp(), vg.grad[1]],
        PencilKind::DistUncontrollability => vg.grad,
    };
    Ok(Some(Eval { w, z, f: vg.value, g, natural_grad: norm(vg.grad), degenerate: vg.degenerate }))
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Largest step length in the unconstrained coordinates.
const MAX_STEP: f64 = 5.0;
const ARMIJO: f64 = 1e-4;
const BACKTRACKS: usize = 60;

/// BFGS from `z0`. The returned value is the objective at the returned point
/// and never exceeds the value at `z0`.
pub fn minimize(obj: &Objective, z0: C64, cfg: &LocalOptConfig) -> Result<LocalMin, LocalOptError> {
    if !obj.is_feasible(z0) {
        return Err(LocalOptError::InfeasibleStart { z: z0, kind: obj.kind });
    }
    let kind = obj.kind;
    let Some(mut cur) = eval_w(obj, to_w(kind, z0))? else {
        return Err(LocalOptError::InfeasibleStart { z: z0, kind });
    };
    let mut h = [[1.0, 0.0], [0.0, 1.0]];
    let mut fresh = true;
    let mut iters = 0;
    let exit = loop {
        if norm(cur.g) <= cfg.grad_tol * cur.f.max(1.0) {
            break LocalExit::GradientSmall;
        }
        if iters >= cfg.max_iter {
            break LocalExit::MaxIterations;
        }
        iters += 1;
        let mut p = [-(h[0][0] * cur.g[0] + h[0][1] * cur.g[1]), -(h[1][0] * cur.g[0] + h[1][1] * cur.g[1])];
        if dot(p, cur.g) >= 0.0 {
            h = [[1.0, 0.0], [0.0, 1.0]];
            fresh = true;
            p = [-cur.g[0], -cur.g[1]];
        }
        let pn = norm(p);
        let mut t = if pn > MAX_STEP { MAX_STEP / pn } else { 1.0 };
        let slope = dot(p, cur.g);
        let mut next = None;
        for _ in 0..BACKTRACKS {
            let w = [cur.w[0] + t * p[0], cur.w[1] + t * p[1]];
            if let Some(e) = eval_w(obj, w)? {
                if e.f <= cur.f + ARMIJO * t * slope && e.f <= cur.f {
                    next = Some(e);
                    break;
                }
            }
            t *= 0.5;
        }
        let Some(nx) = next else {
            if fresh {
                break LocalExit::NoDescent;
            }
            h = [[1.0, 0.0], [0.0, 1.0]];
            fresh = true;
            continue;
        };
        let s = [nx.w[0] - cur.w[0], nx.w[1] - cur.w[1]];
        let y = [nx.g[0] - cur.g[0], nx.g[1] - cur.g[1]];
        let small_step = norm(s) <= cfg.step_tol * norm(cur.w).max(1.0);
        let sy = dot(s, y);
        if sy > 1e-300 {
            if fresh {
                let scale = sy / dot(y, y);
                h = [[scale, 0.0], [0.0, scale]];
            }
            let rho = 1.0 / sy;
            let hy = [h[0][0] * y[0] + h[0][1] * y[1], h[1][0] * y[0] + h[1][1] * y[1]];
            let yhy = dot(y, hy);
            for i in 0..2 {
                for j in 0..2 {
                    h[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
            fresh = false;
        }
        cur = nx;
        if small_step {
            break LocalExit::StepSmall;
        }
    };
    Ok(LocalMin { z: cur.z, value: cur.f, grad_norm: cur.natural_grad, iters, exit, degenerate: cur.degenerate })
}
