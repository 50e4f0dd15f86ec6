//! Adaptive piecewise Chebyshev interpolation of expensive scalar functions.
//!
//! Each piece is sampled at Chebyshev points of the second kind on a doubling
//! ladder `17, 33, 65, ...`, so every step reuses the previous samples and
//! only asks for the new ones. A piece is accepted when its coefficients have
//! decayed to the tolerance, or have flattened into a noise plateau at a level
//! still far below it. A piece that will not converge before `split_length`
//! points is split, at a located kink or jump when one is found and at its
//! midpoint otherwise.
//!
//! Sampling is driven in batches: every request for new abscissae goes to the
//! caller's evaluator as one slice, and results are matched by index. The
//! caller can abort between batches; an aborted [`Approximator`] keeps its
//! state and can be resumed.

use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::linalg::{self, C64, ComplexMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpOptions {
    /// Relative accuracy target, measured against the largest sampled |f|.
    pub tol: f64,
    /// Points on the first rung of each piece's ladder. Must be `2^k + 1`.
    pub min_samples: usize,
    /// Ladder limit without splitting.
    pub max_degree_per_piece: usize,
    pub max_pieces: usize,
    /// Split unresolved pieces (at located edges when possible).
    pub edge_detect: bool,
    /// Ladder limit per piece when splitting is enabled.
    pub split_length: usize,
    /// Check each accepted piece at two extra points.
    pub sample_test: bool,
}

impl Default for InterpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            min_samples: 17,
            max_degree_per_piece: (1 << 14) + 1,
            max_pieces: 64,
            edge_detect: true,
            split_length: 129,
            sample_test: true,
        }
    }
}

impl InterpOptions {
    fn validate(&self) -> Result<(), InterpError> {
        let ladder_ok = |n: usize| n >= 3 && (n - 1).is_power_of_two();
        if !ladder_ok(self.min_samples) {
            return Err(InterpError::InvalidOptions(format!("min_samples = {} is not 2^k + 1", self.min_samples)));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(InterpError::InvalidOptions(format!("tol = {} is not in (0, 1)", self.tol)));
        }
        if self.max_pieces == 0 {
            return Err(InterpError::InvalidOptions("max_pieces must be positive".into()));
        }
        Ok(())
    }

    fn ladder_limit(&self) -> usize {
        if self.edge_detect {
            self.split_length.min(self.max_degree_per_piece)
        } else {
            self.max_degree_per_piece
        }
    }
}

/// One polynomial piece, `Σ c_k T_k(t)` with `t` the affine image of `[a, b]`
/// onto `[−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebPiece {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<f64>,
}

impl ChebPiece {
    fn to_unit(&self, x: f64) -> f64 {
        ((2.0 * x - self.a - self.b) / (self.b - self.a)).clamp(-1.0, 1.0)
    }

    fn from_unit(&self, t: f64) -> f64 {
        0.5 * (self.a + self.b) + 0.5 * (self.b - self.a) * t
    }

    pub fn eval(&self, x: f64) -> f64 {
        clenshaw(&self.coeffs, self.to_unit(x))
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn derivative(&self) -> ChebPiece {
        let d = cheb_derivative(&self.coeffs);
        let s = 2.0 / (self.b - self.a);
        ChebPiece { a: self.a, b: self.b, coeffs: d.into_iter().map(|c| c * s).collect() }
    }
}

/// Piecewise Chebyshev interpolant on `[lo, hi]`, pieces ordered and abutting.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseCheb {
    pub lo: f64,
    pub hi: f64,
    pub pieces: Vec<ChebPiece>,
    /// Largest |f| seen while sampling.
    pub vscale: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpError {
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("x = {x} lies outside [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("sampled function returned a non-finite value at x = {x}")]
    NonFiniteSample { x: f64 },
    #[error("sample budget exhausted; best interpolant has {} pieces and estimated error {est_error:e}", best.pieces.len())]
    BudgetExceeded { best: Box<PiecewiseCheb>, est_error: f64 },
    #[error("evaluator returned {got} values for {asked} abscissae")]
    BatchLength { asked: usize, got: usize },
}

/// Failure of a run: the engine's own error or the evaluator's.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApproxError<E> {
    #[error(transparent)]
    Interp(InterpError),
    #[error("sampler failed: {0}")]
    Sampler(E),
}

impl<E> From<InterpError> for ApproxError<E> {
    fn from(e: InterpError) -> Self {
        ApproxError::Interp(e)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SamplingStats {
    pub samples: usize,
    pub batches: usize,
    pub largest_batch: usize,
    /// Pieces accepted at the minimum width without converging.
    pub unresolved_pieces: usize,
}

#[derive(Debug, Clone)]
pub enum SamplingOutcome<S> {
    Completed { interpolant: PiecewiseCheb, stats: SamplingStats },
    /// Samples in the last batch that met the abort predicate, in batch order.
    Aborted { triggers: Vec<(f64, S)>, stats: SamplingStats },
}

/// Chebyshev points of the second kind on `[−1, 1]`, ascending, symmetric to
/// the last bit.
pub fn cheb_points(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    let m = (n - 1) as f64;
    (0..n)
        .map(|j| {
            let k = 2.0 * j as f64 - m;
            (std::f64::consts::PI * k / (2.0 * m)).sin()
        })
        .collect()
}

fn map_cheb(n: usize, a: f64, b: f64) -> Vec<f64> {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut x: Vec<f64> = cheb_points(n).into_iter().map(|t| c + h * t).collect();
    x[0] = a;
    x[n - 1] = b;
    x
}

/// Chebyshev coefficients of the interpolant through values at
/// [`cheb_points`] (ascending order).
pub fn vals_to_coeffs(vals: &[f64]) -> Vec<f64> {
    let n = vals.len();
    if n == 1 {
        return vec![vals[0]];
    }
    let m = n - 1;
    let desc: Vec<f64> = vals.iter().rev().copied().collect();
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(2 * m);
    buf.extend(desc.iter().map(|&v| Complex::new(v, 0.0)));
    buf.extend(desc[1..m].iter().rev().map(|&v| Complex::new(v, 0.0)));
    let fft: Arc<dyn rustfft::Fft<f64>> = FftPlanner::new().plan_fft_forward(2 * m);
    fft.process(&mut buf);
    let mut c: Vec<f64> = buf[..=m].iter().map(|z| z.re / m as f64).collect();
    c[0] *= 0.5;
    c[m] *= 0.5;
    c
}

/// Values of `Σ c_k T_k` at [`cheb_points`]`(n)`.
pub fn coeffs_to_vals(coeffs: &[f64], n: usize) -> Vec<f64> {
    cheb_points(n).into_iter().map(|t| clenshaw(coeffs, t)).collect()
}

/// Clenshaw evaluation of `Σ c_k T_k(t)`.
pub fn clenshaw(c: &[f64], t: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + 2.0 * t * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c.first().copied().unwrap_or(0.0) + t * b1 - b2
}

/// Coefficients of the derivative on `[−1, 1]`.
pub fn cheb_derivative(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n <= 1 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n + 1];
    for k in (1..n).rev() {
        d[k - 1] = d[k + 1] + 2.0 * k as f64 * c[k];
    }
    d[0] *= 0.5;
    d.truncate(n - 1);
    d
}

/// Number of leading coefficients worth keeping, after the plateau-aware
/// chopping rule of Aurentz and Trefethen. Returns `coeffs.len()` when the
/// series has not converged.
pub fn standard_chop(coeffs: &[f64], tol: f64) -> usize {
    let n = coeffs.len();
    if tol >= 1.0 {
        return 1;
    }
    if n < 17 {
        return n;
    }
    let mut env = vec![0.0; n];
    env[n - 1] = coeffs[n - 1].abs();
    for j in (0..n - 1).rev() {
        env[j] = coeffs[j].abs().max(env[j + 1]);
    }
    if env[0] == 0.0 {
        return 1;
    }
    let top = env[0];
    for e in env.iter_mut() {
        *e /= top;
    }
    // 1-based loop index `j` as in the published algorithm.
    let mut plateau_point = 0;
    let mut j2 = 0;
    let mut found = false;
    for j in 2..=n {
        j2 = (1.25 * j as f64 + 5.0).round() as usize;
        if j2 > n {
            return n;
        }
        let e1 = env[j - 1];
        let e2 = env[j2 - 1];
        let r = 3.0 * (1.0 - e1.ln() / tol.ln());
        if e1 == 0.0 || e2 / e1 > r {
            plateau_point = j - 1;
            found = true;
            break;
        }
    }
    if !found {
        return n;
    }
    if env[plateau_point - 1] == 0.0 {
        return plateau_point;
    }
    let floor = tol.powf(7.0 / 6.0);
    let j3 = env.iter().filter(|&&e| e >= floor).count();
    if j3 < j2 {
        j2 = j3 + 1;
        env[j2 - 1] = floor;
    }
    let slope = -(1.0 / 3.0) * tol.log10();
    let mut best = (f64::INFINITY, 0);
    for (i, e) in env.iter().take(j2).enumerate() {
        let cc = e.log10() + slope * i as f64 / (j2 as f64 - 1.0).max(1.0);
        if cc < best.0 {
            best = (cc, i + 1);
        }
    }
    best.1.saturating_sub(1).max(1)
}

#[derive(Debug, Clone)]
enum Task {
    Ladder { a: f64, b: f64, n: usize },
    Test { a: f64, b: f64, n: usize, coeffs: Vec<f64>, allowed: f64 },
    Edge { a: f64, b: f64, l: f64, r: f64, prev_smooth: bool, iters: usize },
}

impl Task {
    fn interval(&self) -> (f64, f64) {
        match *self {
            Task::Ladder { a, b, .. } | Task::Test { a, b, .. } | Task::Edge { a, b, .. } => (a, b),
        }
    }
}

const TEST_POINTS: [f64; 2] = [-0.357_998_918_959_666, 0.036_785_641_713_064];
const MAX_EDGE_ITERS: usize = 60;

/// Resumable adaptive sampler.
pub struct Approximator<S> {
    lo: f64,
    hi: f64,
    opts: InterpOptions,
    cache: HashMap<u64, usize>,
    samples: Vec<(f64, S)>,
    values: Vec<f64>,
    stack: Vec<Task>,
    done: Vec<ChebPiece>,
    vscale: f64,
    stats: SamplingStats,
}

impl<S: Clone> Approximator<S> {
    pub fn new(lo: f64, hi: f64, opts: InterpOptions) -> Result<Self, InterpError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(InterpError::InvalidInterval { lo, hi });
        }
        opts.validate()?;
        Ok(Self {
            lo,
            hi,
            opts,
            cache: HashMap::new(),
            samples: Vec::new(),
            values: Vec::new(),
            stack: vec![Task::Ladder { a: lo, b: hi, n: opts.min_samples }],
            done: Vec::new(),
            vscale: 0.0,
            stats: SamplingStats::default(),
        })
    }

    pub fn stats(&self) -> SamplingStats {
        self.stats
    }

    /// Every sample taken so far, in evaluation order.
    pub fn samples(&self) -> &[(f64, S)] {
        &self.samples
    }

    fn cached(&self, x: f64) -> Option<f64> {
        self.cache.get(&x.to_bits()).map(|&i| self.values[i])
    }

    fn val(&self, x: f64) -> f64 {
        self.cached(x).expect("sample requested before it was taken")
    }

    fn min_width(&self, l: f64, r: f64) -> f64 {
        1e-14 * (self.hi - self.lo) + 4.0 * f64::EPSILON * l.abs().max(r.abs())
    }

    fn needed_points(&self, task: &Task) -> Vec<f64> {
        let pts = match task {
            Task::Ladder { a, b, n } => map_cheb(*n, *a, *b),
            Task::Test { a, b, .. } => {
                let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
                TEST_POINTS.iter().map(|t| c + h * t).collect()
            }
            Task::Edge { l, r, .. } => {
                let w = r - l;
                vec![l + 0.25 * w, l + 0.5 * w, l + 0.75 * w]
            }
        };
        let mut out: Vec<f64> = Vec::new();
        for x in pts {
            if self.cached(x).is_none() && !out.iter().any(|y| y.to_bits() == x.to_bits()) {
                out.push(x);
            }
        }
        out
    }

    /// Samples until the interpolant is complete or a batch contains a sample
    /// for which `abort_on` holds. After an abort, calling `run` again
    /// continues from where it stopped.
    pub fn run<E>(
        &mut self,
        eval: &mut dyn FnMut(&[f64]) -> Result<Vec<S>, E>,
        value: &dyn Fn(&S) -> f64,
        abort_on: &dyn Fn(&S) -> bool,
    ) -> Result<SamplingOutcome<S>, ApproxError<E>> {
        loop {
            let Some(task) = self.stack.last().cloned() else {
                return Ok(SamplingOutcome::Completed { interpolant: self.assemble(), stats: self.stats });
            };
            let xs = self.needed_points(&task);
            if !xs.is_empty() {
                let out = eval(&xs).map_err(ApproxError::Sampler)?;
                if out.len() != xs.len() {
                    return Err(InterpError::BatchLength { asked: xs.len(), got: out.len() }.into());
                }
                self.stats.batches += 1;
                self.stats.samples += xs.len();
                self.stats.largest_batch = self.stats.largest_batch.max(xs.len());
                let mut triggers = Vec::new();
                for (&x, s) in xs.iter().zip(out) {
                    let v = value(&s);
                    if !v.is_finite() {
                        return Err(InterpError::NonFiniteSample { x }.into());
                    }
                    self.vscale = self.vscale.max(v.abs());
                    if abort_on(&s) {
                        triggers.push((x, s.clone()));
                    }
                    self.cache.insert(x.to_bits(), self.values.len());
                    self.values.push(v);
                    self.samples.push((x, s));
                }
                if !triggers.is_empty() {
                    return Ok(SamplingOutcome::Aborted { triggers, stats: self.stats });
                }
            }
            self.stack.pop();
            self.advance(task)?;
        }
    }

    fn advance(&mut self, task: Task) -> Result<(), InterpError> {
        match task {
            Task::Ladder { a, b, n } => {
                let xs = map_cheb(n, a, b);
                let vals: Vec<f64> = xs.iter().map(|&x| self.val(x)).collect();
                let local = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if local == 0.0 {
                    self.done.push(ChebPiece { a, b, coeffs: vec![0.0, 0.0] });
                    return Ok(());
                }
                let coeffs = vals_to_coeffs(&vals);
                let eff = (self.opts.tol * (self.vscale / local).max(1.0)).min(1e-4);
                let cut = standard_chop(&coeffs, eff);
                if cut < n {
                    let kept = cut.max(2);
                    let tail: f64 = coeffs[kept..].iter().map(|c| c.abs()).sum();
                    let mut c = coeffs;
                    c.truncate(kept);
                    if self.opts.sample_test {
                        let allowed = 100.0 * (eff * local).max(tail);
                        self.stack.push(Task::Test { a, b, n, coeffs: c, allowed });
                    } else {
                        self.done.push(ChebPiece { a, b, coeffs: c });
                    }
                    Ok(())
                } else {
                    self.unresolved(a, b, n, &xs, &vals, &coeffs)
                }
            }
            Task::Test { a, b, n, coeffs, allowed } => {
                let piece = ChebPiece { a, b, coeffs };
                let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
                let ok = TEST_POINTS.iter().all(|t| {
                    let x = c + h * t;
                    (piece.eval(x) - self.val(x)).abs() <= allowed
                });
                if ok {
                    self.done.push(piece);
                    Ok(())
                } else {
                    let xs = map_cheb(n, a, b);
                    let vals: Vec<f64> = xs.iter().map(|&x| self.val(x)).collect();
                    let coeffs = vals_to_coeffs(&vals);
                    self.unresolved(a, b, n, &xs, &vals, &coeffs)
                }
            }
            Task::Edge { a, b, l, r, prev_smooth, iters } => {
                let w = r - l;
                let (q1, m, q3) = (l + 0.25 * w, l + 0.5 * w, l + 0.75 * w);
                let (fl, f1, fm, f3, fr) = (self.val(l), self.val(q1), self.val(m), self.val(q3), self.val(r));
                let parent = (fl - 2.0 * fm + fr).abs();
                let dl = (fl - 2.0 * f1 + fm).abs();
                let dr = (fm - 2.0 * f3 + fr).abs();
                let dnew = dl.max(dr);
                if parent > 0.0 && dnew <= 1e-3 * parent {
                    return self.split(a, b, m, None);
                }
                let smooth = dnew <= 0.3 * parent || (parent == 0.0 && dnew == 0.0);
                if smooth && prev_smooth {
                    return self.split(a, b, 0.5 * (a + b), None);
                }
                let (nl, nr) = if dl >= dr { (l, m) } else { (m, r) };
                if nr - nl <= self.min_width(nl, nr) || iters + 1 >= MAX_EDGE_ITERS {
                    return self.split(a, b, 0.5 * (nl + nr), None);
                }
                self.stack.push(Task::Edge { a, b, l: nl, r: nr, prev_smooth: smooth, iters: iters + 1 });
                Ok(())
            }
        }
    }

    fn pending_intervals(&self) -> usize {
        self.stack.len()
    }

    fn unresolved(&mut self, a: f64, b: f64, n: usize, xs: &[f64], vals: &[f64], coeffs: &[f64]) -> Result<(), InterpError> {
        let next = 2 * n - 1;
        if next <= self.opts.ladder_limit() {
            self.stack.push(Task::Ladder { a, b, n: next });
            return Ok(());
        }
        let tail = coeffs[coeffs.len().saturating_sub(2)..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if !self.opts.edge_detect {
            return Err(self.budget(Some(ChebPiece { a, b, coeffs: coeffs.to_vec() }), tail));
        }
        if b - a <= self.min_width(a, b) {
            let (fa, fb) = (vals[0], vals[vals.len() - 1]);
            self.done.push(ChebPiece { a, b, coeffs: vec![0.5 * (fa + fb), 0.5 * (fb - fa)] });
            self.stats.unresolved_pieces += 1;
            return Ok(());
        }
        // Bracket the roughest spot by the largest second divided difference.
        let mut best = (0.0, 1);
        for j in 1..xs.len() - 1 {
            let s1 = (vals[j] - vals[j - 1]) / (xs[j] - xs[j - 1]);
            let s2 = (vals[j + 1] - vals[j]) / (xs[j + 1] - xs[j]);
            let d2 = (2.0 * (s2 - s1) / (xs[j + 1] - xs[j - 1])).abs();
            if d2 > best.0 {
                best = (d2, j);
            }
        }
        let (l, r) = (xs[best.1 - 1], xs[best.1 + 1]);
        self.split(a, b, f64::NAN, Some((l, r, tail)))
    }

    /// Splits `[a, b]` at `s`, or starts an edge search in `bracket` first.
    fn split(&mut self, a: f64, b: f64, s: f64, bracket: Option<(f64, f64, f64)>) -> Result<(), InterpError> {
        if let Some((l, r, tail)) = bracket {
            if self.done.len() + self.pending_intervals() + 2 > self.opts.max_pieces {
                let piece = self.linear_piece(a, b);
                return Err(self.budget(Some(piece), tail));
            }
            self.stack.push(Task::Edge { a, b, l, r, prev_smooth: false, iters: 0 });
            return Ok(());
        }
        let s = if s > a && s < b { s } else { 0.5 * (a + b) };
        self.stack.push(Task::Ladder { a: s, b, n: self.opts.min_samples });
        self.stack.push(Task::Ladder { a, b: s, n: self.opts.min_samples });
        Ok(())
    }

    fn linear_piece(&self, a: f64, b: f64) -> ChebPiece {
        let fa = self.cached(a).unwrap_or(0.0);
        let fb = self.cached(b).unwrap_or(fa);
        ChebPiece { a, b, coeffs: vec![0.5 * (fa + fb), 0.5 * (fb - fa)] }
    }

    fn budget(&self, current: Option<ChebPiece>, est_error: f64) -> InterpError {
        let mut pieces = self.done.clone();
        pieces.extend(current);
        for t in &self.stack {
            let (a, b) = t.interval();
            pieces.push(self.linear_piece(a, b));
        }
        pieces.sort_by(|p, q| p.a.total_cmp(&q.a));
        let best = PiecewiseCheb { lo: self.lo, hi: self.hi, pieces, vscale: self.vscale };
        InterpError::BudgetExceeded { best: Box::new(best), est_error }
    }

    fn assemble(&self) -> PiecewiseCheb {
        let mut pieces = self.done.clone();
        pieces.sort_by(|p, q| p.a.total_cmp(&q.a));
        PiecewiseCheb { lo: self.lo, hi: self.hi, pieces, vscale: self.vscale }
    }
}

/// One-shot batch approximation. See [`Approximator::run`].
pub fn approximate<S: Clone, E>(
    lo: f64,
    hi: f64,
    opts: InterpOptions,
    eval: &mut dyn FnMut(&[f64]) -> Result<Vec<S>, E>,
    value: &dyn Fn(&S) -> f64,
    abort_on: &dyn Fn(&S) -> bool,
) -> Result<SamplingOutcome<S>, ApproxError<E>> {
    Approximator::new(lo, hi, opts)?.run(eval, value, abort_on)
}

/// Approximates a plain function, without aborting.
pub fn approximate_fn(lo: f64, hi: f64, opts: InterpOptions, f: impl Fn(f64) -> f64) -> Result<PiecewiseCheb, InterpError> {
    let mut eval = |xs: &[f64]| -> Result<Vec<f64>, std::convert::Infallible> { Ok(xs.iter().map(|&x| f(x)).collect()) };
    match approximate(lo, hi, opts, &mut eval, &|v| *v, &|_| false) {
        Ok(SamplingOutcome::Completed { interpolant, .. }) => Ok(interpolant),
        Ok(SamplingOutcome::Aborted { .. }) => unreachable!("predicate never aborts"),
        Err(ApproxError::Interp(e)) => Err(e),
        Err(ApproxError::Sampler(never)) => match never {},
    }
}

/// Minimizers of an interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalMin {
    /// Every abscissa whose value is within `1e-12 · vscale` of the minimum, ascending.
    pub argmins: Vec<f64>,
    pub value: f64,
}

const ROOT_DEGREE: usize = 32;
const ROOT_SPLIT: f64 = -0.004_849_834_917_525;

impl PiecewiseCheb {
    pub fn evaluate(&self, x: f64) -> Result<f64, InterpError> {
        if !(x >= self.lo && x <= self.hi) {
            return Err(InterpError::OutOfDomain { x, lo: self.lo, hi: self.hi });
        }
        let i = self.pieces.partition_point(|p| p.b < x).min(self.pieces.len() - 1);
        Ok(self.pieces[i].eval(x))
    }

    /// Interior piece boundaries.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.a).collect()
    }

    fn scale(&self) -> f64 {
        if self.vscale > 0.0 {
            self.vscale
        } else {
            self.pieces.iter().flat_map(|p| p.coeffs.iter()).fold(0.0f64, |m, c| m.max(c.abs())).max(f64::MIN_POSITIVE)
        }
    }

    /// Real roots in `[lo, hi]`, ascending. Roots closer than `1e-12 (hi − lo)`
    /// are reported once, and so are the two halves of a double root.
    pub fn roots(&self) -> Vec<f64> {
        let scale = self.scale();
        let width = self.hi - self.lo;
        let mut all: Vec<f64> = Vec::new();
        for p in &self.pieces {
            for t in unit_roots(&p.coeffs) {
                let mut x = p.from_unit(t);
                x = newton_polish(p, x);
                if p.eval(x).abs() <= 1e-10 * scale {
                    all.push(x);
                }
            }
        }
        all.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::new();
        for x in all {
            if let Some(&last) = out.last() {
                if x - last <= 1e-12 * width {
                    continue;
                }
                if x - last <= 1e-6 * width {
                    let mid = 0.5 * (x + last);
                    let (vl, vm, vx) = (self.at(last), self.at(mid), self.at(x));
                    if vm.abs() <= 1e-10 * scale && vl.signum() == vx.signum() && vm.signum() != -vl.signum() {
                        let pick = [(vl.abs(), last), (vm.abs(), mid), (vx.abs(), x)]
                            .into_iter()
                            .min_by(|a, b| a.0.total_cmp(&b.0))
                            .unwrap()
                            .1;
                        *out.last_mut().unwrap() = pick;
                        continue;
                    }
                }
            }
            out.push(x);
        }
        out
    }

    fn at(&self, x: f64) -> f64 {
        self.evaluate(x.clamp(self.lo, self.hi)).unwrap()
    }

    /// Global minimum over critical points and piece endpoints.
    pub fn global_min(&self) -> GlobalMin {
        let mut cands: Vec<f64> = Vec::new();
        for p in &self.pieces {
            cands.push(p.a);
            cands.push(p.b);
            let d = p.derivative();
            if d.coeffs.iter().any(|&c| c != 0.0) {
                for t in unit_roots(&d.coeffs) {
                    cands.push(newton_polish(&d, p.from_unit(t)));
                }
            }
        }
        let vals: Vec<(f64, f64)> = cands.into_iter().map(|x| (x, self.at(x))).collect();
        let value = vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        let tie = 1e-12 * self.scale();
        let mut argmins: Vec<f64> = vals.iter().filter(|v| v.1 <= value + tie).map(|v| v.0).collect();
        argmins.sort_by(f64::total_cmp);
        argmins.dedup_by(|b, a| (*b - *a).abs() <= 1e-14 * (self.hi - self.lo));
        GlobalMin { argmins, value }
    }

    pub fn total_degree(&self) -> usize {
        self.pieces.iter().map(|p| p.degree()).sum()
    }
}

fn newton_polish(p: &ChebPiece, x0: f64) -> f64 {
    let d = p.derivative();
    let mut x = x0;
    let mut fx = p.eval(x).abs();
    for _ in 0..8 {
        let dv = d.eval(x);
        if dv == 0.0 || !dv.is_finite() {
            break;
        }
        let nx = (x - p.eval(x) / dv).clamp(p.a, p.b);
        let nf = p.eval(nx).abs();
        if nf < fx {
            x = nx;
            fx = nf;
        } else {
            break;
        }
    }
    x
}

/// Real roots in `[−1, 1]` of `Σ c_k T_k`, by recursive subdivision and
/// colleague-matrix eigenvalues.
fn unit_roots(c: &[f64]) -> Vec<f64> {
    let top = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return Vec::new();
    }
    let mut len = c.len();
    while len > 1 && c[len - 1].abs() <= 1e-14 * top {
        len -= 1;
    }
    let c = &c[..len];
    let d = len - 1;
    if d == 0 {
        return Vec::new();
    }
    if d > ROOT_DEGREE {
        let mut out = Vec::new();
        for (lo, hi) in [(-1.0, ROOT_SPLIT), (ROOT_SPLIT, 1.0)] {
            let n = d + 1;
            let (cm, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            let vals: Vec<f64> = cheb_points(n).into_iter().map(|t| clenshaw(c, cm + h * t)).collect();
            let sub = vals_to_coeffs(&vals);
            out.extend(unit_roots(&sub).into_iter().map(|t| cm + h * t));
        }
        return out;
    }
    if d == 1 {
        let t = -c[0] / c[1];
        return if (-1.0 - 1e-12..=1.0 + 1e-12).contains(&t) { vec![t.clamp(-1.0, 1.0)] } else { Vec::new() };
    }
    let half = C64::new(0.5, 0.0);
    let mut m = ComplexMatrix::zeros(d, d);
    m.set(0, 1, C64::new(1.0, 0.0));
    for k in 1..d - 1 {
        m.set(k, k - 1, half);
        m.set(k, k + 1, half);
    }
    m.set(d - 1, d - 2, half);
    for (j, &cj) in c[..d].iter().enumerate() {
        let cur = m.get(d - 1, j);
        m.set(d - 1, j, cur - C64::new(cj / (2.0 * c[d]), 0.0));
    }
    let Ok(ev) = linalg::eigenvalues(&m) else {
        return Vec::new();
    };
    let mut out: Vec<f64> = ev
        .values
        .into_iter()
        .filter(|z| z.im.abs() <= 1e-6 && z.re >= -1.0 - 1e-8 && z.re <= 1.0 + 1e-8)
        .map(|z| z.re.clamp(-1.0, 1.0))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn points_are_nested_and_symmetric() {
        let p17 = cheb_points(17);
        let p33 = cheb_points(33);
        for (j, x) in p17.iter().enumerate() {
            assert_eq!(x.to_bits(), p33[2 * j].to_bits());
            assert_eq!(*x, -p17[16 - j]);
        }
        assert_eq!(p17[8], 0.0);
    }

    #[test]
    fn transform_round_trip() {
        let c: Vec<f64> = (0..17).map(|k| 1.0 / (1.0 + k as f64)).collect();
        let v = coeffs_to_vals(&c, 17);
        let back = vals_to_coeffs(&v);
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_of_t3() {
        // T3' = 3 U2 = 3 (2 T2 + T0)... = 6 T2 + 3 T0
        let d = cheb_derivative(&[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(d, vec![3.0, 0.0, 6.0]);
    }

    #[test]
    fn chop_keeps_quadratic() {
        let mut c = vec![0.0; 17];
        c[0] = 0.5;
        c[2] = 0.5;
        assert_eq!(standard_chop(&c, 1e-13), 3);
    }

    #[test]
    fn x_squared_is_one_quadratic_piece() {
        let p = approximate_fn(-1.0, 1.0, InterpOptions::default(), |x| x * x).unwrap();
        assert_eq!(p.pieces.len(), 1);
        let c = &p.pieces[0].coeffs;
        assert_eq!(c.len(), 3);
        assert_relative_eq!(c[0], 0.5, epsilon = 1e-15);
        assert!(c[1].abs() < 1e-15);
        assert_relative_eq!(c[2], 0.5, epsilon = 1e-15);
        assert_eq!(p.roots(), vec![0.0]);
    }

    #[test]
    fn abs_splits_at_origin() {
        let p = approximate_fn(-1.0, 1.0, InterpOptions::default(), f64::abs).unwrap();
        assert_eq!(p.pieces.len(), 2, "{:?}", p.breakpoints());
        assert!(p.breakpoints()[0].abs() < 1e-14);
        for k in 0..=1000 {
            let x = -1.0 + 2.0 * k as f64 / 1000.0;
            assert!((p.evaluate(x).unwrap() - x.abs()).abs() <= 1e-12);
        }
    }

    #[test]
    fn out_of_domain() {
        let p = approximate_fn(0.0, 1.0, InterpOptions::default(), |x| x).unwrap();
        assert!(matches!(p.evaluate(1.5), Err(InterpError::OutOfDomain { .. })));
    }

    #[test]
    fn constant_min_returns_left_end() {
        let p = approximate_fn(0.0, 1.0, InterpOptions::default(), |_| 2.5).unwrap();
        let m = p.global_min();
        assert_eq!(m.argmins[0], 0.0);
        assert_relative_eq!(m.value, 2.5, epsilon = 1e-15);
    }

    #[test]
    fn cos_min_at_pi() {
        let p = approximate_fn(0.0, 2.0 * std::f64::consts::PI, InterpOptions::default(), f64::cos).unwrap();
        let m = p.global_min();
        assert!((m.argmins[0] - std::f64::consts::PI).abs() < 1e-8, "{m:?}");
        assert_relative_eq!(m.value, -1.0, epsilon = 1e-13);
    }

    #[test]
    fn sin_abort_on_first_batch() {
        let mut eval = |xs: &[f64]| -> Result<Vec<f64>, ()> { Ok(xs.iter().map(|x| x.sin()).collect()) };
        let out = approximate(0.0, 10.0, InterpOptions::default(), &mut eval, &|v| *v, &|v| *v <= 0.0).unwrap();
        match out {
            SamplingOutcome::Aborted { triggers, stats } => {
                assert_eq!(stats.batches, 1);
                assert!(triggers.iter().any(|(x, _)| *x >= std::f64::consts::PI));
                assert!(triggers.iter().all(|(x, v)| *v <= 0.0 && x.sin() == *v));
            }
            _ => panic!("expected abort"),
        }
    }

    #[test]
    fn budget_is_reported() {
        let opts = InterpOptions { edge_detect: false, max_degree_per_piece: 65, ..Default::default() };
        let err = approximate_fn(-1.0, 1.0, opts, f64::abs).unwrap_err();
        assert!(matches!(err, InterpError::BudgetExceeded { .. }));
    }
}
