//! Small deterministic test matrices.

use crate::linalg::ComplexMatrix;

/// Kahan's upper triangular matrix `diag(s^k) (I − c U)`, where `U` is the
/// strictly upper triangle of ones, `s^{n−1} = 0.1` and `s² + c² = 1`.
pub fn kahan(n: usize) -> ComplexMatrix {
    assert!(n >= 1, "kahan(0)");
    let s = if n == 1 { 1.0 } else { 0.1f64.powf(1.0 / (n - 1) as f64) };
    let c = (1.0 - s * s).sqrt();
    ComplexMatrix::from_fn(n, n, |i, j| {
        let d = s.powi(i as i32);
        let v = match i.cmp(&j) {
            std::cmp::Ordering::Equal => d,
            std::cmp::Ordering::Less => -c * d,
            std::cmp::Ordering::Greater => 0.0,
        };
        v.into()
    })
}

/// Companion matrix of the degree-`n` Taylor polynomial of `e^z`, made
/// monic: `z^n + Σ_{k<n} (n!/k!) z^k`. Coefficients sit in the first row.
pub fn companion_exp(n: usize) -> ComplexMatrix {
    assert!(n >= 1, "companion_exp(0)");
    // coeff[k] = n!/k!
    let coeff: Vec<f64> = (0..n).map(|k| ((k + 1)..=n).map(|j| j as f64).product()).collect();
    ComplexMatrix::from_fn(n, n, |i, j| {
        if i == 0 {
            (-coeff[n - 1 - j]).into()
        } else if i == j + 1 {
            1.0.into()
        } else {
            0.0.into()
        }
    })
}

/// `companion_exp(n) − κI` with `κ = 1.001 α`, `α` the spectral abscissa of
/// the companion matrix. The result is barely stable and far from normal.
pub fn stabilized_companion(n: usize) -> ComplexMatrix {
    let b = companion_exp(n);
    let alpha = crate::linalg::eigenvalues(&b).expect("companion spectrum").abscissa();
    b.shift((-1.001 * alpha).into())
}

/// `diag(1, 5)` with input `(1, b₂)ᵀ`. The distance function has one local
/// minimum near each eigenvalue; `b₂ = 1` makes the two equal by symmetry,
/// so use `b₂ ≠ 1` when one basin must be strictly better.
pub fn two_basin_dtu(b2: f64) -> (ComplexMatrix, ComplexMatrix) {
    (ComplexMatrix::from_real_diag(&[1.0, 5.0]), ComplexMatrix::from_real_rows(&[[1.0], [b2]]).unwrap())
}

/// Two decoupled nonnormal 2x2 blocks with eigenvalues `0.5` and `−0.5`.
/// The discrete Kreiss objective has a local minimum beyond each block's
/// eigenvalue; the block at `−0.5` has the larger coupling and wins.
pub fn two_basin_discrete() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[
        [0.5, 2.0, 0.0, 0.0],
        [0.0, 0.5, 0.0, 0.0],
        [0.0, 0.0, -0.5, 3.0],
        [0.0, 0.0, 0.0, -0.5],
    ])
    .unwrap()
}

/// `diag(0.9, 0.5)` plus a strictly upper coupling of `0.8`.
pub fn coupled_discrete() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[[0.9, 0.8], [0.0, 0.5]]).unwrap()
}

/// Stable Jordan-like block `[[−0.5, 5], [0, −0.5]]`.
pub fn jordan_continuous() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[[-0.5, 5.0], [0.0, -0.5]]).unwrap()
}
