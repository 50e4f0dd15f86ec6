mod common;

use std::f64::consts::PI;

use globcert::linalg::{self, C64, ComplexMatrix};
use globcert::pencils::{self, PencilError, PencilKind};
use proptest::prelude::*;

const KINDS: [PencilKind; 3] =
    [PencilKind::KreissContinuous, PencilKind::KreissDiscrete, PencilKind::DistUncontrollability];

struct Instance {
    kind: PencilKind,
    a: ComplexMatrix,
    b: Option<ComplexMatrix>,
}

fn instance(seed: u64, kind_ix: usize, n: usize, m: usize) -> Instance {
    let mut rng = common::rng(seed);
    let kind = KINDS[kind_ix];
    let complex = seed % 2 == 0;
    let a = common::gaussian(&mut rng, n, n, complex);
    let b = (kind == PencilKind::DistUncontrollability).then(|| common::gaussian(&mut rng, n, m, complex));
    Instance { kind, a, b }
}

/// Radius and angle inside the objective's domain.
fn radial_point(kind: PencilKind, u: f64, v: f64) -> (f64, f64) {
    match kind {
        PencilKind::KreissContinuous => (0.2 + 4.0 * u, (v - 0.5) * 0.9 * PI),
        PencilKind::KreissDiscrete => (1.1 + 3.0 * u, (2.0 * v - 1.0) * PI),
        PencilKind::DistUncontrollability => (0.1 + 4.0 * u, (2.0 * v - 1.0) * PI),
    }
}

fn closest(values: &[C64], target: C64) -> f64 {
    values.iter().map(|l| (*l - target).norm()).fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn pair_structure(seed in any::<u64>(), k in 0usize..3, n in 1usize..=6, m in 1usize..=3,
                      gamma in 0.05f64..3.0, theta in -PI..PI) {
        let inst = instance(seed, k, n, m);
        let pair = match pencils::pencil_pair(inst.kind, &inst.a, inst.b.as_ref(), gamma, theta) {
            Ok(p) => p,
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        };
        let j = pencils::j_matrix(n);
        let jl = &j * &pair.lhs;
        prop_assert!((&jl.adjoint() - &jl).norm_fro() <= 1e-14 * pair.lhs.norm_fro().max(1.0));
        let lhs_side = &pair.rhs.adjoint() * &j;
        let rhs_side = &j * &pair.rhs;
        prop_assert!((&lhs_side - &rhs_side).norm_fro() <= 1e-14 * pair.rhs.norm_fro().max(1.0));
    }

    #[test]
    fn reduced_is_rhs_inverse_times_lhs(seed in any::<u64>(), k in 0usize..3, n in 1usize..=5,
                                        gamma in 0.05f64..3.0, theta in -PI..PI) {
        let inst = instance(seed, k, n, 2);
        match pencils::build_pencil(inst.kind, &inst.a, inst.b.as_ref(), gamma, theta) {
            Ok((pair, red)) => {
                let back = &pair.rhs * &red.matrix;
                prop_assert!((&back - &pair.lhs).norm_fro() <= 1e-12 * pair.lhs.norm_fro() * pencils::second_member_condition(inst.kind, gamma, theta));
            }
            Err(PencilError::NearSingularSecondMember { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        }
    }

    #[test]
    fn second_member_determinants(n in 1usize..=4, gamma in 0.0f64..3.0, theta in -PI..PI) {
        let a = ComplexMatrix::zeros(n, n);
        let pair = pencils::pencil_pair(PencilKind::KreissContinuous, &a, None, gamma, theta).unwrap();
        let c = gamma * theta.cos();
        let want = (1.0 - c * c).powi(n as i32);
        let got = linalg::determinant(&pair.rhs).unwrap();
        prop_assert!((got - want).norm() <= 1e-10 * want.abs().max(1e-300) + 1e-13);
        let pair = pencils::pencil_pair(PencilKind::KreissDiscrete, &a, None, gamma, theta).unwrap();
        let want = (1.0 - gamma * gamma).powi(n as i32);
        let got = linalg::determinant(&pair.rhs).unwrap();
        prop_assert!((got - want).norm() <= 1e-10 * want.abs().max(1e-300) + 1e-13);
    }

    #[test]
    fn spectrum_is_symmetric(seed in any::<u64>(), k in 0usize..3, n in 1usize..=6,
                             gamma in 0.05f64..3.0, theta in -PI..PI) {
        let inst = instance(seed, k, n, 2);
        let red = match pencils::reduced_pencil(inst.kind, &inst.a, inst.b.as_ref(), gamma, theta) {
            Ok(r) => r,
            Err(PencilError::NearSingularSecondMember { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        };
        let spec = linalg::eigenvalues(&red.matrix).unwrap();
        let mirrored = linalg::Spectrum { values: spec.values.iter().map(|l| -l.conj()).collect() };
        prop_assert!(spec.matches(&mirrored, 1e-8 * red.matrix.norm2().unwrap()));
    }

    /// Every singular value of the radial matrix shows up as an imaginary
    /// pencil eigenvalue at that radius.
    #[test]
    fn singular_values_give_eigenvalues(seed in any::<u64>(), k in 0usize..3, n in 1usize..=6, m in 1usize..=3,
                                        u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let inst = instance(seed, k, n, m);
        let (r, theta) = radial_point(inst.kind, u, v);
        let rad = pencils::radial_matrix(inst.kind, &inst.a, inst.b.as_ref(), r, theta).unwrap();
        for sigma in linalg::singular_values(&rad).unwrap() {
            if sigma <= 0.0 {
                continue;
            }
            let red = match pencils::reduced_pencil(inst.kind, &inst.a, inst.b.as_ref(), sigma, theta) {
                Ok(p) => p,
                Err(PencilError::NearSingularSecondMember { .. }) => continue,
                Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
            };
            let spec = linalg::eigenvalues(&red.matrix).unwrap();
            let d = closest(&spec.values, C64::new(0.0, r));
            prop_assert!(d <= 1e-8 * red.matrix.norm2().unwrap(), "sigma {sigma} r {r}: off by {d:e}");
        }
    }

    /// Every imaginary pencil eigenvalue `ir` in the domain gives γ as a
    /// singular value of the radial matrix at `r`.
    #[test]
    fn eigenvalues_give_singular_values(seed in any::<u64>(), k in 0usize..3, n in 1usize..=6, m in 1usize..=3,
                                        u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let inst = instance(seed, k, n, m);
        let (r0, theta) = radial_point(inst.kind, u, v);
        let rad = pencils::radial_matrix(inst.kind, &inst.a, inst.b.as_ref(), r0, theta).unwrap();
        let gamma = linalg::smallest_singular_triplet(&rad).unwrap().sigma;
        let red = match pencils::reduced_pencil(inst.kind, &inst.a, inst.b.as_ref(), gamma, theta) {
            Ok(p) => p,
            Err(PencilError::NearSingularSecondMember { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        };
        let scale = red.matrix.norm2().unwrap();
        for l in linalg::eigenvalues(&red.matrix).unwrap().values {
            let r = l.im;
            if l.re.abs() > 1e-10 * scale || !pencils::radial_feasible(inst.kind, r, theta) {
                continue;
            }
            if inst.kind == PencilKind::KreissDiscrete && r < 1.0 + 1e-6 {
                continue;
            }
            let svs = linalg::singular_values(&pencils::radial_matrix(inst.kind, &inst.a, inst.b.as_ref(), r, theta).unwrap()).unwrap();
            let d = svs.iter().map(|s| (s - gamma).abs()).fold(f64::INFINITY, f64::min);
            prop_assert!(d <= 1e-8 * gamma.max(1.0), "r {r}: nearest singular value off by {d:e}");
        }
    }

    #[test]
    fn condition_law(gamma in 0.0f64..0.99, theta in -PI..PI, n in 1usize..=3) {
        let a = ComplexMatrix::zeros(n, n);
        let pair = pencils::pencil_pair(PencilKind::KreissContinuous, &a, None, gamma, theta).unwrap();
        let c = (gamma * theta.cos()).abs();
        let want = (1.0 + c) / (1.0 - c);
        prop_assert!(common::rel(linalg::cond2(&pair.rhs).unwrap(), want) <= 1e-10);
        let pair = pencils::pencil_pair(PencilKind::KreissDiscrete, &a, None, gamma, theta).unwrap();
        let want = (1.0 + gamma) / (1.0 - gamma);
        prop_assert!(common::rel(linalg::cond2(&pair.rhs).unwrap(), want) <= 1e-10);
        let b = ComplexMatrix::identity(n);
        let pair = pencils::pencil_pair(PencilKind::DistUncontrollability, &a, Some(&b), gamma + 0.01, theta).unwrap();
        prop_assert!((linalg::cond2(&pair.rhs).unwrap() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn zero_eigenvalue_theorems() {
    let theta = 0.3;
    // Continuous: zero is a pencil eigenvalue exactly when A is singular.
    let sing = ComplexMatrix::from_real_rows(&[[0.0, 1.0], [0.0, -1.0]]).unwrap();
    let red = pencils::reduced_kc(&sing, 0.5, theta).unwrap();
    assert!(linalg::eigenvalues(&red.matrix).unwrap().min_modulus() < 1e-12);
    let reg = ComplexMatrix::from_real_rows(&[[-1.0, 1.0], [0.0, -1.0]]).unwrap();
    let red = pencils::reduced_kc(&reg, 0.5, theta).unwrap();
    assert!(linalg::eigenvalues(&red.matrix).unwrap().min_modulus() > 1e-3);

    // Discrete: zero appears when γ² is an eigenvalue of AA*.
    let a = ComplexMatrix::from_real_diag(&[0.5, 0.3]);
    let red = pencils::reduced_kd(&a, 0.3, theta).unwrap();
    assert!(linalg::eigenvalues(&red.matrix).unwrap().min_modulus() < 1e-12);
    let red = pencils::reduced_kd(&a, 0.4, theta).unwrap();
    assert!(linalg::eigenvalues(&red.matrix).unwrap().min_modulus() > 1e-3);

    // Distance: zero appears when γ² is an eigenvalue of AA* + BB*.
    let a = ComplexMatrix::from_real_diag(&[1.0, 2.0]);
    let b = ComplexMatrix::from_real_rows(&[[1.0], [0.0]]).unwrap();
    // AA* + BB* = diag(2, 4)
    let red = pencils::reduced_dtu(&a, &b, 2f64.sqrt(), theta).unwrap();
    assert!(linalg::eigenvalues(&red.matrix).unwrap().min_modulus() < 1e-12);
    let red = pencils::reduced_dtu(&a, &b, 1.7, theta).unwrap();
    assert!(linalg::eigenvalues(&red.matrix).unwrap().min_modulus() > 1e-3);
}

#[test]
fn condition_maximum_at_theta_zero() {
    let a = ComplexMatrix::zeros(2, 2);
    for gamma in [0.1, 0.5, 0.9] {
        let best = (0..=200)
            .map(|k| -PI + 2.0 * PI * k as f64 / 200.0)
            .map(|t| linalg::cond2(&pencils::pencil_pair(PencilKind::KreissContinuous, &a, None, gamma, t).unwrap().rhs).unwrap())
            .fold(0.0, f64::max);
        let bound = (1.0 + gamma) / (1.0 - gamma);
        assert!(best <= bound * (1.0 + 1e-10));
        let at0 = linalg::cond2(&pencils::pencil_pair(PencilKind::KreissContinuous, &a, None, gamma, 0.0).unwrap().rhs).unwrap();
        assert!(common::rel(at0, bound) <= 1e-10);
    }
}
