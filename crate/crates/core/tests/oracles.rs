//! Checks against values computed independently of the code under test.

use canham_core::canonical::{ab_ratio, ratio_closed_form, Route};
use canham_core::fields::{FieldKind, FieldSet};
use canham_core::fredholm::{hamiltonian_at, spectrum_at};
use canham_core::gauss::{gauss_nodes, AdaptiveGauss, GaussRule};
use canham_core::kernels::KernelSpec;
use canham_core::modelspace::{j_kernel, solve_projection_eqs, theta_kernel};
use canham_core::quadrature::{grid_for, Resolution};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

fn bump() -> KernelSpec<f64> {
    KernelSpec::bump_with_mass(0.9, 1.0).unwrap()
}

fn exp() -> KernelSpec<f64> {
    KernelSpec::exponential(0.5, 1.0).unwrap()
}

/// Golub–Welsch: nodes are the eigenvalues of the Jacobi matrix of the
/// Legendre recurrence, weights are 2·(first eigenvector component)².
fn golub_welsch(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let b = kf / (4.0 * kf * kf - 1.0).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

#[test]
fn gauss_rules_match_golub_welsch() {
    for n in [1, 2, 3, 5, 8, 16, 33, 64] {
        let rule = GaussRule::<f64>::legendre(n);
        let (x, w) = golub_welsch(n);
        for i in 0..n {
            assert!((rule.reference_nodes()[i] - x[i]).abs() < 1e-13, "n={n} node {i}");
            assert!((rule.reference_weights()[i] - w[i]).abs() < 1e-13, "n={n} weight {i}");
        }
    }
}

#[test]
fn mapped_rule_integrates_polynomials_exactly() {
    let (x, w) = gauss_nodes::<f64>(10, -0.3, 1.7).unwrap();
    // ∫ y^19 over [-0.3, 1.7], degree 2n − 1.
    let exact = (1.7f64.powi(20) - 0.3f64.powi(20)) / 20.0;
    let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(19)).sum();
    assert!((got - exact).abs() < 1e-12 * exact.abs());
}

#[test]
fn bump_antiderivative_matches_adaptive_quadrature() {
    let k = bump();
    let quad = AdaptiveGauss::new(1e-15);
    for x in [0.05, 0.3, 0.5, 0.77, 0.99, 1.5] {
        let direct: f64 = quad.integrate(0.0, x, &[], Some(0.125), |s| k.eval(s));
        assert!((k.antiderivative(x) - direct).abs() < 1e-13, "x={x}");
    }
    assert!((k.antiderivative(2.0) - 0.9).abs() < 1e-13);
}

#[test]
fn bump_fourier_self_converges() {
    let k = bump();
    for z in [Complex::new(0.0, 2.0), Complex::new(1.5, 0.5), Complex::new(-3.0, 1.0)] {
        let coarse = k.fourier(z, 1e-12).unwrap();
        let quad = AdaptiveGauss::new(1e-16);
        let fine: Complex<f64> =
            quad.integrate(0.0, 1.0, &[], Some(1.0 / 64.0), |x| Complex::new(0.0, z.re * x).exp() * (-z.im * x).exp() * k.eval(x));
        assert!((coarse - fine).norm() < 1e-12, "z={z}");
    }
}

/// `∫∫_{[-t,t]²} K(x+y)² = ∫_{-2t}^{2t} K(s)² (2t − |s|) ds`.
#[test]
fn hilbert_schmidt_norm_matches_line_integral() {
    let k = bump();
    let quad = AdaptiveGauss::new(1e-15);
    for t in [0.3, 1.0, 1.7] {
        let exact: f64 = quad.integrate(0.0, 2.0 * t, &[1.0], Some(0.125), |s| {
            let v = k.eval(s);
            v * v * (2.0 * t - s)
        });
        let rep = spectrum_at(&k, t, &Resolution::default());
        assert!((rep.frobenius_sq - exact).abs() < 1e-12, "t={t}");
        let sum_sq: f64 = rep.eigenvalues.iter().map(|v| v * v).sum();
        assert!((sum_sq - rep.frobenius_sq).abs() < 1e-12, "t={t}");
    }
}

#[test]
fn negative_t_fields_are_closed_forms() {
    let k = exp();
    let t = -0.4;
    let set = FieldSet::solve(&k, t, &Resolution::default()).unwrap();
    for i in 0..20 {
        let x = -1.5 + 0.1 * i as f64;
        let s = x + t;
        // ∫_0^s α e^{−βy} dy = α(1 − e^{−βs})/β for s > 0.
        let ik = if s > 0.0 { 0.5 * (1.0 - (-s).exp()) } else { 0.0 };
        let kv = if s >= 0.0 { 0.5 * (-s).exp() } else { 0.0 };
        assert!((set.phi.eval(x) - (1.0 - ik)).abs() < 1e-14);
        assert!((set.psi.eval(x) - (1.0 + ik)).abs() < 1e-14);
        assert!((set.get(FieldKind::PhiPlus).eval(x) - kv).abs() < 1e-14);
        assert!((set.get(FieldKind::PhiMinus).eval(x) - kv).abs() < 1e-14);
    }
    assert_eq!(set.m_det, 1.0);
}

#[test]
fn exponential_theta_at_two_i() {
    // Θ(2i) = α/(β + 2) = 1/6, so a(0,2i) = 7/12 and b(0,2i) = 5i/12.
    let k = exp();
    let theta = k.fourier(Complex::new(0.0, 2.0), 1e-12).unwrap();
    assert!((theta - Complex::new(1.0 / 6.0, 0.0)).norm() < 1e-12);
    let r = ab_ratio(&k, 0.0, Complex::new(0.0, 2.0), Route::PhiPlusMinusTail, &Resolution::default()).unwrap();
    assert!((r.a - Complex::new(7.0 / 12.0, 0.0)).norm() < 1e-10);
    assert!((r.b - Complex::new(0.0, 5.0 / 12.0)).norm() < 1e-10);
}

#[test]
fn ratio_rotation_at_negative_t() {
    // tz = −i, cos(−i) = cosh 1, sin(−i) = −i sinh 1:
    // a = (7/12)cosh 1 + (5/12)sinh 1, b = i((7/12)sinh 1 + (5/12)cosh 1).
    let (a, b) = ratio_closed_form(&exp(), -0.5, Complex::new(0.0, 2.0)).unwrap();
    let (c, s) = (1f64.cosh(), 1f64.sinh());
    assert!((a - Complex::new(7.0 / 12.0 * c + 5.0 / 12.0 * s, 0.0)).norm() < 1e-12);
    assert!((b - Complex::new(0.0, 7.0 / 12.0 * s + 5.0 / 12.0 * c)).norm() < 1e-12);
}

#[test]
fn projection_boundary_value_at_negative_t() {
    let e = std::f64::consts::E;
    let p = solve_projection_eqs(&exp(), -0.5, Complex::new(0.0, 2.0), &Resolution::default()).unwrap();
    assert!((p.a_z_at_t.re - (e + 1.0 / (6.0 * e))).abs() < 1e-12);
    assert!((p.a_z_at_t.re - 2.7796).abs() < 1e-4);
}

#[test]
fn reproducing_kernel_at_zero() {
    let k = exp();
    let z = Complex::new(0.0, 2.0);
    let j = j_kernel(&k, 0.0, z, z, &Resolution::default()).unwrap().j_hat;
    assert!((j.re - 35.0 / (288.0 * std::f64::consts::PI)).abs() < 1e-10);
    assert!((j.re - 0.038_683_49).abs() < 1e-8);
    let w = Complex::new(1.0, 1.5);
    let direct = j_kernel(&k, 0.0, z, w, &Resolution::default()).unwrap().j_hat;
    assert!((direct - theta_kernel(&k, z, w).unwrap()).norm() < 1e-10);
}

#[test]
fn resolution_doubling_is_invisible_for_the_bump() {
    let k = bump();
    for t in [0.25, 1.0, 2.0] {
        let a = hamiltonian_at(&k, t, &Resolution::default()).unwrap();
        let b = hamiltonian_at(&k, t, &Resolution::default().doubled()).unwrap();
        assert!((a.det_plus - b.det_plus).abs() < 1e-10);
        assert!((a.det_minus - b.det_minus).abs() < 1e-10);
    }
}

#[test]
fn single_precision_follows_double() {
    let k32 = KernelSpec::<f32>::bump_with_mass(0.9, 1.0).unwrap();
    let k64 = bump();
    let res = Resolution::new(16, 2);
    let a = hamiltonian_at(&k32, 1.0f32, &res).unwrap();
    let b = hamiltonian_at(&k64, 1.0f64, &res).unwrap();
    assert!(((a.m as f64) - b.m).abs() < 1e-4 * b.m);
    let g = grid_for(&k32, 0.5f32, &res);
    assert!((g.weights.iter().sum::<f32>() - 1.0).abs() < 1e-5);
}
