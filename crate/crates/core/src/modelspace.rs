//! Projection equations on `(-∞, t]`, the reproducing kernel `ĵ` in ratio
//! form and the energy identity relating `ĵ` at two times.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::{check_z, ratio_from_fields, Route};
use crate::error::{Error, Result};
use crate::fields::FieldSet;
use crate::fredholm::{FredholmOperator, Sign};
use crate::gauss::{AdaptiveGauss, GaussRule};
use crate::kernels::{KernelSpec, FOURIER_TOL};
use crate::quadrature::{QuadratureGrid, Resolution};
use crate::scalar::{cabs, plane_wave, Real};

/// Solutions of `a + K P_t a = e_z + K e_z` and `b − K P_t b = e_z − K e_z`,
/// where `(K e_z)(x) = e^{−izx} Θ(z)`.
#[derive(Debug, Clone)]
pub struct ProjectionSolution<T: Real> {
    pub t: T,
    pub z: Complex<T>,
    pub theta: Complex<T>,
    /// Values of `a_z^t` at the grid nodes (empty for `t ≤ 0`).
    pub a_z_nodes: Vec<Complex<T>>,
    pub b_z_nodes: Vec<Complex<T>>,
    pub a_z_at_t: Complex<T>,
    pub b_z_at_t: Complex<T>,
    spec: Arc<KernelSpec<T>>,
    grid: Option<Arc<QuadratureGrid<T>>>,
}

impl<T: Real> ProjectionSolution<T> {
    fn rhs(&self, sign: Sign, x: T) -> Complex<T> {
        let s: T = sign.value();
        plane_wave(self.z, x) + self.theta * plane_wave(-self.z, x) * s
    }

    fn interpolate(&self, sign: Sign, nodes: &[Complex<T>], x: T) -> Complex<T> {
        let acc = match self.grid.as_deref() {
            Some(g) => g.apply_kernel(&self.spec, x, nodes),
            None => Complex::new(T::zero(), T::zero()),
        };
        let s: T = sign.value();
        self.rhs(sign, x) - acc * s
    }

    /// `a_z^t(x)` for `x ≤ t`.
    pub fn eval_a(&self, x: T) -> Complex<T> {
        self.interpolate(Sign::Plus, &self.a_z_nodes, x)
    }

    /// `b_z^t(x)` for `x ≤ t`.
    pub fn eval_b(&self, x: T) -> Complex<T> {
        self.interpolate(Sign::Minus, &self.b_z_nodes, x)
    }

    /// `max |u(x) ± ∫_{-t}^{t} K(x+y) u(y) dy − rhs(x)|` over `xs`, with the
    /// integral taken adaptively over the interpolant rather than the grid.
    pub fn defining_residual(&self, xs: &[T]) -> T {
        let t = self.t;
        if t <= T::zero() {
            return T::zero();
        }
        let quad = AdaptiveGauss::new(T::lit(1e-14));
        let mut breaks: Vec<T> = Vec::new();
        let mut worst = T::zero();
        for &x in xs {
            breaks.clear();
            for lam in self.spec.breakpoints() {
                breaks.push(lam - x);
            }
            for (sign, u) in [(Sign::Plus, self.eval_a(x)), (Sign::Minus, self.eval_b(x))] {
                let f = |y: T| {
                    let v = match sign {
                        Sign::Plus => self.eval_a(y),
                        Sign::Minus => self.eval_b(y),
                    };
                    v * self.spec.eval(x + y)
                };
                let integral: Complex<T> = quad.integrate(-t, t, &breaks, Some(T::lit(0.25)), f);
                let s: T = sign.value();
                worst = worst.max(cabs(u + integral * s - self.rhs(sign, x)));
            }
        }
        worst
    }
}

/// Solves both projection equations at `(t, z)`. For `t ≤ 0` the operator
/// term vanishes and the solutions are the right-hand sides.
pub fn solve_projection_eqs<T: Real>(
    spec: &KernelSpec<T>,
    t: T,
    z: Complex<T>,
    res: &Resolution,
) -> Result<ProjectionSolution<T>> {
    check_z(spec, z)?;
    let theta = spec.fourier(z, T::lit(FOURIER_TOL))?;
    let spec = Arc::new(spec.clone());
    let mut sol = ProjectionSolution {
        t,
        z,
        theta,
        a_z_nodes: Vec::new(),
        b_z_nodes: Vec::new(),
        a_z_at_t: Complex::new(T::zero(), T::zero()),
        b_z_at_t: Complex::new(T::zero(), T::zero()),
        spec: spec.clone(),
        grid: None,
    };
    if t > T::zero() {
        let op = FredholmOperator::new(&spec, t, res)?;
        let grid = op.grid().clone();
        for sign in [Sign::Plus, Sign::Minus] {
            let rhs: Vec<Complex<T>> = grid.nodes.iter().map(|&x| sol.rhs(sign, x)).collect();
            let re: Vec<T> = rhs.iter().map(|v| v.re).collect();
            let im: Vec<T> = rhs.iter().map(|v| v.im).collect();
            let (ur, ui) = op.solve_pair(sign, &re, &im);
            let u = ur.into_iter().zip(ui).map(|(r, i)| Complex::new(r, i)).collect();
            match sign {
                Sign::Plus => sol.a_z_nodes = u,
                Sign::Minus => sol.b_z_nodes = u,
            }
        }
        sol.grid = Some(Arc::new(grid));
    }
    sol.a_z_at_t = sol.eval_a(t);
    sol.b_z_at_t = sol.eval_b(t);
    Ok(sol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryResidual {
    /// `|a_z^t(t) − 2a(t,z)/m(t)|`.
    pub a_part: f64,
    /// `|b_z^t(t) + 2i m(t) b(t,z)|`.
    pub b_part: f64,
}

impl BoundaryResidual {
    pub fn total(&self) -> f64 {
        self.a_part + self.b_part
    }
}

/// Boundary values of the projection solutions against the canonical ratios.
pub fn boundary_identity<T: Real>(
    spec: &KernelSpec<T>,
    t: T,
    z: Complex<T>,
    res: &Resolution,
) -> Result<BoundaryResidual> {
    let (proj, fields) = rayon::join(
        || solve_projection_eqs(spec, t, z, res),
        || FieldSet::solve(spec, t, res),
    );
    let (proj, fields) = (proj?, fields?);
    let r = ratio_from_fields(spec, &fields, z, Route::PsiPhiTail)?;
    let m = fields.m_det;
    let two = T::lit(2.0);
    let i = Complex::new(T::zero(), T::one());
    Ok(BoundaryResidual {
        a_part: cabs(proj.a_z_at_t - r.a * (two / m)).as_f64(),
        b_part: cabs(proj.b_z_at_t + i * r.b * (two * m)).as_f64(),
    })
}

/// `ĵ(t; z, w)`, the reproducing kernel divided by `conj(E(z)) E(w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue<T> {
    pub t: T,
    pub z: Complex<T>,
    pub w: Complex<T>,
    pub j_hat: Complex<T>,
}

/// `(conj(a_z) b_w − a_w conj(b_z)) / (π (w − z̄))`.
pub fn j_from_ratios<T: Real>(
    z: Complex<T>,
    w: Complex<T>,
    (az, bz): (Complex<T>, Complex<T>),
    (aw, bw): (Complex<T>, Complex<T>),
) -> Complex<T> {
    (az.conj() * bw - aw * bz.conj()) / ((w - z.conj()) * T::pi())
}

/// `(1 − conj(Θ(z)) Θ(w)) / (2πi (z̄ − w))`, the value of `ĵ` at `t = 0`.
pub fn theta_kernel<T: Real>(spec: &KernelSpec<T>, z: Complex<T>, w: Complex<T>) -> Result<Complex<T>> {
    check_z(spec, z)?;
    check_z(spec, w)?;
    let tz = spec.fourier(z, T::lit(FOURIER_TOL))?;
    let tw = spec.fourier(w, T::lit(FOURIER_TOL))?;
    let one = Complex::new(T::one(), T::zero());
    let two_pi_i = Complex::new(T::zero(), T::lit(2.0) * T::pi());
    Ok((one - tz.conj() * tw) / (two_pi_i * (z.conj() - w)))
}

/// `(a, b)` at one spectral parameter.
type AbPair<T> = (Complex<T>, Complex<T>);

fn ratios_at<T: Real>(
    spec: &KernelSpec<T>,
    set: &FieldSet<T>,
    z: Complex<T>,
    w: Complex<T>,
) -> Result<(AbPair<T>, AbPair<T>)> {
    let rz = ratio_from_fields(spec, set, z, Route::PsiPhiTail)?;
    let rw = if w == z {
        rz
    } else {
        ratio_from_fields(spec, set, w, Route::PsiPhiTail)?
    };
    Ok(((rz.a, rz.b), (rw.a, rw.b)))
}

pub fn j_kernel<T: Real>(
    spec: &KernelSpec<T>,
    t: T,
    z: Complex<T>,
    w: Complex<T>,
    res: &Resolution,
) -> Result<KernelValue<T>> {
    check_z(spec, z)?;
    check_z(spec, w)?;
    let set = FieldSet::solve(spec, t, res)?;
    let (pz, pw) = ratios_at(spec, &set, z, w)?;
    Ok(KernelValue {
        t,
        z,
        w,
        j_hat: j_from_ratios(z, w, pz, pw),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyResidual<T> {
    /// `ĵ(t) − ĵ(s)`.
    pub lhs: Complex<T>,
    /// `(1/π) ∫_t^s [conj(a_z) a_w / γ + conj(b_z) b_w γ] dr`.
    pub rhs: Complex<T>,
    pub residual: T,
}

/// Checks `ĵ(t) − ĵ(s) = (1/π)∫_t^s [conj(a_z)a_w/γ + conj(b_z)b_w γ] dr`.
///
/// The `r`-integral uses an `r_nodes`-point Gauss rule, on each side of 0
/// when the interval straddles it (γ′ jumps there for kernels with
/// `K(0) ≠ 0`). All solves share the panel layout chosen at `s`, so the
/// integrand carries no discretization jumps in `r`.
pub fn energy_identity<T: Real>(
    spec: &KernelSpec<T>,
    t: T,
    s: T,
    z: Complex<T>,
    w: Complex<T>,
    r_nodes: usize,
    res: &Resolution,
) -> Result<EnergyResidual<T>> {
    if t > s {
        return Err(Error::InvalidInterval {
            a: t.as_f64(),
            b: s.as_f64(),
        });
    }
    if r_nodes == 0 {
        return Err(Error::domain("energy_identity", "r_nodes must be positive"));
    }
    check_z(spec, z)?;
    check_z(spec, w)?;
    let frozen = res.frozen_at(s.as_f64().max(0.0));
    let mut pieces = vec![(t, s)];
    if t < T::zero() && s > T::zero() {
        pieces = vec![(t, T::zero()), (T::zero(), s)];
    }
    let rule = GaussRule::<T>::legendre(r_nodes);
    let mut jobs: Vec<(T, T)> = Vec::new();
    for &(a, b) in &pieces {
        if b > a {
            let (x, wt) = rule.mapped(a, b);
            jobs.extend(x.into_iter().zip(wt));
        }
    }
    let integrand = jobs
        .par_iter()
        .map(|&(r, wt)| {
            let set = FieldSet::solve(spec, r, &frozen)?;
            let ((az, bz), (aw, bw)) = ratios_at(spec, &set, z, w)?;
            let gamma = set.m_det * set.m_det;
            Ok((az.conj() * aw / gamma + bz.conj() * bw * gamma) * wt)
        })
        .collect::<Result<Vec<Complex<T>>>>()?;
    let rhs = integrand
        .into_iter()
        .fold(Complex::new(T::zero(), T::zero()), |acc, v| acc + v)
        / T::pi();
    let (jt, js) = rayon::join(
        || j_kernel(spec, t, z, w, &frozen),
        || j_kernel(spec, s, z, w, &frozen),
    );
    let lhs = jt?.j_hat - js?.j_hat;
    Ok(EnergyResidual {
        lhs,
        rhs,
        residual: cabs(lhs - rhs),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayScan<T> {
    /// `(t, ĵ(t; z, z))`; the diagonal is real.
    pub values: Vec<(T, T)>,
    /// Indices `k` with `ĵ(t_k) > ĵ(t_{k-1}) + tol`.
    pub increases: Vec<usize>,
    pub min_value: T,
}

/// `ĵ(t; z, z)` along `t_grid`, flagging increases beyond `tol`.
pub fn decay_scan<T: Real>(
    spec: &KernelSpec<T>,
    z: Complex<T>,
    t_grid: &[T],
    tol: T,
    res: &Resolution,
) -> Result<DecayScan<T>> {
    let values = t_grid
        .par_iter()
        .map(|&t| Ok((t, j_kernel(spec, t, z, z, res)?.j_hat.re)))
        .collect::<Result<Vec<(T, T)>>>()?;
    let increases = (1..values.len())
        .filter(|&k| values[k].1 > values[k - 1].1 + tol)
        .collect();
    let min_value = values
        .iter()
        .map(|v| v.1)
        .fold(T::lit(f64::INFINITY), |a, b| a.min(b));
    Ok(DecayScan {
        values,
        increases,
        min_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::ratio_closed_form;

    fn exp_kernel() -> KernelSpec<f64> {
        KernelSpec::exponential(0.5, 1.0).unwrap()
    }

    #[test]
    fn projection_at_negative_t_is_the_right_hand_side() {
        let k = exp_kernel();
        let z = Complex::new(0.0, 2.0);
        let p = solve_projection_eqs(&k, -0.5, z, &Resolution::default()).unwrap();
        let e = std::f64::consts::E;
        assert!((p.a_z_at_t - Complex::new(e + 1.0 / (6.0 * e), 0.0)).norm() < 1e-12);
        assert!((p.b_z_at_t - Complex::new(e - 1.0 / (6.0 * e), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn boundary_identity_at_negative_t() {
        let k = exp_kernel();
        let r = boundary_identity(&k, -0.3, Complex::new(0.7, 1.5), &Resolution::default()).unwrap();
        assert!(r.total() <= 1e-10, "{r:?}");
    }

    #[test]
    fn j_at_zero_for_exponential() {
        let k = exp_kernel();
        let z = Complex::new(0.0, 2.0);
        let j = j_kernel(&k, 0.0, z, z, &Resolution::default()).unwrap().j_hat;
        let expect = 35.0 / (288.0 * std::f64::consts::PI);
        assert!((j.re - expect).abs() < 1e-10 && j.im.abs() < 1e-12);
        let th = theta_kernel(&k, z, z).unwrap();
        assert!((th - j).norm() < 1e-10);
    }

    #[test]
    fn energy_identity_on_negative_interval() {
        let k = exp_kernel();
        let z = Complex::new(0.0, 2.0);
        let w = Complex::new(1.0, 2.0);
        let e = energy_identity(&k, -0.8, -0.2, z, w, 24, &Resolution::default()).unwrap();
        assert!(e.residual <= 1e-10, "{e:?}");
        let jt = j_from_ratios(z, w, ratio_closed_form(&k, -0.8, z).unwrap(), ratio_closed_form(&k, -0.8, w).unwrap());
        let js = j_from_ratios(z, w, ratio_closed_form(&k, -0.2, z).unwrap(), ratio_closed_form(&k, -0.2, w).unwrap());
        assert!((e.lhs - (jt - js)).norm() < 1e-12);
    }

    #[test]
    fn empty_energy_interval() {
        let k = exp_kernel();
        let z = Complex::new(0.0, 2.0);
        let e = energy_identity(&k, 0.4, 0.4, z, z, 8, &Resolution::new(16, 2)).unwrap();
        assert_eq!(e.rhs, Complex::new(0.0, 0.0));
        assert!(e.residual == 0.0);
    }
}
