//! The four integral equations on `(-∞, t]`:
//!
//! ```text
//! (I + K[t]) Φ  = 1          (I − K[t]) Ψ  = 1
//! (I + K[t]) φ⁺ = K(· + t)   (I − K[t]) φ⁻ = K(· + t)
//! ```
//!
//! solved by Nyström collocation and evaluated anywhere on `ℝ` through the
//! natural interpolant, plus the identities tying them together.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fredholm::{FredholmOperator, Sign};
use crate::gauss::GaussRule;
use crate::kernels::KernelSpec;
use crate::quadrature::{QuadratureGrid, Resolution};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FieldKind {
    Phi,
    Psi,
    PhiPlus,
    PhiMinus,
}

impl FieldKind {
    pub const ALL: [FieldKind; 4] = [
        FieldKind::Phi,
        FieldKind::Psi,
        FieldKind::PhiPlus,
        FieldKind::PhiMinus,
    ];

    /// Sign of the operator term: `I + K` or `I − K`.
    pub fn sign(self) -> Sign {
        match self {
            FieldKind::Phi | FieldKind::PhiPlus => Sign::Plus,
            FieldKind::Psi | FieldKind::PhiMinus => Sign::Minus,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Phi => "Phi",
            FieldKind::Psi => "Psi",
            FieldKind::PhiPlus => "PhiPlus",
            FieldKind::PhiMinus => "PhiMinus",
        }
    }

    fn is_potential(self) -> bool {
        matches!(self, FieldKind::Phi | FieldKind::Psi)
    }
}

/// One solved field `f(t, ·)`.
#[derive(Debug, Clone)]
pub struct FieldSolution<T: Real> {
    pub which: FieldKind,
    pub t: T,
    /// Values at the grid nodes (empty for `t ≤ 0`).
    pub node_values: Vec<T>,
    pub boundary_value: T,
    spec: Arc<KernelSpec<T>>,
    grid: Option<Arc<QuadratureGrid<T>>>,
}

impl<T: Real> FieldSolution<T> {
    fn closed_form(spec: Arc<KernelSpec<T>>, t: T, which: FieldKind) -> Self {
        let mut sol = Self {
            which,
            t,
            node_values: Vec::new(),
            boundary_value: T::zero(),
            spec,
            grid: None,
        };
        sol.boundary_value = sol.eval(t);
        sol
    }

    pub fn grid(&self) -> Option<&QuadratureGrid<T>> {
        self.grid.as_deref()
    }

    /// Right-hand side of the defining equation at `x`, including the
    /// contribution of the known values below `-t`.
    fn source(&self, x: T) -> T {
        let k = &self.spec;
        match self.which {
            FieldKind::Phi => T::one() - k.antiderivative(x - self.t),
            FieldKind::Psi => T::one() + k.antiderivative(x - self.t),
            FieldKind::PhiPlus | FieldKind::PhiMinus => k.eval(x + self.t),
        }
    }

    /// `f(t, x)` for any real `x`.
    pub fn eval(&self, x: T) -> T {
        let t = self.t;
        let k = &self.spec;
        let Some(grid) = self.grid.as_deref() else {
            // t ≤ 0: the operator vanishes on (-∞, t].
            return match self.which {
                FieldKind::Phi => T::one() - k.antiderivative(x + t),
                FieldKind::Psi => T::one() + k.antiderivative(x + t),
                FieldKind::PhiPlus | FieldKind::PhiMinus => k.eval(x + t),
            };
        };
        if x < -t {
            return if self.which.is_potential() {
                T::one()
            } else {
                T::zero()
            };
        }
        let acc = grid.apply_kernel(k, x, &self.node_values);
        let s: T = self.which.sign().value();
        self.source(x) - s * acc
    }

    /// Evaluation beyond the interval, `x > t`.
    pub fn extend(&self, x: T) -> Result<T> {
        if !(x > self.t) {
            return Err(Error::domain(
                "field_extend",
                format!("x = {} must exceed t = {}", x.as_f64(), self.t.as_f64()),
            ));
        }
        Ok(self.eval(x))
    }

    /// `∫_{-t}^{t} f(t, y) dy` by the grid rule (0 for `t ≤ 0`).
    pub fn integral(&self) -> T {
        match self.grid.as_deref() {
            Some(g) => g
                .weights
                .iter()
                .zip(&self.node_values)
                .fold(T::zero(), |a, (&w, &u)| a + w * u),
            None => T::zero(),
        }
    }
}

/// All four fields at one `t`, sharing a factored operator.
#[derive(Debug, Clone)]
pub struct FieldSet<T: Real> {
    pub t: T,
    pub phi: FieldSolution<T>,
    pub psi: FieldSolution<T>,
    pub phi_plus: FieldSolution<T>,
    pub phi_minus: FieldSolution<T>,
    /// `det(I+K[t]) / det(I−K[t])`.
    pub m_det: T,
}

impl<T: Real> FieldSet<T> {
    pub fn solve(spec: &KernelSpec<T>, t: T, res: &Resolution) -> Result<Self> {
        let spec = Arc::new(spec.clone());
        if t <= T::zero() {
            let f = |w| FieldSolution::closed_form(spec.clone(), t, w);
            return Ok(Self {
                t,
                phi: f(FieldKind::Phi),
                psi: f(FieldKind::Psi),
                phi_plus: f(FieldKind::PhiPlus),
                phi_minus: f(FieldKind::PhiMinus),
                m_det: T::one(),
            });
        }
        let op = FredholmOperator::new(&spec, t, res)?;
        let grid = Arc::new(op.grid().clone());
        let ones = vec![T::one(); grid.len()];
        let shifted: Vec<T> = grid.nodes.iter().map(|&x| spec.eval(x + t)).collect();
        let build = |which: FieldKind, rhs: &[T]| {
            let node_values = op.solve(which.sign(), rhs);
            let mut sol = FieldSolution {
                which,
                t,
                node_values,
                boundary_value: T::zero(),
                spec: spec.clone(),
                grid: Some(grid.clone()),
            };
            sol.boundary_value = sol.eval(t);
            sol
        };
        Ok(Self {
            t,
            phi: build(FieldKind::Phi, &ones),
            psi: build(FieldKind::Psi, &ones),
            phi_plus: build(FieldKind::PhiPlus, &shifted),
            phi_minus: build(FieldKind::PhiMinus, &shifted),
            m_det: op.det_plus / op.det_minus,
        })
    }

    pub fn get(&self, which: FieldKind) -> &FieldSolution<T> {
        match which {
            FieldKind::Phi => &self.phi,
            FieldKind::Psi => &self.psi,
            FieldKind::PhiPlus => &self.phi_plus,
            FieldKind::PhiMinus => &self.phi_minus,
        }
    }

    /// `μ(t) = φ⁺(t, t) + φ⁻(t, t)`.
    pub fn mu(&self) -> T {
        self.phi_plus.boundary_value + self.phi_minus.boundary_value
    }
}

/// Solves one of the four equations at `t`.
pub fn solve_field<T: Real>(
    spec: &KernelSpec<T>,
    t: T,
    which: FieldKind,
    res: &Resolution,
) -> Result<FieldSolution<T>> {
    Ok(FieldSet::solve(spec, t, res)?.get(which).clone())
}

/// `(1/Φ(t,t), Ψ(t,t))`, both of which equal `m(t)`.
pub fn boundary_m<T: Real>(spec: &KernelSpec<T>, t: T, res: &Resolution) -> Result<(T, T)> {
    let set = FieldSet::solve(spec, t, res)?;
    Ok((T::one() / set.phi.boundary_value, set.psi.boundary_value))
}

/// `μ(t) = φ⁺(t,t) + φ⁻(t,t)`.
pub fn mu_at<T: Real>(spec: &KernelSpec<T>, t: T, res: &Resolution) -> Result<T> {
    Ok(FieldSet::solve(spec, t, res)?.mu())
}

/// `exp(∫_0^t μ)`, with the integral by composite Gauss–Legendre using
/// `nodes` points on panels of width at most `panel_width`.
pub fn m_from_mu<T: Real>(
    spec: &KernelSpec<T>,
    t: T,
    res: &Resolution,
    nodes: usize,
    panel_width: T,
) -> Result<T> {
    if t <= T::zero() {
        return Ok(T::one());
    }
    let pieces = (t / panel_width).ceil().as_f64().max(1.0) as usize;
    let rule = GaussRule::<T>::legendre(nodes);
    let step = t / T::count(pieces);
    let mut points = Vec::with_capacity(pieces * nodes);
    for k in 0..pieces {
        let (x, w) = rule.mapped(step * T::count(k), step * T::count(k + 1));
        points.extend(x.into_iter().zip(w));
    }
    let values: Vec<Result<T>> = points
        .par_iter()
        .map(|&(r, w)| mu_at(spec, r, res).map(|mu| w * mu))
        .collect();
    let mut integral = T::zero();
    for v in values {
        integral += v?;
    }
    Ok(integral.exp())
}

/// Fields at `t − h, t, t + h` on a common panel layout, for central
/// differences in `t` and `x`.
#[derive(Debug, Clone)]
pub struct FieldStencil<T: Real> {
    pub t: T,
    pub h: T,
    pub below: FieldSet<T>,
    pub center: FieldSet<T>,
    pub above: FieldSet<T>,
    /// Whole stencil in `t ≤ 0`: derivatives come from the closed forms.
    closed_form: bool,
    spec: Arc<KernelSpec<T>>,
}

impl<T: Real> FieldStencil<T> {
    pub fn new(spec: &KernelSpec<T>, t: T, h: T, res: &Resolution) -> Result<Self> {
        let frozen = res.frozen_at(t.as_f64());
        let ts = [t - h, t, t + h];
        let mut sets: Vec<FieldSet<T>> = ts
            .par_iter()
            .map(|&s| FieldSet::solve(spec, s, &frozen))
            .collect::<Result<_>>()?;
        let above = sets.pop().expect("three sets");
        let center = sets.pop().expect("three sets");
        let below = sets.pop().expect("three sets");
        Ok(Self {
            t,
            h,
            below,
            center,
            above,
            closed_form: t + h <= T::zero(),
            spec: Arc::new(spec.clone()),
        })
    }

    /// For `t ≤ 0`, `∂t` and `∂x` agree: `Φ′ = −K(x+t)`, `Ψ′ = K(x+t)`,
    /// `φ±′ = K′(x+t)`.
    fn exact_first(&self, which: FieldKind, x: T) -> T {
        let k = &self.spec;
        match which {
            FieldKind::Phi => -k.eval(x + self.t),
            FieldKind::Psi => k.eval(x + self.t),
            FieldKind::PhiPlus | FieldKind::PhiMinus => k.deriv(x + self.t).unwrap_or(T::zero()),
        }
    }

    fn exact_second(&self, which: FieldKind, x: T) -> T {
        let k = &self.spec;
        match which {
            FieldKind::Phi => -k.deriv(x + self.t).unwrap_or(T::zero()),
            FieldKind::Psi => k.deriv(x + self.t).unwrap_or(T::zero()),
            FieldKind::PhiPlus | FieldKind::PhiMinus => {
                // Second derivative of K by a symmetric difference of K′.
                let e = T::lit(1e-5);
                let d = |y: T| k.deriv(y).unwrap_or(T::zero());
                (d(x + self.t + e) - d(x + self.t - e)) / (e + e)
            }
        }
    }

    pub fn value(&self, which: FieldKind, x: T) -> T {
        self.center.get(which).eval(x)
    }

    pub fn dt(&self, which: FieldKind, x: T) -> T {
        if self.closed_form {
            return self.exact_first(which, x);
        }
        (self.above.get(which).eval(x) - self.below.get(which).eval(x)) / (self.h + self.h)
    }

    pub fn dx(&self, which: FieldKind, x: T) -> T {
        if self.closed_form {
            return self.exact_first(which, x);
        }
        let f = self.center.get(which);
        (f.eval(x + self.h) - f.eval(x - self.h)) / (self.h + self.h)
    }

    pub fn dtt(&self, which: FieldKind, x: T) -> T {
        if self.closed_form {
            return self.exact_second(which, x);
        }
        let two = T::lit(2.0);
        (self.above.get(which).eval(x) - two * self.center.get(which).eval(x)
            + self.below.get(which).eval(x))
            / (self.h * self.h)
    }

    pub fn dxx(&self, which: FieldKind, x: T) -> T {
        if self.closed_form {
            return self.exact_second(which, x);
        }
        let f = self.center.get(which);
        let two = T::lit(2.0);
        (f.eval(x + self.h) - two * f.eval(x) + f.eval(x - self.h)) / (self.h * self.h)
    }

    /// `μ` at the stencil centre from the boundary values.
    pub fn mu(&self) -> T {
        self.center.mu()
    }
}

/// A residual evaluated at step `h` and `h/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedResidual {
    pub name: String,
    /// Residual at step `h`.
    pub value: f64,
    /// Residual at step `h/2`.
    pub refined: f64,
    /// `log2(value / refined)`; `None` when both sit at the noise floor or
    /// the residual does not involve a step.
    pub order: Option<f64>,
    /// Residual after Richardson extrapolation of the two step sizes,
    /// which removes the leading `h²` term. Diagnostic only.
    pub extrapolated: f64,
}

/// Residuals below this are indistinguishable from rounding.
pub const RESIDUAL_FLOOR: f64 = 1e-11;

impl NamedResidual {
    /// Builds the entry from pointwise residuals at `h` and `h/2` on the
    /// same probe points; `stepped` is false for step-free identities.
    pub fn from_profiles<T: Real>(name: &str, coarse: &[T], fine: &[T], stepped: bool) -> Self {
        let max_abs = |v: &[T]| v.iter().fold(0.0_f64, |a, r| a.max(r.abs().as_f64()));
        let value = max_abs(coarse);
        let refined = max_abs(fine);
        let extrapolated = if stepped {
            let three = T::lit(3.0);
            let four = T::lit(4.0);
            coarse
                .iter()
                .zip(fine)
                .fold(0.0_f64, |a, (&c, &f)| a.max(((four * f - c) / three).abs().as_f64()))
        } else {
            refined
        };
        let order = if stepped && value > RESIDUAL_FLOOR && refined > RESIDUAL_FLOOR {
            Some((value / refined).log2())
        } else {
            None
        };
        Self {
            name: name.to_string(),
            value,
            refined,
            order,
            extrapolated,
        }
    }

    /// Within `tol`, and, when an order is measurable, within `order_tol`
    /// of `expected_order`.
    pub fn passes(&self, tol: f64, expected_order: f64, order_tol: f64) -> bool {
        self.value <= tol
            && self
                .order
                .is_none_or(|p| (p - expected_order).abs() <= order_tol)
    }
}

/// Probe abscissae strictly inside `(-t, t)`, kept away from the lines
/// `x = λ − t` where the fields lose smoothness in `t`.
pub fn probe_points<T: Real>(spec: &KernelSpec<T>, t: T, count: usize, guard: T) -> Vec<T> {
    let span = if t > T::zero() { t } else { T::one() - t };
    (1..=count)
        .map(|k| -span + (span + span) * T::count(k) / T::count(count + 1))
        .filter(|&x| spec.kinks.iter().all(|&lam| (x - (lam - t)).abs() > guard))
        .collect()
}

/// Pointwise residuals of the ten relations for one stencil.
fn relation_profiles<T: Real>(st: &FieldStencil<T>, xs: &[T], quad_nodes: usize) -> Vec<Vec<T>> {
    use FieldKind::*;
    let c = &st.center;
    let phi_tt = c.phi.boundary_value;
    let psi_tt = c.psi.boundary_value;
    let m = c.m_det;
    let mu = st.mu();
    let f = |w: FieldKind, x: T| st.value(w, x);
    let over = |g: &dyn Fn(T) -> T| xs.iter().map(|&x| g(x)).collect::<Vec<T>>();

    // Reconstructions of Ψ from ∂tΦ and of Φ from ∂tΨ.
    let rule = GaussRule::<T>::legendre(quad_nodes);
    let lower = -st.t;
    let cumulative = |w: FieldKind, x: T| -> T {
        if x <= lower {
            return T::zero();
        }
        rule.integrate(lower, x, |y| st.dt(w, y))
    };

    vec![
        over(&|x| f(PhiPlus, x) + st.dt(Phi, x) / phi_tt),
        over(&|x| f(PhiMinus, x) + st.dx(Phi, x) / phi_tt),
        over(&|x| f(PhiPlus, x) - st.dx(Psi, x) / psi_tt),
        over(&|x| f(PhiMinus, x) - st.dt(Psi, x) / psi_tt),
        vec![T::one() / m - (T::one() - c.phi_plus.integral())],
        vec![m - (T::one() + c.phi_minus.integral())],
        over(&|x| st.dt(PhiPlus, x) - st.dx(PhiMinus, x) + mu * f(PhiPlus, x)),
        over(&|x| st.dt(PhiMinus, x) - st.dx(PhiPlus, x) - mu * f(PhiMinus, x)),
        over(&|x| f(Psi, x) - (T::one() - cumulative(Phi, x) / (phi_tt * phi_tt))),
        over(&|x| f(Phi, x) - (T::one() - cumulative(Psi, x) / (psi_tt * psi_tt))),
    ]
}

pub const RELATION_NAMES: [&str; 10] = [
    "phi_plus_from_phi_t",
    "phi_minus_from_phi_x",
    "phi_plus_from_psi_x",
    "phi_minus_from_psi_t",
    "inverse_m_from_phi_plus",
    "m_from_phi_minus",
    "phi_pair_pde_plus",
    "phi_pair_pde_minus",
    "psi_from_phi_t",
    "phi_from_psi_t",
];

/// Residuals of the derivative relations, the boundary quadrature
/// identities for `m`, the `φ±` transport pair and the `Φ ↔ Ψ`
/// reconstructions at `t`, as max-norms over interior probes at steps `h`
/// and `h/2`.
///
/// For `t + h ≤ 0` the stencil switches to exact derivatives of the closed
/// forms, so the residuals measure only rounding.
pub fn relation_residuals<T: Real>(
    spec: &KernelSpec<T>,
    t: T,
    h: T,
    res: &Resolution,
) -> Result<Vec<NamedResidual>> {
    let half = h * T::lit(0.5);
    let xs = probe_points(spec, t, 41, h * T::lit(2.0));
    let (coarse, fine) = rayon::join(
        || FieldStencil::new(spec, t, h, res),
        || FieldStencil::new(spec, t, half, res),
    );
    let (coarse, fine) = (coarse?, fine?);
    let (a, b) = rayon::join(
        || relation_profiles(&coarse, &xs, 48),
        || relation_profiles(&fine, &xs, 48),
    );
    Ok(RELATION_NAMES
        .iter()
        .enumerate()
        .map(|(k, name)| NamedResidual::from_profiles(name, &a[k], &b[k], !(k == 4 || k == 5)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_kernel() -> KernelSpec<f64> {
        KernelSpec::exponential(0.5, 1.0).unwrap()
    }

    #[test]
    fn closed_forms_at_nonpositive_t() {
        let k = exp_kernel();
        let phi = solve_field(&k, 0.0, FieldKind::Phi, &Resolution::default()).unwrap();
        assert!((phi.eval(1.0) - (0.5 + 0.5 * (-1.0_f64).exp())).abs() < 1e-15);
        assert_eq!(phi.boundary_value, 1.0);
        let p = solve_field(&k, -0.3, FieldKind::PhiPlus, &Resolution::default()).unwrap();
        for x in [-1.0, 0.3, 0.7, 2.0] {
            assert_eq!(p.eval(x), k.eval(x - 0.3));
        }
        assert!((mu_at(&k, 0.0, &Resolution::default()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn natural_interpolant_reproduces_nodes() {
        let k = KernelSpec::<f64>::bump_with_mass(0.9, 1.0).unwrap();
        let set = FieldSet::solve(&k, 0.7, &Resolution::new(24, 2)).unwrap();
        let g = set.phi.grid().unwrap();
        for (i, &x) in g.nodes.iter().enumerate().step_by(7) {
            assert!((set.phi.eval(x) - set.phi.node_values[i]).abs() < 1e-13);
            assert!((set.phi_minus.eval(x) - set.phi_minus.node_values[i]).abs() < 1e-13);
        }
        assert_eq!(set.psi.eval(-0.8), 1.0);
        assert_eq!(set.phi_plus.eval(-0.8), 0.0);
        assert!(set.phi.extend(0.7).is_err());
    }

    #[test]
    fn determinant_identity_small_t() {
        let k = KernelSpec::<f64>::bump_with_mass(0.9, 1.0).unwrap();
        let set = FieldSet::solve(&k, 1.0, &Resolution::default()).unwrap();
        assert!((set.phi.boundary_value * set.psi.boundary_value - 1.0).abs() < 1e-9);
        assert!((1.0 / set.phi.boundary_value - set.m_det).abs() < 1e-9);
    }

    #[test]
    fn sign_flip_swaps_fields() {
        // K → −K exchanges the (I + K) and (I − K) equations.
        let xs: Vec<f64> = (0..=40).map(|i| i as f64 * 0.05).collect();
        let ks: Vec<f64> = xs.iter().map(|&x| 0.4 * (-x).exp() * x).collect();
        let neg: Vec<f64> = ks.iter().map(|v| -v).collect();
        let a = KernelSpec::table(xs.clone(), ks, 3, 0.0, vec![]).unwrap();
        let b = KernelSpec::table(xs, neg, 3, 0.0, vec![]).unwrap();
        let res = Resolution::new(16, 2);
        let sa = FieldSet::solve(&a, 0.8, &res).unwrap();
        let sb = FieldSet::solve(&b, 0.8, &res).unwrap();
        for x in [-0.5, 0.1, 0.8, 1.3] {
            assert!((sa.phi.eval(x) - sb.psi.eval(x)).abs() < 1e-12);
            assert!((sa.phi_plus.eval(x) + sb.phi_minus.eval(x)).abs() < 1e-12);
        }
    }
}
