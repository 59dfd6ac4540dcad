//! Solutions of the canonical system divided by `E(z)`:
//! `a(t,z) = A(t,z)/E(z)` and `b(t,z) = B(t,z)/E(z)` for `Im z > c`.
//!
//! `E` itself is never formed. Every identity checked here is linear in
//! `A`, `B` and `E` is independent of `t`, so the ratios carry them intact.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldKind, FieldSet, FieldStencil, NamedResidual, probe_points};
use crate::gauss::AdaptiveGauss;
use crate::kernels::KernelSpec;
use crate::quadrature::Resolution;
use crate::scalar::{cabs, ccos, csin, plane_wave, Real};

/// Required clearance of `Im z` above the growth constant.
pub const Z_MARGIN: f64 = 0.1;

/// Absolute tolerance of the tail integrals.
pub const TAIL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    /// `a = −(iz/2)∫_t^∞ Ψ e^{izx}`, `b = (z/2)∫_t^∞ Φ e^{izx}`.
    PsiPhiTail,
    /// Through `𝔄/E`, `𝔅/E` and the boundary traces `φ±`.
    PhiPlusMinusTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint<T> {
    pub t: T,
    pub z: Complex<T>,
    pub a: Complex<T>,
    pub b: Complex<T>,
    /// `a / m(t)`.
    pub a_frak: Complex<T>,
    /// `m(t) · b`.
    pub b_frak: Complex<T>,
    pub route: Route,
}

pub(crate) fn check_z<T: Real>(spec: &KernelSpec<T>, z: Complex<T>) -> Result<()> {
    let floor = spec.growth_constant_c + T::lit(Z_MARGIN);
    if !(z.im >= floor) {
        return Err(Error::domain(
            "canonical ratio",
            format!(
                "Im z = {} is below c + margin = {}",
                z.im.as_f64(),
                floor.as_f64()
            ),
        ));
    }
    Ok(())
}

/// `∫_t^∞ f(x) e^{izx} dx`, truncated once the remaining tail, bounded by
/// `sup|f| e^{(c − Im z)X} / (Im z − c)` with `sup|f|` sampled on the last
/// chunk, drops below `tol`. Integration always runs past the last break,
/// so a chunk where `f` happens to vanish cannot end it early.
pub fn tail_integral<T: Real, F: Fn(T) -> T>(
    f: F,
    t: T,
    z: Complex<T>,
    c: T,
    breaks: &[T],
    tol: T,
) -> Complex<T> {
    let decay = z.im - c;
    let chunk = (T::lit(4.0) / decay).max(T::one());
    let quad = AdaptiveGauss::new(tol * T::lit(0.01));
    let width = if z.re.abs() > T::one() {
        (T::pi() / z.re.abs()).min(T::lit(0.5))
    } else {
        T::lit(0.5)
    };
    let last_break = breaks.iter().fold(t, |a, &b| a.max(b));
    let mut lo = t;
    let mut total = Complex::new(T::zero(), T::zero());
    for _ in 0..400 {
        let hi = lo + chunk;
        total += quad.integrate(lo, hi, breaks, Some(width), |x| plane_wave(z, x) * f(x));
        let mut sup = T::zero();
        for k in 0..=8 {
            let x = lo + chunk * T::count(k) / T::lit(8.0);
            sup = sup.max(f(x).abs());
        }
        let bound = T::lit(2.0) * sup * ((c - z.im) * hi).exp() / decay;
        lo = hi;
        if bound < tol && lo >= last_break {
            break;
        }
    }
    total
}

/// Points where the extended fields may lose smoothness beyond `t`.
fn tail_breaks<T: Real>(spec: &KernelSpec<T>, t: T) -> Vec<T> {
    let mut out = Vec::new();
    for lam in spec.breakpoints() {
        out.push(t + lam);
        out.push(lam - t);
    }
    out
}

/// Ratios from already solved fields.
pub fn ratio_from_fields<T: Real>(
    spec: &KernelSpec<T>,
    set: &FieldSet<T>,
    z: Complex<T>,
    route: Route,
) -> Result<RatioPoint<T>> {
    check_z(spec, z)?;
    let t = set.t;
    let c = spec.growth_constant_c;
    let tol = T::lit(TAIL_TOL);
    let breaks = tail_breaks(spec, t);
    let half = T::lit(0.5);
    let i = Complex::new(T::zero(), T::one());
    let m = set.m_det;
    let tail = |w: FieldKind| {
        let f = set.get(w);
        tail_integral(|x| f.eval(x), t, z, c, &breaks, tol)
    };
    let (a, b) = match route {
        Route::PsiPhiTail => {
            let (psi, phi) = rayon::join(|| tail(FieldKind::Psi), || tail(FieldKind::Phi));
            let a = -(i * z * half) * psi;
            let b = z * half * phi;
            (a, b)
        }
        Route::PhiPlusMinusTail => {
            let (plus, minus) =
                rayon::join(|| tail(FieldKind::PhiPlus), || tail(FieldKind::PhiMinus));
            let e = plane_wave(z, t);
            let a_frak = (e + plus) * half;
            let b_frak = i * half * (e - minus);
            (a_frak * m, b_frak / m)
        }
    };
    Ok(RatioPoint {
        t,
        z,
        a,
        b,
        a_frak: a / m,
        b_frak: b * m,
        route,
    })
}

/// `a(t,z)` and `b(t,z)` by the chosen route.
pub fn ab_ratio<T: Real>(
    spec: &KernelSpec<T>,
    t: T,
    z: Complex<T>,
    route: Route,
    res: &Resolution,
) -> Result<RatioPoint<T>> {
    check_z(spec, z)?;
    let set = FieldSet::solve(spec, t, res)?;
    ratio_from_fields(spec, &set, z, route)
}

/// Values at `t = 0`: `a = (1+Θ)/2`, `b = i(1−Θ)/2`.
pub fn ratio_at_zero<T: Real>(spec: &KernelSpec<T>, z: Complex<T>) -> Result<(Complex<T>, Complex<T>)> {
    let theta = spec.fourier(z, T::lit(crate::kernels::FOURIER_TOL))?;
    let one = Complex::new(T::one(), T::zero());
    let half = T::lit(0.5);
    let i = Complex::new(T::zero(), T::one());
    Ok(((one + theta) * half, i * (one - theta) * half))
}

/// For `t ≤ 0` the system is a pure rotation:
/// `a = a₀ cos(tz) + b₀ sin(tz)`, `b = −a₀ sin(tz) + b₀ cos(tz)`.
pub fn ratio_closed_form<T: Real>(
    spec: &KernelSpec<T>,
    t: T,
    z: Complex<T>,
) -> Result<(Complex<T>, Complex<T>)> {
    if t > T::zero() {
        return Err(Error::domain("ratio_closed_form", "requires t ≤ 0"));
    }
    check_z(spec, z)?;
    let (a0, b0) = ratio_at_zero(spec, z)?;
    let tz = z * t;
    let (c, s) = (ccos(tz), csin(tz));
    Ok((a0 * c + b0 * s, -a0 * s + b0 * c))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeResidual {
    /// `|∂t a − zγ b| / (|a| + |b|)` at step `h`.
    pub res_a: f64,
    /// `|∂t b + z a/γ| / (|a| + |b|)` at step `h`.
    pub res_b: f64,
    pub res_a_half: f64,
    pub res_b_half: f64,
    /// `log2` of the ratio of the larger residual at `h` and `h/2`.
    pub observed_order: Option<f64>,
}

fn ratio_series<T: Real>(
    spec: &KernelSpec<T>,
    ts: &[T],
    z: Complex<T>,
    res: &Resolution,
) -> Result<Vec<(RatioPoint<T>, T, T)>> {
    ts.par_iter()
        .map(|&s| {
            let set = FieldSet::solve(spec, s, res)?;
            let r = ratio_from_fields(spec, &set, z, Route::PsiPhiTail)?;
            Ok((r, set.m_det, set.mu()))
        })
        .collect()
}

/// Central-difference residuals of `a_t = zγb`, `b_t = −z a/γ`.
pub fn ode_residual<T: Real>(
    spec: &KernelSpec<T>,
    t: T,
    z: Complex<T>,
    h: T,
    res: &Resolution,
) -> Result<OdeResidual> {
    check_z(spec, z)?;
    let frozen = res.frozen_at(t.as_f64());
    let half = h * T::lit(0.5);
    let ts = [t - h, t - half, t, t + half, t + h];
    let pts = ratio_series(spec, &ts, z, &frozen)?;
    let (center, m, _) = &pts[2];
    let gamma = *m * *m;
    let scale = cabs(center.a) + cabs(center.b);
    let residual = |lo: usize, hi: usize, step: T| {
        let da = (pts[hi].0.a - pts[lo].0.a) / (step + step);
        let db = (pts[hi].0.b - pts[lo].0.b) / (step + step);
        let ra = cabs(da - z * center.b * gamma) / scale;
        let rb = cabs(db + z * center.a / gamma) / scale;
        (ra.as_f64(), rb.as_f64())
    };
    let (res_a, res_b) = residual(0, 4, h);
    let (res_a_half, res_b_half) = residual(1, 3, half);
    let coarse = res_a.max(res_b);
    let fine = res_a_half.max(res_b_half);
    let observed_order = if coarse > crate::fields::RESIDUAL_FLOOR && fine > crate::fields::RESIDUAL_FLOOR {
        Some((coarse / fine).log2())
    } else {
        None
    };
    Ok(OdeResidual {
        res_a,
        res_b,
        res_a_half,
        res_b_half,
        observed_order,
    })
}

pub const PDE_NAMES: [&str; 7] = [
    "cauchy_phi",
    "cauchy_psi",
    "damped_wave_phi",
    "damped_wave_psi",
    "schrodinger_a",
    "schrodinger_b",
    "damping_consistency",
];

/// Pointwise residuals of the field PDEs on one stencil:
/// `Φ_t + Ψ_x/γ`, `Ψ_t + γΦ_x`, `Φ_tt − Φ_xx + 2μΦ_t`, `Ψ_tt − Ψ_xx − 2μΨ_t`.
fn field_pde_profiles<T: Real>(st: &FieldStencil<T>, xs: &[T]) -> [Vec<T>; 4] {
    use FieldKind::*;
    let m = st.center.m_det;
    let gamma = m * m;
    let two_mu = st.mu() * T::lit(2.0);
    let over = |g: &dyn Fn(T) -> T| xs.iter().map(|&x| g(x)).collect::<Vec<T>>();
    [
        over(&|x| st.dt(Phi, x) + st.dx(Psi, x) / gamma),
        over(&|x| st.dt(Psi, x) + gamma * st.dx(Phi, x)),
        over(&|x| st.dtt(Phi, x) - st.dxx(Phi, x) + two_mu * st.dt(Phi, x)),
        over(&|x| st.dtt(Psi, x) - st.dxx(Psi, x) - two_mu * st.dt(Psi, x)),
    ]
}

/// Residuals of the first-order Cauchy system for `(Φ, Ψ)`, the damped wave
/// equations, the Schrödinger forms `a_tt + z²a − 2μa_t = 0`,
/// `b_tt + z²b + 2μb_t = 0` (divided by `|a| + |b|`), and the damping
/// consistency `|2μ − γ′/γ|`, each at steps `h` and `h/2`.
pub fn pde_residual<T: Real>(
    spec: &KernelSpec<T>,
    t: T,
    h: T,
    z: Complex<T>,
    res: &Resolution,
) -> Result<Vec<NamedResidual>> {
    check_z(spec, z)?;
    let half = h * T::lit(0.5);
    let xs = probe_points(spec, t, 41, h * T::lit(2.0));
    let ((coarse, fine), series) = rayon::join(
        || {
            rayon::join(
                || FieldStencil::new(spec, t, h, res),
                || FieldStencil::new(spec, t, half, res),
            )
        },
        || {
            let frozen = res.frozen_at(t.as_f64());
            ratio_series(spec, &[t - h, t - half, t, t + half, t + h], z, &frozen)
        },
    );
    let (coarse, fine, series) = (coarse?, fine?, series?);
    let pa = field_pde_profiles(&coarse, &xs);
    let pb = field_pde_profiles(&fine, &xs);
    let mut out: Vec<NamedResidual> = (0..4)
        .map(|k| NamedResidual::from_profiles(PDE_NAMES[k], &pa[k], &pb[k], true))
        .collect();

    let (center, m, mu) = &series[2];
    let scale = cabs(center.a) + cabs(center.b);
    let z2 = z * z;
    let two = T::lit(2.0);
    let schrodinger = |lo: usize, hi: usize, step: T| {
        let (a0, b0) = (center.a, center.b);
        let (al, bl) = (series[lo].0.a, series[lo].0.b);
        let (ah, bh) = (series[hi].0.a, series[hi].0.b);
        let inv = T::one() / (step * step);
        let att = (ah - a0 * two + al) * inv;
        let btt = (bh - b0 * two + bl) * inv;
        let at = (ah - al) / (step + step);
        let bt = (bh - bl) / (step + step);
        let ra = (att + z2 * a0 - at * (two * *mu)) / scale;
        let rb = (btt + z2 * b0 + bt * (two * *mu)) / scale;
        (cabs(ra), cabs(rb))
    };
    let (ra_h, rb_h) = schrodinger(0, 4, h);
    let (ra_f, rb_f) = schrodinger(1, 3, half);
    out.push(NamedResidual::from_profiles(PDE_NAMES[4], &[ra_h], &[ra_f], true));
    out.push(NamedResidual::from_profiles(PDE_NAMES[5], &[rb_h], &[rb_f], true));

    // 2μ against the logarithmic derivative of γ = m².
    let log_gamma = |k: usize| (series[k].1 * series[k].1).ln();
    let _ = m;
    let damping = |lo: usize, hi: usize, step: T| {
        (two * *mu - (log_gamma(hi) - log_gamma(lo)) / (step + step)).abs()
    };
    out.push(NamedResidual::from_profiles(
        PDE_NAMES[6],
        &[damping(0, 4, h)],
        &[damping(1, 3, half)],
        true,
    ));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaConsistency {
    /// `|a(0,z) − (1+Θ)/2| + |b(0,z) − i(1−Θ)/2|`.
    pub residual: f64,
    /// `|a(0,z) − i b(0,z) − 1|`.
    pub unit_residual: f64,
}

/// Compares the tail-integral ratios at `t = 0` with the Fourier symbol.
pub fn theta_consistency<T: Real>(
    spec: &KernelSpec<T>,
    z: Complex<T>,
    res: &Resolution,
) -> Result<ThetaConsistency> {
    let r = ab_ratio(spec, T::zero(), z, Route::PsiPhiTail, res)?;
    let (a0, b0) = ratio_at_zero(spec, z)?;
    let i = Complex::new(T::zero(), T::one());
    let one = Complex::new(T::one(), T::zero());
    Ok(ThetaConsistency {
        residual: (cabs(r.a - a0) + cabs(r.b - b0)).as_f64(),
        unit_residual: cabs(r.a - i * r.b - one).as_f64(),
    })
}

/// `|a₁ − a₂| + |b₁ − b₂|` between the two routes at `(t, z)`.
pub fn route_agreement<T: Real>(
    spec: &KernelSpec<T>,
    t: T,
    z: Complex<T>,
    res: &Resolution,
) -> Result<f64> {
    check_z(spec, z)?;
    let set = FieldSet::solve(spec, t, res)?;
    let (p, q) = rayon::join(
        || ratio_from_fields(spec, &set, z, Route::PsiPhiTail),
        || ratio_from_fields(spec, &set, z, Route::PhiPlusMinusTail),
    );
    let (p, q) = (p?, q?);
    Ok((cabs(p.a - q.a) + cabs(p.b - q.b)).as_f64())
}
