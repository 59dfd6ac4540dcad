//! Hankel kernels `K` supported on `[0, ∞)`: evaluation, derivatives,
//! antiderivatives, Fourier symbol, and admissibility probes.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{AdaptiveGauss, GaussRule};
use crate::scalar::{cabs, plane_wave, Real};

/// Smoothness class reported for kernels that vanish to infinite order at 0.
pub const INFINITE_SMOOTHNESS: u32 = u32::MAX;

/// Default absolute tolerance for [`KernelSpec::fourier`].
pub const FOURIER_TOL: f64 = 1e-12;

/// Subpanels used for the cumulative integral table of the bump family.
const BUMP_TABLE_PANELS: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelFamily<T> {
    /// `α e^{-βx}` for `x ≥ 0`.
    Exponential { alpha: T, beta: T },
    /// `α exp(4 − w²/(x(w−x)))` on `(0, w)`.
    Bump { alpha: T, width: T },
    SampledTable(SampledTable<T>),
}

/// Tabulated kernel interpolated piecewise linearly or by a natural cubic
/// spline, and zero outside the sampled range.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTable<T> {
    xs: Vec<T>,
    ks: Vec<T>,
    order: u8,
    /// Spline second derivatives (all zero for linear interpolation).
    curv: Vec<T>,
}

impl<T: Real> SampledTable<T> {
    pub fn new(xs: Vec<T>, ks: Vec<T>, order: u8) -> Result<Self> {
        if xs.len() != ks.len() || xs.len() < 2 {
            return Err(Error::InvalidSpec(
                "a table needs at least two (x, K) samples".into(),
            ));
        }
        if !xs.windows(2).all(|p| p[0] < p[1]) {
            return Err(Error::InvalidSpec(
                "table abscissae must be strictly increasing".into(),
            ));
        }
        if xs.iter().chain(&ks).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("table contains non-finite values".into()));
        }
        let curv = match order {
            1 => vec![T::zero(); xs.len()],
            3 => natural_spline_curvature(&xs, &ks),
            _ => {
                return Err(Error::InvalidSpec(format!(
                    "interp_order must be 1 or 3, got {order}"
                )))
            }
        };
        Ok(Self { xs, ks, order, curv })
    }

    pub fn abscissae(&self) -> &[T] {
        &self.xs
    }

    pub fn values(&self) -> &[T] {
        &self.ks
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    fn segment(&self, x: T) -> Option<usize> {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return None;
        }
        let i = self.xs.partition_point(|&p| p <= x);
        Some(i.clamp(1, n - 1) - 1)
    }

    fn interp(&self, i: usize, x: T) -> T {
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = T::one() - a;
        let six = T::lit(6.0);
        a * self.ks[i]
            + b * self.ks[i + 1]
            + ((a * a * a - a) * self.curv[i] + (b * b * b - b) * self.curv[i + 1]) * h * h / six
    }

    fn interp_deriv(&self, i: usize, x: T) -> T {
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = T::one() - a;
        let three = T::lit(3.0);
        let six = T::lit(6.0);
        (self.ks[i + 1] - self.ks[i]) / h - (three * a * a - T::one()) * h / six * self.curv[i]
            + (three * b * b - T::one()) * h / six * self.curv[i + 1]
    }
}

/// Second derivatives of the natural cubic spline through `(xs, ys)`.
fn natural_spline_curvature<T: Real>(xs: &[T], ys: &[T]) -> Vec<T> {
    let n = xs.len();
    let mut m = vec![T::zero(); n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior tridiagonal system.
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    for i in 1..n - 1 {
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        let rhs = six * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
        let diag = two * (h0 + h1) - h0 * c[i - 1];
        c[i] = h1 / diag;
        d[i] = (rhs - h0 * d[i - 1]) / diag;
    }
    for i in (1..n - 1).rev() {
        m[i] = d[i] - c[i] * m[i + 1];
    }
    m
}

/// An admissible kernel together with its declared analytic data.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec<T> {
    pub family: KernelFamily<T>,
    /// Growth constant `c` with `|K(x)| ≤ C e^{cx}`.
    pub growth_constant_c: T,
    /// Sorted points where `K′` may be discontinuous.
    pub kinks: Vec<T>,
    /// Largest `j` with `K^{(j)}(0⁺) = 0`.
    pub smoothness_class: u32,
    /// Cumulative integrals at the bump subpanel edges.
    cumulative: Vec<T>,
}

impl<T: Real> KernelSpec<T> {
    pub fn exponential(alpha: T, beta: T) -> Result<Self> {
        if !(alpha > T::zero() && beta > T::zero()) {
            return Err(Error::InvalidSpec(
                "exponential kernel needs alpha > 0 and beta > 0".into(),
            ));
        }
        Ok(Self {
            family: KernelFamily::Exponential { alpha, beta },
            growth_constant_c: T::zero(),
            kinks: vec![T::zero()],
            smoothness_class: 0,
            cumulative: Vec::new(),
        })
    }

    pub fn bump(alpha: T, width: T) -> Result<Self> {
        if !(alpha > T::zero() && width > T::zero()) {
            return Err(Error::InvalidSpec(
                "bump kernel needs alpha > 0 and width > 0".into(),
            ));
        }
        let mut spec = Self {
            family: KernelFamily::Bump { alpha, width },
            growth_constant_c: T::zero(),
            kinks: Vec::new(),
            smoothness_class: INFINITE_SMOOTHNESS,
            cumulative: Vec::new(),
        };
        spec.cumulative = spec.bump_cumulative();
        Ok(spec)
    }

    /// Bump of the given width scaled so that `∫K = mass`.
    pub fn bump_with_mass(mass: T, width: T) -> Result<Self> {
        if !(mass > T::zero()) {
            return Err(Error::InvalidSpec("bump mass must be positive".into()));
        }
        let unit = Self::bump(T::one(), width)?;
        let total = *unit.cumulative.last().expect("bump table");
        Self::bump(mass / total, width)
    }

    pub fn table(xs: Vec<T>, ks: Vec<T>, order: u8, c: T, declared_kinks: Vec<T>) -> Result<Self> {
        if !(c >= T::zero()) {
            return Err(Error::InvalidSpec("growth constant c must be ≥ 0".into()));
        }
        let table = SampledTable::new(xs, ks, order)?;
        let n = table.xs.len();
        let mut kinks = declared_kinks;
        kinks.push(table.xs[0]);
        kinks.push(table.xs[n - 1]);
        if order == 1 {
            kinks.extend_from_slice(&table.xs[1..n - 1]);
        }
        kinks.retain(|k| *k >= T::zero());
        kinks.sort_by(|a, b| a.partial_cmp(b).expect("finite kinks"));
        kinks.dedup();
        Ok(Self {
            family: KernelFamily::SampledTable(table),
            growth_constant_c: c,
            kinks,
            smoothness_class: 0,
            cumulative: Vec::new(),
        })
    }

    /// `K(x)`; zero for `x < 0` and outside a table's range.
    pub fn eval(&self, x: T) -> T {
        if x < T::zero() {
            return T::zero();
        }
        match &self.family {
            KernelFamily::Exponential { alpha, beta } => *alpha * (-*beta * x).exp(),
            KernelFamily::Bump { alpha, width } => bump_value(*alpha, *width, x),
            KernelFamily::SampledTable(tab) => match tab.segment(x) {
                Some(i) => tab.interp(i, x),
                None => T::zero(),
            },
        }
    }

    /// `K(x)` with jump points replaced by the mean of the one-sided limits.
    ///
    /// This is the value quadrature should see where a node sum lands
    /// exactly on a discontinuity of `K`.
    pub fn eval_balanced(&self, x: T) -> T {
        let half = T::lit(0.5);
        match &self.family {
            KernelFamily::Exponential { alpha, .. } if x == T::zero() => *alpha * half,
            KernelFamily::SampledTable(tab) => {
                let n = tab.xs.len();
                let (lo, hi) = (tab.xs[0], tab.xs[n - 1]);
                if x == lo && lo >= T::zero() {
                    tab.ks[0] * half
                } else if x == hi && hi >= T::zero() {
                    tab.ks[n - 1] * half
                } else {
                    self.eval(x)
                }
            }
            _ => self.eval(x),
        }
    }

    /// `K′(x)`; fails at declared kinks.
    pub fn deriv(&self, x: T) -> Result<T> {
        if self.kinks.contains(&x) {
            return Err(Error::KinkPoint { x: x.as_f64() });
        }
        if x < T::zero() {
            return Ok(T::zero());
        }
        Ok(match &self.family {
            KernelFamily::Exponential { alpha, beta } => -*alpha * *beta * (-*beta * x).exp(),
            KernelFamily::Bump { alpha, width } => {
                let w = *width;
                if x <= T::zero() || x >= w {
                    T::zero()
                } else {
                    let q = x * (w - x);
                    bump_value(*alpha, w, x) * w * w * (w - x - x) / (q * q)
                }
            }
            KernelFamily::SampledTable(tab) => match tab.segment(x) {
                Some(i) => tab.interp_deriv(i, x),
                None => T::zero(),
            },
        })
    }

    /// `∫_0^x K`, zero for `x ≤ 0`.
    pub fn antiderivative(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        match &self.family {
            KernelFamily::Exponential { alpha, beta } => {
                *alpha / *beta * (T::one() - (-*beta * x).exp())
            }
            KernelFamily::Bump { alpha, width } => {
                let w = *width;
                let total = *self.cumulative.last().expect("bump table");
                if x >= w {
                    return total;
                }
                let step = w / T::count(BUMP_TABLE_PANELS);
                let k = (x / step).floor().as_f64() as usize;
                let k = k.min(BUMP_TABLE_PANELS - 1);
                let lo = step * T::count(k);
                let rule = GaussRule::<T>::legendre(16);
                self.cumulative[k] + rule.integrate(lo, x, |s| bump_value(*alpha, w, s))
            }
            KernelFamily::SampledTable(tab) => table_antiderivative(tab, x),
        }
    }

    /// `∫_a^b K`.
    pub fn integral(&self, a: T, b: T) -> T {
        self.antiderivative(b) - self.antiderivative(a)
    }

    fn bump_cumulative(&self) -> Vec<T> {
        let KernelFamily::Bump { alpha, width } = self.family else {
            return Vec::new();
        };
        let rule = GaussRule::<T>::legendre(16);
        let step = width / T::count(BUMP_TABLE_PANELS);
        let mut acc = T::zero();
        let mut out = Vec::with_capacity(BUMP_TABLE_PANELS + 1);
        out.push(acc);
        for k in 0..BUMP_TABLE_PANELS {
            let lo = step * T::count(k);
            let hi = if k + 1 == BUMP_TABLE_PANELS {
                width
            } else {
                lo + step
            };
            acc += rule.integrate(lo, hi, |s| bump_value(alpha, width, s));
            out.push(acc);
        }
        out
    }

    /// Right end of the support, if bounded.
    pub fn support_end(&self) -> Option<T> {
        match &self.family {
            KernelFamily::Exponential { .. } => None,
            KernelFamily::Bump { width, .. } => Some(*width),
            KernelFamily::SampledTable(tab) => Some(*tab.xs.last().expect("nonempty table")),
        }
    }

    /// Envelope `(C, r)` with `|K(x)| ≤ C e^{r x}` on `x ≥ 0`, `r ≤ c`.
    pub fn envelope(&self) -> (T, T) {
        match &self.family {
            KernelFamily::Exponential { alpha, beta } => {
                (*alpha, (-*beta).min(self.growth_constant_c))
            }
            KernelFamily::Bump { alpha, .. } => (*alpha, self.growth_constant_c),
            KernelFamily::SampledTable(tab) => {
                let c = self.growth_constant_c;
                let mut sup = T::zero();
                for (&x, &k) in tab.xs.iter().zip(&tab.ks) {
                    let x = x.max(T::zero());
                    sup = sup.max(k.abs() * (-c * x).exp());
                }
                // Cubic overshoot between samples stays within a small factor.
                let slack = if tab.order == 3 { T::lit(2.0) } else { T::one() };
                (sup * slack, c)
            }
        }
    }

    /// Points where `K` or `K′` is not smooth, including support edges.
    pub fn breakpoints(&self) -> Vec<T> {
        let mut pts = self.kinks.clone();
        if let KernelFamily::Bump { width, .. } = self.family {
            pts.push(T::zero());
            pts.push(width);
        }
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        pts.dedup();
        pts
    }

    /// `Θ(z) = ∫_0^∞ K(x) e^{izx} dx` for `Im z > c`.
    pub fn fourier(&self, z: Complex<T>, tol: T) -> Result<Complex<T>> {
        let c = self.growth_constant_c;
        if !(z.im > c) {
            return Err(Error::domain(
                "kernel_fourier",
                format!("Im z = {} must exceed c = {}", z.im.as_f64(), c.as_f64()),
            ));
        }
        let (big_c, rate) = self.envelope();
        let decay = z.im - rate;
        let mut upper = (big_c / (tol * decay)).ln().max(T::one()) / decay;
        if let Some(end) = self.support_end() {
            upper = upper.min(end);
        }
        let quad = AdaptiveGauss::new(tol * T::lit(0.1));
        let width = if z.re.abs() > T::one() {
            T::pi() / z.re.abs()
        } else {
            T::pi()
        };
        let breaks = self.breakpoints();
        Ok(quad.integrate(T::zero(), upper, &breaks, Some(width.max(upper / T::lit(4096.0))), |x| {
            plane_wave(z, x) * self.eval(x)
        }))
    }

    /// Probes support, continuity, growth and the size of the symbol.
    ///
    /// `probe` is the number of sample points on each probe grid.
    pub fn validate(&self, probe: usize) -> KernelValidationReport {
        let probe = probe.max(8);
        let support_ok = match &self.family {
            KernelFamily::SampledTable(tab) => tab
                .xs
                .iter()
                .zip(&tab.ks)
                .all(|(&x, &k)| x >= T::zero() || k == T::zero()),
            _ => true,
        };

        // Largest jump of K over the probe grid and at every breakpoint.
        let span = self.support_end().unwrap_or(T::lit(10.0)) * T::lit(1.25);
        let eps = T::lit(1e-9);
        let mut max_jump = T::zero();
        let mut probe_points: Vec<T> = (0..=probe)
            .map(|i| -span * T::lit(0.1) + span * T::lit(1.1) * T::count(i) / T::count(probe))
            .collect();
        probe_points.extend(self.breakpoints());
        for &x in &probe_points {
            max_jump = max_jump.max((self.eval(x + eps) - self.eval(x - eps)).abs());
        }

        // Log-slope of |K| on the far half of the probed support.
        let mut slope = T::zero();
        let (x0, x1) = (span * T::lit(0.5), span);
        let (k0, k1) = (self.eval(x0).abs(), self.eval(x1).abs());
        if k0 > T::zero() && k1 > T::zero() {
            slope = (k1.ln() - k0.ln()) / (x1 - x0);
        }
        let estimated_growth_c = slope.max(T::zero());

        let y = self.growth_constant_c + T::lit(0.01);
        let u_max = T::lit(40.0);
        let mut sup = T::zero();
        for i in 0..=probe {
            let u = -u_max + u_max * T::lit(2.0) * T::count(i) / T::count(probe);
            if let Ok(theta) = self.fourier(Complex::new(u, y), T::lit(1e-10)) {
                sup = sup.max(cabs(theta));
            }
        }
        if let Ok(theta) = self.fourier(Complex::new(T::zero(), y), T::lit(1e-10)) {
            sup = sup.max(cabs(theta));
        }
        let sup = sup.as_f64();
        KernelValidationReport {
            support_ok,
            continuity_probe_max_jump: max_jump.as_f64(),
            estimated_growth_c: estimated_growth_c.as_f64(),
            fourier_sup_bound: sup,
            k5_small_symbol: sup < 1.0,
        }
    }
}

fn bump_value<T: Real>(alpha: T, w: T, x: T) -> T {
    if x <= T::zero() || x >= w {
        return T::zero();
    }
    alpha * (T::lit(4.0) - w * w / (x * (w - x))).exp()
}

fn table_antiderivative<T: Real>(tab: &SampledTable<T>, x: T) -> T {
    let n = tab.xs.len();
    // Three Gauss points integrate each cubic piece exactly.
    let rule = GaussRule::<T>::legendre(3);
    let lo = tab.xs[0].max(T::zero());
    let hi = x.min(tab.xs[n - 1]);
    if hi <= lo {
        return T::zero();
    }
    let mut acc = T::zero();
    for i in 0..n - 1 {
        let a = tab.xs[i].max(lo);
        let b = tab.xs[i + 1].min(hi);
        if b > a {
            acc += rule.integrate(a, b, |s| tab.interp(i, s));
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelValidationReport {
    pub support_ok: bool,
    pub continuity_probe_max_jump: f64,
    pub estimated_growth_c: f64,
    pub fourier_sup_bound: f64,
    pub k5_small_symbol: bool,
}

impl KernelValidationReport {
    /// Only a support violation is fatal; jumps are handled by quadrature.
    pub fn passed(&self) -> bool {
        self.support_ok
    }
}

/// On-disk kernel description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFile {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    /// Bump only: normalize to this total mass instead of using `alpha`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<[f64; 2]>,
    #[serde(default = "default_interp_order")]
    pub interp_order: u8,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub kinks: Vec<f64>,
}

fn default_interp_order() -> u8 {
    3
}

impl KernelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn to_spec<T: Real>(&self) -> Result<KernelSpec<T>> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::InvalidSpec(format!("family {} needs `{name}`", self.family)))
        };
        match self.family.as_str() {
            "exp" => KernelSpec::exponential(
                T::lit(need(self.alpha, "alpha")?),
                T::lit(need(self.beta, "beta")?),
            ),
            "bump" => {
                let width = T::lit(need(self.width, "width")?);
                match (self.mass, self.alpha) {
                    (Some(mass), _) => KernelSpec::bump_with_mass(T::lit(mass), width),
                    (None, Some(alpha)) => KernelSpec::bump(T::lit(alpha), width),
                    (None, None) => Err(Error::InvalidSpec(
                        "family bump needs `alpha` or `mass`".into(),
                    )),
                }
            }
            "table" => {
                let xs = self.samples.iter().map(|s| T::lit(s[0])).collect();
                let ks = self.samples.iter().map(|s| T::lit(s[1])).collect();
                let kinks = self.kinks.iter().map(|&k| T::lit(k)).collect();
                KernelSpec::table(xs, ks, self.interp_order, T::lit(self.c), kinks)
            }
            other => Err(Error::InvalidSpec(format!("unknown family `{other}`"))),
        }
    }
}

impl<T: Real> KernelSpec<T> {
    /// Parses the JSON kernel description.
    pub fn from_json(text: &str) -> Result<Self> {
        KernelFile::from_json(text)?.to_spec()
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match &self.family {
            KernelFamily::Exponential { alpha, beta } => {
                format!("exp(alpha={}, beta={})", alpha.as_f64(), beta.as_f64())
            }
            KernelFamily::Bump { alpha, width } => {
                format!("bump(alpha={}, width={})", alpha.as_f64(), width.as_f64())
            }
            KernelFamily::SampledTable(tab) => {
                format!("table({} samples, order {})", tab.xs.len(), tab.order)
            }
        }
    }

    /// True when `K` has a jump somewhere (as opposed to a kink in `K′`).
    pub fn has_jump(&self) -> bool {
        match &self.family {
            KernelFamily::Exponential { .. } => true,
            KernelFamily::Bump { .. } => false,
            KernelFamily::SampledTable(tab) => {
                tab.ks[0] != T::zero() || *tab.ks.last().expect("nonempty") != T::zero()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BUMP_UNIT_MASS: f64 = 0.383_817_263_995_834_3;

    fn exp_kernel() -> KernelSpec<f64> {
        KernelSpec::exponential(0.5, 1.0).unwrap()
    }

    #[test]
    fn exponential_values() {
        let k = exp_kernel();
        assert_eq!(k.eval(-1.0), 0.0);
        assert_eq!(k.eval(0.0), 0.5);
        assert_eq!(k.eval_balanced(0.0), 0.25);
        assert!((k.deriv(1.0).unwrap() + 0.5 * (-1.0_f64).exp()).abs() < 1e-15);
        assert_eq!(k.deriv(0.0), Err(Error::KinkPoint { x: 0.0 }));
        assert!((k.integral(0.0, 1.0) - 0.5 * (1.0 - (-1.0_f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn bump_normalization() {
        let unit = KernelSpec::bump(1.0, 1.0).unwrap();
        assert!((unit.antiderivative(2.0) - BUMP_UNIT_MASS).abs() < 1e-15);
        let k = KernelSpec::bump_with_mass(0.9, 1.0).unwrap();
        let KernelFamily::Bump { alpha, .. } = k.family else { unreachable!() };
        assert!((alpha - 0.9 / BUMP_UNIT_MASS).abs() < 1e-13);
        assert!((k.eval(0.5) - alpha).abs() < 1e-15);
        assert_eq!(k.deriv(-0.5).unwrap(), 0.0);
        assert!(k.kinks.is_empty());
    }

    #[test]
    fn bump_antiderivative_matches_adaptive() {
        let k = KernelSpec::bump(2.0, 1.3).unwrap();
        let quad = AdaptiveGauss::new(1e-16);
        for x in [0.05, 0.31, 0.65, 0.9999, 1.2] {
            let r: f64 = quad.integrate(0.0, x, &[], None, |s| k.eval(s));
            assert!((k.antiderivative(x) - r).abs() < 1e-14, "x = {x}");
        }
    }

    #[test]
    fn fourier_closed_form_exponential() {
        let k = exp_kernel();
        let theta = k.fourier(Complex::new(0.0, 2.0), 1e-12).unwrap();
        assert!((theta - Complex::new(1.0 / 6.0, 0.0)).norm() < 1e-12);
        assert!(matches!(
            k.fourier(Complex::new(1.0, 0.0), 1e-12),
            Err(Error::Domain { .. })
        ));
        let theta = k.fourier(Complex::new(30.0, 1.0), 1e-12).unwrap();
        assert!((theta.norm() - 0.5 / (4.0_f64 + 900.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn validation_flags() {
        let r = exp_kernel().validate(201);
        assert!(r.k5_small_symbol && r.support_ok);
        assert!((r.fourier_sup_bound - 0.5 / 1.01).abs() < 1e-6);
        let r = KernelSpec::exponential(3.0, 1.0).unwrap().validate(201);
        assert!(!r.k5_small_symbol);
        let bad = KernelSpec::<f64>::table(vec![-0.5, 0.0, 1.0], vec![0.2, 0.1, 0.0], 1, 0.0, vec![])
            .unwrap();
        assert!(!bad.validate(32).support_ok);
        assert_eq!(bad.eval(-0.25), 0.0);
    }

    #[test]
    fn linear_table_is_piecewise_linear() {
        let k = KernelSpec::<f64>::table(vec![0.0, 1.0, 2.0], vec![1.0, 3.0, 0.0], 1, 0.0, vec![])
            .unwrap();
        assert!((k.eval(0.5) - 2.0).abs() < 1e-15);
        assert!((k.deriv(1.5).unwrap() + 3.0).abs() < 1e-15);
        assert!(k.deriv(1.0).is_err());
        assert!((k.integral(0.0, 2.0) - 3.5).abs() < 1e-15);
        assert_eq!(k.eval(2.5), 0.0);
    }

    #[test]
    fn cubic_table_reproduces_smooth_kernel() {
        let xs: Vec<f64> = (0..=200).map(|i| i as f64 * 0.02).collect();
        let ks: Vec<f64> = xs.iter().map(|&x| x * x * (-x).exp()).collect();
        let k = KernelSpec::table(xs, ks, 3, 0.0, vec![]).unwrap();
        for x in [0.33, 1.01, 2.5, 3.7] {
            assert!((k.eval(x) - x * x * (-x).exp()).abs() < 1e-6);
            let d = (2.0 * x - x * x) * (-x).exp();
            assert!((k.deriv(x).unwrap() - d).abs() < 1e-4);
        }
    }

    #[test]
    fn json_round_trip() {
        let k: KernelSpec<f64> =
            KernelSpec::from_json(r#"{"family":"bump","mass":0.9,"width":1.0}"#).unwrap();
        assert!((k.antiderivative(1.0) - 0.9).abs() < 1e-14);
        assert!(KernelSpec::<f64>::from_json(r#"{"family":"exp","alpha":0.5}"#).is_err());
        assert!(KernelSpec::<f64>::from_json(r#"{"family":"nope"}"#).is_err());
        let k: KernelSpec<f32> =
            KernelSpec::from_json(r#"{"family":"exp","alpha":0.5,"beta":1.0}"#).unwrap();
        assert_eq!(k.eval(0.0), 0.5_f32);
    }
}
