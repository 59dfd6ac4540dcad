//! Gauss–Legendre rules and an adaptive composite integrator.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cabs, Real};

/// Gauss–Legendre rule on the reference interval `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussRule<T> {
    /// Builds the `n`-point rule by Newton iteration on the Legendre
    /// three-term recurrence.
    pub fn legendre(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = T::count(n);
        let one = T::one();
        let two = T::lit(2.0);
        let eps = T::default_epsilon() * T::lit(4.0);
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, nodes in decreasing order.
            let mut x = (T::pi() * (T::count(i) + T::lit(0.75)) / (nf + T::lit(0.5))).cos();
            let mut dp = one;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= eps {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = two / ((one - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = T::zero();
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn reference_nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn reference_weights(&self) -> &[T] {
        &self.weights
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> (Vec<T>, Vec<T>) {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        let x = self.nodes.iter().map(|&s| mid + half * s).collect();
        let w = self.weights.iter().map(|&w| half * w).collect();
        (x, w)
    }

    /// Applies the rule to `f` on `[a, b]`.
    pub fn integrate<V, F>(&self, a: T, b: T, mut f: F) -> V
    where
        V: QuadValue<T>,
        F: FnMut(T) -> V,
    {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        let mut acc = V::zero();
        for (&s, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(mid + half * s) * (w * half);
        }
        acc
    }
}

/// `(P_n(x), P_n'(x))`.
fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let one = T::one();
    let mut p0 = one;
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::count(k);
        let p2 = ((T::lit(2.0) * kf - one) * x * p1 - (kf - one) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (one, T::zero());
    }
    let nf = T::count(n);
    let d = nf * (x * p1 - p0) / (x * x - one);
    (p1, d)
}

/// Gauss–Legendre nodes and weights of order `n` on `[a, b]`.
pub fn gauss_nodes<T: Real>(n: usize, a: T, b: T) -> Result<(Vec<T>, Vec<T>)> {
    if n == 0 {
        return Err(Error::domain("gauss_nodes", "node count must be at least 1"));
    }
    if !(a < b) {
        return Err(Error::InvalidInterval {
            a: a.as_f64(),
            b: b.as_f64(),
        });
    }
    Ok(GaussRule::legendre(n).mapped(a, b))
}

/// Values that can be accumulated by a quadrature rule.
pub trait QuadValue<T>: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<T, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> T;
}

impl<T: Real> QuadValue<T> for T {
    fn zero() -> Self {
        T::zero()
    }
    fn magnitude(&self) -> T {
        self.abs()
    }
}

impl<T: Real> QuadValue<T> for Complex<T> {
    fn zero() -> Self {
        Complex::new(T::zero(), T::zero())
    }
    fn magnitude(&self) -> T {
        cabs(*self)
    }
}

/// Adaptive composite Gauss–Legendre integration.
///
/// Each panel is accepted when the 16- and 32-point rules agree to
/// `abs_tol + rel_tol·|I|`; otherwise it is bisected.
#[derive(Debug, Clone)]
pub struct AdaptiveGauss<T> {
    low: GaussRule<T>,
    high: GaussRule<T>,
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_depth: usize,
}

impl<T: Real> AdaptiveGauss<T> {
    pub fn new(abs_tol: T) -> Self {
        Self {
            low: GaussRule::legendre(16),
            high: GaussRule::legendre(32),
            abs_tol,
            rel_tol: T::default_epsilon() * T::lit(64.0),
            max_depth: 40,
        }
    }

    /// Integrates over `[a, b]`, first splitting at the sorted `breaks`
    /// that fall strictly inside and at most every `max_width`.
    pub fn integrate<V, F>(&self, a: T, b: T, breaks: &[T], max_width: Option<T>, mut f: F) -> V
    where
        V: QuadValue<T>,
        F: FnMut(T) -> V,
    {
        if !(a < b) {
            return V::zero();
        }
        let mut edges = vec![a];
        let mut inner: Vec<T> = breaks.iter().copied().filter(|&p| p > a && p < b).collect();
        inner.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
        edges.extend(inner);
        edges.push(b);
        let mut total = V::zero();
        for pair in edges.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if !(hi > lo) {
                continue;
            }
            let pieces = match max_width {
                Some(wmax) if wmax > T::zero() => {
                    
                    ((hi - lo) / wmax).ceil().as_f64().max(1.0) as usize
                }
                _ => 1,
            };
            let step = (hi - lo) / T::count(pieces);
            for k in 0..pieces {
                let p = lo + step * T::count(k);
                let q = if k + 1 == pieces { hi } else { p + step };
                total = total + self.panel(p, q, &mut f, 0);
            }
        }
        total
    }

    fn panel<V, F>(&self, a: T, b: T, f: &mut F, depth: usize) -> V
    where
        V: QuadValue<T>,
        F: FnMut(T) -> V,
    {
        let coarse: V = self.low.integrate(a, b, &mut *f);
        let fine: V = self.high.integrate(a, b, &mut *f);
        let err = (fine - coarse).magnitude();
        let scale = self.abs_tol + self.rel_tol * fine.magnitude();
        if err <= scale || depth >= self.max_depth {
            return fine;
        }
        let mid = (a + b) * T::lit(0.5);
        self.panel(a, mid, f, depth + 1) + self.panel(mid, b, f, depth + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_point_rule_is_midpoint() {
        let (x, w) = gauss_nodes(1, -1.0_f64, 1.0).unwrap();
        assert_eq!(x, vec![0.0]);
        assert!((w[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn two_point_rule() {
        let (x, w) = gauss_nodes(2, -1.0_f64, 1.0).unwrap();
        assert!((x[0] + 0.577_350_269_189_625_8).abs() < 1e-15);
        assert!((x[1] - 0.577_350_269_189_625_8).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn three_point_rule_integrates_quartic() {
        let (x, w) = gauss_nodes(3, 0.0_f64, 2.0).unwrap();
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((s - 6.4).abs() < 1e-14);
    }

    #[test]
    fn invalid_interval_rejected() {
        assert!(matches!(
            gauss_nodes(4, 1.0_f64, 1.0),
            Err(Error::InvalidInterval { .. })
        ));
        assert!(gauss_nodes(0, 0.0_f64, 1.0).is_err());
    }

    #[test]
    fn high_order_weights_sum_to_length() {
        for n in [5, 16, 64, 128] {
            let (x, w) = gauss_nodes(n, -3.0_f64, 1.0).unwrap();
            let s: f64 = w.iter().sum();
            assert!((s - 4.0).abs() < 1e-13, "n = {n}: {s}");
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            assert!(w.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn adaptive_handles_breaks_and_complex_values() {
        let quad = AdaptiveGauss::new(1e-14_f64);
        // |x - 0.3| has a kink; splitting at it makes the rule exact.
        let v: f64 = quad.integrate(0.0, 1.0, &[0.3], None, |x| (x - 0.3_f64).abs());
        assert!((v - (0.045 + 0.245)).abs() < 1e-14);
        let z: Complex<f64> = quad.integrate(0.0, 20.0, &[], Some(1.0), |x| {
            Complex::new(0.0, 3.0 * x).exp() * (-x).exp()
        });
        let exact = (Complex::new(-1.0, 3.0) * 20.0).exp() / Complex::new(-1.0, 3.0)
            - Complex::new(1.0, 0.0) / Complex::new(-1.0, 3.0);
        assert!((z - exact).norm() < 1e-13);
    }

    #[test]
    fn single_precision_rule() {
        let (x, w) = gauss_nodes(8, -1.0_f32, 1.0).unwrap();
        let s: f32 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert!((s - 2.0 / 3.0).abs() < 1e-6);
    }
}
