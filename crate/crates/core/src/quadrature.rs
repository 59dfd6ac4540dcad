//! Panel grids on `[-t, t]` and the symmetric Nyström matrix of `K(x + y)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::gauss::{GaussRule, QuadValue};
use crate::kernels::KernelSpec;
use crate::scalar::Real;

/// How finely `[-t, t]` is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub nodes_per_panel: usize,
    /// Lower bound on the total panel count; rounded up to an even number.
    pub min_panels: usize,
    /// Panels wider than this are subdivided.
    pub max_panel_width: Option<f64>,
    /// Fixes the number of panels on each half of the interval, so that
    /// grids at nearby `t` have the same layout (finite-difference stencils).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_panels: Option<usize>,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            nodes_per_panel: 64,
            min_panels: 2,
            max_panel_width: Some(0.5),
            half_panels: None,
        }
    }
}

impl Resolution {
    pub fn new(nodes_per_panel: usize, min_panels: usize) -> Self {
        Self {
            nodes_per_panel,
            min_panels,
            ..Self::default()
        }
    }

    /// Same layout rule, twice the nodes per panel.
    pub fn doubled(&self) -> Self {
        Self {
            nodes_per_panel: self.nodes_per_panel * 2,
            ..*self
        }
    }

    /// Panels per half-interval the rule assigns at `t`.
    pub fn half_panels_at(&self, t: f64) -> usize {
        if let Some(k) = self.half_panels {
            return k.max(1);
        }
        let from_min = self.min_panels.div_ceil(2).max(1);
        let from_width = match self.max_panel_width {
            Some(w) if w > 0.0 && t > 0.0 => (t / w).ceil() as usize,
            _ => 1,
        };
        from_min.max(from_width)
    }

    /// Layout frozen at the value chosen for `t`.
    pub fn frozen_at(&self, t: f64) -> Self {
        Self {
            half_panels: Some(self.half_panels_at(t)),
            ..*self
        }
    }
}

/// Gauss–Legendre panel grid on `[-t, t]`, symmetric under `x ↦ -x`.
#[derive(Debug, Clone)]
pub struct QuadratureGrid<T> {
    pub t: T,
    pub panels: Vec<(T, T)>,
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
    pub sqrt_weights: Vec<T>,
    pub order_per_panel: usize,
    rule: GaussRule<T>,
    barycentric: Vec<T>,
}

impl<T: Real> QuadratureGrid<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i f(x_i)`.
    pub fn sum<F: FnMut(T) -> T>(&self, mut f: F) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }

    /// Panel holding `p` strictly inside, away from its edges.
    fn panel_of(&self, p: T) -> Option<usize> {
        let k = self.panels.partition_point(|&(_, b)| b <= p);
        let &(a, b) = self.panels.get(k)?;
        let guard = (b - a) * T::default_epsilon() * T::lit(64.0);
        (p - a > guard && b - p > guard).then_some(k)
    }

    /// Points where `y ↦ K(x + y)` is not smooth, grouped by the panel
    /// whose interior they fall in.
    fn interior_breaks(&self, spec: &KernelSpec<T>, x: T) -> Vec<(usize, Vec<T>)> {
        let mut out: Vec<(usize, Vec<T>)> = Vec::new();
        for &lam in &spec.kinks {
            let p = lam - x;
            if let Some(k) = self.panel_of(p) {
                match out.iter_mut().find(|e| e.0 == k) {
                    Some(e) => e.1.push(p),
                    None => out.push((k, vec![p])),
                }
            }
        }
        for e in &mut out {
            e.1.sort_by(|a, b| a.partial_cmp(b).expect("finite breaks"));
        }
        out
    }

    /// Weights `c_j` with `∫_panel K(x + y) u(y) dy ≈ Σ c_j u_j`, integrating
    /// the panel's Lagrange basis against `K` piecewise between `breaks`.
    fn corrected_panel(&self, spec: &KernelSpec<T>, x: T, k: usize, breaks: &[T]) -> Vec<T> {
        let n = self.order_per_panel;
        let (a, b) = self.panels[k];
        let refs = self.rule.reference_nodes();
        let scale = T::lit(2.0) / (b - a);
        let mut out = vec![T::zero(); n];
        let mut basis = vec![T::zero(); n];
        let mut edges = vec![a];
        edges.extend_from_slice(breaks);
        edges.push(b);
        for seg in edges.windows(2) {
            let (ys, ws) = self.rule.mapped(seg[0], seg[1]);
            for (&y, &wq) in ys.iter().zip(&ws) {
                let kv = spec.eval(x + y) * wq;
                let s = (y - a) * scale - T::one();
                lagrange_basis(refs, &self.barycentric, s, &mut basis);
                for (o, &l) in out.iter_mut().zip(&basis) {
                    *o += kv * l;
                }
            }
        }
        out
    }

    /// Weights `c_j(x)` with `∫_{-t}^{t} K(x + y) u(y) dy ≈ Σ c_j u_j`.
    ///
    /// Away from the kernel's kinks these are `w_j K(x + y_j)`; on a panel
    /// crossed by a kink of `y ↦ K(x + y)` they are replaced by product
    /// integration, which keeps the rule spectrally accurate there.
    pub fn kernel_row(&self, spec: &KernelSpec<T>, x: T) -> Vec<T> {
        let mut row: Vec<T> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&y, &w)| w * spec.eval_balanced(x + y))
            .collect();
        let n = self.order_per_panel;
        for (k, breaks) in self.interior_breaks(spec, x) {
            let c = self.corrected_panel(spec, x, k, &breaks);
            row[k * n..(k + 1) * n].copy_from_slice(&c);
        }
        row
    }

    /// `∫_{-t}^{t} K(x + y) u(y) dy` for `u` given at the nodes.
    pub fn apply_kernel<V: QuadValue<T>>(&self, spec: &KernelSpec<T>, x: T, values: &[V]) -> V {
        let breaks = self.interior_breaks(spec, x);
        if breaks.is_empty() {
            return self
                .nodes
                .iter()
                .zip(&self.weights)
                .zip(values)
                .fold(V::zero(), |acc, ((&y, &w), &u)| acc + u * (w * spec.eval_balanced(x + y)));
        }
        self.kernel_row(spec, x)
            .iter()
            .zip(values)
            .fold(V::zero(), |acc, (&c, &u)| acc + u * c)
    }
}

/// Barycentric weights of the Gauss–Legendre nodes,
/// `(−1)^j √((1 − s_j²) w_j)`, for increasing nodes.
fn barycentric_weights<T: Real>(rule: &GaussRule<T>) -> Vec<T> {
    rule.reference_nodes()
        .iter()
        .zip(rule.reference_weights())
        .enumerate()
        .map(|(j, (&s, &w))| {
            let v = ((T::one() - s * s) * w).sqrt();
            if j % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect()
}

/// Lagrange basis at `s` through the nodes, by the barycentric formula.
fn lagrange_basis<T: Real>(nodes: &[T], bary: &[T], s: T, out: &mut [T]) {
    if let Some(j) = nodes.iter().position(|&x| x == s) {
        out.fill(T::zero());
        out[j] = T::one();
        return;
    }
    let mut denom = T::zero();
    for ((o, &x), &l) in out.iter_mut().zip(nodes).zip(bary) {
        *o = l / (s - x);
        denom += *o;
    }
    for o in out.iter_mut() {
        *o /= denom;
    }
}

/// Breakpoints inside `(-t, 0)` induced by the kernel's non-smooth points:
/// `λ − t`, `t − λ` and `±λ/2` for each `λ`, folded onto the negative half.
fn negative_breaks<T: Real>(spec: &KernelSpec<T>, t: T) -> Vec<T> {
    let half = T::lit(0.5);
    let mut out = Vec::new();
    for &lam in &spec.kinks {
        for p in [lam - t, t - lam, lam * half] {
            let q = -p.abs();
            if q > -t && q < T::zero() {
                out.push(q);
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    // Merge points too close to form a sensible panel.
    let min_gap = t * T::lit(1e-6);
    let mut merged: Vec<T> = Vec::new();
    for p in out {
        if merged.last().is_none_or(|&l| p - l > min_gap) && -p > min_gap {
            merged.push(p);
        }
    }
    if let Some(&first) = merged.first() {
        if first + t <= min_gap {
            merged.remove(0);
        }
    }
    merged
}

/// Splits `[-t, 0]` at `breaks` into exactly `count` panels (or more, if
/// there are more break intervals than `count`), refining the widest pieces.
fn negative_panels<T: Real>(t: T, breaks: &[T], count: usize) -> Vec<(T, T)> {
    let mut edges = vec![-t];
    edges.extend_from_slice(breaks);
    edges.push(T::zero());
    let spans: Vec<(T, T)> = edges.windows(2).map(|p| (p[0], p[1])).collect();
    let mut pieces = vec![1usize; spans.len()];
    let mut total = spans.len();
    while total < count {
        // Give one more piece to the span with the largest current width.
        let mut best = 0;
        let mut best_w = T::zero();
        for (k, &(a, b)) in spans.iter().enumerate() {
            let w = (b - a) / T::count(pieces[k]);
            if w > best_w {
                best_w = w;
                best = k;
            }
        }
        pieces[best] += 1;
        total += 1;
    }
    let mut panels = Vec::with_capacity(total);
    for (&(a, b), &n) in spans.iter().zip(&pieces) {
        let step = (b - a) / T::count(n);
        for k in 0..n {
            let lo = a + step * T::count(k);
            let hi = if k + 1 == n { b } else { lo + step };
            panels.push((lo, hi));
        }
    }
    panels
}

fn assemble_grid<T: Real>(t: T, negative: Vec<(T, T)>, n: usize) -> QuadratureGrid<T> {
    let rule = GaussRule::<T>::legendre(n);
    let mut neg_nodes = Vec::with_capacity(negative.len() * n);
    let mut neg_weights = Vec::with_capacity(negative.len() * n);
    for &(a, b) in &negative {
        let (x, w) = rule.mapped(a, b);
        neg_nodes.extend(x);
        neg_weights.extend(w);
    }
    // Mirror by exact negation so node sums x_i + x_j hit 0 exactly.
    let mut panels = negative.clone();
    panels.extend(negative.iter().rev().map(|&(a, b)| (-b, -a)));
    let mut nodes = neg_nodes.clone();
    nodes.extend(neg_nodes.iter().rev().map(|&x| -x));
    let mut weights = neg_weights.clone();
    weights.extend(neg_weights.iter().rev().copied());
    let sqrt_weights = weights.iter().map(|w| w.sqrt()).collect();
    let barycentric = barycentric_weights(&rule);
    QuadratureGrid {
        t,
        panels,
        nodes,
        weights,
        sqrt_weights,
        order_per_panel: n,
        rule,
        barycentric,
    }
}

/// Grid on `[-t, t]` with `n` nodes per panel, split at the kernel's
/// mapped kinks and refined to at least `min_panels` panels.
pub fn build_grid<T: Real>(spec: &KernelSpec<T>, t: T, n: usize, min_panels: usize) -> QuadratureGrid<T> {
    grid_for(
        spec,
        t,
        &Resolution {
            nodes_per_panel: n,
            min_panels,
            max_panel_width: None,
            half_panels: None,
        },
    )
}

/// Grid on `[-t, t]` following a [`Resolution`] policy.
pub fn grid_for<T: Real>(spec: &KernelSpec<T>, t: T, res: &Resolution) -> QuadratureGrid<T> {
    assert!(t > T::zero(), "grid requires t > 0");
    assert!(res.nodes_per_panel >= 1, "need at least one node per panel");
    let breaks = negative_breaks(spec, t);
    let count = res.half_panels_at(t.as_f64());
    assemble_grid(t, negative_panels(t, &breaks, count), res.nodes_per_panel)
}

/// Symmetric Nyström discretization `M_ij = √w_i K(x_i + x_j) √w_j`.
///
/// This plain form is what the spectral diagnostics use. Linear solves and
/// determinants go through [`NystromMatrix::corrected`].
#[derive(Debug, Clone)]
pub struct NystromMatrix<T: Real> {
    pub t: T,
    pub entries: DMatrix<T>,
    pub grid: QuadratureGrid<T>,
}

pub fn assemble_nystrom<T: Real>(spec: &KernelSpec<T>, grid: QuadratureGrid<T>) -> NystromMatrix<T> {
    let n = grid.len();
    let mut m = DMatrix::<T>::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let k = spec.eval_balanced(grid.nodes[i] + grid.nodes[j]);
            let v = grid.sqrt_weights[i] * k * grid.sqrt_weights[j];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    NystromMatrix {
        t: grid.t,
        entries: m,
        grid,
    }
}

impl<T: Real> NystromMatrix<T> {
    /// `W^{1/2} C W^{-1/2}` with `C_ij = c_j(x_i)` from
    /// [`QuadratureGrid::kernel_row`]: the plain entries, except on panels
    /// crossed by a kink, where product-integration weights replace them.
    /// Similar to the discretized operator, so determinants are unchanged
    /// by the scaling.
    pub fn corrected(&self, spec: &KernelSpec<T>) -> DMatrix<T> {
        let g = &self.grid;
        let n = g.order_per_panel;
        let mut out = self.entries.clone();
        for i in 0..g.len() {
            let x = g.nodes[i];
            for (k, breaks) in g.interior_breaks(spec, x) {
                let c = g.corrected_panel(spec, x, k, &breaks);
                for (jj, &cj) in c.iter().enumerate() {
                    let j = k * n + jj;
                    out[(i, j)] = g.sqrt_weights[i] * cj / g.sqrt_weights[j];
                }
            }
        }
        out
    }
}
