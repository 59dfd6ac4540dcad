//! Fredholm determinants `det(I ± K[t])`, the Hamiltonian `diag(1/γ, γ)`,
//! the spectrum of the truncated operator, and invertibility certificates.

use nalgebra::linalg::{SymmetricEigen, LU};
use nalgebra::{DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::quadrature::{assemble_nystrom, grid_for, NystromMatrix, Resolution};
use crate::scalar::Real;

/// Determinants below this magnitude are treated as singular.
pub const SINGULAR_DET: f64 = 1e-13;

/// Linear solves with a larger condition estimate are refused.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }

    pub fn value<T: Real>(self) -> T {
        match self {
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }
}

/// `det(I + sign·M)` of the plain symmetric matrix by partially pivoted LU.
pub fn fredholm_det<T: Real>(m: &NystromMatrix<T>, sign: Sign) -> Result<T> {
    let a = shifted(&m.entries, sign);
    let det = a.lu().determinant();
    check_det(det, sign)?;
    Ok(det)
}

fn shifted<T: Real>(m: &DMatrix<T>, sign: Sign) -> DMatrix<T> {
    let s = sign.value::<T>();
    let mut a = m * s;
    for i in 0..a.nrows() {
        a[(i, i)] += T::one();
    }
    a
}

fn check_det<T: Real>(det: T, sign: Sign) -> Result<()> {
    if !(det.abs() >= T::lit(SINGULAR_DET)) {
        return Err(Error::NearSingular {
            sign: sign.symbol(),
            det: det.as_f64(),
        });
    }
    Ok(())
}

/// Hager's estimate of `‖A⁻¹‖₁` from the LU factors, treating `A` as
/// symmetric (exactly so up to the local kink corrections).
fn inverse_norm1_estimate<T: Real>(lu: &LU<T, Dyn, Dyn>, n: usize) -> T {
    let mut x = DVector::from_element(n, T::one() / T::count(n));
    let mut est = T::zero();
    for _ in 0..5 {
        let Some(y) = lu.solve(&x) else {
            return T::max_value().unwrap_or(T::one() / T::default_epsilon());
        };
        est = y.iter().fold(T::zero(), |acc, v| acc + v.abs());
        let xi = y.map(|v| if v >= T::zero() { T::one() } else { -T::one() });
        let Some(z) = lu.solve(&xi) else { break };
        let (j, zmax) = z
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bj, bv), (j, v)| {
                if v.abs() > bv {
                    (j, v.abs())
                } else {
                    (bj, bv)
                }
            });
        if zmax <= z.dot(&x) {
            break;
        }
        x = DVector::zeros(n);
        x[j] = T::one();
    }
    est
}

fn norm1<T: Real>(a: &DMatrix<T>) -> T {
    a.column_iter()
        .map(|c| c.iter().fold(T::zero(), |acc, v| acc + v.abs()))
        .fold(T::zero(), |a, b| a.max(b))
}

/// Factored `I ± K[t]` on one grid, shared by every solve at this `t`.
#[derive(Debug, Clone)]
pub struct FredholmOperator<T: Real> {
    pub t: T,
    pub nystrom: NystromMatrix<T>,
    plus: LU<T, Dyn, Dyn>,
    minus: LU<T, Dyn, Dyn>,
    pub det_plus: T,
    pub det_minus: T,
    pub cond_plus: T,
    pub cond_minus: T,
}

impl<T: Real> FredholmOperator<T> {
    /// Assembles and factors `I ± M` at `t > 0`.
    ///
    /// Fails with `K5Violation` when either determinant is numerically zero
    /// or has left the positive branch it starts on at `t = 0`.
    pub fn new(spec: &KernelSpec<T>, t: T, res: &Resolution) -> Result<Self> {
        if !(t > T::zero()) {
            return Err(Error::domain("FredholmOperator::new", "requires t > 0"));
        }
        let nystrom = assemble_nystrom(spec, grid_for(spec, t, res));
        let n = nystrom.grid.len();
        let corrected = nystrom.corrected(spec);
        let a_plus = shifted(&corrected, Sign::Plus);
        let a_minus = shifted(&corrected, Sign::Minus);
        let (n1p, n1m) = (norm1(&a_plus), norm1(&a_minus));
        let plus = a_plus.lu();
        let minus = a_minus.lu();
        let det_plus = plus.determinant();
        let det_minus = minus.determinant();
        for (det, sign) in [(det_plus, Sign::Plus), (det_minus, Sign::Minus)] {
            if let Err(e) = check_det(det, sign) {
                return Err(Error::K5Violation {
                    t: t.as_f64(),
                    reason: e.to_string(),
                });
            }
            if det < T::zero() {
                return Err(Error::K5Violation {
                    t: t.as_f64(),
                    reason: format!(
                        "det(I {} K[t]) = {:e} changed sign, so an eigenvalue crossed {}1",
                        sign.symbol(),
                        det.as_f64(),
                        if sign == Sign::Plus { '-' } else { '+' }
                    ),
                });
            }
        }
        let cond_plus = n1p * inverse_norm1_estimate(&plus, n);
        let cond_minus = n1m * inverse_norm1_estimate(&minus, n);
        let worst = cond_plus.max(cond_minus);
        if !(worst <= T::lit(MAX_CONDITION)) {
            return Err(Error::LinearSolveFailure {
                t: t.as_f64(),
                cond: worst.as_f64(),
            });
        }
        Ok(Self {
            t,
            nystrom,
            plus,
            minus,
            det_plus,
            det_minus,
            cond_plus,
            cond_minus,
        })
    }

    pub fn grid(&self) -> &crate::quadrature::QuadratureGrid<T> {
        &self.nystrom.grid
    }

    /// Solves `(I + sign·K_N) u = f` for node values `u` given node values `f`.
    pub fn solve(&self, sign: Sign, f: &[T]) -> Vec<T> {
        let g = &self.nystrom.grid;
        let rhs = DVector::from_iterator(
            f.len(),
            f.iter().zip(&g.sqrt_weights).map(|(&v, &s)| v * s),
        );
        let lu = match sign {
            Sign::Plus => &self.plus,
            Sign::Minus => &self.minus,
        };
        let v = lu.solve(&rhs).expect("factor checked nonsingular");
        v.iter().zip(&g.sqrt_weights).map(|(&v, &s)| v / s).collect()
    }

    /// Solves for a real and an imaginary right-hand side at once.
    pub fn solve_pair(&self, sign: Sign, re: &[T], im: &[T]) -> (Vec<T>, Vec<T>) {
        (self.solve(sign, re), self.solve(sign, im))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSample<T> {
    pub t: T,
    pub det_plus: T,
    pub det_minus: T,
    pub m: T,
    pub gamma: T,
    pub h11: T,
    pub h22: T,
    /// Total quadrature nodes (0 in the closed-form regime `t ≤ 0`).
    pub nodes: usize,
    pub panels: usize,
}

impl<T: Real> HamiltonianSample<T> {
    fn identity(t: T) -> Self {
        let one = T::one();
        Self {
            t,
            det_plus: one,
            det_minus: one,
            m: one,
            gamma: one,
            h11: one,
            h22: one,
            nodes: 0,
            panels: 0,
        }
    }

    pub fn from_operator(op: &FredholmOperator<T>) -> Self {
        let m = op.det_plus / op.det_minus;
        let gamma = m * m;
        Self {
            t: op.t,
            det_plus: op.det_plus,
            det_minus: op.det_minus,
            m,
            gamma,
            h11: T::one() / gamma,
            h22: gamma,
            nodes: op.grid().len(),
            panels: op.grid().panels.len(),
        }
    }
}

/// `m(t) = det(I+K[t])/det(I−K[t])`, `γ = m²` and `H = diag(1/γ, γ)`.
pub fn hamiltonian_at<T: Real>(spec: &KernelSpec<T>, t: T, res: &Resolution) -> Result<HamiltonianSample<T>> {
    if t <= T::zero() {
        return Ok(HamiltonianSample::identity(t));
    }
    let op = FredholmOperator::new(spec, t, res)?;
    Ok(HamiltonianSample::from_operator(&op))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianCurve<T> {
    pub samples: Vec<HamiltonianSample<T>>,
    /// Largest `|m(t_{k+1}) − m(t_k)|` along the grid.
    pub max_step_change: T,
}

/// Samples along an increasing `t` grid; stops at the first failing `t`.
pub fn hamiltonian_curve<T: Real>(
    spec: &KernelSpec<T>,
    t_grid: &[T],
    res: &Resolution,
) -> Result<HamiltonianCurve<T>> {
    let results: Vec<Result<HamiltonianSample<T>>> = t_grid
        .par_iter()
        .map(|&t| hamiltonian_at(spec, t, res))
        .collect();
    let mut samples = Vec::with_capacity(results.len());
    for r in results {
        samples.push(r?);
    }
    let max_step_change = samples
        .windows(2)
        .map(|p| (p[1].m - p[0].m).abs())
        .fold(T::zero(), |a, b| a.max(b));
    Ok(HamiltonianCurve {
        samples,
        max_step_change,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport<T> {
    pub t: T,
    /// All eigenvalues, ascending.
    pub eigenvalues: Vec<T>,
    /// Positive eigenvalues, largest first.
    pub lambda_plus: Vec<T>,
    /// Negative eigenvalues, most negative first.
    pub lambda_minus: Vec<T>,
    pub op_norm: T,
    pub gap_to_one: T,
    /// `Σ_ij M_ij²`.
    pub frobenius_sq: T,
}

impl<T: Real> SpectrumReport<T> {
    fn empty(t: T) -> Self {
        Self {
            t,
            eigenvalues: Vec::new(),
            lambda_plus: Vec::new(),
            lambda_minus: Vec::new(),
            op_norm: T::zero(),
            gap_to_one: T::one(),
            frobenius_sq: T::zero(),
        }
    }

    pub fn top_positive(&self) -> T {
        self.lambda_plus.first().copied().unwrap_or(T::zero())
    }
}

/// Full symmetric eigendecomposition of the Nyström matrix at `t`.
///
/// For `t ≤ 0` the operator vanishes and the report is empty.
pub fn spectrum_at<T: Real>(spec: &KernelSpec<T>, t: T, res: &Resolution) -> SpectrumReport<T> {
    if t <= T::zero() {
        return SpectrumReport::empty(t);
    }
    let m = assemble_nystrom(spec, grid_for(spec, t, res));
    spectrum_of(&m)
}

pub fn spectrum_of<T: Real>(m: &NystromMatrix<T>) -> SpectrumReport<T> {
    let frobenius_sq = m.entries.iter().fold(T::zero(), |acc, v| acc + *v * *v);
    let eig = SymmetricEigen::new(m.entries.clone());
    let mut eigenvalues: Vec<T> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    let lambda_plus: Vec<T> = eigenvalues.iter().rev().copied().filter(|&v| v > T::zero()).collect();
    let lambda_minus: Vec<T> = eigenvalues.iter().copied().filter(|&v| v < T::zero()).collect();
    let op_norm = eigenvalues.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    SpectrumReport {
        t: m.t,
        eigenvalues,
        lambda_plus,
        lambda_minus,
        op_norm,
        gap_to_one: T::one() - op_norm,
        frobenius_sq,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct K5Certificate<T> {
    /// Smallest `1 − ‖K[t]‖` on the grid; 1 for an empty grid.
    pub min_gap: T,
    pub gaps: Vec<(T, T)>,
}

impl<T: Real> K5Certificate<T> {
    pub fn passed(&self) -> bool {
        self.min_gap > T::zero()
    }
}

/// Checks that `±1` stay away from the spectrum of `K[t]` on `t_grid`.
pub fn k5_certificate<T: Real>(spec: &KernelSpec<T>, t_grid: &[T], res: &Resolution) -> K5Certificate<T> {
    let gaps: Vec<(T, T)> = t_grid
        .par_iter()
        .map(|&t| (t, spectrum_at(spec, t, res).gap_to_one))
        .collect();
    let min_gap = gaps.iter().fold(T::one(), |a, &(_, g)| a.min(g));
    K5Certificate { min_gap, gaps }
}
