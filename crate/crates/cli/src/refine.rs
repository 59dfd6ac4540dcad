//! Convergence studies: one identity rerun over increasing resolutions.

use canham_core::fields::FieldSet;
use canham_core::kernels::INFINITE_SMOOTHNESS;
use canham_core::{canonical, modelspace, Complex64, Kernel, Resolution};
use serde::Serialize;

use crate::error::CliError;

/// Identities `refine` knows how to rerun.
pub const REFINABLE: [&str; 4] = [
    "determinant_identity",
    "boundary_identity",
    "theta_consistency",
    "energy_identity",
];

/// Errors below this are rounding noise and get no order.
pub const NOISE_FLOOR: f64 = 1e-12;

/// Errors within this factor of the finest level's error are treated as
/// the method's floor (quadrature tolerance, tail truncation) and get no
/// order either.
pub const FLOOR_FACTOR: f64 = 10.0;

/// Minimal acceptable order for a kernel whose first `p` derivatives
/// vanish at the origin.
pub fn order_floor(smoothness_class: u32) -> f64 {
    match smoothness_class {
        0 => 1.5,
        INFINITE_SMOOTHNESS => 6.0,
        p => (1.5 + p as f64).min(6.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineLevel {
    pub nodes_per_panel: usize,
    /// Identity residual at this level.
    pub residual: f64,
    /// Distance of the tracked quantity from its value at the finest level.
    pub drift: f64,
    /// `residual + drift`.
    pub error: f64,
    /// Order against the previous level; `None` once either error sits at
    /// the floor.
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineStudy {
    pub identity: String,
    pub order_floor: f64,
    pub levels: Vec<RefineLevel>,
}

impl RefineStudy {
    /// Orders that fall below the floor.
    pub fn slow_orders(&self) -> Vec<f64> {
        self.levels
            .iter()
            .filter_map(|l| l.observed_order)
            .filter(|&p| p < self.order_floor)
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.slow_orders().is_empty()
    }
}

/// Residual and tracked quantity of `identity` at one resolution.
fn measure(
    spec: &Kernel,
    identity: &str,
    res: &Resolution,
    z: Complex64,
    w: Complex64,
    r_nodes: usize,
) -> Result<(f64, f64), CliError> {
    let t = 1.0;
    Ok(match identity {
        "determinant_identity" => {
            let set = FieldSet::solve(spec, t, res)?;
            let r = (set.m_det - 1.0 / set.phi.boundary_value)
                .abs()
                .max((set.m_det - set.psi.boundary_value).abs());
            (r, set.m_det)
        }
        "boundary_identity" => {
            let r = modelspace::boundary_identity(spec, t, z, res)?.total();
            let a = modelspace::solve_projection_eqs(spec, t, z, res)?.a_z_at_t;
            (r, a.re)
        }
        "theta_consistency" => {
            let r = canonical::theta_consistency(spec, z, res)?;
            (r.residual.max(r.unit_residual), 0.0)
        }
        "energy_identity" => {
            let e = modelspace::energy_identity(spec, 0.5, 1.5, z, w, r_nodes, res)?;
            (e.residual, e.lhs.re)
        }
        other => {
            return Err(CliError::Usage(format!(
                "cannot refine `{other}`; expected one of {}",
                REFINABLE.join(", ")
            )))
        }
    })
}

/// Reruns `identity` with each entry of `levels` as nodes per panel.
pub fn refine(
    spec: &Kernel,
    identity: &str,
    levels: &[usize],
    min_panels: usize,
    z: Complex64,
    w: Complex64,
    r_nodes: usize,
) -> Result<RefineStudy, CliError> {
    if !REFINABLE.contains(&identity) {
        return Err(CliError::Usage(format!(
            "cannot refine `{identity}`; expected one of {}",
            REFINABLE.join(", ")
        )));
    }
    if levels.len() < 2 {
        return Err(CliError::Usage(format!(
            "a refinement study needs at least 2 levels, got {}",
            levels.len()
        )));
    }
    if levels.windows(2).any(|p| p[1] <= p[0]) || levels[0] == 0 {
        return Err(CliError::Usage("refinement levels must be positive and increasing".into()));
    }
    let raw = levels
        .iter()
        .map(|&n| measure(spec, identity, &Resolution::new(n, min_panels), z, w, r_nodes))
        .collect::<Result<Vec<_>, _>>()?;
    let (last_residual, finest) = *raw.last().expect("at least two levels");
    let floor = NOISE_FLOOR.max(FLOOR_FACTOR * last_residual);
    let mut out: Vec<RefineLevel> = Vec::with_capacity(levels.len());
    for (k, (&n, &(residual, q))) in levels.iter().zip(&raw).enumerate() {
        let drift = (q - finest).abs();
        let error = residual + drift;
        let observed_order = out.last().and_then(|prev: &RefineLevel| {
            (k > 0 && prev.error > floor && error > floor)
                .then(|| (prev.error / error).ln() / (n as f64 / prev.nodes_per_panel as f64).ln())
        });
        out.push(RefineLevel {
            nodes_per_panel: n,
            residual,
            drift,
            error,
            observed_order,
        });
    }
    Ok(RefineStudy {
        identity: identity.into(),
        order_floor: order_floor(spec.smoothness_class),
        levels: out,
    })
}
