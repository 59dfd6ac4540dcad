//! The identity suite behind `canham verify`.

use std::collections::BTreeMap;
use std::time::Instant;

use canham_core::canonical::{self, ab_ratio, ode_residual, pde_residual, ratio_closed_form, Route};
use canham_core::fields::{self, FieldKind, FieldSet, NamedResidual};
use canham_core::fredholm::{hamiltonian_at, spectrum_at};
use canham_core::gauss::AdaptiveGauss;
use canham_core::modelspace::{self, j_kernel, solve_projection_eqs, theta_kernel};
use canham_core::scalar::plane_wave;
use canham_core::{Complex64, Kernel, Resolution};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{RunConfig, ToleranceProfile};
use crate::error::CliError;
use crate::report::Entry;

/// Identity groups in the order `verify all` runs them.
pub const IDENTITIES: [&str; 12] = [
    "determinant_identity",
    "mu_route",
    "closed_forms",
    "derivative_relations",
    "canonical_ode",
    "theta_consistency",
    "spectral_facts",
    "boundary_identity",
    "reproducing_kernel",
    "energy_identity",
    "pde_characterization",
    "route_agreement",
];

/// Finite-difference checks expect this order, within `ORDER_TOL`.
pub const EXPECTED_ORDER: f64 = 2.0;
pub const ORDER_TOL: f64 = 0.3;

/// Built-in tolerance for `identity` (or `identity.check`).
pub fn default_tolerance(key: &str, profile: ToleranceProfile) -> Option<f64> {
    let kinked = profile == ToleranceProfile::Kinked;
    let v = match key {
        "determinant_identity" if kinked => 1e-5,
        "determinant_identity" => 1e-8,
        "mu_route" if kinked => 1e-5,
        "mu_route" => 1e-6,
        "closed_forms" => 1e-10,
        "derivative_relations" => 1e-4,
        "canonical_ode" => 1e-4,
        "theta_consistency" => 1e-8,
        "spectral_facts.lambda_plus_monotone" => 1e-8,
        "spectral_facts.hilbert_schmidt" => 1e-10,
        "boundary_identity" => 1e-6,
        "reproducing_kernel.reduction" => 1e-7,
        "reproducing_kernel.hermitian" => 1e-10,
        "energy_identity" => 1e-6,
        "pde_characterization" => 1e-4,
        "route_agreement" if kinked => 1e-6,
        "route_agreement" => 1e-7,
        _ => return None,
    };
    Some(v)
}

fn zstr(z: Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub struct Suite<'a> {
    spec: &'a Kernel,
    cfg: &'a RunConfig,
    profile: ToleranceProfile,
    res: Resolution,
    zs: Vec<Complex64>,
}

impl<'a> Suite<'a> {
    pub fn new(spec: &'a Kernel, cfg: &'a RunConfig) -> Result<Self, CliError> {
        cfg.validate()?;
        Ok(Self {
            spec,
            cfg,
            profile: cfg.tol_profile.resolve(spec),
            res: cfg.resolution.resolution(),
            zs: cfg.z_values()?,
        })
    }

    pub fn profile(&self) -> ToleranceProfile {
        self.profile
    }

    /// Config override for `identity.check`, then `identity`, then the
    /// built-in table.
    pub fn tolerance(&self, identity: &str, check: &str) -> f64 {
        let full = format!("{identity}.{check}");
        let t = &self.cfg.tolerances;
        t.get(&full)
            .or_else(|| t.get(identity))
            .copied()
            .or_else(|| default_tolerance(&full, self.profile))
            .or_else(|| default_tolerance(identity, self.profile))
            .unwrap_or(f64::NAN)
    }

    fn ts(&self, list: &[f64]) -> Vec<f64> {
        list.iter().copied().filter(|&t| t <= self.cfg.tmax + 1e-12).collect()
    }

    fn second_z(&self) -> Complex64 {
        *self.zs.get(1).unwrap_or(&self.zs[0])
    }

    #[allow(clippy::too_many_arguments)]
    fn entry(
        &self,
        identity: &str,
        name: &str,
        parameters: Vec<(&str, Value)>,
        residual: f64,
        tolerance: f64,
        observed_order: Option<f64>,
        order_ok: bool,
        runtime_ms: f64,
    ) -> Entry {
        Entry {
            identity: identity.into(),
            name: name.into(),
            parameters: parameters
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect::<BTreeMap<_, _>>(),
            residual,
            tolerance,
            observed_order,
            pass: residual <= tolerance && order_ok,
            runtime_ms,
        }
    }

    fn stepped(&self, identity: &str, t: f64, z: Option<Complex64>, r: &NamedResidual, runtime: f64) -> Entry {
        let tol = self.tolerance(identity, &r.name);
        let order_ok = r.order.is_none_or(|p| (p - EXPECTED_ORDER).abs() <= ORDER_TOL);
        let mut params = vec![("t", json!(t)), ("h", json!(self.cfg.h))];
        if let Some(z) = z {
            params.push(("z", json!(zstr(z))));
        }
        params.push(("refined_residual", json!(r.refined)));
        params.push(("extrapolated_residual", json!(r.extrapolated)));
        self.entry(identity, &r.name, params, r.value, tol, r.order, order_ok, runtime)
    }

    /// Runs `all` or a single identity group.
    pub fn run(&self, selection: &str) -> Result<Vec<Entry>, CliError> {
        let names: Vec<&str> = if selection == "all" {
            IDENTITIES.to_vec()
        } else if IDENTITIES.contains(&selection) {
            vec![selection]
        } else {
            return Err(CliError::Usage(format!(
                "unknown identity `{selection}`; expected all or one of {}",
                IDENTITIES.join(", ")
            )));
        };
        let mut out = Vec::new();
        for name in names {
            out.extend(self.run_identity(name)?);
        }
        Ok(out)
    }

    fn run_identity(&self, name: &str) -> Result<Vec<Entry>, CliError> {
        match name {
            "determinant_identity" => self.determinant_identity(),
            "mu_route" => self.mu_route(),
            "closed_forms" => self.closed_forms(),
            "derivative_relations" => self.derivative_relations(),
            "canonical_ode" => self.canonical_ode(),
            "theta_consistency" => self.theta_consistency(),
            "spectral_facts" => self.spectral_facts(),
            "boundary_identity" => self.boundary_identity(),
            "reproducing_kernel" => self.reproducing_kernel(),
            "energy_identity" => self.energy_identity(),
            "pde_characterization" => self.pde_characterization(),
            "route_agreement" => self.route_agreement(),
            _ => unreachable!("checked against IDENTITIES"),
        }
    }

    /// `m(t) = 1/Φ(t,t) = Ψ(t,t)` with `m` from the determinant ratio.
    fn determinant_identity(&self) -> Result<Vec<Entry>, CliError> {
        let id = "determinant_identity";
        let tol = self.tolerance(id, "m_det");
        self.ts(&[0.25, 0.5, 1.0, 1.5, 2.0])
            .into_iter()
            .map(|t| {
                let start = Instant::now();
                let set = FieldSet::solve(self.spec, t, &self.res)?;
                let r = (set.m_det - 1.0 / set.phi.boundary_value)
                    .abs()
                    .max((set.m_det - set.psi.boundary_value).abs());
                Ok(self.entry(id, "m_det", vec![("t", json!(t)), ("m_det", json!(set.m_det))], r, tol, None, true, ms(start)))
            })
            .collect()
    }

    /// `m(t) = exp(∫_0^t μ)`.
    fn mu_route(&self) -> Result<Vec<Entry>, CliError> {
        let id = "mu_route";
        let tol = self.tolerance(id, "exp_integral");
        self.ts(&[0.5, 1.0, 2.0])
            .into_iter()
            .map(|t| {
                let start = Instant::now();
                let m = hamiltonian_at(self.spec, t, &self.res)?.m;
                let via_mu = fields::m_from_mu(self.spec, t, &self.res, 16, 0.25)?;
                Ok(self.entry(id, "exp_integral", vec![("t", json!(t))], (m - via_mu).abs(), tol, None, true, ms(start)))
            })
            .collect()
    }

    /// For `t ≤ 0` everything is explicit: fields against direct quadrature
    /// of `K`, ratios against the rotation formula, projection boundary
    /// values against `e^{izt} ± Θ e^{−izt}`.
    fn closed_forms(&self) -> Result<Vec<Entry>, CliError> {
        let id = "closed_forms";
        let spec = self.spec;
        let ts: Vec<f64> = (0..20).map(|k| -1.0 + k as f64 / 19.0).collect();
        let quad = AdaptiveGauss::new(1e-15);
        let breaks = spec.breakpoints();

        let start = Instant::now();
        let field_err = ts
            .par_iter()
            .map(|&t| {
                let set = FieldSet::solve(spec, t, &self.res)?;
                let mut err = (hamiltonian_at(spec, t, &self.res)?.m - 1.0).abs();
                for j in 0..20 {
                    let x = -1.5 + 3.5 * j as f64 / 19.0;
                    let s = x + t;
                    let ik: f64 = if s > 0.0 {
                        quad.integrate(0.0, s, &breaks, Some(0.125), |y| spec.eval(y))
                    } else {
                        0.0
                    };
                    let kv = spec.eval(s);
                    err = err
                        .max((set.phi.eval(x) - (1.0 - ik)).abs())
                        .max((set.psi.eval(x) - (1.0 + ik)).abs())
                        .max((set.get(FieldKind::PhiPlus).eval(x) - kv).abs())
                        .max((set.get(FieldKind::PhiMinus).eval(x) - kv).abs());
                }
                Ok(err)
            })
            .collect::<Result<Vec<f64>, canham_core::Error>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let tol = self.tolerance(id, "fields");
        let mut out = vec![self.entry(id, "fields", vec![("probes", json!(400))], field_err, tol, None, true, ms(start))];

        let start = Instant::now();
        let ratio_err = ts
            .par_iter()
            .enumerate()
            .map(|(k, &t)| {
                let z = self.zs[k % self.zs.len()];
                let (a, b) = ratio_closed_form(spec, t, z)?;
                let mut err: f64 = 0.0;
                for route in [Route::PsiPhiTail, Route::PhiPlusMinusTail] {
                    let r = ab_ratio(spec, t, z, route, &self.res)?;
                    err = err.max((r.a - a).norm() + (r.b - b).norm());
                }
                Ok(err)
            })
            .collect::<Result<Vec<f64>, canham_core::Error>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let tol = self.tolerance(id, "ratios");
        out.push(self.entry(id, "ratios", vec![("probes", json!(20))], ratio_err, tol, None, true, ms(start)));

        let start = Instant::now();
        let mut proj_err: f64 = 0.0;
        for (k, &t) in ts.iter().enumerate() {
            let z = self.zs[k % self.zs.len()];
            let p = solve_projection_eqs(spec, t, z, &self.res)?;
            let (e, f) = (plane_wave(z, t), plane_wave(-z, t));
            proj_err = proj_err
                .max((p.a_z_at_t - (e + p.theta * f)).norm())
                .max((p.b_z_at_t - (e - p.theta * f)).norm());
        }
        let tol = self.tolerance(id, "projection");
        out.push(self.entry(id, "projection", vec![("probes", json!(20))], proj_err, tol, None, true, ms(start)));
        Ok(out)
    }

    fn derivative_relations(&self) -> Result<Vec<Entry>, CliError> {
        let id = "derivative_relations";
        let mut out = Vec::new();
        for t in self.ts(&[1.0]) {
            let start = Instant::now();
            let rs = fields::relation_residuals(self.spec, t, self.cfg.h, &self.res)?;
            let each = ms(start) / rs.len() as f64;
            out.extend(rs.iter().map(|r| self.stepped(id, t, None, r, each)));
        }
        Ok(out)
    }

    fn canonical_ode(&self) -> Result<Vec<Entry>, CliError> {
        let id = "canonical_ode";
        let tol = self.tolerance(id, "ode");
        let mut out = Vec::new();
        for t in self.ts(&[0.5, 1.0]) {
            for &z in &self.zs {
                let start = Instant::now();
                let r = ode_residual(self.spec, t, z, self.cfg.h, &self.res)?;
                let order_ok = r.observed_order.is_none_or(|p| (p - EXPECTED_ORDER).abs() <= ORDER_TOL);
                out.push(self.entry(
                    id,
                    "ode",
                    vec![
                        ("t", json!(t)),
                        ("z", json!(zstr(z))),
                        ("h", json!(self.cfg.h)),
                        ("res_a", json!(r.res_a)),
                        ("res_b", json!(r.res_b)),
                        ("refined_residual", json!(r.res_a_half.max(r.res_b_half))),
                    ],
                    r.res_a.max(r.res_b),
                    tol,
                    r.observed_order,
                    order_ok,
                    ms(start),
                ));
            }
        }
        Ok(out)
    }

    fn theta_consistency(&self) -> Result<Vec<Entry>, CliError> {
        let id = "theta_consistency";
        let mut out = Vec::new();
        for &z in &self.zs {
            let start = Instant::now();
            let r = canonical::theta_consistency(self.spec, z, &self.res)?;
            let runtime = ms(start);
            let p = || vec![("z", json!(zstr(z)))];
            out.push(self.entry(id, "symbol", p(), r.residual, self.tolerance(id, "symbol"), None, true, runtime));
            out.push(self.entry(id, "unit", p(), r.unit_residual, self.tolerance(id, "unit"), None, true, 0.0));
        }
        Ok(out)
    }

    /// `‖K‖_{L¹}`, which bounds the symbol and so the operator norm.
    fn symbol_bound(&self) -> f64 {
        let spec = self.spec;
        let (big_c, rate) = spec.envelope();
        let end = match spec.support_end() {
            Some(w) => w,
            None if rate < 0.0 => (big_c / (-rate * 1e-14)).ln().max(1.0) / -rate,
            None => return f64::INFINITY,
        };
        AdaptiveGauss::new(1e-14).integrate(0.0, end, &spec.breakpoints(), Some(0.25), |x| spec.eval(x).abs())
    }

    fn spectral_facts(&self) -> Result<Vec<Entry>, CliError> {
        let id = "spectral_facts";
        let ts = self.ts(&[0.5, 1.0, 1.5, 2.0]);
        if ts.is_empty() {
            return Ok(Vec::new());
        }
        let start = Instant::now();
        let reports: Vec<_> = ts.par_iter().map(|&t| spectrum_at(self.spec, t, &self.res)).collect();
        let runtime = ms(start) / 3.0;
        let tops: Vec<f64> = reports.iter().map(|r| r.top_positive()).collect();
        let drop = tops.windows(2).map(|p| p[0] - p[1]).fold(0.0, f64::max);
        let hs = reports
            .iter()
            .map(|r| (r.eigenvalues.iter().map(|v| v * v).sum::<f64>() - r.frobenius_sq).abs())
            .fold(0.0, f64::max);
        let norm = reports.iter().map(|r| r.op_norm).fold(0.0, f64::max);
        let bound = self.symbol_bound();
        let norm_tol = self
            .cfg
            .tolerances
            .get(&format!("{id}.operator_norm"))
            .copied()
            .unwrap_or(bound + 0.01);
        let ts_json = json!(ts);
        Ok(vec![
            self.entry(
                id,
                "lambda_plus_monotone",
                vec![("t", ts_json.clone()), ("lambda_plus_1", json!(tops))],
                drop,
                self.tolerance(id, "lambda_plus_monotone"),
                None,
                true,
                runtime,
            ),
            self.entry(id, "hilbert_schmidt", vec![("t", ts_json.clone())], hs, self.tolerance(id, "hilbert_schmidt"), None, true, runtime),
            self.entry(
                id,
                "operator_norm",
                vec![("t", ts_json), ("symbol_bound", json!(bound))],
                norm,
                norm_tol,
                None,
                true,
                runtime,
            ),
        ])
    }

    fn boundary_identity(&self) -> Result<Vec<Entry>, CliError> {
        let id = "boundary_identity";
        let tol = self.tolerance(id, "boundary");
        let mut out = Vec::new();
        for t in self.ts(&[0.5, 1.0]) {
            for &z in &self.zs {
                let start = Instant::now();
                let r = modelspace::boundary_identity(self.spec, t, z, &self.res)?;
                out.push(self.entry(
                    id,
                    "boundary",
                    vec![("t", json!(t)), ("z", json!(zstr(z))), ("a_part", json!(r.a_part)), ("b_part", json!(r.b_part))],
                    r.total(),
                    tol,
                    None,
                    true,
                    ms(start),
                ));
            }
        }
        Ok(out)
    }

    fn reproducing_kernel(&self) -> Result<Vec<Entry>, CliError> {
        let id = "reproducing_kernel";
        let (z, w) = (self.zs[0], self.second_z());
        let mut out = Vec::new();
        for (a, b) in [(z, z), (z, w)] {
            let start = Instant::now();
            let j = j_kernel(self.spec, 0.0, a, b, &self.res)?.j_hat;
            let th = theta_kernel(self.spec, a, b)?;
            out.push(self.entry(
                id,
                "reduction",
                vec![
                    ("t", json!(0.0)),
                    ("z", json!(zstr(a))),
                    ("w", json!(zstr(b))),
                    ("j_hat", json!([j.re, j.im])),
                ],
                (j - th).norm(),
                self.tolerance(id, "reduction"),
                None,
                true,
                ms(start),
            ));
        }
        let t = self.cfg.tmax.clamp(0.0, 1.0);
        let start = Instant::now();
        let zw = j_kernel(self.spec, t, z, w, &self.res)?.j_hat;
        let wz = j_kernel(self.spec, t, w, z, &self.res)?.j_hat;
        let zz = j_kernel(self.spec, t, z, z, &self.res)?.j_hat;
        let herm = (zw - wz.conj()).norm().max(zz.im.abs() / zz.norm().max(f64::MIN_POSITIVE));
        out.push(self.entry(
            id,
            "hermitian",
            vec![("t", json!(t)), ("z", json!(zstr(z))), ("w", json!(zstr(w)))],
            herm,
            self.tolerance(id, "hermitian"),
            None,
            true,
            ms(start),
        ));
        Ok(out)
    }

    fn energy_identity(&self) -> Result<Vec<Entry>, CliError> {
        let id = "energy_identity";
        let (t, s) = (0.5, 1.5);
        if s > self.cfg.tmax + 1e-12 {
            return Ok(Vec::new());
        }
        let (z, w) = (self.zs[0], self.second_z());
        let start = Instant::now();
        let e = modelspace::energy_identity(self.spec, t, s, z, w, self.cfg.r_nodes, &self.res)?;
        Ok(vec![self.entry(
            id,
            "energy",
            vec![
                ("t", json!(t)),
                ("s", json!(s)),
                ("z", json!(zstr(z))),
                ("w", json!(zstr(w))),
                ("r_nodes", json!(self.cfg.r_nodes)),
                ("lhs", json!([e.lhs.re, e.lhs.im])),
                ("rhs", json!([e.rhs.re, e.rhs.im])),
            ],
            e.residual,
            self.tolerance(id, "energy"),
            None,
            true,
            ms(start),
        )])
    }

    fn pde_characterization(&self) -> Result<Vec<Entry>, CliError> {
        let id = "pde_characterization";
        let z = self.zs[0];
        let mut out = Vec::new();
        for t in self.ts(&[1.0]) {
            let start = Instant::now();
            let rs = pde_residual(self.spec, t, self.cfg.h, z, &self.res)?;
            let each = ms(start) / rs.len() as f64;
            out.extend(rs.iter().map(|r| self.stepped(id, t, Some(z), r, each)));
        }
        Ok(out)
    }

    fn route_agreement(&self) -> Result<Vec<Entry>, CliError> {
        let id = "route_agreement";
        let tol = self.tolerance(id, "routes");
        let mut out = Vec::new();
        for t in self.ts(&[0.5, 1.0, 2.0]) {
            for &z in &self.zs {
                let start = Instant::now();
                let r = canonical::route_agreement(self.spec, t, z, &self.res)?;
                out.push(self.entry(id, "routes", vec![("t", json!(t)), ("z", json!(zstr(z)))], r, tol, None, true, ms(start)));
            }
        }
        Ok(out)
    }
}
