use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use canham_core::kernels::KernelFile;
use canham_core::{Complex64, Kernel, Resolution};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Which tolerance table the suite uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceProfile {
    /// Smooth kernels.
    Default,
    /// Kernels with jumps or kinks.
    Kinked,
    /// `kinked` if the kernel declares kinks, else `default`.
    Auto,
}

impl ToleranceProfile {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "default" => Ok(Self::Default),
            "kinked" => Ok(Self::Kinked),
            "auto" => Ok(Self::Auto),
            other => Err(CliError::Usage(format!(
                "unknown tolerance profile `{other}` (expected default, kinked or auto)"
            ))),
        }
    }

    pub fn resolve(self, spec: &Kernel) -> Self {
        match self {
            Self::Auto if spec.kinks.is_empty() => Self::Default,
            Self::Auto => Self::Kinked,
            p => p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TRange {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

impl TRange {
    /// `steps + 1` equally spaced points from `t0` to `t1`.
    pub fn points(&self) -> Vec<f64> {
        if self.steps == 0 {
            return vec![self.t0];
        }
        (0..=self.steps)
            .map(|k| self.t0 + (self.t1 - self.t0) * k as f64 / self.steps as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolutionConfig {
    pub nodes_per_panel: usize,
    pub min_panels: usize,
}

impl Default for ResolutionConfig {
    fn default() -> Self {
        let r = Resolution::default();
        Self {
            nodes_per_panel: r.nodes_per_panel,
            min_panels: r.min_panels,
        }
    }
}

impl ResolutionConfig {
    pub fn resolution(&self) -> Resolution {
        Resolution::new(self.nodes_per_panel, self.min_panels)
    }
}

/// Everything a run depends on. Written back into reports verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Kernel spec path; relative paths resolve against the config file.
    pub kernel: Option<PathBuf>,
    pub t_range: TRange,
    /// Spectral parameters such as `"0+2i"` or `"1+2i"`.
    pub z_list: Vec<String>,
    pub resolution: ResolutionConfig,
    /// Finite-difference step.
    pub h: f64,
    /// Largest `t` the suite visits.
    pub tmax: f64,
    pub tol_profile: ToleranceProfile,
    /// Per-identity tolerance overrides.
    pub tolerances: BTreeMap<String, f64>,
    pub output_dir: Option<PathBuf>,
    /// Nodes per panel for refinement studies.
    pub refinement_levels: Vec<usize>,
    /// Gauss points of the energy-identity `r`-integral.
    pub r_nodes: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kernel: None,
            t_range: TRange {
                t0: 0.0,
                t1: 2.0,
                steps: 64,
            },
            z_list: vec!["0+2i".into(), "1+2i".into()],
            resolution: ResolutionConfig::default(),
            h: 1e-2,
            tmax: 2.0,
            tol_profile: ToleranceProfile::Auto,
            tolerances: BTreeMap::new(),
            output_dir: None,
            refinement_levels: vec![8, 16, 32, 64],
            r_nodes: 64,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if let (Some(k), Some(dir)) = (&cfg.kernel, path.parent()) {
            if k.is_relative() {
                cfg.kernel = Some(dir.join(k));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        if let Some((name, tol)) = self.tolerances.iter().find(|(_, &v)| !(v > 0.0)) {
            return bad(format!("tolerance `{name}` = {tol} must be positive"));
        }
        if !(self.h > 0.0) {
            return bad(format!("finite-difference step h = {} must be positive", self.h));
        }
        if self.resolution.nodes_per_panel == 0 || self.resolution.min_panels == 0 {
            return bad("resolution needs at least one node and one panel".into());
        }
        if self.r_nodes == 0 {
            return bad("r_nodes must be positive".into());
        }
        if !(self.t_range.t1 >= self.t_range.t0) {
            return bad("t_range needs t1 ≥ t0".into());
        }
        if self.z_list.is_empty() {
            return bad("z_list must not be empty".into());
        }
        for z in &self.z_list {
            parse_complex(z)?;
        }
        Ok(())
    }

    pub fn z_values(&self) -> Result<Vec<Complex64>, CliError> {
        self.z_list.iter().map(|z| parse_complex(z)).collect()
    }
}

/// Reads a kernel spec file, mapping failures to usage errors.
pub fn load_kernel(path: &Path) -> Result<(KernelFile, Kernel), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file = KernelFile::from_json(&text)?;
    let spec = file.to_spec::<f64>()?;
    Ok((file, spec))
}

/// Parses `a+bi`, `a-bi`, `bi`, `a`, `i`, `-i` (spaces allowed).
pub fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    let err = || CliError::Usage(format!("cannot parse complex number `{s}`"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(err());
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| err());
    };
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |txt: &str| -> Result<f64, CliError> {
        match txt {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            v => v.parse::<f64>().map_err(|_| err()),
        }
    };
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().map_err(|_| err())?;
            Ok(Complex64::new(re, imag(&body[k..])?))
        }
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(parse_complex("0+2i").unwrap(), c(0.0, 2.0));
        assert_eq!(parse_complex("1+2i").unwrap(), c(1.0, 2.0));
        assert_eq!(parse_complex("-1+3i").unwrap(), c(-1.0, 3.0));
        assert_eq!(parse_complex("2i").unwrap(), c(0.0, 2.0));
        assert_eq!(parse_complex("1.5 - 0.5i").unwrap(), c(1.5, -0.5));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("3").unwrap(), c(3.0, 0.0));
        assert_eq!(parse_complex("1e-3+2e1i").unwrap(), c(1e-3, 20.0));
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("").is_err());
    }

    #[test]
    fn t_range_endpoints() {
        let r = TRange {
            t0: 0.0,
            t1: 2.0,
            steps: 64,
        };
        let p = r.points();
        assert_eq!(p.len(), 65);
        assert_eq!(p[0], 0.0);
        assert_eq!(p[64], 2.0);
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let mut cfg = RunConfig::default();
        cfg.tolerances.insert("energy_identity".into(), 0.0);
        assert!(cfg.validate().is_err());
    }
}
