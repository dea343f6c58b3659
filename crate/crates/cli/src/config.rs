//! Run-configuration files: UTF-8 text, one `key = value` per line, `#`
//! comments, dotted keys, comma-separated lists.

use std::fmt;
use trefftz_wave::assembly::FluxParameters;
use trefftz_wave::cases::{BoundaryMode, TensorParams};
use trefftz_wave::driver::{Method, RunSpec};
use trefftz_wave::solver::LocalMode;

#[derive(Debug)]
pub struct ConfigError {
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "config line {}, field {:?}: {}",
            self.line, self.field, self.message
        )
    }
}

impl std::error::Error for ConfigError {}

/// Everything a batch run needs. `lambda1` keeps the whole list for
/// ρ-sweeps; plain runs use its first entry.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub case: String,
    pub method: Method,
    pub p: u32,
    pub q: u32,
    pub gamma: f64,
    pub boundary: BoundaryMode,
    pub levels: Vec<u32>,
    pub lambda1: Vec<f64>,
    pub lambda2: f64,
    pub rot_a: f64,
    pub rot_b: f64,
    pub flux: FluxParameters,
    pub quad_order: Option<usize>,
    pub seed: u64,
    pub flip_flux_sign: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let params = TensorParams::default();
        Self {
            case: "hom2d_hat".into(),
            method: Method::Method1,
            p: 1,
            q: 1,
            gamma: 1.0,
            boundary: BoundaryMode::Neumann,
            levels: vec![1, 2, 3],
            lambda1: vec![params.lambda1],
            lambda2: params.lambda2,
            rot_a: params.a,
            rot_b: params.b,
            flux: FluxParameters::default(),
            quad_order: None,
            seed: 42,
            flip_flux_sign: false,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut mode = LocalMode::Nonoverlapping;
        let mut method_name = String::from("method1");
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError {
                line: line_no,
                field: line.to_string(),
                message: "expected `key = value`".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            let err = |message: String| ConfigError {
                line: line_no,
                field: key.to_string(),
                message,
            };
            let parse_f64 = |v: &str| v.parse::<f64>().map_err(|e| err(e.to_string()));
            match key {
                "case" => cfg.case = value.to_string(),
                "method" => method_name = value.to_string(),
                "p" => cfg.p = value.parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?,
                "q" => cfg.q = value.parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?,
                "mode" => {
                    mode = match value {
                        "overlapping" => LocalMode::Overlapping,
                        "nonoverlapping" => LocalMode::Nonoverlapping,
                        other => return Err(err(format!("unknown mode {other:?}"))),
                    }
                }
                "local.gamma" => {
                    cfg.gamma = parse_f64(value)?;
                    if cfg.gamma < 1.0 {
                        return Err(err("gamma must be ≥ 1".into()));
                    }
                }
                "boundary" => {
                    cfg.boundary = match value {
                        "dirichlet" => BoundaryMode::Dirichlet,
                        "neumann" => BoundaryMode::Neumann,
                        "mixed" => BoundaryMode::Mixed,
                        other => return Err(err(format!("unknown boundary mode {other:?}"))),
                    }
                }
                "levels" => {
                    cfg.levels = value
                        .split(',')
                        .map(|v| v.trim().parse::<u32>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| err(e.to_string()))?;
                    if cfg.levels.is_empty() {
                        return Err(err("need at least one level".into()));
                    }
                    if cfg.levels.windows(2).any(|w| w[1] <= w[0]) {
                        return Err(err("levels must ascend strictly".into()));
                    }
                }
                "lambda1" => {
                    cfg.lambda1 = value
                        .split(',')
                        .map(|v| v.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| err(e.to_string()))?;
                    if cfg.lambda1.is_empty() {
                        return Err(err("need at least one lambda1".into()));
                    }
                }
                "lambda2" => cfg.lambda2 = parse_f64(value)?,
                "rot.a" => cfg.rot_a = parse_f64(value)?,
                "rot.b" => cfg.rot_b = parse_f64(value)?,
                "flux.alpha" => {
                    cfg.flux.alpha = parse_f64(value)?;
                    if cfg.flux.alpha <= 0.0 {
                        return Err(err("alpha must be positive".into()));
                    }
                }
                "flux.beta" => {
                    cfg.flux.beta = parse_f64(value)?;
                    if cfg.flux.beta <= 0.0 {
                        return Err(err("beta must be positive".into()));
                    }
                }
                "flux.delta" => cfg.flux.delta = parse_f64(value)?,
                "quad.order" => {
                    let n: usize = value.parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?;
                    cfg.quad_order = if n == 0 { None } else { Some(n) };
                }
                "seed" => cfg.seed = value.parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?,
                "hooks.flip_flux_sign" => {
                    cfg.flip_flux_sign = value.parse().map_err(|e: std::str::ParseBoolError| err(e.to_string()))?;
                }
                other => {
                    return Err(ConfigError {
                        line: line_no,
                        field: other.to_string(),
                        message: "unknown key".into(),
                    })
                }
            }
        }
        cfg.method = match method_name.as_str() {
            "method1" => Method::Method1,
            "method2" => Method::Method2,
            "combined" => Method::Combined { mode },
            other => {
                return Err(ConfigError {
                    line: 0,
                    field: "method".into(),
                    message: format!("unknown method {other:?}"),
                })
            }
        };
        Ok(cfg)
    }

    pub fn to_spec(&self) -> RunSpec {
        RunSpec {
            case_id: self.case.clone(),
            method: self.method,
            p: self.p,
            q: self.q,
            gamma: self.gamma,
            boundary: self.boundary,
            params: TensorParams {
                lambda1: self.lambda1[0],
                lambda2: self.lambda2,
                a: self.rot_a,
                b: self.rot_b,
            },
            flux: self.flux,
            quad_order: self.quad_order,
            compute_dg_plus: false,
        }
    }
}
