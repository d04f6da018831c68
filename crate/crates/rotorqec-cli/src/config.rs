//! Run configuration: TOML file values merged under CLI flag overrides, then
//! validated into a concrete plan with field-precise error messages.

use num_complex::Complex64 as C64;
use rotorqec::codes::{AmplitudeProfile, RotationCode};
use rotorqec::fock::Dim;
use rotorqec::qec::{ChannelPrior, PriorKind, Scheme};
use serde::Deserialize;

/// File schema; every field optional so flags can fill the gaps.
///
/// ```toml
/// seed = 7
/// dim = 48
/// tol = 1e-9
/// out_dir = "out"
/// trials = 200
/// prior = "symmetric"     # gain | loss | symmetric | any
/// scheme = "direct"       # direct | teleport
/// gate = "CROT"           # optional sweep filter
/// loss_rate = 0.2
/// dephasing = 0.15
///
/// [code]
/// family = "ideal"        # ideal | cat | binomial
/// n = 2
/// k0 = 3
/// grid_points = 12        # ideal family
/// alpha = 2.0             # cat family
/// big_k = 10              # binomial family
/// ```
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub seed: Option<u64>,
    pub dim: Option<usize>,
    pub pad: Option<usize>,
    pub tol: Option<f64>,
    pub out_dir: Option<String>,
    pub trials: Option<u64>,
    pub prior: Option<String>,
    pub scheme: Option<String>,
    pub gate: Option<String>,
    pub loss_rate: Option<f64>,
    pub dephasing: Option<f64>,
    pub code: Option<RawCode>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCode {
    pub family: Option<String>,
    pub n: Option<u32>,
    pub k0: Option<u32>,
    pub grid_points: Option<usize>,
    pub alpha: Option<f64>,
    pub big_k: Option<usize>,
}

/// Validated configuration shared by all subcommands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub dim: usize,
    pub pad: Option<usize>,
    pub tol: f64,
    pub out_dir: String,
    pub trials: u64,
    pub prior: ChannelPrior,
    pub scheme: Scheme,
    pub gate_filter: Option<String>,
    pub code: CodeSpec,
}

#[derive(Debug, Clone)]
pub enum CodeFamily {
    Ideal { grid_points: usize },
    Cat { alpha: f64 },
    Binomial { big_k: usize },
}

#[derive(Debug, Clone)]
pub struct CodeSpec {
    pub family: CodeFamily,
    pub order: u32,
    pub offset: u32,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config: {}", self.0)
    }
}

pub fn load_raw(path: Option<&str>) -> Result<RawConfig, ConfigError> {
    match path {
        None => Ok(RawConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError(format!("cannot read {p}: {e}")))?;
            toml::from_str(&text).map_err(|e| ConfigError(format!("{p}: {e}")))
        }
    }
}

impl RawConfig {
    /// CLI flags override file values.
    #[allow(clippy::too_many_arguments)]
    pub fn with_overrides(
        mut self,
        seed: Option<u64>,
        dim: Option<usize>,
        pad: Option<usize>,
        tol: Option<f64>,
        out_dir: Option<String>,
        trials: Option<u64>,
        prior: Option<String>,
        scheme: Option<String>,
        gate: Option<String>,
    ) -> Self {
        if seed.is_some() {
            self.seed = seed;
        }
        if dim.is_some() {
            self.dim = dim;
        }
        if pad.is_some() {
            self.pad = pad;
        }
        if tol.is_some() {
            self.tol = tol;
        }
        if out_dir.is_some() {
            self.out_dir = out_dir;
        }
        if trials.is_some() {
            self.trials = trials;
        }
        if prior.is_some() {
            self.prior = prior;
        }
        if scheme.is_some() {
            self.scheme = scheme;
        }
        if gate.is_some() {
            self.gate = gate;
        }
        self
    }

    pub fn validate(self) -> Result<RunConfig, ConfigError> {
        let prior_kind = match self.prior.as_deref().unwrap_or("symmetric") {
            "gain" => PriorKind::GainOnly,
            "loss" => PriorKind::LossOnly,
            "symmetric" => PriorKind::Symmetric,
            "any" => PriorKind::PhaseCodeAny,
            other => {
                return Err(ConfigError(format!(
                    "prior must be one of gain|loss|symmetric|any, got {other:?}"
                )))
            }
        };
        let loss_rate = self.loss_rate.unwrap_or(0.1);
        let dephasing = self.dephasing.unwrap_or(0.1);
        if loss_rate < 0.0 {
            return Err(ConfigError("loss_rate must be non-negative".into()));
        }
        if dephasing < 0.0 {
            return Err(ConfigError("dephasing must be non-negative".into()));
        }
        let scheme = match self.scheme.as_deref().unwrap_or("direct") {
            "direct" => Scheme::Direct,
            "teleport" => Scheme::Teleport,
            other => {
                return Err(ConfigError(format!(
                    "scheme must be direct|teleport, got {other:?}"
                )))
            }
        };
        let tol = self.tol.unwrap_or(1e-9);
        if tol <= 0.0 {
            return Err(ConfigError("tol must be positive".into()));
        }
        let dim = self.dim.unwrap_or(48);
        if dim < 2 {
            return Err(ConfigError(format!("dim must be >= 2, got {dim}")));
        }
        if let Some(pad) = self.pad {
            if pad >= dim {
                return Err(ConfigError(format!("pad {pad} must be < dim {dim}")));
            }
        }

        let raw_code = self.code.unwrap_or_default();
        let order = raw_code.n.unwrap_or(2);
        if order == 0 {
            return Err(ConfigError("code.n must be >= 1".into()));
        }
        let family = match raw_code.family.as_deref().unwrap_or("ideal") {
            "ideal" => {
                let grid_points = raw_code.grid_points.unwrap_or(12);
                if grid_points < 2 {
                    return Err(ConfigError(format!(
                        "code.grid_points must be >= 2, got {grid_points}"
                    )));
                }
                CodeFamily::Ideal { grid_points }
            }
            "cat" => {
                let alpha = raw_code
                    .alpha
                    .ok_or_else(|| ConfigError("code.alpha required for the cat family".into()))?;
                if alpha <= 0.0 {
                    return Err(ConfigError("code.alpha must be positive".into()));
                }
                CodeFamily::Cat { alpha }
            }
            "binomial" => {
                let big_k = raw_code
                    .big_k
                    .ok_or_else(|| ConfigError("code.big_k required for the binomial family".into()))?;
                if big_k < 1 {
                    return Err(ConfigError("code.big_k must be >= 1".into()));
                }
                CodeFamily::Binomial { big_k }
            }
            other => {
                return Err(ConfigError(format!(
                    "code.family must be ideal|cat|binomial, got {other:?}"
                )))
            }
        };
        // default offsets: 3 for the direct scheme, 1 for teleportation
        let offset = raw_code.k0.unwrap_or(match scheme {
            Scheme::Direct => 3,
            Scheme::Teleport => 1,
        });
        Ok(RunConfig {
            seed: self.seed.unwrap_or(7),
            dim,
            pad: self.pad,
            tol,
            out_dir: self.out_dir.unwrap_or_else(|| "rotorqec-out".into()),
            trials: self.trials.unwrap_or(256),
            prior: ChannelPrior::new(prior_kind, loss_rate, dephasing)
                .map_err(|e| ConfigError(e.to_string()))?,
            scheme,
            gate_filter: self.gate,
            code: CodeSpec {
                family,
                order,
                offset,
            },
        })
    }
}

impl RunConfig {
    /// Build the configured code, auto-growing the dimension when the
    /// requested one cannot hold the profile plus its guard band.
    pub fn build_code(&self) -> Result<RotationCode, ConfigError> {
        let order = self.code.order;
        let offset = self.code.offset;
        let err = |e: rotorqec::RotorError| ConfigError(format!("code: {e}"));
        match &self.code.family {
            CodeFamily::Ideal { grid_points } => {
                let n = order as usize;
                let needed = (offset as usize + grid_points - 1) * n + 2 * n + 2;
                let d = Dim::new(needed.max(self.dim)).map_err(err)?;
                RotationCode::new(
                    order,
                    offset,
                    AmplitudeProfile::ideal(order, *grid_points).map_err(err)?,
                    d,
                )
                .map_err(err)
            }
            CodeFamily::Cat { alpha } => {
                let d = Dim::new(self.dim).map_err(err)?;
                let n = order as usize;
                let budget = Dim::new(self.dim.saturating_sub(offset as usize * n).max(2))
                    .map_err(err)?;
                let profile =
                    AmplitudeProfile::cat(order, C64::new(*alpha, 0.0), budget).map_err(err)?;
                RotationCode::new(order, offset, profile, d).map_err(err)
            }
            CodeFamily::Binomial { big_k } => {
                let n = order as usize;
                let needed = (offset as usize + big_k) * n + 2 * n + 2;
                let d = Dim::new(needed.max(self.dim)).map_err(err)?;
                let profile = AmplitudeProfile::binomial(order, *big_k, d).map_err(err)?;
                RotationCode::new(order, offset, profile, d).map_err(err)
            }
        }
    }

    /// Scheme-specific offset preconditions for the QEC runs.
    pub fn check_scheme_offset(&self) -> Result<(), ConfigError> {
        match self.scheme {
            Scheme::Direct if self.code.offset < 3 => Err(ConfigError(format!(
                "code.k0 must be 3 (or more) for the direct scheme, got {}",
                self.code.offset
            ))),
            Scheme::Teleport if self.code.offset < 1 => Err(ConfigError(format!(
                "code.k0 must be 1 (or more) for the teleportation scheme, got {}",
                self.code.offset
            ))),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = RawConfig::default().validate().unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.code.order, 2);
        assert!(cfg.build_code().is_ok());
    }

    #[test]
    fn toml_round_trip() {
        let raw: RawConfig = toml::from_str(
            r#"
            seed = 11
            trials = 3
            prior = "loss"
            scheme = "teleport"
            [code]
            family = "ideal"
            n = 3
            grid_points = 8
        "#,
        )
        .unwrap();
        let cfg = raw.validate().unwrap();
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.code.order, 3);
        assert_eq!(cfg.code.offset, 1); // teleport default
    }

    #[test]
    fn field_precise_errors() {
        let raw: RawConfig = toml::from_str("prior = \"bogus\"").unwrap();
        let e = raw.validate().unwrap_err();
        assert!(e.0.contains("prior"), "{e}");
        let raw: RawConfig = toml::from_str("[code]\nfamily = \"cat\"").unwrap();
        let e = raw.validate().unwrap_err();
        assert!(e.0.contains("alpha"), "{e}");
        assert!(toml::from_str::<RawConfig>("unknown_key = 1").is_err());
    }
}
