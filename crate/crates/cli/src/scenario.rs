//! Scenario files: a base market and model, plus up to two sweep axes.

use std::path::Path;

use forward_equilibrium::{BrownianFactors, JumpDiffusionFactors, LevyModel, MarketParams};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },

    #[error("cannot read {file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub description: String,
    pub market: MarketConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub sweep: Vec<Axis>,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<Quantity>,
    #[serde(default)]
    pub include_no_forward: bool,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub mu: f64,
    pub m: f64,
    pub pi0: f64,
    pub pi_t: f64,
    pub eps: f64,
    pub rate: f64,
    pub gamma_p: f64,
    pub gamma_s: f64,
    #[serde(default)]
    pub legacy_hedge: Option<LegacyConfig>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegacyConfig {
    pub position: f64,
    pub strike: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Brownian {
        sigma1: f64,
        sigma2: f64,
        rho: f64,
        mpr: f64,
        horizon: f64,
    },
    JumpDiffusion {
        sigma1: f64,
        sigma2: f64,
        rho: f64,
        b1_bar: f64,
        #[serde(default)]
        b2_bar: f64,
        intensity: f64,
        eta1: f64,
        eta2: f64,
        horizon: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Mu,
    M,
    Pi0,
    PiT,
    Eps,
    Rate,
    GammaP,
    GammaS,
    Sigma1,
    Sigma2,
    Rho,
    Mpr,
    Horizon,
    B1Bar,
    B2Bar,
    Intensity,
    Eta1,
    Eta2,
    LegacyPosition,
    LegacyStrike,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::Mu => "mu",
            Param::M => "m",
            Param::Pi0 => "pi0",
            Param::PiT => "pi_t",
            Param::Eps => "eps",
            Param::Rate => "rate",
            Param::GammaP => "gamma_p",
            Param::GammaS => "gamma_s",
            Param::Sigma1 => "sigma1",
            Param::Sigma2 => "sigma2",
            Param::Rho => "rho",
            Param::Mpr => "mpr",
            Param::Horizon => "horizon",
            Param::B1Bar => "b1_bar",
            Param::B2Bar => "b2_bar",
            Param::Intensity => "intensity",
            Param::Eta1 => "eta1",
            Param::Eta2 => "eta2",
            Param::LegacyPosition => "legacy_position",
            Param::LegacyStrike => "legacy_strike",
        }
    }
}

/// Either `from`/`to`/`steps` (inclusive, evenly spaced) or explicit `values`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub parameter: Param,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub steps: Option<usize>,
    pub values: Option<Vec<f64>>,
}

impl Axis {
    pub fn points(&self) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        let (a, b, n) = (self.from.unwrap(), self.to.unwrap(), self.steps.unwrap());
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Quantity {
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "h")]
    H,
    #[serde(rename = "F")]
    Forward,
    #[serde(rename = "P0")]
    P0,
    #[serde(rename = "E_PT")]
    EPt,
    #[serde(rename = "premium")]
    Premium,
    #[serde(rename = "yield")]
    Yield,
    #[serde(rename = "price_change")]
    PriceChange,
    #[serde(rename = "alpha_nf")]
    AlphaNf,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Alpha => "alpha",
            Quantity::H => "h",
            Quantity::Forward => "F",
            Quantity::P0 => "P0",
            Quantity::EPt => "E_PT",
            Quantity::Premium => "premium",
            Quantity::Yield => "yield",
            Quantity::PriceChange => "price_change",
            Quantity::AlphaNf => "alpha_nf",
        }
    }
}

fn default_outputs() -> Vec<Quantity> {
    vec![
        Quantity::Alpha,
        Quantity::H,
        Quantity::P0,
        Quantity::Premium,
    ]
}

impl Scenario {
    pub fn load(file: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(file).map_err(|source| ConfigError::Io {
            file: file.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(path, e.into_inner().to_string())
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.sweep.len() > 2 {
            return Err(invalid("sweep", "at most two axes"));
        }
        for (i, axis) in self.sweep.iter().enumerate() {
            let at = |field: &str| format!("sweep[{i}].{field}");
            if !self.has_param(axis.parameter) {
                return Err(invalid(
                    at("parameter"),
                    format!("{} does not apply to this scenario", axis.parameter.name()),
                ));
            }
            match (&axis.values, axis.from, axis.to, axis.steps) {
                (Some(v), None, None, None) => {
                    if v.is_empty() {
                        return Err(invalid(at("values"), "must not be empty"));
                    }
                    if !v.iter().all(|x| x.is_finite()) {
                        return Err(invalid(at("values"), "must be finite"));
                    }
                }
                (None, Some(a), Some(b), Some(n)) => {
                    if n < 2 {
                        return Err(invalid(at("steps"), "must be at least 2"));
                    }
                    if !(a.is_finite() && b.is_finite()) {
                        return Err(invalid(at("from"), "bounds must be finite"));
                    }
                }
                _ => {
                    return Err(invalid(
                        format!("sweep[{i}]"),
                        "give either values or from, to and steps",
                    ))
                }
            }
        }
        if self.sweep.len() == 2 && self.sweep[0].parameter == self.sweep[1].parameter {
            return Err(invalid("sweep[1].parameter", "duplicates the first axis"));
        }
        let (market, model) = self.build(&[]);
        market.map_err(|e| invalid("market", e.to_string()))?;
        model.map_err(|e| invalid("model", e.to_string()))?;
        Ok(())
    }

    fn has_param(&self, p: Param) -> bool {
        use Param::*;
        match p {
            Mu | M | Pi0 | PiT | Eps | Rate | GammaP | GammaS | Sigma1 | Sigma2 | Rho | Horizon => {
                true
            }
            Mpr => matches!(self.model, ModelConfig::Brownian { .. }),
            B1Bar | B2Bar | Intensity | Eta1 | Eta2 => {
                matches!(self.model, ModelConfig::JumpDiffusion { .. })
            }
            LegacyPosition | LegacyStrike => self.market.legacy_hedge.is_some(),
        }
    }

    /// Market and model with the given parameters overridden.
    pub fn build(
        &self,
        overrides: &[(Param, f64)],
    ) -> (
        forward_equilibrium::Result<MarketParams>,
        forward_equilibrium::Result<LevyModel>,
    ) {
        let mut mk = self.market;
        let mut md = self.model;
        for &(p, x) in overrides {
            set(&mut mk, &mut md, p, x);
        }
        let market = MarketParams::new(
            mk.mu, mk.m, mk.pi0, mk.pi_t, mk.eps, mk.rate, mk.gamma_p, mk.gamma_s,
        )
        .and_then(|m| match mk.legacy_hedge {
            Some(l) => m.with_legacy_hedge(l.position, l.strike),
            None => Ok(m),
        });
        let model = match md {
            ModelConfig::Brownian {
                sigma1,
                sigma2,
                rho,
                mpr,
                horizon,
            } => LevyModel::brownian(BrownianFactors {
                sigma1,
                sigma2,
                rho,
                mpr,
                horizon,
            }),
            ModelConfig::JumpDiffusion {
                sigma1,
                sigma2,
                rho,
                b1_bar,
                b2_bar,
                intensity,
                eta1,
                eta2,
                horizon,
            } => LevyModel::jump_diffusion(JumpDiffusionFactors {
                sigma1,
                sigma2,
                rho,
                b1_bar,
                b2_bar,
                intensity,
                eta1,
                eta2,
                horizon,
            }),
        };
        (market, model)
    }
}

fn set(mk: &mut MarketConfig, md: &mut ModelConfig, p: Param, x: f64) {
    match p {
        Param::Mu => mk.mu = x,
        Param::M => mk.m = x,
        Param::Pi0 => mk.pi0 = x,
        Param::PiT => mk.pi_t = x,
        Param::Eps => mk.eps = x,
        Param::Rate => mk.rate = x,
        Param::GammaP => mk.gamma_p = x,
        Param::GammaS => mk.gamma_s = x,
        Param::LegacyPosition => {
            if let Some(l) = &mut mk.legacy_hedge {
                l.position = x;
            }
        }
        Param::LegacyStrike => {
            if let Some(l) = &mut mk.legacy_hedge {
                l.strike = x;
            }
        }
        _ => set_model(md, p, x),
    }
}

fn set_model(md: &mut ModelConfig, p: Param, x: f64) {
    match md {
        ModelConfig::Brownian {
            sigma1,
            sigma2,
            rho,
            mpr,
            horizon,
        } => match p {
            Param::Sigma1 => *sigma1 = x,
            Param::Sigma2 => *sigma2 = x,
            Param::Rho => *rho = x,
            Param::Mpr => *mpr = x,
            Param::Horizon => *horizon = x,
            _ => {}
        },
        ModelConfig::JumpDiffusion {
            sigma1,
            sigma2,
            rho,
            b1_bar,
            b2_bar,
            intensity,
            eta1,
            eta2,
            horizon,
        } => match p {
            Param::Sigma1 => *sigma1 = x,
            Param::Sigma2 => *sigma2 = x,
            Param::Rho => *rho = x,
            Param::B1Bar => *b1_bar = x,
            Param::B2Bar => *b2_bar = x,
            Param::Intensity => *intensity = x,
            Param::Eta1 => *eta1 = x,
            Param::Eta2 => *eta2 = x,
            Param::Horizon => *horizon = x,
            _ => {}
        },
    }
}
