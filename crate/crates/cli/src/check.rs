//! Brute-force cross-checks of the analytic solution at a scenario's base point.

use anyhow::Result;
use forward_equilibrium::oracle::{self, GridConfig, McConfig};
use forward_equilibrium::{equilibrium, investor, producer, LevyModel, MarketParams, ModelKind};
use serde_json::{json, Value};

/// Below this Kish effective sample size a Monte Carlo certainty equivalent
/// is dominated by a handful of draws.
pub const MIN_EFFECTIVE_SAMPLES: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub analytic: f64,
    pub oracle: f64,
    /// Allowed gap, in the units of the values.
    pub tolerance: f64,
    /// Effective sample size, for Monte Carlo checks.
    pub effective_samples: Option<f64>,
}

impl Check {
    pub fn status(&self) -> Status {
        if (self.analytic - self.oracle).abs() <= self.tolerance {
            Status::Pass
        } else if self
            .effective_samples
            .is_some_and(|n| n.is_nan() || n < MIN_EFFECTIVE_SAMPLES)
        {
            Status::Inconclusive
        } else {
            Status::Fail
        }
    }
}

pub fn run(
    market: &MarketParams,
    model: &LevyModel,
    samples: usize,
    seed: u64,
) -> Result<Vec<Check>> {
    let kind = ModelKind::of(model);
    let eq = equilibrium::solve(market, model, kind)?;
    let f = eq.forward;
    let p = match kind {
        ModelKind::Brownian => producer::best_response_bm(market, model, f)?,
        ModelKind::JumpDiffusion => producer::best_response_jd(market, model, f)?,
    };
    let s = match kind {
        ModelKind::Brownian => investor::best_response_bm(market, model, p.alpha, f)?,
        ModelKind::JumpDiffusion => investor::best_response_jd(market, model, p.alpha, f)?,
    };
    let step = 1e-2;
    let (ga, gh) = oracle::producer_grid_response(market, model, f, step);
    let gs = oracle::investor_grid_response(market, model, p.alpha, f, step);
    let o = oracle::oracle_equilibrium(market, model, &GridConfig::default())?;

    let mc = McConfig::new(samples, seed, false)?;
    let prod = oracle::mc_certainty_equivalent(
        model,
        |x, _| market.producer_position(p.alpha, p.hp, f, x),
        market.gamma_p,
        &mc,
    )?;
    let base = market.terminal_price(p.alpha, 0.0)?;
    let inv = oracle::mc_certainty_equivalent(
        model,
        |x, _| s.hs * (base + x / market.m - f),
        market.gamma_s,
        &mc,
    )?;

    Ok(vec![
        Check {
            name: "producer_alpha",
            analytic: p.alpha,
            oracle: ga,
            tolerance: step,
            effective_samples: None,
        },
        Check {
            name: "producer_h",
            analytic: p.hp,
            oracle: gh,
            tolerance: step,
            effective_samples: None,
        },
        Check {
            name: "investor_h",
            analytic: s.hs,
            oracle: gs,
            tolerance: step,
            effective_samples: None,
        },
        Check {
            name: "forward",
            analytic: f,
            oracle: o.forward,
            tolerance: o.forward_step,
            effective_samples: None,
        },
        Check {
            name: "producer_utility",
            analytic: p.utility,
            oracle: prod.value,
            tolerance: 3.0 * prod.std_error,
            effective_samples: Some(prod.effective_samples),
        },
        Check {
            name: "investor_forward_utility",
            analytic: s.utility - s.entropy / market.gamma_s,
            oracle: inv.value,
            tolerance: 3.0 * inv.std_error,
            effective_samples: Some(inv.effective_samples),
        },
    ])
}

pub fn to_json(checks: &[Check]) -> Value {
    Value::Array(
        checks
            .iter()
            .map(|c| {
                json!({
                    "check": c.name,
                    "analytic": c.analytic,
                    "oracle": c.oracle,
                    "tolerance": c.tolerance,
                    "effective_samples": c.effective_samples,
                    "status": c.status().as_str(),
                })
            })
            .collect(),
    )
}

pub fn write_csv<W: std::io::Write>(checks: &[Check], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record([
        "check",
        "analytic",
        "oracle",
        "tolerance",
        "effective_samples",
        "status",
    ])?;
    for c in checks {
        w.write_record([
            c.name.to_string(),
            c.analytic.to_string(),
            c.oracle.to_string(),
            c.tolerance.to_string(),
            c.effective_samples
                .map(|n| n.to_string())
                .unwrap_or_default(),
            c.status().as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(gap: f64, effective_samples: Option<f64>) -> Check {
        Check {
            name: "x",
            analytic: 1.0,
            oracle: 1.0 + gap,
            tolerance: 0.1,
            effective_samples,
        }
    }

    #[test]
    fn status_rules() {
        assert_eq!(check(0.05, Some(3.0)).status(), Status::Pass);
        assert_eq!(check(0.5, None).status(), Status::Fail);
        assert_eq!(check(0.5, Some(5000.0)).status(), Status::Fail);
        assert_eq!(check(0.5, Some(3.0)).status(), Status::Inconclusive);
        assert_eq!(check(0.5, Some(f64::NAN)).status(), Status::Inconclusive);
    }
}
