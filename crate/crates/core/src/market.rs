//! Economic parameters, the linear demand system and the spot-price maps.
//!
//! Quantities are in commodity units, prices in currency per unit and the
//! horizon `T` in years. `rate` is the discretely compounded rate over `[0, T]`.

use crate::error::{invalid, Error, Result};
use crate::levy::LevyModel;

/// A forward position opened in a previous cycle: `position` contracts
/// struck at `strike`, maturing at `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegacyHedge {
    pub position: f64,
    pub strike: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    /// Demand intercept μ.
    pub mu: f64,
    /// Demand slope m > 0 (quantity per unit price).
    pub m: f64,
    /// Production at time 0.
    pub pi0: f64,
    /// Production at time T.
    pub pi_t: f64,
    /// Storage depreciation ε ∈ [0, 1).
    pub eps: f64,
    /// Interest R over the period, R > −1.
    pub rate: f64,
    pub gamma_p: f64,
    pub gamma_s: f64,
    pub legacy_hedge: Option<LegacyHedge>,
}

/// Mean and variance of the terminal spot price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceMoments {
    pub mean: f64,
    pub variance: f64,
}

impl MarketParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mu: f64,
        m: f64,
        pi0: f64,
        pi_t: f64,
        eps: f64,
        rate: f64,
        gamma_p: f64,
        gamma_s: f64,
    ) -> Result<Self> {
        let p = Self {
            mu,
            m,
            pi0,
            pi_t,
            eps,
            rate,
            gamma_p,
            gamma_s,
            legacy_hedge: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_legacy_hedge(mut self, position: f64, strike: f64) -> Result<Self> {
        self.legacy_hedge = Some(LegacyHedge { position, strike });
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("mu", self.mu),
            ("m", self.m),
            ("pi0", self.pi0),
            ("pi_t", self.pi_t),
            ("eps", self.eps),
            ("rate", self.rate),
            ("gamma_p", self.gamma_p),
            ("gamma_s", self.gamma_s),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if self.m <= 0.0 {
            return Err(invalid("m", "demand slope must be positive"));
        }
        if self.pi0 < 0.0 {
            return Err(invalid("pi0", "must be nonnegative"));
        }
        if self.pi_t < 0.0 {
            return Err(invalid("pi_t", "must be nonnegative"));
        }
        if !(0.0..1.0).contains(&self.eps) {
            return Err(invalid("eps", "must lie in [0, 1)"));
        }
        if self.rate <= -1.0 {
            return Err(invalid("rate", "must exceed -1"));
        }
        if self.gamma_p <= 0.0 {
            return Err(invalid("gamma_p", "must be positive"));
        }
        if self.gamma_s <= 0.0 {
            return Err(invalid("gamma_s", "must be positive"));
        }
        if let Some(h) = self.legacy_hedge {
            if !(h.position.is_finite() && h.strike.is_finite()) {
                return Err(invalid("legacy_hedge", "must be finite"));
            }
        }
        Ok(())
    }

    pub(crate) fn legacy_position(&self) -> f64 {
        self.legacy_hedge.map_or(0.0, |h| h.position)
    }

    /// ψ0(x) = μ − m x.
    pub fn demand(&self, price: f64) -> f64 {
        self.mu - self.m * price
    }

    /// φ0(y) = (μ − y)/m.
    pub fn inverse_demand(&self, quantity: f64) -> f64 {
        (self.mu - quantity) / self.m
    }

    fn check_alpha(&self, alpha: f64) -> Result<()> {
        if !(0.0..=self.pi0).contains(&alpha) {
            return Err(Error::AlphaOutOfRange {
                alpha,
                pi0: self.pi0,
            });
        }
        Ok(())
    }

    /// Spot price at 0 when `alpha` units are withheld: φ0(π0 − α).
    pub fn spot_price_initial(&self, alpha: f64) -> Result<f64> {
        self.check_alpha(alpha)?;
        Ok(self.inverse_demand(self.pi0 - alpha))
    }

    /// Spot price at T for a realisation `x` of the demand shock X.
    pub fn terminal_price(&self, alpha: f64, x: f64) -> Result<f64> {
        self.check_alpha(alpha)?;
        Ok(self.terminal_price_unchecked(alpha, x))
    }

    pub(crate) fn terminal_price_unchecked(&self, alpha: f64, x: f64) -> f64 {
        self.inverse_demand(self.pi_t) - alpha * (1.0 - self.eps) / self.m + x / self.m
    }

    /// `P_T` with the demand shock at zero: φ0(πT) − α(1−ε)/m.
    pub(crate) fn terminal_price_base(&self, alpha: f64) -> f64 {
        self.terminal_price_unchecked(alpha, 0.0)
    }

    /// Mean and variance of `P_T` from the demand leg's first two cumulants.
    pub fn terminal_moments(&self, model: &LevyModel, alpha: f64) -> Result<PriceMoments> {
        self.check_alpha(alpha)?;
        let leg = model.demand_leg();
        let t = model.horizon();
        Ok(PriceMoments {
            mean: self.terminal_price_base(alpha) + leg.cumulant_derivative(0.0) * t / self.m,
            variance: leg.cumulant_second_derivative(0.0) * t / (self.m * self.m),
        })
    }

    /// Deterministic part `q(α, hᵖ)` of the producers' terminal position.
    pub fn quad_revenue(&self, alpha: f64, hp: f64, forward: f64) -> f64 {
        let (m, r, e) = (self.m, self.rate, 1.0 - self.eps);
        -alpha * alpha * (1.0 + r + e * e) / m
            + alpha * (2.0 * (1.0 + r) * self.pi0 - 2.0 * e * self.pi_t - (r + self.eps) * self.mu)
                / m
            - alpha * hp * e / m
            - hp * (forward - (self.mu - self.pi_t) / m)
            + self.pi_t * self.inverse_demand(self.pi_t)
            + self.pi0 * self.inverse_demand(self.pi0) * (1.0 + r)
    }

    /// Exposure `ℓ(α, hᵖ)` of the producers' position to the shock X.
    pub fn hedge_ratio(&self, alpha: f64, hp: f64) -> f64 {
        (alpha * (1.0 - self.eps) + hp + self.pi_t) / self.m
    }

    /// Producers' terminal wealth for a realised shock `x`, evaluated from the
    /// spot prices directly (legacy hedge included).
    pub fn producer_position(&self, alpha: f64, hp: f64, forward: f64, x: f64) -> f64 {
        let p0 = self.inverse_demand(self.pi0 - alpha);
        let pt = self.terminal_price_unchecked(alpha, x);
        let legacy = self
            .legacy_hedge
            .map_or(0.0, |h| h.position * (pt - h.strike));
        p0 * (self.pi0 - alpha) * (1.0 + self.rate)
            + pt * (self.pi_t + alpha * (1.0 - self.eps))
            + hp * (pt - forward)
            + legacy
    }
}
