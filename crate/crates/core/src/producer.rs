//! Producers' storage and hedging decision.
//!
//! The certainty equivalent of the producers' position is
//! `q(α,hᵖ) − (T/γp)·κ2(−γp ℓ(α,hᵖ))`. The Gaussian part of `κ2` turns it into
//! the quadratic `d1α² + d2α + d3αhᵖ + d4(hᵖ)² + d5hᵖ + d6`; whatever the
//! demand leg carries beyond that (drift, jumps) depends on `(α, hᵖ)` only
//! through `ℓ`, so the two first-order conditions differ by a linear relation
//! and reduce to one monotone scalar equation.

use crate::error::{Error, Result};
use crate::levy::{LevyModel, UniTriplet};
use crate::market::MarketParams;
use crate::roots::{bracket_at, expand_decreasing, safeguarded_newton, Expansion};

/// Coefficients of the producers' quadratic objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DConstants {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub d5: f64,
    pub d6: f64,
}

impl DConstants {
    pub fn value(&self, alpha: f64, hp: f64) -> f64 {
        self.d1 * alpha * alpha
            + self.d2 * alpha
            + self.d3 * alpha * hp
            + self.d4 * hp * hp
            + self.d5 * hp
            + self.d6
    }

    /// Adds a term `shift · m·ℓ'` to the objective, where `m·ℓ'` is the
    /// producers' total exposure `α(1−ε) + hᵖ + πT + h′`.
    fn with_exposure_term(mut self, params: &MarketParams, shift: f64) -> Self {
        self.d2 += (1.0 - params.eps) * shift;
        self.d5 += shift;
        self.d6 += (params.pi_t + params.legacy_position()) * shift;
        self
    }
}

/// Quadratic coefficients for a Gaussian terminal price with variance
/// `variance_bm`, including a legacy hedge `(h′, F′)` when present.
pub fn d_constants(params: &MarketParams, variance_bm: f64, forward: f64) -> DConstants {
    let MarketParams {
        mu,
        m,
        pi0,
        pi_t,
        eps,
        rate,
        gamma_p,
        ..
    } = *params;
    let e = 1.0 - eps;
    let v = variance_bm;
    let h_legacy = params.legacy_position();
    let exposure = pi_t + h_legacy;
    let legacy_cash = params.legacy_hedge.map_or(0.0, |h| {
        h.position * (params.inverse_demand(pi_t) - h.strike)
    });
    DConstants {
        d1: -((1.0 + rate + e * e) / m + 0.5 * gamma_p * e * e * v),
        d2: (2.0 * (1.0 + rate) * pi0 - e * (2.0 * pi_t + h_legacy) - (rate + eps) * mu) / m
            - gamma_p * e * exposure * v,
        d3: -e / m - gamma_p * e * v,
        d4: -0.5 * gamma_p * v,
        d5: -(forward - (mu - pi_t) / m) - gamma_p * exposure * v,
        d6: pi_t * params.inverse_demand(pi_t)
            + pi0 * params.inverse_demand(pi0) * (1.0 + rate)
            + legacy_cash
            - 0.5 * gamma_p * v * exposure * exposure,
    }
}

/// Optimal storage and forward position at a given forward price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProducerResponse {
    pub alpha: f64,
    pub hp: f64,
    /// Certainty equivalent at the optimum.
    pub utility: f64,
    /// Whether storage sits at 0 or π0.
    pub clamped: bool,
    pub d: DConstants,
}

/// Optimal storage when no forward market exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoForwardResponse {
    pub alpha: f64,
    pub utility: f64,
    pub clamped: bool,
}

/// Certainty equivalent of the producers' terminal position.
pub fn producer_utility(
    params: &MarketParams,
    model: &LevyModel,
    alpha: f64,
    hp: f64,
    forward: f64,
) -> Result<f64> {
    params.spot_price_initial(alpha)?;
    let exposure = params.hedge_ratio(alpha, hp) + params.legacy_position() / params.m;
    let legacy = params.legacy_hedge.map_or(0.0, |h| {
        h.position * (params.terminal_price_base(alpha) - h.strike)
    });
    let g = params.gamma_p;
    Ok(params.quad_revenue(alpha, hp, forward) + legacy
        - model.horizon() / g * model.cumulant_demand(-g * exposure))
}

fn gaussian_price_variance(params: &MarketParams, leg: &UniTriplet, horizon: f64) -> f64 {
    leg.variance * horizon / (params.m * params.m)
}

/// Closed-form best response for a model without jumps.
pub fn best_response_bm(
    params: &MarketParams,
    model: &LevyModel,
    forward: f64,
) -> Result<ProducerResponse> {
    params.validate()?;
    if model.has_active_jumps() {
        return Err(Error::NotBrownian);
    }
    let leg = model.demand_leg();
    let t = model.horizon();
    let d = d_constants(params, gaussian_price_variance(params, &leg, t), forward)
        .with_exposure_term(params, leg.drift * t / params.m);
    let disc = 4.0 * d.d1 * d.d4 - d.d3 * d.d3;
    if !(d.d1 < 0.0 && d.d4 < 0.0 && disc > 0.0) {
        return Err(Error::NotConcave {
            d1: d.d1,
            d4: d.d4,
            discriminant: disc,
        });
    }
    let unconstrained = (d.d3 * d.d5 - 2.0 * d.d2 * d.d4) / disc;
    let alpha = unconstrained.clamp(0.0, params.pi0);
    let hp = -(alpha * d.d3 + d.d5) / (2.0 * d.d4);
    Ok(ProducerResponse {
        alpha,
        hp,
        utility: producer_utility(params, model, alpha, hp, forward)?,
        clamped: alpha != unconstrained,
        d,
    })
}

/// Non-Gaussian part of the marginal risk term: `(T/m)·(κ2'(−γpℓ') + γpℓ'σ2²)`
/// and its derivative in `ℓ'`.
struct ExposureTerm {
    drift: f64,
    atoms: Vec<(f64, f64)>,
    gamma_p: f64,
    scale: f64,
}

impl ExposureTerm {
    fn new(params: &MarketParams, leg: &UniTriplet, horizon: f64) -> Self {
        Self {
            drift: leg.drift,
            atoms: leg
                .jump_atoms
                .iter()
                .filter(|a| a.point != 0.0)
                .map(|a| (a.point, a.intensity))
                .collect(),
            gamma_p: params.gamma_p,
            scale: horizon / params.m,
        }
    }

    fn value(&self, exposure: f64) -> f64 {
        let jumps: f64 = self
            .atoms
            .iter()
            .map(|&(eta, lambda)| lambda * eta * (-self.gamma_p * eta * exposure).exp_m1())
            .sum();
        self.scale * (self.drift + jumps)
    }

    fn slope(&self, exposure: f64) -> f64 {
        let jumps: f64 = self
            .atoms
            .iter()
            .map(|&(eta, lambda)| lambda * eta * eta * (-self.gamma_p * eta * exposure).exp())
            .sum();
        -self.scale * self.gamma_p * jumps
    }
}

/// Best response for a model with jumps: the α-condition minus (1−ε) times the
/// hᵖ-condition is linear, leaving a monotone equation in hᵖ.
pub fn best_response_jd(
    params: &MarketParams,
    model: &LevyModel,
    forward: f64,
) -> Result<ProducerResponse> {
    params.validate()?;
    let leg = model.demand_leg();
    let t = model.horizon();
    let d = d_constants(params, gaussian_price_variance(params, &leg, t), forward);
    let jump = ExposureTerm::new(params, &leg, t);
    let (e, m) = (1.0 - params.eps, params.m);
    let h_legacy = params.legacy_position();
    let exposure = |alpha: f64, hp: f64| (alpha * e + hp + params.pi_t + h_legacy) / m;

    let foc_alpha = |alpha: f64, hp: f64| {
        2.0 * d.d1 * alpha + d.d2 + d.d3 * hp + e * jump.value(exposure(alpha, hp))
    };
    let foc_hedge = |alpha: f64, hp: f64| {
        d.d3 * alpha + 2.0 * d.d4 * hp + d.d5 + jump.value(exposure(alpha, hp))
    };

    let den = 2.0 * d.d1 - e * d.d3;
    let slope = (2.0 * e * d.d4 - d.d3) / den;
    let intercept = (e * d.d5 - d.d2) / den;
    let alpha_of = |hp: f64| slope * hp + intercept;
    let dexp = (e * slope + 1.0) / m;

    let reduced = |hp: f64| {
        let a = alpha_of(hp);
        let l = exposure(a, hp);
        Ok((
            d.d3 * a + 2.0 * d.d4 * hp + d.d5 + jump.value(l),
            d.d3 * slope + 2.0 * d.d4 + jump.slope(l) * dexp,
        ))
    };
    let half_width = (params.pi_t + params.pi0).max(1.0);
    let hp_star = solve_monotone(reduced, 0.0, half_width).map_err(|err| {
        let disc = 4.0 * d.d1 * d.d4 - d.d3 * d.d3;
        if disc > 0.0 {
            err
        } else {
            Error::NotConcave {
                d1: d.d1,
                d4: d.d4,
                discriminant: disc,
            }
        }
    })?;
    let unconstrained = alpha_of(hp_star);

    let (alpha, hp, clamped) = if (0.0..=params.pi0).contains(&unconstrained) {
        (unconstrained, hp_star, false)
    } else {
        let alpha = unconstrained.clamp(0.0, params.pi0);
        let at_fixed = |hp: f64| {
            let l = exposure(alpha, hp);
            Ok((foc_hedge(alpha, hp), 2.0 * d.d4 + jump.slope(l) / m))
        };
        (
            alpha,
            solve_monotone(at_fixed, -alpha * e - params.pi_t, half_width)?,
            true,
        )
    };

    let scale = 1.0 + d.d2.abs() + d.d5.abs();
    let r_h = foc_hedge(alpha, hp);
    let r_a = if clamped { 0.0 } else { foc_alpha(alpha, hp) };
    let residual = r_h.abs().max(r_a.abs());
    if !(residual <= 1e-10 * scale) {
        return Err(Error::NoConvergence {
            iterations: MAX_NEWTON,
            residual,
        });
    }

    let js = jump.slope(exposure(alpha, hp));
    let f_aa = 2.0 * d.d1 + e * e * js / m;
    let f_ah = d.d3 + e * js / m;
    let f_hh = 2.0 * d.d4 + js / m;
    let disc = f_aa * f_hh - f_ah * f_ah;
    if !(f_aa < 0.0 && f_hh < 0.0 && disc > 0.0) {
        return Err(Error::NotConcave {
            d1: 0.5 * f_aa,
            d4: 0.5 * f_hh,
            discriminant: disc,
        });
    }

    Ok(ProducerResponse {
        alpha,
        hp,
        utility: producer_utility(params, model, alpha, hp, forward)?,
        clamped,
        d,
    })
}

const MAX_NEWTON: usize = 200;

/// Root of a decreasing function given with its derivative.
fn solve_monotone<F>(mut f: F, center: f64, half_width: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let bracket = match expand_decreasing(|x| f(x).map(|v| v.0), center, half_width, 60)? {
        Expansion::Found(b) => b,
        Expansion::Exhausted(b) => {
            return Err(Error::NoConvergence {
                iterations: 60,
                residual: b.f_lo.abs().min(b.f_hi.abs()),
            })
        }
    };
    Ok(safeguarded_newton(f, bracket, 1e-15, MAX_NEWTON)?.0)
}

/// Storage decision without a forward market (hᵖ ≡ 0).
pub fn no_forward(params: &MarketParams, model: &LevyModel) -> Result<NoForwardResponse> {
    params.validate()?;
    let leg = model.demand_leg();
    let t = model.horizon();
    let d = d_constants(params, gaussian_price_variance(params, &leg, t), 0.0);
    if !(d.d1 < 0.0) {
        return Err(Error::NotConcave {
            d1: d.d1,
            d4: d.d4,
            discriminant: f64::NAN,
        });
    }
    let jump = ExposureTerm::new(params, &leg, t);
    let e = 1.0 - params.eps;
    let h_legacy = params.legacy_position();
    let exposure = |alpha: f64| (alpha * e + params.pi_t + h_legacy) / params.m;

    let (alpha, clamped) = if jump.atoms.is_empty() {
        let unconstrained = -(d.d2 + e * jump.value(0.0)) / (2.0 * d.d1);
        let alpha = unconstrained.clamp(0.0, params.pi0);
        (alpha, alpha != unconstrained)
    } else {
        let foc = |alpha: f64| {
            let l = exposure(alpha);
            Ok((
                2.0 * d.d1 * alpha + d.d2 + e * jump.value(l),
                2.0 * d.d1 + e * e * jump.slope(l) / params.m,
            ))
        };
        let lo = foc(0.0)?.0;
        let hi = foc(params.pi0)?.0;
        if lo <= 0.0 {
            (0.0, true)
        } else if hi >= 0.0 {
            (params.pi0, true)
        } else {
            let b = bracket_at(|a| foc(a).map(|v| v.0), 0.0, params.pi0)?;
            let (alpha, r) = safeguarded_newton(foc, b, 1e-15, MAX_NEWTON)?;
            let scale = 1.0 + d.d2.abs();
            if !(r.abs() <= 1e-10 * scale) {
                return Err(Error::NoConvergence {
                    iterations: MAX_NEWTON,
                    residual: r.abs(),
                });
            }
            (alpha, false)
        }
    };
    Ok(NoForwardResponse {
        alpha,
        utility: producer_utility(params, model, alpha, 0.0, 0.0)?,
        clamped,
    })
}
