//! Forward-market clearing and the derived spot-market quantities.

use crate::error::{Error, Result};
use crate::investor::{self, InvestorResponse};
use crate::levy::LevyModel;
use crate::market::MarketParams;
use crate::producer::{self, ProducerResponse};
use crate::roots::{bisect, expand_bracket, Bracket, Expansion};

/// Which best-response route to use. `Brownian` needs a model without jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Brownian,
    JumpDiffusion,
}

impl ModelKind {
    /// The closed-form route when the model allows it.
    pub fn of(model: &LevyModel) -> Self {
        if model.has_active_jumps() {
            ModelKind::JumpDiffusion
        } else {
            ModelKind::Brownian
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub alpha: f64,
    /// Producers' forward position; speculators hold `−h`.
    pub h: f64,
    pub forward: f64,
    pub p0: f64,
    pub e_pt: f64,
    pub forward_premium: f64,
    pub convenience_yield: f64,
    pub expected_price_change: f64,
    /// `ĥᵖ + ĥˢ` at the solution.
    pub clearing_residual: f64,
    pub producer_utility: f64,
    pub investor_utility: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoForwardEquilibrium {
    pub alpha: f64,
    pub p0: f64,
    pub e_pt: f64,
    pub expected_price_change: f64,
}

fn responses(
    params: &MarketParams,
    model: &LevyModel,
    kind: ModelKind,
    forward: f64,
) -> Result<(ProducerResponse, InvestorResponse)> {
    match kind {
        ModelKind::Brownian => {
            let p = producer::best_response_bm(params, model, forward)?;
            let s = investor::best_response_bm(params, model, p.alpha, forward)?;
            Ok((p, s))
        }
        ModelKind::JumpDiffusion => {
            let p = producer::best_response_jd(params, model, forward)?;
            let s = investor::best_response_jd(params, model, p.alpha, forward)?;
            Ok((p, s))
        }
    }
}

/// Excess forward demand `ĥᵖ(F) + ĥˢ(F, α̂(F))`; decreasing in `F`.
pub fn clearing_map(
    params: &MarketParams,
    model: &LevyModel,
    kind: ModelKind,
    forward: f64,
) -> Result<f64> {
    let (p, s) = responses(params, model, kind, forward)?;
    Ok(p.hp + s.hs)
}

/// Equilibrium forward price, positions and storage.
pub fn solve(params: &MarketParams, model: &LevyModel, kind: ModelKind) -> Result<Equilibrium> {
    params.validate()?;
    let phi = |f: f64| clearing_map(params, model, kind, f);
    let mom = params.terminal_moments(model, 0.0)?;
    let sigma = mom.variance.sqrt();
    let half_width = if sigma > 0.0 {
        10.0 * sigma
    } else {
        1.0 + mom.mean.abs()
    };
    let bracket = match expand_bracket(phi, mom.mean, half_width, 60)? {
        Expansion::Found(b) => b,
        Expansion::Exhausted(b) => {
            return Err(Error::NoBracket {
                lo: b.lo,
                hi: b.hi,
                phi_lo: b.f_lo,
                phi_hi: b.f_hi,
            })
        }
    };
    let xtol = 1e-12 * (1.0 + bracket.lo.abs().max(bracket.hi.abs()));
    let narrow = bisect(phi, bracket, xtol)?;
    let forward = polish(params, model, kind, narrow)?;

    let (p, s) = responses(params, model, kind, forward)?;
    let residual = p.hp + s.hs;
    if !(residual.abs() <= 1e-9 * (1.0 + forward.abs())) {
        return Err(Error::NoConvergence {
            iterations: 200,
            residual,
        });
    }
    let delta = 1e-4 * (1.0 + forward.abs());
    if !(phi(forward - delta)? * phi(forward + delta)? < 0.0) {
        return Err(Error::NonUniqueClearing { forward });
    }

    let p0 = params.spot_price_initial(p.alpha)?;
    let e_pt = params.terminal_moments(model, p.alpha)?.mean;
    Ok(Equilibrium {
        alpha: p.alpha,
        h: p.hp,
        forward,
        p0,
        e_pt,
        forward_premium: forward_premium(e_pt, forward)?,
        convenience_yield: convenience_yield(p0, forward, params.rate, params.eps)?,
        expected_price_change: expected_price_change(p0, e_pt)?,
        clearing_residual: residual,
        producer_utility: p.utility,
        investor_utility: s.utility,
    })
}

/// One Newton step from the best end of a narrow bracket, kept only if it
/// stays inside and lowers the residual. Skipped across a storage clamp kink.
fn polish(params: &MarketParams, model: &LevyModel, kind: ModelKind, b: Bracket) -> Result<f64> {
    let (mut best, mut best_r) = if b.f_lo.abs() <= b.f_hi.abs() {
        (b.lo, b.f_lo)
    } else {
        (b.hi, b.f_hi)
    };
    if best_r == 0.0 {
        return Ok(best);
    }
    let mid = b.midpoint();
    let r_mid = clearing_map(params, model, kind, mid)?;
    if r_mid.abs() < best_r.abs() {
        (best, best_r) = (mid, r_mid);
    }
    let clamp_lo = responses(params, model, kind, b.lo)?.0.clamped;
    let clamp_hi = responses(params, model, kind, b.hi)?.0.clamped;
    if clamp_lo != clamp_hi {
        return Ok(best);
    }
    let step = 1e-6 * (1.0 + best.abs());
    let slope = (clearing_map(params, model, kind, best + step)?
        - clearing_map(params, model, kind, best - step)?)
        / (2.0 * step);
    let next = best - best_r / slope;
    if next.is_finite() && next >= b.lo && next <= b.hi {
        let r_next = clearing_map(params, model, kind, next)?;
        if r_next.abs() < best_r.abs() {
            return Ok(next);
        }
    }
    Ok(best)
}

/// Closed-form forward price when producers store nothing (Brownian model).
pub fn forward_price_zero_storage(params: &MarketParams, model: &LevyModel) -> Result<f64> {
    if model.has_active_jumps() {
        return Err(Error::NotBrownian);
    }
    let g = model.gaussian_summary();
    if g.rho.abs() >= 1.0 {
        return Err(Error::DegenerateCorrelation { rho: g.rho });
    }
    let mom = params.terminal_moments(model, 0.0)?;
    if mom.variance <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let gs = params.gamma_s * (1.0 - g.rho * g.rho);
    let gp = params.gamma_p;
    let t = model.horizon();
    let exposure = params.pi_t + params.legacy_position();
    Ok(mom.mean
        - gp * gs / (gp + gs)
            * mom.variance
            * (g.mpr * g.rho * t.sqrt() / (gs * mom.variance.sqrt()) + exposure))
}

/// `y` with `F = P0(1+R)/(1−ε) − y·P0`.
pub fn convenience_yield(p0: f64, forward: f64, rate: f64, eps: f64) -> Result<f64> {
    if p0 == 0.0 {
        return Err(Error::ZeroSpot(p0));
    }
    if !(eps < 1.0) {
        return Err(Error::DegenerateStorageCost(eps));
    }
    Ok((1.0 + rate) / (1.0 - eps) - forward / p0)
}

/// `(E[P_T] − F)/F`.
pub fn forward_premium(e_pt: f64, forward: f64) -> Result<f64> {
    if forward == 0.0 {
        return Err(Error::ZeroForward);
    }
    Ok((e_pt - forward) / forward)
}

/// `(E[P_T] − P0)/P0`.
pub fn expected_price_change(p0: f64, e_pt: f64) -> Result<f64> {
    if p0 == 0.0 {
        return Err(Error::ZeroSpot(p0));
    }
    Ok((e_pt - p0) / p0)
}

/// Storage and prices when there is no forward market.
pub fn solve_no_forward(params: &MarketParams, model: &LevyModel) -> Result<NoForwardEquilibrium> {
    let r = producer::no_forward(params, model)?;
    let p0 = params.spot_price_initial(r.alpha)?;
    let e_pt = params.terminal_moments(model, r.alpha)?.mean;
    Ok(NoForwardEquilibrium {
        alpha: r.alpha,
        p0,
        e_pt,
        expected_price_change: expected_price_change(p0, e_pt)?,
    })
}
