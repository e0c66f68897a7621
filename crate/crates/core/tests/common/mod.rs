//! Random parameter draws shared by the integration tests.

#![allow(dead_code)]

use forward_equilibrium::{
    BrownianFactors, JumpDiffusionFactors, LevyModel, MarketParams, ModelKind,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Draw {
    pub market: MarketParams,
    pub model: LevyModel,
    pub kind: ModelKind,
    pub factors: Factors,
}

#[derive(Debug, Clone, Copy)]
pub enum Factors {
    Brownian(BrownianFactors),
    Jump(JumpDiffusionFactors),
}

/// Market with price variance of order 4 and producer risk aversion chosen so
/// that `γp` times the Gaussian price variance lies in `[0.6, 1.2]`.
pub fn market(rng: &mut ChaCha8Rng, variance: f64) -> MarketParams {
    let gamma_p = rng.gen_range(0.6..1.2) / variance;
    MarketParams::new(
        rng.gen_range(15.0..25.0),
        1.0,
        rng.gen_range(4.0..6.0),
        rng.gen_range(1.0..6.0),
        rng.gen_range(0.0..0.1),
        rng.gen_range(0.0..0.05),
        gamma_p,
        rng.gen_range(0.1..0.4),
    )
    .unwrap()
}

pub fn brownian_factors(rng: &mut ChaCha8Rng) -> BrownianFactors {
    BrownianFactors {
        sigma1: rng.gen_range(0.15..0.35),
        sigma2: rng.gen_range(1.5..2.5),
        rho: rng.gen_range(-0.8..0.8),
        mpr: rng.gen_range(0.0..0.4),
        horizon: 1.0,
    }
}

pub fn jump_factors(rng: &mut ChaCha8Rng) -> JumpDiffusionFactors {
    let sigma1 = rng.gen_range(0.15..0.35);
    let intensity = rng.gen_range(0.3..1.5);
    let eta1 = rng.gen_range(-0.2..0.2);
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    JumpDiffusionFactors {
        sigma1,
        sigma2: rng.gen_range(1.5..2.5),
        rho: rng.gen_range(-0.8..0.8),
        b1_bar: JumpDiffusionFactors::b1_bar_for_mpr(
            sigma1,
            intensity,
            eta1,
            rng.gen_range(0.0..0.4),
        ),
        b2_bar: 0.0,
        intensity,
        eta1,
        eta2: sign * rng.gen_range(0.3..1.5),
        horizon: 1.0,
    }
}

pub fn brownian_draw(rng: &mut ChaCha8Rng) -> Draw {
    let f = brownian_factors(rng);
    let model = LevyModel::brownian(f).unwrap();
    let variance = f.sigma2 * f.sigma2 * f.horizon;
    Draw {
        market: market(rng, variance),
        model,
        kind: ModelKind::Brownian,
        factors: Factors::Brownian(f),
    }
}

pub fn jump_draw(rng: &mut ChaCha8Rng) -> Draw {
    let f = jump_factors(rng);
    let model = LevyModel::jump_diffusion(f).unwrap();
    let variance = f.sigma2 * f.sigma2 * f.horizon;
    Draw {
        market: market(rng, variance),
        model,
        kind: ModelKind::JumpDiffusion,
        factors: Factors::Jump(f),
    }
}

/// The Brownian model with the same Gaussian part as a jump-diffusion.
pub fn brownian_twin(f: &JumpDiffusionFactors) -> LevyModel {
    LevyModel::brownian(BrownianFactors {
        sigma1: f.sigma1,
        sigma2: f.sigma2,
        rho: f.rho,
        mpr: (f.b1_bar + 0.5 * f.sigma1 * f.sigma1) / f.sigma1,
        horizon: f.horizon,
    })
    .unwrap()
}

/// `|a − b| ≤ tol·max(|a|, |b|)`, exact equality included.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}
