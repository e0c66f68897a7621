//! Speculators' forward position with the stock market solved out.
//!
//! For a forward position `hˢ` the remaining stock-trading problem is a
//! minimal-entropy problem under the measure tilted by `e^{−ζX}`,
//! `ζ = γs hˢ/m`. Its value comes from the Esscher root of the exponential
//! transform of the tilted stock leg.

use crate::error::{Error, Result};
use crate::levy::{increasing_root, LevyModel};
use crate::market::MarketParams;
use crate::roots::{expand_decreasing, safeguarded_newton, Expansion};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvestorResponse {
    pub hs: f64,
    /// Esscher parameter of the minimal-entropy measure at `hs`.
    pub eta_star: f64,
    /// Minimal relative entropy at `hs`.
    pub entropy: f64,
    pub utility: f64,
}

/// Coefficients of the Brownian objective `d7·hs² + d8·hs + d9`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvestorQuadratic {
    pub d7: f64,
    pub d8: f64,
    pub d9: f64,
}

/// Exp-transformed stock leg under the measure tilted by `e^{−ζX}`, held as
/// `κ̃'(v) = a + v·σ1² + Σ λ̃ z e^{vz}`. Tilted intensities only appear as
/// `ln λ̃ + vz`, so large positions do not cancel huge drift terms.
struct TiltedStock {
    a: f64,
    variance: f64,
    atoms: Vec<TiltedAtom>,
    eta: f64,
}

struct TiltedAtom {
    intensity: f64,
    log_tilted: f64,
    /// Stock return `e^{⟨u1,x⟩} − 1`.
    z: f64,
    /// Demand jump `⟨u2,x⟩`.
    y2: f64,
}

impl TiltedStock {
    fn weight(atom: &TiltedAtom, v: f64) -> f64 {
        (atom.log_tilted + v * atom.z).exp()
    }

    fn derivative(&self, v: f64) -> f64 {
        let jumps: f64 = self.atoms.iter().map(|j| j.z * Self::weight(j, v)).sum();
        self.a + v * self.variance + jumps
    }

    fn second_derivative(&self, v: f64) -> f64 {
        let jumps: f64 = self
            .atoms
            .iter()
            .map(|j| j.z * j.z * Self::weight(j, v))
            .sum();
        self.variance + jumps
    }

    /// `κ̃(η*) + κ2(−ζ)` with the tilted intensities cancelled.
    fn combined_cumulant(&self, model: &LevyModel, zeta: f64) -> f64 {
        let u2 = model.u_demand();
        let c22 = quad(&model.covariance(), u2, u2);
        let v = self.eta;
        let jumps: f64 = self
            .atoms
            .iter()
            .map(|j| Self::weight(j, v) - j.intensity * (1.0 - zeta * j.y2))
            .sum();
        v * self.a + 0.5 * v * v * self.variance - zeta * dot(u2, model.drift())
            + 0.5 * zeta * zeta * c22
            + jumps
    }

    /// `κ̃(v) = v·a + v²σ1²/2 + Σ λ̃ (e^{vz} − 1)`.
    fn cumulant(&self, v: f64) -> f64 {
        let jumps: f64 = self
            .atoms
            .iter()
            .map(|j| j.log_tilted.exp() * (v * j.z).exp_m1())
            .sum();
        v * self.a + 0.5 * v * v * self.variance + jumps
    }
}

fn tilt_rate(params: &MarketParams, hs: f64) -> f64 {
    params.gamma_s * hs / params.m
}

fn tilted_stock(model: &LevyModel, zeta: f64) -> Result<TiltedStock> {
    let (u1, u2) = (model.u_stock(), model.u_demand());
    let c = model.covariance();
    let c11 = quad(&c, u1, u1);
    let c12 = quad(&c, u1, u2);
    let mut a = dot(u1, model.drift()) - zeta * c12 + 0.5 * c11;
    let mut atoms = Vec::new();
    for j in model.jump_atoms() {
        let y1 = dot(u1, j.point);
        let y2 = dot(u2, j.point);
        a -= j.intensity * y1;
        if j.intensity > 0.0 {
            atoms.push(TiltedAtom {
                intensity: j.intensity,
                log_tilted: j.intensity.ln() - zeta * y2,
                z: y1.exp_m1(),
                y2,
            });
        }
    }
    let mut s = TiltedStock {
        a,
        variance: c11,
        atoms,
        eta: 0.0,
    };
    if s.variance == 0.0 && s.atoms.iter().all(|j| j.z == 0.0) {
        return Err(Error::Degenerate);
    }
    s.eta = increasing_root(|v| s.derivative(v), |v| s.second_derivative(v))?;
    Ok(s)
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn quad(c: &[[f64; 2]; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * (c[0][0] * b[0] + c[0][1] * b[1]) + a[1] * (c[1][0] * b[0] + c[1][1] * b[1])
}

/// Minimal relative entropy of the stock-trading problem at position `hs`.
pub fn entropy_value(params: &MarketParams, model: &LevyModel, hs: f64) -> Result<f64> {
    let s = tilted_stock(model, tilt_rate(params, hs))?;
    Ok(-s.cumulant(s.eta) * model.horizon())
}

/// Certainty equivalent of `hs` forwards plus optimal stock trading.
pub fn investor_utility(
    params: &MarketParams,
    model: &LevyModel,
    alpha: f64,
    hs: f64,
    forward: f64,
) -> Result<f64> {
    params.spot_price_initial(alpha)?;
    let zeta = tilt_rate(params, hs);
    let s = tilted_stock(model, zeta)?;
    Ok(value(params, model, alpha, hs, forward, zeta, &s))
}

fn value(
    params: &MarketParams,
    model: &LevyModel,
    alpha: f64,
    hs: f64,
    forward: f64,
    zeta: f64,
    s: &TiltedStock,
) -> f64 {
    let t = model.horizon();
    -t / params.gamma_s * s.combined_cumulant(model, zeta)
        + hs * (params.terminal_price_base(alpha) - forward)
}

/// Derivative of [`investor_utility`] in `hs`. The Esscher root is a
/// minimiser of the transformed cumulant, so only the explicit dependence on
/// the tilt contributes.
pub fn utility_gradient(
    params: &MarketParams,
    model: &LevyModel,
    alpha: f64,
    hs: f64,
    forward: f64,
) -> Result<f64> {
    params.spot_price_initial(alpha)?;
    let zeta = tilt_rate(params, hs);
    let s = tilted_stock(model, zeta)?;
    Ok(gradient_at(params, model, alpha, forward, zeta, &s))
}

fn gradient_at(
    params: &MarketParams,
    model: &LevyModel,
    alpha: f64,
    forward: f64,
    zeta: f64,
    s: &TiltedStock,
) -> f64 {
    gradient_terms(params, model, alpha, forward, zeta, s)
        .iter()
        .sum()
}

/// Additive parts of the marginal utility of `hˢ`. The tilted intensities
/// cancel between the stock and demand sides except through the
/// minimal-entropy intensities `λ̃e^{η*z}`.
fn gradient_terms(
    params: &MarketParams,
    model: &LevyModel,
    alpha: f64,
    forward: f64,
    zeta: f64,
    s: &TiltedStock,
) -> [f64; 5] {
    let (u1, u2) = (model.u_stock(), model.u_demand());
    let c = model.covariance();
    let v = s.eta;
    let k = model.horizon() / params.m;
    let base: f64 = s.atoms.iter().map(|j| j.intensity * j.y2).sum();
    let martingale: f64 = s
        .atoms
        .iter()
        .map(|j| j.y2 * TiltedStock::weight(j, v))
        .sum();
    [
        k * v * quad(&c, u1, u2),
        k * (dot(u2, model.drift()) - zeta * quad(&c, u2, u2)),
        k * (martingale - base),
        params.terminal_price_base(alpha),
        -forward,
    ]
}

/// Brownian objective coefficients; requires a model without jumps.
pub fn quadratic_bm(
    params: &MarketParams,
    model: &LevyModel,
    alpha: f64,
    forward: f64,
) -> Result<InvestorQuadratic> {
    let g = model.gaussian_summary();
    let mom = params.terminal_moments(model, alpha)?;
    let t = model.horizon();
    Ok(InvestorQuadratic {
        d7: -0.5 * params.gamma_s * (1.0 - g.rho * g.rho) * mom.variance,
        d8: mom.mean - forward - g.mpr * g.rho * t.sqrt() * mom.variance.sqrt(),
        d9: t * g.mpr * g.mpr / (2.0 * params.gamma_s),
    })
}

/// Closed-form best response for a model without jumps.
pub fn best_response_bm(
    params: &MarketParams,
    model: &LevyModel,
    alpha: f64,
    forward: f64,
) -> Result<InvestorResponse> {
    params.validate()?;
    if model.has_active_jumps() {
        return Err(Error::NotBrownian);
    }
    let g = model.gaussian_summary();
    if g.sigma1 == 0.0 {
        return Err(Error::Degenerate);
    }
    if g.rho.abs() >= 1.0 {
        return Err(Error::DegenerateCorrelation { rho: g.rho });
    }
    let q = quadratic_bm(params, model, alpha, forward)?;
    if q.d7 == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let hs = -q.d8 / (2.0 * q.d7);
    let zeta = tilt_rate(params, hs);
    let t = model.horizon();
    let gap = g.mpr - g.rho * g.sigma2 * zeta;
    Ok(InvestorResponse {
        hs,
        eta_star: g.rho * g.sigma2 * zeta / g.sigma1 - g.stock_drift / (g.sigma1 * g.sigma1) - 0.5,
        entropy: 0.5 * t * gap * gap,
        utility: q.d7 * hs * hs + q.d8 * hs + q.d9,
    })
}

/// Best response for a general model: root of the concave objective's
/// derivative in `hs`.
pub fn best_response_jd(
    params: &MarketParams,
    model: &LevyModel,
    alpha: f64,
    forward: f64,
) -> Result<InvestorResponse> {
    params.validate()?;
    params.spot_price_initial(alpha)?;
    let grad = |hs: f64| {
        let zeta = tilt_rate(params, hs);
        let s = tilted_stock(model, zeta)?;
        Ok(gradient_at(params, model, alpha, forward, zeta, &s))
    };
    let step = |hs: f64| 1e-6 * (1.0 + hs.abs());
    let curvature = |hs: f64| {
        let h = step(hs);
        Ok((grad(hs + h)? - grad(hs - h)?) / (2.0 * h))
    };
    let half_width = (params.pi_t + params.pi0).max(1.0);
    let bracket = match expand_decreasing(grad, 0.0, half_width, 60)? {
        Expansion::Found(b) => b,
        Expansion::Exhausted(b) => {
            return Err(Error::NoConvergence {
                iterations: 60,
                residual: b.f_lo.abs().min(b.f_hi.abs()),
            })
        }
    };
    let (hs, residual) =
        safeguarded_newton(|hs| Ok((grad(hs)?, curvature(hs)?)), bracket, 1e-15, 200)?;
    let zeta = tilt_rate(params, hs);
    let s = tilted_stock(model, zeta)?;
    let terms = gradient_terms(params, model, alpha, forward, zeta, &s);
    let scale = 1.0 + terms.iter().map(|t| t.abs()).sum::<f64>();
    if !(residual.abs() <= 1e-9 * scale) {
        return Err(Error::NoConvergence {
            iterations: 200,
            residual: residual.abs(),
        });
    }
    let g2 = curvature(hs)?;
    if !(g2 < 0.0) {
        return Err(Error::NotConcave {
            d1: f64::NAN,
            d4: 0.5 * g2,
            discriminant: f64::NAN,
        });
    }
    Ok(InvestorResponse {
        hs,
        eta_star: s.eta,
        entropy: -s.cumulant(s.eta) * model.horizon(),
        utility: value(params, model, alpha, hs, forward, zeta, &s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{BrownianFactors, JumpDiffusionFactors};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn market() -> MarketParams {
        MarketParams::new(200.0, 1.0, 100.0, 100.0, 0.05, 0.01, 0.1, 0.1).unwrap()
    }

    fn brownian(rho: f64, mpr: f64) -> LevyModel {
        LevyModel::brownian(BrownianFactors {
            sigma1: 0.2,
            sigma2: 10.0,
            rho,
            mpr,
            horizon: 0.25,
        })
        .unwrap()
    }

    fn jump(rho: f64, intensity: f64, eta1: f64, eta2: f64, b2_bar: f64) -> LevyModel {
        LevyModel::jump_diffusion(JumpDiffusionFactors {
            sigma1: 0.2,
            sigma2: 10.0,
            rho,
            b1_bar: JumpDiffusionFactors::b1_bar_for_mpr(0.2, intensity, eta1, 0.3),
            b2_bar,
            intensity,
            eta1,
            eta2,
            horizon: 0.25,
        })
        .unwrap()
    }

    #[test]
    fn stock_alone_gives_entropy_gain() {
        let p = market();
        let u = investor_utility(&p, &brownian(0.5, 0.3), 0.0, 0.0, 120.0).unwrap();
        assert_relative_eq!(u, 0.25 / (2.0 * 0.1) * 0.09, max_relative = 1e-12);
    }

    #[test]
    fn no_position_no_opportunity() {
        let u = investor_utility(&market(), &brownian(0.0, 0.0), 0.0, 0.0, 120.0).unwrap();
        assert!(u.abs() < 1e-14);
    }

    #[test]
    fn brownian_utility_is_quadratic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let mut p = market();
            p.gamma_s = rng.gen_range(0.01..0.5);
            let model = brownian(rng.gen_range(-0.95..0.95), rng.gen_range(-0.5..0.5));
            let (a, f, hs) = (
                rng.gen_range(0.0..p.pi0),
                rng.gen_range(80.0..140.0),
                rng.gen_range(-40.0..40.0),
            );
            let q = quadratic_bm(&p, &model, a, f).unwrap();
            let u = investor_utility(&p, &model, a, hs, f).unwrap();
            assert_relative_eq!(
                u,
                q.d7 * hs * hs + q.d8 * hs + q.d9,
                max_relative = 1e-10,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn no_premium_no_position() {
        let p = market();
        let model = brownian(0.6, 0.0);
        let f = p.terminal_moments(&model, 3.0).unwrap().mean;
        let r = best_response_bm(&p, &model, 3.0, f).unwrap();
        assert!(r.hs.abs() < 1e-12);
    }

    #[test]
    fn hedging_demand_is_short_with_positive_correlation() {
        let p = market();
        let model = brownian(0.6, 0.3);
        let f = p.terminal_moments(&model, 3.0).unwrap().mean;
        assert!(best_response_bm(&p, &model, 3.0, f).unwrap().hs < 0.0);
    }

    #[test]
    fn perfect_correlation_is_rejected() {
        let p = market();
        assert_eq!(
            best_response_bm(&p, &brownian(1.0, 0.3), 0.0, 120.0),
            Err(Error::DegenerateCorrelation { rho: 1.0 })
        );
    }

    #[test]
    fn brownian_closed_forms_agree_with_general_route() {
        let p = market();
        let model = brownian(0.4, 0.3);
        let bm = best_response_bm(&p, &model, 2.0, 118.0).unwrap();
        let jd = best_response_jd(&p, &model, 2.0, 118.0).unwrap();
        assert_relative_eq!(bm.hs, jd.hs, max_relative = 1e-9);
        assert_relative_eq!(bm.eta_star, jd.eta_star, max_relative = 1e-9);
        assert_relative_eq!(bm.entropy, jd.entropy, max_relative = 1e-9);
        assert_relative_eq!(bm.utility, jd.utility, max_relative = 1e-9);
    }

    #[test]
    fn entropy_closed_forms() {
        let p = market();
        let model = brownian(0.5, 0.3);
        let offset = p.m * 0.3 / (0.5 * 10.0 * p.gamma_s);
        assert!(entropy_value(&p, &model, offset).unwrap().abs() < 1e-12);
        assert_relative_eq!(
            entropy_value(&p, &model, 0.0).unwrap(),
            0.5 * 0.25 * 0.09,
            max_relative = 1e-12
        );
    }

    #[test]
    fn jump_entropy_is_the_minimum_over_esscher_candidates() {
        let p = market();
        let model = jump(0.3, 2.0, 0.1, 1.5, 0.0);
        let hs = -7.0;
        let h = entropy_value(&p, &model, hs).unwrap();
        let zeta = tilt_rate(&p, hs);
        let transformed = model.esscher_tilt([0.0, -zeta]).stock_leg().exp_transform();
        // minimum of the transformed cumulant over a fine η grid
        let grid_min = (0..=40_000)
            .map(|i| -20.0 + 1e-3 * i as f64)
            .map(|v| transformed.cumulant(v))
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(h, -grid_min * 0.25, max_relative = 1e-6);
        assert!(h >= 0.0);
    }

    #[test]
    fn tilted_stock_matches_the_levy_route() {
        let p = market();
        for model in [
            jump(0.3, 2.0, 0.1, 1.5, 0.0),
            jump(-0.5, 0.7, -0.2, -2.0, 0.4),
        ] {
            for hs in [-6.0, 0.0, 4.0] {
                let zeta = tilt_rate(&p, hs);
                let u2 = model.u_demand();
                let t = model
                    .esscher_tilt([-zeta * u2[0], -zeta * u2[1]])
                    .stock_leg()
                    .exp_transform();
                let s = tilted_stock(&model, zeta).unwrap();
                let eta = t.esscher_root().unwrap();
                assert_relative_eq!(s.eta, eta, max_relative = 1e-9, epsilon = 1e-12);
                assert_relative_eq!(
                    s.cumulant(eta),
                    t.cumulant(eta),
                    max_relative = 1e-10,
                    epsilon = 1e-12
                );
                assert_relative_eq!(
                    s.combined_cumulant(&model, zeta),
                    t.cumulant(s.eta) + model.cumulant_demand(-zeta),
                    max_relative = 1e-10,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let p = market();
        for model in [
            brownian(-0.3, 0.3),
            jump(0.3, 2.0, 0.1, 1.5, 0.0),
            jump(-0.6, 0.7, -0.2, -2.5, 1.3),
        ] {
            for hs in [-30.0, -4.0, 0.0, 11.0] {
                let u = |h: f64| investor_utility(&p, &model, 4.0, h, 117.0).unwrap();
                let s = 1e-5;
                let fd = (u(hs + s) - u(hs - s)) / (2.0 * s);
                let g = utility_gradient(&p, &model, 4.0, hs, 117.0).unwrap();
                assert_relative_eq!(g, fd, max_relative = 1e-6, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn jump_route_with_zero_intensity_matches_closed_form() {
        let p = market();
        let bm = best_response_bm(&p, &brownian(0.3, 0.3), 1.0, 122.0).unwrap();
        let jd = best_response_jd(&p, &jump(0.3, 0.0, 0.2, 2.0, 0.0), 1.0, 122.0).unwrap();
        assert_relative_eq!(bm.hs, jd.hs, max_relative = 1e-9);
        assert_relative_eq!(bm.utility, jd.utility, max_relative = 1e-9);
    }

    #[test]
    fn jump_response_is_a_maximum() {
        let p = market();
        let model = jump(0.3, 2.0, 0.1, 1.5, 0.5);
        let r = best_response_jd(&p, &model, 0.0, 121.0).unwrap();
        let u = |h: f64| investor_utility(&p, &model, 0.0, h, 121.0).unwrap();
        assert!(u(r.hs) >= u(r.hs + 1e-3));
        assert!(u(r.hs) >= u(r.hs - 1e-3));
        assert!(r.entropy >= 0.0);
    }

    #[test]
    fn large_short_position_converges() {
        let p = MarketParams::new(21.44, 1.0, 5.36, 1.69, 0.0702, 0.0383, 0.224, 0.1386).unwrap();
        let model = LevyModel::jump_diffusion(JumpDiffusionFactors {
            sigma1: 0.219,
            sigma2: 1.83,
            rho: 0.63,
            b1_bar: -0.033,
            b2_bar: 0.0,
            intensity: 0.86,
            eta1: 0.177,
            eta2: 1.36,
            horizon: 1.0,
        })
        .unwrap();
        let r = best_response_jd(&p, &model, p.pi0, 41.9).unwrap();
        assert!(r.hs < -50.0);
        let g = |h: f64| utility_gradient(&p, &model, p.pi0, h, 41.9).unwrap();
        assert!(g(r.hs - 1e-3) > 0.0 && g(r.hs + 1e-3) < 0.0);
        let slope: Vec<f64> = (0..=30).map(|i| g(-300.0 + 10.0 * i as f64)).collect();
        assert!(slope.windows(2).all(|w| w[1] < w[0]), "{slope:?}");
    }

    #[test]
    fn alpha_outside_range_is_rejected() {
        let p = market();
        assert!(matches!(
            investor_utility(&p, &brownian(0.0, 0.3), 101.0, 1.0, 100.0),
            Err(Error::AlphaOutOfRange { .. })
        ));
    }
}
