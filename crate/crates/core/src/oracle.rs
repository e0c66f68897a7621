//! Brute-force reference computations: Monte-Carlo certainty equivalents and
//! exhaustive grid searches. Slow, simple, and independent of the first-order
//! conditions used by the solvers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::investor::investor_utility;
use crate::levy::LevyModel;
use crate::market::MarketParams;
use crate::producer::producer_utility;

const BATCHES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Pair every Gaussian draw with its negative (jump counts shared).
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(n_samples: usize, seed: u64, antithetic: bool) -> Result<Self> {
        let cfg = Self {
            n_samples,
            seed,
            antithetic,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(invalid("n_samples", "must be at least 2"));
        }
        Ok(())
    }

    fn batch_len(&self, batch: usize) -> usize {
        self.n_samples / BATCHES + usize::from(batch < self.n_samples % BATCHES)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    /// Standard deviation of the batch estimates over √(batch count).
    pub std_error: f64,
    /// Kish effective sample size `(Σw)²/Σw²` of the weights `e^{−γ·position}`.
    /// Far below the sample count, a few draws dominate and `std_error`
    /// understates the error.
    pub effective_samples: f64,
}

/// Exact sampler of `(⟨u_demand, Z_T⟩, ⟨u_stock, Z_T⟩)`.
struct TerminalSampler {
    mean: [f64; 2],
    chol: [[f64; 2]; 2],
    atoms: Vec<([f64; 2], Poisson<f64>)>,
    u_demand: [f64; 2],
    u_stock: [f64; 2],
}

impl TerminalSampler {
    fn new(model: &LevyModel) -> Self {
        let t = model.horizon();
        let b = model.drift();
        let mut mean = [b[0] * t, b[1] * t];
        let mut atoms = Vec::new();
        for a in model.jump_atoms() {
            let rate = a.intensity * t;
            mean[0] -= a.point[0] * rate;
            mean[1] -= a.point[1] * rate;
            atoms.push((
                a.point,
                Poisson::new(rate).expect("positive finite jump rate"),
            ));
        }
        let c = model.covariance();
        let l11 = (c[0][0] * t).max(0.0).sqrt();
        let l21 = if l11 > 0.0 { c[1][0] * t / l11 } else { 0.0 };
        let l22 = (c[1][1] * t - l21 * l21).max(0.0).sqrt();
        Self {
            mean,
            chol: [[l11, 0.0], [l21, l22]],
            atoms,
            u_demand: model.u_demand(),
            u_stock: model.u_stock(),
        }
    }

    /// Draws one sample, or an antithetic pair when `pair` is set.
    fn draw(&self, rng: &mut ChaCha8Rng, pair: bool, out: &mut Vec<(f64, f64)>) {
        let n1: f64 = StandardNormal.sample(rng);
        let n2: f64 = StandardNormal.sample(rng);
        let mut base = self.mean;
        for (point, dist) in &self.atoms {
            let k = dist.sample(rng);
            base[0] += k * point[0];
            base[1] += k * point[1];
        }
        let g = [
            self.chol[0][0] * n1,
            self.chol[1][0] * n1 + self.chol[1][1] * n2,
        ];
        out.push(self.project([base[0] + g[0], base[1] + g[1]]));
        if pair {
            out.push(self.project([base[0] - g[0], base[1] - g[1]]));
        }
    }

    fn project(&self, z: [f64; 2]) -> (f64, f64) {
        (
            self.u_demand[0] * z[0] + self.u_demand[1] * z[1],
            self.u_stock[0] * z[0] + self.u_stock[1] * z[1],
        )
    }

    fn batch(&self, cfg: &McConfig, batch: usize) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(batch as u64);
        let len = cfg.batch_len(batch);
        let mut out = Vec::with_capacity(len + 1);
        while out.len() < len {
            self.draw(&mut rng, cfg.antithetic, &mut out);
        }
        out.truncate(len);
        out
    }
}

/// Terminal draws `(x, y)` of the demand shock and the stock log-return,
/// in batch order.
pub fn sample_terminal(model: &LevyModel, cfg: &McConfig) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    let sampler = TerminalSampler::new(model);
    let batches: Vec<_> = (0..BATCHES)
        .into_par_iter()
        .map(|b| sampler.batch(cfg, b))
        .collect();
    Ok(batches.concat())
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `−(1/γ)·log E[e^{−γ·position(x, y)}]` over terminal draws.
pub fn mc_certainty_equivalent<F>(
    model: &LevyModel,
    position: F,
    gamma: f64,
    cfg: &McConfig,
) -> Result<McEstimate>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    cfg.validate()?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid("gamma", "must be positive"));
    }
    let sampler = TerminalSampler::new(model);
    let per_batch: Vec<(f64, usize, f64)> = (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let exponents: Vec<f64> = sampler
                .batch(cfg, b)
                .into_iter()
                .map(|(x, y)| -gamma * position(x, y))
                .collect();
            let doubled: Vec<f64> = exponents.iter().map(|e| 2.0 * e).collect();
            (
                log_sum_exp(&exponents),
                exponents.len(),
                log_sum_exp(&doubled),
            )
        })
        .collect();

    let used: Vec<_> = per_batch.iter().filter(|(_, n, _)| *n > 0).collect();
    let lses: Vec<f64> = used.iter().map(|(l, _, _)| *l).collect();
    let squares: Vec<f64> = used.iter().map(|(_, _, q)| *q).collect();
    let effective_samples = (2.0 * log_sum_exp(&lses) - log_sum_exp(&squares)).exp();
    let value = -(log_sum_exp(&lses) - (cfg.n_samples as f64).ln()) / gamma;
    let ces: Vec<f64> = used
        .iter()
        .map(|(l, n, _)| -(l - (*n as f64).ln()) / gamma)
        .collect();
    let k = ces.len() as f64;
    let std_error = if ces.len() > 1 {
        let mean = ces.iter().sum::<f64>() / k;
        let var = ces.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        f64::INFINITY
    };
    if !value.is_finite() {
        return Err(Error::Overflow);
    }
    Ok(McEstimate {
        value,
        std_error,
        effective_samples,
    })
}

/// Exhaustive argmax of `objective` over the lattice `lo + i·step` inside
/// each `bounds` interval. Non-finite values never win; ties go to the
/// lexicographically smallest point.
pub fn grid_best_response<F>(objective: F, bounds: &[(f64, f64)], steps: &[f64]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert_eq!(bounds.len(), steps.len(), "one step per axis");
    let counts: Vec<usize> = bounds
        .iter()
        .zip(steps)
        .map(|(&(lo, hi), &s)| ((hi - lo) / s + 1e-9).floor().max(0.0) as usize + 1)
        .collect();
    let total: usize = counts.iter().product();
    let point = |mut idx: usize| -> Vec<f64> {
        let mut p = vec![0.0; counts.len()];
        for axis in (0..counts.len()).rev() {
            p[axis] = bounds[axis].0 + (idx % counts[axis]) as f64 * steps[axis];
            idx /= counts[axis];
        }
        p
    };
    let best = (0..total)
        .into_par_iter()
        .map(|i| {
            let v = objective(&point(i));
            (if v.is_finite() { v } else { f64::NEG_INFINITY }, i)
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, b| {
                if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
                    a
                } else {
                    b
                }
            },
        );
    point(if best.1 == usize::MAX { 0 } else { best.1 })
}

/// Coarse-to-fine grid search ending on a lattice of spacing `final_step`.
/// Axes flagged in `hard` never leave their bounds; the others move or grow
/// whenever the argmax lands on the edge of the current box.
pub fn refined_grid_best_response<F>(
    objective: F,
    bounds: &[(f64, f64)],
    hard: &[bool],
    final_step: f64,
) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    const POINTS: f64 = 40.0;
    let dims = bounds.len();
    let mut bx: Vec<(f64, f64)> = bounds.to_vec();
    let mut steps: Vec<f64> = bx
        .iter()
        .map(|&(lo, hi)| ((hi - lo) / POINTS).max(final_step))
        .collect();
    let mut x = vec![0.0; dims];
    loop {
        for _ in 0..40 {
            x = grid_best_response(&objective, &bx, &steps);
            let mut moved = false;
            for a in 0..dims {
                if hard[a] {
                    continue;
                }
                let (lo, hi) = bx[a];
                let half = 0.5 * (hi - lo);
                if x[a] - lo < 0.5 * steps[a] {
                    bx[a] = (x[a] - 1.5 * half, x[a] + 0.5 * half);
                    moved = true;
                } else if hi - x[a] < steps[a] + 1e-9 * steps[a].max(hi.abs()) {
                    bx[a] = (x[a] - 0.5 * half, x[a] + 1.5 * half);
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
        if steps.iter().all(|&s| s <= final_step) {
            return x;
        }
        for a in 0..dims {
            let window = 4.0 * steps[a];
            let next = (steps[a] / 20.0).max(final_step);
            let (lo, hi) = (x[a] - window, x[a] + window);
            bx[a] = if hard[a] {
                (lo.max(bounds[a].0), hi.min(bounds[a].1))
            } else {
                (lo, hi)
            };
            steps[a] = next;
        }
    }
}

/// Grid maximiser `(α, hᵖ)` of the producers' certainty equivalent.
pub fn producer_grid_response(
    params: &MarketParams,
    model: &LevyModel,
    forward: f64,
    step: f64,
) -> (f64, f64) {
    let span = 2.0 * (params.pi_t + params.pi0).max(1.0);
    let x = refined_grid_best_response(
        |p: &[f64]| producer_utility(params, model, p[0], p[1], forward).unwrap_or(f64::NAN),
        &[(0.0, params.pi0), (-span, span)],
        &[true, false],
        step,
    );
    (x[0], x[1])
}

/// Grid maximiser `hˢ` of the speculators' certainty equivalent.
pub fn investor_grid_response(
    params: &MarketParams,
    model: &LevyModel,
    alpha: f64,
    forward: f64,
    step: f64,
) -> f64 {
    let span = 2.0 * (params.pi_t + params.pi0).max(1.0);
    refined_grid_best_response(
        |p: &[f64]| investor_utility(params, model, alpha, p[0], forward).unwrap_or(f64::NAN),
        &[(-span, span)],
        &[false],
        step,
    )[0]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    /// Forward-price lattice spacing in units of the terminal price's
    /// standard deviation.
    pub forward_step_sigmas: f64,
    /// Lattice spacing of the inner best-response searches.
    pub inner_step: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            forward_step_sigmas: 1e-2,
            inner_step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEquilibrium {
    pub alpha: f64,
    pub hp: f64,
    pub hs: f64,
    pub forward: f64,
    /// Grid step used for `forward`.
    pub forward_step: f64,
}

impl OracleEquilibrium {
    pub fn imbalance(&self) -> f64 {
        self.hp + self.hs
    }
}

/// Forward price on a lattice minimising the grid best responses' imbalance.
pub fn oracle_equilibrium(
    params: &MarketParams,
    model: &LevyModel,
    cfg: &GridConfig,
) -> Result<OracleEquilibrium> {
    params.validate()?;
    let mom = params.terminal_moments(model, 0.0)?;
    let sigma = if mom.variance > 0.0 {
        mom.variance.sqrt()
    } else {
        1.0
    };
    let at = |forward: f64| {
        let (alpha, hp) = producer_grid_response(params, model, forward, cfg.inner_step);
        let hs = investor_grid_response(params, model, alpha, forward, cfg.inner_step);
        OracleEquilibrium {
            alpha,
            hp,
            hs,
            forward,
            forward_step: cfg.forward_step_sigmas * sigma,
        }
    };
    let scan = |center: f64, step: f64, half: usize| -> (OracleEquilibrium, bool) {
        let points: Vec<OracleEquilibrium> = (0..=2 * half)
            .into_par_iter()
            .map(|i| at(center + (i as f64 - half as f64) * step))
            .collect();
        let (idx, best) = points
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.imbalance().abs().total_cmp(&b.1.imbalance().abs()))
            .expect("non-empty scan");
        (*best, idx == 0 || idx == 2 * half)
    };

    let mut center = mom.mean;
    let coarse = 0.5 * sigma;
    let mut best = scan(center, coarse, 20);
    for _ in 0..20 {
        if !best.1 {
            break;
        }
        center = best.0.forward;
        best = scan(center, coarse, 20);
    }
    let fine = cfg.forward_step_sigmas * sigma;
    let half = (coarse / fine).ceil() as usize;
    let mut center = best.0.forward;
    let mut best = scan(center, fine, half);
    for _ in 0..20 {
        if !best.1 {
            break;
        }
        center = best.0.forward;
        best = scan(center, fine, half);
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{BrownianFactors, JumpDiffusionFactors};

    fn jump_model() -> LevyModel {
        LevyModel::jump_diffusion(JumpDiffusionFactors {
            sigma1: 0.2,
            sigma2: 3.0,
            rho: 0.5,
            b1_bar: 0.05,
            b2_bar: 0.4,
            intensity: 2.0,
            eta1: -0.1,
            eta2: 1.5,
            horizon: 0.5,
        })
        .unwrap()
    }

    #[test]
    fn config_needs_two_samples() {
        assert!(McConfig::new(1, 0, false).is_err());
        assert!(McConfig::new(2, 0, false).is_ok());
    }

    #[test]
    fn degenerate_model_samples_the_drift() {
        let model = LevyModel::new(
            [0.3, -2.0],
            [[0.0, 0.0], [0.0, 0.0]],
            vec![],
            [1.0, 0.0],
            [0.0, 1.0],
            2.0,
        )
        .unwrap();
        let cfg = McConfig::new(25, 3, true).unwrap();
        let s = sample_terminal(&model, &cfg).unwrap();
        assert_eq!(s.len(), 25);
        assert!(s.iter().all(|&(x, y)| x == -4.0 && y == 0.6));
    }

    #[test]
    fn same_seed_same_draws() {
        let cfg = McConfig::new(1001, 42, false).unwrap();
        let a = sample_terminal(&jump_model(), &cfg).unwrap();
        let b = sample_terminal(&jump_model(), &cfg).unwrap();
        assert_eq!(a, b);
        let c = sample_terminal(&jump_model(), &McConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_cumulants_match() {
        let model = jump_model();
        let n = 200_000;
        let s = sample_terminal(&model, &McConfig::new(n, 2, false).unwrap()).unwrap();
        let t = model.horizon();
        let leg = model.demand_leg();
        let xs: Vec<f64> = s.iter().map(|p| p.0).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
        let se_mean = (var / n as f64).sqrt();
        let se_var = ((m4 - var * var) / n as f64).sqrt();
        assert!((mean - leg.cumulant_derivative(0.0) * t).abs() < 4.0 * se_mean);
        assert!((var - leg.cumulant_second_derivative(0.0) * t).abs() < 4.0 * se_var);
    }

    #[test]
    fn antithetic_pairs_cancel_gaussian_noise() {
        let model = LevyModel::brownian(BrownianFactors {
            sigma1: 0.3,
            sigma2: 4.0,
            rho: -0.2,
            mpr: 0.1,
            horizon: 1.0,
        })
        .unwrap();
        let s = sample_terminal(&model, &McConfig::new(1000, 1, true).unwrap()).unwrap();
        let mean_x = s.iter().map(|p| p.0).sum::<f64>() / 1000.0;
        assert!(mean_x.abs() < 1e-12);
    }

    #[test]
    fn constant_position_is_cash() {
        let cfg = McConfig::new(1000, 9, false).unwrap();
        let ce = mc_certainty_equivalent(&jump_model(), |_, _| 3.25, 0.7, &cfg).unwrap();
        assert!((ce.value - 3.25).abs() < 1e-12);
        assert!(ce.std_error < 1e-12);
        assert!((ce.effective_samples - cfg.n_samples as f64).abs() < 1e-6);
    }

    #[test]
    fn effective_samples_of_lognormal_weights() {
        // weights e^{−γX} with X ~ N(0, s²) keep a fraction e^{−γ²s²}
        let model = LevyModel::brownian(crate::levy::BrownianFactors {
            sigma1: 0.2,
            sigma2: 1.0,
            rho: 0.0,
            mpr: 0.0,
            horizon: 1.0,
        })
        .unwrap();
        let cfg = McConfig::new(400_000, 11, false).unwrap();
        let ce = mc_certainty_equivalent(&model, |x, _| x, 1.0, &cfg).unwrap();
        let fraction = ce.effective_samples / cfg.n_samples as f64;
        assert!((fraction - (-1.0f64).exp()).abs() < 0.02, "{fraction}");
    }

    #[test]
    fn certainty_equivalent_of_a_gaussian() {
        let model = jump_model();
        let gamma = 0.4;
        let cfg = McConfig::new(400_000, 5, true).unwrap();
        let ce = mc_certainty_equivalent(&model, |x, _| 2.0 * x, gamma, &cfg).unwrap();
        let exact = -model.horizon() / gamma * model.cumulant_demand(-2.0 * gamma);
        assert!(
            (ce.value - exact).abs() < 4.0 * ce.std_error,
            "{ce:?} vs {exact}"
        );
    }

    #[test]
    fn overflow_is_reported() {
        let cfg = McConfig::new(10, 9, false).unwrap();
        assert_eq!(
            mc_certainty_equivalent(&jump_model(), |_, _| f64::NEG_INFINITY, 1.0, &cfg),
            Err(Error::Overflow)
        );
    }

    #[test]
    fn grid_finds_nearest_point_of_a_quadratic() {
        let x = grid_best_response(
            |p: &[f64]| -(p[0] - 0.337).powi(2) - 2.0 * (p[1] + 1.121).powi(2),
            &[(-2.0, 2.0), (-2.0, 2.0)],
            &[0.01, 0.01],
        );
        assert!((x[0] - 0.34).abs() < 1e-9 && (x[1] + 1.12).abs() < 1e-9);
    }

    #[test]
    fn grid_ties_go_to_the_smallest_point() {
        let x = grid_best_response(|_: &[f64]| 1.0, &[(0.0, 1.0), (2.0, 3.0)], &[0.25, 0.5]);
        assert_eq!(x, vec![0.0, 2.0]);
    }

    #[test]
    fn refinement_leaves_the_initial_box() {
        let x = refined_grid_best_response(
            |p: &[f64]| -(p[0] - 37.2).powi(2),
            &[(-1.0, 1.0)],
            &[false],
            1e-3,
        );
        assert!((x[0] - 37.2).abs() <= 1e-3);
    }
}
