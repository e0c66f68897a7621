//! Bivariate Lévy factor model with finitely many jump atoms.
//!
//! The drift is stored in the compensated convention, so the cumulant of
//! `Z_1` reads `κ(u) = ⟨u,b⟩ + ⟨u,cu⟩/2 + Σ λ_j (e^{⟨u,x_j⟩} − 1 − ⟨u,x_j⟩)`
//! and `b` is the mean of `Z_1`. A finite jump measure makes every
//! exponential moment finite.

use crate::error::{invalid, Error, Result};
use crate::roots::{bisect, expand_bracket, Expansion};

pub type Vec2 = [f64; 2];

fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn quad_form(c: &[Vec2; 2], u: Vec2, v: Vec2) -> f64 {
    u[0] * (c[0][0] * v[0] + c[0][1] * v[1]) + u[1] * (c[1][0] * v[0] + c[1][1] * v[1])
}

/// A point mass of the Lévy measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpAtom {
    pub point: Vec2,
    pub intensity: f64,
}

/// A point mass of a univariate Lévy measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniAtom {
    pub point: f64,
    pub intensity: f64,
}

/// Bivariate Lévy process `Z` with stock factor `Y = ⟨u_stock, Z⟩` and
/// terminal demand shock `X = ⟨u_demand, Z_T⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyModel {
    drift: Vec2,
    covariance: [Vec2; 2],
    jump_atoms: Vec<JumpAtom>,
    u_stock: Vec2,
    u_demand: Vec2,
    horizon: f64,
}

/// Correlated Brownian factors; the stock leg is parameterised by its
/// market price of risk and the demand shock has zero drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrownianFactors {
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
    pub mpr: f64,
    pub horizon: f64,
}

/// Correlated Brownian factors plus one common Poisson shock moving the stock
/// log-price by `eta1` and the demand by `eta2`. `b1_bar`, `b2_bar` are the
/// mean rates of the two legs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpDiffusionFactors {
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
    pub b1_bar: f64,
    pub b2_bar: f64,
    pub intensity: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub horizon: f64,
}

impl JumpDiffusionFactors {
    /// Stock mean rate giving `e^Y` the expected log-growth `sigma1 * mpr`,
    /// i.e. the jump-diffusion analogue of a market price of risk.
    pub fn b1_bar_for_mpr(sigma1: f64, intensity: f64, eta1: f64, mpr: f64) -> f64 {
        sigma1 * mpr - 0.5 * sigma1 * sigma1 - intensity * (eta1.exp_m1() - eta1)
    }
}

/// Gaussian summary of a model: leg volatilities, correlation and the stock
/// market price of risk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSummary {
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
    pub stock_drift: f64,
    pub demand_drift: f64,
    pub mpr: f64,
}

impl LevyModel {
    pub fn new(
        drift: Vec2,
        covariance: [Vec2; 2],
        jump_atoms: Vec<JumpAtom>,
        u_stock: Vec2,
        u_demand: Vec2,
        horizon: f64,
    ) -> Result<Self> {
        if !drift.iter().all(|b| b.is_finite()) {
            return Err(invalid("drift", "must be finite"));
        }
        if !covariance.iter().flatten().all(|c| c.is_finite()) {
            return Err(invalid("covariance", "must be finite"));
        }
        let [[a, b], [b2, d]] = covariance;
        if (b - b2).abs() > 1e-12 {
            return Err(invalid("covariance", "must be symmetric"));
        }
        let half_gap = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        let smallest = 0.5 * (a + d) - half_gap;
        if smallest < -1e-12 {
            return Err(invalid(
                "covariance",
                format!("smallest eigenvalue {smallest} is negative"),
            ));
        }
        for atom in &jump_atoms {
            if !(atom.intensity > 0.0 && atom.intensity.is_finite()) {
                return Err(invalid(
                    "jump_atoms",
                    "intensities must be positive and finite",
                ));
            }
            if !atom.point.iter().all(|x| x.is_finite()) {
                return Err(invalid("jump_atoms", "points must be finite"));
            }
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid("horizon", "must be positive"));
        }
        if !u_stock.iter().chain(u_demand.iter()).all(|u| u.is_finite()) {
            return Err(invalid("factor vectors", "must be finite"));
        }
        Ok(Self {
            drift,
            covariance: [[a, b], [b, d]],
            jump_atoms,
            u_stock,
            u_demand,
            horizon,
        })
    }

    /// Stock log-price `Y_t = b1 t + σ1 W¹_t`, demand shock `X_t = σ2 W²_t`,
    /// with `b1 = σ1·mpr − σ1²/2`.
    pub fn brownian(f: BrownianFactors) -> Result<Self> {
        check_factor_common(f.sigma1, f.sigma2, f.rho)?;
        if !f.mpr.is_finite() {
            return Err(invalid("mpr", "must be finite"));
        }
        let b1 = f.sigma1 * f.mpr - 0.5 * f.sigma1 * f.sigma1;
        Self::new(
            [b1, 0.0],
            covariance_of(f.sigma1, f.sigma2, f.rho),
            Vec::new(),
            [1.0, 0.0],
            [0.0, 1.0],
            f.horizon,
        )
    }

    /// Jump-diffusion factors. The uncompensated drifts `b̄_i − λη_i` become
    /// the compensated drifts `b̄_i`; a zero intensity drops the atom.
    pub fn jump_diffusion(f: JumpDiffusionFactors) -> Result<Self> {
        check_factor_common(f.sigma1, f.sigma2, f.rho)?;
        if !(f.intensity >= 0.0 && f.intensity.is_finite()) {
            return Err(invalid("intensity", "must be nonnegative"));
        }
        let atoms = if f.intensity > 0.0 {
            vec![JumpAtom {
                point: [f.eta1, f.eta2],
                intensity: f.intensity,
            }]
        } else {
            Vec::new()
        };
        Self::new(
            [f.b1_bar, f.b2_bar],
            covariance_of(f.sigma1, f.sigma2, f.rho),
            atoms,
            [1.0, 0.0],
            [0.0, 1.0],
            f.horizon,
        )
    }

    pub fn drift(&self) -> Vec2 {
        self.drift
    }

    pub fn covariance(&self) -> [Vec2; 2] {
        self.covariance
    }

    pub fn jump_atoms(&self) -> &[JumpAtom] {
        &self.jump_atoms
    }

    pub fn u_stock(&self) -> Vec2 {
        self.u_stock
    }

    pub fn u_demand(&self) -> Vec2 {
        self.u_demand
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Cumulant generating function of `Z_1`.
    pub fn cumulant(&self, u: Vec2) -> f64 {
        let jumps: f64 = self
            .jump_atoms
            .iter()
            .map(|a| {
                let ux = dot(u, a.point);
                a.intensity * (ux.exp_m1() - ux)
            })
            .sum();
        dot(u, self.drift) + 0.5 * quad_form(&self.covariance, u, u) + jumps
    }

    /// `κ2(v) = κ(v·u_demand)`; the cumulant of `X` is `κ2(v)·T`.
    pub fn cumulant_demand(&self, v: f64) -> f64 {
        self.cumulant([v * self.u_demand[0], v * self.u_demand[1]])
    }

    /// Law of `Z` under the measure with density `e^{⟨ξ,Z_T⟩}/E[e^{⟨ξ,Z_T⟩}]`.
    pub fn esscher_tilt(&self, xi: Vec2) -> LevyModel {
        let cxi = [
            self.covariance[0][0] * xi[0] + self.covariance[0][1] * xi[1],
            self.covariance[1][0] * xi[0] + self.covariance[1][1] * xi[1],
        ];
        let mut drift = [self.drift[0] + cxi[0], self.drift[1] + cxi[1]];
        let mut atoms = Vec::with_capacity(self.jump_atoms.len());
        for a in &self.jump_atoms {
            let w = dot(xi, a.point);
            let shift = a.intensity * w.exp_m1();
            drift[0] += a.point[0] * shift;
            drift[1] += a.point[1] * shift;
            let intensity = a.intensity * w.exp();
            if intensity > 0.0 {
                atoms.push(JumpAtom {
                    point: a.point,
                    intensity,
                });
            }
        }
        LevyModel {
            drift,
            covariance: self.covariance,
            jump_atoms: atoms,
            u_stock: self.u_stock,
            u_demand: self.u_demand,
            horizon: self.horizon,
        }
    }

    /// Triplet of the univariate process `⟨u, Z⟩`.
    pub fn project(&self, u: Vec2) -> UniTriplet {
        UniTriplet {
            drift: dot(u, self.drift),
            variance: quad_form(&self.covariance, u, u).max(0.0),
            jump_atoms: self
                .jump_atoms
                .iter()
                .map(|a| UniAtom {
                    point: dot(u, a.point),
                    intensity: a.intensity,
                })
                .collect(),
        }
    }

    pub fn stock_leg(&self) -> UniTriplet {
        self.project(self.u_stock)
    }

    pub fn demand_leg(&self) -> UniTriplet {
        self.project(self.u_demand)
    }

    /// True when some atom moves the stock or the demand factor.
    pub fn has_active_jumps(&self) -> bool {
        self.jump_atoms
            .iter()
            .any(|a| dot(self.u_stock, a.point) != 0.0 || dot(self.u_demand, a.point) != 0.0)
    }

    pub fn gaussian_summary(&self) -> GaussianSummary {
        let var1 = quad_form(&self.covariance, self.u_stock, self.u_stock).max(0.0);
        let var2 = quad_form(&self.covariance, self.u_demand, self.u_demand).max(0.0);
        let (sigma1, sigma2) = (var1.sqrt(), var2.sqrt());
        let rho = if sigma1 > 0.0 && sigma2 > 0.0 {
            (quad_form(&self.covariance, self.u_stock, self.u_demand) / (sigma1 * sigma2))
                .clamp(-1.0, 1.0)
        } else {
            0.0
        };
        let stock_drift = dot(self.u_stock, self.drift);
        let mpr = if sigma1 > 0.0 {
            (stock_drift + 0.5 * var1) / sigma1
        } else {
            0.0
        };
        GaussianSummary {
            sigma1,
            sigma2,
            rho,
            stock_drift,
            demand_drift: dot(self.u_demand, self.drift),
            mpr,
        }
    }
}

fn check_factor_common(sigma1: f64, sigma2: f64, rho: f64) -> Result<()> {
    if !(sigma1 >= 0.0 && sigma1.is_finite()) {
        return Err(invalid("sigma1", "must be nonnegative"));
    }
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(invalid("sigma2", "must be nonnegative"));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(invalid("rho", "must lie in [-1, 1]"));
    }
    Ok(())
}

fn covariance_of(sigma1: f64, sigma2: f64, rho: f64) -> [Vec2; 2] {
    let off = rho * sigma1 * sigma2;
    [[sigma1 * sigma1, off], [off, sigma2 * sigma2]]
}

/// Univariate Lévy triplet `(b, c, ν)` with finite atomic `ν`, compensated
/// drift convention.
#[derive(Debug, Clone, PartialEq)]
pub struct UniTriplet {
    pub drift: f64,
    pub variance: f64,
    pub jump_atoms: Vec<UniAtom>,
}

impl UniTriplet {
    pub fn new(drift: f64, variance: f64, jump_atoms: Vec<UniAtom>) -> Result<Self> {
        if !drift.is_finite() {
            return Err(invalid("drift", "must be finite"));
        }
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(invalid("variance", "must be nonnegative"));
        }
        if jump_atoms
            .iter()
            .any(|a| !(a.intensity > 0.0 && a.intensity.is_finite()) || !a.point.is_finite())
        {
            return Err(invalid(
                "jump_atoms",
                "intensities must be positive, points finite",
            ));
        }
        Ok(Self {
            drift,
            variance,
            jump_atoms,
        })
    }

    pub fn cumulant(&self, v: f64) -> f64 {
        let jumps: f64 = self
            .jump_atoms
            .iter()
            .map(|a| {
                let vx = v * a.point;
                a.intensity * (vx.exp_m1() - vx)
            })
            .sum();
        v * self.drift + 0.5 * v * v * self.variance + jumps
    }

    pub fn cumulant_derivative(&self, v: f64) -> f64 {
        let jumps: f64 = self
            .jump_atoms
            .iter()
            .map(|a| a.intensity * a.point * (v * a.point).exp_m1())
            .sum();
        self.drift + v * self.variance + jumps
    }

    pub fn cumulant_second_derivative(&self, v: f64) -> f64 {
        let jumps: f64 = self
            .jump_atoms
            .iter()
            .map(|a| a.intensity * a.point * a.point * (v * a.point).exp())
            .sum();
        self.variance + jumps
    }

    /// Triplet of `Ỹ` with `𝓔(Ỹ) = e^Y`: drift `κ(1)`, same variance,
    /// atoms moved from `x` to `e^x − 1`.
    pub fn exp_transform(&self) -> UniTriplet {
        UniTriplet {
            drift: self.cumulant(1.0),
            variance: self.variance,
            jump_atoms: self
                .jump_atoms
                .iter()
                .map(|a| UniAtom {
                    point: a.point.exp_m1(),
                    intensity: a.intensity,
                })
                .collect(),
        }
    }

    /// True when the cumulant is affine in `v`.
    pub fn is_affine(&self) -> bool {
        self.variance == 0.0 && self.jump_atoms.iter().all(|a| a.point == 0.0)
    }

    /// The unique `η*` with `κ'(η*) = 0`: the Esscher parameter turning the
    /// process into a martingale (applied to an exp-transformed triplet it
    /// yields the minimal-entropy martingale measure of `e^Y`).
    pub fn esscher_root(&self) -> Result<f64> {
        if self.is_affine() {
            return Err(Error::Degenerate);
        }
        increasing_root(
            |v| self.cumulant_derivative(v),
            |v| self.cumulant_second_derivative(v),
        )
    }
}

/// Root of an increasing `g` with derivative `g2`: doubling from `[−1, 1]`,
/// bisection to 1e-13, then up to three Newton steps kept only while they
/// lower `|g|`.
pub(crate) fn increasing_root(g: impl Fn(f64) -> f64, g2: impl Fn(f64) -> f64) -> Result<f64> {
    let f = |v: f64| Ok(g(v));
    let bracket = match expand_bracket(f, 0.0, 1.0, 60)? {
        Expansion::Found(b) => b,
        Expansion::Exhausted(b) => {
            return Err(Error::NoRoot {
                lo: b.lo,
                hi: b.hi,
                f_lo: b.f_lo,
                f_hi: b.f_hi,
            })
        }
    };
    let b = bisect(f, bracket, 1e-13)?;
    let (mut x, mut gx) = if b.f_lo.abs() <= b.f_hi.abs() {
        (b.lo, b.f_lo)
    } else {
        (b.hi, b.f_hi)
    };
    let mid = b.midpoint();
    let gm = g(mid);
    if gm.abs() < gx.abs() {
        (x, gx) = (mid, gm);
    }
    for _ in 0..3 {
        let slope = g2(x);
        if gx == 0.0 || slope <= 0.0 {
            break;
        }
        let next = x - gx / slope;
        let g_next = g(next);
        if !(g_next.abs() < gx.abs()) {
            break;
        }
        (x, gx) = (next, g_next);
    }
    Ok(x)
}
