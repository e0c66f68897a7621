//! Scalar root finding for monotone equations: bracket expansion, bisection
//! and a Newton iteration safeguarded by the bracket.
//!
//! Every residual in this crate is either a derivative of a concave objective
//! or a clearing map, so a sign change brackets exactly one root.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Bracket {
    pub fn has_sign_change(&self) -> bool {
        self.f_lo == 0.0 || self.f_hi == 0.0 || (self.f_lo < 0.0) != (self.f_hi < 0.0)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Shrinks the bracket to whichever half keeps the sign change.
    fn update(&mut self, x: f64, fx: f64) {
        if (fx < 0.0) == (self.f_lo < 0.0) {
            self.lo = x;
            self.f_lo = fx;
        } else {
            self.hi = x;
            self.f_hi = fx;
        }
    }
}

pub(crate) enum Expansion {
    Found(Bracket),
    /// Last interval tried, still without a sign change.
    Exhausted(Bracket),
}

/// Doubles the half-width of `[center - half_width, center + half_width]`
/// until the endpoints straddle a root, at most `max_doublings` times.
/// Expansion stops early once `f` fails or returns NaN at the wider ends.
pub(crate) fn expand_bracket<F>(
    mut f: F,
    center: f64,
    half_width: f64,
    max_doublings: usize,
) -> Result<Expansion>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut w = half_width;
    let mut b = Bracket {
        lo: center - w,
        hi: center + w,
        f_lo: f(center - w)?,
        f_hi: f(center + w)?,
    };
    for _ in 0..max_doublings {
        if b.has_sign_change() {
            return Ok(Expansion::Found(b));
        }
        w *= 2.0;
        let (lo, hi) = (center - w, center + w);
        match (f(lo), f(hi)) {
            (Ok(f_lo), Ok(f_hi)) if !f_lo.is_nan() && !f_hi.is_nan() => {
                b = Bracket { lo, hi, f_lo, f_hi };
            }
            _ => return Ok(Expansion::Exhausted(b)),
        }
    }
    if b.has_sign_change() {
        Ok(Expansion::Found(b))
    } else {
        Ok(Expansion::Exhausted(b))
    }
}

/// For a decreasing `f`: steps from `center` towards the root, doubling the
/// step each time, until the last two points straddle it. Stops early once
/// `f` fails or returns NaN.
pub(crate) fn expand_decreasing<F>(
    mut f: F,
    center: f64,
    step: f64,
    max_doublings: usize,
) -> Result<Expansion>
where
    F: FnMut(f64) -> Result<f64>,
{
    let ordered = |a: f64, fa: f64, b: f64, fb: f64| {
        if a <= b {
            Bracket {
                lo: a,
                hi: b,
                f_lo: fa,
                f_hi: fb,
            }
        } else {
            Bracket {
                lo: b,
                hi: a,
                f_lo: fb,
                f_hi: fa,
            }
        }
    };
    let f_center = f(center)?;
    let dir = if f_center > 0.0 { 1.0 } else { -1.0 };
    let (mut x, mut fx, mut w) = (center, f_center, step);
    for _ in 0..=max_doublings {
        let next = x + dir * w;
        match f(next) {
            Ok(f_next) if !f_next.is_nan() => {
                let b = ordered(x, fx, next, f_next);
                if b.has_sign_change() {
                    return Ok(Expansion::Found(b));
                }
                (x, fx, w) = (next, f_next, 2.0 * w);
            }
            _ => break,
        }
    }
    Ok(Expansion::Exhausted(ordered(center, f_center, x, fx)))
}

pub(crate) fn bracket_at<F>(mut f: F, lo: f64, hi: f64) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<f64>,
{
    Ok(Bracket {
        lo,
        hi,
        f_lo: f(lo)?,
        f_hi: f(hi)?,
    })
}

/// Bisects until the bracket is narrower than `xtol` or an exact zero is hit.
pub(crate) fn bisect<F>(mut f: F, mut b: Bracket, xtol: f64) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<f64>,
{
    if b.f_lo == 0.0 {
        return Ok(Bracket {
            hi: b.lo,
            f_hi: 0.0,
            ..b
        });
    }
    if b.f_hi == 0.0 {
        return Ok(Bracket {
            lo: b.hi,
            f_lo: 0.0,
            ..b
        });
    }
    // 200 halvings exhaust any finite f64 interval
    for _ in 0..200 {
        if b.width() <= xtol {
            break;
        }
        let mid = b.midpoint();
        if mid <= b.lo || mid >= b.hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(Bracket {
                lo: mid,
                hi: mid,
                f_lo: 0.0,
                f_hi: 0.0,
            });
        }
        b.update(mid, fm);
    }
    Ok(b)
}

/// Newton's method confined to a sign-changing bracket; any step leaving the
/// bracket (or with a useless derivative) is replaced by a bisection step.
/// Returns the final iterate and its residual.
pub(crate) fn safeguarded_newton<F>(
    mut f: F,
    mut b: Bracket,
    xtol: f64,
    max_iter: usize,
) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    if b.f_lo == 0.0 {
        return Ok((b.lo, 0.0));
    }
    if b.f_hi == 0.0 {
        return Ok((b.hi, 0.0));
    }
    let mut x = b.midpoint();
    let (mut fx, mut dfx) = f(x)?;
    for _ in 0..max_iter {
        if fx == 0.0 {
            return Ok((x, fx));
        }
        b.update(x, fx);
        let newton = x - fx / dfx;
        let next = if dfx != 0.0 && newton.is_finite() && newton > b.lo && newton < b.hi {
            newton
        } else {
            b.midpoint()
        };
        let step = (next - x).abs();
        x = next;
        (fx, dfx) = f(x)?;
        if step <= xtol * (1.0 + x.abs()) || b.width() <= xtol * (1.0 + x.abs()) {
            break;
        }
    }
    Ok((x, fx))
}
