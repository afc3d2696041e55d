use super::gamma::{log_gamma, log_gamma_variate, stirling_correction, STIRLING_MIN};
use super::rng::RngStream;
use crate::error::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Shape parameters handed to the incomplete beta function are clamped to
/// this range before evaluation.
pub const SHAPE_MIN: f64 = 1e-4;
pub const SHAPE_MAX: f64 = 1e6;

const CF_MAX_ITER: usize = 500;
const CF_TOL: f64 = 1e-14;
const CF_TINY: f64 = 1e-300;

fn check_shape(op: &'static str, name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::domain(
            op,
            format!("{name} must be positive and finite, got {v}"),
        ));
    }
    Ok(())
}

/// ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a + b).
///
/// Large arguments go through the Stirling series with the leading terms
/// rearranged so that the huge ln Γ values never get subtracted from each
/// other.
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    check_shape("log_beta", "a", a)?;
    check_shape("log_beta", "b", b)?;
    Ok(log_beta_unchecked(a, b))
}

pub(crate) fn log_beta_unchecked(a: f64, b: f64) -> f64 {
    let (small, large) = if a <= b { (a, b) } else { (b, a) };
    let sum = small + large;
    if small >= STIRLING_MIN {
        // a ln(a/(a+b)) + b ln(b/(a+b)) - ½ ln(ab/(a+b)) + ½ ln 2π + δ-terms
        -small * (large / small).ln_1p()
            - large * (small / large).ln_1p()
            - 0.5 * (small.ln() + large.ln() - sum.ln())
            + HALF_LN_2PI
            + stirling_correction(small)
            + stirling_correction(large)
            - stirling_correction(sum)
    } else if large >= STIRLING_MIN {
        // ln Γ(large) − ln Γ(small + large), expanded
        let tail = -(large - 0.5) * (small / large).ln_1p() - small * sum.ln()
            + small
            + stirling_correction(large)
            - stirling_correction(sum);
        log_gamma(small) + tail
    } else {
        log_gamma(small) + log_gamma(large) - log_gamma(sum)
    }
}

fn clamp_shape(name: &str, v: f64) -> f64 {
    let c = v.clamp(SHAPE_MIN, SHAPE_MAX);
    if c != v {
        log::debug!("incomplete_beta_reg: {name}={v} clamped to {c}");
    }
    c
}

/// Regularized incomplete beta function I_x(a, b), i.e. the CDF of
/// Beta(a, b) at x.
///
/// Uses the continued fraction (modified Lentz) with the usual switch to
/// `1 − I_{1−x}(b, a)` above `x = (a + 1) / (a + b + 2)`. Symmetric shapes
/// are first reduced with `I_x(a, a) = ½ I_{4x(1−x)}(a, ½)` (x ≤ ½), which
/// keeps the fraction short even for shapes near the clamp ceiling.
pub fn incomplete_beta_reg(x: f64, a: f64, b: f64) -> Result<f64> {
    const OP: &str = "incomplete_beta_reg";
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(OP, format!("x must lie in [0, 1], got {x}")));
    }
    check_shape(OP, "a", a)?;
    check_shape(OP, "b", b)?;
    let a = clamp_shape("a", a);
    let b = clamp_shape("b", b);
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }

    let value = if a == b {
        let y = 4.0 * x * (1.0 - x);
        let dev = 1.0 - 2.0 * x;
        let yc = dev * dev;
        let half = 0.5 * regularized(y, yc, a, 0.5)?;
        if x <= 0.5 {
            half
        } else {
            1.0 - half
        }
    } else {
        regularized(x, 1.0 - x, a, b)?
    };
    Ok(value.clamp(0.0, 1.0))
}

/// I_x(a, b) given both x and its complement, for 0 < x < 1.
fn regularized(x: f64, xc: f64, a: f64, b: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    if xc == 0.0 {
        return Ok(1.0);
    }
    // take each log from whichever of x, xc is the smaller and more accurate
    let (ln_x, ln_xc) = if x <= xc {
        (x.ln(), (-x).ln_1p())
    } else {
        ((-xc).ln_1p(), xc.ln())
    };
    let ln_front = a * ln_x + b * ln_xc - log_beta_unchecked(a, b);
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(front * continued_fraction(x, a, b)? / a)
    } else {
        Ok(1.0 - front * continued_fraction(xc, b, a)? / b)
    }
}

fn continued_fraction(x: f64, a: f64, b: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;

    let guard = |v: f64| if v.abs() < CF_TINY { CF_TINY } else { v };

    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        let step = d * c;
        h *= step;

        if (step - 1.0).abs() < CF_TOL {
            return Ok(h);
        }
    }
    Err(Error::NonConvergence {
        op: "incomplete_beta_reg",
        iterations: CF_MAX_ITER,
        x,
        a,
        b,
    })
}

/// One variate of the symmetric Beta(alpha, alpha), drawn as G1 / (G1 + G2)
/// from two independent Gamma(alpha, 1) variates.
pub fn beta_sample(alpha: f64, rng: &mut RngStream) -> Result<f64> {
    check_shape("beta_sample", "alpha", alpha)?;
    let g1 = log_gamma_variate(alpha, rng);
    let g2 = log_gamma_variate(alpha, rng);
    // G1 / (G1 + G2) = 1 / (1 + exp(ln G2 - ln G1))
    Ok(1.0 / (1.0 + (g2 - g1).exp()))
}
