//! Analytical outage pipeline for the equal-SNR combining scheme.
//!
//! The relay-success probability splits into a direct-link term `P1` and two
//! relaying terms `P21`, `P22` expressed through the CDFs of
//! `X = Y_A + Y_B`, `Y = 1 / (Y_A Y_B)` and `Z`. `P21` and `P22` are integrals
//! over `Y`, integrated by parts and approximated with `M`-point
//! Gauss-Chebyshev quadrature.
//!
//! `X` and `Y` are treated as independent inside those integrals. They are
//! not, so the result is an approximation whose gap to the Monte Carlo engine
//! is measured rather than corrected.

use log::warn;
use thiserror::Error;

use crate::params::{dbm_to_watts, DerivedConstants, ParamError, SystemParams};
use crate::special::{bessel_k1, chebyshev_nodes, one_minus_x_k1, SpecialError};

/// Default quadrature order.
pub const DEFAULT_M: usize = 4;
/// Largest accepted quadrature order.
pub const MAX_M: usize = 256;

/// Relative rate gap below which `X` is treated as Erlang-2.
const EQUAL_RATE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error("CDF argument must be a nonnegative number (got {0})")]
    NegativeArgument(f64),
    #[error("chi argument must be strictly positive (got {0})")]
    NonPositiveY(f64),
    #[error("exp(a_t * omega / Y) overflows at Y = {0}")]
    Range(f64),
    #[error("quadrature order must be in 1..={MAX_M} (got {0})")]
    OrderOutOfRange(usize),
    #[error("slope needs p_high > p_low (got {low} and {high} dBm)")]
    BadPowerOrder { low: f64, high: f64 },
    #[error("outage probability underflowed to {value} at {p_dbm} dBm")]
    Underflow { p_dbm: f64, value: f64 },
}

type Result<T> = std::result::Result<T, AnalyticError>;

fn check_arg(delta: f64) -> Result<()> {
    if delta >= 0.0 {
        Ok(())
    } else {
        Err(AnalyticError::NegativeArgument(delta))
    }
}

/// `e^t - 1 - t` without cancellation near zero.
fn exp_m1_m_x(t: f64) -> f64 {
    if t.abs() < 0.5 {
        let mut term = 0.5 * t * t;
        let mut sum = 0.0_f64;
        let mut k = 2.0;
        while term.abs() > 1e-18 * sum.abs() {
            sum += term;
            k += 1.0;
            term *= t / k;
        }
        sum
    } else {
        t.exp_m1() - t
    }
}

/// CDF and survival function of `Y_A + Y_B` with rates `a_a` and `a_b`.
fn hypoexp(delta: f64, a_a: f64, a_b: f64, force_distinct: bool) -> (f64, f64) {
    if delta.is_infinite() {
        return (1.0, 0.0);
    }
    let gap = (a_a - a_b).abs();
    if !force_distinct && gap <= EQUAL_RATE_TOL * a_a.max(a_b) {
        let x = a_b * delta;
        let survival = (-x).exp() * (1.0 + x);
        let cdf = if x < 1.0 {
            (-x).exp() * exp_m1_m_x(x)
        } else {
            1.0 - survival
        };
        return (cdf, survival);
    }
    let lo = a_a.min(a_b);
    let survival = (-lo * delta).exp() * (1.0 - lo / gap * (-gap * delta).exp_m1());
    let cdf = if survival < 0.5 {
        1.0 - survival
    } else {
        (a_b * exp_m1_m_x(-a_a * delta) - a_a * exp_m1_m_x(-a_b * delta)) / (a_a - a_b)
    };
    (cdf, survival)
}

/// CDF of the sum of two exponentials with rates `a_a`, `a_b`, switching to
/// the Erlang-2 form when the rates coincide.
pub fn hypoexponential_cdf(delta: f64, a_a: f64, a_b: f64) -> Result<f64> {
    check_arg(delta)?;
    Ok(hypoexp(delta, a_a, a_b, false).0)
}

/// The distinct-rate form, used even when the rates are nearly equal.
pub fn hypoexponential_cdf_distinct(delta: f64, a_a: f64, a_b: f64) -> Result<f64> {
    check_arg(delta)?;
    Ok(hypoexp(delta, a_a, a_b, true).0)
}

/// CDF of `X = Y_A + Y_B`.
pub fn cdf_x(delta: f64, c: &DerivedConstants) -> Result<f64> {
    check_arg(delta)?;
    Ok(hypoexp(delta, c.a_a, c.a_b, false).0)
}

/// `1 - F_X(delta)`.
pub fn survival_x(delta: f64, c: &DerivedConstants) -> Result<f64> {
    check_arg(delta)?;
    Ok(hypoexp(delta, c.a_a, c.a_b, false).1)
}

/// Density of `X`.
pub fn pdf_x(delta: f64, c: &DerivedConstants) -> Result<f64> {
    check_arg(delta)?;
    if delta.is_infinite() {
        return Ok(0.0);
    }
    let (a_a, a_b) = (c.a_a, c.a_b);
    let gap = (a_a - a_b).abs();
    if gap <= EQUAL_RATE_TOL * a_a.max(a_b) {
        return Ok(a_b * a_b * delta * (-a_b * delta).exp());
    }
    let lo = a_a.min(a_b);
    Ok(a_a * a_b / gap * (-lo * delta).exp() * -(-gap * delta).exp_m1())
}

/// Argument of `K_1` in the CDF of `Y`.
fn y_bessel_arg(delta: f64, c: &DerivedConstants) -> f64 {
    2.0 * (c.a_a * c.a_b / delta).sqrt()
}

/// CDF of `Y = 1 / (Y_A Y_B)`: `u K_1(u)` with `u = 2 sqrt(a_A a_B / delta)`.
pub fn cdf_y(delta: f64, c: &DerivedConstants) -> Result<f64> {
    check_arg(delta)?;
    if delta == 0.0 {
        return Ok(0.0);
    }
    if delta.is_infinite() {
        return Ok(1.0);
    }
    let u = y_bessel_arg(delta, c);
    Ok(u * bessel_k1(u)?)
}

/// `1 - F_Y(delta)`, accurate when `F_Y` is close to one.
pub fn survival_y(delta: f64, c: &DerivedConstants) -> Result<f64> {
    check_arg(delta)?;
    if delta == 0.0 {
        return Ok(1.0);
    }
    if delta.is_infinite() {
        return Ok(0.0);
    }
    Ok(one_minus_x_k1(y_bessel_arg(delta, c))?)
}

/// CDF of `Z`.
pub fn cdf_z(delta: f64, c: &DerivedConstants) -> Result<f64> {
    check_arg(delta)?;
    Ok(-(-c.a_t * delta).exp_m1())
}

/// Probability that the direct link alone meets the threshold.
pub fn p1(c: &DerivedConstants) -> f64 {
    (-c.gamma_th * c.a_t / c.rho).exp()
}

/// `1 - P1`: outage of the direct link alone.
pub fn direct_outage(c: &DerivedConstants) -> f64 {
    -(-c.gamma_th * c.a_t / c.rho).exp_m1()
}

/// Integration limits in `X` and `Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationBounds {
    /// Smallest admissible `X`: `max(P_th / P, 2 gamma_th / rho)`.
    pub t_min: f64,
    /// Largest admissible `Y`.
    pub delta_max: f64,
    /// Split point between the two relaying terms, clamped to `delta_max`.
    pub delta_min: f64,
}

pub fn bounds(c: &DerivedConstants) -> IntegrationBounds {
    let th = c.gain_threshold();
    let t_min = c.p_th_ratio.max(2.0 * th);
    let delta_max = 1.0 / ((t_min - th) * th);
    let delta_min = (c.omega / th).min(delta_max);
    IntegrationBounds {
        t_min,
        delta_max,
        delta_min,
    }
}

/// Upper limit on `X` for a given `Y`: `rho / (Y gamma_th) + gamma_th / rho`.
fn x_limit(y: f64, c: &DerivedConstants) -> f64 {
    let th = c.gain_threshold();
    1.0 / (y * th) + th
}

fn check_y(y: f64) -> Result<()> {
    if y > 0.0 {
        Ok(())
    } else {
        Err(AnalyticError::NonPositiveY(y))
    }
}

/// `F_X(x_limit(Y)) - F_X(t_min)`.
pub fn chi2(y: f64, c: &DerivedConstants, b: &IntegrationBounds) -> Result<f64> {
    check_y(y)?;
    let (f_lo, s_lo) = hypoexp(b.t_min, c.a_a, c.a_b, false);
    let (f_hi, s_hi) = hypoexp(x_limit(y, c), c.a_a, c.a_b, false);
    Ok(if f_lo > 0.5 { s_lo - s_hi } else { f_hi - f_lo })
}

/// `(exp(a_t omega / Y) - 1) * chi2(Y)`.
pub fn chi1(y: f64, c: &DerivedConstants, b: &IntegrationBounds) -> Result<f64> {
    let growth = (c.a_t * c.omega / y).exp_m1();
    if !growth.is_finite() {
        return Err(AnalyticError::Range(y));
    }
    Ok(growth * chi2(y, c, b)?)
}

/// Derivative of [`chi2`] in `Y`.
pub fn chi2_prime(y: f64, c: &DerivedConstants, _b: &IntegrationBounds) -> Result<f64> {
    check_y(y)?;
    let th = c.gain_threshold();
    let density = pdf_x(x_limit(y, c), c)?;
    if density == 0.0 {
        return Ok(0.0);
    }
    Ok(-density / (th * y * y))
}

/// Derivative of [`chi1`] in `Y`.
pub fn chi1_prime(y: f64, c: &DerivedConstants, b: &IntegrationBounds) -> Result<f64> {
    check_y(y)?;
    let k = c.a_t * c.omega;
    let growth = (k / y).exp_m1();
    if !growth.is_finite() {
        return Err(AnalyticError::Range(y));
    }
    let chi2_val = chi2(y, c, b)?;
    let chi2_der = chi2_prime(y, c, b)?;
    Ok(-(k / (y * y)) * (growth + 1.0) * chi2_val + growth * chi2_der)
}

/// Node placement for the `P21` correction integral over `[delta_min, delta_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XiQuadrature {
    /// Nodes mapped affinely onto `[delta_min, delta_max]` and the integrand
    /// `F_Y chi1'` used as is.
    Linear,
    /// Nodes placed uniformly in `Y^-1/2`, with the constant `F_Y(delta_min)`
    /// taken out of the integrand and integrated exactly.
    ///
    /// The interval spans several decades and the integrand decays like
    /// `Y^-3` away from `delta_min`, so the affine map leaves most nodes where
    /// the integrand is negligible. The boundary term and the integral then
    /// nearly cancel. Both changes are exact identities; only the quadrature
    /// error differs.
    #[default]
    InverseSqrt,
}

/// Every intermediate of the quadrature outage approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticTerms {
    pub bounds: IntegrationBounds,
    pub m_count: usize,
    pub p1: f64,
    /// Relaying success with `Y` above `delta_min`, clamped to
    /// `[0, 1 - p1 - p22]`.
    pub p21: f64,
    /// Relaying success with `Y` below `delta_min`, clamped to `[0, 1 - p1]`.
    pub p22: f64,
    pub p21_raw: f64,
    pub p22_raw: f64,
    /// Boundary terms of both integrations by parts.
    pub theta_term: f64,
    /// Quadrature estimate of `int F_Y chi1' dY` over `[delta_min, delta_max]`.
    pub xi: f64,
    /// Quadrature estimate of `int F_Y chi2' dY` over `[0, delta_min]`.
    pub xi_lower: f64,
    /// `chi1` at `delta_min` and `delta_max`.
    pub chi1_at_bounds: (f64, f64),
    /// `chi2` at `delta_min`.
    pub chi2_at_bounds: f64,
    /// Outage from the rearranged sum, clamped to `[0, 1]`.
    pub outage: f64,
    pub outage_raw: f64,
    /// How many of `p21`, `p22`, `outage` had to be clamped.
    pub clamp_events: u32,
}

/// Evaluates the quadrature outage approximation.
pub fn analytic_terms(
    params: &SystemParams,
    m_count: usize,
    rule: XiQuadrature,
) -> Result<AnalyticTerms> {
    if m_count == 0 || m_count > MAX_M {
        return Err(AnalyticError::OrderOutOfRange(m_count));
    }
    let c = params.derive()?;
    let b = bounds(&c);
    let nodes = chebyshev_nodes(m_count)?;

    let p1 = p1(&c);
    let q1 = direct_outage(&c);
    let fy_min = cdf_y(b.delta_min, &c)?;
    let fy_max = cdf_y(b.delta_max, &c)?;
    let chi1_min = chi1(b.delta_min, &c, &b)?;
    let chi1_max = chi1(b.delta_max, &c, &b)?;
    let chi2_min = chi2(b.delta_min, &c, &b)?;

    let xi = match rule {
        XiQuadrature::Linear => nodes.integrate(b.delta_min, b.delta_max, |y| {
            weighted(cdf_y(y, &c)?, || chi1_prime(y, &c, &b))
        })?,
        XiQuadrature::InverseSqrt => {
            let sy_min = survival_y(b.delta_min, &c)?;
            let t_lo = b.delta_max.sqrt().recip();
            let t_hi = b.delta_min.sqrt().recip();
            let shifted = nodes.integrate(t_lo, t_hi, |t| {
                let y = (t * t).recip();
                let excess = sy_min - survival_y(y, &c)?;
                weighted(excess, || Ok(chi1_prime(y, &c, &b)? * 2.0 / (t * t * t)))
            })?;
            fy_min * (chi1_max - chi1_min) + shifted
        }
    };
    let xi_lower = nodes.integrate(0.0, b.delta_min, |y| {
        weighted(cdf_y(y, &c)?, || chi2_prime(y, &c, &b))
    })?;

    let boundary_21 = fy_max * chi1_max - fy_min * chi1_min;
    let boundary_22 = fy_min * chi2_min;
    let p21_raw = p1 * (boundary_21 - xi);
    let p22_raw = q1 * (boundary_22 - xi_lower);
    let theta_term = p1 * boundary_21 + q1 * boundary_22;
    let outage_raw = q1 - theta_term + p1 * xi + q1 * xi_lower;

    // P21 + P22 cannot exceed 1 - P1, so P21 is capped by what P22 leaves
    let mut clamp_events = 0;
    let mut clamp = |name: &str, v: f64, hi: f64| {
        let clamped = v.clamp(0.0, hi);
        if clamped != v {
            clamp_events += 1;
            warn!(
                "{name} = {v:e} clamped to [0,{hi:e}] (m = {m_count}, rho = {:e})",
                c.rho
            );
        }
        clamped
    };
    let p22 = clamp("p22", p22_raw, q1);
    let p21 = clamp("p21", p21_raw, q1 - p22);
    let outage = clamp("outage", outage_raw, 1.0);

    Ok(AnalyticTerms {
        bounds: b,
        m_count,
        p1,
        p21,
        p22,
        p21_raw,
        p22_raw,
        theta_term,
        xi,
        xi_lower,
        chi1_at_bounds: (chi1_min, chi1_max),
        chi2_at_bounds: chi2_min,
        outage,
        outage_raw,
        clamp_events,
    })
}

/// `weight * f()`, skipping `f` when the weight vanishes so that
/// zero-weight nodes never evaluate an overflowing derivative.
fn weighted<F>(weight: f64, f: F) -> Result<f64>
where
    F: FnOnce() -> Result<f64>,
{
    if weight == 0.0 {
        Ok(0.0)
    } else {
        Ok(weight * f()?)
    }
}

pub fn p21(params: &SystemParams, m_count: usize) -> Result<f64> {
    Ok(analytic_terms(params, m_count, XiQuadrature::default())?.p21)
}

pub fn p22(params: &SystemParams, m_count: usize) -> Result<f64> {
    Ok(analytic_terms(params, m_count, XiQuadrature::default())?.p22)
}

/// System outage probability of the equal-SNR combining scheme, by
/// `m_count`-point Gauss-Chebyshev quadrature.
pub fn outage_quadrature(params: &SystemParams, m_count: usize) -> Result<f64> {
    Ok(analytic_terms(params, m_count, XiQuadrature::default())?.outage)
}

/// High-SNR form `(1 - P1) [1 - F_Y(delta_min) + F_Y(delta_min) F_X(t_min)]`.
pub fn outage_high_snr(params: &SystemParams) -> Result<f64> {
    let c = params.derive()?;
    let b = bounds(&c);
    let fy = cdf_y(b.delta_min, &c)?;
    let sy = survival_y(b.delta_min, &c)?;
    let fx = cdf_x(b.t_min, &c)?;
    Ok((direct_outage(&c) * (sy + fy * fx)).clamp(0.0, 1.0))
}

/// Negative slope of `log P_out` against `log rho` between two points.
pub fn log_log_slope(rho_low: f64, p_low: f64, rho_high: f64, p_high: f64) -> f64 {
    -(p_high.log10() - p_low.log10()) / (rho_high.log10() - rho_low.log10())
}

/// Diversity slope of any outage model between two transmit powers.
pub fn slope_of<F>(params: &SystemParams, p_low_dbm: f64, p_high_dbm: f64, model: F) -> Result<f64>
where
    F: Fn(&SystemParams) -> Result<f64>,
{
    if p_high_dbm.is_nan() || p_low_dbm.is_nan() || p_high_dbm <= p_low_dbm {
        return Err(AnalyticError::BadPowerOrder {
            low: p_low_dbm,
            high: p_high_dbm,
        });
    }
    let eval = |p_dbm: f64| -> Result<(f64, f64)> {
        let at = SystemParams {
            p_tx: dbm_to_watts(p_dbm)?,
            ..*params
        };
        let value = model(&at)?;
        if !(value > 0.0 && value.is_finite()) {
            return Err(AnalyticError::Underflow { p_dbm, value });
        }
        Ok((at.derive()?.rho, value))
    };
    let (rho_low, p_low) = eval(p_low_dbm)?;
    let (rho_high, p_high) = eval(p_high_dbm)?;
    Ok(log_log_slope(rho_low, p_low, rho_high, p_high))
}

/// Diversity slope of the high-SNR outage form.
pub fn diversity_slope(params: &SystemParams, p_low_dbm: f64, p_high_dbm: f64) -> Result<f64> {
    slope_of(params, p_low_dbm, p_high_dbm, outage_high_snr)
}

/// Diversity slope of the direct link alone, `1 - P1`.
pub fn direct_diversity_slope(
    params: &SystemParams,
    p_low_dbm: f64,
    p_high_dbm: f64,
) -> Result<f64> {
    slope_of(params, p_low_dbm, p_high_dbm, |p| {
        Ok(direct_outage(&p.derive()?))
    })
}
