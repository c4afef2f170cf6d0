//! Numerical kernels: the modified Bessel function `K_1`, Gauss-Chebyshev
//! nodes, and central differences.

use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialError {
    #[error("argument must be strictly positive (got {0})")]
    NonPositiveArgument(f64),
    #[error("quadrature needs at least one node")]
    NoNodes,
    #[error("finite-difference step must be strictly positive (got {0})")]
    BadStep(f64),
    #[error("function value is not finite at {0}")]
    NonFiniteValue(f64),
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Below this argument `K_1` is evaluated from its power series, above it from
/// Steed's continued fraction.
const SERIES_LIMIT: f64 = 2.0;

/// Modified Bessel function of the second kind, order one.
///
/// Accurate to roughly 1e-15 relative over `[1e-8, 700]`. Returns 0 once the
/// result underflows.
pub fn bessel_k1(x: f64) -> Result<f64, SpecialError> {
    if x.is_nan() || x <= 0.0 {
        return Err(SpecialError::NonPositiveArgument(x));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x <= SERIES_LIMIT {
        let (i1, tail) = series_parts(x);
        Ok(1.0 / x + (0.5 * x).ln() * i1 - 0.25 * x * tail)
    } else {
        Ok(k1_continued_fraction(x))
    }
}

/// `1 - x K_1(x)`, evaluated without cancellation for small `x` where
/// `x K_1(x) -> 1`.
pub fn one_minus_x_k1(x: f64) -> Result<f64, SpecialError> {
    if x.is_nan() || x <= 0.0 {
        return Err(SpecialError::NonPositiveArgument(x));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    if x <= SERIES_LIMIT {
        let (i1, tail) = series_parts(x);
        Ok(-x * (0.5 * x).ln() * i1 + 0.25 * x * x * tail)
    } else {
        Ok(1.0 - x * k1_continued_fraction(x))
    }
}

/// Returns `I_1(x)` and the digamma-weighted sum
/// `sum_k [psi(k+1) + psi(k+2)] (x^2/4)^k / (k! (k+1)!)`.
fn series_parts(x: f64) -> (f64, f64) {
    let t = 0.25 * x * x;
    // term_k = t^k / (k! (k+1)!)
    let mut term = 1.0;
    let mut harmonic = 0.0; // H_k
    let mut i1_sum = 0.0;
    let mut tail = 0.0;
    for k in 0..200 {
        let kf = k as f64;
        let psi_sum = -2.0 * EULER_GAMMA + 2.0 * harmonic + 1.0 / (kf + 1.0);
        i1_sum += term;
        tail += psi_sum * term;
        harmonic += 1.0 / (kf + 1.0);
        term *= t / ((kf + 1.0) * (kf + 2.0));
        if term < 1e-18 * i1_sum {
            break;
        }
    }
    (0.5 * x * i1_sum, tail)
}

/// Steed's method for the second continued fraction (Temme), order zero, then
/// `K_1` from the ratio `K_1 / K_0`.
fn k1_continued_fraction(x: f64) -> f64 {
    const EPS: f64 = 1e-17;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..10_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    let h = a1 * h;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    k0 * (x + 0.5 - h) / x
}

/// Gauss-Chebyshev nodes `nu_m = cos((2m - 1) pi / (2M))` and their weight
/// factors `pi / (2M) * sqrt(1 - nu_m^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureNodes {
    pub m_count: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn chebyshev_nodes(m_count: usize) -> Result<QuadratureNodes, SpecialError> {
    if m_count == 0 {
        return Err(SpecialError::NoNodes);
    }
    let m = m_count as f64;
    let (nodes, weights) = (1..=m_count)
        .map(|i| {
            let angle = (2.0 * i as f64 - 1.0) * FRAC_PI_2 / m;
            // sin(angle) = sqrt(1 - cos^2(angle)) without the cancellation
            (angle.cos(), FRAC_PI_2 / m * angle.sin())
        })
        .unzip();
    Ok(QuadratureNodes {
        m_count,
        nodes,
        weights,
    })
}

impl QuadratureNodes {
    /// Approximates `int_lo^hi f(y) dy` after the affine map from `[-1, 1]`.
    pub fn integrate<F, E>(&self, lo: f64, hi: f64, mut f: F) -> Result<f64, E>
    where
        F: FnMut(f64) -> Result<f64, E>,
    {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut sum = 0.0;
        for (&nu, &w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(half * nu + mid)?;
        }
        Ok((hi - lo) * sum)
    }
}

/// Step that balances truncation and rounding error of a central difference.
pub fn fd_step(x: f64) -> f64 {
    x.abs().max(1.0) * f64::EPSILON.cbrt()
}

/// `(f(x + h) - f(x - h)) / (2h)`.
pub fn central_difference<F>(mut f: F, x: f64, h: f64) -> Result<f64, SpecialError>
where
    F: FnMut(f64) -> f64,
{
    if h.is_nan() || h <= 0.0 || !h.is_finite() {
        return Err(SpecialError::BadStep(h));
    }
    let hi = f(x + h);
    if !hi.is_finite() {
        return Err(SpecialError::NonFiniteValue(x + h));
    }
    let lo = f(x - h);
    if !lo.is_finite() {
        return Err(SpecialError::NonFiniteValue(x - h));
    }
    Ok((hi - lo) / (2.0 * h))
}
