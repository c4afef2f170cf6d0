#![allow(dead_code)]

use std::path::PathBuf;

use ehrelay::SystemParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outage from the integral form, evaluated with adaptive quadrature in
/// `log Y` at relative tolerance 1e-11. Reference parameters, 0..40 dBm.
pub const INTEGRAL_OUTAGE_BY_POWER: [(f64, f64); 9] = [
    (0.0, 5.3684725536e-02),
    (5.0, 1.6331029711e-02),
    (10.0, 4.3711630766e-03),
    (15.0, 9.6460012025e-04),
    (20.0, 1.7529916727e-04),
    (25.0, 2.7358977588e-05),
    (30.0, 3.8315703143e-06),
    (35.0, 4.9820901478e-07),
    (40.0, 6.1564699134e-08),
];

/// Same oracle at 10 dBm with `d_B = 20 - d_A`.
pub const INTEGRAL_OUTAGE_BY_DISTANCE: [(f64, f64); 17] = [
    (2.0, 1.2150943893e-03),
    (3.0, 2.5799871165e-03),
    (4.0, 3.6745330391e-03),
    (5.0, 4.3711630766e-03),
    (6.0, 4.7786818457e-03),
    (7.0, 5.0133942922e-03),
    (8.0, 5.1471424665e-03),
    (9.0, 5.2166810657e-03),
    (10.0, 5.2383434576e-03),
    (11.0, 5.2166810657e-03),
    (12.0, 5.1471424665e-03),
    (13.0, 5.0133942922e-03),
    (14.0, 4.7786818457e-03),
    (15.0, 4.3711630766e-03),
    (16.0, 3.6745330391e-03),
    (17.0, 2.5799871165e-03),
    (18.0, 1.2150943893e-03),
];

pub const POWER_GRID: [f64; 7] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];

pub fn at_power(p_dbm: f64) -> SystemParams {
    SystemParams::reference().with_p_tx_dbm(p_dbm).unwrap()
}

/// Relay on the line between terminals 20 m apart, 10 dBm.
pub fn at_distance(d_a: f64) -> SystemParams {
    SystemParams {
        d_a,
        d_b: 20.0 - d_a,
        ..SystemParams::reference()
    }
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}

/// `(x, K_1(x))` pairs of the high-precision table.
pub fn k1_table() -> Vec<(f64, f64)> {
    std::fs::read_to_string(fixture("bessel_k1.txt"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let mut it = l.split_whitespace().map(|v| v.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect()
}

/// Adaptive Simpson with Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// `n` points uniform in `log` over `[lo, hi]`, reproducible from `seed`.
pub fn log_uniform(lo: f64, hi: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|_| (a + (b - a) * rng.random::<f64>()).exp())
        .collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Density of the sum of two exponentials with distinct rates.
pub fn hypoexp_pdf(x: f64, a: f64, b: f64) -> f64 {
    a * b / (a - b) * ((-b * x).exp() - (-a * x).exp())
}
