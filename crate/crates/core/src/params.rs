//! System parameters, unit conversion and the constants derived from them.

use thiserror::Error;

/// Errors raised while validating a [`SystemParams`] value.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("{name} must be strictly positive (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("beta out of (0,1) (got {0})")]
    BetaOutOfRange(f64),
    #[error("eta out of (0,1] (got {0})")]
    EtaOutOfRange(f64),
}

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(p_dbm: f64) -> Result<f64, ParamError> {
    if !p_dbm.is_finite() {
        return Err(ParamError::NonFinite("p_dbm"));
    }
    Ok(10f64.powf(p_dbm / 10.0) * 1e-3)
}

/// Converts a power in watts to dBm.
pub fn watts_to_dbm(p_watts: f64) -> Result<f64, ParamError> {
    if !p_watts.is_finite() {
        return Err(ParamError::NonFinite("p_watts"));
    }
    if p_watts <= 0.0 {
        return Err(ParamError::NonPositive {
            name: "p_watts",
            value: p_watts,
        });
    }
    Ok(10.0 * (p_watts * 1e3).log10())
}

/// Physical and protocol constants of the relay network. All powers are in
/// linear watts; dBm only appears at the configuration boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Transmit power of each terminal (W).
    pub p_tx: f64,
    /// AWGN power, identical at every node (W).
    pub noise_power: f64,
    /// Energy-harvester circuit sensitivity (W).
    pub p_th: f64,
    /// Energy conversion efficiency, in (0, 1].
    pub eta: f64,
    /// Fraction of the block spent harvesting, in (0, 1).
    pub beta: f64,
    /// Block duration (s).
    pub block_time: f64,
    pub d_a: f64,
    pub d_b: f64,
    pub d_t: f64,
    /// Path-loss exponent of the terminal-relay links.
    pub alpha_s: f64,
    /// Path-loss exponent of the direct link.
    pub alpha_t: f64,
    /// Mean of `|h_A|^2`.
    pub lambda_a: f64,
    /// Mean of `|h_B|^2`.
    pub lambda_b: f64,
    /// Mean of `|g|^2`.
    pub lambda_t: f64,
    /// Target rate in bit/s/Hz; the SNR threshold is `2^rate - 1`.
    pub rate: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl SystemParams {
    /// Reference operating point: `d_A = 5`, `d_t = 20`, `d_B = 15` m,
    /// `sigma^2 = -70` dBm, `P_th = -30` dBm, `eta = 0.6`, `U = 3`,
    /// `alpha_s = alpha_t = 4`, `beta = 0.25`, `lambda_A = lambda_B = 1`,
    /// `lambda_t = 2`, and `P = 10` dBm.
    pub fn reference() -> Self {
        Self {
            p_tx: 1e-2,
            noise_power: 1e-10,
            p_th: 1e-6,
            eta: 0.6,
            beta: 0.25,
            block_time: 1.0,
            d_a: 5.0,
            d_b: 15.0,
            d_t: 20.0,
            alpha_s: 4.0,
            alpha_t: 4.0,
            lambda_a: 1.0,
            lambda_b: 1.0,
            lambda_t: 2.0,
            rate: 3.0,
        }
    }

    /// Returns a copy with the terminal transmit power set from dBm.
    pub fn with_p_tx_dbm(mut self, p_dbm: f64) -> Result<Self, ParamError> {
        self.p_tx = dbm_to_watts(p_dbm)?;
        Ok(self)
    }

    /// SNR threshold `2^U - 1`.
    pub fn gamma_th(&self) -> f64 {
        self.rate.exp2() - 1.0
    }

    /// Checks every invariant and returns the parameters unchanged.
    pub fn validate(self) -> Result<Self, ParamError> {
        let positive = [
            ("p_tx", self.p_tx),
            ("noise_power", self.noise_power),
            ("p_th", self.p_th),
            ("block_time", self.block_time),
            ("d_a", self.d_a),
            ("d_b", self.d_b),
            ("d_t", self.d_t),
            ("alpha_s", self.alpha_s),
            ("alpha_t", self.alpha_t),
            ("lambda_a", self.lambda_a),
            ("lambda_b", self.lambda_b),
            ("lambda_t", self.lambda_t),
            ("rate", self.rate),
        ];
        for (name, value) in positive {
            if !value.is_finite() {
                return Err(ParamError::NonFinite(name));
            }
            if value <= 0.0 {
                return Err(ParamError::NonPositive { name, value });
            }
        }
        if !self.beta.is_finite() || self.beta <= 0.0 || self.beta >= 1.0 {
            return Err(ParamError::BetaOutOfRange(self.beta));
        }
        if !self.eta.is_finite() || self.eta <= 0.0 || self.eta > 1.0 {
            return Err(ParamError::EtaOutOfRange(self.eta));
        }
        let gamma_th = self.gamma_th();
        if !(gamma_th > 0.0 && gamma_th.is_finite()) {
            return Err(ParamError::NonPositive {
                name: "gamma_th",
                value: gamma_th,
            });
        }
        Ok(self)
    }

    /// Validates and computes the derived constants.
    pub fn derive(&self) -> Result<DerivedConstants, ParamError> {
        let p = self.validate()?;
        Ok(DerivedConstants {
            rho: p.p_tx / p.noise_power,
            a_a: p.d_a.powf(p.alpha_s) / p.lambda_a,
            a_b: p.d_b.powf(p.alpha_s) / p.lambda_b,
            a_t: p.d_t.powf(p.alpha_t) / p.lambda_t,
            omega: omega(p.beta, p.eta),
            gamma_th: p.gamma_th(),
            p_th_ratio: p.p_th / p.p_tx,
        })
    }
}

/// `3 beta eta / (1 - beta)`: scales `rho Y_A Y_B` into the relay-to-terminal
/// SNR under equal-SNR combining.
pub fn omega(beta: f64, eta: f64) -> f64 {
    3.0 * beta * eta / (1.0 - beta)
}

/// Constants shared by the analytic formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    /// Transmit SNR `P / sigma^2`.
    pub rho: f64,
    /// `d_A^alpha_s / lambda_A`, the rate of `Y_A`.
    pub a_a: f64,
    /// `d_B^alpha_s / lambda_B`, the rate of `Y_B`.
    pub a_b: f64,
    /// `d_t^alpha_t / lambda_t`, the rate of `Z`.
    pub a_t: f64,
    pub omega: f64,
    pub gamma_th: f64,
    /// `P_th / P`: the smallest `Y_A + Y_B` that lets the relay harvest.
    pub p_th_ratio: f64,
}

impl DerivedConstants {
    /// `gamma_th / rho`, the per-link gain each hop must exceed.
    pub fn gain_threshold(&self) -> f64 {
        self.gamma_th / self.rho
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_watts(-70.0).unwrap() - 1e-10).abs() < 1e-24);
        assert!((dbm_to_watts(0.0).unwrap() - 1e-3).abs() < 1e-18);
        assert!((dbm_to_watts(10.0).unwrap() - 1e-2).abs() < 1e-17);
        assert!(dbm_to_watts(f64::NAN).is_err());
        assert!(dbm_to_watts(f64::INFINITY).is_err());
    }

    #[test]
    fn validation_boundaries() {
        let p = SystemParams::reference();
        assert_eq!(p.validate(), Ok(p));

        let err = SystemParams { beta: 0.0, ..p }.validate().unwrap_err();
        assert_eq!(err, ParamError::BetaOutOfRange(0.0));
        assert!(err.to_string().starts_with("beta out of (0,1)"));

        let err = SystemParams { eta: 1.5, ..p }.validate().unwrap_err();
        assert!(err.to_string().starts_with("eta out of (0,1]"));

        assert!(SystemParams { eta: 1.0, ..p }.validate().is_ok());
        assert!(SystemParams { beta: 1.0, ..p }.validate().is_err());
        assert!(matches!(
            SystemParams { d_a: -1.0, ..p }.validate(),
            Err(ParamError::NonPositive { name: "d_a", .. })
        ));
        assert!(matches!(
            SystemParams { lambda_t: 0.0, ..p }.validate(),
            Err(ParamError::NonPositive {
                name: "lambda_t",
                ..
            })
        ));
        assert!(matches!(
            SystemParams { rate: 0.0, ..p }.validate(),
            Err(ParamError::NonPositive { name: "rate", .. })
        ));
        assert!(matches!(
            SystemParams { d_t: f64::NAN, ..p }.validate(),
            Err(ParamError::NonFinite("d_t"))
        ));
    }

    #[test]
    fn derived_constants_by_hand() {
        let p = SystemParams::reference();
        let c = p.derive().unwrap();
        // 20^4 / 2
        assert_eq!(c.a_t, 80000.0);
        // 3 * 0.25 * 0.6 / 0.75
        assert!((c.omega - 0.6).abs() < 1e-15);
        // 10 dBm over -70 dBm
        let rho = dbm_to_watts(10.0).unwrap() / dbm_to_watts(-70.0).unwrap();
        assert!((rho - 1e8).abs() / 1e8 < 1e-12);
        assert!((c.rho - 1e8).abs() / 1e8 < 1e-12);
        assert_eq!(c.gamma_th, 7.0);
        assert_eq!(c.a_a, 625.0);
        assert_eq!(c.a_b, 50625.0);
        assert_eq!(omega(p.beta, p.eta), c.omega);
    }

    #[test]
    fn derive_is_deterministic() {
        let p = SystemParams::reference();
        let a = p.derive().unwrap();
        let b = p.derive().unwrap();
        assert_eq!(a.rho.to_bits(), b.rho.to_bits());
        assert_eq!(a.omega.to_bits(), b.omega.to_bits());
        assert_eq!(a, b);
    }

    #[test]
    fn derive_rejects_invalid() {
        let p = SystemParams {
            beta: 1.2,
            ..SystemParams::reference()
        };
        assert!(p.derive().is_err());
    }

    proptest::proptest! {
        #[test]
        fn dbm_round_trip(x in 1e-15f64..1e3) {
            let back = dbm_to_watts(watts_to_dbm(x).unwrap()).unwrap();
            proptest::prop_assert!((back - x).abs() <= 1e-12 * x);
        }
    }
}
