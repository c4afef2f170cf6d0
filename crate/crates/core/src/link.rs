//! Per-realization link model: fading draws, harvested energy, every SNR of
//! the three-slot TDBC exchange, and the system outage event.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::params::{ParamError, SystemParams};

/// One realization of the squared fading magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelDraw {
    /// `|h_A|^2`, exponential with mean `lambda_a`.
    pub h_a_sq: f64,
    /// `|h_B|^2`, exponential with mean `lambda_b`.
    pub h_b_sq: f64,
    /// `|g|^2`, exponential with mean `lambda_t`.
    pub g_sq: f64,
}

/// Fading times path loss for each link.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinkGains {
    /// `Y_A = |h_A|^2 d_A^-alpha_s`
    pub y_a: f64,
    /// `Y_B = |h_B|^2 d_B^-alpha_s`
    pub y_b: f64,
    /// `Z = |g|^2 d_t^-alpha_t`
    pub z: f64,
}

/// SNRs of the two terminal broadcasts, seen at the relay and at the other
/// terminal. The direct-link SNR is the same in both directions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FirstHopSnrs {
    pub gamma_ar: f64,
    pub gamma_br: f64,
    pub gamma_ab: f64,
}

/// Every SNR of one realization together with the relay power budget.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinkSnrs {
    pub gamma_ab: f64,
    pub gamma_ar: f64,
    pub gamma_br: f64,
    pub gamma_ra: f64,
    pub gamma_rb: f64,
    /// Final SNR at A after combining the relayed and direct copies.
    pub gamma_a: f64,
    /// Final SNR at B.
    pub gamma_b: f64,
    /// RF power received at the relay during harvesting (W).
    pub p_in: f64,
    /// Relay transmit power (W).
    pub p_r: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("fixed power allocation ratio must lie in (0,1) (got {0})")]
    ThetaOutOfRange(f64),
    #[error("unknown combining scheme {0:?}; expected optimal, relay_only, direct_only or fixed:<theta>")]
    Unknown(String),
}

/// How the relay splits its broadcast between the two decoded messages, and
/// which links count towards success.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CombiningScheme {
    /// Relay with direct link, ratio chosen per draw to equalize both
    /// relay-to-terminal SNRs.
    OptimalCombining,
    /// Relay with direct link, constant ratio in (0,1).
    FixedTheta(f64),
    /// Relay with the optimal ratio, direct link ignored.
    RelayOnlyNoDirect,
    /// Direct link only.
    DirectOnly,
}

impl CombiningScheme {
    pub fn fixed_theta(theta: f64) -> Result<Self, SchemeError> {
        if theta > 0.0 && theta < 1.0 {
            Ok(Self::FixedTheta(theta))
        } else {
            Err(SchemeError::ThetaOutOfRange(theta))
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CombiningScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OptimalCombining => f.write_str("optimal"),
            Self::FixedTheta(theta) => write!(f, "fixed:{theta}"),
            Self::RelayOnlyNoDirect => f.write_str("relay_only"),
            Self::DirectOnly => f.write_str("direct_only"),
        }
    }
}

impl FromStr for CombiningScheme {
    type Err = SchemeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "optimal" => Ok(Self::OptimalCombining),
            "relay_only" => Ok(Self::RelayOnlyNoDirect),
            "direct_only" => Ok(Self::DirectOnly),
            _ => {
                let theta = s
                    .strip_prefix("fixed:")
                    .and_then(|t| t.trim().parse::<f64>().ok())
                    .ok_or_else(|| SchemeError::Unknown(s.to_string()))?;
                Self::fixed_theta(theta)
            }
        }
    }
}

/// Validated parameters plus the per-link path-loss factors used on every
/// draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkModel {
    params: SystemParams,
    path_a: f64,
    path_b: f64,
    path_t: f64,
    gamma_th: f64,
}

impl LinkModel {
    pub fn new(params: &SystemParams) -> Result<Self, ParamError> {
        let params = params.validate()?;
        Ok(Self {
            params,
            path_a: params.d_a.powf(-params.alpha_s),
            path_b: params.d_b.powf(-params.alpha_s),
            path_t: params.d_t.powf(-params.alpha_t),
            gamma_th: params.gamma_th(),
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn gamma_th(&self) -> f64 {
        self.gamma_th
    }

    /// Draws three independent exponentials by inverse transform.
    pub fn sample_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelDraw {
        ChannelDraw {
            h_a_sq: exponential(rng, self.params.lambda_a),
            h_b_sq: exponential(rng, self.params.lambda_b),
            g_sq: exponential(rng, self.params.lambda_t),
        }
    }

    pub fn link_gains(&self, draw: &ChannelDraw) -> LinkGains {
        LinkGains {
            y_a: draw.h_a_sq * self.path_a,
            y_b: draw.h_b_sq * self.path_b,
            z: draw.g_sq * self.path_t,
        }
    }

    /// `P_in = P (Y_A + Y_B)`.
    pub fn received_power(&self, gains: &LinkGains) -> f64 {
        self.params.p_tx * (gains.y_a + gains.y_b)
    }

    /// Energy harvested during the `beta T` slot; zero below the circuit
    /// sensitivity. `p_in == p_th` harvests.
    pub fn harvested_energy(&self, p_in: f64) -> f64 {
        let p = &self.params;
        if p_in >= p.p_th {
            p.beta * p.block_time * p.eta * p_in
        } else {
            0.0
        }
    }

    /// The harvested energy spent over the relay's `(1 - beta) T / 3` slot.
    pub fn relay_power(&self, e_total: f64) -> f64 {
        let p = &self.params;
        3.0 * e_total / ((1.0 - p.beta) * p.block_time)
    }

    /// Ratio that equalizes the two relay-to-terminal SNRs. Returns 0.5 when
    /// both relay links are in a deep fade.
    pub fn theta_star(&self, draw: &ChannelDraw) -> f64 {
        self.theta_star_split(draw).0
    }

    /// `(theta*, 1 - theta*)`, each computed directly from the amplitudes.
    fn theta_star_split(&self, draw: &ChannelDraw) -> (f64, f64) {
        let gains = self.link_gains(draw);
        let amp_a = gains.y_a.sqrt();
        let amp_b = gains.y_b.sqrt();
        let total = amp_a + amp_b;
        if total > 0.0 {
            (amp_a / total, amp_b / total)
        } else {
            (0.5, 0.5)
        }
    }

    pub fn first_hop_snrs(&self, draw: &ChannelDraw) -> FirstHopSnrs {
        let gains = self.link_gains(draw);
        let scale = self.params.p_tx / self.params.noise_power;
        FirstHopSnrs {
            gamma_ar: scale * gains.y_a,
            gamma_br: scale * gains.y_b,
            gamma_ab: scale * gains.z,
        }
    }

    /// Relay-to-A and relay-to-B SNRs after self-interference cancellation
    /// for a given power allocation ratio.
    pub fn relay_link_snrs(&self, draw: &ChannelDraw, theta: f64) -> (f64, f64) {
        let gains = self.link_gains(draw);
        let p_r = self.relay_power(self.harvested_energy(self.received_power(&gains)));
        self.relay_snrs_split(&gains, p_r, theta, 1.0 - theta)
    }

    fn relay_snrs_split(&self, gains: &LinkGains, p_r: f64, theta: f64, rest: f64) -> (f64, f64) {
        if p_r == 0.0 {
            return (0.0, 0.0);
        }
        let norm = theta * theta + rest * rest;
        let scale = p_r / (self.params.noise_power * norm);
        (
            scale * rest * rest * gains.y_a,
            scale * theta * theta * gains.y_b,
        )
    }

    /// Combines relayed and direct copies. The direct copy of the other
    /// terminal's message only counts when the relay decoded that message.
    pub fn end_to_end_snrs(&self, first: &FirstHopSnrs, relay: (f64, f64)) -> (f64, f64) {
        let (gamma_ra, gamma_rb) = relay;
        let direct_to_a = if first.gamma_br >= self.gamma_th {
            first.gamma_ab
        } else {
            0.0
        };
        let direct_to_b = if first.gamma_ar >= self.gamma_th {
            first.gamma_ab
        } else {
            0.0
        };
        (gamma_ra + direct_to_a, gamma_rb + direct_to_b)
    }

    /// All SNRs of a realization when the relay combines with `scheme`.
    pub fn snrs(&self, draw: &ChannelDraw, scheme: CombiningScheme) -> LinkSnrs {
        let gains = self.link_gains(draw);
        let p_in = self.received_power(&gains);
        let p_r = self.relay_power(self.harvested_energy(p_in));
        let (theta, rest) = match scheme {
            CombiningScheme::FixedTheta(theta) => (theta, 1.0 - theta),
            _ => self.theta_star_split(draw),
        };
        let relay = self.relay_snrs_split(&gains, p_r, theta, rest);
        let first = self.first_hop_snrs(draw);
        let (gamma_a, gamma_b) = self.end_to_end_snrs(&first, relay);
        LinkSnrs {
            gamma_ab: first.gamma_ab,
            gamma_ar: first.gamma_ar,
            gamma_br: first.gamma_br,
            gamma_ra: relay.0,
            gamma_rb: relay.1,
            gamma_a,
            gamma_b,
            p_in,
            p_r,
        }
    }

    /// `true` when at least one terminal fails to decode the other's message.
    pub fn outage_event(&self, draw: &ChannelDraw, scheme: CombiningScheme) -> bool {
        let th = self.gamma_th;
        let s = self.snrs(draw, scheme);
        let harvests = s.p_in >= self.params.p_th;
        let relay_decodes = s.gamma_ar.min(s.gamma_br) >= th;
        let success = match scheme {
            CombiningScheme::OptimalCombining | CombiningScheme::FixedTheta(_) => {
                s.gamma_ab >= th || (relay_decodes && s.gamma_a.min(s.gamma_b) >= th && harvests)
            }
            CombiningScheme::RelayOnlyNoDirect => {
                relay_decodes && s.gamma_ra.min(s.gamma_rb) >= th && harvests
            }
            CombiningScheme::DirectOnly => s.gamma_ab >= th,
        };
        !success
    }
}

/// `-mean * ln(1 - u)` with `u` uniform on `[0, 1)`.
fn exponential<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    let u: f64 = rng.random();
    -mean * (-u).ln_1p()
}
