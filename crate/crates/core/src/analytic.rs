//! Closed-form average AoI for the four link schemes.
//!
//! All four results are renewal-reward ratios over one inter-delivery
//! interval `Z` and the age `τ` left behind by the previous delivery:
//!
//! ```text
//! Δ̄ = E[τZ] / E[Z] + E[Z²] / (2 E[Z])
//! ```
//!
//! The formulas here never call into [`crate::chain`]; the chain solver is an
//! independent route to the same moments and the two are cross-checked.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheme::Scheme;

/// Per-hop decode success probabilities, each in `(0, 1]`.
///
/// A single-hop link is the one-parameter variant built by
/// [`LinkParams::single`]: its success probability `q` sits in `p1` and the
/// absent second hop is recorded as `p2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkParams {
    p1: f64,
    p2: f64,
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value <= 1.0 {
        Ok(value)
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}

impl LinkParams {
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        Ok(Self {
            p1: check_probability("p1", p1)?,
            p2: check_probability("p2", p2)?,
        })
    }

    pub fn single(q: f64) -> Result<Self> {
        Ok(Self {
            p1: check_probability("q", q)?,
            p2: 1.0,
        })
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    /// Success probability of a single-hop link.
    pub fn q(&self) -> f64 {
        self.p1
    }
}

impl<'de> Deserialize<'de> for LinkParams {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            p1: f64,
            p2: f64,
        }
        let raw = Raw::deserialize(deserializer)?;
        LinkParams::new(raw.p1, raw.p2).map_err(serde::de::Error::custom)
    }
}

/// The three renewal moments that determine the average AoI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeMoments {
    /// E[Z], slots.
    pub e_z: f64,
    /// E[Z²], slots².
    pub e_z2: f64,
    /// E[τZ] where τ is the age left by the delivery opening the interval, slots².
    pub e_tau_z: f64,
}

impl SchemeMoments {
    /// Checks `E[Z] ≥ 1`, `E[Z²] ≥ E[Z]²` and `E[τZ] ≥ E[Z]` up to a relative slack.
    pub fn check(&self) -> Result<()> {
        let slack = 1e-9;
        let mut problems = Vec::new();
        if !(self.e_z >= 1.0 - slack) {
            problems.push(format!("E[Z] = {} < 1", self.e_z));
        }
        if !(self.e_z2 >= self.e_z * self.e_z * (1.0 - slack)) {
            problems.push(format!(
                "E[Z^2] = {} < E[Z]^2 = {}",
                self.e_z2,
                self.e_z * self.e_z
            ));
        }
        if !(self.e_tau_z >= self.e_z * (1.0 - slack)) {
            problems.push(format!("E[tau Z] = {} < E[Z] = {}", self.e_tau_z, self.e_z));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AoIResult {
    /// Time-average AoI, slots.
    pub average_aoi: f64,
    pub moments: SchemeMoments,
}

impl AoIResult {
    fn from_parts(average_aoi: f64, moments: SchemeMoments) -> Self {
        Self {
            average_aoi,
            moments,
        }
    }
}

/// Renewal-reward average AoI from the three interval moments.
pub fn aoi_from_moments(m: &SchemeMoments) -> f64 {
    m.e_tau_z / m.e_z + m.e_z2 / (2.0 * m.e_z)
}

/// One hop, fresh packet every slot: `Z ~ Geom(q)` and every delivery leaves age 1.
pub fn aoi_single_noarq(q: f64) -> Result<AoIResult> {
    let q = check_probability("q", q)?;
    let e_z = 1.0 / q;
    let moments = SchemeMoments {
        e_z,
        e_z2: (2.0 - q) / (q * q),
        e_tau_z: e_z,
    };
    Ok(AoIResult::from_parts(0.5 + 1.0 / q, moments))
}

/// One hop with retransmission: same `Z`, but the delivered packet is as old
/// as its whole interval, so `E[τZ] = E[Z]²`.
pub fn aoi_single_arq(q: f64) -> Result<AoIResult> {
    let q = check_probability("q", q)?;
    let e_z = 1.0 / q;
    let moments = SchemeMoments {
        e_z,
        e_z2: (2.0 - q) / (q * q),
        e_tau_z: e_z * e_z,
    };
    Ok(AoIResult::from_parts(
        (0.5 + 1.0 / q) + (1.0 / q - 1.0),
        moments,
    ))
}

/// Two hops, no retransmission anywhere. Every delivery leaves age exactly 2.
pub fn aoi_two_noarq(params: LinkParams) -> Result<AoIResult> {
    let LinkParams { p1, p2 } = params;
    let p1p2 = p1 * p2;
    let e_z = (1.0 + p1) / p1p2;
    let e_z2 = 2.0 * (1.0 + p1) * (1.0 + p1) / (p1p2 * p1p2) - 1.0 / p2 - 3.0 / p1p2;
    let moments = SchemeMoments {
        e_z,
        e_z2,
        e_tau_z: 2.0 * e_z,
    };
    let aoi = 1.5 + (1.0 + p1) / p1p2 - 1.0 / (1.0 + p1);
    Ok(AoIResult::from_parts(aoi, moments))
}

/// Two hops, relay retransmits on second-hop failure.
///
/// `Z = Y + X` with `Y ~ Geom(p1)`, `X ~ Geom(p2)`; the delivered packet is
/// `1 + X` slots old and that age is independent of the next interval, so
/// `E[τZ] = (1 + 1/p2) E[Z]`.
pub fn aoi_two_arq(params: LinkParams) -> Result<AoIResult> {
    let LinkParams { p1, p2 } = params;
    let e_z = 1.0 / p1 + 1.0 / p2;
    let e_z2 = 2.0 / (p1 * p1) + 2.0 / (p2 * p2) + 2.0 / (p1 * p2) - e_z;
    let e_x = 1.0 / p2;
    let moments = SchemeMoments {
        e_z,
        e_z2,
        e_tau_z: (1.0 + e_x) * e_z,
    };
    let aoi = 0.5 + 1.0 / p1 + 2.0 / p2 - 1.0 / (p1 + p2);
    Ok(AoIResult::from_parts(aoi, moments))
}

/// Closed form of `aoi_two_arq − aoi_two_noarq` as a single fraction.
pub fn gap_factored(params: LinkParams) -> f64 {
    let LinkParams { p1, p2 } = params;
    let numerator = (1.0 - p2) * ((p1 * p1 - 1.0) * (p1 + p2) - p1 * p2);
    let denominator = (p1 + p2) * (p1 * p2) * (1.0 + p1);
    numerator / denominator
}

/// Two-hop AoI saved by retransmitting at the relay (negative means ARQ wins).
///
/// Evaluated both by subtracting the two closed forms and by
/// [`gap_factored`]; they must agree to `1e-12` relative to the magnitude of
/// the operands. The factored value is returned: it has no cancellation and
/// is exactly zero when `p2 = 1`.
pub fn aoi_gap(params: LinkParams) -> Result<f64> {
    let arq = aoi_two_arq(params)?.average_aoi;
    let noarq = aoi_two_noarq(params)?.average_aoi;
    let subtracted = arq - noarq;
    let factored = gap_factored(params);
    let scale = arq.abs().max(noarq.abs()).max(1.0);
    if (subtracted - factored).abs() > 1e-12 * scale {
        return Err(Error::Inconsistent {
            left: subtracted,
            right: factored,
        });
    }
    Ok(factored)
}

/// Closed-form result for any scheme. Single-hop schemes read `q` from `p1`.
pub fn aoi(scheme: Scheme, params: LinkParams) -> Result<AoIResult> {
    match scheme {
        Scheme::SingleNonArq => aoi_single_noarq(params.q()),
        Scheme::SingleArq => aoi_single_arq(params.q()),
        Scheme::TwoNonArq => aoi_two_noarq(params),
        Scheme::TwoArq => aoi_two_arq(params),
    }
}

/// Fractional AoI reduction `1 − ARQ / non-ARQ` of a two-hop link.
pub fn arq_reduction(params: LinkParams) -> Result<f64> {
    let arq = aoi_two_arq(params)?.average_aoi;
    let noarq = aoi_two_noarq(params)?.average_aoi;
    Ok(1.0 - arq / noarq)
}
