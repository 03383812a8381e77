//! Analytic single-item auctions: the second-price baseline and the
//! closed-form Myerson mechanism for bidders with a known uniform value
//! distribution.
//!
//! Every function here is pure. Argmax ties resolve to the lowest bidder
//! index throughout the crate.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The distribution bidder valuations are drawn from.
///
/// Only the uniform family is implemented; the enum leaves room for others.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ValuationDistribution {
    Uniform { lower: f64, upper: f64 },
}

impl ValuationDistribution {
    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::InvalidInput(format!(
                "uniform distribution needs finite lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(ValuationDistribution::Uniform { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        match *self {
            ValuationDistribution::Uniform { lower, .. } => lower,
        }
    }

    pub fn upper(&self) -> f64 {
        match *self {
            ValuationDistribution::Uniform { upper, .. } => upper,
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower() + self.upper())
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower() && v <= self.upper()
    }

    pub fn cdf(&self, v: f64) -> f64 {
        match *self {
            ValuationDistribution::Uniform { lower, upper } => {
                ((v - lower) / (upper - lower)).clamp(0.0, 1.0)
            }
        }
    }

    pub fn pdf(&self, v: f64) -> f64 {
        match *self {
            ValuationDistribution::Uniform { lower, upper } => {
                if self.contains(v) {
                    1.0 / (upper - lower)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ValuationDistribution::Uniform { lower, upper } => rng.random_range(lower..upper),
        }
    }

    /// Myerson's virtual valuation `v - (1 - F(v)) / f(v)`.
    ///
    /// For `U[a, b]` this is `2v - b`.
    pub fn virtual_valuation(&self, v: f64) -> Result<f64> {
        if !self.contains(v) {
            return Err(self.domain_error(v));
        }
        Ok(match *self {
            ValuationDistribution::Uniform { upper, .. } => 2.0 * v - upper,
        })
    }

    pub fn virtual_valuation_inverse(&self, y: f64) -> Result<f64> {
        let (lo, hi) = self.virtual_image();
        if !(y >= lo && y <= hi) {
            return Err(Error::Domain {
                value: y,
                lower: lo,
                upper: hi,
            });
        }
        Ok(match *self {
            ValuationDistribution::Uniform { upper, .. } => 0.5 * (y + upper),
        })
    }

    /// Image of the virtual valuation over the support.
    pub fn virtual_image(&self) -> (f64, f64) {
        match *self {
            ValuationDistribution::Uniform { lower, upper } => (2.0 * lower - upper, upper),
        }
    }

    /// Value where the virtual valuation crosses zero, clamped to the support.
    pub fn reserve_price(&self) -> f64 {
        match *self {
            ValuationDistribution::Uniform { lower, upper } => (0.5 * upper).clamp(lower, upper),
        }
    }

    fn domain_error(&self, v: f64) -> Error {
        Error::Domain {
            value: v,
            lower: self.lower(),
            upper: self.upper(),
        }
    }
}

/// One round's private valuations, all drawn from `distribution`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValuationProfile {
    values: Vec<f64>,
    distribution: ValuationDistribution,
}

impl ValuationProfile {
    pub fn new(values: Vec<f64>, distribution: ValuationDistribution) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a profile needs at least 2 bidders, got {}",
                values.len()
            )));
        }
        if let Some(&v) = values.iter().find(|&&v| !distribution.contains(v)) {
            return Err(distribution.domain_error(v));
        }
        Ok(ValuationProfile {
            values,
            distribution,
        })
    }

    /// Draws `n_bidders` i.i.d. values.
    pub fn sample<R: Rng + ?Sized>(
        distribution: ValuationDistribution,
        n_bidders: usize,
        rng: &mut R,
    ) -> Self {
        assert!(n_bidders >= 2, "a profile needs at least 2 bidders");
        let values = (0..n_bidders).map(|_| distribution.sample(rng)).collect();
        ValuationProfile {
            values,
            distribution,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_bidders(&self) -> usize {
        self.values.len()
    }

    pub fn distribution(&self) -> ValuationDistribution {
        self.distribution
    }
}

/// Result of clearing one auction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuctionOutcome {
    pub winner: Option<usize>,
    pub payment: f64,
    /// Per-bidder allocation probability. Sums to at most 1; the remainder
    /// is the probability the item goes unsold.
    pub allocation: Vec<f64>,
    pub revenue: f64,
}

impl AuctionOutcome {
    pub fn no_sale(n_bidders: usize) -> Self {
        AuctionOutcome {
            winner: None,
            payment: 0.0,
            allocation: vec![0.0; n_bidders],
            revenue: 0.0,
        }
    }

    pub fn sold(n_bidders: usize, winner: usize, payment: f64) -> Self {
        let mut allocation = vec![0.0; n_bidders];
        allocation[winner] = 1.0;
        AuctionOutcome {
            winner: Some(winner),
            payment,
            allocation,
            revenue: payment,
        }
    }

    /// Quasi-linear utility of `bidder` whose true value is `value`.
    pub fn utility(&self, bidder: usize, value: f64) -> f64 {
        match self.winner {
            Some(w) if w == bidder => value - self.payment,
            _ => 0.0,
        }
    }
}

/// Index of the largest element, lowest index on ties.
pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Largest element excluding index `skip`, with its index.
pub(crate) fn max_excluding(xs: &[f64], skip: usize) -> (usize, f64) {
    let mut best: Option<(usize, f64)> = None;
    for (i, &x) in xs.iter().enumerate() {
        if i == skip {
            continue;
        }
        match best {
            Some((_, b)) if x <= b => {}
            _ => best = Some((i, x)),
        }
    }
    best.expect("at least two entries")
}

/// Second-price (Vickrey) auction: the highest bid wins and pays the
/// second-highest bid.
pub fn spa_clear(bids: &[f64]) -> Result<AuctionOutcome> {
    if bids.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "second-price auction needs at least 2 bids, got {}",
            bids.len()
        )));
    }
    if let Some(&b) = bids.iter().find(|b| !b.is_finite() || **b < 0.0) {
        return Err(Error::InvalidInput(format!(
            "bids must be finite and non-negative, got {b}"
        )));
    }
    let winner = argmax(bids);
    let (_, second) = max_excluding(bids, winner);
    Ok(AuctionOutcome::sold(bids.len(), winner, second))
}

pub fn virtual_valuation(v: f64, dist: &ValuationDistribution) -> Result<f64> {
    dist.virtual_valuation(v)
}

pub fn virtual_valuation_inverse(y: f64, dist: &ValuationDistribution) -> Result<f64> {
    dist.virtual_valuation_inverse(y)
}

/// Closed-form Myerson auction.
///
/// The bidder with the highest non-negative virtual valuation wins and pays
/// the inverse virtual valuation of the larger of zero and the runner-up's
/// virtual valuation. When every virtual valuation is negative the item is
/// not sold.
pub fn myerson_clear(profile: &ValuationProfile) -> AuctionOutcome {
    let dist = profile.distribution();
    let values = profile.values();
    let phis: Vec<f64> = values
        .iter()
        .map(|&v| {
            dist.virtual_valuation(v)
                .expect("profile values lie in the support")
        })
        .collect();

    let winner = argmax(&phis);
    if phis[winner] < 0.0 {
        return AuctionOutcome::no_sale(values.len());
    }
    let (runner_up, second_phi) = max_excluding(&phis, winner);
    // All bidders share one distribution, so inverting the runner-up's
    // virtual valuation returns its value exactly.
    let payment = if second_phi >= 0.0 {
        values[runner_up]
    } else {
        dist.virtual_valuation_inverse(0.0)
            .expect("zero lies in the virtual image when a bidder is below reserve")
    };
    AuctionOutcome::sold(values.len(), winner, payment)
}
