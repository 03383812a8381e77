use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::auction::{argmax, max_excluding, AuctionOutcome};
use crate::error::{Error, Result};

/// Per-bidder monotone max-min networks.
///
/// Bidder `i` owns `groups × units` affine pieces `w·b + β` with
/// `w = exp(theta)`, and transforms a bid as
/// `max over groups of min over units of (w·b + β)`. Positive weights make
/// every transform strictly increasing, so it inverts in closed form as
/// `min over groups of max over units of (y − β) / w`.
///
/// Parameters are stored row-major as `[bidder][group][unit]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneNet {
    n_bidders: usize,
    groups: usize,
    units: usize,
    theta: Vec<f64>,
    beta: Vec<f64>,
}

impl MonotoneNet {
    /// Identity transforms for every bidder (`theta = 0`, `beta = 0`).
    pub fn identity(n_bidders: usize, groups: usize, units: usize) -> Result<Self> {
        let len = Self::check_shape(n_bidders, groups, units)?;
        Ok(MonotoneNet {
            n_bidders,
            groups,
            units,
            theta: vec![0.0; len],
            beta: vec![0.0; len],
        })
    }

    pub fn from_raw(
        n_bidders: usize,
        groups: usize,
        units: usize,
        theta: Vec<f64>,
        beta: Vec<f64>,
    ) -> Result<Self> {
        let len = Self::check_shape(n_bidders, groups, units)?;
        for (what, v) in [("theta", &theta), ("beta", &beta)] {
            if v.len() != len {
                return Err(Error::DimensionMismatch {
                    what,
                    found: v.len(),
                    expected: len,
                });
            }
        }
        Ok(MonotoneNet {
            n_bidders,
            groups,
            units,
            theta,
            beta,
        })
    }

    /// Every affine piece of every bidder set to `weight·b + offset`.
    pub fn uniform_affine(
        n_bidders: usize,
        groups: usize,
        units: usize,
        weight: f64,
        offset: f64,
    ) -> Result<Self> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "weights must be positive and finite, got {weight}"
            )));
        }
        let mut net = Self::identity(n_bidders, groups, units)?;
        net.theta.fill(weight.ln());
        net.beta.fill(offset);
        Ok(net)
    }

    /// Random initialization: `theta ~ N(0, 0.1)`, `beta ~ U(-0.5, 0)`.
    pub fn random<R: Rng + ?Sized>(
        n_bidders: usize,
        groups: usize,
        units: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::identity(n_bidders, groups, units)?;
        let normal = Normal::new(0.0, 0.1).expect("valid normal");
        let offsets = Uniform::new(-0.5, 0.0).expect("valid uniform");
        for t in net.theta.iter_mut() {
            *t = normal.sample(rng);
        }
        for b in net.beta.iter_mut() {
            *b = offsets.sample(rng);
        }
        Ok(net)
    }

    fn check_shape(n_bidders: usize, groups: usize, units: usize) -> Result<usize> {
        if n_bidders == 0 || groups == 0 || units == 0 {
            return Err(Error::InvalidConfig(format!(
                "network shape must be positive, got N={n_bidders}, K={groups}, J={units}"
            )));
        }
        Ok(n_bidders * groups * units)
    }

    pub fn n_bidders(&self) -> usize {
        self.n_bidders
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn units(&self) -> usize {
        self.units
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn beta_mut(&mut self) -> &mut [f64] {
        &mut self.beta
    }

    pub fn index(&self, bidder: usize, group: usize, unit: usize) -> usize {
        (bidder * self.groups + group) * self.units + unit
    }

    pub fn weight(&self, bidder: usize, group: usize, unit: usize) -> f64 {
        self.theta[self.index(bidder, group, unit)].exp()
    }

    pub fn offset(&self, bidder: usize, group: usize, unit: usize) -> f64 {
        self.beta[self.index(bidder, group, unit)]
    }

    fn bidder_range(&self, bidder: usize) -> std::ops::Range<usize> {
        assert!(bidder < self.n_bidders, "bidder {bidder} out of range");
        let per = self.groups * self.units;
        bidder * per..(bidder + 1) * per
    }

    /// Transformed bid and the flat index of the affine piece that produced it.
    pub(crate) fn forward_active(&self, bidder: usize, b: f64) -> (f64, usize) {
        let base = self.bidder_range(bidder).start;
        let mut best = (f64::NEG_INFINITY, base);
        for k in 0..self.groups {
            let start = base + k * self.units;
            let mut group_min = (f64::INFINITY, start);
            for idx in start..start + self.units {
                let h = self.theta[idx].exp() * b + self.beta[idx];
                if h < group_min.0 {
                    group_min = (h, idx);
                }
            }
            if k == 0 || group_min.0 > best.0 {
                best = group_min;
            }
        }
        best
    }

    /// Inverse transform and the flat index of the affine piece it inverted.
    pub(crate) fn inverse_active(&self, bidder: usize, y: f64) -> (f64, usize) {
        let base = self.bidder_range(bidder).start;
        let mut best = (f64::INFINITY, base);
        for k in 0..self.groups {
            let start = base + k * self.units;
            let mut group_max = (f64::NEG_INFINITY, start);
            for idx in start..start + self.units {
                let x = (y - self.beta[idx]) * (-self.theta[idx]).exp();
                if x > group_max.0 {
                    group_max = (x, idx);
                }
            }
            if k == 0 || group_max.0 < best.0 {
                best = group_max;
            }
        }
        best
    }

    pub fn transform(&self, bidder: usize, b: f64) -> f64 {
        self.forward_active(bidder, b).0
    }

    pub fn transform_inverse(&self, bidder: usize, y: f64) -> f64 {
        self.inverse_active(bidder, y).0
    }

    pub fn transform_all(&self, bids: &[f64]) -> Vec<f64> {
        bids.iter()
            .enumerate()
            .map(|(i, &b)| self.transform(i, b))
            .collect()
    }

    pub(crate) fn check_bids(&self, n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "an auction needs at least 2 bids, got {n}"
            )));
        }
        if n != self.n_bidders {
            return Err(Error::DimensionMismatch {
                what: "bid count",
                found: n,
                expected: self.n_bidders,
            });
        }
        Ok(())
    }
}

/// Softmax over `kappa · transformed_bids` plus a fixed no-sale entry at 0.
///
/// Returns the bidders' probabilities and the no-sale probability.
pub fn allocate_soft_with_reserve(transformed_bids: &[f64], kappa: f64) -> (Vec<f64>, f64) {
    let shift = transformed_bids
        .iter()
        .fold(0.0f64, |m, &b| m.max(kappa * b));
    let mut exps: Vec<f64> = transformed_bids
        .iter()
        .map(|&b| (kappa * b - shift).exp())
        .collect();
    let dummy = (-shift).exp();
    let z: f64 = exps.iter().sum::<f64>() + dummy;
    for e in exps.iter_mut() {
        *e /= z;
    }
    (exps, dummy / z)
}

/// Soft allocation probabilities for the bidders (the no-sale slot is dropped).
pub fn allocate_soft(transformed_bids: &[f64], kappa: f64) -> Vec<f64> {
    allocate_soft_with_reserve(transformed_bids, kappa).0
}

/// What `bidder` pays if it wins: its inverse transform of the highest rival
/// transformed bid, floored at zero.
pub fn payment_soft(net: &MonotoneNet, transformed_bids: &[f64], bidder: usize) -> f64 {
    let (_, rival) = max_excluding(transformed_bids, bidder);
    net.transform_inverse(bidder, rival.max(0.0))
}

/// Deployed mechanism: the highest positive transformed bid wins and pays
/// its conditional payment. No sale when no transformed bid is positive.
pub fn clear_hard(net: &MonotoneNet, bids: &[f64]) -> Result<AuctionOutcome> {
    net.check_bids(bids.len())?;
    let transformed = net.transform_all(bids);
    let winner = argmax(&transformed);
    if transformed[winner] > 0.0 {
        let payment = payment_soft(net, &transformed, winner);
        Ok(AuctionOutcome::sold(bids.len(), winner, payment))
    } else {
        Ok(AuctionOutcome::no_sale(bids.len()))
    }
}
