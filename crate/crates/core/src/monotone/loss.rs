//! Negative expected revenue of the soft mechanism and its gradient.
//!
//! For one profile `v` with transformed bids `t_i = φ_i(v_i)`:
//!
//! ```text
//! g = softmax(κ·t_1, …, κ·t_N, 0)        allocation, last slot = no sale
//! p_i = φ_i⁻¹(max(0, max_{j≠i} t_j))      conditional payment
//! L = −Σ_i g_i · p_i
//! ```
//!
//! The batch loss is the mean over profiles. Gradients flow through the
//! single active affine piece of each max-min (forward) and min-max
//! (inverse) evaluation; ties resolve to the lowest index.

use crate::auction::{max_excluding, ValuationProfile};
use crate::monotone::net::{allocate_soft_with_reserve, MonotoneNet};

/// Gradient with the same `[bidder][group][unit]` layout as the network.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub theta: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Gradient {
    fn zeros(len: usize) -> Self {
        Gradient {
            theta: vec![0.0; len],
            beta: vec![0.0; len],
        }
    }

    pub fn norm(&self) -> f64 {
        self.theta
            .iter()
            .chain(self.beta.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

/// Which affine piece, rival and ReLU branch each bidder used on one profile.
///
/// Two parameter settings with equal routing lie on the same linear region
/// of the loss (up to the smooth softmax and exponential terms).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Routing {
    pub forward: Vec<usize>,
    pub inverse: Vec<usize>,
    pub rival: Vec<usize>,
    pub rival_positive: Vec<bool>,
}

struct SampleEval {
    forward: Vec<usize>,
    alloc: Vec<f64>,
    payments: Vec<f64>,
    inverse: Vec<usize>,
    rival: Vec<usize>,
    rival_bid: Vec<f64>,
}

fn evaluate(net: &MonotoneNet, values: &[f64], kappa: f64) -> SampleEval {
    let n = values.len();
    let mut transformed = Vec::with_capacity(n);
    let mut forward = Vec::with_capacity(n);
    for (i, &v) in values.iter().enumerate() {
        let (t, idx) = net.forward_active(i, v);
        transformed.push(t);
        forward.push(idx);
    }
    let (alloc, _) = allocate_soft_with_reserve(&transformed, kappa);
    let mut payments = Vec::with_capacity(n);
    let mut inverse = Vec::with_capacity(n);
    let mut rival = Vec::with_capacity(n);
    let mut rival_bid = Vec::with_capacity(n);
    for i in 0..n {
        let (r, m) = max_excluding(&transformed, i);
        let (p, idx) = net.inverse_active(i, m.max(0.0));
        payments.push(p);
        inverse.push(idx);
        rival.push(r);
        rival_bid.push(m);
    }
    SampleEval {
        forward,
        alloc,
        payments,
        inverse,
        rival,
        rival_bid,
    }
}

fn check_batch(net: &MonotoneNet, batch: &[ValuationProfile]) {
    assert!(!batch.is_empty(), "loss needs a non-empty batch");
    for p in batch {
        net.check_bids(p.n_bidders())
            .expect("profile size must match the network");
    }
}

/// Mean soft revenue of the batch under truthful bidding.
pub fn soft_revenue(net: &MonotoneNet, batch: &[ValuationProfile], kappa: f64) -> f64 {
    -loss(net, batch, kappa)
}

/// Negative mean soft revenue.
pub fn loss(net: &MonotoneNet, batch: &[ValuationProfile], kappa: f64) -> f64 {
    check_batch(net, batch);
    let total: f64 = batch
        .iter()
        .map(|p| {
            let e = evaluate(net, p.values(), kappa);
            e.alloc
                .iter()
                .zip(&e.payments)
                .map(|(g, p)| g * p)
                .sum::<f64>()
        })
        .sum();
    -total / batch.len() as f64
}

pub fn grad(net: &MonotoneNet, batch: &[ValuationProfile], kappa: f64) -> Gradient {
    loss_and_grad(net, batch, kappa).1
}

pub fn loss_and_grad(net: &MonotoneNet, batch: &[ValuationProfile], kappa: f64) -> (f64, Gradient) {
    check_batch(net, batch);
    let scale = 1.0 / batch.len() as f64;
    let mut grad = Gradient::zeros(net.theta().len());
    let mut total = 0.0;
    let mut dt = Vec::new();

    for profile in batch {
        let values = profile.values();
        let n = values.len();
        let e = evaluate(net, values, kappa);
        let revenue: f64 = e.alloc.iter().zip(&e.payments).map(|(g, p)| g * p).sum();
        total += revenue;

        // dL/dt_m through the softmax: κ g_m (dL/dg_m − Σ_i g_i dL/dg_i),
        // with dL/dg_i = −p_i·scale.
        let mean_dg = -revenue * scale;
        dt.clear();
        dt.extend((0..n).map(|m| kappa * e.alloc[m] * (-e.payments[m] * scale - mean_dg)));

        // Payments: p_i = (y_i − β_a) / w_a on the active inverse piece a.
        for i in 0..n {
            let dp = -e.alloc[i] * scale;
            let a = e.inverse[i];
            let inv_w = (-net.theta()[a]).exp();
            grad.beta[a] -= dp * inv_w;
            grad.theta[a] -= dp * e.payments[i];
            if e.rival_bid[i] > 0.0 {
                dt[e.rival[i]] += dp * inv_w;
            }
        }

        // Forward pieces: t_m = w_c v_m + β_c.
        for m in 0..n {
            let c = e.forward[m];
            grad.beta[c] += dt[m];
            grad.theta[c] += dt[m] * net.theta()[c].exp() * values[m];
        }
    }
    (-total * scale, grad)
}

/// Active pieces for each profile in the batch.
pub fn routing(net: &MonotoneNet, batch: &[ValuationProfile]) -> Vec<Routing> {
    batch
        .iter()
        .map(|p| {
            let e = evaluate(net, p.values(), 1.0);
            Routing {
                forward: e.forward,
                inverse: e.inverse,
                rival: e.rival,
                rival_positive: e.rival_bid.iter().map(|&m| m > 0.0).collect(),
            }
        })
        .collect()
}
