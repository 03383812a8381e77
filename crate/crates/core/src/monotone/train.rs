use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::auction::{ValuationDistribution, ValuationProfile};
use crate::error::{Error, Result};
use crate::monotone::loss::loss_and_grad;
use crate::monotone::net::MonotoneNet;

/// Iterations averaged on each side of the early-stopping comparison.
pub const CONVERGENCE_WINDOW: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub n_bidders: usize,
    pub groups: usize,
    pub units: usize,
    pub kappa: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub seed: u64,
    pub convergence_tol: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            n_bidders: 5,
            groups: 5,
            units: 3,
            kappa: 100.0,
            learning_rate: 0.3,
            batch_size: 4096,
            iterations: 500,
            seed: 0,
            convergence_tol: 0.0,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_bidders < 2 {
            return bad(format!(
                "n_bidders must be at least 2, got {}",
                self.n_bidders
            ));
        }
        if self.groups == 0 || self.units == 0 {
            return bad(format!(
                "groups and units must be positive, got K={} J={}",
                self.groups, self.units
            ));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return bad(format!(
                "kappa must be finite and positive, got {}",
                self.kappa
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!(
                "learning_rate must be finite and positive, got {}",
                self.learning_rate
            ));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.convergence_tol.is_nan() || self.convergence_tol < 0.0 {
            return bad(format!(
                "convergence_tol must be non-negative, got {}",
                self.convergence_tol
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingTrace {
    pub losses: Vec<f64>,
    pub final_loss: f64,
    pub converged_at: Option<usize>,
}

/// Gradient descent on the negative soft revenue, one fresh batch of
/// truthful profiles per iteration.
///
/// Stops early once the mean loss of the last [`CONVERGENCE_WINDOW`]
/// iterations differs from the window before it by less than
/// `convergence_tol`. A tolerance of zero never triggers.
pub fn train(
    config: &NetConfig,
    dist: ValuationDistribution,
) -> Result<(MonotoneNet, TrainingTrace)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = MonotoneNet::random(config.n_bidders, config.groups, config.units, &mut rng)?;
    let mut losses = Vec::with_capacity(config.iterations);
    let mut converged_at = None;
    let mut batch = Vec::with_capacity(config.batch_size);

    for iteration in 0..config.iterations {
        batch.clear();
        batch.extend(
            (0..config.batch_size)
                .map(|_| ValuationProfile::sample(dist, config.n_bidders, &mut rng)),
        );
        let (loss, grad) = loss_and_grad(&net, &batch, config.kappa);
        if !loss.is_finite() || !grad.norm().is_finite() {
            return Err(Error::TrainingDiverged { iteration, loss });
        }
        losses.push(loss);

        let lr = config.learning_rate;
        for (p, g) in net.theta_mut().iter_mut().zip(&grad.theta) {
            *p -= lr * g;
        }
        for (p, g) in net.beta_mut().iter_mut().zip(&grad.beta) {
            *p -= lr * g;
        }

        if losses.len() >= 2 * CONVERGENCE_WINDOW {
            let tail = &losses[losses.len() - 2 * CONVERGENCE_WINDOW..];
            let (before, after) = tail.split_at(CONVERGENCE_WINDOW);
            let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
            if (mean(after) - mean(before)).abs() < config.convergence_tol {
                converged_at = Some(iteration);
                break;
            }
        }
    }

    let final_loss = *losses.last().expect("at least one iteration");
    Ok((
        net,
        TrainingTrace {
            losses,
            final_loss,
            converged_at,
        },
    ))
}
