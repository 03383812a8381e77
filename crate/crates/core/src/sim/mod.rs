//! Round-based UAV data-collection simulator.
//!
//! Each round every device values the UAV's visit from its distance to the
//! UAV and how different its image pile is from what the UAV collected
//! last. An auction picks one device, the UAV flies there, collects the
//! winner's pile, and the winner starts a fresh pile. Flight distance is
//! charged against a battery measured in meters; the episode ends when the
//! battery runs out.

mod log;
mod noise;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::auction::{argmax, spa_clear, AuctionOutcome, ValuationDistribution, ValuationProfile};
use crate::error::{Error, Result};
use crate::monotone::{clear_hard, MonotoneNet};
use crate::valuation::{
    distance, normalize_profile, pile_similarity, GrayImage, ImagePile, Position,
    SimilarityAggregation, ValuationForm, ValuationInputs,
};

pub use log::{read_events, write_csv, write_events, CSV_HEADER};

/// Salt for the pile observed at the UAV's start position.
const START_PILE_ID: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    /// Side of the square area, meters.
    pub area_size: f64,
    pub n_devices: usize,
    pub image_rows: usize,
    pub image_cols: usize,
    pub pile_size: usize,
    /// Flight budget, meters.
    pub battery: f64,
    pub seed: u64,
    /// Defaults to the center of the area.
    pub start: Option<Position>,
    pub distribution: ValuationDistribution,
    pub aggregation: SimilarityAggregation,
    pub valuation_form: ValuationForm,
    /// Meters per noise lattice cell; devices closer than this see similar scenes.
    pub feature_scale: f64,
    /// Weight of the per-capture component of each image, in `[0, 1]`.
    pub capture_noise: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            area_size: 1000.0,
            n_devices: 5,
            image_rows: 8,
            image_cols: 8,
            pile_size: 3,
            battery: 5000.0,
            seed: 0,
            start: None,
            distribution: ValuationDistribution::Uniform {
                lower: 0.5,
                upper: 1.0,
            },
            aggregation: SimilarityAggregation::Mean,
            valuation_form: ValuationForm::Literal,
            feature_scale: 250.0,
            capture_noise: 0.3,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_devices < 2 {
            return bad(format!(
                "an auction needs at least 2 devices, got {}",
                self.n_devices
            ));
        }
        if !(self.area_size.is_finite() && self.area_size > 0.0) {
            return bad(format!(
                "area_size must be positive, got {}",
                self.area_size
            ));
        }
        if self.image_rows == 0 || self.image_cols == 0 || self.pile_size == 0 {
            return bad("image dimensions and pile size must be positive".into());
        }
        if self.battery.is_nan() || self.battery < 0.0 {
            return bad(format!(
                "battery must be non-negative, got {}",
                self.battery
            ));
        }
        if !(self.feature_scale.is_finite() && self.feature_scale > 0.0) {
            return bad(format!(
                "feature_scale must be positive, got {}",
                self.feature_scale
            ));
        }
        if !(0.0..=1.0).contains(&self.capture_noise) {
            return bad(format!(
                "capture_noise must lie in [0, 1], got {}",
                self.capture_noise
            ));
        }
        if let Some(p) = self.start {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return bad("start position must be finite".into());
            }
        }
        Ok(())
    }

    pub fn start_position(&self) -> Position {
        self.start
            .unwrap_or(Position::new(self.area_size / 2.0, self.area_size / 2.0))
    }

    /// Synthetic pile for an observer at `position`.
    ///
    /// Pixels blend a static scene field sampled around the position with a
    /// per-capture field, so nearby observers see similar imagery and the
    /// same observer sees slightly different frames on each capture.
    pub fn synthesize_pile(&self, observer: u64, position: Position, capture: u64) -> ImagePile {
        let scene_seed = noise::mix_seed(self.seed, 1);
        let frame_seed = noise::mix_seed(self.seed, observer.wrapping_add(2));
        let step = 0.25;
        let images = (0..self.pile_size)
            .map(|frame| {
                let z = (capture * self.pile_size as u64 + frame as u64) as f64 * 0.61;
                let mut pixels = Vec::with_capacity(self.image_rows * self.image_cols);
                for r in 0..self.image_rows {
                    for c in 0..self.image_cols {
                        let x = position.x / self.feature_scale + c as f64 * step;
                        let y = position.y / self.feature_scale + r as f64 * step;
                        let scene = noise::value_noise(scene_seed, x, y, 0.0);
                        let frame = noise::value_noise(frame_seed, 2.0 * x, 2.0 * y, z);
                        let px = (1.0 - self.capture_noise) * scene + self.capture_noise * frame;
                        pixels.push(px.clamp(0.0, 1.0));
                    }
                }
                GrayImage::new(self.image_rows, self.image_cols, pixels)
                    .expect("synthetic pixels lie in [0, 1]")
            })
            .collect();
        ImagePile::new(images).expect("pile size is positive")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Device {
    pub id: usize,
    pub position: Position,
    pub pile: ImagePile,
    /// Number of piles this device has captured so far, minus one.
    pub capture: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    pub uav_position: Position,
    pub battery: f64,
    pub devices: Vec<Device>,
    pub last_collected: ImagePile,
    pub round: u64,
    pub rng_seed: u64,
    pub config: WorldConfig,
}

#[derive(Clone, Debug)]
pub enum Mechanism {
    Dla(MonotoneNet),
    Spa,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MechanismKind {
    Dla,
    Spa,
}

impl Mechanism {
    pub fn kind(&self) -> MechanismKind {
        match self {
            Mechanism::Dla(_) => MechanismKind::Dla,
            Mechanism::Spa => MechanismKind::Spa,
        }
    }

    pub fn clear(&self, bids: &[f64]) -> Result<AuctionOutcome> {
        match self {
            Mechanism::Dla(net) => clear_hard(net, bids),
            Mechanism::Spa => spa_clear(bids),
        }
    }

    /// Score the mechanism ranks bidders by: transformed bid for DLA, the
    /// bid itself for SPA.
    pub fn scores(&self, bids: &[f64]) -> Vec<f64> {
        match self {
            Mechanism::Dla(net) => net.transform_all(bids),
            Mechanism::Spa => bids.to_vec(),
        }
    }
}

impl std::fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MechanismKind::Dla => "dla",
            MechanismKind::Spa => "spa",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    pub mechanism: MechanismKind,
    pub inputs: Vec<ValuationInputs>,
    pub valuations: ValuationProfile,
    pub outcome: AuctionOutcome,
    pub uav_moved_to: Option<Position>,
    pub distance_flown: f64,
    /// UAV position after the round.
    pub uav_position: Position,
    /// Battery left after the round.
    pub battery: f64,
}

pub fn generate_world(config: &WorldConfig) -> Result<WorldState> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let devices = (0..config.n_devices)
        .map(|id| {
            let position = Position::new(
                rng.random_range(0.0..config.area_size),
                rng.random_range(0.0..config.area_size),
            );
            Device {
                id,
                position,
                pile: config.synthesize_pile(id as u64, position, 0),
                capture: 0,
            }
        })
        .collect();
    let start = config.start_position();
    Ok(WorldState {
        uav_position: start,
        battery: config.battery,
        devices,
        last_collected: config.synthesize_pile(START_PILE_ID, start, 0),
        round: 0,
        rng_seed: config.seed,
        config: config.clone(),
    })
}

impl WorldState {
    pub fn valuation_inputs(&self) -> Result<Vec<ValuationInputs>> {
        self.devices
            .iter()
            .map(|dev| {
                let d = distance(self.uav_position, dev.position);
                let s = pile_similarity(&dev.pile, &self.last_collected, self.config.aggregation)?;
                Ok(ValuationInputs::new(d, s, self.config.valuation_form))
            })
            .collect()
    }

    /// Normalized valuation profile for the current round. A round where
    /// every device has the same raw valuation gives everyone the midpoint
    /// of the support.
    pub fn form_valuations(&self) -> Result<(Vec<ValuationInputs>, ValuationProfile)> {
        let inputs = self.valuation_inputs()?;
        let raw: Vec<f64> = inputs.iter().map(|i| i.raw_valuation).collect();
        let dist = self.config.distribution;
        let profile = match normalize_profile(&raw, dist) {
            Err(Error::DegenerateProfile(n)) => {
                ValuationProfile::new(vec![dist.midpoint(); n], dist)?
            }
            other => other?,
        };
        Ok((inputs, profile))
    }

    /// Runs one auction round in place.
    pub fn step(&mut self, mechanism: &Mechanism) -> Result<RoundRecord> {
        if self.battery.is_nan() || self.battery <= 0.0 {
            return Err(Error::EpisodeExhausted {
                battery: self.battery,
                round: self.round,
            });
        }
        let (inputs, valuations) = self.form_valuations()?;
        let outcome = mechanism.clear(valuations.values())?;

        let mut distance_flown = 0.0;
        let mut uav_moved_to = None;
        if let Some(w) = outcome.winner {
            let target = self.devices[w].position;
            distance_flown = distance(self.uav_position, target).min(self.battery);
            self.battery = (self.battery - distance_flown).max(0.0);
            self.uav_position = target;
            uav_moved_to = Some(target);

            let dev = &mut self.devices[w];
            dev.capture += 1;
            let fresh = self
                .config
                .synthesize_pile(w as u64, dev.position, dev.capture);
            self.last_collected = std::mem::replace(&mut dev.pile, fresh);
        }
        self.round += 1;

        Ok(RoundRecord {
            round: self.round,
            mechanism: mechanism.kind(),
            inputs,
            valuations,
            outcome,
            uav_moved_to,
            distance_flown,
            uav_position: self.uav_position,
            battery: self.battery,
        })
    }
}

/// Functional form of [`WorldState::step`].
pub fn step(state: &WorldState, mechanism: &Mechanism) -> Result<(WorldState, RoundRecord)> {
    let mut next = state.clone();
    let record = next.step(mechanism)?;
    Ok((next, record))
}

/// Steps until the battery is exhausted or `max_rounds` rounds have run.
pub fn run_episode(
    state: &mut WorldState,
    mechanism: &Mechanism,
    max_rounds: usize,
) -> Result<Vec<RoundRecord>> {
    if max_rounds == 0 {
        return Err(Error::InvalidConfig("max_rounds must be at least 1".into()));
    }
    if let Mechanism::Dla(net) = mechanism {
        if net.n_bidders() != state.devices.len() {
            return Err(Error::DimensionMismatch {
                what: "network bidders",
                found: net.n_bidders(),
                expected: state.devices.len(),
            });
        }
    }
    let mut records = Vec::new();
    loop {
        records.push(state.step(mechanism)?);
        if records.len() >= max_rounds || state.battery <= 0.0 {
            return Ok(records);
        }
    }
}

/// Index the mechanism's ranking criterion selects, ignoring the reserve.
pub fn criterion_argmax(mechanism: &Mechanism, bids: &[f64]) -> usize {
    argmax(&mechanism.scores(bids))
}
