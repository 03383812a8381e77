#![allow(dead_code)]

use std::path::PathBuf;

use myerson_airnet::monotone::MonotoneNet;
use myerson_airnet::sim::{
    generate_world, run_episode, write_csv, Mechanism, RoundRecord, WorldConfig,
};

pub const DEMO_SEED: u64 = 42;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

/// Fixed bidder-specific transforms; low bids map below zero, so some
/// rounds may go unsold.
pub fn demo_net() -> MonotoneNet {
    let theta: Vec<f64> = (0..5).map(|i| (1.0 + 0.1 * i as f64).ln()).collect();
    let beta: Vec<f64> = (0..5).map(|i| -0.55 - 0.05 * i as f64).collect();
    MonotoneNet::from_raw(5, 1, 1, theta, beta).unwrap()
}

pub fn demo_episode(mechanism: &Mechanism) -> Vec<RoundRecord> {
    let cfg = WorldConfig {
        seed: DEMO_SEED,
        ..WorldConfig::default()
    };
    let mut world = generate_world(&cfg).unwrap();
    run_episode(&mut world, mechanism, 1000).unwrap()
}

pub fn csv_bytes(records: &[RoundRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).unwrap();
    buf
}
