//! Learned revenue-optimal auctions for UAV data collection.
//!
//! [`auction`] holds the uniform valuation model, second-price clearing and
//! the closed-form optimal auction. [`monotone`] is the learned auction: a
//! per-bidder max-min network, its soft and hard clearing rules, the loss
//! with hand-derived gradients, training and checkpoints. [`valuation`] turns
//! distances and image piles into bids, and [`sim`] runs the round-based UAV
//! simulator. [`experiment`] backs the `myerson-airnet` command-line tool.
//!
//! ```
//! use myerson_airnet::auction::{myerson_clear, ValuationDistribution, ValuationProfile};
//! use myerson_airnet::monotone::{clear_hard, MonotoneNet};
//!
//! let d = ValuationDistribution::uniform(0.0, 1.0).unwrap();
//! let p = ValuationProfile::new(vec![0.6, 0.3, 0.1], d).unwrap();
//! let net = MonotoneNet::uniform_affine(3, 1, 1, 2.0, -1.0).unwrap();
//! let learned = clear_hard(&net, p.values()).unwrap();
//! assert_eq!(learned.winner, myerson_clear(&p).winner);
//! ```

pub mod auction;
pub mod error;
pub mod experiment;
pub mod monotone;
pub mod sim;
pub mod valuation;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/auctions.md")]
    mod auctions {}
    #[doc = include_str!("../../../book/src/monotone-networks.md")]
    mod monotone_networks {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/checkpoints.md")]
    mod checkpoints {}
    #[doc = include_str!("../../../book/src/valuations.md")]
    mod valuations {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
