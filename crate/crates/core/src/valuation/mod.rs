//! Device valuations from UAV distance and image-pile dissimilarity.
//!
//! A device at distance `d` from the UAV whose pile has mean squared error
//! `s` against the pile the UAV collected last round values the round at
//! `v = s · d`. Raw values are then mapped affinely onto the support of the
//! distribution the auction was trained for.

mod pgm;

use serde::{Deserialize, Serialize};

use crate::auction::{ValuationDistribution, ValuationProfile};
use crate::error::{Error, Result};

pub use pgm::{read_pgm, read_pgm_bytes};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }
}

/// Grayscale image with pixels in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    rows: usize,
    cols: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(rows: usize, cols: usize, pixels: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "image must be non-empty, got {rows}x{cols}"
            )));
        }
        if pixels.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "{rows}x{cols} image needs {} pixels, got {}",
                rows * cols,
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidInput(format!(
                "pixel value {p} outside [0, 1]"
            )));
        }
        Ok(GrayImage { rows, cols, pixels })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    /// Scales 8-bit samples by 1/255.
    pub fn from_u8(rows: usize, cols: usize, samples: &[u8]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            samples.iter().map(|&s| s as f64 / 255.0).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.cols + col]
    }
}

/// Non-empty ordered collection of same-sized images.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePile {
    images: Vec<GrayImage>,
}

impl ImagePile {
    pub fn new(images: Vec<GrayImage>) -> Result<Self> {
        let first = images
            .first()
            .ok_or_else(|| Error::InvalidInput("image pile must not be empty".into()))?;
        let dims = (first.rows, first.cols);
        if let Some(img) = images.iter().find(|i| (i.rows, i.cols) != dims) {
            return Err(Error::InvalidInput(format!(
                "pile mixes {}x{} and {}x{} images",
                dims.0, dims.1, img.rows, img.cols
            )));
        }
        Ok(ImagePile { images })
    }

    pub fn images(&self) -> &[GrayImage] {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.images[0].rows, self.images[0].cols)
    }
}

/// How the cross-pair errors between two piles collapse to one number.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityAggregation {
    /// Arithmetic mean over all cross pairs.
    #[default]
    Mean,
    /// Smallest pairwise error.
    Min,
}

/// How distance and similarity combine into a raw valuation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValuationForm {
    /// `s · d`
    #[default]
    Literal,
    /// `s / (1 + d)`: nearer devices value the UAV more.
    Proximity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValuationInputs {
    pub distance: f64,
    pub similarity: f64,
    pub raw_valuation: f64,
}

impl ValuationInputs {
    pub fn new(distance: f64, similarity: f64, form: ValuationForm) -> Self {
        ValuationInputs {
            distance,
            similarity,
            raw_valuation: valuation(form, similarity, distance),
        }
    }
}

pub fn distance(uav: Position, device: Position) -> f64 {
    (uav.x - device.x).hypot(uav.y - device.y)
}

/// Mean squared pixel error between two same-sized images.
pub fn pair_mse(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return Err(Error::InvalidInput(format!(
            "cannot compare {}x{} with {}x{} image",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let sum: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.pixels.len() as f64)
}

/// Aggregated pairwise error between every image of `current` and every
/// image of `previous`.
pub fn pile_similarity(
    current: &ImagePile,
    previous: &ImagePile,
    aggregation: SimilarityAggregation,
) -> Result<f64> {
    let mut total = 0.0;
    let mut smallest = f64::INFINITY;
    for a in &current.images {
        for b in &previous.images {
            let e = pair_mse(a, b)?;
            total += e;
            smallest = smallest.min(e);
        }
    }
    Ok(match aggregation {
        SimilarityAggregation::Mean => total / (current.len() * previous.len()) as f64,
        SimilarityAggregation::Min => smallest,
    })
}

pub fn raw_valuation(similarity: f64, distance: f64) -> f64 {
    similarity * distance
}

pub fn valuation(form: ValuationForm, similarity: f64, distance: f64) -> f64 {
    match form {
        ValuationForm::Literal => raw_valuation(similarity, distance),
        ValuationForm::Proximity => similarity / (1.0 + distance),
    }
}

/// Min-max maps raw valuations onto the support of `dist`.
///
/// The smallest raw value lands on the lower bound and the largest on the
/// upper bound; order is preserved. All-equal inputs have no scale and are
/// rejected with [`Error::DegenerateProfile`].
pub fn normalize_profile(raw: &[f64], dist: ValuationDistribution) -> Result<ValuationProfile> {
    if raw.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 raw valuations, got {}",
            raw.len()
        )));
    }
    if let Some(v) = raw.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "raw valuation {v} is not finite"
        )));
    }
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Err(Error::DegenerateProfile(raw.len()));
    }
    let (lo, hi) = (dist.lower(), dist.upper());
    let values = raw
        .iter()
        .map(|&r| {
            if r == max {
                hi
            } else {
                (lo + (r - min) / (max - min) * (hi - lo)).clamp(lo, hi)
            }
        })
        .collect();
    ValuationProfile::new(values, dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::argmax;
    use proptest::prelude::*;

    fn img(rows: usize, cols: usize, px: &[f64]) -> GrayImage {
        GrayImage::new(rows, cols, px.to_vec()).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(
            distance(Position::new(0.0, 0.0), Position::new(3.0, 4.0)),
            5.0
        );
        assert_eq!(
            distance(Position::new(2.5, -1.0), Position::new(2.5, -1.0)),
            0.0
        );
        assert_eq!(
            distance(Position::new(1.0, 1.0), Position::new(4.0, 5.0)),
            5.0
        );
    }

    #[test]
    fn mse_examples() {
        let a = img(2, 2, &[0.1, 0.2, 0.3, 0.4]);
        assert_eq!(pair_mse(&a, &a).unwrap(), 0.0);
        for (r, c) in [(1, 1), (3, 5), (8, 8)] {
            let zeros = GrayImage::filled(r, c, 0.0).unwrap();
            let ones = GrayImage::filled(r, c, 1.0).unwrap();
            assert_eq!(pair_mse(&zeros, &ones).unwrap(), 1.0);
        }
        let z = img(2, 2, &[0.0; 4]);
        let one = img(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(pair_mse(&z, &one).unwrap(), 0.25);
    }

    #[test]
    fn mse_dimension_mismatch() {
        let a = GrayImage::filled(2, 2, 0.0).unwrap();
        let b = GrayImage::filled(2, 3, 0.0).unwrap();
        assert!(matches!(pair_mse(&a, &b), Err(Error::InvalidInput(_))));
        let pa = ImagePile::new(vec![a]).unwrap();
        let pb = ImagePile::new(vec![b]).unwrap();
        assert!(pile_similarity(&pa, &pb, SimilarityAggregation::Mean).is_err());
    }

    #[test]
    fn pile_validation() {
        assert!(ImagePile::new(vec![]).is_err());
        let a = GrayImage::filled(2, 2, 0.0).unwrap();
        let b = GrayImage::filled(3, 2, 0.0).unwrap();
        assert!(ImagePile::new(vec![a, b]).is_err());
        assert!(GrayImage::new(1, 2, vec![0.5, 1.5]).is_err());
        assert!(GrayImage::new(2, 2, vec![0.5]).is_err());
    }

    #[test]
    fn pile_similarity_examples() {
        let a = img(1, 2, &[0.0, 0.5]);
        let b = img(1, 2, &[1.0, 0.5]);
        let c = img(1, 2, &[0.2, 0.1]);
        let same = ImagePile::new(vec![a.clone(), a.clone()]).unwrap();
        assert_eq!(
            pile_similarity(&same, &same, SimilarityAggregation::Mean).unwrap(),
            0.0
        );

        let single_a = ImagePile::new(vec![a.clone()]).unwrap();
        let single_c = ImagePile::new(vec![c.clone()]).unwrap();
        assert_eq!(
            pile_similarity(&single_a, &single_c, SimilarityAggregation::Mean).unwrap(),
            pair_mse(&a, &c).unwrap()
        );

        let ab = ImagePile::new(vec![a.clone(), b.clone()]).unwrap();
        let expected = (pair_mse(&a, &c).unwrap() + pair_mse(&b, &c).unwrap()) / 2.0;
        let got = pile_similarity(&ab, &single_c, SimilarityAggregation::Mean).unwrap();
        assert!((got - expected).abs() < 1e-15);

        let min = pile_similarity(&ab, &single_c, SimilarityAggregation::Min).unwrap();
        assert_eq!(
            min,
            pair_mse(&a, &c).unwrap().min(pair_mse(&b, &c).unwrap())
        );
    }

    #[test]
    fn raw_valuation_examples() {
        assert_eq!(raw_valuation(0.0, 123.0), 0.0);
        assert_eq!(raw_valuation(0.2, 5.0), 1.0);
        assert!((valuation(ValuationForm::Proximity, 0.6, 2.0) - 0.2).abs() < 1e-15);
        assert_eq!(valuation(ValuationForm::Proximity, 0.0, 2.0), 0.0);
        let inputs = ValuationInputs::new(5.0, 0.2, ValuationForm::Literal);
        assert_eq!(inputs.raw_valuation, 1.0);
    }

    #[test]
    fn normalize_examples() {
        let d = ValuationDistribution::uniform(0.5, 1.0).unwrap();
        let p = normalize_profile(&[0.0, 1.0, 2.0], d).unwrap();
        assert_eq!(p.values(), &[0.5, 0.75, 1.0]);
        assert!(matches!(
            normalize_profile(&[3.0, 3.0, 3.0], d),
            Err(Error::DegenerateProfile(3))
        ));
        assert!(normalize_profile(&[3.0], d).is_err());
    }

    fn point() -> impl Strategy<Value = Position> {
        (-1e3..1e3f64, -1e3..1e3f64).prop_map(|(x, y)| Position::new(x, y))
    }

    fn image(rows: usize, cols: usize) -> impl Strategy<Value = GrayImage> {
        proptest::collection::vec(0.0..=1.0f64, rows * cols)
            .prop_map(move |px| GrayImage::new(rows, cols, px).unwrap())
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(a in point(), b in point(), c in point()) {
            prop_assert!(distance(a, b) >= 0.0);
            prop_assert_eq!(distance(a, b), distance(b, a));
            prop_assert!(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9);
        }

        #[test]
        fn mse_is_symmetric_and_non_negative(a in image(3, 4), b in image(3, 4)) {
            let ab = pair_mse(&a, &b).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, pair_mse(&b, &a).unwrap());
            prop_assert_eq!(pair_mse(&a, &a).unwrap(), 0.0);
        }

        #[test]
        fn pile_similarity_is_symmetric(xs in proptest::collection::vec(image(2, 2), 1..4),
                                        ys in proptest::collection::vec(image(2, 2), 1..4)) {
            let p = ImagePile::new(xs).unwrap();
            let q = ImagePile::new(ys).unwrap();
            for agg in [SimilarityAggregation::Mean, SimilarityAggregation::Min] {
                let pq = pile_similarity(&p, &q, agg).unwrap();
                let qp = pile_similarity(&q, &p, agg).unwrap();
                prop_assert!(pq >= 0.0);
                prop_assert!((pq - qp).abs() < 1e-15);
                prop_assert_eq!(pile_similarity(&p, &p, SimilarityAggregation::Min).unwrap(), 0.0);
            }
        }

        #[test]
        fn raw_valuation_is_bilinear_and_monotone(s in 0.0..10.0f64, d in 0.0..1e3f64, c in 0.0..8.0f64, e in 0.0..1.0f64) {
            prop_assert!((raw_valuation(c * s, d) - c * raw_valuation(s, d)).abs() <= 1e-12 * (1.0 + c * s * d));
            prop_assert!(raw_valuation(s + e, d) >= raw_valuation(s, d));
            prop_assert!(raw_valuation(s, d + e) >= raw_valuation(s, d));
        }

        #[test]
        fn normalize_stays_in_support_and_keeps_order(raw in proptest::collection::vec(0.0..100.0f64, 2..10)) {
            let d = ValuationDistribution::uniform(0.5, 1.0).unwrap();
            prop_assume!(raw.iter().any(|&r| r != raw[0]));
            let p = normalize_profile(&raw, d).unwrap();
            let out = p.values();
            prop_assert!(out.iter().all(|&v| (0.5..=1.0).contains(&v)));
            prop_assert_eq!(argmax(out), argmax(&raw));
            for i in 0..raw.len() {
                for j in 0..raw.len() {
                    if raw[i] < raw[j] {
                        prop_assert!(out[i] < out[j]);
                    }
                }
            }
        }
    }
}
