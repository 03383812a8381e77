//! Experiment plumbing shared by the command-line tool: flat key=value
//! configuration, the sorted revenue-gap run, revenue evaluation and the
//! gap-curve SVG.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auction::{myerson_clear, spa_clear, ValuationDistribution, ValuationProfile};
use crate::error::{Error, Result};
use crate::monotone::{clear_hard, MonotoneNet, NetConfig};
use crate::sim::WorldConfig;
use crate::valuation::{Position, SimilarityAggregation, ValuationForm};

/// Environment variable holding the worker-thread count. Unset or `0`
/// means serial evaluation.
pub const THREADS_ENV: &str = "MYERSON_AIRNET_THREADS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub net: NetConfig,
    pub distribution: ValuationDistribution,
    pub cases: usize,
    pub output_path: Option<PathBuf>,
    pub world: WorldConfig,
    pub max_rounds: usize,
}

impl Default for ExperimentConfig {
    /// Five bidders on U[0.5, 1], five groups of three units, 500
    /// iterations and 300 revenue-gap cases.
    fn default() -> Self {
        let distribution = ValuationDistribution::Uniform {
            lower: 0.5,
            upper: 1.0,
        };
        ExperimentConfig {
            net: NetConfig::default(),
            distribution,
            cases: 300,
            output_path: None,
            world: WorldConfig {
                distribution,
                ..WorldConfig::default()
            },
            max_rounds: 1000,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::InvalidConfig(format!("{key} = {value:?}: {e}")))
}

impl ExperimentConfig {
    /// Keys accepted by [`ExperimentConfig::set`].
    pub const KEYS: &'static [&'static str] = &[
        "n_bidders",
        "groups",
        "units",
        "kappa",
        "learning_rate",
        "batch_size",
        "iterations",
        "seed",
        "convergence_tol",
        "lower",
        "upper",
        "cases",
        "output",
        "max_rounds",
        "world.area_size",
        "world.image_rows",
        "world.image_cols",
        "world.pile_size",
        "world.battery",
        "world.feature_scale",
        "world.capture_noise",
        "world.aggregation",
        "world.valuation_form",
        "world.start_x",
        "world.start_y",
    ];

    /// Applies one setting. `n_bidders`, `seed`, `lower` and `upper` feed
    /// both the network and the world so the two always agree.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let w = &mut self.world;
        match key {
            "n_bidders" => {
                self.net.n_bidders = parse(key, value)?;
                w.n_devices = self.net.n_bidders;
            }
            "groups" => self.net.groups = parse(key, value)?,
            "units" => self.net.units = parse(key, value)?,
            "kappa" => self.net.kappa = parse(key, value)?,
            "learning_rate" => self.net.learning_rate = parse(key, value)?,
            "batch_size" => self.net.batch_size = parse(key, value)?,
            "iterations" => self.net.iterations = parse(key, value)?,
            "seed" => {
                self.net.seed = parse(key, value)?;
                w.seed = self.net.seed;
            }
            "convergence_tol" => self.net.convergence_tol = parse(key, value)?,
            "lower" | "upper" => {
                let x: f64 = parse(key, value)?;
                let (mut lo, mut hi) = (self.distribution.lower(), self.distribution.upper());
                if key == "lower" {
                    lo = x;
                } else {
                    hi = x;
                }
                // Validated as a pair in `validate`, since the two keys may
                // arrive in either order.
                self.distribution = ValuationDistribution::Uniform {
                    lower: lo,
                    upper: hi,
                };
                w.distribution = self.distribution;
            }
            "cases" => self.cases = parse(key, value)?,
            "output" => self.output_path = Some(PathBuf::from(value)),
            "max_rounds" => self.max_rounds = parse(key, value)?,
            "world.area_size" => w.area_size = parse(key, value)?,
            "world.image_rows" => w.image_rows = parse(key, value)?,
            "world.image_cols" => w.image_cols = parse(key, value)?,
            "world.pile_size" => w.pile_size = parse(key, value)?,
            "world.battery" => w.battery = parse(key, value)?,
            "world.feature_scale" => w.feature_scale = parse(key, value)?,
            "world.capture_noise" => w.capture_noise = parse(key, value)?,
            "world.aggregation" => {
                w.aggregation = match value {
                    "mean" => SimilarityAggregation::Mean,
                    "min" => SimilarityAggregation::Min,
                    _ => {
                        return Err(Error::InvalidConfig(format!(
                            "{key}: expected mean or min, got {value:?}"
                        )))
                    }
                }
            }
            "world.valuation_form" => {
                w.valuation_form = match value {
                    "literal" => ValuationForm::Literal,
                    "proximity" => ValuationForm::Proximity,
                    _ => {
                        return Err(Error::InvalidConfig(format!(
                            "{key}: expected literal or proximity, got {value:?}"
                        )))
                    }
                }
            }
            "world.start_x" | "world.start_y" => {
                let x: f64 = parse(key, value)?;
                let mut p = w.start_position();
                if key == "world.start_x" {
                    p.x = x;
                } else {
                    p.y = x;
                }
                w.start = Some(Position::new(p.x, p.y));
            }
            _ => return Err(Error::InvalidConfig(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the defaults. `#` starts a
    /// comment; blank lines are ignored; later lines override earlier ones.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_kv(text)?;
        Ok(cfg)
    }

    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "line {}: expected key = value, got {line:?}",
                    n + 1
                ))
            })?;
            self.set(k.trim(), v).map_err(|e| match e {
                Error::InvalidConfig(m) => Error::InvalidConfig(format!("line {}: {m}", n + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    /// Settings as `key = value` lines, readable by [`ExperimentConfig::from_kv`].
    pub fn to_kv(&self) -> String {
        let w = &self.world;
        let mut m: BTreeMap<&str, String> = BTreeMap::new();
        m.insert("n_bidders", self.net.n_bidders.to_string());
        m.insert("groups", self.net.groups.to_string());
        m.insert("units", self.net.units.to_string());
        m.insert("kappa", self.net.kappa.to_string());
        m.insert("learning_rate", self.net.learning_rate.to_string());
        m.insert("batch_size", self.net.batch_size.to_string());
        m.insert("iterations", self.net.iterations.to_string());
        m.insert("seed", self.net.seed.to_string());
        m.insert("convergence_tol", self.net.convergence_tol.to_string());
        m.insert("lower", self.distribution.lower().to_string());
        m.insert("upper", self.distribution.upper().to_string());
        m.insert("cases", self.cases.to_string());
        if let Some(p) = &self.output_path {
            m.insert("output", p.display().to_string());
        }
        m.insert("max_rounds", self.max_rounds.to_string());
        m.insert("world.area_size", w.area_size.to_string());
        m.insert("world.image_rows", w.image_rows.to_string());
        m.insert("world.image_cols", w.image_cols.to_string());
        m.insert("world.pile_size", w.pile_size.to_string());
        m.insert("world.battery", w.battery.to_string());
        m.insert("world.feature_scale", w.feature_scale.to_string());
        m.insert("world.capture_noise", w.capture_noise.to_string());
        let agg = match w.aggregation {
            SimilarityAggregation::Mean => "mean",
            SimilarityAggregation::Min => "min",
        };
        m.insert("world.aggregation", agg.into());
        let form = match w.valuation_form {
            ValuationForm::Literal => "literal",
            ValuationForm::Proximity => "proximity",
        };
        m.insert("world.valuation_form", form.into());
        if let Some(start) = w.start {
            m.insert("world.start_x", start.x.to_string());
            m.insert("world.start_y", start.y.to_string());
        }
        m.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.net.validate()?;
        ValuationDistribution::uniform(self.distribution.lower(), self.distribution.upper())
            .map_err(|e| Error::InvalidConfig(format!("distribution: {e}")))?;
        if self.cases == 0 {
            return Err(Error::InvalidConfig("cases must be at least 1".into()));
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidConfig("max_rounds must be at least 1".into()));
        }
        self.world.validate()
    }
}

/// Worker count from [`THREADS_ENV`].
pub fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(s) if s.trim().is_empty() => Ok(0),
        Ok(s) => parse(THREADS_ENV, s.trim()),
    }
}

/// Profile for case `case` under master seed `seed`. Each case owns an
/// independent ChaCha stream, so results do not depend on evaluation order.
/// Stream 0 is left to training, which draws from the same master seed.
pub fn case_profile(
    seed: u64,
    case: u64,
    dist: ValuationDistribution,
    n_bidders: usize,
) -> ValuationProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case + 1);
    ValuationProfile::sample(dist, n_bidders, &mut rng)
}

fn map_cases<T, F>(cases: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    if threads == 0 {
        return (0..cases as u64).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {threads} threads: {e}")))?;
    pool.install(|| (0..cases as u64).into_par_iter().map(f).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub case_index: usize,
    pub dla_revenue: f64,
    pub spa_revenue: f64,
    pub gap: f64,
}

/// Clears `cases` fresh profiles with the network and with a second-price
/// auction, sorted by ascending gap (ties by case index).
pub fn revenue_gap(
    net: &MonotoneNet,
    dist: ValuationDistribution,
    cases: usize,
    seed: u64,
    threads: usize,
) -> Result<Vec<ExperimentRecord>> {
    if cases == 0 {
        return Err(Error::InvalidConfig("cases must be at least 1".into()));
    }
    let n = net.n_bidders();
    let mut records = map_cases(cases, threads, |case| {
        let profile = case_profile(seed, case, dist, n);
        let dla = clear_hard(net, profile.values())?.revenue;
        let spa = spa_clear(profile.values())?.revenue;
        Ok(ExperimentRecord {
            case_index: case as usize,
            dla_revenue: dla,
            spa_revenue: spa,
            gap: dla - spa,
        })
    })?;
    records.sort_by(|a, b| {
        a.gap
            .total_cmp(&b.gap)
            .then(a.case_index.cmp(&b.case_index))
    });
    Ok(records)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapSummary {
    pub mean_dla: f64,
    pub mean_spa: f64,
    pub mean_gap: f64,
    pub positive_fraction: f64,
}

pub fn summarize(records: &[ExperimentRecord]) -> GapSummary {
    let n = records.len() as f64;
    let mean = |f: fn(&ExperimentRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
    GapSummary {
        mean_dla: mean(|r| r.dla_revenue),
        mean_spa: mean(|r| r.spa_revenue),
        mean_gap: mean(|r| r.gap),
        positive_fraction: records.iter().filter(|r| r.gap > 0.0).count() as f64 / n,
    }
}

/// Columns `rank, gap, dla_revenue, spa_revenue`; rank starts at 1.
pub fn write_gap_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "gap", "dla_revenue", "spa_revenue"])?;
    for (rank, r) in records.iter().enumerate() {
        w.write_record([
            (rank + 1).to_string(),
            r.gap.to_string(),
            r.dla_revenue.to_string(),
            r.spa_revenue.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `iteration, loss`; iteration starts at 0.
pub fn write_loss_csv<W: Write>(losses: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "loss"])?;
    for (i, l) in losses.iter().enumerate() {
        w.write_record([i.to_string(), l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Standalone SVG line plot of the sorted gaps against rank.
pub fn gap_curve_svg(records: &[ExperimentRecord]) -> String {
    let (width, height, pad) = (640.0, 400.0, 50.0);
    let lo = records.iter().map(|r| r.gap).fold(0.0_f64, f64::min);
    let hi = records.iter().map(|r| r.gap).fold(0.0_f64, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let n = records.len().max(2) - 1;
    let x = |i: usize| pad + (width - 2.0 * pad) * i as f64 / n as f64;
    let y = |g: f64| height - pad - (height - 2.0 * pad) * (g - lo) / span;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{pad}" y1="{y0:.2}" x2="{x1}" y2="{y0:.2}" stroke="gray" stroke-dasharray="4 4"/>"#,
        y0 = y(0.0),
        x1 = width - pad
    );
    let _ = writeln!(
        s,
        r#"<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{b}" stroke="black"/>"#,
        b = height - pad
    );
    let points: Vec<String> = records
        .iter()
        .enumerate()
        .map(|(i, r)| format!("{:.2},{:.2}", x(i), y(r.gap)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
        points.join(" ")
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">case (sorted by gap)</text>"#,
        width / 2.0,
        height - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" font-size="12" transform="rotate(-90 15 {})" text-anchor="middle">DLA - SPA revenue</text>"#,
        height / 2.0,
        height / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{:.2}" font-size="10" text-anchor="end">{hi:.4}</text>"#,
        pad - 4.0,
        y(hi) + 4.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{:.2}" font-size="10" text-anchor="end">{lo:.4}</text>"#,
        pad - 4.0,
        y(lo) + 4.0
    );
    s.push_str("</svg>\n");
    s
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RevenueStats {
    pub mean: f64,
    /// Population standard deviation; zero for a single sample.
    pub std_dev: f64,
}

impl RevenueStats {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        RevenueStats {
            mean,
            std_dev: var.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub samples: usize,
    pub dla: RevenueStats,
    pub spa: RevenueStats,
    pub myerson: RevenueStats,
    /// Fraction of samples where the network and the optimal auction pick
    /// the same winner (or both keep the item).
    pub winner_agreement: f64,
}

/// Revenue of the network, a second-price auction and the optimal auction on
/// the same sampled profiles.
pub fn evaluate(
    net: &MonotoneNet,
    dist: ValuationDistribution,
    samples: usize,
    seed: u64,
    threads: usize,
) -> Result<EvalReport> {
    if samples == 0 {
        return Err(Error::InvalidConfig("samples must be at least 1".into()));
    }
    let n = net.n_bidders();
    let rows = map_cases(samples, threads, |case| {
        let profile = case_profile(seed, case, dist, n);
        let dla = clear_hard(net, profile.values())?;
        let spa = spa_clear(profile.values())?;
        let opt = myerson_clear(&profile);
        Ok((
            dla.revenue,
            spa.revenue,
            opt.revenue,
            dla.winner == opt.winner,
        ))
    })?;
    let col = |f: fn(&(f64, f64, f64, bool)) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    Ok(EvalReport {
        samples,
        dla: RevenueStats::of(&col(|r| r.0)),
        spa: RevenueStats::of(&col(|r| r.1)),
        myerson: RevenueStats::of(&col(|r| r.2)),
        winner_agreement: rows.iter().filter(|r| r.3).count() as f64 / samples as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u01() -> ValuationDistribution {
        ValuationDistribution::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn defaults_hold_experiment_constants() {
        let c = ExperimentConfig::default();
        assert_eq!((c.net.n_bidders, c.net.groups, c.net.units), (5, 5, 3));
        assert_eq!(c.net.iterations, 500);
        assert_eq!(c.cases, 300);
        assert_eq!((c.distribution.lower(), c.distribution.upper()), (0.5, 1.0));
        assert_eq!(c.world.n_devices, 5);
        c.validate().unwrap();
    }

    #[test]
    fn kv_round_trip() {
        let text = "# comment\nseed = 7\n\nlower=0\nupper = 2 # inline\nworld.aggregation = min\nworld.start_x = 10\n";
        let c = ExperimentConfig::from_kv(text).unwrap();
        assert_eq!(c.net.seed, 7);
        assert_eq!(c.world.seed, 7);
        assert_eq!(
            c.distribution,
            ValuationDistribution::uniform(0.0, 2.0).unwrap()
        );
        assert_eq!(c.world.aggregation, SimilarityAggregation::Min);
        assert_eq!(c.world.start, Some(Position::new(10.0, 500.0)));
        let again = ExperimentConfig::from_kv(&c.to_kv()).unwrap();
        assert_eq!(again, c);
        let d = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_kv(&d.to_kv()).unwrap(), d);
    }

    #[test]
    fn kv_errors_name_the_line() {
        let err = ExperimentConfig::from_kv("seed = 1\nbogus = 3\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(ExperimentConfig::from_kv("cases = -1").is_err());
        assert!(ExperimentConfig::from_kv("just words").is_err());
        let inverted = ExperimentConfig::from_kv("lower = 1\nupper = 0.5").unwrap();
        assert!(inverted.validate().is_err());
    }

    #[test]
    fn every_listed_key_is_accepted() {
        for key in ExperimentConfig::KEYS {
            let value = match *key {
                "world.aggregation" => "mean",
                "world.valuation_form" => "literal",
                "output" => "x.csv",
                _ => "3",
            };
            ExperimentConfig::default().set(key, value).unwrap();
        }
    }

    #[test]
    fn case_profiles_are_independent_of_order() {
        let a = case_profile(9, 3, u01(), 5);
        let _ = case_profile(9, 2, u01(), 5);
        assert_eq!(a, case_profile(9, 3, u01(), 5));
        assert_ne!(a, case_profile(9, 4, u01(), 5));
        assert_ne!(a, case_profile(10, 3, u01(), 5));
    }

    #[test]
    fn identity_net_has_zero_gaps() {
        let net = MonotoneNet::identity(5, 1, 1).unwrap();
        let recs = revenue_gap(&net, u01(), 500, 1, 0).unwrap();
        assert_eq!(recs.len(), 500);
        assert!(recs.iter().all(|r| r.gap == 0.0));
    }

    #[test]
    fn parallel_matches_serial() {
        let net = MonotoneNet::uniform_affine(5, 1, 1, 2.0, -1.0).unwrap();
        let serial = revenue_gap(&net, u01(), 1000, 4, 0).unwrap();
        let parallel = revenue_gap(&net, u01(), 1000, 4, 3).unwrap();
        assert_eq!(serial, parallel);
        assert!(serial.windows(2).all(|w| w[0].gap <= w[1].gap));
    }

    #[test]
    fn gap_csv_and_summary_agree() {
        let net = MonotoneNet::uniform_affine(5, 1, 1, 2.0, -1.0).unwrap();
        let recs = revenue_gap(&net, u01(), 200, 2, 0).unwrap();
        let mut buf = Vec::new();
        write_gap_csv(&recs, &mut buf).unwrap();
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        let rows: Vec<Vec<f64>> = rdr
            .records()
            .map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 200);
        let n = rows.len() as f64;
        let gap = rows.iter().map(|r| r[1]).sum::<f64>() / n;
        let dla = rows.iter().map(|r| r[2]).sum::<f64>() / n;
        let spa = rows.iter().map(|r| r[3]).sum::<f64>() / n;
        assert!((gap - (dla - spa)).abs() < 1e-12);
        let s = summarize(&recs);
        assert!((s.mean_gap - gap).abs() < 1e-12);
    }

    #[test]
    fn svg_is_self_contained() {
        let net = MonotoneNet::identity(3, 1, 1).unwrap();
        let recs = revenue_gap(&net, u01(), 10, 0, 0).unwrap();
        let svg = gap_curve_svg(&recs);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(!svg.contains("href"));
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn single_sample_has_zero_spread() {
        let net = MonotoneNet::identity(5, 1, 1).unwrap();
        let r = evaluate(&net, u01(), 1, 0, 0).unwrap();
        assert_eq!(r.dla.std_dev, 0.0);
        assert_eq!(r.spa.std_dev, 0.0);
        assert_eq!(r.myerson.std_dev, 0.0);
        assert!(evaluate(&net, u01(), 0, 0, 0).is_err());
    }

    #[test]
    fn optimal_equals_spa_when_reserve_is_below_support() {
        let d = ValuationDistribution::uniform(0.5, 1.0).unwrap();
        let net = MonotoneNet::identity(5, 1, 1).unwrap();
        for case in 0..5000 {
            let p = case_profile(3, case, d, 5);
            let opt = myerson_clear(&p);
            let spa = spa_clear(p.values()).unwrap();
            assert_eq!(opt.winner, spa.winner);
            assert_eq!(opt.payment, spa.payment);
        }
        let r = evaluate(&net, d, 5000, 3, 0).unwrap();
        assert_eq!(r.myerson.mean, r.spa.mean);
    }
}
