//! Acceptance criteria. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use myerson_airnet::auction::{
    myerson_clear, spa_clear, AuctionOutcome, ValuationDistribution, ValuationProfile,
};
use myerson_airnet::experiment::{evaluate, revenue_gap, summarize, ExperimentConfig};
use myerson_airnet::monotone::{clear_hard, grad, loss, routing, train, MonotoneNet, NetConfig};
use myerson_airnet::sim::{generate_world, run_episode, Mechanism, WorldConfig};
use myerson_airnet::valuation::{
    distance, pair_mse, pile_similarity, raw_valuation, GrayImage, ImagePile, Position,
    SimilarityAggregation,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn u01() -> ValuationDistribution {
    ValuationDistribution::uniform(0.0, 1.0).unwrap()
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// 1. A w=2, b=-1 transform clears exactly like the optimal auction on U[0,1].
fn mechanism_equivalence() -> Verdict {
    let start = Instant::now();
    let net = MonotoneNet::uniform_affine(5, 1, 1, 2.0, -1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut winner_mismatch, mut max_pay_err) = (0, 0.0_f64);
    for _ in 0..10_000 {
        let p = ValuationProfile::sample(u01(), 5, &mut rng);
        let a = clear_hard(&net, p.values()).unwrap();
        let b = myerson_clear(&p);
        if a.winner != b.winner {
            winner_mismatch += 1;
        }
        max_pay_err = max_pay_err.max((a.payment - b.payment).abs());
    }
    let t = secs(start.elapsed());
    verdict(
        winner_mismatch == 0 && max_pay_err < 1e-9 && t < 10.0,
        format!("winner mismatches {winner_mismatch}/10000, max payment error {max_pay_err:.2e}, {t:.2}s"),
    )
}

/// 2. Analytic gradient against central differences at 50 tie-free points.
fn gradient_check() -> Verdict {
    let start = Instant::now();
    let h = 1e-5;
    let kappa = 10.0;
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut points, mut attempts, mut worst) = (0, 0, 0.0_f64);
    while points < 50 && attempts < 10_000 {
        attempts += 1;
        let (k, j) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let len = 3 * k * j;
        let theta: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let beta: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..0.5)).collect();
        let net = MonotoneNet::from_raw(3, k, j, theta, beta).unwrap();
        let batch: Vec<ValuationProfile> = (0..8)
            .map(|_| ValuationProfile::sample(u01(), 3, &mut rng))
            .collect();
        let base_routes = routing(&net, &batch);

        let mut numeric = Vec::with_capacity(2 * len);
        let mut tie = false;
        'params: for which in 0..2 {
            for idx in 0..len {
                let mut f = [0.0; 2];
                for (s, sign) in [1.0, -1.0].into_iter().enumerate() {
                    let mut n = net.clone();
                    let p = if which == 0 {
                        n.theta_mut()
                    } else {
                        n.beta_mut()
                    };
                    p[idx] += sign * h;
                    if routing(&n, &batch) != base_routes {
                        tie = true;
                        break 'params;
                    }
                    f[s] = loss(&n, &batch, kappa);
                }
                numeric.push((f[0] - f[1]) / (2.0 * h));
            }
        }
        if tie {
            continue;
        }
        let g = grad(&net, &batch, kappa);
        let analytic: Vec<f64> = g.theta.iter().chain(&g.beta).copied().collect();
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| (a - n).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = numeric.iter().map(|n| n * n).sum::<f64>().sqrt().max(1e-12);
        worst = worst.max(diff / scale);
        points += 1;
    }
    let t = secs(start.elapsed());
    verdict(
        points == 50 && worst < 1e-4 && t < 30.0,
        format!("{points} points ({attempts} drawn), worst relative error {worst:.2e}, {t:.2}s"),
    )
}

/// 3. Inverse transform undoes the forward transform.
fn inverse_composition() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let shapes = [(1, 1), (2, 3), (5, 3), (3, 5), (4, 4)];
    let mut worst = 0.0_f64;
    let mut checked_53 = 0;
    for pair in 0..10_000 {
        let (k, j) = shapes[pair % shapes.len()];
        if (k, j) == (5, 3) {
            checked_53 += 1;
        }
        let len = 2 * k * j;
        let theta = (0..len).map(|_| rng.random_range(-2.0..2.0)).collect();
        let beta = (0..len).map(|_| rng.random_range(-2.0..2.0)).collect();
        let net = MonotoneNet::from_raw(2, k, j, theta, beta).unwrap();
        let bidder = rng.random_range(0..2);
        let b: f64 = rng.random_range(-5.0..5.0);
        let back = net.transform_inverse(bidder, net.transform(bidder, b));
        worst = worst.max((back - b).abs());
    }
    verdict(
        worst < 1e-9 && checked_53 > 0,
        format!("10000 pairs ({checked_53} with K=5, J=3), max error {worst:.2e}"),
    )
}

struct Truthfulness {
    checks: usize,
    violations: usize,
    max_gain: f64,
}

fn truthfulness<F>(dist: ValuationDistribution, n: usize, seed: u64, clear: F) -> Truthfulness
where
    F: Fn(&ValuationProfile) -> AuctionOutcome,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Truthfulness {
        checks: 0,
        violations: 0,
        max_gain: 0.0,
    };
    for _ in 0..10_000 {
        let truth = ValuationProfile::sample(dist, n, &mut rng);
        let honest = clear(&truth);
        for _ in 0..10 {
            let i = rng.random_range(0..n);
            let mut bids = truth.values().to_vec();
            bids[i] = dist.sample(&mut rng);
            let lie = clear(&ValuationProfile::new(bids, dist).unwrap());
            let gain = lie.utility(i, truth.values()[i]) - honest.utility(i, truth.values()[i]);
            out.checks += 1;
            if gain > 1e-12 {
                out.violations += 1;
                out.max_gain = out.max_gain.max(gain);
            }
        }
    }
    out
}

/// 4. No profitable unilateral misreport.
fn truthfulness_suite(trained: &MonotoneNet) -> Verdict {
    let spa = truthfulness(u01(), 5, 401, |p| spa_clear(p.values()).unwrap());
    let opt = truthfulness(u01(), 5, 402, myerson_clear);
    let dla = truthfulness(u01(), 5, 403, |p| clear_hard(trained, p.values()).unwrap());
    let rate = dla.violations as f64 / dla.checks as f64;
    verdict(
        spa.violations == 0 && opt.violations == 0 && rate < 0.02 && dla.max_gain < 0.02,
        format!(
            "spa {}/{} violations, optimal {}/{}, dla rate {:.4} max gain {:.2e}",
            spa.violations, spa.checks, opt.violations, opt.checks, rate, dla.max_gain
        ),
    )
}

/// 5. Training on U[0,1] recovers at least half of the optimal-auction gap.
fn revenue_improvement(net: &MonotoneNet, train_time: Duration) -> Verdict {
    let start = Instant::now();
    let r = evaluate(net, u01(), 100_000, 505, 0).unwrap();
    let analytic = r.myerson.mean - r.spa.mean;
    let learned = r.dla.mean - r.spa.mean;
    let captured = learned / analytic;
    let t = secs(train_time + start.elapsed());
    verdict(
        learned > 0.0 && captured >= 0.5 && t < 300.0,
        format!(
            "dla {:.5}, spa {:.5}, optimal {:.5}, captured {:.1}% of gap, {t:.1}s",
            r.dla.mean,
            r.spa.mean,
            r.myerson.mean,
            100.0 * captured
        ),
    )
}

/// 6. Default experiment: U[0.5,1], 300 sorted cases, near-zero mean gap.
fn default_experiment() -> Verdict {
    let start = Instant::now();
    let cfg = ExperimentConfig::default();
    let (net, _) = train(&cfg.net, cfg.distribution).unwrap();
    let recs = revenue_gap(&net, cfg.distribution, cfg.cases, cfg.net.seed, 0).unwrap();
    let sorted = recs.windows(2).all(|w| w[0].gap <= w[1].gap);
    let s = summarize(&recs);
    let t = secs(start.elapsed());
    verdict(
        recs.len() == 300 && sorted && s.mean_gap.abs() <= 0.05 && t < 120.0,
        format!(
            "{} cases, sorted {sorted}, mean gap {:+.5}, gap range [{:+.4}, {:+.4}], {t:.1}s",
            recs.len(),
            s.mean_gap,
            recs.first().unwrap().gap,
            recs.last().unwrap().gap
        ),
    )
}

fn random_image(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> GrayImage {
    GrayImage::new(rows, cols, (0..rows * cols).map(|_| rng.random()).collect()).unwrap()
}

/// 7. Distance, pixel error, valuation product and pile aggregation.
fn valuation_oracles() -> Verdict {
    let mut failures = Vec::new();
    if distance(Position::new(1.0, 1.0), Position::new(4.0, 5.0)) != 5.0 {
        failures.push("3-4-5 distance");
    }
    let img = |p: [f64; 4]| GrayImage::new(2, 2, p.to_vec()).unwrap();
    let z = img([0.0; 4]);
    if pair_mse(&z, &z).unwrap() != 0.0 {
        failures.push("identical images");
    }
    if pair_mse(&z, &img([1.0; 4])).unwrap() != 1.0 {
        failures.push("black vs white");
    }
    if pair_mse(&z, &img([1.0, 0.0, 0.0, 0.0])).unwrap() != 0.25 {
        failures.push("one pixel of four");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for _ in 0..1000 {
        let (s1, s2, d, a): (f64, f64, f64, f64) = (
            rng.random(),
            rng.random(),
            rng.random_range(0.0..2000.0),
            rng.random_range(0.0..3.0),
        );
        let lin_s =
            raw_valuation(s1 + a * s2, d) - (raw_valuation(s1, d) + a * raw_valuation(s2, d));
        let lin_d = raw_valuation(s1, a * d) - a * raw_valuation(s1, d);
        if lin_s.abs() > 1e-9 * (1.0 + d) || lin_d.abs() > 1e-9 * (1.0 + d) {
            failures.push("bilinearity");
            break;
        }
    }

    let mut worst = 0.0_f64;
    for _ in 0..500 {
        let (rows, cols) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let (na, nb) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let a: Vec<GrayImage> = (0..na)
            .map(|_| random_image(&mut rng, rows, cols))
            .collect();
        let b: Vec<GrayImage> = (0..nb)
            .map(|_| random_image(&mut rng, rows, cols))
            .collect();
        let mut errs = Vec::new();
        for x in &a {
            for y in &b {
                let sq: f64 = x
                    .pixels()
                    .iter()
                    .zip(y.pixels())
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum();
                errs.push(sq / (rows * cols) as f64);
            }
        }
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        let min = errs.iter().copied().fold(f64::INFINITY, f64::min);
        let (pa, pb) = (ImagePile::new(a).unwrap(), ImagePile::new(b).unwrap());
        worst = worst
            .max((pile_similarity(&pa, &pb, SimilarityAggregation::Mean).unwrap() - mean).abs());
        worst =
            worst.max((pile_similarity(&pa, &pb, SimilarityAggregation::Min).unwrap() - min).abs());
    }
    if worst > 1e-12 {
        failures.push("pile aggregation");
    }
    verdict(
        failures.is_empty(),
        format!(
            "failed: {failures:?}, pile aggregation max error {worst:.2e} over 500 random piles"
        ),
    )
}

/// 8. Golden episode log plus battery and winner invariants on 100 episodes.
fn simulator_determinism() -> Verdict {
    let spa_ok = common::csv_bytes(&common::demo_episode(&Mechanism::Spa))
        == std::fs::read(common::data("episode_spa_seed42.csv")).unwrap_or_default();
    let dla_ok = common::csv_bytes(&common::demo_episode(&Mechanism::Dla(common::demo_net())))
        == std::fs::read(common::data("episode_dla_seed42.csv")).unwrap_or_default();

    let mut broken = Vec::new();
    let mut rounds = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(800 + seed);
        let cfg = WorldConfig {
            seed,
            n_devices: rng.random_range(2..=8),
            battery: rng.random_range(500.0..8000.0),
            capture_noise: rng.random(),
            aggregation: if seed % 3 == 0 {
                SimilarityAggregation::Min
            } else {
                SimilarityAggregation::Mean
            },
            image_rows: 4,
            image_cols: 4,
            ..WorldConfig::default()
        };
        let mechanism = if seed % 2 == 0 {
            Mechanism::Spa
        } else {
            Mechanism::Dla(MonotoneNet::random(cfg.n_devices, 3, 2, &mut rng).unwrap())
        };
        let mut world = generate_world(&cfg).unwrap();
        let recs = run_episode(&mut world, &mechanism, 200).unwrap();
        rounds += recs.len();

        let mut battery = cfg.battery;
        let mut flown = 0.0;
        for (k, r) in recs.iter().enumerate() {
            if r.battery > battery {
                broken.push(format!("seed {seed}: battery rose at round {}", r.round));
            }
            battery = r.battery;
            flown += r.distance_flown;
            let scores = mechanism.scores(r.valuations.values());
            let best = scores
                .iter()
                .enumerate()
                .fold(0, |b, (i, &s)| if s > scores[b] { i } else { b });
            match r.outcome.winner {
                Some(w) if w != best => broken.push(format!(
                    "seed {seed}: round {} winner {w}, argmax {best}",
                    r.round
                )),
                None if r.distance_flown != 0.0 => {
                    broken.push(format!("seed {seed}: moved without a winner"))
                }
                Some(w) => {
                    if let Some(next) = recs.get(k + 1) {
                        if next.inputs[w].distance != 0.0 || next.valuations.values()[w] != 0.5 {
                            broken.push(format!("seed {seed}: served device {w} not at minimum"));
                        }
                    }
                }
                None => {}
            }
        }
        if flown > cfg.battery + 1e-9 {
            broken.push(format!("seed {seed}: flew {flown} on {}", cfg.battery));
        }
    }
    broken.truncate(3);
    verdict(
        spa_ok && dla_ok && broken.is_empty(),
        format!("golden spa {spa_ok}, golden dla {dla_ok}, {rounds} rounds over 100 episodes, issues {broken:?}"),
    )
}

fn main() -> ExitCode {
    let train_start = Instant::now();
    let (trained, _) = train(&NetConfig::default(), u01()).expect("U[0,1] training");
    let train_time = train_start.elapsed();

    let results = [
        ("1 mechanism equivalence", mechanism_equivalence()),
        ("2 gradient vs finite differences", gradient_check()),
        ("3 inverse composition", inverse_composition()),
        ("4 truthfulness", truthfulness_suite(&trained)),
        (
            "5 revenue improvement on U[0,1]",
            revenue_improvement(&trained, train_time),
        ),
        ("6 default experiment on U[0.5,1]", default_experiment()),
        ("7 valuation oracles", valuation_oracles()),
        ("8 simulator determinism", simulator_determinism()),
    ];
    let mut failed = 0;
    for (name, v) in &results {
        println!(
            "{} criterion {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
