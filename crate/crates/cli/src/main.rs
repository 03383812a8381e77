use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use myerson_airnet::experiment::{
    evaluate, gap_curve_svg, revenue_gap, summarize, threads_from_env, write_gap_csv,
    write_loss_csv, EvalReport, ExperimentConfig,
};
use myerson_airnet::monotone::{load_params, save_params, train, Checkpoint, MonotoneNet, Shape};
use myerson_airnet::sim::{generate_world, run_episode, write_csv, write_events, Mechanism};
use myerson_airnet::{Error, Result};

/// Profiles drawn for the held-out summary printed after training.
const TRAIN_TEST_SAMPLES: usize = 10_000;

#[derive(Parser)]
#[command(
    name = "myerson-airnet",
    version,
    about = "Learned revenue-optimal auctions for UAV data collection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a monotone network and write a checkpoint plus its loss trace.
    Train(Common),
    /// Compare a network against a second-price auction on fresh profiles.
    RevenueGap(Common),
    /// Run one simulated data-collection episode.
    Simulate(Common),
    /// Report DLA, SPA and optimal-auction revenue on shared profiles.
    Eval(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum MechanismArg {
    Dla,
    Spa,
}

#[derive(Args)]
struct Common {
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Primary output file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dla")]
    mechanism: MechanismArg,
    #[arg(long)]
    cases: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Also write the sorted gap curve as SVG next to the CSV.
    #[arg(long)]
    svg: bool,
    /// Extra `key=value` setting; may repeat.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    /// Defaults, then the config file, then flags.
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::InvalidConfig(format!("cannot read {}: {e}", path.display()))
            })?;
            cfg.apply_kv(&text)?;
        }
        for kv in &self.overrides {
            let (k, v) = kv.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("--set expects KEY=VALUE, got {kv:?}"))
            })?;
            cfg.set(k.trim(), v)?;
        }
        if let Some(seed) = self.seed {
            cfg.set("seed", &seed.to_string())?;
        }
        if let Some(cases) = self.cases {
            cfg.cases = cases;
        }
        if let Some(it) = self.iterations {
            cfg.net.iterations = it;
        }
        if let Some(out) = &self.out {
            cfg.output_path = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn load_net(&self, cfg: &ExperimentConfig) -> Result<Option<MonotoneNet>> {
        let Some(path) = &self.checkpoint else {
            return Ok(None);
        };
        let shape = Shape {
            n_bidders: cfg.net.n_bidders,
            groups: cfg.net.groups,
            units: cfg.net.units,
        };
        Ok(Some(load_params(path, Some(shape))?.net))
    }
}

fn output(cfg: &ExperimentConfig, default: &str) -> PathBuf {
    cfg.output_path
        .clone()
        .unwrap_or_else(|| PathBuf::from(default))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn train_net(cfg: &ExperimentConfig) -> Result<(MonotoneNet, Vec<f64>)> {
    let (net, trace) = train(&cfg.net, cfg.distribution)?;
    Ok((net, trace.losses))
}

fn print_report(r: &EvalReport) {
    println!("samples          {}", r.samples);
    println!(
        "dla revenue      {:.6} (std {:.6})",
        r.dla.mean, r.dla.std_dev
    );
    println!(
        "spa revenue      {:.6} (std {:.6})",
        r.spa.mean, r.spa.std_dev
    );
    println!(
        "optimal revenue  {:.6} (std {:.6})",
        r.myerson.mean, r.myerson.std_dev
    );
    println!("winner agreement {:.4}", r.winner_agreement);
}

fn cmd_train(args: &Common) -> Result<()> {
    let cfg = args.config()?;
    let threads = threads_from_env()?;
    let start = Instant::now();
    let (net, losses) = train_net(&cfg)?;
    let path = output(&cfg, "model.ckpt");
    save_params(
        &Checkpoint {
            net: net.clone(),
            kappa: cfg.net.kappa,
        },
        &path,
    )?;
    let loss_path = path.with_extension("loss.csv");
    write_loss_csv(&losses, create(&loss_path)?)?;
    println!("checkpoint       {}", path.display());
    println!("loss trace       {}", loss_path.display());
    println!("iterations       {}", losses.len());
    println!(
        "final loss       {:.6}",
        losses.last().copied().unwrap_or(f64::NAN)
    );
    println!("train seconds    {:.1}", start.elapsed().as_secs_f64());
    let report = evaluate(
        &net,
        cfg.distribution,
        TRAIN_TEST_SAMPLES,
        cfg.net.seed,
        threads,
    )?;
    print_report(&report);
    Ok(())
}

fn cmd_revenue_gap(args: &Common) -> Result<()> {
    let cfg = args.config()?;
    let threads = threads_from_env()?;
    let net = match args.load_net(&cfg)? {
        Some(net) => net,
        None => train_net(&cfg)?.0,
    };
    let records = revenue_gap(&net, cfg.distribution, cfg.cases, cfg.net.seed, threads)?;
    let path = output(&cfg, "revenue_gap.csv");
    write_gap_csv(&records, create(&path)?)?;
    println!("gap curve        {}", path.display());
    if args.svg {
        let svg_path = path.with_extension("svg");
        fs::write(&svg_path, gap_curve_svg(&records))?;
        println!("svg              {}", svg_path.display());
    }
    let s = summarize(&records);
    println!("cases            {}", records.len());
    println!("mean dla revenue {:.6}", s.mean_dla);
    println!("mean spa revenue {:.6}", s.mean_spa);
    println!("mean gap         {:.6}", s.mean_gap);
    println!("positive gaps    {:.4}", s.positive_fraction);
    Ok(())
}

fn cmd_simulate(args: &Common) -> Result<()> {
    let cfg = args.config()?;
    let mechanism = match args.mechanism {
        MechanismArg::Spa => Mechanism::Spa,
        MechanismArg::Dla => match args.load_net(&cfg)? {
            Some(net) => Mechanism::Dla(net),
            None => {
                return Err(Error::InvalidInput(
                    "--mechanism dla needs --checkpoint".into(),
                ))
            }
        },
    };
    let mut world = generate_world(&cfg.world)?;
    let records = run_episode(&mut world, &mechanism, cfg.max_rounds)?;
    let path = output(&cfg, "episode.csv");
    write_csv(&records, create(&path)?)?;
    let events = path.with_extension("ndjson");
    write_events(&records, create(&events)?)?;
    let revenue: f64 = records.iter().map(|r| r.outcome.revenue).sum();
    let flown: f64 = records.iter().map(|r| r.distance_flown).sum();
    println!("episode log      {}", path.display());
    println!("event stream     {}", events.display());
    println!("rounds           {}", records.len());
    println!("total revenue    {revenue:.6}");
    println!("distance flown   {flown:.3}");
    println!("battery left     {:.3}", world.battery);
    Ok(())
}

fn cmd_eval(args: &Common) -> Result<()> {
    let cfg = args.config()?;
    let threads = threads_from_env()?;
    let net = args
        .load_net(&cfg)?
        .ok_or_else(|| Error::InvalidInput("eval needs --checkpoint".into()))?;
    let report = evaluate(&net, cfg.distribution, cfg.cases, cfg.net.seed, threads)?;
    print_report(&report);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::RevenueGap(a) => cmd_revenue_gap(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
