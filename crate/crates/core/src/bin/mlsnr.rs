//! Link-level SNR estimation CLI: `simulate` runs the Monte Carlo
//! validation protocol, `estimate` evaluates every estimator on one channel
//! matrix, `sets` dumps the error-vector families.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mlsnr_core::cli::{
    build_sim_config, estimate_report, format_overhead, load_config_file, parse_matrix_file,
    parse_methods, sets_report, SimOverrides,
};
use mlsnr_core::harness::{overhead_report, run_experiment};
use mlsnr_core::modulation::ModulationKind;

#[derive(Parser)]
#[command(
    name = "mlsnr",
    version,
    about = "Per-stream SNR estimation for ML-decoded spatial multiplexing"
)]
struct CliArgs {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the Monte Carlo estimation-error study and write CSV outputs.
    Simulate(SimulateArgs),
    /// Print every SNR estimate for a channel matrix read from a file.
    Estimate(EstimateArgs),
    /// Dump the error-vector sets for a modulation and stream count.
    Sets(SetsArgs),
}

fn parse_modulation(s: &str) -> Result<ModulationKind, String> {
    ModulationKind::parse(s)
        .ok_or_else(|| format!("'{s}' is not a modulation (expected qpsk, qam16 or qam64)"))
}

#[derive(Args)]
struct SimulateArgs {
    /// Constellation: qpsk, qam16 or qam64.
    #[arg(long, value_parser = parse_modulation)]
    modulation: Option<ModulationKind>,
    /// Number of channel realizations (default 2000).
    #[arg(long)]
    channels: Option<usize>,
    /// Symbol vectors per channel (default 1000000).
    #[arg(long)]
    vectors: Option<usize>,
    /// Transmit antennas / streams (default 2).
    #[arg(long)]
    mt: Option<usize>,
    /// Receive antennas (default 2).
    #[arg(long)]
    mr: Option<usize>,
    /// Noise standard deviation.
    #[arg(long, conflicts_with = "snr_db")]
    rho: Option<f64>,
    /// Average antenna SNR in dB (sets rho = 10^(-snr/20)).
    #[arg(long = "snr-db")]
    snr_db: Option<f64>,
    /// Comma-separated method list: capacity,union,fullsum,fullsum_bounded,maxlog,zf.
    #[arg(long)]
    methods: Option<String>,
    /// Estimate with QPSK-built sets even for 16QAM/64QAM transmission.
    #[arg(long = "qpsk-sets")]
    qpsk_sets: bool,
    /// RNG seed; channel i uses substream (seed, i).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Desk-scale preset: 200 channels x 1e5 vectors.
    #[arg(long)]
    desk: bool,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Histogram bin width in dB (default 0.25).
    #[arg(long = "hist-bin-db")]
    hist_bin_db: Option<f64>,
    /// Histogram half-range in dB (default 10).
    #[arg(long = "hist-range-db")]
    hist_range_db: Option<f64>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Channel matrix file: one row per line, entries like `0.3-1.2i`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_modulation, default_value = "qpsk")]
    modulation: ModulationKind,
    #[arg(long, conflicts_with = "snr_db")]
    rho: Option<f64>,
    #[arg(long = "snr-db")]
    snr_db: Option<f64>,
    /// Use QPSK-built sets regardless of the modulation.
    #[arg(long = "qpsk-sets")]
    qpsk_sets: bool,
}

#[derive(Args)]
struct SetsArgs {
    #[arg(long, value_parser = parse_modulation, default_value = "qpsk")]
    modulation: ModulationKind,
    #[arg(long, default_value_t = 2)]
    mt: usize,
}

fn run_simulate(a: SimulateArgs) -> mlsnr_core::Result<()> {
    let base = a.config.as_deref().map(load_config_file).transpose()?;
    let methods = a.methods.as_deref().map(parse_methods).transpose()?;
    let overrides = SimOverrides {
        modulation: a.modulation,
        channels: a.channels,
        vectors: a.vectors,
        m_t: a.mt,
        m_r: a.mr,
        rho: a.rho,
        snr_db: a.snr_db,
        methods,
        qpsk_sets: a.qpsk_sets,
        seed: a.seed,
        desk: a.desk,
        hist_bin_db: a.hist_bin_db,
        hist_range_db: a.hist_range_db,
    };
    let cfg = build_sim_config(base, &overrides)?;
    let out_dir = a.out.unwrap_or_else(|| PathBuf::from("out"));

    let run = || -> mlsnr_core::Result<_> {
        let (records, stats) = run_experiment(&cfg)?;
        let overhead = overhead_report(&cfg, &records)?;
        Ok((records, stats, overhead))
    };
    let (records, stats, overhead) = match a.workers {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| mlsnr_core::Error::InvalidConfig(format!("worker pool: {e}")))?
            .install(run),
        _ => run(),
    }?;

    let bundle = mlsnr_core::cli::write_outputs(&out_dir, &cfg, &records, &stats)?;
    println!(
        "simulated {} channels x {} vectors ({}, {} streams), {} included / {} excluded",
        cfg.num_channels,
        cfg.vectors_per_channel,
        cfg.modulation,
        cfg.m_t,
        stats.included,
        stats.excluded
    );
    for ms in &stats.methods {
        for (i, s) in ms.per_stream.iter().enumerate() {
            println!(
                "  {:>16} stream {}: mean {:+.3} dB, std {:.3} dB ({} samples)",
                ms.method.name(),
                i,
                s.mean_error_db,
                s.std_error_db,
                s.samples
            );
        }
        println!(
            "  {:>16} vertical: mean {:+.3} dB, std {:.3} dB ({} samples)",
            ms.method.name(),
            ms.vertical.mean_error_db,
            ms.vertical.std_error_db,
            ms.vertical.samples
        );
    }
    print!("{}", format_overhead(&overhead));
    println!("wrote {}", bundle.records_path.display());
    println!("wrote {}", bundle.stats_path.display());
    println!("wrote {}", bundle.hist_path.display());
    println!("wrote {}", bundle.manifest_path.display());
    Ok(())
}

fn run_estimate(a: EstimateArgs) -> mlsnr_core::Result<()> {
    let rho = match (a.rho, a.snr_db) {
        (Some(r), None) => r,
        (None, Some(db)) => mlsnr_core::channel::rho_from_avg_antenna_snr_db(db),
        (None, None) => mlsnr_core::channel::rho_from_avg_antenna_snr_db(10.0),
        (Some(_), Some(_)) => {
            return Err(mlsnr_core::Error::InvalidConfig("--rho conflicts with --snr-db".into()))
        }
    };
    let h = parse_matrix_file(&a.input)?;
    print!("{}", estimate_report(h, rho, a.modulation, a.qpsk_sets)?);
    Ok(())
}

fn run_sets(a: SetsArgs) -> mlsnr_core::Result<()> {
    print!("{}", sets_report(a.modulation, a.mt)?);
    Ok(())
}

fn main() -> ExitCode {
    let args = CliArgs::parse();
    let result = match args.cmd {
        Cmd::Simulate(a) => run_simulate(a),
        Cmd::Estimate(a) => run_estimate(a),
        Cmd::Sets(a) => run_sets(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
