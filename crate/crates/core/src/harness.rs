//! Monte Carlo validation: generate channels, transmit, ML-decode, measure
//! empiric per-stream and joint symbol error rates, convert them to empiric
//! SNRs, evaluate every requested estimator on the same realization, and
//! aggregate estimation-error statistics.
//!
//! Determinism: channel `i` always consumes the ChaCha substream
//! `(seed, stream = i)`, so results are bit-identical for any worker count.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{rayleigh_channel, rho_from_avg_antenna_snr_db, transmit_into, ChannelRealization};
use crate::decoders::{MlDecoder, MAX_SEARCH_SPACE};
use crate::error::{Error, Result};
use crate::errorsets::ErrorSetFamily;
use crate::estimators::{evaluate, Method, SnrEstimate};
use crate::modulation::{Constellation, ModulationKind};
use crate::numerics::{ComplexMat, ComplexVec};

/// Noise level, either directly or as a target average antenna SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseSpec {
    #[serde(rename = "rho")]
    Rho(f64),
    #[serde(rename = "avg_antenna_snr_db")]
    AvgAntennaSnrDb(f64),
}

impl NoiseSpec {
    pub fn rho(self) -> f64 {
        match self {
            NoiseSpec::Rho(r) => r,
            NoiseSpec::AvgAntennaSnrDb(db) => rho_from_avg_antenna_snr_db(db),
        }
    }
}

/// Full experiment configuration. Serializes into the run manifest and
/// round-trips exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub num_channels: usize,
    pub vectors_per_channel: usize,
    pub m_t: usize,
    pub m_r: usize,
    pub modulation: ModulationKind,
    pub noise: NoiseSpec,
    pub methods: Vec<Method>,
    /// Estimate with QPSK-built sets even when transmitting 16QAM/64QAM.
    pub qpsk_sets_for_higher_qam: bool,
    pub seed: u64,
    pub hist_bin_db: f64,
    pub hist_range_db: f64,
}

/// Desk-scale preset: two hundred channels at 1e5 vectors each.
pub const DESK_CHANNELS: usize = 200;
pub const DESK_VECTORS: usize = 100_000;

impl Default for SimConfig {
    /// Full-scale defaults: 2000 channels at 1e6 vectors each over a QPSK
    /// 2x2 link at 10 dB average antenna SNR.
    fn default() -> Self {
        Self {
            num_channels: 2000,
            vectors_per_channel: 1_000_000,
            m_t: 2,
            m_r: 2,
            modulation: ModulationKind::Qpsk,
            noise: NoiseSpec::AvgAntennaSnrDb(10.0),
            methods: vec![
                Method::Capacity,
                Method::UnionBound,
                Method::FullSum,
                Method::MaxLog,
                Method::Zf,
            ],
            qpsk_sets_for_higher_qam: false,
            seed: 1,
            hist_bin_db: 0.25,
            hist_range_db: 10.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_channels < 1 {
            return Err(Error::InvalidConfig("num_channels must be >= 1".into()));
        }
        if self.vectors_per_channel < 1 {
            return Err(Error::InvalidConfig("vectors_per_channel must be >= 1".into()));
        }
        if !(self.m_t >= 1 && self.m_r >= self.m_t) {
            return Err(Error::InvalidConfig(format!(
                "need m_r >= m_t >= 1, got m_t={} m_r={}",
                self.m_t, self.m_r
            )));
        }
        let rho = self.noise.rho();
        if !(rho.is_finite() && (1e-100..=1e100).contains(&rho)) {
            return Err(Error::InvalidConfig(format!("noise level out of range: rho = {rho}")));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("at least one method is required".into()));
        }
        let q = self.modulation.side() * self.modulation.side();
        let space = q.checked_pow(self.m_t as u32);
        if space.is_none() || space.unwrap() > MAX_SEARCH_SPACE {
            return Err(Error::InvalidConfig(format!(
                "ML search space {q}^{} exceeds the {MAX_SEARCH_SPACE} candidate guard",
                self.m_t
            )));
        }
        if !(self.hist_bin_db > 0.0 && self.hist_range_db > 0.0) {
            return Err(Error::InvalidConfig("histogram bin and range must be positive".into()));
        }
        Ok(())
    }

    /// Constellation used by the estimators (QPSK in the reduced-set mode).
    pub fn estimation_modulation(&self) -> ModulationKind {
        if self.qpsk_sets_for_higher_qam {
            ModulationKind::Qpsk
        } else {
            self.modulation
        }
    }
}

/// Immutable per-run tables shared by all workers.
pub struct SharedTables {
    pub tx_c: Constellation,
    pub est_c: Constellation,
    pub family: Option<Arc<ErrorSetFamily>>,
    pub candidates: Vec<ComplexVec>,
}

impl SharedTables {
    pub fn build(cfg: &SimConfig) -> Result<Self> {
        let tx_c = Constellation::new(cfg.modulation);
        let est_c = Constellation::new(cfg.estimation_modulation());
        let needs_family = cfg.methods.iter().any(|m| {
            matches!(m, Method::UnionBound | Method::FullSum | Method::FullSumBounded | Method::MaxLog)
        });
        let family = if needs_family {
            Some(ErrorSetFamily::cached(est_c.kind(), cfg.m_t)?)
        } else {
            None
        };
        let candidates = crate::decoders::enumerate_candidates(&tx_c, cfg.m_t)?;
        Ok(Self { tx_c, est_c, family, candidates })
    }
}

/// Everything measured and estimated on one channel realization.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub channel_index: usize,
    pub h_phy: ComplexMat,
    pub per_stream_errors: Vec<u64>,
    pub per_stream_ser: Vec<f64>,
    pub joint_errors: u64,
    pub joint_ser: f64,
    /// Empiric per-stream SNR in dB; `None` when the stream saw no errors
    /// (or only errors).
    pub empiric_per_stream_db: Vec<Option<f64>>,
    pub empiric_joint_db: Option<f64>,
    /// One estimate per configured method, in configuration order.
    pub estimates: Vec<SnrEstimate>,
    /// Set when any required SER is degenerate; excluded channels carry no
    /// weight in the statistics.
    pub excluded: bool,
    /// ML-decoder invocations spent on data detection.
    pub ml_searches_data: u64,
    /// ML-decoder invocations spent on SNR estimation (max-log reuse path).
    pub ml_searches_snr: u64,
}

/// Empiric post-processing SNR implied by a symbol error rate through the
/// constellation exponent map, in dB.
pub fn empiric_snr(ser: f64, c: &Constellation) -> Result<f64> {
    if ser <= 0.0 {
        return Err(Error::ZeroSer);
    }
    if ser >= 1.0 {
        return Err(Error::ProbabilityDomain { value: ser });
    }
    let lin = c.snr_from_perr(ser)?;
    Ok(10.0 * lin.log10())
}

/// Deterministic substream for one channel index.
pub fn substream(seed: u64, channel_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(channel_index as u64);
    rng
}

/// Runs one channel: draw, estimate, transmit and decode
/// `vectors_per_channel` symbol vectors, count per-stream and joint errors.
pub fn run_trial(
    cfg: &SimConfig,
    channel_index: usize,
    rng: &mut ChaCha8Rng,
    tables: &SharedTables,
) -> Result<TrialRecord> {
    let m_t = cfg.m_t;
    let h_phy = rayleigh_channel(cfg.m_r, m_t, rng);
    let ch = ChannelRealization::new(h_phy.clone(), cfg.noise.rho())?;

    let estimates: Vec<SnrEstimate> = cfg
        .methods
        .iter()
        .map(|&m| evaluate(m, &ch, &tables.est_c, tables.family.as_deref()))
        .collect::<Result<_>>()?;
    let maxlog_evals = cfg.methods.iter().filter(|&&m| m == Method::MaxLog).count() as u64;
    let ml_searches_snr = maxlog_evals * m_t as u64;

    let decoder = MlDecoder::new(ch.h_eff(), &tables.candidates)?;
    let q = tables.tx_c.q_size();
    let points = tables.tx_c.points();

    let mut per_stream_errors = vec![0u64; m_t];
    let mut joint_errors = 0u64;
    let mut s_idx = vec![0usize; m_t];
    let mut s = vec![Complex64::ZERO; m_t];
    let mut y = Vec::with_capacity(cfg.m_r);
    for _ in 0..cfg.vectors_per_channel {
        for k in 0..m_t {
            s_idx[k] = rng.random_range(0..q);
            s[k] = points[s_idx[k]];
        }
        transmit_into(&ch, &s, rng, &mut y)?;
        let hit = decoder.search(&y).best_index;
        let mut tmp = hit;
        let mut any = false;
        for k in 0..m_t {
            if tmp % q != s_idx[k] {
                per_stream_errors[k] += 1;
                any = true;
            }
            tmp /= q;
        }
        if any {
            joint_errors += 1;
        }
    }

    let n = cfg.vectors_per_channel as f64;
    let per_stream_ser: Vec<f64> = per_stream_errors.iter().map(|&e| e as f64 / n).collect();
    let joint_ser = joint_errors as f64 / n;
    let empiric_per_stream_db: Vec<Option<f64>> =
        per_stream_ser.iter().map(|&ser| empiric_snr(ser, &tables.tx_c).ok()).collect();
    let empiric_joint_db = empiric_snr(joint_ser, &tables.tx_c).ok();
    let excluded =
        empiric_per_stream_db.iter().any(Option::is_none) || empiric_joint_db.is_none();

    Ok(TrialRecord {
        channel_index,
        h_phy,
        per_stream_errors,
        per_stream_ser,
        joint_errors,
        joint_ser,
        empiric_per_stream_db,
        empiric_joint_db,
        estimates,
        excluded,
        ml_searches_data: cfg.vectors_per_channel as u64,
        ml_searches_snr,
    })
}

/// Sample count, mean and sample standard deviation of one error
/// population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsSummary {
    pub samples: usize,
    pub mean_error_db: f64,
    pub std_error_db: f64,
}

impl StatsSummary {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self { samples: n, mean_error_db: mean, std_error_db: var.sqrt() }
    }
}

/// Fixed-width histogram over `[-range_db, range_db)`; samples beyond the
/// range land in the edge bins so counts always total the sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_db: f64,
    pub range_db: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(bin_db: f64, range_db: f64) -> Self {
        let bins = ((2.0 * range_db / bin_db).round() as usize).max(1);
        Self { bin_db, range_db, counts: vec![0; bins] }
    }

    pub fn add(&mut self, x: f64) {
        let idx = ((x + self.range_db) / self.bin_db).floor();
        let idx = (idx.max(0.0) as usize).min(self.counts.len() - 1);
        self.counts[idx] += 1;
    }

    pub fn edges(&self, k: usize) -> (f64, f64) {
        let low = -self.range_db + k as f64 * self.bin_db;
        (low, low + self.bin_db)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Per-method error statistics.
#[derive(Debug, Clone)]
pub struct MethodStats {
    pub method: Method,
    /// One summary per stream for per-stream methods, empty for joint-only.
    pub per_stream: Vec<StatsSummary>,
    /// Vertical estimate against the joint-SER-implied SNR.
    pub vertical: StatsSummary,
    /// Mean-compensated histogram of the per-stream errors pooled across
    /// streams (vertical errors for joint-only methods).
    pub histogram: Histogram,
}

/// Aggregated estimation-error statistics over all included channels.
#[derive(Debug, Clone)]
pub struct ErrorStats {
    pub methods: Vec<MethodStats>,
    pub included: usize,
    pub excluded: usize,
}

impl ErrorStats {
    pub fn method(&self, m: Method) -> Option<&MethodStats> {
        self.methods.iter().find(|s| s.method == m)
    }
}

/// Estimation error samples (estimate - empiric, dB) with mean, sample
/// standard deviation and mean-compensated histograms, per method.
pub fn aggregate(cfg: &SimConfig, records: &[TrialRecord]) -> Result<ErrorStats> {
    let included: Vec<&TrialRecord> = records.iter().filter(|r| !r.excluded).collect();
    let excluded = records.len() - included.len();
    if included.len() < 2 {
        return Err(Error::InsufficientData { got: included.len() });
    }

    let mut methods = Vec::with_capacity(cfg.methods.len());
    for (mi, &method) in cfg.methods.iter().enumerate() {
        let mut per_stream = Vec::new();
        let mut pooled: Vec<f64> = Vec::new();
        if method.is_per_stream() {
            for i in 0..cfg.m_t {
                let samples: Vec<f64> = included
                    .iter()
                    .map(|r| {
                        let est = r.estimates[mi].per_stream_db.as_ref().expect("per-stream method")[i];
                        let emp = r.empiric_per_stream_db[i].expect("included record");
                        est - emp
                    })
                    .collect();
                pooled.extend_from_slice(&samples);
                per_stream.push(StatsSummary::from_samples(&samples));
            }
        }

        let vertical_samples: Vec<f64> = included
            .iter()
            .map(|r| r.estimates[mi].vertical_db - r.empiric_joint_db.expect("included record"))
            .collect();
        let vertical = StatsSummary::from_samples(&vertical_samples);

        let hist_samples = if method.is_per_stream() { &pooled } else { &vertical_samples };
        let mean = hist_samples.iter().sum::<f64>() / hist_samples.len() as f64;
        let mut histogram = Histogram::new(cfg.hist_bin_db, cfg.hist_range_db);
        for x in hist_samples {
            histogram.add(x - mean);
        }

        methods.push(MethodStats { method, per_stream, vertical, histogram });
    }

    Ok(ErrorStats { methods, included: included.len(), excluded })
}

/// Full protocol: all channels in parallel (deterministic by substream),
/// then aggregation.
pub fn run_experiment(cfg: &SimConfig) -> Result<(Vec<TrialRecord>, ErrorStats)> {
    cfg.validate()?;
    let tables = SharedTables::build(cfg)?;
    let records = (0..cfg.num_channels)
        .into_par_iter()
        .map(|idx| {
            let mut rng = substream(cfg.seed, idx);
            run_trial(cfg, idx, &mut rng, &tables)
        })
        .collect::<Result<Vec<_>>>()?;
    let stats = aggregate(cfg, &records)?;
    Ok((records, stats))
}

/// Decoder-invocation accounting for one finished run, plus the fixed-size
/// allocation model used to quote a relative overhead.
#[derive(Debug, Clone)]
pub struct OverheadReport {
    /// Data-detection searches actually performed.
    pub data_searches: u64,
    /// Candidates per data search (`q^{M_T}`).
    pub data_search_set_size: usize,
    /// Estimation searches actually performed (max-log reuse path).
    pub snr_searches: u64,
    /// Searches per SNR evaluation: one per stream.
    pub snr_searches_per_estimate: usize,
    /// Abbreviated-set sizes searched per stream.
    pub snr_search_set_sizes: Vec<usize>,
    pub allocation: AllocationOverhead,
}

/// Overhead of one SNR calculation relative to decoding a fixed symbol
/// allocation, counting two half-alphabet searches per transmitted bit for
/// the data path and one abbreviated-set search per stream for the SNR
/// path.
#[derive(Debug, Clone, Copy)]
pub struct AllocationOverhead {
    pub allocation_symbols: usize,
    pub bits: usize,
    pub data_searches: usize,
    pub data_search_set_size: usize,
    pub snr_searches: usize,
    pub overhead_ratio: f64,
}

pub fn overhead_for_allocation(
    kind: ModulationKind,
    m_t: usize,
    allocation_symbols: usize,
) -> AllocationOverhead {
    let bits = allocation_symbols * m_t * kind.bits_per_symbol();
    let data_searches = 2 * bits;
    let q = kind.side() * kind.side();
    AllocationOverhead {
        allocation_symbols,
        bits,
        data_searches,
        data_search_set_size: q.pow(m_t as u32) / 2,
        snr_searches: m_t,
        overhead_ratio: m_t as f64 / data_searches as f64,
    }
}

pub fn overhead_report(cfg: &SimConfig, records: &[TrialRecord]) -> Result<OverheadReport> {
    let q = cfg.modulation.side() * cfg.modulation.side();
    let snr_search_set_sizes = if cfg.methods.contains(&Method::MaxLog) {
        let fam = ErrorSetFamily::cached(cfg.estimation_modulation(), cfg.m_t)?;
        (0..cfg.m_t).map(|i| fam.abbreviated_set(i).len()).collect()
    } else {
        Vec::new()
    };
    Ok(OverheadReport {
        data_searches: records.iter().map(|r| r.ml_searches_data).sum(),
        data_search_set_size: q.pow(cfg.m_t as u32),
        snr_searches: records.iter().map(|r| r.ml_searches_snr).sum(),
        snr_searches_per_estimate: cfg.m_t,
        snr_search_set_sizes,
        allocation: overhead_for_allocation(cfg.modulation, cfg.m_t, 10),
    })
}
