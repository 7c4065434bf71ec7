//! Command-line front-end support: config file handling, flag merging, and
//! the CSV/JSON output writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::errorsets::ErrorSetFamily;
use crate::estimators::{dmin_exact, evaluate, ph_error_bound, Method};
use crate::harness::{
    ErrorStats, SimConfig, TrialRecord, DESK_CHANNELS, DESK_VECTORS,
};
use crate::modulation::{Constellation, ModulationKind};
use crate::numerics::ComplexMat;

/// Flag-level overrides applied on top of a config file (or the defaults).
#[derive(Debug, Default, Clone)]
pub struct SimOverrides {
    pub modulation: Option<ModulationKind>,
    pub channels: Option<usize>,
    pub vectors: Option<usize>,
    pub m_t: Option<usize>,
    pub m_r: Option<usize>,
    pub rho: Option<f64>,
    pub snr_db: Option<f64>,
    pub methods: Option<Vec<Method>>,
    pub qpsk_sets: bool,
    pub seed: Option<u64>,
    pub desk: bool,
    pub hist_bin_db: Option<f64>,
    pub hist_range_db: Option<f64>,
}

/// Merges defaults, an optional config file, the `--desk` preset and
/// explicit flags (highest precedence), then validates.
pub fn build_sim_config(base: Option<SimConfig>, o: &SimOverrides) -> Result<SimConfig> {
    let mut cfg = base.unwrap_or_default();
    if o.desk {
        cfg.num_channels = DESK_CHANNELS;
        cfg.vectors_per_channel = DESK_VECTORS;
    }
    if let Some(v) = o.modulation {
        cfg.modulation = v;
    }
    if let Some(v) = o.channels {
        cfg.num_channels = v;
    }
    if let Some(v) = o.vectors {
        cfg.vectors_per_channel = v;
    }
    if let Some(v) = o.m_t {
        cfg.m_t = v;
    }
    if let Some(v) = o.m_r {
        cfg.m_r = v;
    }
    if o.rho.is_some() && o.snr_db.is_some() {
        return Err(Error::InvalidConfig("--rho conflicts with --snr-db".into()));
    }
    if let Some(r) = o.rho {
        cfg.noise = crate::harness::NoiseSpec::Rho(r);
    }
    if let Some(db) = o.snr_db {
        cfg.noise = crate::harness::NoiseSpec::AvgAntennaSnrDb(db);
    }
    if let Some(m) = &o.methods {
        cfg.methods = m.clone();
    }
    if o.qpsk_sets {
        cfg.qpsk_sets_for_higher_qam = true;
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(v) = o.hist_bin_db {
        cfg.hist_bin_db = v;
    }
    if let Some(v) = o.hist_range_db {
        cfg.hist_range_db = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses a comma-separated method list (`capacity,union,maxlog`).
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let m = Method::parse(name).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "unknown method '{name}' in --methods (expected one of capacity, union, \
                 fullsum, fullsum_bounded, maxlog, zf)"
            ))
        })?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidConfig("--methods produced an empty list".into()));
    }
    Ok(out)
}

pub fn load_config_file(path: &Path) -> Result<SimConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Parse { path: path.display().to_string(), message: e.to_string() })
}

/// Run manifest: the exact configuration plus provenance. Parsing the
/// emitted manifest reproduces the `SimConfig` bit for bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: SimConfig,
    pub seed: u64,
    pub version: String,
    pub timestamp_unix: u64,
}

/// Paths of everything `write_outputs` produced.
#[derive(Debug, Clone)]
pub struct OutputBundle {
    pub records_path: PathBuf,
    pub stats_path: PathBuf,
    pub hist_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Nine significant digits, scientific notation; non-finite values print as
/// `nan` so every row stays parseable.
pub fn fmt_sig9(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.8e}")
    } else {
        "nan".to_string()
    }
}

fn opt_sig9(x: Option<f64>) -> String {
    match x {
        Some(v) => fmt_sig9(v),
        None => "nan".to_string(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)
        .map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}

/// Emits `records.csv`, `stats.csv`, `hist.csv` and `manifest.json` into
/// `out_dir`. Row order is deterministic: channel index, then stream
/// (joint rows labelled `vert` last), then method in configuration order.
pub fn write_outputs(
    out_dir: &Path,
    cfg: &SimConfig,
    records: &[TrialRecord],
    stats: &ErrorStats,
) -> Result<OutputBundle> {
    fs::create_dir_all(out_dir)
        .map_err(|e| Error::Io { path: out_dir.display().to_string(), source: e })?;

    // records.csv
    let mut rec = String::from("channel,stream,method,empiric_snr_db,estimate_db,error_db,excluded\n");
    for r in records {
        let excl = u8::from(r.excluded);
        for stream in 0..cfg.m_t {
            for (mi, &method) in cfg.methods.iter().enumerate() {
                if !method.is_per_stream() {
                    continue;
                }
                let est = r.estimates[mi].per_stream_db.as_ref().expect("per-stream method")[stream];
                let emp = r.empiric_per_stream_db[stream];
                let err = emp.map(|e| est - e);
                rec.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.channel_index,
                    stream,
                    method.name(),
                    opt_sig9(emp),
                    fmt_sig9(est),
                    opt_sig9(err),
                    excl
                ));
            }
        }
        for (mi, &method) in cfg.methods.iter().enumerate() {
            if method.is_per_stream() {
                continue;
            }
            let est = r.estimates[mi].vertical_db;
            let emp = r.empiric_joint_db;
            let err = emp.map(|e| est - e);
            rec.push_str(&format!(
                "{},vert,{},{},{},{},{}\n",
                r.channel_index,
                method.name(),
                opt_sig9(emp),
                fmt_sig9(est),
                opt_sig9(err),
                excl
            ));
        }
    }

    // stats.csv
    let mut st = String::from("method,stream,samples,mean_error_db,std_error_db\n");
    for ms in &stats.methods {
        for (i, s) in ms.per_stream.iter().enumerate() {
            st.push_str(&format!(
                "{},{},{},{},{}\n",
                ms.method.name(),
                i,
                s.samples,
                fmt_sig9(s.mean_error_db),
                fmt_sig9(s.std_error_db)
            ));
        }
        st.push_str(&format!(
            "{},vert,{},{},{}\n",
            ms.method.name(),
            ms.vertical.samples,
            fmt_sig9(ms.vertical.mean_error_db),
            fmt_sig9(ms.vertical.std_error_db)
        ));
    }

    // hist.csv
    let mut hi = String::from("method,bin_low_db,bin_high_db,count\n");
    for ms in &stats.methods {
        for (k, &count) in ms.histogram.counts.iter().enumerate() {
            let (lo, hiedge) = ms.histogram.edges(k);
            hi.push_str(&format!(
                "{},{},{},{}\n",
                ms.method.name(),
                fmt_sig9(lo),
                fmt_sig9(hiedge),
                count
            ));
        }
    }

    let manifest = RunManifest {
        config: cfg.clone(),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let manifest_json = serde_json::to_string_pretty(&manifest)
        .expect("manifest serialization cannot fail");

    let bundle = OutputBundle {
        records_path: out_dir.join("records.csv"),
        stats_path: out_dir.join("stats.csv"),
        hist_path: out_dir.join("hist.csv"),
        manifest_path: out_dir.join("manifest.json"),
    };
    write_file(&bundle.records_path, &rec)?;
    write_file(&bundle.stats_path, &st)?;
    write_file(&bundle.hist_path, &hi)?;
    write_file(&bundle.manifest_path, &manifest_json)?;
    Ok(bundle)
}

/// Reads a channel matrix file: one row per line, complex entries `a+bi`
/// separated by whitespace.
pub fn parse_matrix_file(path: &Path) -> Result<ComplexMat> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    parse_matrix(&text)
        .map_err(|message| Error::Parse { path: path.display().to_string(), message })
}

fn parse_matrix(text: &str) -> std::result::Result<ComplexMat, String> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for tok in line.split_whitespace() {
            let z = Complex64::from_str(tok)
                .map_err(|_| format!("line {}: bad complex entry '{tok}'", ln + 1))?;
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(format!("line {}: non-finite entry '{tok}'", ln + 1));
            }
            row.push(z);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(format!("line {}: expected {} entries, got {}", ln + 1, first.len(), row.len()));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err("matrix file contains no entries".into());
    }
    let cols = rows[0].len();
    let data: Vec<Complex64> = rows.concat();
    Ok(ComplexMat::new(data.len() / cols, cols, data))
}

/// Receiver-side report: every estimate for one channel matrix, plus the
/// minimum-distance bounds. `h_phy` is the raw channel; the estimators see
/// the effective channel including the transmit power normalization.
pub fn estimate_report(h_phy: ComplexMat, rho: f64, kind: ModulationKind, qpsk_sets: bool) -> Result<String> {
    let m_t = h_phy.cols();
    let m_r = h_phy.rows();
    if m_r < m_t {
        return Err(Error::InvalidConfig(format!("need m_r >= m_t, got {m_r} x {m_t}")));
    }
    let ch = ChannelRealization::new(h_phy, rho)?;
    let est_kind = if qpsk_sets { ModulationKind::Qpsk } else { kind };
    let est_c = Constellation::new(est_kind);
    let family = ErrorSetFamily::cached(est_kind, m_t)?;

    let mut out = String::new();
    out.push_str(&format!(
        "channel: {m_r} x {m_t}, modulation {} (estimation sets: {}), rho = {}\n",
        kind,
        est_kind,
        fmt_sig9(rho)
    ));
    out.push_str("method,per_stream_db,vertical_db\n");
    for method in Method::ALL {
        let est = evaluate(method, &ch, &est_c, Some(&family))?;
        let per = match &est.per_stream_db {
            Some(v) => v.iter().map(|x| fmt_sig9(*x)).collect::<Vec<_>>().join(" "),
            None => "-".to_string(),
        };
        out.push_str(&format!("{},{},{}\n", method.name(), per, fmt_sig9(est.vertical_db)));
    }

    let ph = ph_error_bound(&ch, &est_c)?;
    let d2 = dmin_exact(&ch, &est_c)?;
    out.push_str(&format!(
        "ph: perr_upper={} d2_min={} d2_lower={} d2_upper={}\n",
        fmt_sig9(ph.perr_upper),
        fmt_sig9(d2),
        fmt_sig9(ph.lower_d2),
        fmt_sig9(ph.upper_d2)
    ));
    Ok(out)
}

/// Text dump of the error-set family for `sets` fixtures.
pub fn sets_report(kind: ModulationKind, m_t: usize) -> Result<String> {
    let fam = ErrorSetFamily::cached(kind, m_t)?;
    let mut buf = Vec::new();
    fam.dump(&mut buf).map_err(|e| Error::Io { path: "<sets dump>".into(), source: e })?;
    Ok(String::from_utf8(buf).expect("dump is ASCII"))
}

/// One human-readable block describing decoder-invocation overhead.
pub fn format_overhead(report: &crate::harness::OverheadReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "ml searches: data {} (set size {}), snr {} (sets {:?}, {} per estimate)",
        report.data_searches,
        report.data_search_set_size,
        report.snr_searches,
        report.snr_search_set_sizes,
        report.snr_searches_per_estimate
    );
    let a = &report.allocation;
    let _ = writeln!(
        s,
        "{}-symbol allocation: {} bit searches vs {} snr searches -> overhead {}/{} = {:.3}%",
        a.allocation_symbols,
        a.data_searches,
        a.snr_searches,
        a.snr_searches,
        a.data_searches,
        100.0 * a.overhead_ratio
    );
    s
}
