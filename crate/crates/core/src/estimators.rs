//! The SNR estimator family: capacity-based, minimum-distance error bounds,
//! and the per-stream union-bound / full-sum / max-log estimators with
//! vertical (joint) averaging.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::decoders::{ml_search, zf_ppsnr, MAX_SEARCH_SPACE};
use crate::error::{Error, Result};
use crate::errorsets::ErrorSetFamily;
use crate::modulation::Constellation;
use crate::numerics::{log_det_capacity, q_function, singular_values};

/// Probability floor applied before logarithms; keeps high-SNR channels
/// from collapsing to p = 0 and an infinite SNR.
pub const PERR_FLOOR: f64 = 1e-300;

/// Ceiling for the max-log conversion: the largest f64 below 1. The
/// max-log value is a genuine probability (at most 1), so only the exact
/// p = 1 corner needs guarding to keep the dB value finite.
const PERR_CEIL: f64 = 1.0 - 0.5 * f64::EPSILON;

/// Saturation level for the summed estimators: the worst-case symbol error
/// rate `(q-1)/q` of a uniform guess, which is also the large-noise limit
/// of the true SER. The union-bound and full-sum values are term sums that
/// keep growing past 1 on deeply faded channels; past the chance level they
/// carry no SNR information, so the conversion saturates there (and the
/// implied SNR converges to the one the link actually degrades to).
pub fn worst_case_ser(c: &Constellation) -> f64 {
    (c.q_size() as f64 - 1.0) / c.q_size() as f64
}

/// Estimation methods. Names in configs and on the command line are
/// `capacity`, `union`, `fullsum`, `fullsum_bounded`, `maxlog`, `zf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "capacity")]
    Capacity,
    #[serde(rename = "union")]
    UnionBound,
    #[serde(rename = "fullsum")]
    FullSum,
    #[serde(rename = "fullsum_bounded")]
    FullSumBounded,
    #[serde(rename = "maxlog")]
    MaxLog,
    #[serde(rename = "zf")]
    Zf,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Capacity,
        Method::UnionBound,
        Method::FullSum,
        Method::FullSumBounded,
        Method::MaxLog,
        Method::Zf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Capacity => "capacity",
            Method::UnionBound => "union",
            Method::FullSum => "fullsum",
            Method::FullSumBounded => "fullsum_bounded",
            Method::MaxLog => "maxlog",
            Method::Zf => "zf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Per-stream methods produce one SNR per stream; the capacity metric
    /// is joint-only.
    pub fn is_per_stream(self) -> bool {
        !matches!(self, Method::Capacity)
    }

    /// True for the methods whose probability comes from the error-set
    /// machinery (and therefore participate in the decoder-reuse path).
    pub fn uses_error_sets(self) -> bool {
        matches!(self, Method::FullSum | Method::MaxLog)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One SNR estimate in dB, per stream where the method supports it, plus
/// the vertical (joint) value.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrEstimate {
    pub method: Method,
    /// One value per stream; `None` for joint-only methods.
    pub per_stream_db: Option<Vec<f64>>,
    /// Arithmetic mean of the per-stream dB values, or the joint value for
    /// joint-only methods.
    pub vertical_db: f64,
}

fn db_from_linear(lin: f64) -> f64 {
    10.0 * lin.clamp(1e-300, 1e300).log10()
}

fn db_from_perr(p: f64, ceiling: f64, c: &Constellation) -> f64 {
    let p = p.clamp(PERR_FLOOR, ceiling);
    let lin = c.snr_from_perr(p).expect("probability clamped into (0, 1)");
    db_from_linear(lin)
}

/// Capacity-implied joint SNR `e^C - 1` with
/// `C = (1/M) ln det(I + H H^H / rho^2)` evaluated on the effective channel
/// (the `1/sqrt(M_T)` power normalization included), so the SISO and
/// receive-diversity cases coincide with the classical antenna / combiner
/// SNR.
pub fn capacity_snr(ch: &ChannelRealization) -> f64 {
    let c = log_det_capacity(ch.h_eff(), ch.rho());
    c.exp() - 1.0
}

/// Joint-only wrapper around [`capacity_snr`].
pub fn capacity_snr_estimate(ch: &ChannelRealization) -> SnrEstimate {
    SnrEstimate {
        method: Method::Capacity,
        per_stream_db: None,
        vertical_db: db_from_linear(capacity_snr(ch)),
    }
}

/// ZF post-processing SNR per stream, in dB.
pub fn zf_snr_estimate(ch: &ChannelRealization) -> Result<SnrEstimate> {
    let per: Vec<f64> = zf_ppsnr(ch)?.into_iter().map(db_from_linear).collect();
    let vertical = per.iter().sum::<f64>() / per.len() as f64;
    Ok(SnrEstimate { method: Method::Zf, per_stream_db: Some(per), vertical_db: vertical })
}

/// Exact receive-side minimum distance
/// `d2_min(H) = min ||h_eff (s - c)||^2` over distinct symbol-vector pairs,
/// computed by enumerating nonzero difference vectors.
pub fn dmin_exact(ch: &ChannelRealization, c: &Constellation) -> Result<f64> {
    let m_t = ch.num_streams();
    let diffs = crate::errorsets::coordinate_differences(c);
    let total = diffs
        .len()
        .checked_pow(m_t as u32)
        .filter(|&t| t <= MAX_SEARCH_SPACE)
        .ok_or(Error::SearchSpaceTooLarge { candidates: usize::MAX, limit: MAX_SEARCH_SPACE })?;

    let d_min = c.d_min();
    let h = ch.h_eff();
    let mut best = f64::INFINITY;
    let mut e = vec![num_complex::Complex64::ZERO; m_t];
    for idx in 0..total {
        let mut tmp = idx;
        let mut all_zero = true;
        for slot in e.iter_mut().take(m_t) {
            let d = diffs[tmp % diffs.len()];
            tmp /= diffs.len();
            all_zero &= d.is_zero();
            *slot = d.to_complex(d_min);
        }
        if all_zero {
            continue;
        }
        let cost: f64 = h.mul_vec(&e).iter().map(|z| z.norm_sqr()).sum();
        if cost < best {
            best = cost;
        }
    }
    Ok(best)
}

/// Minimum-distance error bound and the singular-value sandwich on
/// `d2_min`.
#[derive(Debug, Clone, Copy)]
pub struct PhBound {
    /// `Q(sqrt(d2_min / rho^2))` with the exact minimum distance.
    pub perr_upper: f64,
    /// `sigma_min^2(h_phy) d_minQAM^2 / M_T`.
    pub lower_d2: f64,
    /// `sigma_max^2(h_phy) d_minQAM^2 / M_T`.
    pub upper_d2: f64,
}

/// Error-probability bound from the exact minimum distance, plus the
/// singular-value bounds that avoid the exhaustive search. The singular
/// values are taken on the raw channel with the explicit `d_minQAM^2 / M_T`
/// factor, which is equivalent to evaluating the effective channel.
pub fn ph_error_bound(ch: &ChannelRealization, c: &Constellation) -> Result<PhBound> {
    let d2 = dmin_exact(ch, c)?;
    let (s_min, s_max) = singular_values(ch.h_phy())?;
    let factor = c.d_min() * c.d_min() / ch.num_streams() as f64;
    Ok(PhBound {
        perr_upper: q_function((d2 / (ch.rho() * ch.rho())).sqrt()),
        lower_d2: s_min * s_min * factor,
        upper_d2: s_max * s_max * factor,
    })
}

/// Union bound on the stream-`i` error probability, averaged over all
/// transmitted vectors:
/// `(1/q^{M_T}) sum_s sum_{s~ : s~_i != s_i} Q(||H(s~ - s)|| / (sqrt(2) rho))`,
/// clamped into (0, 1].
pub fn union_bound_perr(ch: &ChannelRealization, c: &Constellation, i: usize) -> Result<f64> {
    pairwise_sum(ch, c, i, PairwiseTerm::QFunction)
}

/// The prefactored exponential bound
/// `(1/2)(1/q^{M_T}) sum_s sum_{e in B_i(s)} exp(-||He||^2 / (4 rho^2))`,
/// clamped into (0, 1].
pub fn fullsum_bounded_perr(ch: &ChannelRealization, c: &Constellation, i: usize) -> Result<f64> {
    pairwise_sum(ch, c, i, PairwiseTerm::HalfExp)
}

enum PairwiseTerm {
    QFunction,
    HalfExp,
}

fn pairwise_sum(
    ch: &ChannelRealization,
    c: &Constellation,
    i: usize,
    term: PairwiseTerm,
) -> Result<f64> {
    let m_t = ch.num_streams();
    assert!(i < m_t);
    let q = c.q_size();
    let total = q
        .checked_pow(m_t as u32)
        .filter(|&t| t <= MAX_SEARCH_SPACE)
        .ok_or(Error::SearchSpaceTooLarge { candidates: usize::MAX, limit: MAX_SEARCH_SPACE })?;

    let h = ch.h_eff();
    let m_r = ch.num_rx();
    let rho = ch.rho();
    let inv_sqrt2_rho = 1.0 / (std::f64::consts::SQRT_2 * rho);
    let inv_4r2 = 1.0 / (4.0 * rho * rho);

    let mut acc = 0.0f64;
    let mut s_ind = vec![0usize; m_t];
    let mut a_ind = vec![0usize; m_t];
    let mut diff = vec![num_complex::Complex64::ZERO; m_t];
    for s_idx in 0..total {
        let mut tmp = s_idx;
        for k in 0..m_t {
            s_ind[k] = tmp % q;
            tmp /= q;
        }
        for alt_idx in 0..total {
            let mut tmp = alt_idx;
            for k in 0..m_t {
                a_ind[k] = tmp % q;
                tmp /= q;
            }
            if a_ind[i] == s_ind[i] {
                continue;
            }
            for k in 0..m_t {
                diff[k] = c.points()[a_ind[k]] - c.points()[s_ind[k]];
            }
            let mut cost = 0.0f64;
            for r in 0..m_r {
                let mut z = num_complex::Complex64::ZERO;
                for k in 0..m_t {
                    z += h.get(r, k) * diff[k];
                }
                cost += z.norm_sqr();
            }
            acc += match term {
                PairwiseTerm::QFunction => q_function(cost.sqrt() * inv_sqrt2_rho),
                PairwiseTerm::HalfExp => 0.5 * (-cost * inv_4r2).exp(),
            };
        }
    }
    Ok((acc / total as f64).clamp(PERR_FLOOR, 1.0))
}

/// Full-sum approximation over the unified set:
/// `sum_{e in B_i} exp(-||He||^2 / (4 rho^2))`, no prefactor, clamped into
/// (0, 1].
pub fn fullsum_perr(family: &ErrorSetFamily, ch: &ChannelRealization, i: usize) -> f64 {
    let h = ch.h_eff();
    let inv_4r2 = 1.0 / (4.0 * ch.rho() * ch.rho());
    let mut acc = 0.0f64;
    for e in family.full_candidates(i) {
        let cost: f64 = h.mul_vec(e).iter().map(|z| z.norm_sqr()).sum();
        acc += (-cost * inv_4r2).exp();
    }
    acc.clamp(PERR_FLOOR, 1.0)
}

/// Max-log approximation `exp(-min_{e in B^_i} ||He||^2 / (4 rho^2))`.
///
/// The minimum is obtained through the data decoder itself: one
/// [`ml_search`] call with `y = 0` over the abbreviated set, exactly one
/// search per stream.
pub fn maxlog_perr(family: &ErrorSetFamily, ch: &ChannelRealization, i: usize) -> f64 {
    let zero = vec![num_complex::Complex64::ZERO; ch.num_rx()];
    let res = ml_search(&zero, ch.h_eff(), family.abbreviated_candidates(i))
        .expect("abbreviated sets are nonempty and dimensioned to the channel");
    let inv_4r2 = 1.0 / (4.0 * ch.rho() * ch.rho());
    (-res.best_cost * inv_4r2).exp().clamp(PERR_FLOOR, 1.0)
}

/// Per-stream SNR estimate for the union-bound, full-sum or max-log
/// probability, converted through the constellation's exponent map and
/// averaged (in dB) into the vertical value.
///
/// `c` is the estimation constellation and must match `family`; when the
/// QPSK-based mechanism is applied to a higher-order transmission, both are
/// QPSK while the transmit side runs 16QAM/64QAM.
pub fn per_stream_snr(
    method: Method,
    ch: &ChannelRealization,
    c: &Constellation,
    family: &ErrorSetFamily,
) -> Result<SnrEstimate> {
    debug_assert_eq!(c.kind(), family.kind(), "estimation constellation must match the sets");
    debug_assert_eq!(family.m_t(), ch.num_streams());
    let m_t = ch.num_streams();
    let mut per = Vec::with_capacity(m_t);
    for i in 0..m_t {
        let (p, ceiling) = match method {
            Method::UnionBound => (union_bound_perr(ch, c, i)?, worst_case_ser(c)),
            Method::FullSum => (fullsum_perr(family, ch, i), worst_case_ser(c)),
            Method::FullSumBounded => (fullsum_bounded_perr(ch, c, i)?, worst_case_ser(c)),
            Method::MaxLog => (maxlog_perr(family, ch, i), PERR_CEIL),
            Method::Capacity | Method::Zf => {
                return Err(Error::InvalidConfig(format!(
                    "{} is not an error-probability method",
                    method.name()
                )))
            }
        };
        per.push(db_from_perr(p, ceiling, c));
    }
    let vertical = per.iter().sum::<f64>() / m_t as f64;
    Ok(SnrEstimate { method, per_stream_db: Some(per), vertical_db: vertical })
}

/// Dispatches any method to its estimate. `family` is required for the
/// error-probability methods.
pub fn evaluate(
    method: Method,
    ch: &ChannelRealization,
    c: &Constellation,
    family: Option<&ErrorSetFamily>,
) -> Result<SnrEstimate> {
    match method {
        Method::Capacity => Ok(capacity_snr_estimate(ch)),
        Method::Zf => zf_snr_estimate(ch),
        m => {
            let fam = family.ok_or_else(|| {
                Error::InvalidConfig(format!("method {} requires error sets", m.name()))
            })?;
            per_stream_snr(m, ch, c, fam)
        }
    }
}
