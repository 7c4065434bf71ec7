//! Exhaustive maximum-likelihood search over arbitrary candidate sets and
//! zero-forcing detection with its closed-form post-processing SNR.
//!
//! `ml_search` is the reuse hook for the SNR estimators: searching the
//! per-stream error sets with `y = 0` yields the minimum decision metric
//! without any dedicated machinery.

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::modulation::Constellation;
use crate::numerics::{pseudo_inverse, ComplexMat, ComplexVec};

/// Hard cap on exhaustive enumerations.
pub const MAX_SEARCH_SPACE: usize = 1 << 16;

/// Outcome of a minimum-distance search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchResult {
    /// Index of the winning candidate; ties resolve to the lowest index.
    pub best_index: usize,
    /// Minimum of `||y - H c||^2` over the candidate set.
    pub best_cost: f64,
}

#[inline]
fn distance_cost(y: &[Complex64], hc: &[Complex64]) -> f64 {
    let mut acc = 0.0;
    for (a, b) in y.iter().zip(hc.iter()) {
        acc += (a - b).norm_sqr();
    }
    acc
}

/// Exhaustive search for `argmin_c ||y - H c||^2` over `candidates`.
pub fn ml_search(
    y: &[Complex64],
    h: &ComplexMat,
    candidates: &[ComplexVec],
) -> Result<SearchResult> {
    if candidates.is_empty() {
        return Err(Error::EmptySearchSet);
    }
    if y.len() != h.rows() {
        return Err(Error::DimensionMismatch { expected: h.rows(), got: y.len() });
    }
    let mut best_index = 0usize;
    let mut best_cost = f64::INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        if c.len() != h.cols() {
            return Err(Error::DimensionMismatch { expected: h.cols(), got: c.len() });
        }
        let hc = h.mul_vec(c);
        let cost = distance_cost(y, &hc);
        if cost < best_cost {
            best_cost = cost;
            best_index = i;
        }
    }
    Ok(SearchResult { best_index, best_cost })
}

/// All `q^m_t` transmit vectors in odometer order: stream 0 cycles fastest,
/// points in row-major grid order. Index arithmetic is the inverse of
/// [`index_to_stream_indices`].
pub fn enumerate_candidates(c: &Constellation, m_t: usize) -> Result<Vec<ComplexVec>> {
    let q = c.q_size();
    let total = q.checked_pow(m_t as u32).filter(|&t| t <= MAX_SEARCH_SPACE).ok_or(
        Error::SearchSpaceTooLarge {
            candidates: q.checked_pow(m_t as u32).unwrap_or(usize::MAX),
            limit: MAX_SEARCH_SPACE,
        },
    )?;
    let mut out = Vec::with_capacity(total);
    for idx in 0..total {
        out.push(index_to_symbols(c, m_t, idx));
    }
    Ok(out)
}

/// Per-stream point indices of enumeration index `idx`, stream 0 fastest.
pub fn index_to_stream_indices(q: usize, m_t: usize, idx: usize) -> Vec<usize> {
    let mut tmp = idx;
    (0..m_t)
        .map(|_| {
            let k = tmp % q;
            tmp /= q;
            k
        })
        .collect()
}

fn index_to_symbols(c: &Constellation, m_t: usize, idx: usize) -> ComplexVec {
    index_to_stream_indices(c.q_size(), m_t, idx)
        .into_iter()
        .map(|k| c.points()[k])
        .collect()
}

/// Exhaustive ML decoding over the full `q^m_t` alphabet.
pub fn ml_decode(
    y: &[Complex64],
    ch: &ChannelRealization,
    c: &Constellation,
) -> Result<ComplexVec> {
    let candidates = enumerate_candidates(c, ch.num_streams())?;
    let res = ml_search(y, ch.h_eff(), &candidates)?;
    Ok(candidates[res.best_index].clone())
}

/// ML search with the per-candidate products `H c` precomputed once, for
/// repeated decoding against a fixed channel. Produces bit-identical costs
/// to [`ml_search`] on the same inputs.
pub struct MlDecoder {
    hc: Vec<ComplexVec>,
}

impl MlDecoder {
    pub fn new(h: &ComplexMat, candidates: &[ComplexVec]) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::EmptySearchSet);
        }
        let hc = candidates.iter().map(|c| h.mul_vec(c)).collect();
        Ok(Self { hc })
    }

    pub fn search(&self, y: &[Complex64]) -> SearchResult {
        let mut best_index = 0usize;
        let mut best_cost = f64::INFINITY;
        for (i, hc) in self.hc.iter().enumerate() {
            let cost = distance_cost(y, hc);
            if cost < best_cost {
                best_cost = cost;
                best_index = i;
            }
        }
        SearchResult { best_index, best_cost }
    }
}

/// Unsliced ZF output `s_hat = G y = s + rho G v`.
pub fn zf_equalize(y: &[Complex64], ch: &ChannelRealization) -> Result<ComplexVec> {
    if y.len() != ch.num_rx() {
        return Err(Error::DimensionMismatch { expected: ch.num_rx(), got: y.len() });
    }
    let g = pseudo_inverse(ch.h_eff())?;
    Ok(g.mul_vec(y))
}

/// ZF detection: equalize, then slice each stream to the nearest
/// constellation point.
pub fn zf_decode(
    y: &[Complex64],
    ch: &ChannelRealization,
    c: &Constellation,
) -> Result<ComplexVec> {
    let s_hat = zf_equalize(y, ch)?;
    Ok(s_hat.iter().map(|&z| c.points()[c.nearest_index(z)]).collect())
}

/// Closed-form per-stream post-processing SNR of the ZF detector:
/// `1 / (rho^2 sum_k |G_{i,k}|^2)`.
pub fn zf_ppsnr(ch: &ChannelRealization) -> Result<Vec<f64>> {
    let g = pseudo_inverse(ch.h_eff())?;
    let r2 = ch.rho() * ch.rho();
    Ok((0..g.rows())
        .map(|i| {
            let row_power: f64 = g.row(i).iter().map(|z| z.norm_sqr()).sum();
            1.0 / (r2 * row_power)
        })
        .collect())
}
