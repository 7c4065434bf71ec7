//! Per-stream error-vector sets for ML-decoded spatial multiplexing.
//!
//! For a square QAM alphabet every difference of two symbols is `d_min`
//! times a Gaussian integer, so error vectors are stored exactly as integer
//! pairs and set operations (deduplication, unions, intersections,
//! proportionality checks) are exact. Floating point only enters when a
//! vector is evaluated against a channel.
//!
//! Three set levels exist per stream `i`:
//! * `B_i(s)` — error vectors `s~ - s` with a stream-`i` discrepancy, for a
//!   fixed transmitted vector `s`;
//! * `B_i` — the union of `B_i(s)` over all `s` (a cartesian product of
//!   per-entry difference sets);
//! * `B^_i` — the abbreviated set: quarter-turn phase duplicates merged and
//!   scalar-dominated vectors removed, preserving `min ||H e||^2` for every
//!   channel `H`.
//!
//! For two streams the abbreviated sets split as `B^_i = {b_i} ∪ C` with
//! `b_i` the lone single-nonzero vector and `C` the common tail shared by
//! both streams; the split is validated numerically at construction time
//! and withheld when it does not hold (three or more streams).

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::rayleigh_channel;
use crate::error::{Error, Result};
use crate::modulation::{Constellation, ModulationKind};
use crate::numerics::{ComplexMat, ComplexVec};

/// Cap on the size of a generated unified set.
pub const MAX_ERROR_SET: usize = 1 << 20;

/// Gaussian integer (entry of an error vector, in units of `d_min`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GaussInt {
    pub re: i32,
    pub im: i32,
}

impl GaussInt {
    pub const ZERO: GaussInt = GaussInt { re: 0, im: 0 };

    pub fn new(re: i32, im: i32) -> Self {
        Self { re, im }
    }

    pub fn is_zero(self) -> bool {
        self.re == 0 && self.im == 0
    }

    pub fn norm_sqr(self) -> i64 {
        self.re as i64 * self.re as i64 + self.im as i64 * self.im as i64
    }

    /// Multiplication by j.
    pub fn rot90(self) -> Self {
        Self { re: -self.im, im: self.re }
    }

    fn mul(self, o: Self) -> (i64, i64) {
        let (a, b) = (self.re as i64, self.im as i64);
        let (c, d) = (o.re as i64, o.im as i64);
        (a * c - b * d, a * d + b * c)
    }

    /// Number of quarter turns that bring a nonzero value into the
    /// canonical quadrant arg in [0, pi/2), i.e. re > 0 and im >= 0.
    fn canonical_turns(self) -> u8 {
        debug_assert!(!self.is_zero());
        let mut z = self;
        for k in 0..4 {
            if z.re > 0 && z.im >= 0 {
                return k;
            }
            z = z.rot90();
        }
        unreachable!("one of four quarter turns is canonical for a nonzero value")
    }

    pub fn to_complex(self, scale: f64) -> Complex64 {
        Complex64::new(self.re as f64 * scale, self.im as f64 * scale)
    }
}

impl std::fmt::Display for GaussInt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}{}i", self.re, if self.im < 0 { "-" } else { "+" }, self.im.abs())
    }
}

/// Error vector `s~ - s` with exact integer entries in units of the
/// constellation's minimum distance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ErrorVector {
    pub entries: Vec<GaussInt>,
}

impl ErrorVector {
    pub fn new(entries: Vec<GaussInt>) -> Self {
        Self { entries }
    }

    /// Squared norm in `d_min^2` units.
    pub fn norm_sqr_int(&self) -> i64 {
        self.entries.iter().map(|e| e.norm_sqr()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    fn first_nonzero(&self) -> Option<usize> {
        self.entries.iter().position(|e| !e.is_zero())
    }

    /// Canonical representative under global phase factors {1, j, -1, -j}:
    /// rotated so the first nonzero entry has argument in [0, pi/2).
    pub fn canonicalize(&self) -> ErrorVector {
        let Some(first) = self.first_nonzero() else {
            return self.clone();
        };
        let turns = self.entries[first].canonical_turns();
        let entries = self
            .entries
            .iter()
            .map(|&e| {
                let mut z = e;
                for _ in 0..turns {
                    z = z.rot90();
                }
                z
            })
            .collect();
        ErrorVector::new(entries)
    }

    /// True when `self = alpha * smaller` for a complex scalar with
    /// |alpha| > 1. Exact: proportionality is a cross-multiplication check
    /// over Gaussian integers.
    pub fn is_dominated_by(&self, smaller: &ErrorVector) -> bool {
        debug_assert_eq!(self.entries.len(), smaller.entries.len());
        let Some(r) = smaller.first_nonzero() else {
            return false;
        };
        // |alpha| > 1 at the reference entry.
        if self.entries[r].norm_sqr() <= smaller.entries[r].norm_sqr() {
            return false;
        }
        let er = smaller.entries[r];
        let fr = self.entries[r];
        for (f, e) in self.entries.iter().zip(smaller.entries.iter()) {
            if f.mul(er) != e.mul(fr) {
                return false;
            }
        }
        true
    }

    pub fn to_complex(&self, d_min: f64) -> ComplexVec {
        self.entries.iter().map(|e| e.to_complex(d_min)).collect()
    }
}

impl std::fmt::Display for ErrorVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, e) in self.entries.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Grid coordinates of a symbol vector, or `InvalidSymbol` if an entry is
/// not on the constellation grid.
fn symbol_coords(c: &Constellation, s: &[Complex64]) -> Result<Vec<(i32, i32)>> {
    s.iter()
        .enumerate()
        .map(|(k, &z)| {
            let idx = c.nearest_index(z);
            if (z - c.points()[idx]).norm() > 1e-9 {
                return Err(Error::InvalidSymbol { index: k });
            }
            Ok(c.grid_coords(idx))
        })
        .collect()
}

/// The set `B_i(s) = { s~ - s : s~_i != s_i }` for a fixed transmitted
/// vector, in enumeration order (stream 0 fastest).
pub fn build_b_i_of_s(
    c: &Constellation,
    m_t: usize,
    i: usize,
    s: &[Complex64],
) -> Result<Vec<ErrorVector>> {
    assert!(i < m_t && s.len() == m_t);
    let coords = symbol_coords(c, s)?;
    let q = c.q_size();
    let total = q.pow(m_t as u32);
    let mut out = Vec::with_capacity(total - total / q);
    for idx in 0..total {
        let alt = crate::decoders::index_to_stream_indices(q, m_t, idx);
        let (ai, bi) = c.grid_coords(alt[i]);
        if (ai, bi) == coords[i] {
            continue;
        }
        let entries = alt
            .iter()
            .zip(coords.iter())
            .map(|(&k, &(a, b))| {
                let (a2, b2) = c.grid_coords(k);
                GaussInt::new(a2 - a, b2 - b)
            })
            .collect();
        out.push(ErrorVector::new(entries));
    }
    Ok(out)
}

/// Per-axis coordinate differences of the constellation grid, zero
/// included, in deterministic order.
pub(crate) fn coordinate_differences(c: &Constellation) -> Vec<GaussInt> {
    let l = c.kind().side() as i32;
    let mut out = Vec::new();
    for da in -(l - 1)..=(l - 1) {
        for db in -(l - 1)..=(l - 1) {
            out.push(GaussInt::new(da, db));
        }
    }
    out
}

/// The unified set `B_i`: union of `B_i(s)` over every transmitted vector.
///
/// Per entry the union is exactly the set of symbol differences (nonzero at
/// stream `i`, unrestricted elsewhere), so the set is generated directly as
/// a cartesian product without duplicates.
pub fn build_unified(c: &Constellation, m_t: usize, i: usize) -> Result<Vec<ErrorVector>> {
    assert!(i < m_t);
    let diffs = coordinate_differences(c);
    let nonzero: Vec<GaussInt> = diffs.iter().copied().filter(|d| !d.is_zero()).collect();
    let total = nonzero.len()
        * diffs
            .len()
            .checked_pow((m_t - 1) as u32)
            .ok_or(Error::SearchSpaceTooLarge { candidates: usize::MAX, limit: MAX_ERROR_SET })?;
    if total > MAX_ERROR_SET {
        return Err(Error::SearchSpaceTooLarge { candidates: total, limit: MAX_ERROR_SET });
    }

    let mut out = Vec::with_capacity(total);
    let mut current = vec![GaussInt::ZERO; m_t];
    // Odometer over all entries, stream 0 fastest; slot i draws from the
    // nonzero differences.
    let sizes: Vec<usize> =
        (0..m_t).map(|k| if k == i { nonzero.len() } else { diffs.len() }).collect();
    let mut counters = vec![0usize; m_t];
    loop {
        for k in 0..m_t {
            current[k] = if k == i { nonzero[counters[k]] } else { diffs[counters[k]] };
        }
        out.push(ErrorVector::new(current.clone()));
        let mut k = 0;
        loop {
            counters[k] += 1;
            if counters[k] < sizes[k] {
                break;
            }
            counters[k] = 0;
            k += 1;
            if k == m_t {
                return Ok(out);
            }
        }
    }
}

/// Abbreviation: canonicalize under global quarter-turn phases and
/// deduplicate, then drop every vector that is a scalar multiple
/// (|alpha| > 1) of a retained one. The minimum of `||H e||^2` over the set
/// is preserved for every `H`, since removed vectors never cost less than a
/// kept one.
pub fn abbreviate(full: &[ErrorVector]) -> Vec<ErrorVector> {
    let dedup: BTreeSet<ErrorVector> = full.iter().map(ErrorVector::canonicalize).collect();
    let mut sorted: Vec<ErrorVector> = dedup.into_iter().collect();
    sorted.sort_by_key(|e| (e.norm_sqr_int(), e.entries.clone()));

    let mut retained: Vec<ErrorVector> = Vec::new();
    'next: for cand in sorted {
        let n = cand.norm_sqr_int();
        for kept in &retained {
            if kept.norm_sqr_int() < n && cand.is_dominated_by(kept) {
                continue 'next;
            }
        }
        retained.push(cand);
    }
    retained
}

/// The `{b_i, C}` split of a family of abbreviated sets.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Per stream, the unique vector whose only nonzero entry sits at that
    /// stream.
    pub single_error: Vec<ErrorVector>,
    /// Intersection of all abbreviated sets (canonical form).
    pub common_tail: Vec<ErrorVector>,
}

/// Splits abbreviated sets into per-stream single-error vectors plus the
/// common tail, verifying on 1000 random channels that
/// `min ||H e||^2` over `{b_i} ∪ C` reproduces the minimum over the full
/// abbreviated set for every stream.
pub fn split_common(abbreviated: &[Vec<ErrorVector>], d_min: f64) -> Result<Decomposition> {
    let m_t = abbreviated.len();
    assert!(m_t >= 1);

    let mut single_error = Vec::with_capacity(m_t);
    for (i, set) in abbreviated.iter().enumerate() {
        let singles: Vec<&ErrorVector> = set
            .iter()
            .filter(|e| e.entries.iter().filter(|g| !g.is_zero()).count() == 1)
            .collect();
        let unique = match singles.as_slice() {
            [only] => (*only).clone(),
            _ => return Err(Error::DecompositionFailed),
        };
        if unique.entries[i].is_zero() {
            return Err(Error::DecompositionFailed);
        }
        single_error.push(unique);
    }

    let mut tail: BTreeSet<ErrorVector> = abbreviated[0].iter().cloned().collect();
    for set in &abbreviated[1..] {
        let other: BTreeSet<ErrorVector> = set.iter().cloned().collect();
        tail = tail.intersection(&other).cloned().collect();
    }
    let common_tail: Vec<ErrorVector> = tail.into_iter().collect();

    // Reconstruction check against random channels.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e75);
    let tail_float: Vec<ComplexVec> = common_tail.iter().map(|e| e.to_complex(d_min)).collect();
    for _ in 0..1000 {
        let h = rayleigh_channel(m_t, m_t, &mut rng);
        for (i, set) in abbreviated.iter().enumerate() {
            let full_min = set
                .iter()
                .map(|e| cost(&h, &e.to_complex(d_min)))
                .fold(f64::INFINITY, f64::min);
            let mut split_min = cost(&h, &single_error[i].to_complex(d_min));
            for e in &tail_float {
                split_min = split_min.min(cost(&h, e));
            }
            if (split_min - full_min).abs() > 1e-12 * full_min.max(split_min) {
                return Err(Error::DecompositionFailed);
            }
        }
    }

    Ok(Decomposition { single_error, common_tail })
}

fn cost(h: &ComplexMat, e: &[Complex64]) -> f64 {
    h.mul_vec(e).iter().map(|z| z.norm_sqr()).sum()
}

/// Immutable error-set family for one (constellation, stream count) pair.
#[derive(Debug)]
pub struct ErrorSetFamily {
    kind: ModulationKind,
    m_t: usize,
    d_min: f64,
    full_sets: Vec<Vec<ErrorVector>>,
    abbreviated_sets: Vec<Vec<ErrorVector>>,
    decomposition: Option<Decomposition>,
    full_float: Vec<Vec<ComplexVec>>,
    abbreviated_float: Vec<Vec<ComplexVec>>,
}

impl ErrorSetFamily {
    pub fn new(kind: ModulationKind, m_t: usize) -> Result<Self> {
        assert!(m_t >= 1);
        let c = Constellation::new(kind);
        let d_min = c.d_min();
        let mut full_sets = Vec::with_capacity(m_t);
        let mut abbreviated_sets = Vec::with_capacity(m_t);
        for i in 0..m_t {
            let full = build_unified(&c, m_t, i)?;
            let abbr = abbreviate(&full);
            full_sets.push(full);
            abbreviated_sets.push(abbr);
        }
        let decomposition = match split_common(&abbreviated_sets, d_min) {
            Ok(d) => Some(d),
            Err(Error::DecompositionFailed) => None,
            Err(e) => return Err(e),
        };
        let to_float = |sets: &Vec<Vec<ErrorVector>>| {
            sets.iter()
                .map(|set| set.iter().map(|e| e.to_complex(d_min)).collect())
                .collect()
        };
        let full_float = to_float(&full_sets);
        let abbreviated_float = to_float(&abbreviated_sets);
        Ok(Self {
            kind,
            m_t,
            d_min,
            full_sets,
            abbreviated_sets,
            decomposition,
            full_float,
            abbreviated_float,
        })
    }

    /// Process-wide cache; families are built once and shared.
    pub fn cached(kind: ModulationKind, m_t: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<(ModulationKind, usize), Arc<ErrorSetFamily>>>> =
            OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("error-set cache poisoned");
        if let Some(fam) = guard.get(&(kind, m_t)) {
            return Ok(Arc::clone(fam));
        }
        let fam = Arc::new(Self::new(kind, m_t)?);
        guard.insert((kind, m_t), Arc::clone(&fam));
        Ok(fam)
    }

    pub fn kind(&self) -> ModulationKind {
        self.kind
    }

    pub fn m_t(&self) -> usize {
        self.m_t
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn full_set(&self, i: usize) -> &[ErrorVector] {
        &self.full_sets[i]
    }

    pub fn abbreviated_set(&self, i: usize) -> &[ErrorVector] {
        &self.abbreviated_sets[i]
    }

    /// `None` when the `{b_i, C}` split does not reproduce the abbreviated
    /// minimum (more than two streams); callers then work with the
    /// abbreviated sets directly.
    pub fn decomposition(&self) -> Option<&Decomposition> {
        self.decomposition.as_ref()
    }

    /// Abbreviated set as complex candidate vectors, ready for `ml_search`.
    pub fn abbreviated_candidates(&self, i: usize) -> &[ComplexVec] {
        &self.abbreviated_float[i]
    }

    pub fn full_candidates(&self, i: usize) -> &[ComplexVec] {
        &self.full_float[i]
    }

    /// Text dump of all sets, one vector per line, entries as exact `a+bi`
    /// Gaussian integers in units of `d_min`.
    pub fn dump<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# error-vector family: modulation={} m_t={}", self.kind, self.m_t)?;
        writeln!(
            w,
            "# entries are Gaussian integers in units of d_min = 2/sqrt(beta), beta={:.0}",
            4.0 / (self.d_min * self.d_min)
        )?;
        for i in 0..self.m_t {
            writeln!(w, "full stream={} count={}", i, self.full_sets[i].len())?;
            for e in &self.full_sets[i] {
                writeln!(w, "{e}")?;
            }
            writeln!(w, "abbreviated stream={} count={}", i, self.abbreviated_sets[i].len())?;
            for e in &self.abbreviated_sets[i] {
                writeln!(w, "{e}")?;
            }
        }
        if let Some(d) = &self.decomposition {
            for (i, b) in d.single_error.iter().enumerate() {
                writeln!(w, "single stream={i}")?;
                writeln!(w, "{b}")?;
            }
            writeln!(w, "common count={}", d.common_tail.len())?;
            for e in &d.common_tail {
                writeln!(w, "{e}")?;
            }
        } else {
            writeln!(w, "common unsupported")?;
        }
        Ok(())
    }
}
