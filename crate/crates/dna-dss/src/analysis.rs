//! Bad-blocks analysis of an array code with one failed container: classify
//! every subset of surviving positions as recovering or not, and derive the
//! quantities that drive the recovery-time bound.
//!
//! A subset B of `[b] x ([M] minus p)` is *bad* when observing the symbols at B
//! still leaves the p-th column ambiguous. Subsets are encoded as bitmasks:
//! position (i, j) maps to bit s*b + (i-1), where s is the rank of container j
//! among the survivors in ascending order. The full good/bad classification is
//! kept as a bitset (at most 2 MiB at the enumeration budget) and handed to the
//! simulator, whose stopping rule needs O(1) membership checks per read.

use serde::Serialize;
use std::collections::HashMap;
use thiserror::Error;

use crate::code::{ArrayCodeSpec, CodeError};
use crate::field::{Fe, FieldMatrix};

/// Enumeration budget: subsets of `[b] x ([M]-1)` are enumerated exhaustively.
pub const MAX_SUBSET_BITS: u32 = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("enumeration budget exceeded: {reason}")]
    TooLarge { reason: String },
    #[error("position (row {row}, container {container}) is not in [b] x ([M] minus the failed container)")]
    PositionOutOfRange { row: u32, container: u32 },
    #[error("container {p} is determined with no observations; the bad-blocks family is empty")]
    EmptyBadFamily { p: u32 },
    #[error("container {p} cannot be reconstructed even from all surviving positions")]
    NotRecoverable { p: u32 },
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// Fixed-size bitset, one bit per subset mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitset {
    words: Vec<u64>,
}

impl Bitset {
    pub fn new(bits: usize) -> Bitset {
        Bitset {
            words: vec![0; bits.div_ceil(64)],
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        self.words[i >> 6] |= 1 << (i & 63);
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i >> 6] >> (i & 63) & 1 == 1
    }
}

/// Per-failed-container report: the histogram of bad-set sizes and the derived
/// bound coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BadBlockReport {
    /// Failed container index, 1-based.
    pub p: u32,
    /// Smallest number of missing entries that can block recovery:
    /// (M-1)b - max size of a bad set.
    pub alpha_star: u32,
    /// Number of bad sets of maximal size.
    pub beta_star: u64,
    /// Entry d counts the bad sets of size d, d = 0..=b(M-1).
    pub b_delta: Vec<u64>,
    pub bound: BoundCoefficients,
    /// The bad sets of maximal size, ascending by mask; positions are
    /// 1-based (row, container) pairs.
    pub maximal_bad_sets: Vec<Vec<(u32, u32)>>,
    #[serde(skip)]
    pub block_rows: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCoefficients {
    /// 1/alpha*: coefficient of n ln n in the recovery-time bound.
    pub log_coeff: f64,
    /// beta*/(b alpha*): coefficient of n.
    pub linear_coeff: f64,
}

/// The full recovering/bad classification of subset masks, shipped to the
/// simulator for its stopping rule.
#[derive(Debug, Clone)]
pub struct Classification {
    p: u32,
    block_rows: u32,
    survivors: u32,
    bits: u32,
    alpha_star: u32,
    code_key: u64,
    recovering: Bitset,
}

impl Classification {
    #[inline]
    pub fn is_recovering(&self, mask: u32) -> bool {
        self.recovering.get(mask as usize)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn block_rows(&self) -> u32 {
        self.block_rows
    }

    pub fn survivors(&self) -> u32 {
        self.survivors
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn alpha_star(&self) -> u32 {
        self.alpha_star
    }

    pub fn matches(&self, code: &ArrayCodeSpec, p: u32) -> bool {
        self.p == p && self.code_key == code_fingerprint(code)
    }
}

/// Analysis output: the report plus the classification the simulator consumes.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: BadBlockReport,
    pub classification: Classification,
}

fn code_fingerprint(code: &ArrayCodeSpec) -> u64 {
    // FNV-1a over the defining data; only used for in-process consistency checks
    let mut h = 0xcbf29ce484222325u64;
    let mut eat = |v: u64| {
        for byte in v.to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    let spec = code.field().spec();
    eat(spec.p);
    eat(u64::from(spec.e));
    for c in spec.modulus.unwrap_or_default() {
        eat(c);
    }
    eat(u64::from(code.containers()));
    eat(u64::from(code.redundancy()));
    eat(u64::from(code.block_rows()));
    for fe in code.generator().data() {
        eat(u64::from(fe.0));
    }
    h
}

/// Survivor containers in ascending order.
fn survivors_of(code: &ArrayCodeSpec, p: u32) -> Vec<u32> {
    (1..=code.containers()).filter(|&j| j != p).collect()
}

fn decode_mask(mask: u32, block_rows: u32, survivors: &[u32]) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    for bit in 0..(block_rows as usize * survivors.len()) {
        if mask >> bit & 1 == 1 {
            let s = bit as u32 / block_rows;
            let i = bit as u32 % block_rows + 1;
            out.push((i, survivors[s as usize]));
        }
    }
    out
}

/// Kernel-based recoverability of one observed-position mask: the p-th column
/// is determined iff every message vanishing on the observed coordinates also
/// vanishes on the p-th column's coordinates.
fn mask_recoverable(code: &ArrayCodeSpec, p: u32, survivors: &[u32], mask: u32) -> bool {
    let field = code.field();
    let g = code.generator();
    let k = code.message_len();
    let b = code.block_rows();
    let nobs = mask.count_ones() as usize;
    let mut data = Vec::with_capacity(nobs * k);
    for bit in 0..(b as usize * survivors.len()) {
        if mask >> bit & 1 == 0 {
            continue;
        }
        let j = survivors[bit / b as usize];
        let i = bit as u32 % b + 1;
        let coord = ((j - 1) * b + (i - 1)) as usize;
        for t in 0..k {
            data.push(g.get(t, coord));
        }
    }
    let a = FieldMatrix::new(nobs, k, data).expect("mask-sized matrix");
    let (_, kernel) = field.rank_and_kernel(&a);
    let p_coords: Vec<usize> = (0..b).map(|i| ((p - 1) * b + i) as usize).collect();
    kernel.iter().all(|v| {
        p_coords.iter().all(|&c| {
            let mut acc = Fe::ZERO;
            for t in 0..k {
                acc = field.add(acc, field.mul(v[t], g.get(t, c)));
            }
            acc.is_zero()
        })
    })
}

/// Can the p-th column be determined from the symbols at `positions`
/// (1-based (row, container) pairs over the surviving containers)?
pub fn is_recoverable(
    code: &ArrayCodeSpec,
    p: u32,
    positions: &[(u32, u32)],
) -> Result<bool, AnalysisError> {
    check_failed_index(code, p)?;
    let survivors = survivors_of(code, p);
    let b = code.block_rows();
    let mut mask: u32 = 0;
    for &(row, container) in positions {
        let s = survivors
            .iter()
            .position(|&j| j == container)
            .ok_or(AnalysisError::PositionOutOfRange { row, container })?;
        if row < 1 || row > b {
            return Err(AnalysisError::PositionOutOfRange { row, container });
        }
        mask |= 1 << (s as u32 * b + (row - 1));
    }
    Ok(mask_recoverable(code, p, &survivors, mask))
}

fn check_failed_index(code: &ArrayCodeSpec, p: u32) -> Result<(), AnalysisError> {
    if p < 1 || p > code.containers() {
        return Err(AnalysisError::Code(CodeError::ContainerOutOfRange {
            p,
            m: code.containers(),
        }));
    }
    Ok(())
}

fn subset_bits(code: &ArrayCodeSpec) -> Result<u32, AnalysisError> {
    let bits = code.block_rows() * (code.containers() - 1);
    if bits > MAX_SUBSET_BITS {
        return Err(AnalysisError::TooLarge {
            reason: format!("2^{bits} subsets exceed the 2^{MAX_SUBSET_BITS} cap"),
        });
    }
    Ok(bits)
}

/// Masks of the given popcount in ascending order (Gosper's hack).
fn masks_of_weight(bits: u32, weight: u32) -> impl Iterator<Item = u32> {
    let limit = 1u64 << bits;
    let mut cur: u64 = if weight == 0 { 0 } else { (1u64 << weight) - 1 };
    let mut done = false;
    std::iter::from_fn(move || {
        if done || cur >= limit {
            return None;
        }
        let out = cur as u32;
        if weight == 0 {
            done = true;
        } else {
            let u = cur & cur.wrapping_neg();
            let v = cur + u;
            if v >= limit {
                done = true;
            } else {
                cur = v | (((cur ^ v) / u) >> 2);
            }
        }
        Some(out)
    })
}

/// Classify every subset of surviving positions by rank computations, reusing
/// downward closure: a set with a recovering subset is recovering.
pub fn analyze(code: &ArrayCodeSpec, p: u32) -> Result<Analysis, AnalysisError> {
    check_failed_index(code, p)?;
    let bits = subset_bits(code)?;
    let survivors = survivors_of(code, p);
    let total = 1usize << bits;
    let mut recovering = Bitset::new(total);
    for weight in 0..=bits {
        for mask in masks_of_weight(bits, weight) {
            let mut rec = false;
            let mut rest = mask;
            while rest != 0 {
                let bit = rest & rest.wrapping_neg();
                if recovering.get((mask ^ bit) as usize) {
                    rec = true;
                    break;
                }
                rest ^= bit;
            }
            if !rec {
                rec = mask_recoverable(code, p, &survivors, mask);
            }
            if rec {
                recovering.set(mask as usize);
            }
        }
    }
    let report = build_report(code, p, bits, &survivors, &recovering)?;
    let classification = Classification {
        p,
        block_rows: code.block_rows(),
        survivors: survivors.len() as u32,
        bits,
        alpha_star: report.alpha_star,
        code_key: code_fingerprint(code),
        recovering,
    };
    Ok(Analysis {
        report,
        classification,
    })
}

/// Independent oracle for `analyze`: decide badness of every subset by
/// enumerating all codewords and looking for two that agree on the subset but
/// differ in the p-th column.
pub fn brute_force_analyze(code: &ArrayCodeSpec, p: u32) -> Result<BadBlockReport, AnalysisError> {
    check_failed_index(code, p)?;
    let bits = subset_bits(code)?;
    let q = u64::from(code.field().order());
    let k = code.message_len() as u32;
    let codeword_count = q.checked_pow(k).filter(|&c| c <= 100_000).ok_or_else(|| {
        AnalysisError::TooLarge {
            reason: format!("q^k = {q}^{k} codewords exceed the 10^5 cap"),
        }
    })?;
    let work = (1u64 << bits).saturating_mul(codeword_count);
    if work > 100_000_000 {
        return Err(AnalysisError::TooLarge {
            reason: format!("{work} subset-codeword pairs exceed the 10^8 cap"),
        });
    }

    let mut codewords = Vec::with_capacity(codeword_count as usize);
    let mut message = vec![Fe::ZERO; k as usize];
    for idx in 0..codeword_count {
        let mut x = idx;
        for slot in message.iter_mut() {
            *slot = Fe((x % q) as u16);
            x /= q;
        }
        codewords.push(code.encode_block(&message));
    }

    let survivors = survivors_of(code, p);
    let b = code.block_rows();
    let bit_coords: Vec<usize> = (0..bits)
        .map(|bit| {
            let j = survivors[(bit / b) as usize];
            ((j - 1) * b + bit % b) as usize
        })
        .collect();
    let p_coords: Vec<usize> = (0..b).map(|i| ((p - 1) * b + i) as usize).collect();

    let mut recovering = Bitset::new(1 << bits);
    let mut seen: HashMap<Vec<Fe>, Vec<Fe>> = HashMap::new();
    for mask in 0u32..(1 << bits) {
        seen.clear();
        let mut bad = false;
        for cw in &codewords {
            let key: Vec<Fe> = (0..bits)
                .filter(|&bit| mask >> bit & 1 == 1)
                .map(|bit| cw[bit_coords[bit as usize]])
                .collect();
            let col: Vec<Fe> = p_coords.iter().map(|&c| cw[c]).collect();
            match seen.get(&key) {
                Some(prev) if *prev != col => {
                    bad = true;
                    break;
                }
                Some(_) => {}
                None => {
                    seen.insert(key, col);
                }
            }
        }
        if !bad {
            recovering.set(mask as usize);
        }
    }
    build_report(code, p, bits, &survivors, &recovering)
}

fn build_report(
    code: &ArrayCodeSpec,
    p: u32,
    bits: u32,
    survivors: &[u32],
    recovering: &Bitset,
) -> Result<BadBlockReport, AnalysisError> {
    let b = code.block_rows();
    let mut b_delta = vec![0u64; bits as usize + 1];
    for mask in 0..(1u32 << bits) {
        if !recovering.get(mask as usize) {
            b_delta[mask.count_ones() as usize] += 1;
        }
    }
    let Some(max_bad) = (0..=bits as usize).rev().find(|&d| b_delta[d] > 0) else {
        return Err(AnalysisError::EmptyBadFamily { p });
    };
    if max_bad == bits as usize {
        return Err(AnalysisError::NotRecoverable { p });
    }
    let mut maximal = Vec::with_capacity(b_delta[max_bad] as usize);
    for mask in masks_of_weight(bits, max_bad as u32) {
        if !recovering.get(mask as usize) {
            maximal.push(decode_mask(mask, b, survivors));
        }
    }
    let alpha_star = bits - max_bad as u32;
    let beta_star = b_delta[max_bad];
    Ok(BadBlockReport {
        p,
        alpha_star,
        beta_star,
        b_delta,
        bound: BoundCoefficients {
            log_coeff: 1.0 / f64::from(alpha_star),
            linear_coeff: beta_star as f64 / (f64::from(b) * f64::from(alpha_star)),
        },
        maximal_bad_sets: maximal,
        block_rows: b,
    })
}
