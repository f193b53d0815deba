//! Bitstring probability distributions and their Shannon statistics.
//!
//! A bitstring is stored as an integer with bit `i` holding atom `i`. Text
//! rendering puts atom 0 first, so `"0110"` is the integer `0b0110`
//! read right to left: atoms 1 and 2 are excited.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::entanglement::{Bipartition, Side};
use crate::error::{Error, Result};
use crate::hamiltonian::GroundState;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Exact,
    Empirical { n_shots: u64 },
}

/// Renders atom 0 first.
pub fn format_bitstring(bits: u64, n_atoms: usize) -> String {
    (0..n_atoms).map(|i| if bits >> i & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn parse_bitstring(s: &str) -> Option<(u64, usize)> {
    if s.is_empty() || s.len() > 64 {
        return None;
    }
    let mut bits = 0u64;
    for (i, ch) in s.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => bits |= 1 << i,
            _ => return None,
        }
    }
    Some((bits, s.len()))
}

/// Observed shot counts keyed by bitstring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotCounts {
    n_atoms: usize,
    counts: BTreeMap<u64, u64>,
}

impl ShotCounts {
    pub fn new(n_atoms: usize) -> Self {
        Self { n_atoms, counts: BTreeMap::new() }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn add(&mut self, bits: u64, count: u64) -> Result<()> {
        if self.n_atoms < 64 && bits >> self.n_atoms != 0 {
            return Err(Error::InvalidDistribution(format!(
                "bitstring {bits:#b} does not fit {} atoms",
                self.n_atoms
            )));
        }
        if count > 0 {
            *self.counts.entry(bits).or_insert(0) += count;
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&b, &c)| (b, c))
    }

    pub fn get(&self, bits: u64) -> u64 {
        self.counts.get(&bits).copied().unwrap_or(0)
    }
}

/// Sparse probability map over bitstrings, sorted by bitstring.
///
/// Every stored probability is positive and the total is one. Empirical
/// distributions also carry the integer counts behind each probability.
#[derive(Clone, Debug, PartialEq)]
pub struct BitstringDistribution {
    n_atoms: usize,
    entries: Vec<(u64, f64)>,
    counts: Option<Vec<u64>>,
    source: Source,
}

impl BitstringDistribution {
    /// From explicit `(bitstring, probability)` pairs; zeros are dropped and
    /// the rest renormalized.
    pub fn from_probabilities(n_atoms: usize, pairs: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let mut map: BTreeMap<u64, f64> = BTreeMap::new();
        for (bits, p) in pairs {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::InvalidDistribution(format!("bad probability {p}")));
            }
            if n_atoms < 64 && bits >> n_atoms != 0 {
                return Err(Error::InvalidDistribution(format!("bitstring {bits:#b} too long")));
            }
            if p > 0.0 {
                *map.entry(bits).or_insert(0.0) += p;
            }
        }
        let total: f64 = map.values().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("no probability mass".into()));
        }
        let entries = map.into_iter().map(|(b, p)| (b, p / total)).collect();
        Ok(Self { n_atoms, entries, counts: None, source: Source::Exact })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    pub fn n_shots(&self) -> Option<u64> {
        match self.source {
            Source::Empirical { n_shots } => Some(n_shots),
            Source::Exact => None,
        }
    }

    pub fn probability(&self, bits: u64) -> f64 {
        self.entries
            .binary_search_by_key(&bits, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn max_probability(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.1))
    }

    /// Keeps the entries selected by `keep` (index-aligned), renormalized.
    /// Returns `None` when nothing survives, along with the kept raw mass.
    pub(crate) fn retain_renormalized(&self, keep: impl Fn(usize) -> bool) -> (Option<Self>, f64) {
        let idx: Vec<usize> = (0..self.entries.len()).filter(|&i| keep(i)).collect();
        let kept_mass: f64 = idx.iter().map(|&i| self.entries[i].1).sum();
        if idx.is_empty() {
            return (None, 0.0);
        }
        if idx.len() == self.entries.len() {
            return (Some(self.clone()), kept_mass);
        }
        let out = match &self.counts {
            Some(counts) => {
                let kept: Vec<u64> = idx.iter().map(|&i| counts[i]).collect();
                let total: u64 = kept.iter().sum();
                let entries = idx
                    .iter()
                    .zip(&kept)
                    .map(|(&i, &c)| (self.entries[i].0, c as f64 / total as f64))
                    .collect();
                Self {
                    n_atoms: self.n_atoms,
                    entries,
                    counts: Some(kept),
                    source: Source::Empirical { n_shots: total },
                }
            }
            None => Self {
                n_atoms: self.n_atoms,
                entries: idx.iter().map(|&i| (self.entries[i].0, self.entries[i].1 / kept_mass)).collect(),
                counts: None,
                source: self.source,
            },
        };
        (Some(out), kept_mass)
    }
}

/// `{n: c_n²}` for every `c_n² > epsilon`, renormalized.
pub fn exact_distribution(state: &GroundState, epsilon: f64) -> BitstringDistribution {
    let raw: Vec<(u64, f64)> = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(n, c)| (n as u64, c * c))
        .filter(|&(_, p)| p > epsilon)
        .collect();
    let total: f64 = raw.iter().map(|e| e.1).sum();
    let entries = raw.into_iter().map(|(b, p)| (b, p / total)).collect();
    BitstringDistribution { n_atoms: state.n_atoms, entries, counts: None, source: Source::Exact }
}

pub fn empirical_distribution(counts: &ShotCounts) -> Result<BitstringDistribution> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::InvalidDistribution("no shots".into()));
    }
    let mut entries = Vec::with_capacity(counts.len());
    let mut raw = Vec::with_capacity(counts.len());
    for (bits, c) in counts.iter() {
        entries.push((bits, c as f64 / total as f64));
        raw.push(c);
    }
    Ok(BitstringDistribution {
        n_atoms: counts.n_atoms(),
        entries,
        counts: Some(raw),
        source: Source::Empirical { n_shots: total },
    })
}

/// Sums `probs` into buckets keyed by `key`; sums are accumulated in the
/// original entry order.
fn bucket_sums<T>(keys: &[u64], probs: &[T], width: usize) -> Vec<(u64, T)>
where
    T: Copy + Default + std::ops::AddAssign,
{
    if width <= 24 && (1usize << width) <= 4 * keys.len() + 1024 {
        let mut dense = vec![T::default(); 1 << width];
        let mut seen = vec![false; 1 << width];
        for (&k, &p) in keys.iter().zip(probs) {
            dense[k as usize] += p;
            seen[k as usize] = true;
        }
        return (0..dense.len())
            .filter(|&k| seen[k])
            .map(|k| (k as u64, dense[k]))
            .collect();
    }
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by_key(|&i| keys[i]);
    let mut out: Vec<(u64, T)> = Vec::new();
    for i in order {
        match out.last_mut() {
            Some(last) if last.0 == keys[i] => last.1 += probs[i],
            _ => out.push((keys[i], probs[i])),
        }
    }
    out
}

pub fn marginal(dist: &BitstringDistribution, part: &Bipartition, side: Side) -> Result<BitstringDistribution> {
    if part.n_atoms() != dist.n_atoms {
        return Err(Error::LengthMismatch { expected: part.n_atoms(), got: dist.n_atoms });
    }
    let width = part.size(side);
    let keys: Vec<u64> = dist.entries.iter().map(|e| part.bits(e.0, side)).collect();
    let probs: Vec<f64> = dist.entries.iter().map(|e| e.1).collect();
    let entries = bucket_sums(&keys, &probs, width);
    let counts = dist
        .counts
        .as_ref()
        .map(|c| bucket_sums(&keys, c, width).into_iter().map(|e| e.1).collect());
    Ok(BitstringDistribution { n_atoms: width, entries, counts, source: dist.source })
}

fn entropy_of(probs: impl Iterator<Item = f64>) -> f64 {
    let s: f64 = probs.filter(|&p| p > 0.0).map(|p| -p * p.ln()).sum();
    s.max(0.0)
}

/// `−Σ p ln p` in nats.
pub fn shannon_entropy(dist: &BitstringDistribution) -> f64 {
    entropy_of(dist.entries.iter().map(|e| e.1))
}

/// Joint, marginal and conditional entropies plus the mutual information,
/// all in nats.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropySummary {
    pub s_ab: f64,
    pub s_a: f64,
    pub s_b: f64,
    pub s_a_given_b: f64,
    pub s_b_given_a: f64,
    pub mutual_information: f64,
}

impl EntropySummary {
    fn from_parts(s_ab: f64, s_a: f64, s_b: f64) -> Self {
        Self {
            s_ab,
            s_a,
            s_b,
            s_a_given_b: s_ab - s_b,
            s_b_given_a: s_ab - s_a,
            mutual_information: s_a + s_b - s_ab,
        }
    }

    pub fn conditional(&self, which: Conditional) -> f64 {
        match which {
            Conditional::AGivenB => self.s_a_given_b,
            Conditional::BGivenA => self.s_b_given_a,
        }
    }
}

/// Which conditional entropy a curve or fit refers to.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditional {
    AGivenB,
    BGivenA,
}

pub fn entropy_summary(dist: &BitstringDistribution, part: &Bipartition) -> Result<EntropySummary> {
    let s_ab = shannon_entropy(dist);
    let s_a = shannon_entropy(&marginal(dist, part, Side::A)?);
    let s_b = shannon_entropy(&marginal(dist, part, Side::B)?);
    Ok(EntropySummary::from_parts(s_ab, s_a, s_b))
}
