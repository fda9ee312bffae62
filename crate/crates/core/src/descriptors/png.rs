use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::FiringMap;
use crate::{Error, Result};

pub const MAX_SET_NEURONS: usize = 256;

/// Set of neuron indices below 256, stored as a bitset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NeuronSet([u64; 4]);

impl NeuronSet {
    pub fn from_neurons(neurons: &[u16]) -> Result<Self> {
        let mut s = NeuronSet::default();
        for &n in neurons {
            if n as usize >= MAX_SET_NEURONS {
                return Err(Error::data(format!("neuron {n} exceeds set capacity")));
            }
            s.insert(n);
        }
        Ok(s)
    }

    #[inline]
    fn insert(&mut self, n: u16) {
        self.0[(n >> 6) as usize] |= 1 << (n & 63);
    }

    pub fn contains(&self, n: u16) -> bool {
        (n as usize) < MAX_SET_NEURONS && self.0[(n >> 6) as usize] & (1 << (n & 63)) != 0
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0 == [0; 4]
    }

    pub fn neurons(&self) -> Vec<u16> {
        self.iter().collect()
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = u16> + '_ {
        self.0.iter().enumerate().flat_map(|(k, &word)| {
            let mut w = word;
            core::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as u16;
                w &= w - 1;
                Some(k as u16 * 64 + bit)
            })
        })
    }

    #[inline]
    fn counts(&self, other: &NeuronSet) -> (u32, u32, u32, u32) {
        let (mut inter, mut union, mut a, mut b) = (0, 0, 0, 0);
        for k in 0..4 {
            inter += (self.0[k] & other.0[k]).count_ones();
            union += (self.0[k] | other.0[k]).count_ones();
            a += self.0[k].count_ones();
            b += other.0[k].count_ones();
        }
        (inter, union, a, b)
    }

    /// Jaccard index with containment counted as a full match. Both sets
    /// must be non-empty.
    #[inline]
    pub(crate) fn similarity(&self, other: &NeuronSet) -> f64 {
        let (inter, union, a, b) = self.counts(other);
        if inter == a || inter == b {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// Co-firing sets, one per millisecond in which anything fired.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PngGroup {
    pub sequence: Vec<NeuronSet>,
}

impl PngGroup {
    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }
}

pub fn extract_png(map: &FiringMap) -> Result<PngGroup> {
    if map.n_neurons() > MAX_SET_NEURONS {
        return Err(Error::data(format!("{} neurons exceed set capacity", map.n_neurons())));
    }
    let mut sequence = Vec::new();
    let mut current_time = None;
    for &(n, t) in map.firings() {
        if current_time != Some(t) {
            sequence.push(NeuronSet::default());
            current_time = Some(t);
        }
        sequence.last_mut().expect("pushed above").insert(n);
    }
    Ok(PngGroup { sequence })
}

/// `|A ∩ B| / |A ∪ B|`, or 1 when one set contains the other.
pub fn jaccard(a: &NeuronSet, b: &NeuronSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::data("jaccard of an empty set"));
    }
    Ok(a.similarity(b))
}

/// Longest common subsequence of two co-firing sequences, where two sets
/// match when their Jaccard index reaches `j_eps`, divided by the shorter
/// length.
pub fn lcs_similarity(p: &PngGroup, q: &PngGroup, j_eps: f64) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::data("lcs of an empty group"));
    }
    if !(j_eps > 0.0 && j_eps <= 1.0) {
        return Err(Error::param("j_eps", format!("must be in (0, 1], got {j_eps}")));
    }
    if p.sequence.iter().chain(&q.sequence).any(NeuronSet::is_empty) {
        return Err(Error::data("group contains an empty set"));
    }
    let lcs = lcs_len(&p.sequence, &q.sequence, j_eps);
    Ok(lcs as f64 / p.len().min(q.len()) as f64)
}

pub(crate) fn lcs_len(p: &[NeuronSet], q: &[NeuronSet], j_eps: f64) -> usize {
    let (p, q) = if p.len() < q.len() { (q, p) } else { (p, q) };
    let mut prev = vec![0u32; q.len() + 1];
    let mut cur = vec![0u32; q.len() + 1];
    for a in p {
        for (j, b) in q.iter().enumerate() {
            cur[j + 1] = if a.similarity(b) >= j_eps { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[q.len()] as usize
}

/// A group with a neuron-to-position index, for repeated matching against
/// many queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedPng {
    group: PngGroup,
    /// Positions of the sets containing each neuron, ascending.
    postings: Vec<Vec<u32>>,
}

impl IndexedPng {
    pub fn new(group: PngGroup) -> Self {
        let mut postings = vec![Vec::new(); MAX_SET_NEURONS];
        for (pos, set) in group.sequence.iter().enumerate() {
            for n in set.iter() {
                postings[n as usize].push(pos as u32);
            }
        }
        IndexedPng { group, postings }
    }

    pub fn group(&self) -> &PngGroup {
        &self.group
    }

    /// Same value as [`lcs_similarity`], or 0 when either side is empty.
    ///
    /// Two sets can only match when they share a neuron, so candidate
    /// positions come from the index and the LCS runs bit-parallel over the
    /// indexed sequence.
    pub fn similarity(&self, query: &PngGroup, j_eps: f64) -> f64 {
        let n = self.group.len();
        if n == 0 || query.is_empty() {
            return 0.0;
        }
        let words = n.div_ceil(64);
        let mut v = vec![u64::MAX; words];
        let mut mask = vec![0u64; words];
        let mut touched: Vec<usize> = Vec::new();
        for a in &query.sequence {
            for &w in &touched {
                mask[w] = 0;
            }
            touched.clear();
            for neuron in a.iter() {
                for &pos in &self.postings[neuron as usize] {
                    let (w, bit) = (pos as usize / 64, 1u64 << (pos % 64));
                    if mask[w] & bit == 0 && a.similarity(&self.group.sequence[pos as usize]) >= j_eps {
                        mask[w] |= bit;
                        touched.push(w);
                    }
                }
            }
            if touched.is_empty() {
                continue;
            }
            // V <- (V + (V & M)) | (V & !M), with carries across words.
            let mut carry = 0u64;
            for w in 0..words {
                let u = v[w] & mask[w];
                let (s1, c1) = v[w].overflowing_add(u);
                let (s2, c2) = s1.overflowing_add(carry);
                carry = u64::from(c1 || c2);
                v[w] = s2 | (v[w] & !mask[w]);
            }
        }
        let tail = n % 64;
        let zeros: u32 = v
            .iter()
            .enumerate()
            .map(|(w, &x)| {
                let valid = if w + 1 == words && tail != 0 { (1u64 << tail) - 1 } else { u64::MAX };
                (!x & valid).count_ones()
            })
            .sum();
        zeros as f64 / n.min(query.len()) as f64
    }
}
