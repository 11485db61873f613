use std::fs;
use std::path::Path;

use crate::binio::{to_u32, Reader, Writer};
use crate::dataset::Label;
use crate::model::BinaryCode;
use crate::{Error, Result};

/// Packs a `+-1` code into 64-bit words; bit `b` of the code is bit
/// `b % 64` of word `b / 64`, set for `+1`. Unused tail bits are zero.
pub fn pack(code: &BinaryCode) -> Vec<u64> {
    let mut words = vec![0u64; code.len().div_ceil(64)];
    for (b, &v) in code.0.iter().enumerate() {
        if v > 0 {
            words[b / 64] |= 1 << (b % 64);
        }
    }
    words
}

pub fn unpack(words: &[u64], k: usize) -> BinaryCode {
    BinaryCode(
        (0..k)
            .map(|b| if words[b / 64] >> (b % 64) & 1 == 1 { 1 } else { -1 })
            .collect(),
    )
}

#[inline]
pub fn hamming_packed(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

pub fn hamming_distance(a: &BinaryCode, b: &BinaryCode) -> Result<u32> {
    if a.len() != b.len() {
        return Err(Error::arg(format!("code lengths differ: {} vs {}", a.len(), b.len())));
    }
    Ok(hamming_packed(&pack(a), &pack(b)))
}

/// Immutable bit-packed database of codes with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedCodeIndex {
    k: usize,
    words_per_code: usize,
    words: Vec<u64>,
    /// Dataset row each entry came from.
    ids: Vec<usize>,
    labels: Vec<Label>,
}

/// Database ids by ascending Hamming distance, ties by ascending id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankingResult {
    pub ids: Vec<usize>,
    pub distances: Vec<u32>,
}

impl PackedCodeIndex {
    /// Builds an index whose ids are the row positions `0..n`.
    pub fn build(codes: &[BinaryCode], labels: Vec<Label>) -> Result<Self> {
        let ids = (0..codes.len()).collect();
        Self::build_with_ids(codes, labels, ids)
    }

    pub fn build_with_ids(codes: &[BinaryCode], labels: Vec<Label>, ids: Vec<usize>) -> Result<Self> {
        if codes.len() != labels.len() || codes.len() != ids.len() {
            return Err(Error::arg("codes, labels and ids must have equal length"));
        }
        let k = codes.first().map_or(0, |c| c.len());
        if codes.iter().any(|c| c.len() != k) {
            return Err(Error::arg("codes differ in length"));
        }
        let m = labels.first().map_or(0, |l| l.len());
        if labels.iter().any(|l| l.len() != m) {
            return Err(Error::arg("labels differ in width"));
        }
        let words_per_code = k.div_ceil(64);
        let mut words = Vec::with_capacity(words_per_code * codes.len());
        for c in codes {
            words.extend(pack(c));
        }
        Ok(PackedCodeIndex {
            k,
            words_per_code,
            words,
            ids,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn code_len(&self) -> usize {
        self.k
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn packed(&self, pos: usize) -> &[u64] {
        &self.words[pos * self.words_per_code..(pos + 1) * self.words_per_code]
    }

    pub fn code(&self, pos: usize) -> BinaryCode {
        unpack(self.packed(pos), self.k)
    }

    /// Distances from `query` to every entry, in index order.
    pub fn distances(&self, query: &BinaryCode) -> Result<Vec<u32>> {
        if query.len() != self.k {
            return Err(Error::arg(format!(
                "query has {} bits, index has {}",
                query.len(),
                self.k
            )));
        }
        let q = pack(query);
        Ok((0..self.len()).map(|i| hamming_packed(&q, self.packed(i))).collect())
    }

    /// Exact Hamming ranking of the whole database.
    pub fn rank(&self, query: &BinaryCode) -> Result<RankingResult> {
        if self.is_empty() {
            return Err(Error::arg("cannot rank against an empty index"));
        }
        let dist = self.distances(query)?;
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_unstable_by_key(|&i| (dist[i], self.ids[i]));
        Ok(RankingResult {
            ids: order.iter().map(|&i| self.ids[i]).collect(),
            distances: order.iter().map(|&i| dist[i]).collect(),
        })
    }
}

pub fn rank(query: &BinaryCode, index: &PackedCodeIndex) -> Result<RankingResult> {
    index.rank(query)
}

const MAGIC: &[u8; 4] = b"DCIX";
const VERSION: u32 = 1;

/// `DCIX` format: magic, u32 version, u32 n, u32 k, `n * ceil(k/64)` packed
/// u64 words, then the `n x m` label matrix as u8. `m` is implied by the
/// remaining length; ids are the row positions.
pub fn write_index(index: &PackedCodeIndex) -> Result<Vec<u8>> {
    let mut w = Writer::new();
    w.bytes(MAGIC);
    w.u32(VERSION);
    w.u32(to_u32(index.len(), "n")?);
    w.u32(to_u32(index.k, "k")?);
    index.words.iter().for_each(|&v| w.u64(v));
    for l in &index.labels {
        w.bytes(l.as_bytes());
    }
    Ok(w.finish())
}

pub fn read_index(bytes: &[u8]) -> Result<PackedCodeIndex> {
    let mut r = Reader::new(bytes);
    r.magic(MAGIC)?;
    r.version(VERSION)?;
    let n = r.u32("n")? as usize;
    let k = r.u32("k")? as usize;
    let wpc = k.div_ceil(64);
    let mut words = Vec::with_capacity((n * wpc).min(1 << 24));
    for _ in 0..n * wpc {
        words.push(r.u64("packed code word")?);
    }
    if !k.is_multiple_of(64) {
        let tail = !0u64 << (k % 64);
        for (i, chunk) in words.chunks(wpc).enumerate() {
            if chunk[wpc - 1] & tail != 0 {
                return Err(Error::Format {
                    offset: 16 + ((i * wpc + wpc - 1) * 8) as u64,
                    message: "nonzero bits past code length".into(),
                });
            }
        }
    }
    let rest = bytes.len() as u64 - r.offset();
    let m = match n {
        0 => 0,
        _ if !rest.is_multiple_of(n as u64) => {
            return r.fail(format!("label block of {rest} bytes is not a multiple of n = {n}"))
        }
        _ => (rest / n as u64) as usize,
    };
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let at = r.offset();
        let bits = r.take(m, "label")?;
        if let Some(bad) = bits.iter().position(|&b| b > 1) {
            return Err(Error::Format {
                offset: at + bad as u64,
                message: "label byte is not 0/1".into(),
            });
        }
        labels.push(Label::new(bits.to_vec()));
    }
    r.finish()?;
    Ok(PackedCodeIndex {
        k,
        words_per_code: wpc,
        words,
        ids: (0..n).collect(),
        labels,
    })
}

pub fn save_index(index: &PackedCodeIndex, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_index(index)?)?;
    Ok(())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<PackedCodeIndex> {
    read_index(&fs::read(path)?)
}
