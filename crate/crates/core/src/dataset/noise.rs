//! Four-type label corruption.
//!
//! For an instance with `c` positive categories out of `m`:
//!
//! | type | cardinality | originals kept            |
//! |------|-------------|---------------------------|
//! | 1    | `c`         | nonempty proper subset    |
//! | 2    | `c`         | none                      |
//! | 3    | `c' != c`   | at least one              |
//! | 4    | `c' != c`   | none                      |

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{Dataset, Label, NoiseMask};
use crate::rng::{stream, stream_rng, StreamRng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum NoiseType {
    KeepCountPartialOverlap = 1,
    KeepCountDisjoint = 2,
    ChangeCountPartialOverlap = 3,
    ChangeCountDisjoint = 4,
}

impl NoiseType {
    const ALL: [NoiseType; 4] = [
        NoiseType::KeepCountPartialOverlap,
        NoiseType::KeepCountDisjoint,
        NoiseType::ChangeCountPartialOverlap,
        NoiseType::ChangeCountDisjoint,
    ];

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get((code as usize).checked_sub(1)?).copied()
    }

    /// Whether a label with `c` positives out of `m` can be corrupted this way.
    pub fn feasible(self, c: usize, m: usize) -> bool {
        let free = m - c;
        match self {
            NoiseType::KeepCountPartialOverlap => c >= 2 && free >= 1,
            NoiseType::KeepCountDisjoint => free >= c,
            NoiseType::ChangeCountPartialOverlap => m >= 2,
            NoiseType::ChangeCountDisjoint => free >= 2 || (free == 1 && c != 1),
        }
    }
}

/// Half-up rounding of `tau * n`.
fn corrupted_count(tau: f64, n: usize) -> usize {
    (tau * n as f64 + 0.5).floor() as usize
}

/// Corrupts `round(tau * n)` labels, split evenly across the four types.
///
/// Returns the corrupted dataset plus a mask recording each row's type and
/// original label. Types are dealt to the selected rows in shuffled order;
/// a row whose cardinality cannot support its type first swaps types with
/// another selected row, then, failing that, is replaced by an unselected
/// row that can. Per-type counts are therefore always exact.
pub fn inject_noise(ds: &Dataset, tau: f64, seed: u64) -> Result<(Dataset, NoiseMask)> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::arg(format!("noise ratio {tau} outside [0, 1]")));
    }
    ds.validate()?;
    let n = ds.len();
    let m = ds.m;
    let q = corrupted_count(tau, n);
    let mut out = ds.clone();
    let mut mask = NoiseMask::clean(n, m);
    if q == 0 {
        return Ok((out, mask));
    }
    if q < 4 {
        return Err(Error::arg(format!(
            "round(tau * n) = {q}: need at least 4 corrupted instances so every type is represented"
        )));
    }

    let mut rng = stream_rng(seed, stream::NOISE);
    let mut chosen = sample(&mut rng, n, q).into_vec();
    chosen.sort_unstable();

    let mut types = Vec::with_capacity(q);
    for (t, ty) in NoiseType::ALL.iter().enumerate() {
        let count = q / 4 + usize::from(t < q % 4);
        types.extend(std::iter::repeat_n(*ty, count));
    }
    types.shuffle(&mut rng);

    let card: Vec<usize> = ds.instances.iter().map(|o| o.label.cardinality()).collect();
    let ok = |row: usize, ty: NoiseType| ty.feasible(card[row], m);

    for i in 0..q {
        if ok(chosen[i], types[i]) {
            continue;
        }
        let swap =
            (0..q).find(|&j| j != i && types[j] != types[i] && ok(chosen[j], types[i]) && ok(chosen[i], types[j]));
        if let Some(j) = swap {
            types.swap(i, j);
            continue;
        }
        let mut taken = vec![false; n];
        for &r in &chosen {
            taken[r] = true;
        }
        match (0..n).find(|&r| !taken[r] && ok(r, types[i])) {
            Some(r) => chosen[i] = r,
            None => {
                return Err(Error::arg(format!(
                    "no instance can receive corruption type {}",
                    types[i] as u8
                )))
            }
        }
    }

    for (&row, &ty) in chosen.iter().zip(&types) {
        let original = ds.instances[row].label.clone();
        let noisy = corrupt(&original, ty, &mut rng);
        debug_assert!(noisy != original && noisy.cardinality() >= 1);
        out.instances[row].label = noisy;
        mask.noise_type[row] = ty as u8;
        mask.original_labels[row] = original;
    }
    Ok((out, mask))
}

fn pick(rng: &mut StreamRng, pool: &[usize], k: usize) -> Vec<usize> {
    sample(rng, pool.len(), k).into_iter().map(|i| pool[i]).collect()
}

fn corrupt(orig: &Label, ty: NoiseType, rng: &mut StreamRng) -> Label {
    let m = orig.len();
    let pos: Vec<usize> = orig.positives().collect();
    let neg: Vec<usize> = orig.negatives().collect();
    let c = pos.len();
    let free = neg.len();

    let (keep, add) = match ty {
        NoiseType::KeepCountPartialOverlap => {
            // keep s in [max(1, c - free), c - 1]
            let s = rng.random_range(c.saturating_sub(free).max(1)..=c - 1);
            (s, c - s)
        }
        NoiseType::KeepCountDisjoint => (0, c),
        NoiseType::ChangeCountPartialOverlap => {
            let choices: Vec<usize> = (1..=m).filter(|&v| v != c).collect();
            let new_c = choices[rng.random_range(0..choices.len())];
            let s = rng.random_range(new_c.saturating_sub(free).max(1)..=new_c.min(c));
            (s, new_c - s)
        }
        NoiseType::ChangeCountDisjoint => {
            let choices: Vec<usize> = (1..=free).filter(|&v| v != c).collect();
            let new_c = choices[rng.random_range(0..choices.len())];
            (0, new_c)
        }
    };
    let mut cats = pick(rng, &pos, keep);
    cats.extend(pick(rng, &neg, add));
    Label::from_categories(m, cats)
}
