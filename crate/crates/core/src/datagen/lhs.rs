use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rng::{self, tags};

/// Latin hypercube sample of `n` points: along every dimension the `n`
/// equal-width strata of `[lo, hi)` hold exactly one point each, jittered
/// uniformly inside its stratum. Strata are permuted independently per
/// dimension. Returns `n` rows of `ranges.len()` values.
pub fn lhs_sample(n: usize, ranges: &[(f64, f64)], rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::InvalidArgument("LHS needs n >= 1".into()));
    }
    if let Some(r) = ranges.iter().find(|r| !(r.0 < r.1)) {
        return Err(Error::InvalidArgument(format!("LHS range {r:?} is empty")));
    }
    let mut rows = vec![vec![0.0; ranges.len()]; n];
    for (d, &(lo, hi)) in ranges.iter().enumerate() {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (row, s) in rows.iter_mut().zip(strata) {
            let u: f64 = rng.random();
            row[d] = lo + (hi - lo) * (s as f64 + u) / n as f64;
        }
    }
    Ok(rows)
}

/// Dataset sampling uses fixed-size LHS blocks so that sample `i` depends
/// only on `(seed, i)`.
pub const LHS_BLOCK: usize = 64;

/// Row `index` of the block-wise hypercube for `seed`.
pub fn block_lhs_row(seed: u64, index: usize, ranges: &[(f64, f64)]) -> Result<Vec<f64>> {
    let block = (index / LHS_BLOCK) as u64;
    let mut r = rng::stream(seed, &[tags::LHS_BLOCK, block]);
    let mut rows = lhs_sample(LHS_BLOCK, ranges, &mut r)?;
    Ok(rows.swap_remove(index % LHS_BLOCK))
}
