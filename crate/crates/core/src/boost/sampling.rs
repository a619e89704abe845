//! Row sampling for GOSS and tree dropout for DART.

use rand::seq::index;
use rand::Rng;

use super::{check_goss_rates, BoostError, Result};

/// `ceil(rate · n)` without being pushed up by representation error.
fn count_for(rate: f64, n: usize) -> usize {
    ((rate * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Gradient-based one-side sampling.
///
/// Keeps the `⌈a·n⌉` rows with the largest `|g|` at weight 1 and draws
/// `⌈b·n⌉` of the remaining rows uniformly without replacement at weight
/// `(1 − a)/b`. Returns row indices in ascending order with their weights.
pub fn goss_sample<R: Rng + ?Sized>(
    gradients: &[f64],
    a: f64,
    b: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<f64>)> {
    check_goss_rates(a, b)?;
    let n = gradients.len();
    let top = count_for(a, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        gradients[j]
            .abs()
            .total_cmp(&gradients[i].abs())
            .then(i.cmp(&j))
    });
    let mut picked: Vec<(usize, f64)> = order[..top].iter().map(|&i| (i, 1.0)).collect();
    let rest = &order[top..];
    let n_other = count_for(b, n).min(rest.len());
    if n_other > 0 {
        let amplify = (1.0 - a) / b;
        for k in index::sample(rng, rest.len(), n_other) {
            picked.push((rest[k], amplify));
        }
    }
    if picked.is_empty() && n > 0 {
        return Err(BoostError::Config(
            "GOSS selected no rows; increase top_rate or other_rate".into(),
        ));
    }
    picked.sort_by_key(|&(i, _)| i);
    Ok(picked.into_iter().unzip())
}

/// Outcome of a DART dropout draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DartDrop {
    /// Indices of dropped trees, ascending.
    pub dropped: Vec<usize>,
    /// Factor applied to the new tree's weight, `1/(k+1)`.
    pub new_tree_scale: f64,
    /// Factor applied to each dropped tree's weight, `k/(k+1)`.
    pub dropped_rescale: f64,
}

/// Drops each existing tree independently with probability `drop_rate`;
/// when that drops nothing (and `drop_rate > 0`) one tree is dropped
/// uniformly at random.
pub fn dart_drop<R: Rng + ?Sized>(n_trees: usize, drop_rate: f64, rng: &mut R) -> Result<DartDrop> {
    dart_drop_capped(n_trees, drop_rate, 0, rng)
}

/// [`dart_drop`] keeping at most `max_dropped` trees (0 means no cap).
pub fn dart_drop_capped<R: Rng + ?Sized>(
    n_trees: usize,
    drop_rate: f64,
    max_dropped: usize,
    rng: &mut R,
) -> Result<DartDrop> {
    if !(0.0..=1.0).contains(&drop_rate) {
        return Err(BoostError::Config(format!(
            "drop_rate must be in [0, 1], got {drop_rate}"
        )));
    }
    let mut dropped = Vec::new();
    if n_trees > 0 && drop_rate > 0.0 {
        dropped = (0..n_trees)
            .filter(|_| rng.random::<f64>() < drop_rate)
            .collect();
        if drop_rate >= 1.0 {
            dropped = (0..n_trees).collect();
        }
        if dropped.is_empty() {
            dropped.push(rng.random_range(0..n_trees));
        }
        if max_dropped > 0 && dropped.len() > max_dropped {
            let keep = index::sample(rng, dropped.len(), max_dropped);
            let mut kept: Vec<usize> = keep.into_iter().map(|k| dropped[k]).collect();
            kept.sort_unstable();
            dropped = kept;
        }
    }
    let k = dropped.len() as f64;
    Ok(DartDrop {
        dropped,
        new_tree_scale: 1.0 / (k + 1.0),
        dropped_rescale: if k > 0.0 { k / (k + 1.0) } else { 1.0 },
    })
}
