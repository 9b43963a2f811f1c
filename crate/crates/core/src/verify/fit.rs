//! Empirical KL envelopes from trajectory ensembles.

use crate::compfn::{ComparisonFn, KlFn};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::simulator::Trajectory;

pub const FIT_BINS: usize = 8;
pub const FIT_TIME_POINTS: usize = 200;
pub const FIT_INFLATION: f64 = 1.05;

/// Tabulated `σ(s, t)` majorizing the output norms of `trajs`, binned by
/// `s = β(t₀)‖x₀‖_r`.
///
/// Each bin takes, at every elapsed-time grid point, the largest output
/// norm any of its trajectories reaches from the preceding trajectory node
/// on. The table is made nondecreasing in `s` by a cumulative maximum over
/// the bins (it is nonincreasing in `t` by construction) and inflated by
/// five percent. Bins span `[s_min, s_max]` uniformly, `s_min` being the
/// smallest positive label, so every training trajectory with `s > 0` is
/// covered by its own bin.
pub fn fit_kl_envelope<T: Real>(
    trajs: &[Trajectory<T>],
    beta: &ComparisonFn<T>,
) -> Result<KlFn<T>> {
    if trajs.is_empty() {
        return Err(Error::Empty("trajectory ensemble"));
    }
    let labels: Vec<T> = trajs
        .iter()
        .map(|tr| beta.eval(tr.t0()) * tr.initial().sup_norm())
        .collect();
    let s_max = labels.iter().copied().fold(T::zero(), T::max);
    let s_min = labels
        .iter()
        .copied()
        .filter(|s| *s > T::zero())
        .fold(T::infinity(), T::min);
    let horizon = trajs
        .iter()
        .map(|tr| tr.last_time() - tr.t0())
        .fold(T::zero(), T::max);
    let t_grid: Vec<T> = (0..FIT_TIME_POINTS)
        .map(|j| horizon * T::count(j) / T::count(FIT_TIME_POINTS - 1))
        .collect();
    if !(s_max > T::zero()) {
        // Only zero initial data: the envelope is identically zero.
        return KlFn::from_table(
            "fit(zero)",
            T::one(),
            vec![T::one()],
            t_grid,
            vec![vec![T::zero(); FIT_TIME_POINTS]],
        );
    }
    let upper: Vec<T> = (0..FIT_BINS)
        .map(|k| {
            if k + 1 == FIT_BINS {
                s_max
            } else {
                s_min + (s_max - s_min) * T::count(k + 1) / T::count(FIT_BINS)
            }
        })
        .collect();
    let mut table = vec![vec![T::zero(); FIT_TIME_POINTS]; FIT_BINS];
    for (tr, &s) in trajs.iter().zip(&labels) {
        if !(s > T::zero()) {
            continue;
        }
        let k = upper.partition_point(|u| *u < s).min(FIT_BINS - 1);
        let norms = tr.output_norms();
        let mut suffix = norms.to_vec();
        for i in (0..suffix.len().saturating_sub(1)).rev() {
            suffix[i] = suffix[i].max(suffix[i + 1]);
        }
        let elapsed: Vec<T> = tr.times().iter().map(|t| *t - tr.t0()).collect();
        for (j, &tj) in t_grid.iter().enumerate() {
            // last node at or before tj
            let i = elapsed.partition_point(|e| *e <= tj).saturating_sub(1);
            if i < suffix.len() {
                table[k][j] = table[k][j].max(suffix[i]);
            }
        }
    }
    for k in 1..FIT_BINS {
        let (below, above) = table.split_at_mut(k);
        for (x, p) in above[0].iter_mut().zip(&below[k - 1]) {
            *x = x.max(*p);
        }
    }
    let inflate = T::lit(FIT_INFLATION);
    for row in &mut table {
        for j in (0..FIT_TIME_POINTS).rev() {
            if j + 1 < FIT_TIME_POINTS {
                row[j] = row[j].max(row[j + 1]);
            }
        }
        row.iter_mut().for_each(|v| *v = *v * inflate);
    }
    KlFn::from_table(format!("fit({})", beta.name()), s_min, upper, t_grid, table)
}
