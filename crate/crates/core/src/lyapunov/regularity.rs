//! Sampled regularity of functionals ("almost Lipschitz on bounded sets").

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::LyapunovFunctional;
use crate::history::{HistorySampler, HistorySegment};
use crate::rng;
use crate::scalar::{self, Real};
use crate::simulator::Region;

/// Quotient growth under refinement above which a bound is suspected to be
/// infinite.
const GROWTH_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlmostLipschitzReport {
    /// Largest sampled `|V(t,y) − V(t,x)| / ‖y − x‖_r`.
    pub m_hat: f64,
    /// Largest sampled `|V(t+h,x) − V(t,x)| / (h(1 + sup|ẋ|))`.
    pub p_hat: f64,
    pub region: Region,
    pub samples: usize,
    /// Near-pair quotients grew by more than a factor of ten when the pair
    /// distance shrank a hundredfold.
    pub m_unbounded_suspected: bool,
    /// Same for the time-shift quotient.
    pub p_unbounded_suspected: bool,
}

/// `x + s·p` on the union of both grids.
fn perturbed<T: Real>(x: &HistorySegment<T>, p: &HistorySegment<T>, s: T) -> HistorySegment<T> {
    let mut grid: Vec<T> = x.grid().iter().chain(p.grid()).copied().collect();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    grid.dedup();
    let mut values = Vec::with_capacity(grid.len() * x.dim());
    for &th in &grid {
        let a = x.eval(th).expect("grid inside window");
        let b = p.eval(th).expect("grid inside window");
        values.extend(a.iter().zip(&b).map(|(u, v)| *u + s * *v));
    }
    HistorySegment::from_flat(x.delay(), x.dim(), grid, values).expect("valid perturbation")
}

fn max_slope<T: Real>(x: &HistorySegment<T>) -> T {
    (0..x.len() - 1)
        .map(|i| scalar::distance(x.value(i + 1), x.value(i)) / (x.grid()[i + 1] - x.grid()[i]))
        .fold(T::zero(), T::max)
}

/// Estimates `M(R)` and `P(R)` of the almost-Lipschitz definition on
/// `region` (`t ∈ [t_lo, t_hi]`, `‖x‖_r ≤ norm_bound`).
///
/// Even samples pair two independent histories; odd samples pair a history
/// with perturbations of relative size `1e-3` and `1e-5` in one direction,
/// which is what the growth flags compare. Time shifts use `h = 1e-2` and
/// `h = 1e-4`. Quotients are reported raw, without inflation.
pub fn check_almost_lipschitz<T: Real>(
    v: &LyapunovFunctional<T>,
    delay: T,
    dim: usize,
    region: Region,
    samples: usize,
    seed: u64,
) -> AlmostLipschitzReport {
    let sampler = HistorySampler::new(region.norm_bound);
    let unit = HistorySampler::new(1.0);
    let big = T::lit(region.norm_bound.max(1e-12));
    let rows: Vec<[f64; 5]> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut g = rng::stream(seed, i as u64);
            let t = T::lit(region.sample_t(&mut g));
            let x: HistorySegment<T> = sampler.sample(delay, dim, &mut g);
            let vx = v.eval(t, &x);
            let q = |y: &HistorySegment<T>| -> f64 {
                let dist = x.distance(y).unwrap_or(T::zero());
                if dist > T::zero() {
                    ((v.eval(t, y) - vx).abs() / dist).as_f64()
                } else {
                    0.0
                }
            };
            let (far, coarse, fine) = if i % 2 == 0 {
                let y: HistorySegment<T> = sampler.sample(delay, dim, &mut g);
                (q(&y), 0.0, 0.0)
            } else {
                let p: HistorySegment<T> = unit.sample(delay, dim, &mut g);
                let a = q(&perturbed(&x, &p, big * T::lit(1e-3)));
                let b = q(&perturbed(&x, &p, big * T::lit(1e-5)));
                (0.0, a, b)
            };
            let slope = T::one() + max_slope(&x);
            let shift = |h: f64| {
                let ht = T::lit(h);
                ((v.eval(t + ht, &x) - vx).abs() / (ht * slope)).as_f64()
            };
            let row = [
                far.max(coarse).max(fine),
                coarse,
                fine,
                shift(1e-2),
                shift(1e-4),
            ];
            if row.iter().all(|q| q.is_finite()) {
                row
            } else {
                [f64::INFINITY; 5]
            }
        })
        .collect();
    let col = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
    let grows = |coarse: f64, fine: f64| fine > GROWTH_FACTOR * coarse + 1e-12;
    AlmostLipschitzReport {
        m_hat: col(0),
        p_hat: col(3).max(col(4)),
        region,
        samples,
        m_unbounded_suspected: grows(col(1), col(2)),
        p_unbounded_suspected: grows(col(3), col(4)),
    }
}
