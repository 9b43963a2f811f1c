//! Right-continuous piecewise-constant disturbance and input signals.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Real;

/// Closed box `[lo_1, hi_1] × … × [lo_l, hi_l]`; serialised as `[[lo, hi], …]`.
///
/// A zero-dimensional box describes a system without that channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[T; 2]>", into = "Vec<[T; 2]>")]
#[serde(bound = "")]
pub struct DomainBox<T: Real> {
    bounds: Vec<[T; 2]>,
}

impl<T: Real> TryFrom<Vec<[T; 2]>> for DomainBox<T> {
    type Error = Error;
    fn try_from(bounds: Vec<[T; 2]>) -> Result<Self> {
        DomainBox::new(bounds)
    }
}

impl<T: Real> From<DomainBox<T>> for Vec<[T; 2]> {
    fn from(b: DomainBox<T>) -> Self {
        b.bounds
    }
}

impl<T: Real> DomainBox<T> {
    pub fn new(bounds: Vec<[T; 2]>) -> Result<Self> {
        for [lo, hi] in &bounds {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Malformed {
                    what: "domain box",
                    reason: format!("interval [{lo}, {hi}] must be finite and ordered"),
                });
            }
        }
        Ok(Self { bounds })
    }

    /// `[-a, a]^dim`.
    pub fn symmetric(dim: usize, a: T) -> Result<Self> {
        Self::new(vec![[-a, a]; dim])
    }

    pub fn empty() -> Self {
        Self { bounds: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[[T; 2]] {
        &self.bounds
    }

    pub fn contains(&self, v: &[T]) -> bool {
        v.len() == self.dim()
            && self
                .bounds
                .iter()
                .zip(v)
                .all(|([lo, hi], x)| x >= lo && x <= hi)
    }

    /// Midpoint, or zero when the box contains zero.
    pub fn nominal(&self) -> Vec<T> {
        self.bounds
            .iter()
            .map(|&[lo, hi]| {
                if lo <= T::zero() && hi >= T::zero() {
                    T::zero()
                } else {
                    (lo + hi) * T::lit(0.5)
                }
            })
            .collect()
    }

    /// Every vertex of the box, at most `2^dim` (duplicates removed for
    /// degenerate intervals).
    pub fn corners(&self) -> Vec<Vec<T>> {
        let mut out: Vec<Vec<T>> = vec![Vec::new()];
        for &[lo, hi] in &self.bounds {
            let ends: &[T] = if lo == hi { &[lo][..] } else { &[lo, hi][..] };
            let ends = ends.to_vec();
            out = out
                .into_iter()
                .flat_map(|p| {
                    ends.iter().map(move |&e| {
                        let mut q = p.clone();
                        q.push(e);
                        q
                    })
                })
                .collect();
        }
        out
    }

    /// Uniform draw; a singleton interval yields its endpoint.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        self.bounds
            .iter()
            .map(|&[lo, hi]| {
                if lo == hi {
                    lo
                } else {
                    let u: f64 = rng.random();
                    (lo + (hi - lo) * T::lit(u)).min(hi)
                }
            })
            .collect()
    }

    /// Largest Euclidean norm over the box.
    pub fn max_norm(&self) -> T {
        self.bounds
            .iter()
            .map(|&[lo, hi]| {
                let m = lo.abs().max(hi.abs());
                m * m
            })
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }
}

/// Right-continuous piecewise-constant signal: `values[k]` is active on
/// `[switch_times[k-1], switch_times[k])`, `values[0]` before the first
/// switch and the last value forever after the last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalWire<T>", into = "SignalWire<T>")]
#[serde(bound = "")]
pub struct PiecewiseSignal<T: Real> {
    switch_times: Vec<T>,
    values: Vec<Vec<T>>,
    domain: DomainBox<T>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SignalWire<T: Real> {
    pub switch_times: Vec<T>,
    pub values: Vec<Vec<T>>,
    #[serde(rename = "box")]
    pub domain: DomainBox<T>,
}

impl<T: Real> TryFrom<SignalWire<T>> for PiecewiseSignal<T> {
    type Error = Error;
    fn try_from(w: SignalWire<T>) -> Result<Self> {
        PiecewiseSignal::new(w.switch_times, w.values, w.domain)
    }
}

impl<T: Real> From<PiecewiseSignal<T>> for SignalWire<T> {
    fn from(s: PiecewiseSignal<T>) -> Self {
        SignalWire {
            switch_times: s.switch_times,
            values: s.values,
            domain: s.domain,
        }
    }
}

impl<T: Real> PiecewiseSignal<T> {
    pub fn new(switch_times: Vec<T>, values: Vec<Vec<T>>, domain: DomainBox<T>) -> Result<Self> {
        if values.len() != switch_times.len() + 1 {
            return Err(Error::Dimension {
                what: "signal values (one more than switch times)",
                expected: switch_times.len() + 1,
                got: values.len(),
            });
        }
        if switch_times
            .iter()
            .any(|t| !t.is_finite() || *t < T::zero())
            || switch_times.windows(2).any(|w| !(w[1] > w[0]))
        {
            return Err(Error::Malformed {
                what: "signal",
                reason: "switch times must be finite, nonnegative and strictly increasing".into(),
            });
        }
        if let Some(v) = values.iter().find(|v| !domain.contains(v)) {
            return Err(Error::Malformed {
                what: "signal",
                reason: format!("value {v:?} outside its domain box"),
            });
        }
        Ok(Self {
            switch_times,
            values,
            domain,
        })
    }

    pub fn constant(value: Vec<T>, domain: DomainBox<T>) -> Result<Self> {
        Self::new(Vec::new(), vec![value], domain)
    }

    /// Constant signal at the box's nominal value (zero when admissible).
    pub fn nominal(domain: DomainBox<T>) -> Self {
        let v = domain.nominal();
        Self {
            switch_times: Vec::new(),
            values: vec![v],
            domain,
        }
    }

    /// Constant signals at every corner of the box.
    pub fn corners(domain: &DomainBox<T>) -> Vec<Self> {
        domain
            .corners()
            .into_iter()
            .map(|c| Self {
                switch_times: Vec::new(),
                values: vec![c],
                domain: domain.clone(),
            })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &DomainBox<T> {
        &self.domain
    }

    pub fn switch_times(&self) -> &[T] {
        &self.switch_times
    }

    pub fn values(&self) -> &[Vec<T>] {
        &self.values
    }

    /// Value active at `t` (right limit at switch times).
    pub fn eval(&self, t: T) -> &[T] {
        let k = self.switch_times.partition_point(|s| *s <= t);
        &self.values[k]
    }

    /// Switch times strictly inside `(a, b)`.
    pub fn switches_between(&self, a: T, b: T) -> impl Iterator<Item = T> + '_ {
        let start = self.switch_times.partition_point(|s| *s <= a);
        self.switch_times[start..]
            .iter()
            .copied()
            .take_while(move |s| *s < b)
    }

    /// `t ↦ self(t + offset)` restricted to `t ≥ 0`.
    pub fn shift(&self, offset: T) -> Self {
        let start = self.switch_times.partition_point(|s| *s <= offset);
        let switch_times = self.switch_times[start..]
            .iter()
            .map(|s| *s - offset)
            .collect();
        let values = self.values[start..].to_vec();
        Self {
            switch_times,
            values,
            domain: self.domain.clone(),
        }
    }

    /// `max |value|` over all pieces.
    pub fn sup_norm(&self) -> T {
        self.values
            .iter()
            .map(|v| crate::scalar::norm(v))
            .fold(T::zero(), T::max)
    }
}

/// Recipe for random signals: renewal switching with exponential dwell
/// times and values uniform in the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SignalSpec<T: Real> {
    #[serde(rename = "box")]
    pub domain: DomainBox<T>,
    pub horizon: T,
    pub mean_dwell: T,
    pub seed: u64,
}

impl<T: Real> SignalSpec<T> {
    pub fn new(domain: DomainBox<T>, horizon: T, mean_dwell: T, seed: u64) -> Result<Self> {
        let spec = Self {
            domain,
            horizon,
            mean_dwell,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > T::zero()) || !self.horizon.is_finite() {
            return Err(Error::Config(format!(
                "signal horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.mean_dwell > T::zero()) || !self.mean_dwell.is_finite() {
            return Err(Error::Config(format!(
                "signal mean dwell must be positive, got {}",
                self.mean_dwell
            )));
        }
        Ok(())
    }

    /// The signal drawn from stream 0 of the seed.
    pub fn sample(&self) -> PiecewiseSignal<T> {
        self.sample_nth(0)
    }

    /// The `index`-th member of the ensemble defined by the seed.
    pub fn sample_nth(&self, index: u64) -> PiecewiseSignal<T> {
        self.sample_with(&mut rng::stream(self.seed, index))
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> PiecewiseSignal<T> {
        let rate = 1.0 / self.mean_dwell.as_f64();
        let dwell = Exp::new(rate).expect("positive rate");
        let horizon = self.horizon.as_f64();
        let mut switch_times = Vec::new();
        let mut values = vec![self.domain.sample(rng)];
        let mut t = 0.0;
        loop {
            t += dwell.sample(rng);
            if !(t < horizon) {
                break;
            }
            let tt = T::lit(t);
            if switch_times.last().is_some_and(|l| tt <= *l) {
                continue;
            }
            switch_times.push(tt);
            values.push(self.domain.sample(rng));
        }
        PiecewiseSignal {
            switch_times,
            values,
            domain: self.domain.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> DomainBox<f64> {
        DomainBox::new(vec![[0.0, 1.0]]).unwrap()
    }

    #[test]
    fn evaluation_is_right_continuous() {
        let s = PiecewiseSignal::new(vec![2.0], vec![vec![0.0], vec![1.0]], unit()).unwrap();
        assert_eq!(s.eval(2.0), &[1.0]);
        assert_eq!(s.eval(1.999), &[0.0]);
        assert_eq!(s.eval(1e6), &[1.0]);
        let c = PiecewiseSignal::constant(vec![1.0], unit()).unwrap();
        assert_eq!(c.eval(123.0), &[1.0]);
    }

    #[test]
    fn construction_validates() {
        assert!(PiecewiseSignal::new(vec![1.0], vec![vec![0.0]], unit()).is_err());
        assert!(PiecewiseSignal::new(vec![], vec![vec![2.0]], unit()).is_err());
        assert!(PiecewiseSignal::new(vec![2.0, 1.0], vec![vec![0.0]; 3], unit()).is_err());
        assert!(DomainBox::new(vec![[1.0, 0.0]]).is_err());
    }

    #[test]
    fn singleton_box_gives_zero_signal() {
        let b = DomainBox::new(vec![[0.0, 0.0]]).unwrap();
        for seed in 0..20 {
            let s = SignalSpec::new(b.clone(), 10.0, 0.5, seed)
                .unwrap()
                .sample();
            assert!(s.values().iter().all(|v| v == &[0.0]));
        }
    }

    #[test]
    fn long_dwell_gives_constant_signal() {
        let s = SignalSpec::new(unit(), 1.0, 1e12, 3).unwrap().sample();
        assert!(s.switch_times().is_empty());
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = SignalSpec::new(unit(), 50.0, 1.0, 42).unwrap();
        assert_eq!(spec.sample(), spec.sample());
        assert_eq!(spec.sample_nth(3), spec.sample_nth(3));
        assert_ne!(spec.sample_nth(3), spec.sample_nth(4));
    }

    #[test]
    fn shift_matches_translation() {
        let spec = SignalSpec::new(unit(), 20.0, 0.7, 9).unwrap();
        let s = spec.sample();
        let p = s.shift(5.0);
        for i in 0..200 {
            let t = i as f64 * 0.073;
            assert_eq!(p.eval(t), s.eval(t + 5.0));
        }
    }

    #[test]
    fn json_form() {
        let s = PiecewiseSignal::new(vec![2.0], vec![vec![0.0], vec![1.0]], unit()).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(
            j,
            r#"{"switch_times":[2.0],"values":[[0.0],[1.0]],"box":[[0.0,1.0]]}"#
        );
        let back: PiecewiseSignal<f64> = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        let bad = r#"{"switch_times":[],"values":[[3.0]],"box":[[0.0,1.0]]}"#;
        assert!(serde_json::from_str::<PiecewiseSignal<f64>>(bad).is_err());
    }

    #[test]
    fn corners_enumerate_vertices() {
        let b = DomainBox::new(vec![[-1.0, 1.0], [0.0, 0.0], [2.0, 3.0]]).unwrap();
        assert_eq!(b.corners().len(), 4);
        assert_eq!(DomainBox::<f64>::empty().corners(), vec![Vec::<f64>::new()]);
    }
}
