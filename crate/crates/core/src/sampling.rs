//! Per-trial drain-time draws.
//!
//! A component's drain time is drawn from a normal distribution clamped to
//! the component's observed `[min, max]`. The location and scale of the
//! underlying normal are solved so that the clamped distribution has the
//! configured mean and standard deviation: clamping with the raw
//! `(mean, sd)` would bias both, and the tabulated spreads are often wider
//! than any unclamped bell shape on the same interval can produce.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{Continuous, ContinuousCDF, Normal as StdNormal};

use crate::model::ComponentSpec;

const BISECTION_ITERS: usize = 90;

#[derive(Debug, Clone, PartialEq)]
pub struct DrainTimeSampler {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    /// Location and scale of the unclamped normal; `None` for a point mass.
    parent: Option<(f64, f64)>,
}

impl DrainTimeSampler {
    pub fn new(mean: f64, sd: f64, min: f64, max: f64) -> Self {
        let degenerate = !(sd > 0.0) || !(min < max) || !(mean > min && mean < max);
        let parent = if degenerate {
            None
        } else {
            Some(solve_parent(mean, sd, min, max))
        };
        Self {
            mean,
            sd,
            min,
            max,
            parent,
        }
    }

    pub fn for_component(spec: &ComponentSpec) -> Self {
        Self::new(
            spec.drain_time_mean,
            spec.drain_time_sd,
            spec.drain_time_min,
            spec.drain_time_max,
        )
    }

    pub fn parent(&self) -> Option<(f64, f64)> {
        self.parent
    }

    /// Analytic mean and standard deviation of the draws.
    pub fn moments(&self) -> (f64, f64) {
        match self.parent {
            Some((loc, scale)) => clamped_moments(loc, scale, self.min, self.max),
            None => (self.mean.clamp(self.min, self.max), 0.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.parent {
            Some((loc, scale)) => {
                let normal = Normal::new(loc, scale).expect("scale is positive and finite");
                normal.sample(rng).clamp(self.min, self.max)
            }
            None => self.mean.clamp(self.min, self.max),
        }
    }
}

/// Mean and sd of `clamp(X, a, b)` with `X ~ N(loc, scale)`.
pub fn clamped_moments(loc: f64, scale: f64, a: f64, b: f64) -> (f64, f64) {
    let std = StdNormal::standard();
    // centre on `a` to keep the second moment well conditioned
    let (mu, hi) = (loc - a, b - a);
    let alpha = -mu / scale;
    let beta = (hi - mu) / scale;
    let (cdf_a, sf_b) = (std.cdf(alpha), std.sf(beta));
    let inside = (1.0 - cdf_a - sf_b).max(0.0);
    let (pdf_a, pdf_b) = (std.pdf(alpha), std.pdf(beta));
    let m1_in = mu * inside + scale * (pdf_a - pdf_b);
    let m2_in = (mu * mu + scale * scale) * inside
        + 2.0 * mu * scale * (pdf_a - pdf_b)
        + scale * scale * (alpha * pdf_a - beta * pdf_b);
    let e1 = hi * sf_b + m1_in;
    let e2 = hi * hi * sf_b + m2_in;
    (a + e1, (e2 - e1 * e1).max(0.0).sqrt())
}

/// Location giving clamped mean `mean` at a fixed scale; the clamped mean
/// is increasing in the location.
fn location_for_mean(mean: f64, scale: f64, a: f64, b: f64) -> f64 {
    let span = (b - a) + 40.0 * scale;
    let (mut lo, mut hi) = (a - span, b + span);
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if clamped_moments(mid, scale, a, b).0 < mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves for the parent normal. The attainable sd at a fixed mean grows
/// with the scale towards the two-point limit `sqrt((mean-a)(b-mean))`;
/// targets beyond it get the widest attainable spread.
fn solve_parent(mean: f64, sd: f64, a: f64, b: f64) -> (f64, f64) {
    let sd_at = |scale: f64| {
        let loc = location_for_mean(mean, scale, a, b);
        (loc, clamped_moments(loc, scale, a, b).1)
    };
    let mut lo = 0.0;
    let mut hi = sd.max(b - a);
    while sd_at(hi).1 < sd {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 * (b - a) {
            return (sd_at(hi).0, hi);
        }
    }
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if sd_at(mid).1 < sd {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let scale = 0.5 * (lo + hi);
    (location_for_mean(mean, scale, a, b), scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Moments of clamp(X) by Simpson quadrature over the parent density
    /// plus the two boundary masses.
    fn quadrature_moments(loc: f64, scale: f64, a: f64, b: f64) -> (f64, f64) {
        let n = 20_000;
        let h = (b - a) / n as f64;
        let pdf = |x: f64| {
            let z = (x - loc) / scale;
            (-0.5 * z * z).exp() / (scale * (2.0 * std::f64::consts::PI).sqrt())
        };
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for i in 0..=n {
            let x = a + i as f64 * h;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let p = pdf(x) * w * h / 3.0;
            m0 += p;
            m1 += p * x;
            m2 += p * x * x;
        }
        let std = StdNormal::standard();
        let pa = std.cdf((a - loc) / scale);
        let pb = 1.0 - pa - m0;
        let e1 = m1 + a * pa + b * pb;
        let e2 = m2 + a * a * pa + b * b * pb;
        (e1, (e2 - e1 * e1).sqrt())
    }

    #[test]
    fn analytic_moments_match_quadrature() {
        for &(loc, scale, a, b) in &[
            (7.4, 1.075, 6.0, 10.0),
            (18.27, 4.86, 15.0, 19.0),
            (-3.0, 2.0, 0.0, 5.0),
            (24.8, 6.69, 18.0, 36.0),
        ] {
            let (m, s) = clamped_moments(loc, scale, a, b);
            let (qm, qs) = quadrature_moments(loc, scale, a, b);
            assert!((m - qm).abs() < 1e-8, "{m} vs {qm}");
            assert!((s - qs).abs() < 1e-7, "{s} vs {qs}");
        }
    }

    #[test]
    fn every_table_row_is_matched() {
        for spec in dataset::published_registry()
            .iter()
            .filter(|c| c.drain_time_sd > 0.0)
        {
            let sampler = DrainTimeSampler::for_component(spec);
            let (loc, scale) = sampler.parent().expect("non-degenerate");
            let (m, s) = quadrature_moments(loc, scale, spec.drain_time_min, spec.drain_time_max);
            assert!(
                (m - spec.drain_time_mean).abs() < 1e-6,
                "{} mean {m}",
                spec.id
            );
            assert!((s - spec.drain_time_sd).abs() < 1e-6, "{} sd {s}", spec.id);
        }
    }

    #[test]
    fn draws_stay_in_bounds() {
        let sampler = DrainTimeSampler::new(17.4, 1.734, 15.0, 19.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let t = sampler.sample(&mut rng);
            assert!((15.0..=19.0).contains(&t));
        }
    }

    #[test]
    fn degenerate_inputs_are_point_masses() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            DrainTimeSampler::new(8.2, 0.0, 8.2, 8.2).sample(&mut rng),
            8.2
        );
        assert_eq!(
            DrainTimeSampler::new(5.0, 1.0, 5.0, 9.0).sample(&mut rng),
            5.0
        );
        assert_eq!(
            DrainTimeSampler::new(5.0, 1.0, 5.0, 9.0).moments(),
            (5.0, 0.0)
        );
    }

    #[test]
    fn unattainable_spread_saturates() {
        // two-point limit is sqrt(1 * 1) = 1
        let sampler = DrainTimeSampler::new(1.0, 3.0, 0.0, 2.0);
        let (m, s) = sampler.moments();
        assert!((m - 1.0).abs() < 1e-6);
        assert!(s <= 1.0 && s > 0.99, "{s}");
    }
}
