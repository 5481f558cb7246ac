//! Exact statistics of lattice counts in thin square annuli, and a naive reference
//! implementation of the count variance over an offset grid.

use std::fmt::Display;

use num_traits::{FromPrimitive, Num, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::lattice::Annulus;
use crate::scalar::Real;
use crate::vector::Vect;

/// Scalars the square-annulus oracle can run in: `BigRational` (or `Ratio<i64>` for coarse `t`) for
/// exact values, `f64` for speed.
pub trait OracleScalar: Clone + Num + PartialOrd + FromPrimitive + ToPrimitive + Display {}

impl<S: Clone + Num + PartialOrd + FromPrimitive + ToPrimitive + Display> OracleScalar for S {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Shell `(n - t/2, n + t/2]` of the sup-norm.
    A,
    /// Shell `(n, n + t]` of the sup-norm.
    B,
}

impl Variant {
    /// `(r, t)` of the [`Annulus`] with the same shell for the unit square `[-1, 1]^2`.
    pub fn annulus_parameters(self, n: u32, t: f64) -> (f64, f64) {
        match self {
            Variant::A => (n as f64, t),
            Variant::B => (n as f64 + t / 2.0, t),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SquareAnnulusStats<S> {
    pub variant: Variant,
    pub n: u32,
    pub t: S,
    pub mean: S,
    pub variance: S,
    /// `(count value, measure of the translations with that count)`, measures summing to 1.
    pub value_distribution: Vec<(u64, S)>,
}

fn int<S: OracleScalar>(k: i64) -> S {
    S::from_i64(k).expect("integer fits the scalar type")
}

/// Distribution, mean and variance of the lattice count of a translated square annulus
/// with `0 < t < 1/2`.
pub fn square_stats<S: OracleScalar>(variant: Variant, n: u32, t: S) -> Result<SquareAnnulusStats<S>> {
    let half = S::one() / int(2);
    if !(t > S::zero() && t < half) {
        return domain(format!("square oracle needs 0 < t < 1/2, got {t}"));
    }
    if n == 0 {
        return domain("square oracle needs n >= 1");
    }
    let nn: S = int(n as i64);
    let t2 = t.clone() * t.clone();
    let (high, low, mean, variance) = match variant {
        Variant::A => {
            let high = (8 * n as u64, t2.clone());
            let low = (4 * n as u64, int::<S>(2) * t.clone() - int::<S>(2) * t2.clone());
            let mean = int::<S>(8) * nn.clone() * t.clone();
            let variance = int::<S>(32) * nn.clone() * nn.clone() * t.clone() - int::<S>(32) * nn.clone() * nn * t2;
            (high, low, mean, variance)
        }
        Variant::B => {
            let t3 = t2.clone() * t.clone();
            let t4 = t2.clone() * t2.clone();
            let high = (4 * n as u64 + 1, int::<S>(4) * t2.clone());
            let low = (2 * n as u64, int::<S>(4) * t.clone() - int::<S>(8) * t2.clone());
            let mean = int::<S>(8) * nn.clone() * t.clone() + int::<S>(4) * t2.clone();
            let variance = int::<S>(16) * nn.clone() * nn.clone() * t.clone() - int::<S>(32) * nn.clone() * nn.clone() * t2.clone()
                + int::<S>(32) * nn.clone() * t2.clone()
                - int::<S>(64) * nn * t3
                + int::<S>(4) * t2
                - int::<S>(16) * t4;
            (high, low, mean, variance)
        }
    };
    let rest = S::one() - high.1.clone() - low.1.clone();
    Ok(SquareAnnulusStats { variant, n, t, mean, variance, value_distribution: vec![(0, rest), low, high] })
}

impl<S: OracleScalar> SquareAnnulusStats<S> {
    /// `(sum measure * value, sum measure * (value - mean)^2)` from the distribution.
    pub fn distribution_moments(&self) -> (S, S) {
        let mut mean = S::zero();
        for (v, m) in &self.value_distribution {
            mean = mean + m.clone() * int::<S>(*v as i64);
        }
        let mut var = S::zero();
        for (v, m) in &self.value_distribution {
            let dev = int::<S>(*v as i64) - mean.clone();
            var = var + m.clone() * dev.clone() * dev;
        }
        (mean, var)
    }

    pub fn report(&self) -> OracleReport {
        let f = |s: &S| s.to_f64().unwrap_or(f64::NAN);
        OracleReport {
            variant: self.variant,
            n: self.n,
            t: f(&self.t),
            t_exact: self.t.to_string(),
            mean: f(&self.mean),
            mean_exact: self.mean.to_string(),
            variance: f(&self.variance),
            variance_exact: self.variance.to_string(),
            distribution: self
                .value_distribution
                .iter()
                .map(|(v, m)| DistributionEntry { value: *v, measure: f(m), measure_exact: m.to_string() })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistributionEntry {
    pub value: u64,
    pub measure: f64,
    pub measure_exact: String,
}

/// JSON form of [`SquareAnnulusStats`], with exact values as strings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub variant: Variant,
    pub n: u32,
    pub t: f64,
    pub t_exact: String,
    pub mean: f64,
    pub mean_exact: String,
    pub variance: f64,
    pub variance_exact: String,
    pub distribution: Vec<DistributionEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BruteForceResult {
    pub grid: u32,
    pub mean: f64,
    pub variance: f64,
}

/// Mean and variance of the shell count over the offset grid `((i + 1/2)/m)^d`, by testing
/// every lattice point of a bounding box against the gauge. Deliberately simple and serial.
pub fn brute_force_variance<F: Real>(annulus: &Annulus<F>, m: u32) -> Result<BruteForceResult> {
    if m < 2 {
        return domain(format!("grid size must be >= 2, got {m}"));
    }
    let dim = annulus.dim();
    let body = annulus.body();
    let reach = (0..dim)
        .map(|axis| {
            let (down, up) = body.axis_extent(axis);
            (annulus.outer() * down.max(up)).ceil().to_i64().unwrap_or(0) + 1
        })
        .max()
        .unwrap_or(1);
    let count_at = |x: &Vect<F>| -> i128 {
        let mut count = 0;
        let mut k = vec![-reach; dim];
        loop {
            let mut y = *x;
            for i in 0..dim {
                y[i] = y[i] + F::from_int(k[i]);
            }
            if annulus.contains(&y) {
                count += 1;
            }
            // odometer over the box
            let mut axis = 0;
            loop {
                if axis == dim {
                    return count;
                }
                k[axis] += 1;
                if k[axis] <= reach {
                    break;
                }
                k[axis] = -reach;
                axis += 1;
            }
        }
    };
    let (mut n, mut s1, mut s2) = (0i128, 0i128, 0i128);
    let total = (m as u64).pow(dim as u32);
    for index in 0..total {
        let mut x = Vect::zeros(dim);
        let mut rest = index;
        for axis in (0..dim).rev() {
            x[axis] = F::lit(((rest % m as u64) as f64 + 0.5) / m as f64);
            rest /= m as u64;
        }
        let c = if annulus.t() == F::zero() { 0 } else { count_at(&x) };
        n += 1;
        s1 += c;
        s2 += c * c;
    }
    let nf = n as f64;
    Ok(BruteForceResult { grid: m, mean: s1 as f64 / nf, variance: (n * s2 - s1 * s1) as f64 / (nf * nf) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::ConvexBody;
    use crate::lattice::{sample_moments, SamplingScheme};
    use num_rational::Rational64;

    fn eighth() -> Rational64 {
        Rational64::new(1, 8)
    }

    #[test]
    fn variant_a_example() {
        let s = square_stats(Variant::A, 3, eighth()).unwrap();
        assert_eq!(s.mean, Rational64::from_integer(3));
        assert_eq!(s.variance, Rational64::new(63, 2));
        assert_eq!(s.distribution_moments(), (s.mean, s.variance));
    }

    #[test]
    fn variant_b_example() {
        let s = square_stats(Variant::B, 3, eighth()).unwrap();
        assert_eq!(s.mean, Rational64::new(49, 16));
        assert_eq!(s.variance, Rational64::new(1_879_500, 128_000));
        assert_eq!(s.variance.to_f64().unwrap(), 14.683_593_75);
        assert_eq!(s.distribution_moments(), (s.mean, s.variance));
    }

    #[test]
    fn variance_dwarfs_mean_as_t_shrinks() {
        let mut last = 0.0;
        for k in 2..12 {
            let s = square_stats(Variant::A, 5, Rational64::new(1, 1 << k)).unwrap();
            let ratio = (s.variance / s.mean).to_f64().unwrap();
            assert!(ratio > last && ratio < 20.0);
            last = ratio;
        }
        assert!(last > 19.9);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(square_stats(Variant::A, 3, Rational64::new(1, 2)).is_err());
        assert!(square_stats(Variant::A, 3, Rational64::from_integer(0)).is_err());
        assert!(square_stats(Variant::B, 0, eighth()).is_err());
        assert!(square_stats(Variant::A, 3, 0.125f64).is_ok());
    }

    #[test]
    fn float_and_rational_agree() {
        let exact = square_stats(Variant::B, 7, Rational64::new(3, 32)).unwrap();
        let float = square_stats(Variant::B, 7, 3.0 / 32.0).unwrap();
        assert!((exact.variance.to_f64().unwrap() - float.variance).abs() < 1e-12);
    }

    #[test]
    fn brute_force_matches_fast_path_and_oracle() {
        let square = ConvexBody::<f64>::box_body(&[1.0, 1.0]).unwrap();
        for variant in [Variant::A, Variant::B] {
            let (r, t) = variant.annulus_parameters(3, 0.125);
            let a = Annulus::new(square.clone(), r, t).unwrap();
            let brute = brute_force_variance(&a, 64).unwrap();
            let fast = sample_moments(&a, SamplingScheme::Grid { m: 64 }, 2).unwrap();
            assert_eq!((brute.mean, brute.variance), (fast.mean, fast.variance));
            let exact = square_stats(variant, 3, 0.125).unwrap();
            assert!((brute.variance - exact.variance).abs() < 1e-9 * exact.variance, "{variant:?}");
        }
        let disk = Annulus::new(ConvexBody::<f64>::ball(2, 1.0).unwrap(), 2.5, 0.5).unwrap();
        let brute = brute_force_variance(&disk, 32).unwrap();
        let fast = sample_moments(&disk, SamplingScheme::Grid { m: 32 }, 2).unwrap();
        assert_eq!((brute.mean, brute.variance), (fast.mean, fast.variance));
    }

    #[test]
    fn report_json() {
        let json = serde_json::to_string(&square_stats(Variant::A, 3, eighth()).unwrap().report()).unwrap();
        assert!(json.contains(r#""variance_exact":"63/2""#), "{json}");
    }
}
