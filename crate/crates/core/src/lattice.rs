//! Lattice points in translated dilates and shells, and their moments over the torus.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::ConvexBody;
use crate::error::{domain, Error, Result};
use crate::scalar::Real;
use crate::vector::Vect;

/// Translations handled per parallel job; also the block size of the random stream.
const CHUNK: usize = 4096;

/// The shell `{ y : r - t/2 < gauge(y) <= r + t/2 }`.
#[derive(Clone, Debug, PartialEq)]
pub struct Annulus<F> {
    body: ConvexBody<F>,
    r: F,
    t: F,
}

impl<F: Real> Annulus<F> {
    pub fn new(body: ConvexBody<F>, r: F, t: F) -> Result<Self> {
        if !(r > F::zero()) || !r.is_finite() {
            return domain(format!("r must be positive and finite, got {r}"));
        }
        if !(t >= F::zero()) || t > r + r {
            return domain(format!("t must lie in [0, 2r] = [0, {}], got {t}", r + r));
        }
        Ok(Self { body, r, t })
    }

    pub fn body(&self) -> &ConvexBody<F> {
        &self.body
    }

    pub fn r(&self) -> F {
        self.r
    }

    pub fn t(&self) -> F {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.body.dim()
    }

    pub fn inner(&self) -> F {
        self.r - self.t / F::lit(2.0)
    }

    pub fn outer(&self) -> F {
        self.r + self.t / F::lit(2.0)
    }

    pub fn contains(&self, y: &Vect<F>) -> bool {
        let g = self.body.gauge(y);
        self.inner() < g && g <= self.outer()
    }

    /// `((r + t/2)^d - (r - t/2)^d) |body|`.
    pub fn volume(&self) -> F {
        annulus_volume(self)
    }
}

pub fn annulus_volume<F: Real>(annulus: &Annulus<F>) -> F {
    let d = annulus.dim() as i32;
    (annulus.outer().powi(d) - annulus.inner().powi(d)) * annulus.body.volume()
}

fn to_i64<F: Real>(x: F) -> i64 {
    x.to_i64().expect("lattice coordinate out of range")
}

/// Integer range of `k` with `k + offset` covering `[lo, hi]`, padded by one.
fn index_range<F: Real>(lo: F, hi: F, offset: F) -> std::ops::RangeInclusive<i64> {
    to_i64((lo - offset).ceil()) - 1..=to_i64((hi - offset).floor()) + 1
}

/// Number of `j` with `gauge(fixed, j + shift) <= level`, starting from the chord
/// endpoints and settling ties with the gauge itself.
fn row_count<F: Real>(body: &ConvexBody<F>, point: &mut Vect<F>, shift: F, level: F, chord: (F, F)) -> u64 {
    let last = body.dim() - 1;
    let mut inside = |j: i64| {
        point[last] = F::from_int(j) + shift;
        body.gauge(point) <= level
    };
    let mut hi = to_i64((chord.1 - shift).floor());
    let mut lo = to_i64((chord.0 - shift).ceil());
    while inside(hi + 1) {
        hi += 1;
    }
    while hi >= lo && !inside(hi) {
        hi -= 1;
    }
    while inside(lo - 1) {
        lo -= 1;
    }
    while lo <= hi && !inside(lo) {
        lo += 1;
    }
    if hi < lo {
        0
    } else {
        (hi - lo + 1) as u64
    }
}

/// `#{k : gauge(k + x) <= outer}` and, if given, the same count at `inner`.
fn count_levels<F: Real>(body: &ConvexBody<F>, x: &Vect<F>, outer: F, inner: Option<F>) -> (u64, u64) {
    let dim = body.dim();
    let mut total = (0u64, 0u64);
    let mut fixed = [F::zero(); 2];
    let mut row = |fixed: &[F]| {
        let Some(chord) = body.chord(fixed, outer) else { return };
        let mut point = Vect::zeros(dim);
        for (i, f) in fixed.iter().enumerate() {
            point[i] = *f;
        }
        total.0 += row_count(body, &mut point, x[dim - 1], outer, chord);
        if let Some(level) = inner {
            if let Some(chord) = body.chord(fixed, level) {
                total.1 += row_count(body, &mut point, x[dim - 1], level, chord);
            }
        }
    };
    let (down0, up0) = body.axis_extent(0);
    for k0 in index_range(-outer * down0, outer * up0, x[0]) {
        fixed[0] = F::from_int(k0) + x[0];
        if dim == 2 {
            row(&fixed[..1]);
        } else {
            let (down1, up1) = body.axis_extent(1);
            for k1 in index_range(-outer * down1, outer * up1, x[1]) {
                fixed[1] = F::from_int(k1) + x[1];
                row(&fixed[..2]);
            }
        }
    }
    total
}

/// `#{k in Z^d : gauge(k + x) <= r}`.
pub fn dilate_count<F: Real>(body: &ConvexBody<F>, r: F, x: &Vect<F>) -> u64 {
    assert!(r >= F::zero(), "dilation must be nonnegative");
    count_levels(body, x, r, None).0
}

/// `#{k in Z^d : r - t/2 < gauge(k + x) <= r + t/2}`.
pub fn annulus_count<F: Real>(annulus: &Annulus<F>, x: &Vect<F>) -> u64 {
    if annulus.t == F::zero() {
        return 0;
    }
    let (outer, inner) = count_levels(&annulus.body, x, annulus.outer(), Some(annulus.inner()));
    outer - inner
}

/// How the torus is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplingScheme {
    /// Offset product grid `((i + 1/2) / m)` per axis.
    Grid { m: u32 },
    /// Independent uniform points from a counter-based stream.
    Random { samples: u64, seed: u64 },
}

impl SamplingScheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SamplingScheme::Grid { m } if m < 2 => domain(format!("grid size must be >= 2, got {m}")),
            SamplingScheme::Random { samples, .. } if samples < 2 => {
                domain(format!("sample count must be >= 2, got {samples}"))
            }
            _ => Ok(()),
        }
    }

    pub fn len(&self, dim: usize) -> u64 {
        match *self {
            SamplingScheme::Grid { m } => (m as u64).pow(dim as u32),
            SamplingScheme::Random { samples, .. } => samples,
        }
    }

    pub fn is_empty(&self, dim: usize) -> bool {
        self.len(dim) == 0
    }

    /// Translations `start..end`, identical however the range is split.
    fn translations<F: Real>(&self, dim: usize, start: u64, end: u64) -> Vec<Vect<F>> {
        match *self {
            SamplingScheme::Grid { m } => (start..end)
                .map(|mut i| {
                    let mut x = Vect::zeros(dim);
                    for axis in (0..dim).rev() {
                        let j = i % m as u64;
                        i /= m as u64;
                        x[axis] = F::lit((j as f64 + 0.5) / m as f64);
                    }
                    x
                })
                .collect(),
            SamplingScheme::Random { seed, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                // each f64 consumes two 32-bit words of the stream
                rng.set_word_pos(start as u128 * dim as u128 * 2);
                (start..end)
                    .map(|_| {
                        let mut x = Vect::zeros(dim);
                        for axis in 0..dim {
                            x[axis] = F::lit(rng.gen::<f64>());
                        }
                        x
                    })
                    .collect()
            }
        }
    }

    pub fn translation<F: Real>(&self, dim: usize, index: u64) -> Vect<F> {
        self.translations(dim, index, index + 1)[0]
    }
}

/// Counts of one annulus at every translation of a sampling scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct CountSampleSet {
    pub scheme: SamplingScheme,
    pub dim: usize,
    pub counts: Vec<u64>,
}

impl CountSampleSet {
    pub fn translation<F: Real>(&self, index: usize) -> Vect<F> {
        self.scheme.translation(self.dim, index as u64)
    }

    pub fn histogram(&self) -> BTreeMap<u64, u64> {
        let mut h = BTreeMap::new();
        for c in &self.counts {
            *h.entry(*c).or_insert(0) += 1;
        }
        h
    }

    /// Columns `x_1..x_d, count`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Config(format!("writing count CSV: {e}"));
        let mut header: Vec<String> = (1..=self.dim).map(|i| format!("x_{i}")).collect();
        header.push("count".into());
        w.write_record(&header).map_err(io)?;
        for (start, chunk) in self.counts.chunks(CHUNK).enumerate() {
            let start = (start * CHUNK) as u64;
            let xs = self.scheme.translations::<f64>(self.dim, start, start + chunk.len() as u64);
            for (x, c) in xs.iter().zip(chunk) {
                let mut rec: Vec<String> = x.iter().map(|v| v.to_string()).collect();
                rec.push(c.to_string());
                w.write_record(&rec).map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::Config(format!("writing count CSV: {e}")))
    }
}

/// Counts of `annulus` over `scheme`, in scheme order.
pub fn sample_counts<F: Real>(annulus: &Annulus<F>, scheme: SamplingScheme) -> Result<CountSampleSet> {
    scheme.validate()?;
    let dim = annulus.dim();
    let total = scheme.len(dim);
    let chunks = total.div_ceil(CHUNK as u64);
    let counts: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK as u64;
            let end = (start + CHUNK as u64).min(total);
            scheme.translations::<F>(dim, start, end).iter().map(|x| annulus_count(annulus, x)).collect()
        })
        .collect();
    Ok(CountSampleSet { scheme, dim, counts: counts.concat() })
}

/// Empirical moments of the count over the torus.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentTable {
    pub samples: u64,
    pub mean: f64,
    /// Population variance, the torus average of `(count - mean)^2`.
    pub variance: f64,
    /// Central moments of orders `2..=max_order`.
    pub central_moments: Vec<f64>,
    /// Standard error of `variance` (random scheme only).
    pub variance_std_error: Option<f64>,
    /// Standard error of `mean` (random scheme only).
    pub mean_std_error: Option<f64>,
    /// `|variance(M) - variance(M/2)|` (grid scheme with even `M` only).
    pub variance_discretization: Option<f64>,
    pub mean_discretization: Option<f64>,
    /// `variance / mean`; 1 for Poisson counts.
    pub dispersion_index: Option<f64>,
    pub histogram: BTreeMap<u64, u64>,
}

fn exact_mean_variance(histogram: &BTreeMap<u64, u64>) -> (u64, f64, f64) {
    let (mut n, mut s1, mut s2) = (0i128, 0i128, 0i128);
    for (&value, &freq) in histogram {
        n += freq as i128;
        s1 += value as i128 * freq as i128;
        s2 += (value as i128).pow(2) * freq as i128;
    }
    let nf = n as f64;
    (n as u64, s1 as f64 / nf, (n * s2 - s1 * s1) as f64 / (nf * nf))
}

/// Moments of a sample set. Mean and variance are exact integer ratios rounded once.
pub fn moments_from_counts(set: &CountSampleSet, max_order: u32) -> MomentTable {
    let histogram = set.histogram();
    let (n, mean, variance) = exact_mean_variance(&histogram);
    let central = |order: u32| -> f64 {
        crate::summation::compensated_sum(
            histogram.iter().map(|(&v, &f)| f as f64 * (v as f64 - mean).powi(order as i32)),
        ) / n as f64
    };
    let central_moments: Vec<f64> = (2..=max_order.max(2)).map(|k| if k == 2 { variance } else { central(k) }).collect();
    let (variance_std_error, mean_std_error) = match set.scheme {
        SamplingScheme::Random { .. } => {
            let m4 = central(4);
            let nf = n as f64;
            (Some(((m4 - variance * variance).max(0.0) / nf).sqrt()), Some((variance / nf).sqrt()))
        }
        SamplingScheme::Grid { .. } => (None, None),
    };
    MomentTable {
        samples: n,
        mean,
        variance,
        central_moments,
        variance_std_error,
        mean_std_error,
        variance_discretization: None,
        mean_discretization: None,
        dispersion_index: (mean > 0.0).then(|| variance / mean),
        histogram,
    }
}

/// Sample the counts and summarize them. For even grids the same annulus is also
/// counted on the half-resolution grid to estimate the discretization error.
pub fn sample_moments<F: Real>(annulus: &Annulus<F>, scheme: SamplingScheme, max_order: u32) -> Result<MomentTable> {
    let set = sample_counts(annulus, scheme)?;
    let mut table = moments_from_counts(&set, max_order);
    if let SamplingScheme::Grid { m } = scheme {
        if m % 2 == 0 && m >= 4 {
            let coarse = moments_from_counts(&sample_counts(annulus, SamplingScheme::Grid { m: m / 2 })?, 2);
            table.variance_discretization = Some((table.variance - coarse.variance).abs());
            table.mean_discretization = Some((table.mean - coarse.mean).abs());
        }
    }
    Ok(table)
}

/// One row of the lattice-count error diagnostic for a dilate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HlawkaRow {
    pub r: f64,
    pub max_abs_error: f64,
    /// `max_abs_error / r^{d(d-1)/(d+1)}`.
    pub normalized: f64,
}

/// `max_x |#(rA - x) - r^d |A||` over the translations of `scheme`, for each `r`.
pub fn hlawka_diagnostic<F: Real>(body: &ConvexBody<F>, radii: &[F], scheme: SamplingScheme) -> Result<Vec<HlawkaRow>> {
    scheme.validate()?;
    let dim = body.dim();
    let volume = body.volume();
    let exponent = F::lit((dim * (dim - 1)) as f64 / (dim + 1) as f64);
    let total = scheme.len(dim);
    Ok(radii
        .iter()
        .map(|&r| {
            let expected = r.powi(dim as i32) * volume;
            let worst = (0..total.div_ceil(CHUNK as u64))
                .into_par_iter()
                .map(|c| {
                    let start = c * CHUNK as u64;
                    let xs = scheme.translations::<F>(dim, start, (start + CHUNK as u64).min(total));
                    xs.iter()
                        .map(|x| (F::from_int(dilate_count(body, r, x) as i64) - expected).abs().as_f64())
                        .fold(0.0, f64::max)
                })
                .reduce(|| 0.0, f64::max);
            HlawkaRow { r: r.as_f64(), max_abs_error: worst, normalized: worst / r.powf(exponent).as_f64() }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::CosineTerm;

    fn disk() -> ConvexBody<f64> {
        ConvexBody::ball(2, 1.0).unwrap()
    }

    fn square() -> ConvexBody<f64> {
        ConvexBody::box_body(&[1.0, 1.0]).unwrap()
    }

    fn origin(d: usize) -> Vect<f64> {
        Vect::zeros(d)
    }

    /// Direct enumeration over a generous box, no chords.
    fn naive(body: &ConvexBody<f64>, r: f64, x: &Vect<f64>) -> u64 {
        let reach = (r * 3.0).ceil() as i64 + 2;
        let mut n = 0;
        for i in -reach..=reach {
            for j in -reach..=reach {
                if body.dim() == 2 {
                    if body.gauge(&Vect::from_f64(&[i as f64 + x[0], j as f64 + x[1]])) <= r {
                        n += 1;
                    }
                } else {
                    for k in -reach..=reach {
                        let p = Vect::from_f64(&[i as f64 + x[0], j as f64 + x[1], k as f64 + x[2]]);
                        if body.gauge(&p) <= r {
                            n += 1;
                        }
                    }
                }
            }
        }
        n
    }

    #[test]
    fn dilate_examples() {
        assert_eq!(dilate_count(&disk(), 1.0, &origin(2)), 5);
        assert_eq!(dilate_count(&disk(), 2.5, &origin(2)), 21);
        assert_eq!(dilate_count(&square(), 3.0, &origin(2)), 49);
    }

    #[test]
    fn annulus_examples() {
        let a = Annulus::new(disk(), 1.0, 0.5).unwrap();
        assert_eq!(annulus_count(&a, &origin(2)), 4);
        let a = Annulus::new(disk(), 1.0, 0.0).unwrap();
        assert_eq!(annulus_count(&a, &origin(2)), 0);
        let a = Annulus::new(square(), 3.0, 0.1).unwrap();
        assert_eq!(annulus_count(&a, &origin(2)), 24);
        assert!(Annulus::new(disk(), 1.0, 2.5).is_err());
        assert!(Annulus::new(disk(), 1.0, -0.1).is_err());
    }

    #[test]
    fn volume_examples() {
        let a = Annulus::new(disk(), 10.0, 0.1).unwrap();
        assert!((a.volume() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        let a = Annulus::new(ConvexBody::ball(3, 1.0).unwrap(), 5.0, 0.2).unwrap();
        let expected = (5.1f64.powi(3) - 4.9f64.powi(3)) * 4.0 * std::f64::consts::PI / 3.0;
        assert!((a.volume() - expected).abs() < 1e-11);
        assert!((a.volume() - 62.840_230_652_205_44).abs() < 1e-10);
        assert_eq!(Annulus::new(disk(), 3.0, 0.0).unwrap().volume(), 0.0);
    }

    #[test]
    fn agrees_with_naive_enumeration() {
        let bodies = [
            disk(),
            ConvexBody::ellipsoid(&[1.7, 0.6]).unwrap(),
            ConvexBody::perturbed_disk(1.0, vec![CosineTerm { harmonic: 3, amplitude: 0.05, phase: 0.3 }]).unwrap(),
            ConvexBody::ellipsoid(&[1.0, 0.8, 1.3]).unwrap(),
            ConvexBody::box_body(&[1.0, 0.7, 0.5]).unwrap(),
        ];
        for body in &bodies {
            for (i, r) in [0.7, 2.3, 4.61].iter().enumerate() {
                let x: Vec<f64> = (0..body.dim()).map(|a| ((i * 7 + a * 3) as f64 * 0.137).fract()).collect();
                let x = Vect::from_f64(&x);
                assert_eq!(dilate_count(body, *r, &x), naive(body, *r, &x), "{:?} r={r}", body.kind());
            }
        }
    }

    #[test]
    fn grid_moments_of_box_oracle() {
        let a = Annulus::new(square(), 3.0, 0.125).unwrap();
        let table = sample_moments(&a, SamplingScheme::Grid { m: 256 }, 4).unwrap();
        assert!((table.mean - 3.0).abs() < 1e-12);
        assert!((table.variance - 31.5).abs() < 1e-9);
        assert_eq!(table.histogram.keys().copied().collect::<Vec<_>>(), vec![0, 12, 24]);
        assert_eq!(table.variance_discretization, Some(0.0));
    }

    #[test]
    fn zero_thickness_moments() {
        let a = Annulus::new(disk(), 4.0, 0.0).unwrap();
        let table = sample_moments(&a, SamplingScheme::Random { samples: 100, seed: 1 }, 4).unwrap();
        assert_eq!(table.mean, 0.0);
        assert!(table.central_moments.iter().all(|m| *m == 0.0));
    }

    #[test]
    fn random_stream_does_not_depend_on_split() {
        let scheme = SamplingScheme::Random { samples: 10_000, seed: 7 };
        let whole = scheme.translations::<f64>(2, 0, 10_000);
        let split: Vec<_> =
            [(0, 3), (3, 5000), (5000, 10_000)].iter().flat_map(|&(a, b)| scheme.translations::<f64>(2, a, b)).collect();
        assert_eq!(whole, split);
    }

    #[test]
    fn rejects_degenerate_schemes() {
        let a = Annulus::new(disk(), 4.0, 0.1).unwrap();
        assert!(sample_counts(&a, SamplingScheme::Grid { m: 1 }).is_err());
        assert!(sample_counts(&a, SamplingScheme::Random { samples: 1, seed: 0 }).is_err());
    }

    #[test]
    fn csv_and_histogram_output() {
        let a = Annulus::new(square(), 3.0, 0.125).unwrap();
        let set = sample_counts(&a, SamplingScheme::Grid { m: 4 }).unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x_1,x_2,count\n0.125,0.125,"));
        assert_eq!(text.lines().count(), 17);
        let json = serde_json::to_string(&set.histogram()).unwrap();
        assert!(json.starts_with('{'));
    }

    #[test]
    fn hlawka_rows_are_finite() {
        let rows = hlawka_diagnostic(&disk().difference_body(), &[4.0, 8.0], SamplingScheme::Grid { m: 8 }).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.normalized.is_finite() && r.normalized < 10.0));
    }
}
