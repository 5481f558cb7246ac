//! The split of the variance into a curvature series X, an oscillatory series Y and a
//! residual Z, the main-term identity for X, and the sweep over `t = r^{-alpha}`.

use serde::{Deserialize, Serialize};

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::fourier::{asymptotic_main_term, parseval_variance, AnnulusTransform, ParsevalResult, TailEstimate};
use crate::lattice::{sample_moments, Annulus, MomentTable, SamplingScheme};
use crate::quadrature::{integrate_adaptive, SphereRule};
use crate::scalar::Real;
use crate::special::sine_integral;
use crate::summation::{envelope_tail_majorant, for_each_in_shell, map_shells, CompensatedSum};
use crate::vector::Vect;

/// Number of periods of `sin^2 s / s^2` integrated explicitly by [`residue_integral_check`].
pub const RESIDUE_PERIODS: u32 = 10_000;

/// `max(ceil(8 / t), 64)`: past `|n| ~ 1/t` the factor `sin^2(pi t h(n))` stops growing.
pub fn default_cutoff(t: f64) -> u64 {
    if t <= 0.0 {
        64
    } else {
        ((8.0 / t).ceil() as u64).max(64)
    }
}

/// A truncated lattice series with its tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesResult<F> {
    pub cutoff: u64,
    /// Sum over `0 < |n| <= cutoff`.
    pub partial_sum: F,
    /// Continuum approximation of the omitted terms (zero when none is used).
    pub tail_correction: F,
    /// Majorant of the absolute value of the omitted terms.
    pub tail: TailEstimate<F>,
}

impl<F: Real> SeriesResult<F> {
    /// `partial_sum + tail_correction`.
    pub fn estimate(&self) -> F {
        self.partial_sum + self.tail_correction
    }
}

fn require_smooth<F: Real>(body: &ConvexBody<F>, operation: &'static str) -> Result<()> {
    if body.is_smooth() {
        Ok(())
    } else {
        Err(Error::UnsupportedKind { operation, kind: body.kind().name() })
    }
}

fn check_cutoff(cutoff: u64) -> Result<()> {
    if cutoff < 1 {
        Err(Error::Domain("series cutoff must be >= 1".into()))
    } else {
        Ok(())
    }
}

/// Per-frequency quantities of the series: `|n|`, `h(n)`, `h(-n)`, `1/K(sigma(n))`, `1/K(sigma(-n))`.
struct Term<F> {
    modulus: F,
    h_plus: F,
    h_minus: F,
    rho_plus: F,
    rho_minus: F,
}

fn term<F: Real>(body: &ConvexBody<F>, n: &[i64]) -> Term<F> {
    let xi: Vect<F> = Vect::from_ints(n);
    let modulus = xi.norm();
    let unit = xi * (F::one() / modulus);
    let (s_plus, rho_plus) = body.frame_unchecked(&unit);
    let (s_minus, rho_minus) = body.frame_unchecked(&-unit);
    Term { modulus, h_plus: modulus * s_plus.dot(&unit), h_minus: -modulus * s_minus.dot(&unit), rho_plus, rho_minus }
}

fn shell_series<F: Real>(annulus: &Annulus<F>, cutoff: u64, f: impl Fn(&Term<F>) -> F + Sync + Send) -> F {
    let body = annulus.body();
    let dim = annulus.dim();
    let shells = map_shells(cutoff, |k| {
        let mut acc = CompensatedSum::new();
        for_each_in_shell(dim, k, |n| acc.add(f(&term(body, n))));
        acc
    });
    let mut total = CompensatedSum::new();
    for s in &shells {
        total.merge(s);
    }
    total.value()
}

fn prefactor<F: Real>(annulus: &Annulus<F>) -> F {
    F::lit(2.0) / (F::PI() * F::PI()) * annulus.r().powi(annulus.dim() as i32 - 1)
}

/// `2 pi^{-2} r^{d-1} max(1/K) * sum_{|n| > N} min(1, pi t max(h) |n|)^2 |n|^{-d-1}`.
fn series_tail<F: Real>(annulus: &Annulus<F>, cutoff: u64) -> Result<TailEstimate<F>> {
    let body = annulus.body();
    let (_, h_max) = body.support_range();
    let (_, rho_max) = body.inverse_curvature_range()?;
    let slope = F::PI() * annulus.t() * h_max;
    Ok(TailEstimate {
        cutoff_radius: F::from_int(cutoff as i64),
        bound: prefactor(annulus) * rho_max * envelope_tail_majorant(annulus.dim(), cutoff, slope),
        envelope_constant: F::nan(),
    })
}

/// `X(r,t) = 2 pi^{-2} r^{d-1} sum_{n != 0} K(sigma(n))^{-1} sin^2(pi t h(n)) |n|^{-d-1}`.
///
/// The partial sum over `|n| <= N` is completed by the continuum tail
/// `2 pi^{-2} r^{d-1} int K^{-1} [sin^2(aN)/N + a (pi/2 - Si(2aN))] dtheta`, `a = pi t h(theta)`;
/// the tail bound is a majorant of the omitted terms.
pub fn x_series<F: Real>(annulus: &Annulus<F>, cutoff: u64) -> Result<SeriesResult<F>> {
    require_smooth(annulus.body(), "x_series")?;
    check_cutoff(cutoff)?;
    let tail = series_tail(annulus, cutoff)?;
    if annulus.t() == F::zero() {
        return Ok(SeriesResult { cutoff, partial_sum: F::zero(), tail_correction: F::zero(), tail });
    }
    let t = annulus.t();
    let dim = annulus.dim() as i32;
    let partial = shell_series(annulus, cutoff, |x| {
        let s = (F::PI() * t * x.h_plus).sin();
        x.rho_plus * s * s * x.modulus.powi(-dim - 1)
    });
    let big_n = F::from_int(cutoff as i64);
    let body = annulus.body();
    let continuum = SphereRule::<F>::standard(annulus.dim()).integrate(|theta| {
        let (sigma, rho) = body.frame_unchecked(theta);
        let a = F::PI() * t * sigma.dot(theta);
        let s = (a * big_n).sin();
        rho * (s * s / big_n + a * (F::FRAC_PI_2() - sine_integral(F::lit(2.0) * a * big_n)))
    });
    let pre = prefactor(annulus);
    Ok(SeriesResult { cutoff, partial_sum: pre * partial, tail_correction: pre * continuum, tail })
}

/// `Y(r,t) = 2 pi^{-2} r^{d-1} sum_{n != 0} cos(2 pi r zeta(n) - pi (d-1)/2)
///  K(sigma(n))^{-1/2} K(sigma(-n))^{-1/2} sin(pi t h(n)) sin(pi t h(-n)) |n|^{-d-1}`,
/// with `zeta(n) = h(n) + h(-n)`. Summed over full shells, so `n` and `-n` always pair up.
pub fn y_series<F: Real>(annulus: &Annulus<F>, cutoff: u64) -> Result<SeriesResult<F>> {
    require_smooth(annulus.body(), "y_series")?;
    check_cutoff(cutoff)?;
    let tail = series_tail(annulus, cutoff)?;
    if annulus.t() == F::zero() {
        return Ok(SeriesResult { cutoff, partial_sum: F::zero(), tail_correction: F::zero(), tail });
    }
    let (r, t) = (annulus.r(), annulus.t());
    let dim = annulus.dim() as i32;
    let shift = F::PI() * F::from_int(dim as i64 - 1) / F::lit(2.0);
    let partial = shell_series(annulus, cutoff, |x| {
        let zeta = x.h_plus + x.h_minus;
        (F::two_pi() * r * zeta - shift).cos()
            * (x.rho_plus * x.rho_minus).sqrt()
            * (F::PI() * t * x.h_plus).sin()
            * (F::PI() * t * x.h_minus).sin()
            * x.modulus.powi(-dim - 1)
    });
    Ok(SeriesResult { cutoff, partial_sum: prefactor(annulus) * partial, tail_correction: F::zero(), tail })
}

/// `sum_{0 < |n| <= N} |A(r,t,n)|^2`, which equals the partial sums of X plus Y.
pub fn main_term_square_sum<F: Real>(annulus: &Annulus<F>, cutoff: u64) -> Result<F> {
    require_smooth(annulus.body(), "main_term_square_sum")?;
    let dim = annulus.dim();
    let shells: Vec<Result<CompensatedSum<F>>> = map_shells(cutoff, |k| {
        let mut acc = CompensatedSum::new();
        let mut failure = None;
        for_each_in_shell(dim, k, |n| match asymptotic_main_term(annulus, &Vect::from_ints(n)) {
            Ok(a) => acc.add(a.norm_sqr()),
            Err(e) => failure = Some(e),
        });
        failure.map_or(Ok(acc), Err)
    });
    let mut total = CompensatedSum::new();
    for s in shells {
        total.merge(&s?);
    }
    Ok(total.value())
}

/// `d |Omega| r^{d-1} t`.
pub fn main_term<F: Real>(annulus: &Annulus<F>) -> F {
    F::from_int(annulus.dim() as i64) * annulus.body().volume() * annulus.r().powi(annulus.dim() as i32 - 1) * annulus.t()
}

/// `int_0^inf sin^2 s / s^2 ds`, which is `pi/2`: Gauss-Kronrod over [`RESIDUE_PERIODS`]
/// periods plus the tail `1 / (2M)` beyond `M`.
pub fn residue_integral_check<F: Real>() -> F {
    let f = |s: F| {
        if s == F::zero() {
            F::one()
        } else {
            let q = s.sin() / s;
            q * q
        }
    };
    let mut acc = CompensatedSum::new();
    for k in 0..RESIDUE_PERIODS {
        let a = F::PI() * F::from_int(k as i64);
        let (v, _) = integrate_adaptive(f, a, a + F::PI(), F::lit(1e-15), 64);
        acc.add(v);
    }
    // int_M^inf sin^2 s / s^2 = 1/(2M) - (1/2) int_M^inf cos(2s)/s^2, and the second part is O(M^-3)
    let m = F::PI() * F::from_int(RESIDUE_PERIODS as i64);
    acc.add(F::one() / (m + m));
    acc.value()
}

/// The main term rebuilt from its two integral identities: the continuum version of X is
/// `2 pi^{-2} r^{d-1} int K^{-1} (pi t h) (int_0^inf sin^2 s / s^2) dtheta`, and
/// `int K^{-1} h dtheta = d |Omega|`.
pub fn main_term_from_integrals<F: Real>(annulus: &Annulus<F>) -> Result<F> {
    require_smooth(annulus.body(), "main_term_from_integrals")?;
    let curvature_integral = annulus.body().curvature_integral(&SphereRule::standard(annulus.dim()));
    Ok(prefactor(annulus) * F::PI() * annulus.t() * residue_integral_check::<F>() * curvature_integral)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSource {
    Parseval,
    Sampling,
}

/// Variance estimate that Z is measured against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Reference<F> {
    pub value: F,
    pub error: F,
    pub source: ReferenceSource,
}

impl<F: Real> Reference<F> {
    pub fn from_parseval(p: &ParsevalResult<F>) -> Self {
        Self { value: p.value, error: p.tail.bound + p.quadrature_error, source: ReferenceSource::Parseval }
    }

    pub fn from_moments(m: &MomentTable) -> Self {
        let error = m.variance_std_error.or(m.variance_discretization).unwrap_or(0.0);
        Self { value: F::lit(m.variance), error: F::lit(error), source: ReferenceSource::Sampling }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionResult<F> {
    pub x: SeriesResult<F>,
    pub y: SeriesResult<F>,
    pub main_term: F,
    /// `X - main_term`.
    pub w: F,
    /// `reference - X - Y`; absent without a reference.
    pub z: Option<F>,
    pub reference: Option<Reference<F>>,
    /// Set when Z could not be formed.
    pub z_missing: bool,
    /// `sum_{0<|n|<=N} (2 Re(A conj B) + |B|^2)`, available for balls.
    pub z_cross_terms: Option<F>,
}

/// X, Y, main term, W and Z for one annulus. X enters W and Z through its tail-corrected
/// estimate; Y through its partial sum.
pub fn decompose<F: Real>(
    annulus: &Annulus<F>,
    cutoff_x: u64,
    cutoff_y: u64,
    reference: Option<Reference<F>>,
) -> Result<DecompositionResult<F>> {
    let x = x_series(annulus, cutoff_x)?;
    let y = y_series(annulus, cutoff_y)?;
    let main = main_term(annulus);
    let z = reference.map(|r| r.value - x.estimate() - y.estimate());
    let z_cross_terms = match annulus.body().ball_radius() {
        Some(_) => Some(cross_term_z(annulus, cutoff_x.max(cutoff_y))?),
        None => None,
    };
    Ok(DecompositionResult {
        x,
        y,
        main_term: main,
        w: x.estimate() - main,
        z,
        reference,
        z_missing: z.is_none(),
        z_cross_terms,
    })
}

/// Z through its definition, `|chi^|^2 - |A|^2 = 2 Re(A conj B) + |B|^2` summed over
/// `0 < |n| <= N`, with `B` the exact-minus-main-term difference.
pub fn cross_term_z<F: Real>(annulus: &Annulus<F>, cutoff: u64) -> Result<F> {
    require_smooth(annulus.body(), "cross_term_z")?;
    if annulus.t() == F::zero() {
        return Ok(F::zero());
    }
    let dim = annulus.dim();
    let transform = AnnulusTransform::new(annulus, F::from_int(cutoff as i64) * F::from_int(dim as i64).sqrt())?;
    let shells: Vec<Result<CompensatedSum<F>>> = map_shells(cutoff, |k| {
        let mut acc = CompensatedSum::new();
        let mut failure = None;
        for_each_in_shell(dim, k, |n| {
            let xi = Vect::from_ints(n);
            let pair = transform.eval(&xi).and_then(|c| Ok((c.value, asymptotic_main_term(annulus, &xi)?)));
            match pair {
                Ok((c, a)) => {
                    let b = c - a;
                    acc.add(F::lit(2.0) * (a * b.conj()).re + b.norm_sqr());
                }
                Err(e) => failure = Some(e),
            }
        });
        failure.map_or(Ok(acc), Err)
    });
    let mut total = CompensatedSum::new();
    for s in shells {
        total.merge(&s?);
    }
    Ok(total.value())
}

/// What the sweep computes per row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    /// Parseval/X/Y cutoff; `None` uses [`default_cutoff`].
    pub cutoff: Option<u64>,
    pub parseval: bool,
    pub sampling: Option<SamplingScheme>,
    pub decomposition: bool,
    /// Run `alpha <= (d-1)/(d+1)` with a warning instead of failing.
    pub allow_outside_hypothesis: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { cutoff: None, parseval: true, sampling: None, decomposition: true, allow_outside_hypothesis: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow<F> {
    pub r: F,
    pub t: F,
    pub volume: F,
    pub cutoff: u64,
    pub var_sample: Option<f64>,
    pub var_sample_error: Option<f64>,
    pub var_parseval: Option<F>,
    pub parseval_tail: Option<F>,
    pub x: Option<F>,
    pub y: Option<F>,
    pub z: Option<F>,
    pub w: Option<F>,
    /// `variance / volume`, from Parseval when computed, else from sampling.
    pub ratio: F,
    /// Error bar of `ratio` from the estimator's own error.
    pub ratio_error: F,
    /// Parseval quadrature error above [`crate::fourier::QUADRATURE_FLAG_FRACTION`].
    pub quadrature_flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTable<F> {
    pub alpha: F,
    pub dim: usize,
    pub rows: Vec<SweepRow<F>>,
    /// Least-squares slope of `log|ratio - 1|` against `log t`.
    pub beta_fit: Option<F>,
    /// Rows with `|ratio - 1| > 10 * ratio_error` that entered the fit.
    pub beta_rows: usize,
    pub warnings: Vec<String>,
}

/// Least-squares slope of `ys` against `xs`.
pub fn least_squares_slope<F: Real>(xs: &[F], ys: &[F]) -> Option<F> {
    if xs.len() < 2 {
        return None;
    }
    let n = F::from_int(xs.len() as i64);
    let mx = xs.iter().copied().sum::<F>() / n;
    let my = ys.iter().copied().sum::<F>() / n;
    let sxy: F = xs.iter().zip(ys).map(|(x, y)| (*x - mx) * (*y - my)).sum();
    let sxx: F = xs.iter().map(|x| (*x - mx) * (*x - mx)).sum();
    (sxx > F::zero()).then(|| sxy / sxx)
}

/// Rows over `r_list` with `t = r^{-alpha}`, the ratio variance/volume, and the fitted decay
/// exponent of `|ratio - 1|` in `t`.
pub fn theorem_sweep<F: Real>(body: &ConvexBody<F>, alpha: F, r_list: &[F], config: &SweepConfig) -> Result<SweepTable<F>> {
    let dim = body.dim();
    let threshold = F::from_int(dim as i64 - 1) / F::from_int(dim as i64 + 1);
    let mut warnings = Vec::new();
    if alpha <= threshold {
        let msg = format!("alpha = {alpha} is not above (d-1)/(d+1) = {threshold}; outside the theorem's hypothesis");
        if !config.allow_outside_hypothesis {
            return Err(Error::Config(msg));
        }
        warnings.push(msg);
    }
    if !config.parseval && config.sampling.is_none() {
        return Err(Error::Config("the sweep needs Parseval or sampling".into()));
    }
    if config.decomposition && !body.is_smooth() {
        return Err(Error::UnsupportedKind { operation: "theorem_sweep decomposition", kind: body.kind().name() });
    }
    let mut rows = Vec::with_capacity(r_list.len());
    for &r in r_list {
        let t = r.powf(-alpha);
        let annulus = Annulus::new(body.clone(), r, t)?;
        let volume = annulus.volume();
        let cutoff = config.cutoff.unwrap_or_else(|| default_cutoff(t.as_f64()));
        let parseval = if config.parseval { Some(parseval_variance(&annulus, cutoff)?) } else { None };
        if let Some(p) = &parseval {
            if p.flagged {
                warnings.push(format!("r = {r}: Parseval quadrature error {} exceeds 1% of the sum", p.quadrature_error));
            }
        }
        let moments = match config.sampling {
            Some(scheme) => Some(sample_moments(&annulus, scheme, 4)?),
            None => None,
        };
        let decomposition = if config.decomposition {
            let reference = parseval.as_ref().map(Reference::from_parseval).or(moments.as_ref().map(Reference::from_moments));
            Some(decompose(&annulus, cutoff, cutoff, reference)?)
        } else {
            None
        };
        let (variance, error) = match (&parseval, &moments) {
            (Some(p), _) => (p.value, p.tail.bound + p.quadrature_error),
            (None, Some(m)) => {
                let e = m.variance_std_error.or(m.variance_discretization).unwrap_or(0.0);
                (F::lit(m.variance), F::lit(e))
            }
            (None, None) => unreachable!(),
        };
        rows.push(SweepRow {
            r,
            t,
            volume,
            cutoff,
            var_sample: moments.as_ref().map(|m| m.variance),
            var_sample_error: moments.as_ref().and_then(|m| m.variance_std_error.or(m.variance_discretization)),
            var_parseval: parseval.map(|p| p.value),
            parseval_tail: parseval.map(|p| p.tail.bound),
            x: decomposition.as_ref().map(|d| d.x.estimate()),
            y: decomposition.as_ref().map(|d| d.y.estimate()),
            z: decomposition.as_ref().and_then(|d| d.z),
            w: decomposition.as_ref().map(|d| d.w),
            ratio: variance / volume,
            ratio_error: error / volume,
            quadrature_flagged: parseval.is_some_and(|p| p.flagged),
        });
    }
    let ten = F::lit(10.0);
    let fit: Vec<(F, F)> = rows
        .iter()
        .filter(|row| (row.ratio - F::one()).abs() > ten * row.ratio_error)
        .map(|row| (row.t.ln(), (row.ratio - F::one()).abs().ln()))
        .collect();
    let (xs, ys): (Vec<F>, Vec<F>) = fit.iter().copied().unzip();
    let beta_fit = least_squares_slope(&xs, &ys);
    if beta_fit.is_none() {
        warnings.push(format!(
            "decay exponent not fitted: {} of {} rows have |ratio - 1| above 10x their error bar",
            fit.len(),
            rows.len()
        ));
    }
    Ok(SweepTable { alpha, dim, rows, beta_fit, beta_rows: fit.len(), warnings })
}
