//! Fourier transforms of bodies and annuli, with the convention
//! `f^(xi) = int f(x) exp(-2 pi i xi.x) dx`, and the Parseval variance estimator.

use std::io::Write;

use num_complex::Complex;
use serde::Serialize;

use crate::body::{BodyKind, ConvexBody};
use crate::error::{Error, Result};
use crate::lattice::Annulus;
use crate::quadrature::SphereRule;
use crate::scalar::Real;
use crate::special::{bessel_j_normalized, BesselOrder};
use crate::summation::{envelope_tail_majorant, for_each_in_shell, map_shells, CompensatedSum};
use crate::vector::Vect;

/// Largest number of quadrature nodes a single transform may use.
pub const NODE_BUDGET: usize = 1 << 22;

/// Quadrature nodes per oscillation of the integrand along the boundary.
pub const NODES_PER_WAVELENGTH: usize = 8;

/// Parseval results whose aggregated quadrature error exceeds this fraction are flagged.
pub const QUADRATURE_FLAG_FRACTION: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    Asymptotic,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Quadrature => "quadrature",
            Method::Asymptotic => "asymptotic",
        }
    }
}

/// A transform value with its provenance and an absolute error estimate
/// (zero for closed forms).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transform<F> {
    pub value: Complex<F>,
    pub error: F,
    pub method: Method,
}

impl<F: Real> Transform<F> {
    fn exact(value: Complex<F>) -> Self {
        Self { value, error: F::zero(), method: Method::ClosedForm }
    }

    fn scale(self, s: F) -> Self {
        Self { value: self.value * s, error: self.error * s.abs(), method: self.method }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FourierCoefficient<F> {
    pub frequency: Vec<i64>,
    pub value: Complex<F>,
    pub method: Method,
}

/// `R^d pi^{d/2} J_{d/2}(2 pi R rho) / (pi R rho)^{d/2}`, the transform of the radius-R ball in
/// R^d at frequency modulus `rho`; any `d >= 1`.
pub fn ft_ball_radial<F: Real>(dim: usize, radius: F, rho: F) -> Result<F> {
    let z = F::two_pi() * radius * rho.abs();
    let jn = bessel_j_normalized(BesselOrder::ball(dim), z)?;
    Ok(radius.powi(dim as i32) * F::PI().powf(F::lit(dim as f64 / 2.0)) * jn)
}

/// Transform of the ball of radius `radius` centered at 0, equal to
/// `R^d |R xi|^{-d/2} J_{d/2}(2 pi R |xi|)` and to the volume at `xi = 0`.
pub fn ft_ball<F: Real>(dim: usize, radius: F, xi: &Vect<F>) -> Result<F> {
    ft_ball_radial(dim, radius, xi.norm())
}

/// `prod_i sin(2 pi s_i xi_i) / (pi xi_i)`, with `2 s_i` for vanishing `xi_i`.
pub fn ft_box<F: Real>(halfsides: &[F], xi: &[F]) -> F {
    halfsides
        .iter()
        .zip(xi)
        .map(|(&s, &x)| if x == F::zero() { s + s } else { (F::two_pi() * s * x).sin() / (F::PI() * x) })
        .fold(F::one(), |p, f| p * f)
}

fn ellipsoid_transform<F: Real>(semiaxes: &[F], xi: &Vect<F>) -> Result<F> {
    let mut stretched = *xi;
    let mut det = F::one();
    for (i, a) in semiaxes.iter().enumerate() {
        stretched[i] = stretched[i] * *a;
        det *= *a;
    }
    Ok(det * ft_ball(semiaxes.len(), F::one(), &stretched)?)
}

fn next_power_of_two(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Planar node table on `n` equispaced normal angles: direction, support point and
/// radius of curvature. Sub-rules with `n / 2^k` nodes reuse it by striding.
#[derive(Clone, Debug)]
struct PlanarTable<F> {
    directions: Vec<Vect<F>>,
    sigma: Vec<Vect<F>>,
    inv_curvature: Vec<F>,
}

impl<F: Real> PlanarTable<F> {
    fn new(body: &ConvexBody<F>, nodes: usize) -> Self {
        let rule = SphereRule::<F>::circle(nodes);
        let (sigma, inv_curvature) = rule.directions.iter().map(|u| body.frame_unchecked(u)).unzip();
        Self { directions: rule.directions, sigma, inv_curvature }
    }

    fn len(&self) -> usize {
        self.directions.len()
    }

    /// Trapezoid sum of the boundary integrand with `len / stride` nodes.
    fn integrate(&self, xi: &Vect<F>, stride: usize) -> Complex<F> {
        let rho = xi.norm();
        let unit = *xi * (F::one() / rho);
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for j in (0..self.len()).step_by(stride) {
            let amp = unit.dot(&self.directions[j]) * self.inv_curvature[j];
            let (s, c) = (-F::two_pi() * xi.dot(&self.sigma[j])).sin_cos();
            re.add(amp * c);
            im.add(amp * s);
        }
        let step = F::two_pi() * F::from_int(stride as i64) / F::from_int(self.len() as i64);
        // -(2 pi i |xi|)^{-1} = i / (2 pi |xi|)
        Complex::new(re.value(), im.value()) * Complex::new(F::zero(), step / (F::two_pi() * rho))
    }
}

fn diameter_bound<F: Real>(body: &ConvexBody<F>) -> F {
    let (_, hmax) = body.support_range();
    F::lit(2.05) * hmax
}

fn planar_nodes_for<F: Real>(body: &ConvexBody<F>, rho: F, requested: usize) -> usize {
    let wavelengths = (F::PI() * rho * diameter_bound(body)).ceil().as_f64() as usize;
    next_power_of_two(requested.max(NODES_PER_WAVELENGTH * wavelengths).max(64))
}

fn sphere_integral<F: Real>(body: &ConvexBody<F>, xi: &Vect<F>, polar: usize, azimuth: usize) -> Complex<F> {
    let rho = xi.norm();
    let unit = *xi * (F::one() / rho);
    let rule = SphereRule::sphere(polar, azimuth, unit);
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for (theta, w) in rule.directions.iter().zip(&rule.weights) {
        let (sigma, inv_k) = body.frame_unchecked(theta);
        let amp = *w * unit.dot(theta) * inv_k;
        let (s, c) = (-F::two_pi() * xi.dot(&sigma)).sin_cos();
        re.add(amp * c);
        im.add(amp * s);
    }
    Complex::new(re.value(), im.value()) * Complex::new(F::zero(), F::one() / (F::two_pi() * rho))
}

/// Transform of a smooth body by quadrature of the boundary integral
/// `-(2 pi i |xi|)^{-1} int (xi^.theta) exp(-2 pi i xi.sigma(theta)) K^{-1} dtheta`
/// over unit normals. `nodes` is a lower bound; it is raised to resolve the oscillation.
/// The error estimate compares against the rule with half the nodes.
pub fn ft_body_quadrature<F: Real>(body: &ConvexBody<F>, xi: &Vect<F>, nodes: usize) -> Result<Transform<F>> {
    if !body.is_smooth() {
        return Err(Error::UnsupportedKind { operation: "ft_body_quadrature", kind: body.kind().name() });
    }
    if xi.is_zero() {
        return Err(Error::Domain("quadrature transform needs a nonzero frequency".into()));
    }
    let rho = xi.norm();
    match body.dim() {
        2 => {
            let n = planar_nodes_for(body, rho, nodes);
            if n > NODE_BUDGET {
                return Err(Error::NodeBudget { required: n, budget: NODE_BUDGET });
            }
            let table = PlanarTable::new(body, n);
            let fine = table.integrate(xi, 1);
            let coarse = table.integrate(xi, 2);
            Ok(Transform { value: fine, error: (fine - coarse).norm(), method: Method::Quadrature })
        }
        _ => {
            let cycles = (rho * diameter_bound(body)).ceil().as_f64() as usize;
            let polar = nodes.max(NODES_PER_WAVELENGTH * cycles + 32);
            let azimuth = 2 * polar;
            if polar * azimuth > NODE_BUDGET {
                return Err(Error::NodeBudget { required: polar * azimuth, budget: NODE_BUDGET });
            }
            let fine = sphere_integral(body, xi, polar, azimuth);
            let coarse = sphere_integral(body, xi, polar / 2, azimuth / 2);
            Ok(Transform { value: fine, error: (fine - coarse).norm(), method: Method::Quadrature })
        }
    }
}

/// Evaluates `chi^_body` at many frequencies, sharing planar node tables.
#[derive(Clone, Debug)]
pub struct BodyTransform<F> {
    body: ConvexBody<F>,
    table: Option<PlanarTable<F>>,
}

impl<F: Real> BodyTransform<F> {
    /// Prepares for frequencies up to modulus `max_frequency`.
    pub fn new(body: ConvexBody<F>, max_frequency: F) -> Result<Self> {
        let table = match body.kind() {
            BodyKind::PerturbedDisk | BodyKind::DifferenceBody => {
                let n = planar_nodes_for(&body, max_frequency, 0);
                if n > NODE_BUDGET {
                    return Err(Error::NodeBudget { required: n, budget: NODE_BUDGET });
                }
                Some(PlanarTable::new(&body, n))
            }
            _ => None,
        };
        Ok(Self { body, table })
    }

    pub fn body(&self) -> &ConvexBody<F> {
        &self.body
    }

    /// `chi^_body(xi)`.
    pub fn eval(&self, xi: &Vect<F>) -> Result<Transform<F>> {
        if xi.is_zero() {
            return Ok(Transform::exact(Complex::new(self.body.volume(), F::zero())));
        }
        let body = &self.body;
        match body.kind() {
            BodyKind::Ball => {
                Ok(Transform::exact(Complex::new(ft_ball(body.dim(), body.ball_radius().unwrap(), xi)?, F::zero())))
            }
            BodyKind::Ellipsoid => {
                Ok(Transform::exact(Complex::new(ellipsoid_transform(body.semiaxes().unwrap(), xi)?, F::zero())))
            }
            BodyKind::Box => {
                Ok(Transform::exact(Complex::new(ft_box(body.halfsides().unwrap(), xi.as_slice()), F::zero())))
            }
            _ => {
                let Some(table) = &self.table else { return ft_body_quadrature(body, xi, 0) };
                let needed = planar_nodes_for(body, xi.norm(), 0);
                if needed > table.len() {
                    return ft_body_quadrature(body, xi, needed);
                }
                let stride = table.len() / needed;
                let fine = table.integrate(xi, stride);
                let coarse = table.integrate(xi, 2 * stride);
                Ok(Transform { value: fine, error: (fine - coarse).norm(), method: Method::Quadrature })
            }
        }
    }

    /// `lambda^d chi^_body(lambda xi)`, the transform of the dilate `lambda * body`.
    pub fn eval_dilate(&self, lambda: F, xi: &Vect<F>) -> Result<Transform<F>> {
        Ok(self.eval(&(*xi * lambda))?.scale(lambda.powi(self.body.dim() as i32)))
    }
}

/// `chi^_body(xi)`: closed forms for balls, ellipsoids (affine reduction to the ball) and
/// boxes, quadrature otherwise.
pub fn ft_body<F: Real>(body: &ConvexBody<F>, xi: &Vect<F>) -> Result<Transform<F>> {
    BodyTransform { body: body.clone(), table: None }.eval(xi)
}

/// Evaluates `chi^_{Omega(r,t)}` at many frequencies.
#[derive(Clone, Debug)]
pub struct AnnulusTransform<F> {
    annulus: Annulus<F>,
    body: BodyTransform<F>,
}

impl<F: Real> AnnulusTransform<F> {
    /// Prepares for integer frequencies up to modulus `cutoff`.
    pub fn new(annulus: &Annulus<F>, cutoff: F) -> Result<Self> {
        let body = BodyTransform::new(annulus.body().clone(), annulus.outer() * cutoff)?;
        Ok(Self { annulus: annulus.clone(), body })
    }

    pub fn annulus(&self) -> &Annulus<F> {
        &self.annulus
    }

    /// `(r + t/2)^d chi^((r + t/2) xi) - (r - t/2)^d chi^((r - t/2) xi)`.
    pub fn eval(&self, xi: &Vect<F>) -> Result<Transform<F>> {
        let a = &self.annulus;
        if a.t() == F::zero() {
            return Ok(Transform::exact(Complex::new(F::zero(), F::zero())));
        }
        if xi.is_zero() {
            return Ok(Transform::exact(Complex::new(a.volume(), F::zero())));
        }
        let outer = self.body.eval_dilate(a.outer(), xi)?;
        let inner = if a.inner() > F::zero() {
            self.body.eval_dilate(a.inner(), xi)?
        } else {
            Transform::exact(Complex::new(F::zero(), F::zero()))
        };
        Ok(Transform { value: outer.value - inner.value, error: outer.error + inner.error, method: outer.method })
    }
}

pub fn ft_annulus<F: Real>(annulus: &Annulus<F>, xi: &Vect<F>) -> Result<Transform<F>> {
    AnnulusTransform::new(annulus, xi.norm())?.eval(xi)
}

fn require_smooth<F: Real>(body: &ConvexBody<F>, operation: &'static str) -> Result<()> {
    if body.is_smooth() {
        Ok(())
    } else {
        Err(Error::UnsupportedKind { operation, kind: body.kind().name() })
    }
}

/// Support values and inverse curvatures at `xi` and `-xi`: `(h(xi), h(-xi), 1/K+, 1/K-)`.
fn antipodal_data<F: Real>(body: &ConvexBody<F>, xi: &Vect<F>) -> (F, F, F, F) {
    let rho = xi.norm();
    let unit = *xi * (F::one() / rho);
    let (s_plus, rho_plus) = body.frame_unchecked(&unit);
    let (s_minus, rho_minus) = body.frame_unchecked(&-unit);
    (rho * s_plus.dot(&unit), -rho * s_minus.dot(&unit), rho_plus, rho_minus)
}

fn cis<F: Real>(phase: F) -> Complex<F> {
    let (s, c) = phase.sin_cos();
    Complex::new(c, s)
}

/// Stationary-phase amplitude `a(xi)` with `chi^(xi) = a(xi) |xi|^{-(d+1)/2} + E(xi)`:
/// `(2 pi i)^{-1} [exp(2 pi i h(-xi) - i phi) K-^{-1/2} - exp(-2 pi i h(xi) + i phi) K+^{-1/2}]`,
/// `phi = pi (d - 1) / 4`.
pub fn asymptotic_amplitude<F: Real>(body: &ConvexBody<F>, xi: &Vect<F>) -> Result<Complex<F>> {
    require_smooth(body, "asymptotic_amplitude")?;
    if xi.is_zero() {
        return Err(Error::Domain("amplitude needs a nonzero frequency".into()));
    }
    let (h_plus, h_minus, rho_plus, rho_minus) = antipodal_data(body, xi);
    let phi = F::PI() * F::from_int(body.dim() as i64 - 1) / F::lit(4.0);
    let two_pi = F::two_pi();
    let bracket = cis(two_pi * h_minus - phi) * rho_minus.sqrt() - cis(-two_pi * h_plus + phi) * rho_plus.sqrt();
    // (2 pi i)^{-1} = -i / (2 pi)
    Ok(bracket * Complex::new(F::zero(), -F::one() / two_pi))
}

/// Leading asymptotic term `a(xi) |xi|^{-(d+1)/2}` of `chi^_body(xi)`.
pub fn asymptotic_transform<F: Real>(body: &ConvexBody<F>, xi: &Vect<F>) -> Result<Transform<F>> {
    let a = asymptotic_amplitude(body, xi)?;
    let decay = xi.norm().powf(-F::from_int(body.dim() as i64 + 1) / F::lit(2.0));
    Ok(Transform { value: a * decay, error: F::nan(), method: Method::Asymptotic })
}

/// Main term `A(r, t, xi)` of the annulus transform:
/// `pi^{-1} r^{(d-1)/2} |xi|^{-(d+1)/2} [exp(2 pi i r h(-xi) - i phi) K-^{-1/2} sin(pi t h(-xi))
///  + exp(-2 pi i r h(xi) + i phi) K+^{-1/2} sin(pi t h(xi))]`.
pub fn asymptotic_main_term<F: Real>(annulus: &Annulus<F>, xi: &Vect<F>) -> Result<Complex<F>> {
    let body = annulus.body();
    require_smooth(body, "asymptotic_main_term")?;
    if xi.is_zero() {
        return Err(Error::Domain("main term needs a nonzero frequency".into()));
    }
    let (r, t) = (annulus.r(), annulus.t());
    let d = body.dim() as i64;
    let (h_plus, h_minus, rho_plus, rho_minus) = antipodal_data(body, xi);
    let phi = F::PI() * F::from_int(d - 1) / F::lit(4.0);
    let two_pi = F::two_pi();
    let minus = cis(two_pi * r * h_minus - phi) * (rho_minus.sqrt() * (F::PI() * t * h_minus).sin());
    let plus = cis(-two_pi * r * h_plus + phi) * (rho_plus.sqrt() * (F::PI() * t * h_plus).sin());
    let prefactor = r.powf(F::from_int(d - 1) / F::lit(2.0)) * xi.norm().powf(-F::from_int(d + 1) / F::lit(2.0)) / F::PI();
    Ok((minus + plus) * prefactor)
}

/// `B = chi^_{Omega(r,t)} - A`.
pub fn main_term_remainder<F: Real>(annulus: &Annulus<F>, xi: &Vect<F>) -> Result<Complex<F>> {
    Ok(ft_annulus(annulus, xi)?.value - asymptotic_main_term(annulus, xi)?)
}

/// `|B| / (r^{(d-3)/2} t |xi|^{-(d+1)/2})`, bounded for `r |xi| >= 1`.
pub fn normalized_remainder<F: Real>(annulus: &Annulus<F>, xi: &Vect<F>) -> Result<F> {
    let d = annulus.dim() as i64;
    let scale = annulus.r().powf(F::from_int(d - 3) / F::lit(2.0))
        * annulus.t()
        * xi.norm().powf(-F::from_int(d + 1) / F::lit(2.0));
    Ok(main_term_remainder(annulus, xi)?.norm() / scale)
}

/// Truncation tail of a lattice series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailEstimate<F> {
    pub cutoff_radius: F,
    /// Majorant of the omitted part of the series.
    pub bound: F,
    /// Fitted `C` of the coefficient envelope (NaN when not fitted).
    pub envelope_constant: F,
}

/// `r^{(d-1)/2} |n|^{-(d+1)/2} min(1, t |n|)`.
pub fn coefficient_envelope<F: Real>(dim: usize, r: F, t: F, modulus: F) -> F {
    let d = dim as i64;
    r.powf(F::from_int(d - 1) / F::lit(2.0))
        * modulus.powf(-F::from_int(d + 1) / F::lit(2.0))
        * (t * modulus).min(F::one())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ParsevalResult<F> {
    /// `sum_{0 < |n| <= N} |chi^_{Omega(r,t)}(n)|^2`.
    pub value: F,
    pub tail: TailEstimate<F>,
    /// Aggregated error of `value` from per-coefficient quadrature estimates.
    pub quadrature_error: F,
    /// Set when `quadrature_error` exceeds [`QUADRATURE_FLAG_FRACTION`] of `value`.
    pub flagged: bool,
    pub method: Method,
    pub terms: u64,
}

#[derive(Clone, Copy)]
struct ShellSum<F> {
    sum: CompensatedSum<F>,
    error: F,
    max_ratio: F,
    terms: u64,
}

fn frequency<F: Real>(n: &[i64]) -> Vect<F> {
    Vect::from_ints(n)
}

/// Rigorous tail for boxes: `|P+ - P-|^2 <= 2 (P+^2 + P-^2)` with
/// `P <= prod_i min(2 a_i, 1 / (pi |n_i|))`, and `|n| > N` forces some `|n_i| > N / sqrt(d)`.
fn box_tail_bound<F: Real>(halfsides: &[F], lambdas: [F; 2], cutoff: u64) -> F {
    let d = halfsides.len();
    let m = ((cutoff as f64) / (d as f64).sqrt()).floor().max(1.0) as i64;
    let pi2 = F::PI() * F::PI();
    let full_line = |a: F| -> F {
        const K: i64 = 4096;
        let mut s = CompensatedSum::new();
        s.add(F::lit(4.0) * a * a);
        for k in 1..=K {
            let v = (a + a).min(F::one() / (F::PI() * F::from_int(k)));
            s.add(F::lit(2.0) * v * v);
        }
        s.value() + F::lit(2.0) / (pi2 * F::from_int(K))
    };
    let line_tail = F::lit(2.0) / (pi2 * F::from_int(m));
    let mut total = F::zero();
    for lambda in lambdas {
        if lambda <= F::zero() {
            continue;
        }
        let sides: Vec<F> = halfsides.iter().map(|s| *s * lambda).collect();
        let fulls: Vec<F> = sides.iter().map(|a| full_line(*a)).collect();
        for i in 0..d {
            total += line_tail * (0..d).filter(|j| *j != i).map(|j| fulls[j]).fold(F::one(), |p, f| p * f);
        }
    }
    F::lit(2.0) * total
}

/// Parseval estimate of the variance of the translated count, summed shell by shell in
/// increasing `|n|` with a fixed reduction order, plus a tail estimate for `|n| > N`.
pub fn parseval_variance<F: Real>(annulus: &Annulus<F>, cutoff: u64) -> Result<ParsevalResult<F>> {
    if cutoff < 1 {
        return Err(Error::Domain("Parseval cutoff must be >= 1".into()));
    }
    let dim = annulus.dim();
    let (r, t) = (annulus.r(), annulus.t());
    let n_f = F::from_int(cutoff as i64);
    let zero_tail = TailEstimate { cutoff_radius: n_f, bound: F::zero(), envelope_constant: F::zero() };
    let method = match annulus.body().kind() {
        BodyKind::Ball | BodyKind::Ellipsoid | BodyKind::Box => Method::ClosedForm,
        _ => Method::Quadrature,
    };
    if t == F::zero() {
        return Ok(ParsevalResult { value: F::zero(), tail: zero_tail, quadrature_error: F::zero(), flagged: false, method, terms: 0 });
    }
    let transform = AnnulusTransform::new(annulus, n_f * F::from_int(dim as i64).sqrt())?;
    let shells: Vec<Result<ShellSum<F>>> = map_shells(cutoff, |k| {
        let mut acc = ShellSum { sum: CompensatedSum::new(), error: F::zero(), max_ratio: F::zero(), terms: 0 };
        let mut failure = None;
        for_each_in_shell(dim, k, |n| {
            if failure.is_some() {
                return;
            }
            let xi = frequency::<F>(n);
            match transform.eval(&xi) {
                Ok(c) => {
                    let m = c.value.norm();
                    acc.sum.add(m * m);
                    acc.error += (m + m + c.error) * c.error;
                    acc.max_ratio = acc.max_ratio.max(m / coefficient_envelope(dim, r, t, xi.norm()));
                    acc.terms += 1;
                }
                Err(e) => failure = Some(e),
            }
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(acc),
        }
    });
    let mut total = CompensatedSum::new();
    let mut error = F::zero();
    let mut terms = 0;
    let mut envelope_constant = F::zero();
    let outer_from = ((cutoff as f64) * 0.8).floor() as u64 + 1;
    for (i, shell) in shells.into_iter().enumerate() {
        let shell = shell?;
        total.merge(&shell.sum);
        error += shell.error;
        terms += shell.terms;
        if i as u64 + 1 >= outer_from.min(cutoff) {
            envelope_constant = envelope_constant.max(shell.max_ratio);
        }
    }
    let value = total.value();
    let bound = match annulus.body().halfsides() {
        Some(sides) => box_tail_bound(sides, [annulus.outer(), annulus.inner()], cutoff),
        None => {
            envelope_constant * envelope_constant * r.powi(dim as i32 - 1) * envelope_tail_majorant(dim, cutoff, t)
        }
    };
    Ok(ParsevalResult {
        value,
        tail: TailEstimate { cutoff_radius: n_f, bound, envelope_constant },
        quadrature_error: error,
        flagged: error > F::lit(QUADRATURE_FLAG_FRACTION) * value,
        method,
        terms,
    })
}

/// Coefficients `chi^_{Omega(r,t)}(n)` for `0 < |n| <= cutoff`, in summation order.
pub fn annulus_coefficients<F: Real>(annulus: &Annulus<F>, cutoff: u64) -> Result<Vec<FourierCoefficient<F>>> {
    let dim = annulus.dim();
    let transform = AnnulusTransform::new(annulus, F::from_int(cutoff as i64) * F::from_int(dim as i64).sqrt())?;
    let shells: Vec<Result<Vec<FourierCoefficient<F>>>> = map_shells(cutoff, |k| {
        let mut out = Vec::new();
        let mut failure = None;
        for_each_in_shell(dim, k, |n| match transform.eval(&frequency::<F>(n)) {
            Ok(c) => out.push(FourierCoefficient { frequency: n.to_vec(), value: c.value, method: c.method }),
            Err(e) => failure = Some(e),
        });
        failure.map_or(Ok(out), Err)
    });
    Ok(shells.into_iter().collect::<Result<Vec<_>>>()?.concat())
}

/// Columns `n_1..n_d, re, im, method`.
pub fn write_coefficients_csv<F: Real, W: Write>(coefficients: &[FourierCoefficient<F>], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Config(format!("writing coefficient CSV: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let dim = coefficients.first().map_or(0, |c| c.frequency.len());
    let mut header: Vec<String> = (1..=dim).map(|i| format!("n_{i}")).collect();
    header.extend(["re", "im", "method"].map(String::from));
    w.write_record(&header).map_err(io)?;
    for c in coefficients {
        let mut rec: Vec<String> = c.frequency.iter().map(|n| n.to_string()).collect();
        rec.push(c.value.re.as_f64().to_string());
        rec.push(c.value.im.as_f64().to_string());
        rec.push(c.method.name().into());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Config(format!("writing coefficient CSV: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::CosineTerm;
    use crate::special::bessel_j;
    use std::f64::consts::PI;

    fn v(xs: &[f64]) -> Vect<f64> {
        Vect::from_f64(xs)
    }

    fn disk() -> ConvexBody<f64> {
        ConvexBody::ball(2, 1.0).unwrap()
    }

    fn wobbly() -> ConvexBody<f64> {
        ConvexBody::perturbed_disk(1.0, vec![CosineTerm { harmonic: 3, amplitude: 0.05, phase: 0.2 }]).unwrap()
    }

    #[test]
    fn ball_examples() {
        assert!((ft_ball(2, 1.0, &v(&[0.0, 0.0])).unwrap() - PI).abs() < 1e-15);
        let rho: f64 = 0.5;
        let z = 2.0 * PI * rho;
        let closed = (z.sin() - z * z.cos()) / (2.0 * PI * PI * rho.powi(3));
        let got = ft_ball(3, 1.0, &v(&[0.0, rho, 0.0])).unwrap();
        assert!((got - 4.0 / PI).abs() < 1e-12 && (closed - 4.0 / PI).abs() < 1e-12);
        let got = ft_ball(2, 1.0, &v(&[1.0, 0.0])).unwrap();
        assert!((got - bessel_j(BesselOrder::integer(1), 2.0 * PI).unwrap()).abs() < 1e-14);
        // d = 5 volume 8 pi^2 / 15
        assert!((ft_ball_radial(5, 1.0, 0.0).unwrap() - 8.0 * PI * PI / 15.0).abs() < 1e-13);
    }

    #[test]
    fn box_examples() {
        assert_eq!(ft_box(&[0.5, 1.5], &[0.0, 0.0]), 3.0);
        assert!(ft_box::<f64>(&[0.5, 0.5], &[1.0, 0.0]).abs() < 1e-15);
        let expected = (6.1 * PI).sin() / PI * 6.1;
        assert!((ft_box(&[3.05, 3.05], &[1.0, 0.0]) - expected).abs() < 1e-14);
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        let q = ft_body_quadrature(&disk(), &v(&[1.0, 0.0]), 0).unwrap();
        let exact = ft_ball(2, 1.0, &v(&[1.0, 0.0])).unwrap();
        assert!((q.value - Complex::new(exact, 0.0)).norm() < 1e-8);
        assert_eq!(q.method, Method::Quadrature);
        let ell = ConvexBody::ellipsoid(&[2.0, 1.0]).unwrap();
        let q = ft_body_quadrature(&ell, &v(&[0.0, 1.0]), 0).unwrap();
        let affine = 2.0 * ft_ball(2, 1.0, &v(&[0.0, 1.0])).unwrap();
        assert!((q.value.re - affine).abs() < 1e-8 && q.value.im.abs() < 1e-8);
        let e3 = ConvexBody::ellipsoid(&[1.5, 1.0, 0.8]).unwrap();
        let xi = v(&[0.7, -0.4, 1.1]);
        let q = ft_body_quadrature(&e3, &xi, 0).unwrap();
        assert!((q.value.re - ft_body(&e3, &xi).unwrap().value.re).abs() < 1e-8);
    }

    #[test]
    fn conjugate_symmetry() {
        let body = wobbly();
        for xi in [v(&[1.0, 2.0]), v(&[-3.0, 0.5])] {
            let a = ft_body(&body, &xi).unwrap().value;
            let b = ft_body(&body, &-xi).unwrap().value;
            assert!((a - b.conj()).norm() < 1e-12);
            assert!(a.im.abs() > 1e-6, "asymmetric body must have complex coefficients");
        }
    }

    #[test]
    fn box_body_rejects_quadrature() {
        let b = ConvexBody::box_body(&[1.0, 1.0]).unwrap();
        assert!(matches!(ft_body_quadrature(&b, &v(&[1.0, 0.0]), 0), Err(Error::UnsupportedKind { .. })));
        assert!(matches!(ft_body_quadrature(&disk(), &v(&[1e6, 0.0]), 0), Err(Error::NodeBudget { .. })));
    }

    #[test]
    fn annulus_examples() {
        let a = Annulus::new(disk(), 10.0, 0.0).unwrap();
        assert_eq!(ft_annulus(&a, &v(&[1.0, 2.0])).unwrap().value.norm(), 0.0);
        let a = Annulus::new(disk(), 10.0, 0.1).unwrap();
        assert!((ft_annulus(&a, &v(&[0.0, 0.0])).unwrap().value.re - a.volume()).abs() < 1e-12);
        let xi = v(&[3.0, 0.0]);
        let exact = ft_annulus(&a, &xi).unwrap().value;
        let main = asymptotic_main_term(&a, &xi).unwrap();
        let rel = (exact - main).norm() / exact.norm();
        assert!(rel < 1.0 / (10.0 * 3.0), "relative gap {rel}");
    }

    #[test]
    fn main_term_reduces_to_shell_expansion() {
        for d in [2usize, 3] {
            let a = Annulus::new(ConvexBody::ball(d, 1.0).unwrap(), 7.3, 0.2).unwrap();
            let rho: f64 = 2.6;
            let xi = Vect::axis(d, 0) * rho;
            let df = d as f64;
            let shell = 2.0 / PI
                * 7.3f64.powf((df - 1.0) / 2.0)
                * rho.powf(-(df + 1.0) / 2.0)
                * (2.0 * PI * 7.3 * rho - PI * (df - 1.0) / 4.0).cos()
                * (PI * 0.2 * rho).sin();
            let main = asymptotic_main_term(&a, &xi).unwrap();
            assert!((main.re - shell).abs() < 1e-13 && main.im.abs() < 1e-13);
        }
    }

    #[test]
    fn amplitude_properties() {
        // symmetric body: a(-xi) = conj a(xi)
        let ell = ConvexBody::ellipsoid(&[2.0, 1.0]).unwrap();
        let xi = v(&[1.3, -0.4]);
        let a = asymptotic_amplitude(&ell, &xi).unwrap();
        let b = asymptotic_amplitude(&ell, &-xi).unwrap();
        assert!((a - b.conj()).norm() < 1e-14);
        // |a| <= max K^{-1/2} / pi
        let (_, max_inv_k) = ell.inverse_curvature_range().unwrap();
        assert!(a.norm() <= max_inv_k.sqrt() / PI + 1e-12);
        // ellipse (2,1) along the major axis: K = 2 and h = 2 on both sides
        let xi = v(&[1.0, 0.0]);
        let a = asymptotic_amplitude(&ell, &xi).unwrap();
        let expected = Complex::new(0.0, -1.0 / (2.0 * PI))
            * (cis(2.0 * PI * 2.0 - PI / 4.0) - cis(-2.0 * PI * 2.0 + PI / 4.0))
            * (0.5f64).sqrt();
        assert!((a - expected).norm() < 1e-14);
    }

    #[test]
    fn remainder_decays_faster_than_leading_term() {
        for body in [disk(), ConvexBody::ellipsoid(&[2.0, 1.0]).unwrap(), ConvexBody::ball(3, 1.0).unwrap()] {
            let d = body.dim() as f64;
            let mut worst: f64 = 0.0;
            for j in 0..40 {
                let rho = 2.0 * 500f64.powf(j as f64 / 39.0);
                let mut xi = Vect::zeros(body.dim());
                xi[0] = rho * 0.6;
                xi[1] = rho * 0.8;
                let exact = ft_body(&body, &xi).unwrap().value;
                let lead = asymptotic_transform(&body, &xi).unwrap().value;
                worst = worst.max((exact - lead).norm() * rho.powf((d + 3.0) / 2.0));
            }
            assert!(worst < 1.0, "{:?}: {worst}", body.kind());
        }
    }

    #[test]
    fn parseval_box_oracle() {
        let a = Annulus::new(ConvexBody::<f64>::box_body(&[1.0, 1.0]).unwrap(), 3.0, 0.125).unwrap();
        let p = parseval_variance(&a, 128).unwrap();
        assert!((p.value - 31.5).abs() < 0.5, "{}", p.value);
        assert!(31.5 - p.value <= p.tail.bound, "tail {} misses {}", p.tail.bound, 31.5 - p.value);
        let zero = Annulus::new(disk(), 3.0, 0.0).unwrap();
        assert_eq!(parseval_variance(&zero, 10).unwrap().value, 0.0);
    }

    #[test]
    fn envelope_holds_with_single_constant() {
        // one constant bounds every coefficient, uniformly in r; the fitted outer-shell
        // constant never exceeds it
        for r in [8.0, 32.0] {
            let a = Annulus::new(disk(), r, 0.05).unwrap();
            let p = parseval_variance(&a, 60).unwrap();
            let worst = annulus_coefficients(&a, 60)
                .unwrap()
                .iter()
                .map(|c| {
                    let modulus = (c.frequency.iter().map(|x| (x * x) as f64).sum::<f64>()).sqrt();
                    c.value.norm() / coefficient_envelope(2, r, 0.05, modulus)
                })
                .fold(0.0, f64::max);
            assert!(worst < 2.5, "r={r}: {worst}");
            assert!(p.tail.envelope_constant <= worst);
        }
    }

    #[test]
    fn quadrature_backed_parseval_matches_sampling_scale() {
        let a = Annulus::new(wobbly(), 4.0, 0.25).unwrap();
        let p = parseval_variance(&a, 24).unwrap();
        assert_eq!(p.method, Method::Quadrature);
        assert!(!p.flagged);
        let vol = a.volume();
        assert!(p.value > 0.3 * vol && p.value < 3.0 * vol, "{} vs {vol}", p.value);
    }

    #[test]
    fn coefficient_csv() {
        let a = Annulus::new(disk(), 2.0, 0.5).unwrap();
        let cs = annulus_coefficients(&a, 2).unwrap();
        let mut buf = Vec::new();
        write_coefficients_csv(&cs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n_1,n_2,re,im,method\n"));
        assert_eq!(text.lines().count(), cs.len() + 1);
        assert!(text.contains("closed_form"));
    }
}
