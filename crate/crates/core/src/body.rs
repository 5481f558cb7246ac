//! Smooth convex bodies described by their support functions.
//!
//! A body is stored in the representation that makes its support function cheap:
//! closed forms for balls, ellipsoids and boxes, a radial cosine series for perturbed
//! disks, and a lazily evaluated Minkowski sum for difference bodies. Everything the
//! Fourier and variance code consumes (support point, Gaussian curvature, gauge, volume)
//! is derived from that description.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::SphereRule;
use crate::scalar::Real;
use crate::special::gamma_half_integer;
use crate::vector::Vect;

/// Number of angles on which a perturbed disk's curvature is validated at construction.
pub const CURVATURE_VALIDATION_ANGLES: usize = 4096;

const FD_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyKind {
    Ball,
    Ellipsoid,
    PerturbedDisk,
    Box,
    DifferenceBody,
}

impl BodyKind {
    pub fn name(self) -> &'static str {
        match self {
            BodyKind::Ball => "ball",
            BodyKind::Ellipsoid => "ellipsoid",
            BodyKind::PerturbedDisk => "perturbed_disk",
            BodyKind::Box => "box",
            BodyKind::DifferenceBody => "difference_body",
        }
    }
}

/// One term `amplitude * cos(harmonic * theta - phase)` of a radial function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineTerm<F> {
    pub harmonic: u32,
    pub amplitude: F,
    pub phase: F,
}

/// Planar star body `{ rho u(theta) : rho <= r(theta) }` with
/// `r(theta) = base + sum_k a_k cos(k theta - phase_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialSeries<F> {
    base: F,
    terms: Vec<CosineTerm<F>>,
}

impl<F: Real> RadialSeries<F> {
    /// Unvalidated radial function; [`ConvexBody::perturbed_disk`] adds the convexity checks.
    pub fn new(base: F, terms: Vec<CosineTerm<F>>) -> Self {
        Self { base, terms }
    }

    /// Enclosed area `(1/2) int r(theta)^2 dtheta` by the trapezoid rule, which is exact for
    /// trigonometric polynomials of degree below the node count.
    pub fn area(&self) -> F {
        let rule = SphereRule::<F>::circle(CURVATURE_VALIDATION_ANGLES);
        rule.integrate(|u| {
            let r = self.radius(u[1].atan2(u[0]));
            r * r
        }) / F::lit(2.0)
    }

    /// `(r, r', r'')` at `theta`.
    #[inline]
    fn eval(&self, theta: F) -> (F, F, F) {
        let mut r = self.base;
        let mut d1 = F::zero();
        let mut d2 = F::zero();
        for term in &self.terms {
            let k = F::from_int(term.harmonic as i64);
            let (s, c) = (k * theta - term.phase).sin_cos();
            r += term.amplitude * c;
            d1 -= term.amplitude * k * s;
            d2 -= term.amplitude * k * k * c;
        }
        (r, d1, d2)
    }

    fn radius(&self, theta: F) -> F {
        self.eval(theta).0
    }

    /// Signed curvature of the polar curve at `theta`.
    fn curvature_at(&self, theta: F) -> F {
        let (r, d1, d2) = self.eval(theta);
        let q = r * r + d1 * d1;
        (r * r + F::lit(2.0) * d1 * d1 - r * d2) / (q * q.sqrt())
    }

    /// Polar angle of the boundary point with outward normal at angle `phi`:
    /// the maximizer of `r(theta) cos(theta - phi)`.
    fn support_angle(&self, phi: F) -> F {
        if let Some(theta) = self.newton_support(phi, phi) {
            return theta;
        }
        let samples = 256usize.max(16 * self.max_harmonic() as usize);
        let step = F::two_pi() / F::from_int(samples as i64);
        let mut best = (F::neg_infinity(), phi);
        for j in 0..samples {
            let theta = phi + step * F::from_int(j as i64);
            let v = self.radius(theta) * (theta - phi).cos();
            if v > best.0 {
                best = (v, theta);
            }
        }
        self.newton_support(phi, best.1).unwrap_or(best.1)
    }

    fn newton_support(&self, phi: F, start: F) -> Option<F> {
        let mut theta = start;
        for _ in 0..40 {
            let (r, d1, d2) = self.eval(theta);
            let (s, c) = (theta - phi).sin_cos();
            let g1 = d1 * c - r * s;
            let g2 = d2 * c - F::lit(2.0) * d1 * s - r * c;
            if !(g2 < F::zero()) {
                return None;
            }
            let delta = g1 / g2;
            theta -= delta;
            if delta.abs() <= F::lit(1e-13) {
                // a local maximum of a linear functional on a strictly convex curve is global
                let (r, _, _) = self.eval(theta);
                return (r * (theta - phi).cos() > F::zero()).then_some(theta);
            }
        }
        None
    }

    fn max_harmonic(&self) -> u32 {
        self.terms.iter().map(|t| t.harmonic).max().unwrap_or(0)
    }

    pub fn base(&self) -> F {
        self.base
    }

    pub fn terms(&self) -> &[CosineTerm<F>] {
        &self.terms
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Shape<F> {
    Ball { radius: F },
    Ellipsoid { semiaxes: Vect<F> },
    PerturbedDisk(RadialSeries<F>),
    Box { halfsides: Vect<F> },
    Difference(Box<ConvexBody<F>>),
}

/// A convex body in R^2 or R^3 containing the origin in its interior.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexBody<F> {
    dim: usize,
    shape: Shape<F>,
}

/// Support point, Gaussian curvature and unit normal for one direction.
#[derive(Clone, Copy, Debug)]
pub struct BodyPointData<F> {
    pub sigma: Vect<F>,
    pub curvature: F,
    pub normal: Vect<F>,
}

fn positive<F: Real>(x: F, what: &str) -> Result<F> {
    if x > F::zero() && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidBody(format!("{what} must be positive and finite, got {x}")))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::InvalidBody(format!("dimension {dim} unsupported (expected 2 or 3)")))
    }
}

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume<F: Real>(dim: usize) -> F {
    F::PI().powf(F::lit(dim as f64 / 2.0)) / gamma_half_integer::<F>(dim as u32 + 2)
}

impl<F: Real> ConvexBody<F> {
    pub fn ball(dim: usize, radius: F) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, shape: Shape::Ball { radius: positive(radius, "radius")? } })
    }

    pub fn ellipsoid(semiaxes: &[F]) -> Result<Self> {
        check_dim(semiaxes.len())?;
        for a in semiaxes {
            positive(*a, "semiaxis")?;
        }
        Ok(Self { dim: semiaxes.len(), shape: Shape::Ellipsoid { semiaxes: Vect::from_slice(semiaxes) } })
    }

    /// Axis-aligned box `prod [-s_i, s_i]`. Not smooth: only counting, gauge, support and
    /// the closed-form Fourier transform accept it.
    pub fn box_body(halfsides: &[F]) -> Result<Self> {
        check_dim(halfsides.len())?;
        for s in halfsides {
            positive(*s, "halfside")?;
        }
        Ok(Self { dim: halfsides.len(), shape: Shape::Box { halfsides: Vect::from_slice(halfsides) } })
    }

    /// Planar body with radial function `base + sum a_k cos(k theta - phase_k)`.
    ///
    /// Fails unless the radius and the boundary curvature are strictly positive on
    /// [`CURVATURE_VALIDATION_ANGLES`] equispaced angles.
    pub fn perturbed_disk(base: F, terms: Vec<CosineTerm<F>>) -> Result<Self> {
        positive(base, "base radius")?;
        if terms.iter().any(|t| t.harmonic == 0) {
            return Err(Error::InvalidBody("cosine harmonics must be >= 1".into()));
        }
        let series = RadialSeries { base, terms };
        let step = F::two_pi() / F::from_int(CURVATURE_VALIDATION_ANGLES as i64);
        for j in 0..CURVATURE_VALIDATION_ANGLES {
            let theta = step * F::from_int(j as i64);
            let r = series.radius(theta);
            if !(r > F::zero()) {
                return Err(Error::InvalidBody(format!("radial function {r} <= 0 at angle {theta}")));
            }
            let k = series.curvature_at(theta);
            if !(k > F::zero()) {
                return Err(Error::NonPositiveCurvature {
                    direction: vec![theta.cos().as_f64(), theta.sin().as_f64()],
                    value: k.as_f64(),
                });
            }
        }
        Ok(Self { dim: 2, shape: Shape::PerturbedDisk(series) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> BodyKind {
        match self.shape {
            Shape::Ball { .. } => BodyKind::Ball,
            Shape::Ellipsoid { .. } => BodyKind::Ellipsoid,
            Shape::PerturbedDisk(_) => BodyKind::PerturbedDisk,
            Shape::Box { .. } => BodyKind::Box,
            Shape::Difference(_) => BodyKind::DifferenceBody,
        }
    }

    pub fn is_smooth(&self) -> bool {
        match &self.shape {
            Shape::Box { .. } => false,
            Shape::Difference(inner) => inner.is_smooth(),
            _ => true,
        }
    }

    /// True when `h(x) = h(-x)` for all `x` by construction.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self.shape, Shape::PerturbedDisk(_))
    }

    pub fn ball_radius(&self) -> Option<F> {
        match self.shape {
            Shape::Ball { radius } => Some(radius),
            _ => None,
        }
    }

    pub fn semiaxes(&self) -> Option<&[F]> {
        match &self.shape {
            Shape::Ellipsoid { semiaxes } => Some(semiaxes.as_slice()),
            _ => None,
        }
    }

    pub fn halfsides(&self) -> Option<&[F]> {
        match &self.shape {
            Shape::Box { halfsides } => Some(halfsides.as_slice()),
            _ => None,
        }
    }

    fn check_direction(&self, xi: &Vect<F>) -> Result<()> {
        if xi.dim() != self.dim {
            return Err(Error::Domain(format!("direction has dimension {}, body has {}", xi.dim(), self.dim)));
        }
        if xi.is_zero() {
            return Err(Error::Domain("direction must be nonzero".into()));
        }
        if xi.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("direction must be finite".into()));
        }
        Ok(())
    }

    fn require_smooth(&self, operation: &'static str) -> Result<()> {
        if self.is_smooth() {
            Ok(())
        } else {
            Err(Error::UnsupportedKind { operation, kind: self.kind().name() })
        }
    }

    /// Support function `h(xi) = sup_{y in body} y . xi`.
    pub fn support(&self, xi: &Vect<F>) -> Result<F> {
        self.check_direction(xi)?;
        Ok(self.support_unchecked(xi))
    }

    /// Support function without argument validation; `xi` must be nonzero.
    #[inline]
    pub fn support_unchecked(&self, xi: &Vect<F>) -> F {
        match &self.shape {
            Shape::Ball { radius } => *radius * xi.norm(),
            Shape::Ellipsoid { semiaxes } => {
                let mut s = F::zero();
                for i in 0..self.dim {
                    let v = semiaxes[i] * xi[i];
                    s += v * v;
                }
                s.sqrt()
            }
            Shape::Box { halfsides } => (0..self.dim).map(|i| halfsides[i] * xi[i].abs()).sum(),
            Shape::PerturbedDisk(series) => {
                let phi = xi[1].atan2(xi[0]);
                let theta = series.support_angle(phi);
                series.radius(theta) * (theta - phi).cos() * xi.norm()
            }
            Shape::Difference(inner) => inner.support_unchecked(xi) + inner.support_unchecked(&-*xi),
        }
    }

    /// Support point `sigma(xi)` and inverse Gaussian curvature there, for unit `theta`.
    #[inline]
    pub(crate) fn frame_unchecked(&self, theta: &Vect<F>) -> (Vect<F>, F) {
        match &self.shape {
            Shape::Ball { radius } => (*theta * *radius, radius.powi(self.dim as i32 - 1)),
            Shape::Ellipsoid { semiaxes } => {
                let mut sigma = *theta;
                for i in 0..self.dim {
                    sigma[i] = sigma[i] * semiaxes[i] * semiaxes[i];
                }
                let h = sigma.dot(theta).sqrt();
                let sigma = sigma.scale(F::one() / h);
                let prod: F = semiaxes.iter().fold(F::one(), |p, a| p * *a);
                (sigma, prod * prod / h.powi(self.dim as i32 + 1))
            }
            Shape::PerturbedDisk(series) => {
                let phi = theta[1].atan2(theta[0]);
                let t = series.support_angle(phi);
                let r = series.radius(t);
                (Vect::planar(t) * r, F::one() / series.curvature_at(t))
            }
            Shape::Difference(inner) => {
                let (s_plus, rho_plus) = inner.frame_unchecked(theta);
                let (s_minus, rho_minus) = inner.frame_unchecked(&-*theta);
                // planar: radii of curvature of a Minkowski sum add
                (s_plus - s_minus, rho_plus + rho_minus)
            }
            Shape::Box { .. } => (Vect::zeros(self.dim), F::nan()),
        }
    }

    /// Support point `sigma(xi)` (the gradient of `h`), Gaussian curvature and normal.
    pub fn support_point(&self, xi: &Vect<F>) -> Result<BodyPointData<F>> {
        self.check_direction(xi)?;
        self.require_smooth("support_point")?;
        let normal = xi.normalized();
        let (sigma, inv_k) = self.frame_unchecked(&normal);
        let curvature = F::one() / inv_k;
        if !(curvature > F::zero()) || !curvature.is_finite() {
            return Err(Error::NonPositiveCurvature { direction: normal.to_f64_vec(), value: curvature.as_f64() });
        }
        Ok(BodyPointData { sigma, curvature, normal })
    }

    /// Gaussian curvature of the boundary at `sigma(xi)`.
    pub fn curvature(&self, xi: &Vect<F>) -> Result<F> {
        Ok(self.support_point(xi)?.curvature)
    }

    /// Curvature from finite differences of the support function: the inverse of the
    /// determinant of its Hessian restricted to the tangent space at the unit normal.
    pub fn curvature_finite_difference(&self, xi: &Vect<F>) -> Result<F> {
        self.check_direction(xi)?;
        self.require_smooth("curvature_finite_difference")?;
        let theta = xi.normalized();
        let h0 = self.support_unchecked(&theta);
        let second = |a: &Vect<F>, b: &Vect<F>, step: F| -> F {
            let f = |sa: F, sb: F| self.support_unchecked(&(theta + *a * sa + *b * sb));
            if a == b {
                (f(step, F::zero()) - h0 - h0 + f(-step, F::zero())) / (step * step)
            } else {
                (f(step, step) - f(step, -step) - f(-step, step) + f(-step, -step)) / (F::lit(4.0) * step * step)
            }
        };
        let richardson = |a: &Vect<F>, b: &Vect<F>| -> F {
            let coarse = second(a, b, F::lit(FD_STEP));
            let fine = second(a, b, F::lit(FD_STEP / 2.0));
            (F::lit(4.0) * fine - coarse) / F::lit(3.0)
        };
        let inv_k = match self.dim {
            2 => {
                let t = Vect::from_slice(&[-theta[1], theta[0]]);
                richardson(&t, &t)
            }
            _ => {
                let (e1, e2) = theta.orthonormal_complement();
                let h11 = richardson(&e1, &e1);
                let h22 = richardson(&e2, &e2);
                let h12 = richardson(&e1, &e2);
                h11 * h22 - h12 * h12
            }
        };
        let k = F::one() / inv_k;
        if !(k > F::zero()) || !k.is_finite() {
            return Err(Error::NonPositiveCurvature { direction: theta.to_f64_vec(), value: k.as_f64() });
        }
        Ok(k)
    }

    /// Minkowski functional `inf { lambda > 0 : x in lambda * body }`.
    pub fn gauge(&self, x: &Vect<F>) -> F {
        if x.is_zero() {
            return F::zero();
        }
        match &self.shape {
            Shape::Ball { radius } => x.norm() / *radius,
            Shape::Ellipsoid { semiaxes } => {
                let mut s = F::zero();
                for i in 0..self.dim {
                    let v = x[i] / semiaxes[i];
                    s += v * v;
                }
                s.sqrt()
            }
            Shape::Box { halfsides } => {
                (0..self.dim).map(|i| x[i].abs() / halfsides[i]).fold(F::zero(), |m, v| m.max(v))
            }
            Shape::PerturbedDisk(series) => x.norm() / series.radius(x[1].atan2(x[0])),
            Shape::Difference(_) => self.planar_gauge_from_frames(x),
        }
    }

    /// Gauge of a planar body known only through support points: locate the normal angle
    /// whose support point lies on the ray through `x`.
    fn planar_gauge_from_frames(&self, x: &Vect<F>) -> F {
        let target = x[1].atan2(x[0]);
        let wrap = |a: F| -> F {
            let mut a = a;
            while a > F::PI() {
                a -= F::two_pi();
            }
            while a <= -F::PI() {
                a += F::two_pi();
            }
            a
        };
        let mut phi = target;
        for _ in 0..60 {
            let u = Vect::planar(phi);
            let (sigma, rho) = self.frame_unchecked(&u);
            let mismatch = wrap(sigma[1].atan2(sigma[0]) - target);
            let slope = rho * sigma.dot(&u) / sigma.norm_sq();
            let delta = mismatch / slope;
            phi -= delta;
            if delta.abs() < F::lit(1e-14) {
                let (sigma, _) = self.frame_unchecked(&Vect::planar(phi));
                return x.norm() / sigma.norm();
            }
        }
        // fall back to the dual description: gauge(x) = max_phi x.u(phi) / h(u(phi))
        let ratio = |phi: F| {
            let u = Vect::planar(phi);
            x.dot(&u) / self.support_unchecked(&u)
        };
        let samples = 512;
        let step = F::two_pi() / F::from_int(samples);
        let best = (0..samples)
            .map(|j| step * F::from_int(j))
            .fold((F::neg_infinity(), F::zero()), |b, p| {
                let v = ratio(p);
                if v > b.0 {
                    (v, p)
                } else {
                    b
                }
            });
        let (mut lo, mut hi) = (best.1 - step, best.1 + step);
        let g = F::lit(0.618_033_988_749_894_8);
        for _ in 0..80 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if ratio(a) < ratio(b) {
                lo = a;
            } else {
                hi = b;
            }
        }
        ratio((lo + hi) / F::lit(2.0))
    }

    /// Volume (area when d = 2).
    pub fn volume(&self) -> F {
        match &self.shape {
            Shape::Ball { radius } => unit_ball_volume::<F>(self.dim) * radius.powi(self.dim as i32),
            Shape::Ellipsoid { semiaxes } => unit_ball_volume::<F>(self.dim) * semiaxes.iter().fold(F::one(), |p, a| p * *a),
            Shape::Box { halfsides } => halfsides.iter().fold(F::one(), |p, s| p * (*s + *s)),
            Shape::PerturbedDisk(series) => series.area(),
            Shape::Difference(_) => self.curvature_integral(&SphereRule::standard(self.dim)) / F::from_int(self.dim as i64),
        }
    }

    /// `int_{S^{d-1}} K(sigma(theta))^{-1} h(theta) dtheta`, which equals `d * volume`.
    pub fn curvature_integral(&self, rule: &SphereRule<F>) -> F {
        assert_eq!(rule.directions.first().map(|d| d.dim()), Some(self.dim));
        rule.integrate(|theta| {
            let (sigma, inv_k) = self.frame_unchecked(theta);
            inv_k * sigma.dot(theta)
        })
    }

    /// The difference body `A = body + (-body)`, with `h_A(xi) = h(xi) + h(-xi)`.
    pub fn difference_body(&self) -> Self {
        let two = F::lit(2.0);
        let shape = match &self.shape {
            Shape::Ball { radius } => Shape::Ball { radius: *radius * two },
            Shape::Ellipsoid { semiaxes } => Shape::Ellipsoid { semiaxes: *semiaxes * two },
            Shape::Box { halfsides } => Shape::Box { halfsides: *halfsides * two },
            _ => Shape::Difference(Box::new(self.clone())),
        };
        Self { dim: self.dim, shape }
    }

    /// `zeta(x) = (sigma(x) - sigma(-x)) . x = h(x) + h(-x)`.
    pub fn zeta(&self, x: &Vect<F>) -> Result<F> {
        self.check_direction(x)?;
        Ok(self.support_unchecked(x) + self.support_unchecked(&-*x))
    }

    /// Measured `(min, max)` of `h` on unit directions of the standard sphere rule.
    pub fn support_range(&self) -> (F, F) {
        let rule = SphereRule::<F>::standard(self.dim);
        rule.directions.iter().fold((F::infinity(), F::neg_infinity()), |(lo, hi), d| {
            let h = self.support_unchecked(d);
            (lo.min(h), hi.max(h))
        })
    }

    /// Measured `(min, max)` of `1/K` over the standard sphere rule (smooth bodies).
    pub fn inverse_curvature_range(&self) -> Result<(F, F)> {
        self.require_smooth("inverse_curvature_range")?;
        let rule = SphereRule::<F>::standard(self.dim);
        Ok(rule.directions.iter().fold((F::infinity(), F::neg_infinity()), |(lo, hi), d| {
            let (_, inv_k) = self.frame_unchecked(d);
            (lo.min(inv_k), hi.max(inv_k))
        }))
    }

    /// Upper bound of `h(e_axis)` and `h(-e_axis)`: the extent of the body along an axis.
    pub fn axis_extent(&self, axis: usize) -> (F, F) {
        let e = Vect::axis(self.dim, axis);
        (self.support_unchecked(&-e), self.support_unchecked(&e))
    }

    /// Interval of `tau` with `gauge(fixed, tau) <= level`, where `fixed` gives the first
    /// `d - 1` coordinates. Convexity makes the set a (possibly empty) interval.
    pub fn chord(&self, fixed: &[F], level: F) -> Option<(F, F)> {
        debug_assert_eq!(fixed.len() + 1, self.dim);
        let last = self.dim - 1;
        match &self.shape {
            Shape::Ball { radius } => {
                let reach = level * *radius;
                let rem = reach * reach - fixed.iter().map(|x| *x * *x).sum::<F>();
                (rem >= F::zero()).then(|| {
                    let w = rem.sqrt();
                    (-w, w)
                })
            }
            Shape::Ellipsoid { semiaxes } => {
                let rem = level * level - fixed.iter().enumerate().map(|(i, x)| (*x / semiaxes[i]).powi(2)).sum::<F>();
                (rem >= F::zero()).then(|| {
                    let w = semiaxes[last] * rem.sqrt();
                    (-w, w)
                })
            }
            Shape::Box { halfsides } => fixed
                .iter()
                .enumerate()
                .all(|(i, x)| x.abs() <= level * halfsides[i])
                .then(|| (-level * halfsides[last], level * halfsides[last])),
            Shape::PerturbedDisk(_) | Shape::Difference(_) => self.planar_chord(fixed[0], level),
        }
    }

    /// Planar chord at abscissa `x` through the boundary parametrization by normal angle:
    /// `sigma_x` increases on the lower arc `(-pi, 0)` and decreases on the upper arc `(0, pi)`,
    /// with derivative `-rho sin(theta)`.
    fn planar_chord(&self, x: F, level: F) -> Option<(F, F)> {
        if level <= F::zero() {
            return None;
        }
        let target = x / level;
        let (left, right) = self.axis_extent(0);
        if target > right || target < -left {
            return None;
        }
        let crossing = |lo: F, hi: F, increasing: bool| -> F {
            let (mut lo, mut hi) = (lo, hi);
            let mut theta = (lo + hi) / F::lit(2.0);
            for _ in 0..100 {
                let (sigma, rho) = self.frame_unchecked(&Vect::planar(theta));
                let f = sigma[0] - target;
                if (f > F::zero()) == increasing {
                    hi = theta;
                } else {
                    lo = theta;
                }
                let slope = -rho * theta.sin();
                let newton = theta - f / slope;
                let next = if slope != F::zero() && newton > lo && newton < hi { newton } else { (lo + hi) / F::lit(2.0) };
                if (next - theta).abs() <= F::lit(1e-15) || hi - lo <= F::lit(1e-15) {
                    return next;
                }
                theta = next;
            }
            theta
        };
        let lower = crossing(-F::PI(), F::zero(), true);
        let upper = crossing(F::zero(), F::PI(), false);
        let y = |theta: F| self.frame_unchecked(&Vect::planar(theta)).0[1] * level;
        Some((y(lower), y(upper)))
    }

    /// Reference chord from the gauge alone, by golden-section and bisection.
    #[cfg(test)]
    fn chord_by_bisection(&self, fixed: &[F], level: F) -> Option<(F, F)> {
        let last = self.dim - 1;
        let point = |tau: F| {
            let mut p = Vect::zeros(self.dim);
            for (i, x) in fixed.iter().enumerate() {
                p[i] = *x;
            }
            p[last] = tau;
            self.gauge(&p)
        };
        let (down, up) = self.axis_extent(last);
        let slack = F::one() + level;
        let (mut lo, mut hi) = (-level * down - slack, level * up + slack);
        let tol = F::lit(1e-12) * (level + F::one());
        // golden-section search for the minimizer of the convex gauge along the line
        let g = F::lit(0.618_033_988_749_894_8);
        let (mut a, mut b) = (lo, hi);
        while b - a > tol {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if point(c) < point(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let center = (a + b) / F::lit(2.0);
        if point(center) > level {
            return None;
        }
        let bisect = |mut inside: F, mut outside: F| {
            while (outside - inside).abs() > tol {
                let mid = (inside + outside) / F::lit(2.0);
                if point(mid) <= level {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            inside
        };
        hi = bisect(center, hi);
        lo = bisect(center, lo);
        Some((lo, hi))
    }
}

/// JSON description of a body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Ball {
        radius: f64,
        #[serde(default = "default_dim")]
        dim: usize,
    },
    Ellipsoid {
        semiaxes: Vec<f64>,
    },
    PerturbedDisk {
        base: f64,
        /// `[harmonic, amplitude, phase]` triples of `amplitude * cos(harmonic * theta - phase)`.
        #[serde(default)]
        cosine_coeffs: Vec<(u32, f64, f64)>,
    },
    Box {
        halfsides: Vec<f64>,
    },
}

fn default_dim() -> usize {
    2
}

impl BodySpec {
    pub fn build<F: Real>(&self) -> Result<ConvexBody<F>> {
        let conv = |xs: &[f64]| xs.iter().map(|x| F::lit(*x)).collect::<Vec<F>>();
        match self {
            BodySpec::Ball { radius, dim } => ConvexBody::ball(*dim, F::lit(*radius)),
            BodySpec::Ellipsoid { semiaxes } => ConvexBody::ellipsoid(&conv(semiaxes)),
            BodySpec::Box { halfsides } => ConvexBody::box_body(&conv(halfsides)),
            BodySpec::PerturbedDisk { base, cosine_coeffs } => ConvexBody::perturbed_disk(
                F::lit(*base),
                cosine_coeffs
                    .iter()
                    .map(|&(harmonic, a, p)| CosineTerm { harmonic, amplitude: F::lit(a), phase: F::lit(p) })
                    .collect(),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn v(xs: &[f64]) -> Vect<f64> {
        Vect::from_f64(xs)
    }

    fn wobbly() -> ConvexBody<f64> {
        ConvexBody::perturbed_disk(1.0, vec![CosineTerm { harmonic: 3, amplitude: 0.05, phase: 0.0 }]).unwrap()
    }

    #[test]
    fn support_examples() {
        let ball = ConvexBody::ball(3, 2.0).unwrap();
        assert_eq!(ball.support(&v(&[0.0, 0.0, 3.0])).unwrap(), 6.0);
        let ell = ConvexBody::ellipsoid(&[2.0, 1.0]).unwrap();
        assert_eq!(ell.support(&v(&[1.0, 0.0])).unwrap(), 2.0);
        assert!((ell.support(&v(&[1.0, 1.0])).unwrap() - 5f64.sqrt()).abs() < 1e-15);
        assert!(ell.support(&v(&[0.0, 0.0])).is_err());
    }

    /// Lagrange-multiplier oracle: max of y.xi on the ellipse is attained at
    /// y = A^2 xi / sqrt(xi^T A^2 xi); evaluate y.xi independently by dense parameter scan.
    #[test]
    fn ellipse_support_matches_parametric_scan() {
        let ell = ConvexBody::ellipsoid(&[2.0, 1.0]).unwrap();
        let xi = v(&[1.0, 1.0]);
        let scan = (0..200_000)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / 200_000.0;
                2.0 * t.cos() + t.sin()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((ell.support(&xi).unwrap() - scan).abs() < 1e-9);
    }

    #[test]
    fn support_point_examples() {
        let ball = ConvexBody::ball(2, 1.0).unwrap();
        let d = ball.support_point(&v(&[0.0, 5.0])).unwrap();
        assert!((d.sigma - v(&[0.0, 1.0])).norm() < 1e-15);
        let ell = ConvexBody::ellipsoid(&[2.0, 1.0]).unwrap();
        let d = ell.support_point(&v(&[1.0, 0.0])).unwrap();
        assert!((d.sigma - v(&[2.0, 0.0])).norm() < 1e-15);
        let d = ell.support_point(&v(&[1.0, 1.0])).unwrap();
        let expected = v(&[4.0, 1.0]) * (1.0 / 5f64.sqrt());
        assert!((d.sigma - expected).norm() < 1e-15);
        let boxed = ConvexBody::box_body(&[1.0, 1.0]).unwrap();
        assert!(matches!(boxed.support_point(&v(&[1.0, 0.0])), Err(Error::UnsupportedKind { .. })));
    }

    #[test]
    fn curvature_examples() {
        assert!((ConvexBody::ball(3, 2.0).unwrap().curvature(&v(&[1.0, 2.0, 3.0])).unwrap() - 0.25).abs() < 1e-15);
        for d in [2, 3] {
            let ball = ConvexBody::<f64>::ball(d, 1.0).unwrap();
            assert!((ball.curvature(&Vect::axis(d, 0)).unwrap() - 1.0).abs() < 1e-15);
        }
        let ell = ConvexBody::ellipsoid(&[2.0, 1.0]).unwrap();
        assert!((ell.curvature(&v(&[1.0, 0.0])).unwrap() - 2.0).abs() < 1e-14);
        let fd = ell.curvature_finite_difference(&v(&[1.0, 0.0])).unwrap();
        assert!((fd - 2.0).abs() < 1e-8, "finite-difference curvature {fd}");
    }

    #[test]
    fn finite_difference_curvature_agrees_with_closed_forms() {
        let bodies = [
            ConvexBody::ellipsoid(&[2.0, 1.0]).unwrap(),
            ConvexBody::ellipsoid(&[2.0, 1.0, 1.5]).unwrap(),
            wobbly(),
            wobbly().difference_body(),
        ];
        for body in &bodies {
            for j in 0..7 {
                let a = 0.37 + j as f64 * 0.9;
                let xi = if body.dim() == 2 { v(&[a.cos(), a.sin()]) } else { v(&[a.cos() * 0.6, a.sin() * 0.6, 0.8]) };
                let exact = body.curvature(&xi).unwrap();
                let fd = body.curvature_finite_difference(&xi).unwrap();
                assert!(((fd - exact) / exact).abs() < 1e-5, "{:?}: {fd} vs {exact}", body.kind());
            }
        }
    }

    #[test]
    fn gauge_examples() {
        assert_eq!(ConvexBody::ball(2, 1.0).unwrap().gauge(&v(&[3.0, 4.0])), 5.0);
        assert_eq!(ConvexBody::box_body(&[1.0, 1.0]).unwrap().gauge(&v(&[0.3, -0.9])), 0.9);
        let g = ConvexBody::ellipsoid(&[2.0, 1.0]).unwrap().gauge(&v(&[2.0, 1.0]));
        assert!((g - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(wobbly().gauge(&v(&[0.0, 0.0])), 0.0);
    }

    #[test]
    fn volume_examples() {
        assert!((ConvexBody::ball(2, 1.0).unwrap().volume() - PI).abs() < 1e-15);
        assert!((ConvexBody::ellipsoid(&[2.0, 1.0, 1.0]).unwrap().volume() - 8.0 * PI / 3.0).abs() < 1e-14);
        // (1/2) int (1 + a cos 3t)^2 = pi (1 + a^2 / 2)
        assert!((wobbly().volume() - PI * 1.00125).abs() < 1e-13);
        let flat = RadialSeries::new(1.0, vec![CosineTerm { harmonic: 3, amplitude: 0.1, phase: 0.0 }]);
        assert!((flat.area() - PI * 1.005).abs() < 1e-13);
        assert_eq!(ConvexBody::box_body(&[1.0, 0.5, 2.0]).unwrap().volume(), 8.0);
    }

    #[test]
    fn difference_bodies() {
        let ball = ConvexBody::ball(3, 1.0).unwrap().difference_body();
        assert_eq!(ball.ball_radius(), Some(2.0));
        let ell = ConvexBody::ellipsoid(&[2.0, 1.0]).unwrap().difference_body();
        assert_eq!(ell.semiaxes(), Some(&[4.0, 2.0][..]));
        let body = wobbly();
        let diff = body.difference_body();
        assert_eq!(diff.kind(), BodyKind::DifferenceBody);
        for j in 0..64 {
            let a = 2.0 * PI * j as f64 / 64.0;
            let u = v(&[a.cos(), a.sin()]);
            let h = diff.support(&u).unwrap();
            assert_eq!(h, body.support(&u).unwrap() + body.support(&-u).unwrap());
            // odd harmonic cancels; what survives is the sixth harmonic of the support function
            assert!((h - 2.0).abs() < 0.05, "h_A = {h}");
        }
        // gauge duality on the difference body
        for j in 0..16 {
            let a = 0.1 + 2.0 * PI * j as f64 / 16.0;
            let sigma = diff.support_point(&v(&[a.cos(), a.sin()])).unwrap().sigma;
            assert!((diff.gauge(&sigma) - 1.0).abs() < 1e-10);
        }
        let vol = diff.volume();
        // area of A lies between 4|body| (Brunn-Minkowski) and the disk of radius max h_A
        assert!(vol >= 4.0 * body.volume() - 1e-9 && vol < PI * 2.05 * 2.05);
    }

    #[test]
    fn zeta_examples() {
        let ball = ConvexBody::ball(2, 1.0).unwrap();
        assert_eq!(ball.zeta(&v(&[3.0, 4.0])).unwrap(), 10.0);
        let ell = ConvexBody::ellipsoid(&[2.0, 1.0]).unwrap();
        assert!((ell.zeta(&v(&[1.0, 1.0])).unwrap() - 2.0 * 5f64.sqrt()).abs() < 1e-15);
        let x = v(&[0.3, -1.7]);
        assert!((ell.zeta(&x).unwrap() - 2.0 * ell.support(&x).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn rejects_flat_point() {
        // a (k^2 + 1) = 1: the curvature vanishes at theta = pi
        let terms = vec![CosineTerm { harmonic: 3, amplitude: 0.1, phase: 0.0 }];
        assert!(matches!(ConvexBody::perturbed_disk(1.0, terms), Err(Error::NonPositiveCurvature { .. })));
    }

    #[test]
    fn rejects_nonconvex_perturbation() {
        let err = ConvexBody::perturbed_disk(1.0, vec![CosineTerm { harmonic: 5, amplitude: 0.2, phase: 0.0 }]).unwrap_err();
        assert!(matches!(err, Error::NonPositiveCurvature { .. }), "{err:?}");
        assert!(ConvexBody::perturbed_disk(1.0, vec![CosineTerm { harmonic: 0, amplitude: 0.2, phase: 0.0 }]).is_err());
        assert!(ConvexBody::<f64>::ball(4, 1.0).is_err());
        assert!(ConvexBody::ball(2, -1.0).is_err());
    }

    #[test]
    fn chords_match_gauge() {
        let bodies = [
            ConvexBody::ball(2, 1.3).unwrap(),
            ConvexBody::ellipsoid(&[2.0, 1.0, 0.7]).unwrap(),
            ConvexBody::box_body(&[1.0, 0.5]).unwrap(),
            wobbly(),
        ];
        for body in &bodies {
            let fixed: Vec<f64> = (0..body.dim() - 1).map(|i| 0.31 + 0.2 * i as f64).collect();
            let (lo, hi) = body.chord(&fixed, 2.0).unwrap();
            let mut p = fixed.clone();
            p.push(hi);
            assert!((body.gauge(&v(&p)) - 2.0).abs() < 1e-9, "{:?}", body.kind());
            *p.last_mut().unwrap() = lo;
            assert!((body.gauge(&v(&p)) - 2.0).abs() < 1e-9, "{:?}", body.kind());
            let far: Vec<f64> = fixed.iter().map(|x| x + 10.0).collect();
            assert!(body.chord(&far, 2.0).is_none());
        }
    }

    #[test]
    fn planar_chords_match_gauge_only_reference() {
        for body in [wobbly(), wobbly().difference_body()] {
            let (left, right) = body.axis_extent(0);
            for j in 0..=40 {
                let x = 3.0 * (-left + (left + right) * j as f64 / 40.0) * 0.999_999;
                let fast = body.chord(&[x], 3.0).unwrap();
                let slow = body.chord_by_bisection(&[x], 3.0).unwrap();
                assert!((fast.0 - slow.0).abs() < 1e-7 && (fast.1 - slow.1).abs() < 1e-7, "{x}: {fast:?} {slow:?}");
            }
            assert!(body.chord(&[3.0 * right + 1e-9], 3.0).is_none());
            assert!(body.chord(&[-3.0 * left - 1e-9], 3.0).is_none());
        }
    }

    #[test]
    fn body_spec_json() {
        let spec: BodySpec =
            serde_json::from_str(r#"{"type":"perturbed_disk","base":1.0,"cosine_coeffs":[[3,0.05,0.0]]}"#).unwrap();
        let body: ConvexBody<f64> = spec.build().unwrap();
        assert_eq!(body, wobbly());
        let spec: BodySpec = serde_json::from_str(r#"{"type":"ball","radius":2}"#).unwrap();
        assert_eq!(spec, BodySpec::Ball { radius: 2.0, dim: 2 });
        assert!(serde_json::from_str::<BodySpec>(r#"{"type":"torus","radius":2}"#).is_err());
    }

    #[test]
    fn single_precision_body() {
        let ell = ConvexBody::<f32>::ellipsoid(&[2.0, 1.0]).unwrap();
        let h = ell.support(&Vect::from_slice(&[1.0f32, 1.0])).unwrap();
        assert!((h - 5f32.sqrt()).abs() < 1e-6);
        assert!((ell.volume() - 2.0 * std::f32::consts::PI).abs() < 1e-5);
    }
}
