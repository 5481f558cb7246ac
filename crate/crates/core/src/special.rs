//! Bessel functions of integer and half-integer order, and the sine integral.

use num_complex::Complex;

use crate::error::{domain, Result};
use crate::scalar::Real;

/// Order of a Bessel function, stored as twice its value so that half-integers are exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BesselOrder {
    twice: u32,
}

impl BesselOrder {
    pub const fn integer(n: u32) -> Self {
        Self { twice: 2 * n }
    }

    /// The order `k + 1/2`.
    pub const fn half(k: u32) -> Self {
        Self { twice: 2 * k + 1 }
    }

    pub const fn from_twice(twice: u32) -> Self {
        Self { twice }
    }

    /// Order `d/2`, the one appearing in the Fourier transform of the d-ball.
    pub const fn ball(dim: usize) -> Self {
        Self { twice: dim as u32 }
    }

    pub fn from_f64(nu: f64) -> Option<Self> {
        let t = 2.0 * nu;
        (nu >= 0.0 && t.fract() == 0.0 && t <= u32::MAX as f64).then(|| Self { twice: t as u32 })
    }

    pub fn twice(self) -> u32 {
        self.twice
    }

    pub fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    pub fn value<F: Real>(self) -> F {
        F::lit(self.twice as f64 / 2.0)
    }
}

/// Gamma function at `twice / 2` for positive `twice`.
pub fn gamma_half_integer<F: Real>(twice: u32) -> F {
    assert!(twice > 0, "gamma pole at 0");
    let (mut x, mut g) = if twice % 2 == 0 {
        (F::one(), F::one())
    } else {
        (F::lit(0.5), F::PI().sqrt())
    };
    let target = F::lit(twice as f64 / 2.0);
    while x < target {
        g *= x;
        x += F::one();
    }
    g
}

const SERIES_LIMIT: f64 = 8.0;

/// `J_nu(z) / (z/2)^nu` by its power series; accurate for `z <= 8` in double precision.
fn normalized_series<F: Real>(order: BesselOrder, z: F) -> F {
    let nu: F = order.value();
    let q = -(z * z) / F::lit(4.0);
    let mut term = F::one() / gamma_half_integer::<F>(order.twice + 2);
    let mut sum = term;
    let mut k = F::zero();
    for _ in 0..200 {
        k += F::one();
        term = term * q / (k * (k + nu));
        sum += term;
        if term.abs() <= F::epsilon() * F::lit(0.25) * sum.abs() {
            break;
        }
    }
    sum
}

/// Hankel asymptotic expansion, used when `z` is large compared with `nu^2`.
fn hankel_asymptotic<F: Real>(order: BesselOrder, z: F) -> F {
    let nu: F = order.value();
    let mu = F::lit(4.0) * nu * nu;
    let eight_z = F::lit(8.0) * z;
    let mut p = F::one();
    let mut q = F::zero();
    let mut term = F::one();
    let mut last = F::infinity();
    for k in 1..60 {
        let odd = F::from_int(2 * k - 1);
        term = term * (mu - odd * odd) / (F::from_int(k) * eight_z);
        let mag = term.abs();
        if mag > last {
            break;
        }
        last = mag;
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if mag < F::epsilon() * F::lit(0.1) {
            break;
        }
    }
    let chi = z - (nu / F::lit(2.0) + F::lit(0.25)) * F::PI();
    (F::lit(2.0) / (F::PI() * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Miller's backward recurrence for integer order, normalized by `J_0 + 2 sum J_2k = 1`.
fn miller<F: Real>(n: u32, z: F) -> F {
    let zf = z.as_f64();
    let top = (n as f64).max(zf);
    let mut start = (top + 20.0 + (40.0 * top).sqrt()) as u32;
    start += start % 2;
    let two_over_z = F::lit(2.0) / z;
    let big = F::lit(1e200);
    let tiny = F::lit(1e-200);
    let mut j_next = F::zero();
    let mut j_cur = F::lit(1e-30);
    let mut norm = F::zero();
    let mut ans = if start == n { j_cur } else { F::zero() };
    for k in (1..=start).rev() {
        let j_prev = F::from_int(k as i64) * two_over_z * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        if j_cur.abs() > big {
            j_cur = j_cur * tiny;
            j_next = j_next * tiny;
            ans = ans * tiny;
            norm = norm * tiny;
        }
        let idx = k - 1;
        if idx == n {
            ans = j_cur;
        }
        if idx > 0 && idx % 2 == 0 {
            norm += F::lit(2.0) * j_cur;
        }
    }
    norm += j_cur;
    ans / norm
}

/// Half-integer orders from the closed forms for `J_{-1/2}` and `J_{1/2}`.
fn half_integer<F: Real>(order: BesselOrder, z: F) -> F {
    let k = order.twice / 2; // order = k + 1/2
    let pref = (F::lit(2.0) / (F::PI() * z)).sqrt();
    let (s, c) = z.sin_cos();
    let j_minus = pref * c;
    let j_half = pref * s;
    if k == 0 {
        return j_half;
    }
    let nu_top = F::from_int(k as i64) + F::lit(0.5);
    if nu_top < z {
        // forward recurrence is stable while the order stays below the argument
        let (mut prev, mut cur) = (j_minus, j_half);
        for m in 0..k {
            let nu = F::from_int(m as i64) + F::lit(0.5);
            let next = F::lit(2.0) * nu / z * cur - prev;
            prev = cur;
            cur = next;
        }
        return cur;
    }
    // backward recurrence from well above the order, rescaled to the closed forms
    let start = (k as f64 + z.as_f64() + 30.0 + (40.0 * (k as f64).max(z.as_f64())).sqrt()) as u32;
    let mut j_next = F::zero();
    let mut j_cur = F::lit(1e-30);
    let mut ans = F::zero();
    let big = F::lit(1e200);
    let tiny = F::lit(1e-200);
    // j_cur holds J_{m + 1/2}
    for m in (0..start).rev() {
        let nu = F::from_int(m as i64 + 1) + F::lit(0.5);
        let j_prev = F::lit(2.0) * nu / z * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        if j_cur.abs() > big {
            j_cur = j_cur * tiny;
            j_next = j_next * tiny;
            ans = ans * tiny;
        }
        if m == k {
            ans = j_cur;
        }
    }
    // j_cur ~ J_{1/2}, j_next ~ J_{3/2}; J_{-1/2} = (1/z) J_{1/2} - J_{3/2}
    let j_minus_rec = j_cur / z - j_next;
    if j_half.abs() >= j_minus.abs() {
        ans * (j_half / j_cur)
    } else {
        ans * (j_minus / j_minus_rec)
    }
}

/// Bessel function of the first kind `J_nu(z)` for `nu` a nonnegative integer or
/// half-integer and `z >= 0`.
pub fn bessel_j<F: Real>(order: BesselOrder, z: F) -> Result<F> {
    if !(z >= F::zero()) {
        return domain(format!("bessel_j argument must be nonnegative, got {z}"));
    }
    if z == F::zero() {
        return Ok(if order.twice == 0 { F::one() } else { F::zero() });
    }
    Ok(bessel_j_positive(order, z))
}

fn bessel_j_positive<F: Real>(order: BesselOrder, z: F) -> F {
    let nu: F = order.value();
    if z <= F::lit(SERIES_LIMIT) {
        return (z / F::lit(2.0)).powf(nu) * normalized_series(order, z);
    }
    if !order.is_integer() {
        return half_integer(order, z);
    }
    if z >= F::lit(25.0) + nu * nu {
        hankel_asymptotic(order, z)
    } else {
        miller(order.twice / 2, z)
    }
}

/// `J_nu(z) / (z/2)^nu`, continuous at `z = 0` where it equals `1 / Gamma(nu + 1)`.
pub fn bessel_j_normalized<F: Real>(order: BesselOrder, z: F) -> Result<F> {
    if !(z >= F::zero()) {
        return domain(format!("bessel_j argument must be nonnegative, got {z}"));
    }
    if z <= F::lit(SERIES_LIMIT) {
        return Ok(normalized_series(order, z));
    }
    Ok(bessel_j_positive(order, z) / (z / F::lit(2.0)).powf(order.value()))
}

/// Sine integral `Si(x) = int_0^x sin(s)/s ds`.
pub fn sine_integral<F: Real>(x: F) -> F {
    if x < F::zero() {
        return -sine_integral(-x);
    }
    if x <= F::lit(2.0) {
        let mut sum = F::zero();
        let mut power = x; // x^(2k+1)/(2k+1)!
        let x2 = x * x;
        for k in 0..60 {
            let denom = F::from_int(2 * k + 1);
            let term = power / denom;
            if k % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
            if term.abs() < F::epsilon() * sum.abs() {
                break;
            }
            power = power * x2 / (F::from_int(2 * k + 2) * F::from_int(2 * k + 3));
        }
        return sum;
    }
    // E1(ix) by Lentz's continued fraction; Si(x) = pi/2 + Im(e^{-ix} cf)
    let one = Complex::new(F::one(), F::zero());
    let mut b = Complex::new(F::one(), x);
    let tiny = F::min_positive_value().sqrt();
    let mut c = Complex::new(F::one() / tiny, F::zero());
    let mut d = one / b;
    let mut h = d;
    for i in 1..10_000 {
        let a = -F::from_int(i * i);
        b = b + Complex::new(F::lit(2.0), F::zero());
        d = one / (d * a + b);
        c = b + one * a / c;
        let del = c * d;
        h = h * del;
        if (del - one).norm() < F::epsilon() {
            break;
        }
    }
    let (s, co) = x.sin_cos();
    let h = Complex::new(co, -s) * h;
    F::FRAC_PI_2() + h.im
}
