//! Quadrature rules: Gauss-Legendre, adaptive Gauss-Kronrod, and rules on S^1 and S^2.

use crate::scalar::Real;
use crate::summation::CompensatedSum;
use crate::vector::Vect;

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration on P_n.
pub fn gauss_legendre<F: Real>(n: usize) -> (Vec<F>, Vec<F>) {
    assert!(n >= 1);
    let mut nodes = vec![F::zero(); n];
    let mut weights = vec![F::zero(); n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = F::lit(-x);
        nodes[n - 1 - i] = F::lit(x);
        weights[i] = F::lit(w);
        weights[n - 1 - i] = F::lit(w);
    }
    (nodes, weights)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate on [a, b] with the embedded 7-point Gauss error estimate.
pub fn gauss_kronrod15<F: Real>(f: &impl Fn(F) -> F, a: F, b: F) -> (F, F) {
    let center = (a + b) / F::lit(2.0);
    let half = (b - a) / F::lit(2.0);
    let fc = f(center);
    let mut kronrod = fc * F::lit(WGK[7]);
    let mut gauss = fc * F::lit(WG[3]);
    for j in 0..7 {
        let dx = half * F::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * F::lit(WGK[j]);
        if j % 2 == 1 {
            gauss += pair * F::lit(WG[j / 2]);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive Gauss-Kronrod integration; returns (value, error estimate).
pub fn integrate_adaptive<F: Real>(f: impl Fn(F) -> F, a: F, b: F, abs_tol: F, max_intervals: usize) -> (F, F) {
    let mut intervals = vec![{
        let (v, e) = gauss_kronrod15(&f, a, b);
        (a, b, v, e)
    }];
    loop {
        let err: F = intervals.iter().map(|iv| iv.3).sum();
        if err <= abs_tol || intervals.len() >= max_intervals {
            break;
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .fold((0, F::neg_infinity()), |acc, (i, iv)| if iv.3 > acc.1 { (i, iv.3) } else { acc });
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = (lo + hi) / F::lit(2.0);
        for (l, h) in [(lo, mid), (mid, hi)] {
            let (v, e) = gauss_kronrod15(&f, l, h);
            intervals.push((l, h, v, e));
        }
    }
    intervals.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let value = intervals.iter().map(|iv| iv.2).collect::<CompensatedSum<F>>().value();
    let err = intervals.iter().map(|iv| iv.3).sum();
    (value, err)
}

/// A quadrature rule over unit directions in R^d (d = 2 or 3).
#[derive(Clone, Debug)]
pub struct SphereRule<F> {
    pub directions: Vec<Vect<F>>,
    pub weights: Vec<F>,
}

impl<F: Real> SphereRule<F> {
    /// Equispaced trapezoid rule on the circle; spectrally accurate for smooth periodic integrands.
    pub fn circle(nodes: usize) -> Self {
        let step = F::two_pi() / F::from_int(nodes as i64);
        let directions = (0..nodes).map(|j| Vect::planar(step * F::from_int(j as i64))).collect();
        Self { directions, weights: vec![step; nodes] }
    }

    /// Product Gauss-Legendre (in the cosine of the polar angle about `pole`) times
    /// trapezoid (in azimuth) rule on S^2.
    pub fn sphere(polar_nodes: usize, azimuth_nodes: usize, pole: Vect<F>) -> Self {
        let pole = pole.normalized();
        let (e1, e2) = pole.orthonormal_complement();
        let (us, ws) = gauss_legendre::<F>(polar_nodes);
        let step = F::two_pi() / F::from_int(azimuth_nodes as i64);
        let mut directions = Vec::with_capacity(polar_nodes * azimuth_nodes);
        let mut weights = Vec::with_capacity(polar_nodes * azimuth_nodes);
        for (u, w) in us.iter().zip(&ws) {
            let s = (F::one() - *u * *u).max(F::zero()).sqrt();
            for j in 0..azimuth_nodes {
                let (sp, cp) = (step * F::from_int(j as i64)).sin_cos();
                directions.push(pole * *u + e1 * (s * cp) + e2 * (s * sp));
                weights.push(*w * step);
            }
        }
        Self { directions, weights }
    }

    /// Default-resolution rule for smooth integrands on S^{d-1}.
    pub fn standard(dim: usize) -> Self {
        match dim {
            2 => Self::circle(4096),
            3 => Self::sphere(96, 192, Vect::axis(3, 2)),
            _ => panic!("sphere rules exist for d = 2, 3"),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Vect<F>) -> F) -> F {
        self.directions.iter().zip(&self.weights).map(|(d, w)| f(d) * *w).collect::<CompensatedSum<F>>().value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in [1usize, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre::<f64>(n);
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "n={n}");
            let deg = 2 * n - 2;
            let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((integral - 2.0 / (deg as f64 + 1.0)).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn adaptive_handles_peaks() {
        let (v, e) = integrate_adaptive(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10, 2000);
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v - exact).abs() < 1e-8, "{v} vs {exact} (err {e})");
    }

    #[test]
    fn sphere_area_and_moments() {
        let rule = SphereRule::<f64>::sphere(16, 32, Vect::from_f64(&[0.2, 0.3, 0.9]));
        assert!((rule.integrate(|_| 1.0) - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        let second = rule.integrate(|d| d[0] * d[0]);
        assert!((second - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
        let circle = SphereRule::<f64>::circle(64);
        assert!((circle.integrate(|d| d[1] * d[1]) - std::f64::consts::PI).abs() < 1e-13);
    }
}
