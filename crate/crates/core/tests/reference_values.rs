//! Values computed independently (mpmath at 30 digits, numpy sums, exact integer
//! arithmetic for the grid counts) and frozen here.

use num_complex::Complex;
use thin_annuli::body::ConvexBody;
use thin_annuli::decomposition::{x_series, y_series};
use thin_annuli::fourier::{ft_ball, ft_body, parseval_variance};
use thin_annuli::lattice::{hlawka_diagnostic, sample_moments, Annulus, SamplingScheme};
use thin_annuli::oracle::brute_force_variance;
use thin_annuli::special::{bessel_j, sine_integral, BesselOrder};
use thin_annuli::vector::Vect;

fn assert_rel(value: f64, expected: f64, tol: f64) {
    assert!((value - expected).abs() <= tol * expected.abs(), "{value} vs {expected} (rel tol {tol})");
}

fn disk() -> ConvexBody<f64> {
    ConvexBody::ball(2, 1.0).unwrap()
}

#[test]
fn bessel_values() {
    let cases: [(f64, f64, f64); 7] = [
        (0.0, 10.0, -0.245_935_764_451_348_335_2),
        (1.0, 25.5, -0.062_048_536_491_484_101_72),
        (2.5, 3.3, 0.444_490_971_425_711_026_1),
        (1.5, 0.001, 8.410_440_899_023_056_191e-6),
        (2.0, 50.0, -0.059_712_800_794_258_820_51),
        (0.5, 7.0, 0.198_128_774_076_344_820_2),
        (1.0, 100.0, -0.077_145_352_014_112_158_03),
    ];
    for (nu, z, expected) in cases {
        let value = bessel_j(BesselOrder::from_f64(nu).unwrap(), z).unwrap();
        assert!((value - expected).abs() <= 1e-13 * expected.abs().max(1e-3), "J_{nu}({z}) = {value}");
    }
}

#[test]
fn sine_integral_values() {
    for (x, expected) in [
        (0.5, 0.493_107_418_043_066_689_2),
        (5.0, 1.549_931_244_944_674_137),
        (40.0, 1.586_985_119_354_784_507),
        (1000.0, 1.570_233_121_968_771_218),
    ] {
        assert_rel(sine_integral(x), expected, 1e-13);
    }
}

#[test]
fn transform_values() {
    let xi = Vect::from_f64(&[0.6, 0.8, 1.38]).normalized() * 2.3;
    assert_rel(ft_ball(3, 1.0, &xi).unwrap(), 0.022_554_151_712_015_188_84, 1e-11);
    let ellipse = ConvexBody::ellipsoid(&[2.0, 1.0]).unwrap();
    let value = ft_body(&ellipse, &Vect::from_f64(&[0.3, 0.7])).unwrap().value;
    assert!((value - Complex::new(-0.676_964_898_725_404_806, 0.0)).norm() < 1e-12, "{value}");
}

#[test]
fn disk_series_values() {
    let a = Annulus::new(disk(), 100.0, 0.01).unwrap();
    assert_rel(x_series(&a, 800).unwrap().partial_sum, 6.125_666_738_490_306, 1e-11);
    let y = y_series(&a, 800).unwrap().partial_sum;
    assert!((y - 0.146_733_025_282_546_95).abs() < 1e-10, "{y}");
}

#[test]
fn ellipse_x_value() {
    let a = Annulus::new(ConvexBody::ellipsoid(&[2.0, 1.0]).unwrap(), 20.0, 0.1).unwrap();
    assert_rel(x_series(&a, 100).unwrap().partial_sum, 20.923_827_652_563_304, 1e-11);
}

#[test]
fn parseval_values() {
    let a = Annulus::new(disk(), 8.0, 0.05).unwrap();
    assert_rel(parseval_variance(&a, 80).unwrap().value, 2.055_649_414_832_666_445, 1e-11);
    let square = Annulus::new(ConvexBody::box_body(&[1.0, 1.0]).unwrap(), 3.0, 0.125).unwrap();
    assert_rel(parseval_variance(&square, 128).unwrap().value, 31.272_072_470_886_517, 1e-12);
}

#[test]
fn parseval_box_converges_to_oracle() {
    let square = Annulus::new(ConvexBody::<f64>::box_body(&[1.0, 1.0]).unwrap(), 3.0, 0.125).unwrap();
    let gaps: Vec<f64> = [32, 64, 128, 256, 512]
        .iter()
        .map(|&n| {
            let p = parseval_variance(&square, n).unwrap();
            assert!(31.5 - p.value <= p.tail.bound);
            31.5 - p.value
        })
        .collect();
    assert!(gaps.iter().all(|g| *g > 0.0));
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn brute_force_disk_snapshot() {
    let a = Annulus::new(disk(), 2.5, 0.5).unwrap();
    let brute = brute_force_variance(&a, 256).unwrap();
    assert_eq!(brute.mean, 128_667.0 / 16_384.0);
    assert_eq!(brute.variance, 974_585_383.0 / 268_435_456.0);
    let fast = sample_moments(&a, SamplingScheme::Grid { m: 256 }, 2).unwrap();
    assert_eq!((fast.mean, fast.variance), (brute.mean, brute.variance));
}

#[test]
fn grid_mean_approaches_volume() {
    let a = Annulus::new(disk(), 5.0, 0.5).unwrap();
    let volume = a.volume();
    let errors: Vec<f64> = [16, 64, 256, 1024]
        .iter()
        .map(|&m| (sample_moments(&a, SamplingScheme::Grid { m }, 2).unwrap().mean - volume).abs())
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(errors[3] < 1e-3, "{errors:?}");
}

#[test]
fn hlawka_sequence_bounded() {
    let body = ConvexBody::perturbed_disk(
        1.0,
        vec![thin_annuli::body::CosineTerm { harmonic: 3, amplitude: 0.05, phase: 0.0 }],
    )
    .unwrap()
    .difference_body();
    let radii = [4.0, 8.0, 16.0, 32.0, 64.0, 128.0];
    let rows = hlawka_diagnostic(&body, &radii, SamplingScheme::Grid { m: 12 }).unwrap();
    let worst = rows.iter().map(|r| r.normalized).fold(0.0, f64::max);
    assert!(worst < 3.0, "{rows:?}");
}

/// `|Y| / |Omega(r,t)|` for the unit disk with `t = r^{-1/2}`. It is small but not monotone in
/// r: integer radii put `cos(4 pi r |n|)` in phase on many lattice norms.
#[test]
fn y_share_along_sweep() {
    let expected = [0.129_764_252_796_828_2, 0.057_122_815_446_613_31, 0.103_081_943_827_136_47];
    for (r, want) in [16.0f64, 64.0, 256.0].into_iter().zip(expected) {
        let t = r.powf(-0.5);
        let a = Annulus::new(disk(), r, t).unwrap();
        let y = y_series(&a, thin_annuli::decomposition::default_cutoff(t)).unwrap();
        assert_rel(y.estimate().abs() / a.volume(), want, 1e-9);
    }
}
