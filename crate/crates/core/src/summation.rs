//! Compensated accumulation and the fixed-order frequency-shell reduction.
//!
//! Every series in the crate is summed over integer vectors `n` grouped into shells
//! `k - 1 < |n| <= k`, lexicographic inside a shell. Shell partial sums are computed
//! independently (in parallel when a pool is available) and merged in increasing `k`,
//! so the floating point result does not depend on the number of workers.

use rayon::prelude::*;

use crate::scalar::Real;

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum<F> {
    sum: F,
    compensation: F,
}

impl<F: Real> CompensatedSum<F> {
    pub fn new() -> Self {
        Self { sum: F::zero(), compensation: F::zero() }
    }

    #[inline]
    pub fn add(&mut self, value: F) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    #[inline]
    pub fn value(&self) -> F {
        self.sum + self.compensation
    }
}

impl<F: Real> FromIterator<F> for CompensatedSum<F> {
    fn from_iter<I: IntoIterator<Item = F>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn compensated_sum<F: Real, I: IntoIterator<Item = F>>(iter: I) -> F {
    iter.into_iter().collect::<CompensatedSum<F>>().value()
}

fn isqrt(n: i64) -> i64 {
    if n <= 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Visits `m` with `lo_sq < m^2 <= hi_sq` in increasing order.
fn for_each_coordinate(lo_sq: i64, hi_sq: i64, mut f: impl FnMut(i64)) {
    if hi_sq < 0 || hi_sq <= lo_sq {
        return;
    }
    let hi = isqrt(hi_sq);
    let lo = if lo_sq < 0 { 0 } else { isqrt(lo_sq) + 1 };
    if lo > hi {
        return;
    }
    for m in (lo.max(1)..=hi).rev() {
        f(-m);
    }
    if lo == 0 {
        f(0);
    }
    for m in lo.max(1)..=hi {
        f(m);
    }
}

/// Calls `f` on every integer vector of dimension `dim` in shell `k`, i.e.
/// `(k-1)^2 < |n|^2 <= k^2`, in lexicographic order. Shell 1 excludes the origin.
pub fn for_each_in_shell(dim: usize, k: u64, mut f: impl FnMut(&[i64])) {
    assert!(k >= 1);
    let k = k as i64;
    let outer = k * k;
    let inner = (k - 1) * (k - 1);
    match dim {
        1 => for_each_coordinate(inner, outer, |a| f(&[a])),
        2 => {
            for a in -k..=k {
                let rem = a * a;
                for_each_coordinate(inner - rem, outer - rem, |b| f(&[a, b]));
            }
        }
        3 => {
            for a in -k..=k {
                let ra = a * a;
                let bmax = isqrt(outer - ra);
                for b in -bmax..=bmax {
                    let rem = ra + b * b;
                    for_each_coordinate(inner - rem, outer - rem, |c| f(&[a, b, c]));
                }
            }
        }
        _ => panic!("shell enumeration supports d <= 3"),
    }
}

/// Maps each shell `1..=cutoff` to a value, preserving shell order in the output.
pub fn map_shells<T, M>(cutoff: u64, map: M) -> Vec<T>
where
    T: Send,
    M: Fn(u64) -> T + Sync + Send,
{
    // Outer shells hold more points; reversing the work order balances the pool and
    // collect() restores shell order.
    let mut out: Vec<(u64, T)> = (1..=cutoff).rev().collect::<Vec<_>>().into_par_iter().map(|k| (k, map(k))).collect();
    out.reverse();
    debug_assert!(out.iter().enumerate().all(|(i, (k, _))| *k == i as u64 + 1));
    out.into_iter().map(|(_, v)| v).collect()
}

/// Surface area of the unit sphere in R^d.
pub fn unit_sphere_area<F: Real>(dim: usize) -> F {
    match dim {
        1 => F::lit(2.0),
        2 => F::two_pi(),
        3 => F::lit(4.0) * F::PI(),
        _ => F::lit(2.0) * F::PI().powf(F::lit(dim as f64 / 2.0)) / crate::special::gamma_half_integer::<F>(dim as u32),
    }
}

/// Rigorous majorant of `sum_{|n| > cutoff} |n|^{-(d+1)} min(1, slope |n|)^2` over `n` in Z^d.
///
/// The summand is radially decreasing, so each unit cube around a lattice point bounds it
/// from above after shifting by the half-diagonal; shells up to radius 8 are summed exactly.
pub fn envelope_tail_majorant<F: Real>(dim: usize, cutoff: u64, slope: F) -> F {
    let weight = |rho: F| -> F {
        let m = (slope * rho).min(F::one());
        rho.powi(-(dim as i32 + 1)) * m * m
    };
    let explicit_to = cutoff.max(8);
    let mut acc = CompensatedSum::new();
    for k in cutoff + 1..=explicit_to {
        for_each_in_shell(dim, k, |n| {
            let rho = n.iter().map(|&x| F::from_int(x * x)).sum::<F>().sqrt();
            acc.add(weight(rho));
        });
    }
    let half_diag = F::lit((dim as f64).sqrt() / 2.0);
    let u0 = F::from_int(explicit_to as i64) - half_diag - half_diag;
    // int_{u0}^inf u^{-2} min(1, slope u)^2 du
    let radial = if slope * u0 >= F::one() {
        F::one() / u0
    } else {
        slope * (F::lit(2.0) - slope * u0)
    };
    let stretch = (F::one() + half_diag / u0).powi(dim as i32 - 1);
    acc.value() + unit_sphere_area::<F>(dim) * stretch * radial
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancellation() {
        let mut acc = CompensatedSum::<f64>::new();
        for v in [1.0, 1e100, 1.0, -1e100] {
            acc.add(v);
        }
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn shells_partition_the_ball() {
        for dim in [2usize, 3] {
            let cutoff = 9u64;
            let mut seen = std::collections::BTreeSet::new();
            for k in 1..=cutoff {
                let mut prev: Option<Vec<i64>> = None;
                for_each_in_shell(dim, k, |n| {
                    let sq: i64 = n.iter().map(|x| x * x).sum();
                    let k = k as i64;
                    assert!((k - 1) * (k - 1) < sq && sq <= k * k);
                    if let Some(p) = &prev {
                        assert!(p.as_slice() < n, "lexicographic order");
                    }
                    prev = Some(n.to_vec());
                    assert!(seen.insert(n.to_vec()));
                });
            }
            // brute force count of 0 < |n| <= cutoff
            let c = cutoff as i64;
            let mut expected = 0;
            let range = -c..=c;
            if dim == 2 {
                for a in range.clone() {
                    for b in range.clone() {
                        let s = a * a + b * b;
                        if s > 0 && s <= c * c {
                            expected += 1;
                        }
                    }
                }
            } else {
                for a in range.clone() {
                    for b in range.clone() {
                        for e in range.clone() {
                            let s = a * a + b * b + e * e;
                            if s > 0 && s <= c * c {
                                expected += 1;
                            }
                        }
                    }
                }
            }
            assert_eq!(seen.len(), expected);
        }
    }

    #[test]
    fn map_shells_preserves_order() {
        let v = map_shells(50, |k| k * k);
        assert_eq!(v, (1..=50u64).map(|k| k * k).collect::<Vec<_>>());
    }

    #[test]
    fn tail_majorant_dominates_explicit_sum() {
        for dim in [2usize, 3] {
            for (cutoff, slope) in [(10u64, 0.01), (10, 1.0), (20, 0.05)] {
                let far = if dim == 2 { 400 } else { 60 };
                let mut explicit = 0.0;
                for k in cutoff + 1..=far {
                    for_each_in_shell(dim, k, |n| {
                        let rho = (n.iter().map(|x| (x * x) as f64).sum::<f64>()).sqrt();
                        let m = (slope * rho).min(1.0);
                        explicit += rho.powi(-(dim as i32 + 1)) * m * m;
                    });
                }
                let bound = envelope_tail_majorant::<f64>(dim, cutoff, slope);
                assert!(bound >= explicit, "d={dim} N={cutoff}: {bound} < {explicit}");
                assert!(bound < 4.0 * explicit + 1.0, "bound too loose: {bound} vs {explicit}");
            }
        }
    }
}
