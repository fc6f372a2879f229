//! Integer-lattice bookkeeping and deterministic reductions shared by the
//! momentum sums.

use rayon::prelude::*;

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// slice length, so results are reproducible run to run.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Number of points of `Z³` with squared norm `m`, for every `m ≤ max_norm2`.
///
/// Built by convolving one-dimensional representation counts, which costs
/// `O(max_norm2^{3/2})` rather than enumerating the cube.
pub fn shell_counts(max_norm2: usize) -> Vec<u64> {
    let r1 = {
        let mut r = vec![0u64; max_norm2 + 1];
        let mut k = 0usize;
        while k * k <= max_norm2 {
            r[k * k] += if k == 0 { 1 } else { 2 };
            k += 1;
        }
        r
    };
    let convolve = |a: &[u64]| {
        let mut out = vec![0u64; max_norm2 + 1];
        let mut k = 0usize;
        while k * k <= max_norm2 {
            let w = if k == 0 { 1 } else { 2 };
            for m in 0..=(max_norm2 - k * k) {
                out[m + k * k] += w * a[m];
            }
            k += 1;
        }
        out
    };
    let r2 = convolve(&r1);
    convolve(&r2)
}

/// Nonempty shells `(m, count)` of `Z³ \ {0}` with `1 ≤ m ≤ max_norm2`.
pub fn nonzero_shells(max_norm2: usize) -> Vec<(usize, u64)> {
    shell_counts(max_norm2)
        .into_iter()
        .enumerate()
        .skip(1)
        .filter(|&(_, c)| c > 0)
        .collect()
}

/// All `n ∈ Z³` with `0 < |n|² ≤ max_norm2`, ordered by norm then lexicographically.
pub fn lattice_points(max_norm2: i64) -> Vec<[i32; 3]> {
    let r = (max_norm2 as f64).sqrt().floor() as i32;
    let mut pts = Vec::new();
    for x in -r..=r {
        for y in -r..=r {
            for z in -r..=r {
                let m = (x * x + y * y + z * z) as i64;
                if m > 0 && m <= max_norm2 {
                    pts.push([x, y, z]);
                }
            }
        }
    }
    pts.sort_by_key(|n| (norm2(n), *n));
    pts
}

pub fn norm2(n: &[i32; 3]) -> i64 {
    n.iter().map(|&c| (c as i64) * (c as i64)).sum()
}

/// Upper bound on `Σ_{n ∈ Z³, |n| > radius} |n|^{-4}`.
///
/// Each lattice point owns the unit cube centred on it; on that cube
/// `|x| ≤ |n| + √3/2`, so the sum is dominated by the integral of
/// `(|x| − √3/2)^{-4}` over `|x| ≥ radius − √3/2`. Requires `radius > √3`.
pub fn inverse_quartic_tail(radius: f64) -> f64 {
    let d = 3f64.sqrt() / 2.0;
    let s0 = radius - 2.0 * d;
    assert!(s0 > 0.0, "tail bound needs radius > √3");
    4.0 * std::f64::consts::PI * (1.0 / s0 + d / (s0 * s0) + d * d / (3.0 * s0 * s0 * s0))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (5 points).
pub(crate) const GAUSS5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// `Σ_{i<len} f(i)` reduced over fixed blocks of 4096 in a fixed order, so
/// the result does not depend on the thread count.
pub fn ordered_sum<F: Fn(usize) -> f64 + Sync>(len: usize, f: F) -> f64 {
    const BLOCK: usize = 4096;
    let partial: Vec<f64> = (0..len.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| (b * BLOCK..((b + 1) * BLOCK).min(len)).map(&f).sum())
        .collect();
    pairwise_sum(&partial)
}

/// Composite 5-point Gauss–Legendre rule on `[lo, hi]` with `panels` panels.
pub(crate) fn gauss_integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, panels: usize) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let h = (hi - lo) / panels as f64;
    let mut acc = Vec::with_capacity(panels);
    for k in 0..panels {
        let a = lo + k as f64 * h;
        let mid = a + 0.5 * h;
        let s: f64 = GAUSS5.iter().map(|&(x, w)| w * f(mid + 0.5 * h * x)).sum();
        acc.push(0.5 * h * s);
    }
    pairwise_sum(&acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_counts_match_brute_force() {
        let max = 40usize;
        let counts = shell_counts(max);
        let mut brute = vec![0u64; max + 1];
        for x in -7i64..=7 {
            for y in -7i64..=7 {
                for z in -7i64..=7 {
                    let m = (x * x + y * y + z * z) as usize;
                    if m <= max {
                        brute[m] += 1;
                    }
                }
            }
        }
        assert_eq!(counts, brute);
        assert_eq!(counts[1], 6);
        assert_eq!(counts[7], 0);
    }

    #[test]
    fn lattice_points_are_sorted_and_complete() {
        let pts = lattice_points(9);
        assert_eq!(pts.len(), 122);
        assert!(pts.windows(2).all(|w| norm2(&w[0]) <= norm2(&w[1])));
    }

    #[test]
    fn quartic_tail_bounds_direct_sum() {
        let r = 6.0;
        let mut direct = 0.0;
        for x in -60i64..=60 {
            for y in -60i64..=60 {
                for z in -60i64..=60 {
                    let m = (x * x + y * y + z * z) as f64;
                    if m.sqrt() > r {
                        direct += 1.0 / (m * m);
                    }
                }
            }
        }
        assert!(direct < inverse_quartic_tail(r));
    }

    #[test]
    fn gauss_rule_is_exact_for_polynomials() {
        let v = gauss_integrate(|x| x.powi(7) - 3.0 * x * x, 0.0, 2.0, 1);
        assert!((v - (2f64.powi(8) / 8.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn pairwise_sum_matches_naive_for_integers() {
        let v: Vec<f64> = (1..=1000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&v), 500500.0);
    }
}
