//! Log-space combinatorics shared by the description-length terms.
//!
//! Everything is computed through `ln_gamma` and converted to bits
//! (base-2 logarithms) at the end, so factorials of edge counts in the
//! hundreds of thousands stay finite.

use statrs::function::gamma::ln_gamma;
use std::f64::consts::LN_2;

// n! fits in u64 up to n = 20; exact below that, ln_gamma above
const FACTORIALS: [u64; 21] = [
    1,
    1,
    2,
    6,
    24,
    120,
    720,
    5040,
    40320,
    362880,
    3628800,
    39916800,
    479001600,
    6227020800,
    87178291200,
    1307674368000,
    20922789888000,
    355687428096000,
    6402373705728000,
    121645100408832000,
    2432902008176640000,
];

/// log2(n!)
pub fn log2_factorial(n: u64) -> f64 {
    if n <= 20 {
        (FACTORIALS[n as usize] as f64).log2()
    } else {
        ln_gamma(n as f64 + 1.0) / LN_2
    }
}

/// log2 C(n, k); 0 when k > n or k < 0 cases cannot arise (u64).
pub fn log2_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    log2_factorial(n) - log2_factorial(k) - log2_factorial(n - k)
}

/// log2 of the multiset coefficient ((m multichoose k)) = C(m + k - 1, k):
/// the number of ways to place k unlabelled items into m labelled cells.
pub fn log2_multiset(m: u64, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    debug_assert!(m > 0, "multiset coefficient with zero cells and k > 0");
    log2_binomial(m + k - 1, k)
}

/// log2 of the multinomial coefficient n! / prod(parts!), n = sum(parts).
pub fn log2_multinomial(parts: &[u64]) -> f64 {
    let n: u64 = parts.iter().sum();
    log2_factorial(n) - parts.iter().map(|&p| log2_factorial(p)).sum::<f64>()
}

/// Stirling numbers of the second kind S(n, k) for small n (exact in u128).
pub fn stirling2(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    if n == 0 {
        return 1; // S(0, 0)
    }
    if k == 0 {
        return 0;
    }
    // S(n, k) = k S(n-1, k) + S(n-1, k-1)
    let mut row: Vec<u128> = vec![0; k as usize + 1];
    row[0] = 1; // S(0, 0)
    for i in 1..=n {
        let hi = k.min(i) as usize;
        for j in (1..=hi).rev() {
            row[j] = j as u128 * row[j] + row[j - 1];
        }
        row[0] = 0;
    }
    row[k as usize]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn factorials_and_binomials() {
        assert_eq!(log2_factorial(0), 0.0);
        assert_eq!(log2_factorial(1), 0.0);
        assert_relative_eq!(log2_factorial(5), (120f64).log2(), epsilon = 1e-12);
        assert_relative_eq!(log2_binomial(7, 3), (35f64).log2(), epsilon = 1e-12);
        assert_eq!(log2_binomial(4, 0), 0.0);
    }

    #[test]
    fn multiset_counts_small_cases() {
        // ((1 multichoose k)) = 1
        assert_eq!(log2_multiset(1, 3), 0.0);
        // ((2 multichoose 2)) = 3
        assert_relative_eq!(log2_multiset(2, 2), (3f64).log2(), epsilon = 1e-12);
        assert_eq!(log2_multiset(5, 0), 0.0);
    }

    #[test]
    fn multinomials() {
        assert_relative_eq!(log2_multinomial(&[1, 1]), 1.0, epsilon = 1e-12);
        assert_relative_eq!(log2_multinomial(&[2, 1]), (3f64).log2(), epsilon = 1e-12);
        assert_eq!(log2_multinomial(&[4]), 0.0);
        assert_eq!(log2_multinomial(&[]), 0.0);
    }

    #[test]
    fn stirling_second_kind_table() {
        assert_eq!(stirling2(0, 0), 1);
        assert_eq!(stirling2(4, 2), 7);
        assert_eq!(stirling2(5, 3), 25);
        assert_eq!(stirling2(8, 4), 1701);
        assert_eq!(stirling2(8, 1), 1);
        assert_eq!(stirling2(8, 8), 1);
        assert_eq!(stirling2(3, 5), 0);
    }
}
