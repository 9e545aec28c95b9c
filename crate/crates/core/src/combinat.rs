//! Small combinatorial helpers: binomials and subset enumeration.

use num_bigint::BigUint;
use num_traits::One;

/// `C(n, r)` in `u128`, saturating at `u128::MAX`.
pub fn binomial_u128(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

pub fn binomial_big(n: usize, r: usize) -> BigUint {
    if r > n {
        return BigUint::from(0u32);
    }
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for i in 0..r {
        acc *= (n - i) as u64;
        acc /= (i + 1) as u64;
    }
    acc
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n as u64).fold(BigUint::one(), |acc, i| acc * i)
}

/// Calls `f` with every `r`-subset of `items`, in lexicographic order of positions.
/// Stops early and returns `false` as soon as `f` returns `false`.
pub fn for_each_subset<T: Copy>(items: &[T], r: usize, mut f: impl FnMut(&[T]) -> bool) -> bool {
    if r > items.len() {
        return true;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    let mut buf: Vec<T> = idx.iter().map(|&i| items[i]).collect();
    loop {
        if !f(&buf) {
            return false;
        }
        // advance to the next combination
        let n = items.len();
        let Some(i) = (0..r).rev().find(|&i| idx[i] < i + n - r) else {
            return true;
        };
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
        for j in i..r {
            buf[j] = items[idx[j]];
        }
    }
}

/// Collects all `r`-subsets of `items`.
pub fn subsets<T: Copy>(items: &[T], r: usize) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    for_each_subset(items, r, |s| {
        out.push(s.to_vec());
        true
    });
    out
}
