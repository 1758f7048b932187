//! Exhaustive enumeration of ordered forests with mark bits.
//!
//! Shapes are found by brute force over all `2^(2n)` bracket strings, so the
//! count does not lean on any closed form; [`catalan`] is an independent
//! recurrence used to check it.

use thiserror::Error;

pub const DEFAULT_CAP: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("n = {n} exceeds the enumeration cap {cap}")]
pub struct CapExceeded {
    pub n: usize,
    pub cap: usize,
}

/// Bracket strings of length `2n` (bit set = open) that are balanced.
fn shapes(n: usize) -> Vec<u64> {
    let len = 2 * n;
    (0u64..(1u64 << len))
        .filter(|&bits| {
            let mut depth = 0i32;
            for i in (0..len).rev() {
                depth += if bits >> i & 1 == 1 { 1 } else { -1 };
                if depth < 0 {
                    return false;
                }
            }
            depth == 0
        })
        .collect()
}

/// Structure code for a shape with the given mark mask (bit `j` marks the
/// `j`-th node in preorder).
fn decorate(bits: u64, n: usize, mask: u64) -> String {
    let mut out = String::with_capacity(3 * n);
    let mut node = 0;
    for i in (0..2 * n).rev() {
        if bits >> i & 1 == 1 {
            out.push('(');
            out.push(if mask >> node & 1 == 1 { 'm' } else { 'u' });
            node += 1;
        } else {
            out.push(')');
        }
    }
    out
}

/// Number of (ordered forest shape, mark assignment) pairs on `n` nodes.
pub fn enumerate_marked_forests(n: usize, cap: usize) -> Result<u128, CapExceeded> {
    if n > cap || n > 16 {
        return Err(CapExceeded { n, cap: cap.min(16) });
    }
    // every shape takes each of the 2^n mark assignments independently
    Ok(shapes(n).len() as u128 * (1u128 << n))
}

/// Every marked-forest structure code on `n` nodes.
pub fn marked_forest_codes(n: usize, cap: usize) -> Result<Vec<String>, CapExceeded> {
    if n > cap || n > 16 {
        return Err(CapExceeded { n, cap: cap.min(16) });
    }
    let mut out = Vec::new();
    for bits in shapes(n) {
        for mask in 0u64..(1u64 << n) {
            out.push(decorate(bits, n, mask));
        }
    }
    Ok(out)
}

/// `C_0 = 1`, `C_{m+1} = sum_{i=0}^{m} C_i C_{m-i}`. Exact up to `n = 67`;
/// panics on overflow beyond that.
pub fn catalan(n: usize) -> u128 {
    let mut c = vec![1u128];
    for m in 0..n {
        let next = (0..=m)
            .map(|i| c[i].checked_mul(c[m - i]).expect("Catalan number overflows u128"))
            .fold(0u128, |a, b| a.checked_add(b).expect("Catalan number overflows u128"));
        c.push(next);
    }
    c[n]
}

/// `log2(C_n 2^n)`: the most distinctness any set of size-`n` terminal
/// structures can have.
pub fn max_distinctness(n: usize) -> f64 {
    if n <= 67 {
        return (catalan(n) as f64).log2() + n as f64;
    }
    // C_{m+1} = C_m 2(2m+1)/(m+2)
    let log_c: f64 = (0..n)
        .map(|m| (2.0 * (2 * m + 1) as f64 / (m + 2) as f64).log2())
        .sum();
    log_c + n as f64
}
