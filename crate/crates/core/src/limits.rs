//! Capacity bounds shared by the constructions and searches.
//!
//! `PCSP_LAB_CAPACITY` overrides the tuple/search-space bound; the other
//! bounds are fixed.

use std::sync::OnceLock;

pub const DEFAULT_CAPACITY: u64 = 10_000_000;
pub const MAX_BOOL_ARITY: usize = 22;
pub const MAX_BLOCK_M: usize = 7;
pub const DEFAULT_FAMILY_ARITY: usize = 9;

pub const CAPACITY_ENV: &str = "PCSP_LAB_CAPACITY";

/// Largest number of tuples a constructed relation (or brute-force search
/// space) may have.
pub fn capacity() -> u64 {
    static CAP: OnceLock<u64> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var(CAPACITY_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u64>().ok())
            .filter(|&v| v > 0)
            .unwrap_or(DEFAULT_CAPACITY)
    })
}

/// `base^exp`, saturating at `u64::MAX`.
pub(crate) fn saturating_pow(base: u64, exp: u64) -> u64 {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base);
        if acc == u64::MAX {
            break;
        }
    }
    acc
}
