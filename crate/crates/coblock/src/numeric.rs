//! Cached elementary functions for small integer arguments.
//!
//! Block-marginal evaluation spends most of its time in ln Gamma and ln at
//! arguments of the form count + prior constant; with the default unit
//! priors those are small integers. The tables are filled by the very same
//! functions used on the fallback path, so routing through the cache never
//! changes a single output bit.

use std::sync::OnceLock;

const CAP: usize = 1 << 16;

fn lgamma_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| (0..CAP).map(|i| libm::lgamma(i as f64)).collect())
}

fn ln_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| (0..CAP).map(|i| (i as f64).ln()).collect())
}

#[inline]
pub(crate) fn lgamma(x: f64) -> f64 {
    let i = x as usize;
    if x >= 0.0 && i < CAP && i as f64 == x {
        lgamma_table()[i]
    } else {
        libm::lgamma(x)
    }
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    let i = x as usize;
    if x >= 0.0 && i < CAP && i as f64 == x {
        ln_table()[i]
    } else {
        x.ln()
    }
}
