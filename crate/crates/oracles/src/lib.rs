//! Slow, direct reference implementations used as test oracles.
//!
//! Nothing here shares code with `lungtex-core`; every quantity is
//! recomputed from its textbook definition.

pub mod stats;
pub mod texture;

/// |a - b| scaled by |b|, with an absolute floor of 1e-12 for values near 0.
pub fn rel_err(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d <= 1e-12 {
        0.0
    } else {
        d / b.abs().max(a.abs())
    }
}
