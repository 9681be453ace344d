//! Sample grid construction.
//!
//! Space grids combine a uniform sweep of the interval interior with
//! geometric accumulation toward finite endpoints. The accumulation
//! matters: transported weights are often supported on a shrinking
//! neighbourhood of a boundary equilibrium, so a purely uniform grid
//! loses every in-image sample after a few time units. Interior
//! equilibria are deliberately not refined toward; they are handled by
//! the domain partition, not by chasing the sup into a measure-zero
//! set.

use crate::model::Interval;

/// Uniformly spaced points in the open interval (half-step inset).
pub fn uniform(iv: &Interval, n: usize) -> Vec<f64> {
    let n = n.max(1);
    let len = iv.hi - iv.lo;
    (0..n)
        .map(|k| iv.lo + len * (k as f64 + 0.5) / n as f64)
        .collect()
}

/// Points accumulating geometrically at the finite endpoints of `iv`,
/// from one tenth of the length down to `min_rel` of the length.
pub fn geometric_edges(iv: &Interval, min_rel: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    if !iv.lo.is_finite() || !iv.hi.is_finite() {
        return pts;
    }
    let len = iv.hi - iv.lo;
    let mut rel = 0.1;
    while rel >= min_rel {
        pts.push(iv.lo + len * rel);
        pts.push(iv.hi - len * rel);
        rel *= 0.1;
    }
    pts
}

/// Default space grid on one interval: uniform interior plus geometric
/// endpoint refinement down to `1e-10` of the interval length.
pub fn space_grid(iv: &Interval, n: usize) -> Vec<f64> {
    let mut pts = uniform(iv, n);
    pts.extend(geometric_edges(iv, 1e-10));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.retain(|&x| x > iv.lo && x < iv.hi);
    pts
}

/// Uniform time grid 0..=horizon with `n` intervals.
pub fn time_grid(horizon: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|k| horizon * k as f64 / n as f64).collect()
}

/// Geometric grid accumulating at `a` from the right: a + len*10^-k.
pub fn geometric_toward(a: f64, len: f64, decades: usize) -> Vec<f64> {
    (1..=decades)
        .map(|k| a + len * 10f64.powi(-(k as i32)))
        .collect()
}
