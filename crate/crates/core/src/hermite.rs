//! Normalized Hermite functions, the eigenstates of `½(x² + p²)`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::wavefunction::Axis;
use crate::{Error, Result, SampledWavefunction};

/// Largest order accepted by [`hermite_state`].
pub const MAX_ORDER: usize = 40;

/// Oscillator lengths the grid must extend beyond the classical turning point.
pub const TURNING_POINT_MARGIN: f64 = 6.0;

/// `h_k(x/√ħ)·ħ^{-1/4}` on `axis`, through the three-term recurrence
/// `ψ_{j+1} = √(2/(j+1)) ξ ψ_j − √(j/(j+1)) ψ_{j−1}`.
pub fn hermite_state(k: usize, axis: Axis, hbar: f64) -> Result<SampledWavefunction> {
    if k > MAX_ORDER {
        return Err(Error::Stability(format!(
            "Hermite order {k} exceeds the recurrence bound {MAX_ORDER}"
        )));
    }
    if !(hbar > 0.0) {
        return Err(Error::InvalidInput(format!("hbar must be positive, got {hbar}")));
    }
    let len = Float::sqrt(hbar);
    let reach = len * (Float::sqrt(2.0 * k as f64 + 1.0) + TURNING_POINT_MARGIN);
    let last = axis.x(axis.count - 1);
    if axis.x0 > -reach || last < reach {
        return Err(Error::Stability(format!(
            "grid [{}, {last}] does not cover ±{reach:.3} needed by h_{k}",
            axis.x0
        )));
    }
    if reach / hbar > PI / axis.dx {
        return Err(Error::Stability(format!(
            "grid step {} is too coarse for h_{k} (needs < {:.4})",
            axis.dx,
            PI * hbar / reach
        )));
    }
    let norm = Float::powf(PI, -0.25) * Float::powf(hbar, -0.25);
    let values: Vec<Complex64> = axis
        .points()
        .map(|x| Complex64::new(hermite_value(k, x / len) * norm, 0.0))
        .collect();
    SampledWavefunction::new(alloc::vec![axis], values, hbar)
}

/// `π^{1/4}·h_k(ξ)`, i.e. the normalized Hermite function without `π^{-1/4}`.
fn hermite_value(k: usize, xi: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = Float::exp(-0.5 * xi * xi);
    for j in 0..k {
        let jf = j as f64;
        let next = Float::sqrt(2.0 / (jf + 1.0)) * xi * cur - Float::sqrt(jf / (jf + 1.0)) * prev;
        prev = cur;
        cur = next;
    }
    cur
}
