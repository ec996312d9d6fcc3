//! Discrete Wiener amalgam norms `W(FL^p, L^q)` and boundedness experiments.
//!
//! The norm is the mixed norm of the short-time Fourier transform
//!
//! ```text
//! V_gψ(x, ω) = ∫ ψ(x') g(x' − x) e^{−iωx'/ħ} dx'
//! ‖ψ‖ = ( Σ_x ( Σ_ω |V_gψ(x, ω)|^p Δω )^{q/p} Δx )^{1/q}
//! ```
//!
//! with frequency (`FL^p`) inside and shift (`L^q`) outside, `g` a unit-L²
//! Gaussian window. Constants measured with these norms are relative to the
//! window and lattice, and maxima over a finite family only bound the true
//! operator norms from below.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::fft::{cis, fft, Direction};
use crate::hermite::hermite_state;
use crate::metaplectic::{apply, apply_free, ApplyOptions, FreeMetaplecticOp};
use crate::schrodinger::evolve_metaplectic;
use crate::symplectic::factor_free;
use crate::wavefunction::Axis;
use crate::{Error, QuadraticHamiltonian, Result, SampledWavefunction, SymplecticMatrix};

/// Default Gaussian window width.
pub const DEFAULT_WINDOW_WIDTH: f64 = 0.5;

/// The window must decay over this many widths inside half a segment.
pub const WINDOW_SUPPORT_WIDTHS: f64 = 5.0;

/// Slack allowed on the two-factor product bound.
pub const FACTOR_BOUND_SLACK: f64 = 0.05;

/// Exponent validity: `1 <= p <= ∞`.
pub fn check_exponent(p: f64) -> Result<f64> {
    if p >= 1.0 {
        Ok(p)
    } else {
        Err(Error::InvalidExponent(p))
    }
}

/// Exponents, window and STFT lattice of a discrete `W(FL^p, L^q)` norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmalgamNormSpec {
    /// Inner (frequency) exponent.
    pub p: f64,
    /// Outer (shift) exponent.
    pub q: f64,
    pub window_width: f64,
    /// Distance between window centres.
    pub hop: f64,
    /// Frequency bins per shift; the segment length is `freq_count·dx`.
    pub freq_count: usize,
}

impl AmalgamNormSpec {
    pub fn new(p: f64, q: f64, window_width: f64, hop: f64, freq_count: usize) -> Result<Self> {
        check_exponent(p)?;
        check_exponent(q)?;
        if !(window_width > 0.0) || !window_width.is_finite() {
            return Err(Error::InvalidInput(format!("window width must be positive, got {window_width}")));
        }
        if !(hop > 0.0) || hop > window_width {
            return Err(Error::InvalidInput(format!(
                "hop {hop} must be positive and at most the window width {window_width}"
            )));
        }
        if freq_count < 2 {
            return Err(Error::InvalidInput("freq_count must be at least 2".into()));
        }
        Ok(AmalgamNormSpec { p, q, window_width, hop, freq_count })
    }

    /// Default lattice on `axis`: hop `4·dx`, `N/4` frequency bins.
    pub fn for_axis(axis: &Axis, p: f64, q: f64) -> Result<Self> {
        Self::new(p, q, DEFAULT_WINDOW_WIDTH, 4.0 * axis.dx, axis.count / 4)
    }

    /// Same window and lattice with `p` and `q` exchanged.
    pub fn swapped(&self) -> Self {
        AmalgamNormSpec { p: self.q, q: self.p, ..*self }
    }

    pub fn with_exponents(&self, p: f64, q: f64) -> Result<Self> {
        Self::new(p, q, self.window_width, self.hop, self.freq_count)
    }

    /// Unit-L² Gaussian window `(πw²)^{-1/4} e^{−x²/2w²}`.
    pub fn window(&self, x: f64) -> f64 {
        let w = self.window_width;
        Float::powf(PI * w * w, -0.25) * Float::exp(-0.5 * x * x / (w * w))
    }

    fn stride(&self, axis: &Axis) -> Result<usize> {
        let ratio = self.hop / axis.dx;
        let stride = Float::round(ratio);
        if stride < 1.0 || (ratio - stride).abs() > 1e-9 * ratio {
            return Err(Error::InvalidInput(format!(
                "hop {} must be a positive multiple of the grid step {}",
                self.hop, axis.dx
            )));
        }
        Ok(stride as usize)
    }

    fn check_against(&self, axis: &Axis) -> Result<usize> {
        let stride = self.stride(axis)?;
        let half_segment = 0.5 * self.freq_count as f64 * axis.dx;
        if half_segment < WINDOW_SUPPORT_WIDTHS * self.window_width {
            return Err(Error::InvalidInput(format!(
                "segment half-length {half_segment} truncates the window (needs {} widths of {})",
                WINDOW_SUPPORT_WIDTHS, self.window_width
            )));
        }
        Ok(stride)
    }
}

/// STFT samples on the `(shift, frequency)` lattice, row-major by shift.
#[derive(Debug, Clone, PartialEq)]
pub struct Stft {
    pub shifts: Vec<f64>,
    /// Ascending, `l·Δω` for `l = −F/2 .. F/2 − 1`.
    pub freqs: Vec<f64>,
    pub values: Vec<Complex64>,
    pub hop: f64,
    pub dw: f64,
}

impl Stft {
    pub fn row(&self, s: usize) -> &[Complex64] {
        let f = self.freqs.len();
        &self.values[s * f..(s + 1) * f]
    }

    /// `Σ |V|² Δx Δω / (2πħ)`, equal to `‖ψ‖₂²` for a unit window.
    pub fn energy(&self, hbar: f64) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.hop * self.dw / (2.0 * PI * hbar)
    }

    /// Mixed `(FL^p, L^q)` norm of the samples.
    pub fn mixed_norm(&self, p: f64, q: f64) -> f64 {
        let inner = (0..self.shifts.len()).map(|s| {
            let row = self.row(s);
            if p.is_infinite() {
                row.iter().map(|v| v.norm()).fold(0.0, f64::max)
            } else {
                let sum: f64 = row.iter().map(|v| Float::powf(v.norm(), p)).sum();
                Float::powf(sum * self.dw, 1.0 / p)
            }
        });
        if q.is_infinite() {
            inner.fold(0.0, f64::max)
        } else {
            let sum: f64 = inner.map(|v| Float::powf(v, q)).sum();
            Float::powf(sum * self.hop, 1.0 / q)
        }
    }
}

/// Short-time Fourier transform of a 1-D wavefunction on the lattice of `spec`.
pub fn stft(psi: &SampledWavefunction, spec: &AmalgamNormSpec) -> Result<Stft> {
    if psi.dim() != 1 {
        return Err(Error::Unsupported("amalgam norms are one-dimensional".into()));
    }
    let axis = *psi.axis();
    let stride = spec.check_against(&axis)?;
    let hbar = psi.hbar();
    let f = spec.freq_count;
    let half = (f / 2) as isize;
    let dw = 2.0 * PI * hbar / (f as f64 * axis.dx);

    // anchor the lattice on multiples of hop when the grid allows it
    let first = (0..stride)
        .find(|&j| {
            let r = axis.x(j) / spec.hop;
            (r - Float::round(r)).abs() < 1e-6
        })
        .unwrap_or(0);
    let shift_idx: Vec<usize> = (first..axis.count).step_by(stride).collect();
    let window: Vec<f64> = (0..f).map(|m| spec.window((m as isize - half) as f64 * axis.dx)).collect();
    let freqs: Vec<f64> = (0..f).map(|i| (i as isize - half) as f64 * dw).collect();

    let mut values = Vec::with_capacity(shift_idx.len() * f);
    let mut segment = vec![Complex64::new(0.0, 0.0); f];
    for &j in &shift_idx {
        let start = j as isize - half;
        for (m, slot) in segment.iter_mut().enumerate() {
            let k = start + m as isize;
            *slot = if k >= 0 && (k as usize) < axis.count {
                psi.values()[k as usize] * window[m]
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        fft(&mut segment, Direction::Forward);
        let x_start = axis.x0 + start as f64 * axis.dx;
        for (i, &w) in freqs.iter().enumerate() {
            let l = i as isize - half;
            let bin = l.rem_euclid(f as isize) as usize;
            values.push(segment[bin] * cis(-w * x_start / hbar) * axis.dx);
        }
    }
    Ok(Stft {
        shifts: shift_idx.iter().map(|&j| axis.x(j)).collect(),
        freqs,
        values,
        hop: spec.hop,
        dw,
    })
}

/// `‖ψ‖_{W(FL^p, L^q)}` on the lattice of `spec`.
pub fn amalgam_norm(psi: &SampledWavefunction, spec: &AmalgamNormSpec) -> Result<f64> {
    check_exponent(spec.p)?;
    check_exponent(spec.q)?;
    Ok(stft(psi, spec)?.mixed_norm(spec.p, spec.q))
}

/// A labelled test function.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMember {
    pub label: String,
    pub psi: SampledWavefunction,
}

/// Hermite `h_0..h_5`, Gaussians of widths `2^{-2..2}` and one chirped
/// Gaussian, all unit norm.
pub fn default_family(axis: Axis, hbar: f64) -> Result<Vec<FamilyMember>> {
    let mut family = Vec::new();
    for k in 0..=5 {
        family.push(FamilyMember { label: format!("hermite_{k}"), psi: hermite_state(k, axis, hbar)? });
    }
    for e in -2i32..=2 {
        let width = Float::powi(2.0, e);
        let a = Complex64::new(hbar / (width * width), 0.0);
        let psi = SampledWavefunction::gaussian(axis, hbar, a)?;
        family.push(FamilyMember { label: format!("gaussian_w{width}"), psi: unit(psi)? });
    }
    let chirped = SampledWavefunction::gaussian(axis, hbar, Complex64::new(1.0, -1.0))?;
    family.push(FamilyMember { label: "chirped_gaussian".into(), psi: unit(chirped)? });
    Ok(family)
}

/// Relative size allowed at the grid edges for family members.
const EDGE_DECAY: f64 = 1e-6;

fn unit(psi: SampledWavefunction) -> Result<SampledWavefunction> {
    let v = psi.values();
    let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let edge = v[0].norm().max(v[v.len() - 1].norm());
    if edge > EDGE_DECAY * peak {
        return Err(Error::Stability(format!(
            "family member has not decayed at the grid edge ({:.2e} of its peak)",
            edge / peak
        )));
    }
    psi.normalized()
        .ok_or_else(|| Error::InvalidInput("family member vanishes on the grid".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateKind {
    /// `‖μ(S)f‖_{W(FL^p,L^q)} / ‖f‖_{W(FL^q,L^p)}`.
    Cross,
    /// `‖μ(S)f‖_{W(FL^p,L^q)} / ‖f‖_{W(FL^p,L^q)}`.
    SameSpace,
}

/// The two-factor mechanism `S = S₁S₂` made quantitative.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorBound {
    pub first: SymplecticMatrix,
    pub second: SymplecticMatrix,
    /// Empirical `α(S₁, p, q)` over the recorded intermediates `μ(S₂)f`.
    pub alpha_first: f64,
    /// Empirical `α(S₂, q, p)` over the family.
    pub alpha_second: f64,
    pub product: f64,
    /// `max ratio <= (1 + slack)·product`.
    pub holds: bool,
}

/// Measured norm ratios of one operator over one family.
///
/// `max_ratio` is an empirical lower bound of the operator norm, relative to
/// the window and lattice in `spec`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormEstimateReport {
    pub kind: EstimateKind,
    pub matrix: SymplecticMatrix,
    /// Lattice and `(p, q)` of the output space.
    pub spec: AmalgamNormSpec,
    pub input_space: (f64, f64),
    pub output_space: (f64, f64),
    pub labels: Vec<String>,
    pub ratios: Vec<f64>,
    /// Members skipped because their input norm vanished.
    pub skipped: Vec<String>,
    pub max_ratio: f64,
    pub factor_bound: Option<FactorBound>,
}

fn check_family(family: &[FamilyMember]) -> Result<()> {
    if family.is_empty() {
        return Err(Error::InvalidInput("the test family is empty".into()));
    }
    Ok(())
}

fn finish_max(ratios: &[f64]) -> Result<f64> {
    if ratios.is_empty() {
        return Err(Error::InvalidInput("every family member has zero norm".into()));
    }
    Ok(ratios.iter().copied().fold(0.0, f64::max))
}

/// Empirical `α(S, p, q)` in `‖μ(S)f‖_{W(FL^p,L^q)} <= α ‖f‖_{W(FL^q,L^p)}`.
pub fn cross_estimate_experiment(
    s: &SymplecticMatrix,
    spec: &AmalgamNormSpec,
    family: &[FamilyMember],
    opts: &ApplyOptions,
) -> Result<NormEstimateReport> {
    check_family(family)?;
    let det_b = s.det_b();
    if !s.is_free(opts.tol.free) {
        return Err(Error::NotFree { det_b, tol: opts.tol.free });
    }
    let input_spec = spec.swapped();
    let mut labels = Vec::new();
    let mut ratios = Vec::new();
    let mut skipped = Vec::new();
    for member in family {
        let op = FreeMetaplecticOp::with_smallest_index(s.clone(), member.psi.hbar(), &opts.tol)?;
        let denom = amalgam_norm(&member.psi, &input_spec)?;
        if !(denom > 0.0) {
            skipped.push(member.label.clone());
            continue;
        }
        let image = apply_free(&op, &member.psi, opts)?;
        labels.push(member.label.clone());
        ratios.push(amalgam_norm(&image, spec)? / denom);
    }
    let max_ratio = finish_max(&ratios)?;
    Ok(NormEstimateReport {
        kind: EstimateKind::Cross,
        matrix: s.clone(),
        spec: *spec,
        input_space: (spec.q, spec.p),
        output_space: (spec.p, spec.q),
        labels,
        ratios,
        skipped,
        max_ratio,
        factor_bound: None,
    })
}

/// Empirical `C(S, p, q)` in `‖μ(S)f‖ <= C ‖f‖` on the same space, together
/// with the product bound `α(S₁, p, q)·α(S₂, q, p)` from `S = S₁S₂`.
pub fn same_space_estimate_experiment(
    s: &SymplecticMatrix,
    spec: &AmalgamNormSpec,
    family: &[FamilyMember],
    opts: &ApplyOptions,
) -> Result<NormEstimateReport> {
    check_family(family)?;
    let swapped = spec.swapped();
    let (first, second) = factor_free(s, &opts.tol)?;
    let mut labels = Vec::new();
    let mut ratios = Vec::new();
    let mut skipped = Vec::new();
    let mut alpha_first: f64 = 0.0;
    let mut alpha_second: f64 = 0.0;
    for member in family {
        let hbar = member.psi.hbar();
        let denom = amalgam_norm(&member.psi, spec)?;
        if !(denom > 0.0) {
            skipped.push(member.label.clone());
            continue;
        }
        let image = apply(s, 0, &member.psi, opts)?;
        labels.push(member.label.clone());
        ratios.push(amalgam_norm(&image, spec)? / denom);

        let op2 = FreeMetaplecticOp::with_smallest_index(second.clone(), hbar, &opts.tol)?;
        let op1 = FreeMetaplecticOp::with_smallest_index(first.clone(), hbar, &opts.tol)?;
        let mid = apply_free(&op2, &member.psi, opts)?;
        let mid_norm = amalgam_norm(&mid, &swapped)?;
        let out = apply_free(&op1, &mid, opts)?;
        alpha_second = alpha_second.max(mid_norm / denom);
        if mid_norm > 0.0 {
            alpha_first = alpha_first.max(amalgam_norm(&out, spec)? / mid_norm);
        }
    }
    let max_ratio = finish_max(&ratios)?;
    let product = alpha_first * alpha_second;
    Ok(NormEstimateReport {
        kind: EstimateKind::SameSpace,
        matrix: s.clone(),
        spec: *spec,
        input_space: (spec.p, spec.q),
        output_space: (spec.p, spec.q),
        labels,
        ratios,
        skipped,
        max_ratio,
        factor_bound: Some(FactorBound {
            first,
            second,
            alpha_first,
            alpha_second,
            product,
            holds: max_ratio <= (1.0 + FACTOR_BOUND_SLACK) * product,
        }),
    })
}

/// `‖f(·, t)‖_{W(FL^p,L^q)}` along the exact solution.
pub fn regularity_experiment(
    h: &QuadraticHamiltonian,
    f0: &SampledWavefunction,
    spec: &AmalgamNormSpec,
    times: &[f64],
    opts: &ApplyOptions,
) -> Result<Vec<(f64, f64)>> {
    if times.is_empty() {
        return Err(Error::InvalidInput("at least one time is required".into()));
    }
    times
        .iter()
        .map(|&t| {
            let ft = evolve_metaplectic(h, f0, t, opts)?;
            let norm = amalgam_norm(&ft, spec).map_err(|e| e.at_time(t))?;
            Ok((t, norm))
        })
        .collect()
}
