//! Free metaplectic operators as quadratic Fourier integral operators.
//!
//! For a free symplectic matrix with generating function `W` and Maslov
//! index `m`,
//!
//! ```text
//! μ_{W,m} ψ(x) = (2πħ)^{-n/2} i^{m-n/2} |det B|^{-1/2} ∫ e^{(i/ħ) W(x,x')} ψ(x') dⁿx'.
//! ```
//!
//! The integral is discretized on the input grid with trapezoid weights and
//! the output is sampled on the same grid. Two evaluation routes exist: a
//! dense quadrature (any dimension, `O(N^{2n})`) and, in one dimension,
//! chirp multiplication around a chirp-Z transform (`O(N log N)`). Both
//! compute the same discrete sum.
//!
//! Every symplectic matrix is reached through [`apply`], which goes through
//! the two-free-factor decomposition when the matrix is not free.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::fft::{chirp_z, cis};
use crate::linalg::norm_inf;
use crate::symplectic::{factor_free, generating_function};
use crate::wavefunction::Axis;
use crate::{
    Error, MaslovIndex, QuadraticGeneratingFunction, Result, SampledWavefunction, SymplecticMatrix,
    Tolerances,
};

/// Largest per-axis grid size accepted by the 2-D dense quadrature.
pub const MAX_POINTS_2D: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Trapezoid-weighted dense quadrature.
    Direct,
    /// Chirp, chirp-Z transform, chirp (1-D only).
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ApplyOptions {
    /// `None` picks `Fast` in 1-D and `Direct` in 2-D.
    pub method: Option<Method>,
    /// Skip the Nyquist guard on the kernel phase.
    pub allow_aliasing: bool,
    pub tol: Tolerances,
}

impl ApplyOptions {
    pub fn with_method(method: Method) -> Self {
        ApplyOptions { method: Some(method), ..Self::default() }
    }
}

/// `i^{m − n/2} = exp(iπ(m − n/2)/2)`.
pub fn maslov_phase(m: MaslovIndex, n: usize) -> Complex64 {
    cis(0.5 * PI * (m.value() as f64 - 0.5 * n as f64))
}

/// `μ_{W,m}(S)` for a free `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeMetaplecticOp {
    gen: QuadraticGeneratingFunction,
    source: SymplecticMatrix,
    hbar: f64,
}

impl FreeMetaplecticOp {
    pub fn new(source: SymplecticMatrix, m: MaslovIndex, hbar: f64, tol: &Tolerances) -> Result<Self> {
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(Error::InvalidInput(format!("hbar must be positive, got {hbar}")));
        }
        let gen = generating_function(&source, m, tol)?;
        Ok(FreeMetaplecticOp { gen, source, hbar })
    }

    /// Uses the smallest Maslov index allowed by the sign of `det B`.
    pub fn with_smallest_index(source: SymplecticMatrix, hbar: f64, tol: &Tolerances) -> Result<Self> {
        let m = MaslovIndex::smallest_admissible(source.det_b());
        Self::new(source, m, hbar, tol)
    }

    pub fn generating_function(&self) -> &QuadraticGeneratingFunction {
        &self.gen
    }

    pub fn source(&self) -> &SymplecticMatrix {
        &self.source
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn maslov(&self) -> MaslovIndex {
        self.gen.m
    }

    /// The operator on the other sheet of the double cover, `−μ`.
    pub fn negated(&self) -> Self {
        let mut op = self.clone();
        op.gen.m = op.gen.m.flipped();
        op
    }

    /// `(2πħ)^{-n/2} i^{m−n/2} |det L|^{1/2}` (`|det B|^{-1/2} = |det L|^{1/2}`).
    pub fn prefactor(&self) -> Complex64 {
        let n = self.gen.n();
        let scale = Float::powf(2.0 * PI * self.hbar, -0.5 * n as f64) * Float::sqrt(self.gen.det_l().abs());
        maslov_phase(self.gen.m, n) * scale
    }

    /// Kernel bandwidth `(max(|P|, |Q|) + |L|)·x_max` against `πħ/dx`.
    pub fn check_aliasing(&self, axes: &[Axis]) -> Result<()> {
        let x_max = axes.iter().map(Axis::x_max).fold(0.0, f64::max);
        let dx = axes.iter().map(|a| a.dx).fold(0.0, f64::max);
        let chirp = norm_inf(&self.gen.p).max(norm_inf(&self.gen.q));
        let required = (chirp + norm_inf(&self.gen.l)) * x_max;
        let limit = PI * self.hbar / dx;
        if required > limit {
            return Err(Error::AliasingRisk { required, limit });
        }
        Ok(())
    }
}

/// Trapezoid weight of sample `j` out of `count`.
#[inline]
fn trapezoid(j: usize, count: usize) -> f64 {
    if j == 0 || j + 1 == count {
        0.5
    } else {
        1.0
    }
}

/// Applies `μ_{W,m}(S)` to `psi`, output on the input grid.
pub fn apply_free(
    op: &FreeMetaplecticOp,
    psi: &SampledWavefunction,
    opts: &ApplyOptions,
) -> Result<SampledWavefunction> {
    if (psi.hbar() - op.hbar).abs() > 1e-12 * op.hbar {
        return Err(Error::InvalidInput(format!(
            "hbar mismatch: operator has {}, wavefunction has {}",
            op.hbar,
            psi.hbar()
        )));
    }
    if psi.dim() != op.gen.n() {
        return Err(Error::InvalidDimension(format!(
            "operator acts on R^{}, wavefunction lives on R^{}",
            op.gen.n(),
            psi.dim()
        )));
    }
    if !opts.allow_aliasing {
        op.check_aliasing(psi.axes())?;
    }
    let method = opts
        .method
        .unwrap_or(if psi.dim() == 1 { Method::Fast } else { Method::Direct });
    match (psi.dim(), method) {
        (1, Method::Direct) => Ok(direct_1d(op, psi)),
        (1, Method::Fast) => Ok(fast_1d(op, psi)),
        (2, Method::Direct) => direct_2d(op, psi),
        (_, Method::Fast) => Err(Error::Unsupported("the fast route is one-dimensional".into())),
        (d, _) => Err(Error::InvalidDimension(format!("unsupported dimension {d}"))),
    }
}

/// `trap_k · e^{iQx_k²/2ħ} · ψ_k · dx`.
fn weighted_input_1d(q: f64, psi: &SampledWavefunction) -> Vec<Complex64> {
    let axis = psi.axis();
    let hbar = psi.hbar();
    psi.values()
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let x = axis.x(k);
            v * cis(0.5 * q * x * x / hbar) * (trapezoid(k, axis.count) * axis.dx)
        })
        .collect()
}

fn direct_1d(op: &FreeMetaplecticOp, psi: &SampledWavefunction) -> SampledWavefunction {
    let (p, l, q) = (op.gen.p[0], op.gen.l[0], op.gen.q[0]);
    let hbar = op.hbar;
    let axis = *psi.axis();
    let pref = op.prefactor();
    let input = weighted_input_1d(q, psi);
    let out = (0..axis.count)
        .map(|j| {
            let x = axis.x(j);
            let acc: Complex64 = input
                .iter()
                .enumerate()
                .map(|(k, &g)| g * cis(-l * x * axis.x(k) / hbar))
                .sum();
            acc * pref * cis(0.5 * p * x * x / hbar)
        })
        .collect();
    psi.with_values(out)
}

fn fast_1d(op: &FreeMetaplecticOp, psi: &SampledWavefunction) -> SampledWavefunction {
    let (p, l, q) = (op.gen.p[0], op.gen.l[0], op.gen.q[0]);
    let hbar = op.hbar;
    let axis = *psi.axis();
    let pref = op.prefactor();
    let input = weighted_input_1d(q, psi);
    // Σ_k g_k e^{-iL x_j x_k/ħ} = e^{-iL x_j x0/ħ} Σ_k g_k e^{-iL x_j k dx/ħ}
    let step = l * axis.dx * axis.dx / hbar;
    let start = l * axis.x0 * axis.dx / hbar;
    let sums = chirp_z(&input, axis.count, step, start);
    let out = sums
        .into_iter()
        .enumerate()
        .map(|(j, s)| {
            let x = axis.x(j);
            s * pref * cis((0.5 * p * x * x - l * x * axis.x0) / hbar)
        })
        .collect();
    psi.with_values(out)
}

fn direct_2d(op: &FreeMetaplecticOp, psi: &SampledWavefunction) -> Result<SampledWavefunction> {
    let (a1, a2) = (psi.axes()[0], psi.axes()[1]);
    if a1.count > MAX_POINTS_2D || a2.count > MAX_POINTS_2D {
        return Err(Error::Unsupported(format!(
            "2-D quadrature is limited to {MAX_POINTS_2D} points per axis"
        )));
    }
    let g = &op.gen;
    let hbar = op.hbar;
    let pref = op.prefactor();
    let quad = |m: &nalgebra::DMatrix<f64>, u: f64, v: f64| {
        m[(0, 0)] * u * u + 2.0 * m[(0, 1)] * u * v + m[(1, 1)] * v * v
    };

    let mut input = Vec::with_capacity(a1.count * a2.count);
    for i in 0..a1.count {
        for j in 0..a2.count {
            let (y1, y2) = (a1.x(i), a2.x(j));
            let w = trapezoid(i, a1.count) * trapezoid(j, a2.count) * a1.dx * a2.dx;
            input.push(psi.values()[i * a2.count + j] * cis(0.5 * quad(&g.q, y1, y2) / hbar) * w);
        }
    }

    let mut out = Vec::with_capacity(input.len());
    let mut e1 = vec![Complex64::new(0.0, 0.0); a1.count];
    let mut e2 = vec![Complex64::new(0.0, 0.0); a2.count];
    for i in 0..a1.count {
        for j in 0..a2.count {
            let (x1, x2) = (a1.x(i), a2.x(j));
            // (Lx)·y
            let u1 = g.l[(0, 0)] * x1 + g.l[(0, 1)] * x2;
            let u2 = g.l[(1, 0)] * x1 + g.l[(1, 1)] * x2;
            for (k, e) in e1.iter_mut().enumerate() {
                *e = cis(-u1 * a1.x(k) / hbar);
            }
            for (k, e) in e2.iter_mut().enumerate() {
                *e = cis(-u2 * a2.x(k) / hbar);
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for (k1, &f1) in e1.iter().enumerate() {
                let row = &input[k1 * a2.count..(k1 + 1) * a2.count];
                let inner: Complex64 = row.iter().zip(&e2).map(|(v, f2)| v * f2).sum();
                acc += inner * f1;
            }
            out.push(acc * pref * cis(0.5 * quad(&g.p, x1, x2) / hbar));
        }
    }
    Ok(psi.with_values(out))
}

/// Applies a lift of any symplectic `s` to `psi`.
///
/// Free matrices go straight to [`apply_free`] with the smallest admissible
/// Maslov index; when the matrix is not free, or its kernel would alias on
/// this grid, it is split by [`factor_free`] and the two free lifts are
/// composed. An odd `sheet` selects the other operator `−μ(s)`.
pub fn apply(
    s: &SymplecticMatrix,
    sheet: u8,
    psi: &SampledWavefunction,
    opts: &ApplyOptions,
) -> Result<SampledWavefunction> {
    let flip = |op: FreeMetaplecticOp| if sheet % 2 == 1 { op.negated() } else { op };
    let hbar = psi.hbar();
    if s.is_free(opts.tol.free) {
        let op = flip(FreeMetaplecticOp::with_smallest_index(s.clone(), hbar, &opts.tol)?);
        match apply_free(&op, psi, opts) {
            Err(Error::AliasingRisk { .. }) => {}
            other => return other,
        }
    }
    let (first, second) = factor_free(s, &opts.tol)?;
    let inner = FreeMetaplecticOp::with_smallest_index(second, hbar, &opts.tol)?;
    let outer = flip(FreeMetaplecticOp::with_smallest_index(first, hbar, &opts.tol)?);
    let mid = apply_free(&inner, psi, opts)?;
    apply_free(&outer, &mid, opts)
}

/// Closed form on Gaussians (1-D): for `ψ(x') = e^{−a x'²/2ħ}`, returns
/// `(b, c)` with `μ_{W,m}ψ(x) = c·e^{−b x²/2ħ}`.
///
/// With `α = a − iQ`: `b = L²/α − iP` and `c = i^{m−1/2} √(|L|/α)` on the
/// principal branch.
pub fn gaussian_oracle(op: &FreeMetaplecticOp, a: Complex64) -> Result<(Complex64, Complex64)> {
    if op.gen.n() != 1 {
        return Err(Error::Unsupported("the Gaussian closed form is one-dimensional".into()));
    }
    if !(a.re > 0.0) {
        return Err(Error::DivergentGaussian { re_a: a.re });
    }
    let (p, l, q) = (op.gen.p[0], op.gen.l[0], op.gen.q[0]);
    let alpha = a - Complex64::new(0.0, q);
    let b = l * l / alpha - Complex64::new(0.0, p);
    let c = maslov_phase(op.gen.m, 1) * (Complex64::new(l.abs(), 0.0) / alpha).sqrt();
    Ok((b, c))
}

/// Scalar `c` with `μ(s1)μ(s2)ψ ≈ c·μ(s1·s2)ψ`, each lift on its smallest
/// Maslov index. For a consistent convention `c = ±1`.
pub fn compose_and_compare(
    s1: &SymplecticMatrix,
    s2: &SymplecticMatrix,
    psi: &SampledWavefunction,
    opts: &ApplyOptions,
) -> Result<Complex64> {
    let product = s1.compose(s2)?;
    let hbar = psi.hbar();
    let op1 = FreeMetaplecticOp::with_smallest_index(s1.clone(), hbar, &opts.tol)?;
    let op2 = FreeMetaplecticOp::with_smallest_index(s2.clone(), hbar, &opts.tol)?;
    let op12 = FreeMetaplecticOp::with_smallest_index(product, hbar, &opts.tol)?;
    let chained = apply_free(&op1, &apply_free(&op2, psi, opts)?, opts)?;
    let direct = apply_free(&op12, psi, opts)?;
    let denom = direct.inner(&direct)?.re;
    if !(denom > 0.0) {
        return Err(Error::InvalidInput("composition test needs a nonzero wavefunction".into()));
    }
    Ok(direct.inner(&chained)? / denom)
}
