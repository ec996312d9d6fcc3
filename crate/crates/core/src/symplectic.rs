//! Linear symplectic algebra: `Sp(n)` with `J = [[0, I], [-I, 0]]`.
//!
//! Phase-space vectors are ordered `z = (x, p)` and a matrix is read in block
//! form `[[A, B], [C, D]]` with `n × n` blocks. A symplectic matrix is *free*
//! when `det B != 0`; free matrices are exactly those admitting a quadratic
//! generating function
//!
//! ```text
//! W(x, x') = ½ P x·x − (L x)·x' + ½ Q x'·x',   P = D B⁻¹, L = B⁻¹, Q = B⁻¹ A.
//! ```

use alloc::format;
use core::f64::consts::PI;
use core::ops::Mul;

use nalgebra::DMatrix;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{expm, max_abs_diff, symmetrize};
use crate::{Error, Result};

/// Number of trial angles scanned by [`factor_free`].
pub const FACTOR_ANGLES: usize = 64;

/// Validation thresholds shared by the whole crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Bound on `max |SᵀJS − J|` and on symmetry defects.
    pub sym: f64,
    /// A matrix is free when `|det B| > free`.
    pub free: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { sym: 1e-9, free: 1e-6 }
    }
}

/// The standard symplectic form `J = [[0, I], [-I, 0]]` of size `2n`.
pub fn standard_symplectic_form(n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidDimension("n must be at least 1".into()));
    }
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    Ok(j)
}

fn half_dimension(s: &DMatrix<f64>) -> Result<usize> {
    let (r, c) = s.shape();
    if r != c || r == 0 || r % 2 != 0 {
        return Err(Error::InvalidDimension(format!(
            "expected a square matrix of even size, got {r}x{c}"
        )));
    }
    Ok(r / 2)
}

/// `max |SᵀJS − J|`.
pub fn symplectic_residual(s: &DMatrix<f64>) -> Result<f64> {
    let n = half_dimension(s)?;
    let j = standard_symplectic_form(n)?;
    Ok(max_abs_diff(&(s.transpose() * &j * s), &j))
}

/// True iff `max |SᵀJS − J| <= tol`.
pub fn is_symplectic(s: &DMatrix<f64>, tol: f64) -> Result<bool> {
    Ok(symplectic_residual(s)? <= tol)
}

/// A validated element of `Sp(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    n: usize,
    m: DMatrix<f64>,
}

impl SymplecticMatrix {
    /// Validates `m` against `SᵀJS = J` at `tol`.
    pub fn new(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        let n = half_dimension(&m)?;
        let residual = symplectic_residual(&m)?;
        if !(residual <= tol) {
            return Err(Error::NotSymplectic { residual, tol });
        }
        Ok(SymplecticMatrix { n, m })
    }

    /// Row-major constructor.
    pub fn from_rows(rows: &[&[f64]], tol: f64) -> Result<Self> {
        let r = rows.len();
        if rows.iter().any(|row| row.len() != r) {
            return Err(Error::InvalidDimension("rows must form a square matrix".into()));
        }
        let flat: alloc::vec::Vec<f64> = rows.iter().flat_map(|row| row.iter().copied()).collect();
        Self::new(DMatrix::from_row_slice(r, r, &flat), tol)
    }

    pub(crate) fn from_raw(m: DMatrix<f64>) -> Self {
        let n = m.nrows() / 2;
        SymplecticMatrix { n, m }
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension("n must be at least 1".into()));
        }
        Ok(Self::from_raw(DMatrix::identity(2 * n, 2 * n)))
    }

    /// `J` itself, the phase-space quarter turn.
    pub fn standard(n: usize) -> Result<Self> {
        Ok(Self::from_raw(standard_symplectic_form(n)?))
    }

    /// Fractional rotation `[[cos a·I, sin a·I], [−sin a·I, cos a·I]]`.
    pub fn rotation(n: usize, angle: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension("n must be at least 1".into()));
        }
        let (s, c) = Float::sin_cos(angle);
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            m[(i, i)] = c;
            m[(n + i, n + i)] = c;
            m[(i, n + i)] = s;
            m[(n + i, i)] = -s;
        }
        Ok(Self::from_raw(m))
    }

    /// Position shear `[[I, tI], [0, I]]` (free-particle flow).
    pub fn shear(n: usize, t: f64) -> Result<Self> {
        let mut s = Self::identity(n)?;
        for i in 0..n {
            s.m[(i, n + i)] = t;
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    fn block(&self, r: usize, c: usize) -> DMatrix<f64> {
        self.m.view((r * self.n, c * self.n), (self.n, self.n)).into_owned()
    }

    pub fn a(&self) -> DMatrix<f64> {
        self.block(0, 0)
    }

    pub fn b(&self) -> DMatrix<f64> {
        self.block(0, 1)
    }

    pub fn c(&self) -> DMatrix<f64> {
        self.block(1, 0)
    }

    pub fn d(&self) -> DMatrix<f64> {
        self.block(1, 1)
    }

    pub fn det_b(&self) -> f64 {
        self.b().determinant()
    }

    pub fn residual(&self) -> f64 {
        symplectic_residual(&self.m).expect("dimension checked at construction")
    }

    /// `|det B| > tol_free`.
    pub fn is_free(&self, tol_free: f64) -> bool {
        self.det_b().abs() > tol_free
    }

    /// `S⁻¹ = −J Sᵀ J`, exact for symplectic input.
    pub fn inverse(&self) -> Self {
        let j = standard_symplectic_form(self.n).expect("n >= 1");
        Self::from_raw(-(&j * self.m.transpose() * &j))
    }

    pub fn compose(&self, other: &SymplecticMatrix) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::InvalidDimension(format!(
                "cannot compose Sp({}) with Sp({})",
                self.n, other.n
            )));
        }
        Ok(Self::from_raw(&self.m * &other.m))
    }

    pub fn max_abs_diff(&self, other: &SymplecticMatrix) -> f64 {
        max_abs_diff(&self.m, &other.m)
    }
}

impl Mul for &SymplecticMatrix {
    type Output = SymplecticMatrix;

    fn mul(self, rhs: &SymplecticMatrix) -> SymplecticMatrix {
        self.compose(rhs).expect("dimension mismatch in symplectic product")
    }
}

/// `H(z) = ½ zᵀ M z` with `M` real symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    n: usize,
    m: DMatrix<f64>,
}

impl QuadraticHamiltonian {
    pub fn new(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        let n = half_dimension(&m)?;
        let skew = max_abs_diff(&m, &m.transpose());
        if !(skew <= tol) {
            return Err(Error::InvalidInput(format!(
                "Hamiltonian matrix is not symmetric (max |M - Mᵀ| = {skew:.3e})"
            )));
        }
        Ok(QuadraticHamiltonian { n, m })
    }

    /// `M = I`: the isotropic harmonic oscillator `½(|x|² + |p|²)`.
    pub fn oscillator(n: usize) -> Result<Self> {
        Self::new(DMatrix::identity(2 * n, 2 * n), 0.0)
    }

    /// `M = diag(0, I)`: the free particle `½|p|²`.
    pub fn free_particle(n: usize) -> Result<Self> {
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in n..2 * n {
            m[(i, i)] = 1.0;
        }
        Self::new(m, 0.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Potential block `V` of `H = ½ Vx·x + (x·Wp) + ½ Kp·p`.
    pub fn potential_block(&self) -> DMatrix<f64> {
        self.m.view((0, 0), (self.n, self.n)).into_owned()
    }

    /// Kinetic block `K`.
    pub fn kinetic_block(&self) -> DMatrix<f64> {
        self.m.view((self.n, self.n), (self.n, self.n)).into_owned()
    }

    /// Largest entry of the `x`–`p` coupling block.
    pub fn coupling(&self) -> f64 {
        crate::linalg::max_abs(&self.m.view((0, self.n), (self.n, self.n)).into_owned())
    }
}

/// `A_t = exp(t J M)`, the time-`t` map of the linear Hamilton equations.
pub fn hamiltonian_flow(h: &QuadraticHamiltonian, t: f64) -> Result<SymplecticMatrix> {
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("time must be finite, got {t}")));
    }
    let j = standard_symplectic_form(h.n)?;
    let generator = &j * &h.m * t;
    let flow = expm(&generator)
        .ok_or_else(|| Error::Stability("matrix exponential failed".into()))?;
    Ok(SymplecticMatrix::from_raw(flow))
}

/// Seeded `exp(JM)` with `M` symmetric, entries uniform in `[−1, 1]`.
pub fn random_symplectic(n: usize, seed: u64) -> Result<SymplecticMatrix> {
    if n == 0 {
        return Err(Error::InvalidDimension("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 2 * n;
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for k in i..dim {
            let v: f64 = rng.random_range(-1.0..=1.0);
            m[(i, k)] = v;
            m[(k, i)] = v;
        }
    }
    let h = QuadraticHamiltonian { n, m };
    hamiltonian_flow(&h, 1.0)
}

/// Splits `s` into `(s·F⁻¹, F)` with `F` a fractional rotation, both free.
///
/// The angle is chosen on a fixed grid of [`FACTOR_ANGLES`] points in `(0, π)`
/// to maximize `min(|det B(s·F⁻¹)|, |det B(F)|)`; `det B(F) = sinⁿ`.
pub fn factor_free(
    s: &SymplecticMatrix,
    tol: &Tolerances,
) -> Result<(SymplecticMatrix, SymplecticMatrix)> {
    let n = s.n;
    let (a, b) = (s.a(), s.b());
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for k in 1..=FACTOR_ANGLES {
        let angle = PI * k as f64 / (FACTOR_ANGLES + 1) as f64;
        let (sin, cos) = Float::sin_cos(angle);
        // B-block of s · F(−angle)
        let first_b = (&b * cos - &a * sin).determinant().abs();
        let score = first_b.min(Float::powi(sin, n as i32));
        if score > best.1 {
            best = (angle, score);
        }
    }
    let (angle, score) = best;
    if !(score > tol.free) {
        return Err(Error::FactorizationFailure { best_angle: angle, best_score: score, tol: tol.free });
    }
    let second = SymplecticMatrix::rotation(n, angle)?;
    let first = s.compose(&SymplecticMatrix::rotation(n, -angle)?)?;
    Ok((first, second))
}

/// Maslov index, an integer modulo 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MaslovIndex(u8);

impl MaslovIndex {
    pub fn new(m: i64) -> Self {
        MaslovIndex(m.rem_euclid(4) as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Smallest index compatible with the sign of `det B`: 0 if positive, 1 if negative.
    pub fn smallest_admissible(det_b: f64) -> Self {
        if det_b > 0.0 {
            MaslovIndex(0)
        } else {
            MaslovIndex(1)
        }
    }

    /// Even iff `det B > 0`.
    pub fn is_admissible(self, det_b: f64) -> bool {
        (self.0 % 2 == 0) == (det_b > 0.0)
    }

    /// The index on the other sheet, `m + 2`.
    pub fn flipped(self) -> Self {
        MaslovIndex((self.0 + 2) % 4)
    }
}

/// Coefficients `(P, L, Q)` of `W` together with a Maslov index.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticGeneratingFunction {
    pub p: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub m: MaslovIndex,
}

impl QuadraticGeneratingFunction {
    pub fn n(&self) -> usize {
        self.l.nrows()
    }

    /// `det L = 1 / det B`.
    pub fn det_l(&self) -> f64 {
        self.l.determinant()
    }

    /// Rebuilds the free matrix: `B = L⁻¹, A = L⁻¹Q, D = PL⁻¹, C = PL⁻¹Q − Lᵀ`.
    pub fn to_symplectic(&self) -> Result<SymplecticMatrix> {
        let n = self.n();
        let b = self
            .l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("L is singular".into()))?;
        let a = &b * &self.q;
        let d = &self.p * &b;
        let c = &d * &self.q - self.l.transpose();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&a);
        m.view_mut((0, n), (n, n)).copy_from(&b);
        m.view_mut((n, 0), (n, n)).copy_from(&c);
        m.view_mut((n, n), (n, n)).copy_from(&d);
        Ok(SymplecticMatrix::from_raw(m))
    }
}

/// Generating function of a free matrix with Maslov index `m`.
pub fn generating_function(
    s: &SymplecticMatrix,
    m: MaslovIndex,
    tol: &Tolerances,
) -> Result<QuadraticGeneratingFunction> {
    let det_b = s.det_b();
    if !(det_b.abs() > tol.free) {
        return Err(Error::NotFree { det_b, tol: tol.free });
    }
    if !m.is_admissible(det_b) {
        return Err(Error::MaslovParity { m: m.value(), det_b });
    }
    let l = s
        .b()
        .try_inverse()
        .ok_or(Error::NotFree { det_b, tol: tol.free })?;
    let p = symmetrize(&(s.d() * &l));
    let q = symmetrize(&(&l * s.a()));
    Ok(QuadraticGeneratingFunction { p, l, q, m })
}
