//! Complex samples on uniform 1-D and 2-D grids.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::{Error, Result};

/// Minimum number of samples per axis.
pub const MIN_POINTS: usize = 8;

/// One uniform axis: `x_j = x0 + j·dx`, `j = 0 .. count-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub x0: f64,
    pub dx: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(x0: f64, dx: f64, count: usize) -> Result<Self> {
        if count < MIN_POINTS {
            return Err(Error::InvalidInput(format!(
                "grid needs at least {MIN_POINTS} points per axis, got {count}"
            )));
        }
        if !(dx > 0.0) || !dx.is_finite() || !x0.is_finite() {
            return Err(Error::InvalidInput(format!("invalid grid origin/step ({x0}, {dx})")));
        }
        Ok(Axis { x0, dx, count })
    }

    /// `count` points covering `[-half_width, half_width)`.
    pub fn centered(half_width: f64, count: usize) -> Result<Self> {
        Self::new(-half_width, 2.0 * half_width / count as f64, count)
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |j| self.x(j))
    }

    /// Largest `|x|` on the axis.
    pub fn x_max(&self) -> f64 {
        self.x0.abs().max(self.x(self.count - 1).abs())
    }

    pub fn same_as(&self, other: &Axis) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
        self.count == other.count && close(self.x0, other.x0) && close(self.dx, other.dx)
    }
}

/// Samples `ψ(x)` of a wavefunction on a tensor grid, with its `ħ`.
///
/// For two axes the storage is row-major: index `i·N₂ + j` holds `ψ(x₁ᵢ, x₂ⱼ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWavefunction {
    axes: Vec<Axis>,
    values: Vec<Complex64>,
    hbar: f64,
}

impl SampledWavefunction {
    pub fn new(axes: Vec<Axis>, values: Vec<Complex64>, hbar: f64) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidDimension(format!(
                "wavefunctions are supported in 1 or 2 dimensions, got {}",
                axes.len()
            )));
        }
        for a in &axes {
            Axis::new(a.x0, a.dx, a.count)?;
        }
        let expected: usize = axes.iter().map(|a| a.count).product();
        if values.len() != expected {
            return Err(Error::InvalidInput(format!(
                "expected {expected} samples, got {}",
                values.len()
            )));
        }
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(Error::InvalidInput(format!("hbar must be positive, got {hbar}")));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput("samples must be finite".into()));
        }
        Ok(SampledWavefunction { axes, values, hbar })
    }

    pub fn from_fn(axis: Axis, hbar: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = axis.points().map(f).collect();
        Self::new(alloc::vec![axis], values, hbar)
    }

    pub fn from_fn_2d(
        first: Axis,
        second: Axis,
        hbar: f64,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(first.count * second.count);
        for x1 in first.points() {
            for x2 in second.points() {
                values.push(f(x1, x2));
            }
        }
        Self::new(alloc::vec![first, second], values, hbar)
    }

    /// `e^{−a x²/(2ħ)}` for complex `a`.
    pub fn gaussian(axis: Axis, hbar: f64, a: Complex64) -> Result<Self> {
        Self::from_fn(axis, hbar, |x| (-a * x * x / (2.0 * hbar)).exp())
    }

    pub fn zeros_like(&self) -> Self {
        SampledWavefunction {
            axes: self.axes.clone(),
            values: alloc::vec![Complex64::new(0.0, 0.0); self.values.len()],
            hbar: self.hbar,
        }
    }

    pub(crate) fn with_values(&self, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        SampledWavefunction { axes: self.axes.clone(), values, hbar: self.hbar }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// First axis; the only one in 1-D.
    pub fn axis(&self) -> &Axis {
        &self.axes[0]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Volume element `Π dx`.
    pub fn cell(&self) -> f64 {
        self.axes.iter().map(|a| a.dx).product()
    }

    pub fn same_grid(&self, other: &SampledWavefunction) -> bool {
        self.axes.len() == other.axes.len()
            && self.axes.iter().zip(&other.axes).all(|(a, b)| a.same_as(b))
    }

    fn require_same_grid(&self, other: &SampledWavefunction) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::InvalidComparison("wavefunctions live on different grids".into()))
        }
    }

    /// `√(Σ|ψⱼ|² Πdx)`.
    pub fn l2_norm(&self) -> f64 {
        Float::sqrt(self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell())
    }

    /// `⟨self, other⟩ = Σ conj(selfⱼ)·otherⱼ Πdx`.
    pub fn inner(&self, other: &SampledWavefunction) -> Result<Complex64> {
        self.require_same_grid(other)?;
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.cell())
    }

    /// `‖self − other‖₂`.
    pub fn l2_distance(&self, other: &SampledWavefunction) -> Result<f64> {
        self.require_same_grid(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok(Float::sqrt(s * self.cell()))
    }

    /// Largest pointwise `|selfⱼ − otherⱼ|`.
    pub fn max_distance(&self, other: &SampledWavefunction) -> Result<f64> {
        self.require_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        self.with_values(self.values.iter().map(|v| v * c).collect())
    }

    /// `α·self + β·other`.
    pub fn linear_combination(
        &self,
        alpha: Complex64,
        other: &SampledWavefunction,
        beta: Complex64,
    ) -> Result<Self> {
        self.require_same_grid(other)?;
        Ok(self.with_values(
            self.values.iter().zip(&other.values).map(|(a, b)| alpha * a + beta * b).collect(),
        ))
    }

    /// Unit-norm copy; `None` for the zero function.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.l2_norm();
        (n > 0.0).then(|| self.scaled(Complex64::new(1.0 / n, 0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn axis_validation() {
        assert!(Axis::new(0.0, 0.1, 7).is_err());
        assert!(Axis::new(0.0, 0.0, 16).is_err());
        assert!(Axis::new(0.0, -1.0, 16).is_err());
        let a = Axis::centered(12.0, 1024).unwrap();
        assert_eq!(a.x(512), 0.0);
        assert_eq!(a.x_max(), 12.0);
    }

    #[test]
    fn gaussian_norm() {
        let axis = Axis::centered(12.0, 512).unwrap();
        let g = SampledWavefunction::gaussian(axis, 1.0, Complex64::new(1.0, 0.0)).unwrap();
        // ∫ e^{-x²} dx = √π
        assert!((g.l2_norm() - core::f64::consts::PI.sqrt().sqrt()).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_input() {
        let axis = Axis::centered(1.0, 8).unwrap();
        let z = Complex64::new(0.0, 0.0);
        assert!(SampledWavefunction::new(vec![axis], vec![z; 7], 1.0).is_err());
        assert!(SampledWavefunction::new(vec![axis], vec![z; 8], 0.0).is_err());
        assert!(SampledWavefunction::new(vec![axis; 3], vec![z; 512], 1.0).is_err());
        let nan = Complex64::new(f64::NAN, 0.0);
        assert!(SampledWavefunction::new(vec![axis], vec![nan; 8], 1.0).is_err());
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let a = SampledWavefunction::gaussian(Axis::centered(5.0, 64).unwrap(), 1.0, 1.0.into()).unwrap();
        let b = SampledWavefunction::gaussian(Axis::centered(6.0, 64).unwrap(), 1.0, 1.0.into()).unwrap();
        assert!(matches!(a.l2_distance(&b), Err(Error::InvalidComparison(_))));
    }
}
