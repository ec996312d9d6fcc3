//! Propagation of `iħ ∂ₜf = H_Weyl f` for quadratic Weyl symbols.
//!
//! The exact route evaluates `f(t) = μ(A_t) f₀` with `A_t = exp(tJM)`,
//! factoring `A_t` at caustics where its `B` block is singular. The
//! reference route is Strang splitting for separable `H = ½Vx·x + ½Kp·p`.
//!
//! The metaplectic route fixes `A₀ ↦ +identity` but does not follow the
//! double-cover sheet continuously in `t`; compare snapshots with
//! [`CompareMode::UpToGlobalPhase`] across methods.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::fft::{angular_frequencies, cis, fft, Direction};
use crate::linalg::max_abs_diff;
use crate::metaplectic::{apply, ApplyOptions};
use crate::symplectic::hamiltonian_flow;
use crate::{Error, QuadraticHamiltonian, Result, SampledWavefunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMethod {
    Metaplectic,
    SplitStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationJob {
    pub hamiltonian: QuadraticHamiltonian,
    pub initial: SampledWavefunction,
    /// Strictly increasing output instants.
    pub times: Vec<f64>,
    pub method: PropagationMethod,
    /// Step of the split-step integrator; ignored by the metaplectic route.
    pub splitstep_dt: f64,
    pub options: ApplyOptions,
}

impl PropagationJob {
    pub fn new(
        hamiltonian: QuadraticHamiltonian,
        initial: SampledWavefunction,
        times: Vec<f64>,
        method: PropagationMethod,
    ) -> Self {
        PropagationJob {
            hamiltonian,
            initial,
            times,
            method,
            splitstep_dt: 1e-3,
            options: ApplyOptions::default(),
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.splitstep_dt = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() {
            return Err(Error::InvalidInput("at least one output time is required".into()));
        }
        if self.times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("output times must be finite".into()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("output times must be strictly increasing".into()));
        }
        if self.hamiltonian.n() != self.initial.dim() {
            return Err(Error::InvalidDimension(format!(
                "Hamiltonian acts on R^{}, initial state lives on R^{}",
                self.hamiltonian.n(),
                self.initial.dim()
            )));
        }
        Ok(())
    }

    /// Number of split steps for each inter-snapshot gap (from `t = 0`).
    fn step_counts(&self) -> Result<Vec<usize>> {
        let dt = self.splitstep_dt;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("split-step dt must be positive, got {dt}")));
        }
        if self.times[0] < 0.0 {
            return Err(Error::InvalidInput("split-step output times must be nonnegative".into()));
        }
        let mut prev = 0.0;
        let mut counts = Vec::with_capacity(self.times.len());
        for &t in &self.times {
            let gap = t - prev;
            let steps = Float::round(gap / dt);
            if (gap - steps * dt).abs() > 1e-12 * gap.abs().max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "dt = {dt} does not divide the gap {gap} before t = {t}"
                )));
            }
            counts.push(steps as usize);
            prev = t;
        }
        Ok(counts)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub psi: SampledWavefunction,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub method: PropagationMethod,
    pub snapshots: Vec<Snapshot>,
}

impl PropagationResult {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.snapshots.iter().map(|s| s.t)
    }
}

fn snapshot(t: f64, psi: SampledWavefunction) -> Snapshot {
    let norm = psi.l2_norm();
    Snapshot { t, psi, norm }
}

/// State at a single instant through the metaplectic lift of the flow.
pub fn evolve_metaplectic(
    h: &QuadraticHamiltonian,
    initial: &SampledWavefunction,
    t: f64,
    opts: &ApplyOptions,
) -> Result<SampledWavefunction> {
    let run = || {
        let flow = hamiltonian_flow(h, t)?;
        let n = flow.n();
        if max_abs_diff(flow.matrix(), &nalgebra::DMatrix::identity(2 * n, 2 * n)) <= opts.tol.sym {
            return Ok(initial.clone());
        }
        apply(&flow, 0, initial, opts)
    };
    run().map_err(|e: Error| e.at_time(t))
}

/// `f(t) = μ(A_t) f₀` at every requested instant.
pub fn propagate_metaplectic(job: &PropagationJob) -> Result<PropagationResult> {
    job.validate()?;
    let snapshots = job
        .times
        .iter()
        .map(|&t| {
            evolve_metaplectic(&job.hamiltonian, &job.initial, t, &job.options).map(|psi| snapshot(t, psi))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PropagationResult { method: PropagationMethod::Metaplectic, snapshots })
}

/// Strang splitting `e^{−iV̂dt/2ħ} e^{−iK̂dt/ħ} e^{−iV̂dt/2ħ}` with the kinetic
/// factor diagonal in Fourier space.
pub fn propagate_splitstep(job: &PropagationJob) -> Result<PropagationResult> {
    job.validate()?;
    let h = &job.hamiltonian;
    if h.coupling() > job.options.tol.sym {
        return Err(Error::UnsupportedHamiltonian(
            "split-step reference needs a separable Hamiltonian (no x-p coupling block)".into(),
        ));
    }
    let counts = job.step_counts()?;
    let dt = job.splitstep_dt;
    let psi0 = &job.initial;
    let hbar = psi0.hbar();
    let axes = psi0.axes();
    let v = h.potential_block();
    let k = h.kinetic_block();

    let half_potential: Vec<Complex64> = match axes.len() {
        1 => axes[0].points().map(|x| cis(-0.25 * v[0] * x * x * dt / hbar)).collect(),
        2 => {
            let mut out = Vec::with_capacity(axes[0].count * axes[1].count);
            for x1 in axes[0].points() {
                for x2 in axes[1].points() {
                    let e = v[(0, 0)] * x1 * x1 + 2.0 * v[(0, 1)] * x1 * x2 + v[(1, 1)] * x2 * x2;
                    out.push(cis(-0.25 * e * dt / hbar));
                }
            }
            out
        }
        d => return Err(Error::InvalidDimension(format!("split-step supports 1 or 2 dimensions, got {d}"))),
    };
    // p = ħk, E = ½ħ² k·Kk, phase −E dt/ħ
    let kinetic: Vec<Complex64> = match axes.len() {
        1 => angular_frequencies(axes[0].count, axes[0].dx)
            .into_iter()
            .map(|w| cis(-0.5 * hbar * k[0] * w * w * dt))
            .collect(),
        _ => {
            let w1 = angular_frequencies(axes[0].count, axes[0].dx);
            let w2 = angular_frequencies(axes[1].count, axes[1].dx);
            let mut out = Vec::with_capacity(w1.len() * w2.len());
            for &a in &w1 {
                for &b in &w2 {
                    let e = k[(0, 0)] * a * a + 2.0 * k[(0, 1)] * a * b + k[(1, 1)] * b * b;
                    out.push(cis(-0.5 * hbar * e * dt));
                }
            }
            out
        }
    };

    let shape: Vec<usize> = axes.iter().map(|a| a.count).collect();
    let scale = 1.0 / psi0.values().len() as f64;
    let mut state = psi0.values().to_vec();
    let mut snapshots = Vec::with_capacity(job.times.len());
    for (&t, &steps) in job.times.iter().zip(&counts) {
        for _ in 0..steps {
            mul_in_place(&mut state, &half_potential);
            fft_nd(&mut state, &shape, Direction::Forward);
            mul_in_place(&mut state, &kinetic);
            fft_nd(&mut state, &shape, Direction::Inverse);
            for v in state.iter_mut() {
                *v *= scale;
            }
            mul_in_place(&mut state, &half_potential);
        }
        snapshots.push(snapshot(t, psi0.with_values(state.clone())));
    }
    Ok(PropagationResult { method: PropagationMethod::SplitStep, snapshots })
}

/// Dispatches on `job.method`.
pub fn propagate(job: &PropagationJob) -> Result<PropagationResult> {
    match job.method {
        PropagationMethod::Metaplectic => propagate_metaplectic(job),
        PropagationMethod::SplitStep => propagate_splitstep(job),
    }
}

fn mul_in_place(a: &mut [Complex64], b: &[Complex64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x *= *y;
    }
}

fn fft_nd(data: &mut [Complex64], shape: &[usize], dir: Direction) {
    match *shape {
        [_] => fft(data, dir),
        [rows, cols] => {
            for row in data.chunks_mut(cols) {
                fft(row, dir);
            }
            let mut column = vec![Complex64::new(0.0, 0.0); rows];
            for c in 0..cols {
                for r in 0..rows {
                    column[r] = data[r * cols + c];
                }
                fft(&mut column, dir);
                for r in 0..rows {
                    data[r * cols + c] = column[r];
                }
            }
        }
        _ => unreachable!("dimension validated by SampledWavefunction"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareMode {
    L2,
    /// Minimizes over a unimodular factor before differencing.
    UpToGlobalPhase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub t: f64,
    pub l2_error: f64,
    /// Phase `θ` of the factor applied to `b` (zero in `L2` mode).
    pub phase: f64,
}

/// `‖a − e^{iθ}b‖₂` with `θ = 0` or the phase of `⟨b, a⟩`.
pub fn compare_states(
    a: &SampledWavefunction,
    b: &SampledWavefunction,
    mode: CompareMode,
) -> Result<(f64, f64)> {
    let phase = match mode {
        CompareMode::L2 => 0.0,
        CompareMode::UpToGlobalPhase => {
            let overlap = b.inner(a)?;
            if overlap.norm() > 0.0 {
                overlap.arg()
            } else {
                0.0
            }
        }
    };
    let err = a.l2_distance(&b.scaled(cis(phase)))?;
    Ok((err, phase))
}

/// Per-snapshot distance between two runs on the same times and grid.
pub fn compare_results(
    a: &PropagationResult,
    b: &PropagationResult,
    mode: CompareMode,
) -> Result<Vec<ComparisonRow>> {
    if a.snapshots.len() != b.snapshots.len() {
        return Err(Error::InvalidComparison(format!(
            "snapshot counts differ ({} vs {})",
            a.snapshots.len(),
            b.snapshots.len()
        )));
    }
    a.snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(x, y)| {
            if (x.t - y.t).abs() > 1e-12 * x.t.abs().max(1.0) {
                return Err(Error::InvalidComparison(format!("times differ ({} vs {})", x.t, y.t)));
            }
            let (l2_error, phase) = compare_states(&x.psi, &y.psi, mode)?;
            Ok(ComparisonRow { t: x.t, l2_error, phase })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::hermite_state;
    use crate::metaplectic::{gaussian_oracle, FreeMetaplecticOp};
    use crate::wavefunction::Axis;
    use crate::{SymplecticMatrix, Tolerances};
    use core::f64::consts::{FRAC_PI_2, PI};
    use nalgebra::DMatrix;

    fn axis() -> Axis {
        Axis::centered(12.0, 1024).unwrap()
    }

    fn oscillator_job(k: usize, times: Vec<f64>, method: PropagationMethod) -> PropagationJob {
        let h0 = hermite_state(k, axis(), 1.0).unwrap();
        PropagationJob::new(QuadraticHamiltonian::oscillator(1).unwrap(), h0, times, method)
    }

    #[test]
    fn time_zero_returns_initial_exactly() {
        let job = oscillator_job(2, vec![0.0, 0.5], PropagationMethod::Metaplectic);
        let res = propagate_metaplectic(&job).unwrap();
        assert_eq!(res.snapshots[0].psi, job.initial);
    }

    #[test]
    fn ground_state_quarter_period() {
        let job = oscillator_job(0, vec![FRAC_PI_2], PropagationMethod::Metaplectic);
        let res = propagate_metaplectic(&job).unwrap();
        let want = job.initial.scaled(cis(-PI / 4.0));
        assert!(res.snapshots[0].psi.max_distance(&want).unwrap() < 1e-10);
    }

    #[test]
    fn free_particle_matches_gaussian_closed_form() {
        let h = QuadraticHamiltonian::free_particle(1).unwrap();
        let psi = SampledWavefunction::gaussian(axis(), 1.0, Complex64::new(1.0, 0.0)).unwrap();
        let job = PropagationJob::new(h, psi, vec![1.0], PropagationMethod::Metaplectic);
        let out = &propagate_metaplectic(&job).unwrap().snapshots[0].psi;
        let op = FreeMetaplecticOp::with_smallest_index(
            SymplecticMatrix::shear(1, 1.0).unwrap(),
            1.0,
            &Tolerances::default(),
        )
        .unwrap();
        let (b, c) = gaussian_oracle(&op, Complex64::new(1.0, 0.0)).unwrap();
        let want = SampledWavefunction::gaussian(axis(), 1.0, b).unwrap().scaled(c);
        assert!(out.max_distance(&want).unwrap() < 1e-6);
    }

    #[test]
    fn splitstep_free_particle_is_exact_per_step() {
        let h = QuadraticHamiltonian::free_particle(1).unwrap();
        let psi = SampledWavefunction::gaussian(axis(), 1.0, Complex64::new(1.0, 0.0)).unwrap();
        let job = PropagationJob::new(h, psi, vec![0.5, 1.0], PropagationMethod::SplitStep).with_dt(0.1);
        let ss = propagate_splitstep(&job).unwrap();
        let mut meta_job = job.clone();
        meta_job.method = PropagationMethod::Metaplectic;
        let mp = propagate_metaplectic(&meta_job).unwrap();
        for row in compare_results(&ss, &mp, CompareMode::L2).unwrap() {
            assert!(row.l2_error < 1e-8, "{row:?}");
        }
    }

    #[test]
    fn splitstep_rejects_coupled_hamiltonian() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        let h = QuadraticHamiltonian::new(m, 1e-12).unwrap();
        let job = PropagationJob::new(h, hermite_state(0, axis(), 1.0).unwrap(), vec![1.0], PropagationMethod::SplitStep);
        assert!(matches!(propagate_splitstep(&job), Err(Error::UnsupportedHamiltonian(_))));
    }

    #[test]
    fn dt_must_divide_gaps() {
        let job = oscillator_job(0, vec![0.25], PropagationMethod::SplitStep).with_dt(0.1);
        assert!(matches!(propagate_splitstep(&job), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn times_must_increase() {
        let job = oscillator_job(0, vec![1.0, 1.0], PropagationMethod::Metaplectic);
        assert!(propagate(&job).is_err());
        let job = oscillator_job(0, vec![], PropagationMethod::Metaplectic);
        assert!(propagate(&job).is_err());
    }

    #[test]
    fn comparison_modes() {
        let job = oscillator_job(1, vec![0.3], PropagationMethod::Metaplectic);
        let a = propagate_metaplectic(&job).unwrap();
        let rows = compare_results(&a, &a, CompareMode::L2).unwrap();
        assert_eq!(rows[0].l2_error, 0.0);
        let mut b = a.clone();
        b.snapshots[0].psi = b.snapshots[0].psi.scaled((-1.0).into());
        let l2 = compare_results(&a, &b, CompareMode::L2).unwrap()[0].l2_error;
        assert!((l2 - 2.0).abs() < 1e-8);
        let modded = compare_results(&a, &b, CompareMode::UpToGlobalPhase).unwrap()[0].l2_error;
        assert!(modded < 1e-14);
    }

    #[test]
    fn comparison_rejects_grid_mismatch() {
        let a = propagate_metaplectic(&oscillator_job(0, vec![0.3], PropagationMethod::Metaplectic)).unwrap();
        let other = hermite_state(0, Axis::centered(11.0, 1024).unwrap(), 1.0).unwrap();
        let mut job = oscillator_job(0, vec![0.3], PropagationMethod::Metaplectic);
        job.initial = other;
        let b = propagate_metaplectic(&job).unwrap();
        assert!(matches!(compare_results(&a, &b, CompareMode::L2), Err(Error::InvalidComparison(_))));
    }

    #[test]
    fn two_dimensional_splitstep_matches_metaplectic() {
        let ax = Axis::centered(6.0, 64).unwrap();
        let psi = SampledWavefunction::from_fn_2d(ax, ax, 1.0, |x, y| {
            Complex64::new((-(x - 0.5) * (x - 0.5) / 2.0 - y * y / 1.5).exp(), 0.0)
        })
        .unwrap();
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.5, 1.0, 1.5]));
        let h = QuadraticHamiltonian::new(m, 0.0).unwrap();
        let job = PropagationJob::new(h, psi, vec![0.6], PropagationMethod::SplitStep).with_dt(0.6 / 400.0);
        let ss = propagate_splitstep(&job).unwrap();
        let mut mj = job.clone();
        mj.method = PropagationMethod::Metaplectic;
        let mp = propagate_metaplectic(&mj).unwrap();
        let row = compare_results(&ss, &mp, CompareMode::UpToGlobalPhase).unwrap()[0];
        assert!(row.l2_error < 1e-4, "{row:?}");
    }
}
