//! The invariant suite run by `metaplectic verify` and the acceptance tests.
//!
//! Randomized suites draw seeded matrices and keep those whose lift is
//! resolvable on the test grid: `|det B|` away from zero, kernel phase under
//! the Nyquist guard, and Gaussian images that decay well inside the grid.
//! The selection only looks at the matrix and the closed-form Gaussian image,
//! never at the numerical result being checked.

use std::f64::consts::PI;
use std::time::Instant;

use metaplectic_core::amalgam::{
    amalgam_norm, cross_estimate_experiment, default_family, regularity_experiment,
    same_space_estimate_experiment, stft, AmalgamNormSpec,
};
use metaplectic_core::fft::cis;
use metaplectic_core::hermite::hermite_state;
use metaplectic_core::metaplectic::{
    apply_free, compose_and_compare, gaussian_oracle, ApplyOptions, FreeMetaplecticOp, Method,
};
use metaplectic_core::schrodinger::{
    compare_results, evolve_metaplectic, propagate, CompareMode, PropagationJob, PropagationMethod,
};
use metaplectic_core::symplectic::{factor_free, hamiltonian_flow, is_symplectic, random_symplectic};
use metaplectic_core::{
    Axis, Complex64, Error, QuadraticHamiltonian, SampledWavefunction, SymplecticMatrix, Tolerances,
};

type Outcome = Result<(bool, String), Error>;

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    /// Wall-clock budget in seconds.
    pub limit: Option<f64>,
    run: fn(u64) -> Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub seconds: f64,
    pub limit: Option<f64>,
    pub detail: String,
}

impl CheckResult {
    pub fn line(&self) -> String {
        let budget = self.limit.map(|l| format!(" < {l:.0} s")).unwrap_or_default();
        format!(
            "[{}] {}. {} ({:.2} s{budget}): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

pub const CRITERIA: [Criterion; 8] = [
    Criterion { id: 1, name: "symplectic suite", limit: Some(5.0), run: symplectic_suite },
    Criterion { id: 2, name: "free operator realization", limit: Some(30.0), run: realization },
    Criterion { id: 3, name: "double cover", limit: None, run: double_cover },
    Criterion { id: 4, name: "oscillator eigenstates", limit: Some(60.0), run: eigenstates },
    Criterion { id: 5, name: "non-free caustic", limit: None, run: caustic },
    Criterion { id: 6, name: "amalgam engine", limit: None, run: amalgam_engine },
    Criterion { id: 7, name: "norm estimates", limit: Some(120.0), run: estimates },
    Criterion { id: 8, name: "regularity along the flow", limit: None, run: regularity },
];

pub fn run_criterion(c: &Criterion, seed: u64) -> CheckResult {
    let start = Instant::now();
    let outcome = (c.run)(seed);
    let seconds = start.elapsed().as_secs_f64();
    let (ok, detail) = match outcome {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let in_time = c.limit.map_or(true, |l| seconds < l);
    let detail = if ok && !in_time { format!("{detail}; over the time budget") } else { detail };
    CheckResult { id: c.id, name: c.name, passed: ok && in_time, seconds, limit: c.limit, detail }
}

pub fn run_all(seed: u64) -> Vec<CheckResult> {
    CRITERIA.iter().map(|c| run_criterion(c, seed)).collect()
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn gaussian(axis: Axis, a: Complex64) -> Result<SampledWavefunction, Error> {
    SampledWavefunction::gaussian(axis, 1.0, a)
}

fn coherent(axis: Axis, hbar: f64, x0: f64, p0: f64) -> Result<SampledWavefunction, Error> {
    SampledWavefunction::from_fn(axis, hbar, |x| coherent_value(hbar, x0, p0, x))
}

fn coherent_value(hbar: f64, x0: f64, p0: f64, x: f64) -> Complex64 {
    let norm = (PI * hbar).powf(-0.25);
    cis(p0 * x / hbar) * (norm * (-(x - x0) * (x - x0) / (2.0 * hbar)).exp())
}

/// `c·e^{−b x²/2}` (ħ = 1) decays within the grid and its chirp is resolved.
fn gaussian_fits(b: Complex64, axis: &Axis) -> bool {
    if !(b.re > 0.0) {
        return false;
    }
    let width = 1.0 / b.re.sqrt();
    let reach = 8.0 * width;
    reach <= axis.x_max() && width >= 4.0 * axis.dx && b.norm() * reach <= 0.5 * PI / axis.dx
}

/// Gaussian images of `inputs` under the smallest-index lift of `s`, when
/// every one of them fits on `axis`.
fn moderate(s: &SymplecticMatrix, axis: &Axis, inputs: &[Complex64]) -> Option<Vec<Complex64>> {
    if !s.is_free(1e-2) {
        return None;
    }
    let op = FreeMetaplecticOp::with_smallest_index(s.clone(), 1.0, &Tolerances::default()).ok()?;
    op.check_aliasing(&[*axis]).ok()?;
    inputs
        .iter()
        .map(|&a| {
            let (b, _) = gaussian_oracle(&op, a).ok()?;
            gaussian_fits(b, axis).then_some(b)
        })
        .collect()
}

fn moderate_suite(count: usize, axis: &Axis, first_seed: u64, inputs: &[Complex64]) -> Result<Vec<SymplecticMatrix>, Error> {
    let mut out = Vec::with_capacity(count);
    let mut seed = first_seed;
    while out.len() < count {
        if seed - first_seed > 100 * count as u64 {
            return Err(Error::InvalidInput(format!("only {} resolvable matrices in the seed range", out.len())));
        }
        let s = random_symplectic(1, seed)?;
        if moderate(&s, axis, inputs).is_some() {
            out.push(s);
        }
        seed += 1;
    }
    Ok(out)
}

fn symplectic_suite(seed: u64) -> Outcome {
    let tol = Tolerances::default();
    let (mut all_symplectic, mut worst_product, mut min_det) = (true, 0.0f64, f64::INFINITY);
    for n in 1..=2 {
        for k in 0..50 {
            let s = random_symplectic(n, seed + k)?;
            all_symplectic &= is_symplectic(s.matrix(), 1e-9)?;
            let (a, b) = factor_free(&s, &tol)?;
            worst_product = worst_product.max((&a * &b).max_abs_diff(&s));
            min_det = min_det.min(a.det_b().abs()).min(b.det_b().abs());
        }
    }
    let ok = all_symplectic && worst_product <= 1e-9 && min_det >= 1e-6;
    Ok((
        ok,
        format!(
            "100 matrices symplectic: {all_symplectic}, max |S1 S2 - S| = {worst_product:.2e}, min |det B| = {min_det:.2e}"
        ),
    ))
}

fn realization(seed: u64) -> Outcome {
    let one = [c64(1.0, 0.0)];
    let small = Axis::centered(8.0, 256)?;
    let psi = gaussian(small, one[0])?;
    let mut worst_gap = 0.0f64;
    for s in moderate_suite(20, &small, seed, &one)? {
        let op = FreeMetaplecticOp::with_smallest_index(s, 1.0, &Tolerances::default())?;
        let fast = apply_free(&op, &psi, &ApplyOptions::with_method(Method::Fast))?;
        let direct = apply_free(&op, &psi, &ApplyOptions::with_method(Method::Direct))?;
        worst_gap = worst_gap.max(fast.l2_distance(&direct)?);
    }

    let large = Axis::centered(12.0, 1024)?;
    let inputs = [gaussian(large, one[0])?, hermite_state(2, large, 1.0)?];
    let mut worst_norm = 0.0f64;
    for s in moderate_suite(20, &large, seed, &one)? {
        let op = FreeMetaplecticOp::with_smallest_index(s, 1.0, &Tolerances::default())?;
        for f in &inputs {
            let out = apply_free(&op, f, &ApplyOptions::default())?;
            worst_norm = worst_norm.max((out.l2_norm() / f.l2_norm() - 1.0).abs());
        }
    }
    Ok((
        worst_gap <= 1e-8 && worst_norm <= 1e-5,
        format!("fast vs direct (N=256) max L2 gap {worst_gap:.2e}; max |norm ratio - 1| (N=1024) {worst_norm:.2e}"),
    ))
}

fn double_cover(seed: u64) -> Outcome {
    let axis = Axis::centered(12.0, 1024)?;
    let one = c64(1.0, 0.0);
    let psi = gaussian(axis, one)?;
    let mut worst = 0.0f64;
    let mut signs = [0usize; 2];
    let mut found = 0;
    let mut k = 0u64;
    while found < 20 {
        if k > 4000 {
            return Ok((false, format!("only {found} resolvable triples")));
        }
        let s1 = random_symplectic(1, seed + 1000 + 2 * k)?;
        let s2 = random_symplectic(1, seed + 1001 + 2 * k)?;
        k += 1;
        let Some(mid) = moderate(&s2, &axis, &[one]) else { continue };
        if moderate(&s1, &axis, &mid).is_none() || moderate(&(&s1 * &s2), &axis, &[one]).is_none() {
            continue;
        }
        let c = compose_and_compare(&s1, &s2, &psi, &ApplyOptions::default())?;
        let sign = if c.re >= 0.0 { 1.0 } else { -1.0 };
        signs[usize::from(sign < 0.0)] += 1;
        worst = worst.max((c - sign).norm()).max(c.im.abs());
        found += 1;
    }
    Ok((
        worst < 1e-5,
        format!("20 triples, max |c -/+ 1| = {worst:.2e} ({} with +1, {} with -1)", signs[0], signs[1]),
    ))
}

fn eigenstates(_seed: u64) -> Outcome {
    let axis = Axis::centered(12.0, 1024)?;
    let h = QuadraticHamiltonian::oscillator(1)?;
    let times = [PI / 8.0, PI / 4.0, PI / 2.0];
    let opts = ApplyOptions::default();
    let (mut worst_eigen, mut worst_split) = (0.0f64, 0.0f64);
    for k in 0..=3 {
        let hk = hermite_state(k, axis, 1.0)?;
        for &t in &times {
            let out = evolve_metaplectic(&h, &hk, t, &opts)?;
            let want = hk.scaled(cis(-(k as f64 + 0.5) * t));
            let err = out.max_distance(&want)?.min(out.max_distance(&want.scaled(c64(-1.0, 0.0)))?);
            worst_eigen = worst_eigen.max(err);
        }
        let job = |method| PropagationJob::new(h.clone(), hk.clone(), times.to_vec(), method).with_dt(PI / 2000.0);
        let exact = propagate(&job(PropagationMethod::Metaplectic))?;
        let split = propagate(&job(PropagationMethod::SplitStep))?;
        for row in compare_results(&split, &exact, CompareMode::UpToGlobalPhase)? {
            worst_split = worst_split.max(row.l2_error);
        }
    }

    // self-convergence on a displaced state at t = π/2
    let f0 = coherent(axis, 1.0, 1.0, 0.5)?;
    let run = |dt: f64| -> Result<SampledWavefunction, Error> {
        let job = PropagationJob::new(h.clone(), f0.clone(), vec![PI / 2.0], PropagationMethod::SplitStep).with_dt(dt);
        Ok(propagate(&job)?.snapshots.remove(0).psi)
    };
    let (u1, u2, u4) = (run(PI / 100.0)?, run(PI / 200.0)?, run(PI / 400.0)?);
    let order = (u1.l2_distance(&u2)? / u2.l2_distance(&u4)?).log2();

    let ok = worst_eigen < 1e-4 && worst_split < 1e-4 && (order - 2.0).abs() <= 0.2;
    Ok((
        ok,
        format!(
            "max |psi - e^(-i(k+1/2)t) h_k| = {worst_eigen:.2e}; split-step (dt=pi/2000) gap {worst_split:.2e}; observed order {order:.3}"
        ),
    ))
}

fn caustic(_seed: u64) -> Outcome {
    let axis = Axis::centered(12.0, 1024)?;
    let h = QuadraticHamiltonian::oscillator(1)?;
    let flow = hamiltonian_flow(&h, PI)?;
    let tol = Tolerances::default();
    if flow.is_free(tol.free) {
        return Ok((false, format!("A_pi unexpectedly free (det B = {:.2e})", flow.det_b())));
    }
    let (x0, p0) = (1.0, 0.5);
    let f0 = coherent(axis, 1.0, x0, p0)?;
    let mirrored = SampledWavefunction::from_fn(axis, 1.0, |x| coherent_value(1.0, x0, p0, -x))?;
    let out = evolve_metaplectic(&h, &f0, PI, &ApplyOptions::default())?;
    let dist = |target: &SampledWavefunction| -> Result<f64, Error> {
        Ok(out.l2_distance(target)?.min(out.l2_distance(&target.scaled(c64(-1.0, 0.0)))?))
    };
    // the oscillator eigenphase e^{-i(k+1/2)π} = -i(-1)^k makes μ(A_π) = ±(-i)·parity
    let expected = dist(&mirrored.scaled(c64(0.0, -1.0)))?;
    let literal = dist(&mirrored)?;
    let phase = mirrored.inner(&out)?.arg();
    Ok((
        expected < 1e-4,
        format!(
            "det B = {:.1e}, via factorization; |psi(pi) -/+ (-i) P f0| = {expected:.2e}, observed phase {phase:.4} rad; |psi(pi) -/+ P f0| = {literal:.2e}",
            flow.det_b()
        ),
    ))
}

fn amalgam_engine(_seed: u64) -> Outcome {
    let axis = Axis::centered(12.0, 1024)?;
    let mut states = Vec::new();
    for k in 0..=3 {
        states.push(hermite_state(k, axis, 1.0)?);
    }
    states.push(coherent(axis, 1.0, 1.0, 0.5)?);
    states.push(gaussian(axis, c64(1.0, -1.0))?);
    states.push(coherent(axis, 0.5, -1.0, 2.0)?);
    let (mut moyal, mut calibration, mut refinement) = (0.0f64, 0.0f64, 0.0f64);
    for psi in &states {
        let hbar = psi.hbar();
        let spec = AmalgamNormSpec::for_axis(&axis, 2.0, 2.0)?;
        let l2 = psi.l2_norm();
        moyal = moyal.max((stft(psi, &spec)?.energy(hbar) / (l2 * l2) - 1.0).abs());
        let norm = amalgam_norm(psi, &spec)?;
        calibration = calibration.max((norm / ((2.0 * PI * hbar).sqrt() * l2) - 1.0).abs());
        let fine = AmalgamNormSpec::new(2.0, 2.0, spec.window_width, spec.hop / 2.0, spec.freq_count)?;
        refinement = refinement.max((amalgam_norm(psi, &fine)? / norm - 1.0).abs());
    }
    Ok((
        moyal < 1e-4 && calibration < 1e-3 && refinement < 5e-3,
        format!(
            "Moyal rel. error {moyal:.2e}; (2,2) norm / (sqrt(2 pi hbar) |psi|) off by {calibration:.2e}; hop halving moves norms {refinement:.2e}"
        ),
    ))
}

fn estimates(seed: u64) -> Outcome {
    let axis = Axis::centered(24.0, 2048)?;
    let family = default_family(axis, 1.0)?;
    let probes = [c64(16.0, 0.0), c64(1.0 / 16.0, 0.0), c64(1.0, -1.0), c64(1.0, 0.0)];
    let random = moderate_suite(1, &axis, seed, &probes)?.remove(0);
    let matrices = [
        ("J", SymplecticMatrix::standard(1)?),
        ("rotation(pi/4)", SymplecticMatrix::rotation(1, PI / 4.0)?),
        ("shear", SymplecticMatrix::shear(1, 1.0)?),
        ("random", random),
    ];
    let exps = [(1.0, f64::INFINITY), (2.0, 2.0), (f64::INFINITY, 1.0), (1.0, 2.0)];
    let opts = ApplyOptions::default();
    let (mut finite, mut worst_unitary, mut worst_excess) = (true, 0.0f64, f64::NEG_INFINITY);
    let mut failures = Vec::new();
    for (name, s) in &matrices {
        for &(p, q) in &exps {
            let spec = AmalgamNormSpec::for_axis(&axis, p, q)?;
            let cross = cross_estimate_experiment(s, &spec, &family, &opts)?;
            let same = same_space_estimate_experiment(s, &spec, &family, &opts)?;
            let ok = |r: &[f64]| r.iter().all(|v| v.is_finite() && *v > 0.0);
            if !ok(&cross.ratios) || !ok(&same.ratios) || !cross.skipped.is_empty() {
                finite = false;
                failures.push(format!("{name} ({p},{q}) ratios"));
            }
            if p == 2.0 && q == 2.0 {
                for r in &cross.ratios {
                    worst_unitary = worst_unitary.max((r - 1.0).abs());
                }
            }
            let bound = same.factor_bound.as_ref().expect("same-space reports carry the product bound");
            worst_excess = worst_excess.max(same.max_ratio / bound.product - 1.0);
            if !bound.holds {
                failures.push(format!("{name} ({p},{q}) C {:.4} > product {:.4}", same.max_ratio, bound.product));
            }
        }
    }
    let ok = finite && worst_unitary <= 1e-3 && failures.is_empty();
    let mut detail = format!(
        "4 matrices x 4 exponent pairs x {} functions: finite {finite}; max |(2,2) ratio - 1| = {worst_unitary:.2e}; max C / product - 1 = {worst_excess:.3}",
        family.len()
    );
    if !failures.is_empty() {
        detail.push_str(&format!("; failures: {}", failures.join(", ")));
    }
    Ok((ok, detail))
}

fn regularity(_seed: u64) -> Outcome {
    let axis = Axis::centered(12.0, 1024)?;
    let h = QuadraticHamiltonian::oscillator(1)?;
    let times: Vec<f64> = (0..=16).map(|k| k as f64 * PI / 4.0).collect();
    let opts = ApplyOptions::default();
    let (mut finite, mut worst) = (true, 0.0f64);
    for f0 in [hermite_state(0, axis, 1.0)?, coherent(axis, 1.0, 1.0, 0.5)?] {
        for (p, q) in [(2.0, 2.0), (1.0, f64::INFINITY)] {
            let spec = AmalgamNormSpec::for_axis(&axis, p, q)?;
            let series = regularity_experiment(&h, &f0, &spec, &times, &opts)?;
            finite &= series.iter().all(|(_, v)| v.is_finite() && *v > 0.0);
            for k in 0..=8 {
                let (a, b) = (series[k].1, series[k + 8].1);
                worst = worst.max((b / a - 1.0).abs());
            }
        }
    }
    Ok((
        finite && worst <= 1e-3,
        format!("17 instants in [0, 4 pi], finite {finite}; max |N(t + 2 pi) / N(t) - 1| = {worst:.2e}"),
    ))
}
