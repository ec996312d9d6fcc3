use std::f64::consts::PI;

use metaplectic_core::amalgam::{amalgam_norm, AmalgamNormSpec};
use metaplectic_core::fft::cis;
use metaplectic_core::hermite::hermite_state;
use metaplectic_core::metaplectic::{
    apply, apply_free, compose_and_compare, gaussian_oracle, ApplyOptions, FreeMetaplecticOp, Method,
};
use metaplectic_core::symplectic::{
    factor_free, generating_function, hamiltonian_flow, is_symplectic, random_symplectic,
};
use metaplectic_core::{
    Axis, Complex64, MaslovIndex, QuadraticHamiltonian, SampledWavefunction, SymplecticMatrix, Tolerances,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Composite Simpson rule on `[a, b]` with `2m` panels.
fn simpson(f: impl Fn(f64) -> Complex64, a: f64, b: f64, m: usize) -> Complex64 {
    let n = 2 * m;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += f(a + i as f64 * h) * w;
    }
    s * (h / 3.0)
}

/// Free 1-D matrices whose lift maps `e^{-x²/2}` to a Gaussian that still fits
/// well inside `[-x_max, x_max]` and whose kernel passes the Nyquist guard.
fn moderate_suite(count: usize, axis: Axis) -> Vec<SymplecticMatrix> {
    let tol = Tolerances::default();
    let probe = SampledWavefunction::gaussian(axis, 1.0, c(1.0, 0.0)).unwrap();
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < count {
        seed += 1;
        let s = random_symplectic(1, seed).unwrap();
        if !s.is_free(1e-2) {
            continue;
        }
        let op = FreeMetaplecticOp::with_smallest_index(s.clone(), 1.0, &tol).unwrap();
        let (b, _) = gaussian_oracle(&op, c(1.0, 0.0)).unwrap();
        // output width 1/√Re b must leave 8 widths inside the grid, with a
        // chirp slope resolved by the grid
        let width = 1.0 / b.re.sqrt();
        if 8.0 * width > axis.x_max() || b.re > 16.0 {
            continue;
        }
        if apply_free(&op, &probe, &ApplyOptions::default()).is_err() {
            continue;
        }
        out.push(s);
    }
    out
}

#[test]
fn flows_and_random_matrices_are_symplectic() {
    for n in 1..=3 {
        for seed in 0..30 {
            let s = random_symplectic(n, seed).unwrap();
            assert!(is_symplectic(s.matrix(), 1e-9).unwrap(), "n={n} seed={seed}");
        }
    }
}

#[test]
fn factorization_suite() {
    let tol = Tolerances::default();
    for n in 1..=2 {
        for seed in 0..50 {
            let s = random_symplectic(n, 1000 + seed).unwrap();
            let (a, b) = factor_free(&s, &tol).unwrap();
            assert!(a.det_b().abs() >= 1e-6 && b.det_b().abs() >= 1e-6);
            assert!((&a * &b).max_abs_diff(&s) <= 1e-9);
        }
    }
}

#[test]
fn caustic_matrices_factor() {
    let tol = Tolerances::default();
    let minus_id = SymplecticMatrix::from_rows(&[&[-1.0, 0.0], &[0.0, -1.0]], 1e-12).unwrap();
    let squeeze = SymplecticMatrix::from_rows(&[&[2.0, 0.0], &[0.0, 0.5]], 1e-12).unwrap();
    for s in [minus_id, squeeze, SymplecticMatrix::identity(2).unwrap()] {
        let (a, b) = factor_free(&s, &tol).unwrap();
        assert!(a.is_free(tol.free) && b.is_free(tol.free));
        assert!((&a * &b).max_abs_diff(&s) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flow_group_law(seed in 0u64..10_000, s in -2.0f64..2.0, t in -2.0f64..2.0, n in 1usize..=2) {
        let generator = random_symplectic(n, seed).unwrap();
        // reuse a symmetric matrix: M = (S + Sᵀ)/2 from a seeded symplectic sample
        let m = (generator.matrix() + generator.matrix().transpose()) * 0.5;
        let h = QuadraticHamiltonian::new(m, 1e-12).unwrap();
        let lhs = &hamiltonian_flow(&h, s).unwrap() * &hamiltonian_flow(&h, t).unwrap();
        let rhs = hamiltonian_flow(&h, s + t).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-9);
        prop_assert!(rhs.residual() <= 1e-9);
    }

    #[test]
    fn generating_function_round_trip(seed in 0u64..10_000, n in 1usize..=3) {
        let tol = Tolerances::default();
        let s = random_symplectic(n, seed).unwrap();
        prop_assume!(s.is_free(1e-3));
        let g = generating_function(&s, MaslovIndex::smallest_admissible(s.det_b()), &tol).unwrap();
        prop_assert!(g.to_symplectic().unwrap().max_abs_diff(&s) <= 1e-9);
    }

    #[test]
    fn apply_free_is_linear(
        seed in 0u64..500,
        ar in -2.0f64..2.0, ai in -2.0f64..2.0, br in -2.0f64..2.0, bi in -2.0f64..2.0,
    ) {
        let axis = Axis::centered(10.0, 256).unwrap();
        let s = random_symplectic(1, seed).unwrap();
        prop_assume!(s.is_free(1e-3));
        let op = FreeMetaplecticOp::with_smallest_index(s, 1.0, &Tolerances::default()).unwrap();
        let opts = ApplyOptions { allow_aliasing: true, ..ApplyOptions::default() };
        let f = hermite_state(1, axis, 1.0).unwrap();
        let g = SampledWavefunction::gaussian(axis, 1.0, c(0.5, 0.2)).unwrap();
        let (alpha, beta) = (c(ar, ai), c(br, bi));
        let lhs = apply_free(&op, &f.linear_combination(alpha, &g, beta).unwrap(), &opts).unwrap();
        let rhs = apply_free(&op, &f, &opts).unwrap()
            .linear_combination(alpha, &apply_free(&op, &g, &opts).unwrap(), beta).unwrap();
        prop_assert!(lhs.max_distance(&rhs).unwrap() <= 1e-12 * (1.0 + lhs.l2_norm()));
    }

    #[test]
    fn amalgam_triangle_inequality(
        a in -1.0f64..1.0, b in 0.3f64..2.0, shift in -3.0f64..3.0,
        p_idx in 0usize..4, q_idx in 0usize..4,
    ) {
        let exps = [1.0, 1.5, 2.0, f64::INFINITY];
        let axis = Axis::centered(12.0, 512).unwrap();
        let spec = AmalgamNormSpec::for_axis(&axis, exps[p_idx], exps[q_idx]).unwrap();
        let f = SampledWavefunction::gaussian(axis, 1.0, c(b, a)).unwrap();
        let g = SampledWavefunction::from_fn(axis, 1.0, |x| {
            c((-(x - shift) * (x - shift)).exp(), 0.0) * cis(a * x)
        }).unwrap();
        let sum = f.linear_combination(c(1.0, 0.0), &g, c(1.0, 0.0)).unwrap();
        let lhs = amalgam_norm(&sum, &spec).unwrap();
        let rhs = amalgam_norm(&f, &spec).unwrap() + amalgam_norm(&g, &spec).unwrap();
        prop_assert!(lhs <= rhs + 1e-12 * rhs.max(1.0));
    }
}

#[test]
fn gaussian_closed_form_against_simpson() {
    // independent evaluation of the defining integral for a handful of x
    let tol = Tolerances::default();
    let cases = [
        SymplecticMatrix::standard(1).unwrap(),
        SymplecticMatrix::rotation(1, 0.9).unwrap(),
        SymplecticMatrix::rotation(1, 4.0).unwrap(),
        SymplecticMatrix::shear(1, 1.0).unwrap(),
        random_symplectic(1, 42).unwrap(),
    ];
    let a = c(1.3, 0.4);
    let hbar = 0.7;
    for s in cases {
        let op = FreeMetaplecticOp::with_smallest_index(s, hbar, &tol).unwrap();
        let g = op.generating_function();
        let (p, l, q) = (g.p[0], g.l[0], g.q[0]);
        let phase = cis(0.5 * PI * (g.m.value() as f64 - 0.5));
        let pref = phase * (l.abs() / (2.0 * PI * hbar)).sqrt();
        let (b, cc) = gaussian_oracle(&op, a).unwrap();
        for x in [-1.5, -0.3, 0.0, 0.8, 2.0] {
            let integral = simpson(
                |y| cis((0.5 * p * x * x - l * x * y + 0.5 * q * y * y) / hbar) * (-a * y * y / (2.0 * hbar)).exp(),
                -14.0,
                14.0,
                40_000,
            );
            let want = pref * integral;
            let got = cc * (-b * x * x / (2.0 * hbar)).exp();
            assert!((want - got).norm() < 1e-9, "x={x} want={want} got={got}");
        }
    }
}

#[test]
fn gaussian_oracle_matches_discrete_operator() {
    let axis = Axis::centered(12.0, 1024).unwrap();
    let psi = SampledWavefunction::gaussian(axis, 1.0, c(1.0, 0.0)).unwrap();
    for s in moderate_suite(20, axis) {
        let op = FreeMetaplecticOp::with_smallest_index(s, 1.0, &Tolerances::default()).unwrap();
        let out = apply_free(&op, &psi, &ApplyOptions::default()).unwrap();
        let (b, cc) = gaussian_oracle(&op, c(1.0, 0.0)).unwrap();
        let want = SampledWavefunction::gaussian(axis, 1.0, b).unwrap().scaled(cc);
        assert!(out.max_distance(&want).unwrap() < 1e-6);
    }
}

#[test]
fn unitarity_suite() {
    let axis = Axis::centered(12.0, 1024).unwrap();
    let psi = hermite_state(2, axis, 1.0).unwrap();
    for s in moderate_suite(50, axis) {
        let op = FreeMetaplecticOp::with_smallest_index(s, 1.0, &Tolerances::default()).unwrap();
        let out = apply_free(&op, &psi, &ApplyOptions::default()).unwrap();
        assert!((out.l2_norm() / psi.l2_norm() - 1.0).abs() <= 1e-5);
    }
}

#[test]
fn fast_and_direct_agree() {
    let axis = Axis::centered(8.0, 256).unwrap();
    let psi = SampledWavefunction::gaussian(axis, 1.0, c(1.0, 0.5)).unwrap();
    for s in moderate_suite(20, axis) {
        let op = FreeMetaplecticOp::with_smallest_index(s, 1.0, &Tolerances::default()).unwrap();
        let fast = apply_free(&op, &psi, &ApplyOptions::with_method(Method::Fast)).unwrap();
        let direct = apply_free(&op, &psi, &ApplyOptions::with_method(Method::Direct)).unwrap();
        assert!(fast.l2_distance(&direct).unwrap() <= 1e-8);
    }
}

#[test]
fn double_cover_suite() {
    let axis = Axis::centered(12.0, 1024).unwrap();
    let psi = SampledWavefunction::gaussian(axis, 1.0, c(1.0, 0.0)).unwrap();
    let mats = moderate_suite(30, axis);
    let mut checked = 0;
    for pair in mats.windows(2) {
        let prod = &pair[0] * &pair[1];
        if !prod.is_free(1e-2) {
            continue;
        }
        let Ok(z) = compose_and_compare(&pair[0], &pair[1], &psi, &ApplyOptions::default()) else {
            continue;
        };
        assert!(z.im.abs() < 1e-5 && (z.re.abs() - 1.0).abs() < 1e-5, "{z}");
        checked += 1;
    }
    assert!(checked >= 10, "only {checked} triples");
}

#[test]
fn two_routes_to_a_quarter_turn() {
    let axis = Axis::centered(12.0, 1024).unwrap();
    let psi = hermite_state(3, axis, 1.0).unwrap();
    let quarter = SymplecticMatrix::rotation(1, PI / 2.0).unwrap();
    let via_apply = apply(&quarter, 0, &psi, &ApplyOptions::default()).unwrap();
    let op = FreeMetaplecticOp::new(
        SymplecticMatrix::standard(1).unwrap(),
        MaslovIndex::new(0),
        1.0,
        &Tolerances::default(),
    )
    .unwrap();
    let direct = apply_free(&op, &psi, &ApplyOptions::default()).unwrap();
    let d = via_apply
        .l2_distance(&direct)
        .unwrap()
        .min(via_apply.l2_distance(&direct.scaled(c(-1.0, 0.0))).unwrap());
    assert!(d < 1e-6);
}

#[test]
fn two_dimensional_identity_and_swap() {
    let axis = Axis::centered(6.0, 64).unwrap();
    let psi = SampledWavefunction::from_fn_2d(axis, axis, 1.0, |x, y| {
        cis(0.3 * x) * (-(x * x) / 2.0 - (y - 0.7) * (y - 0.7) / 2.0).exp()
    })
    .unwrap();
    let out = apply(&SymplecticMatrix::identity(2).unwrap(), 0, &psi, &ApplyOptions::default()).unwrap();
    let d = out.l2_distance(&psi).unwrap().min(out.l2_distance(&psi.scaled(c(-1.0, 0.0))).unwrap());
    assert!(d < 1e-6 * psi.l2_norm(), "{d}");

    // coordinate swap (x1, x2) -> (x2, x1) is symplectic and not free
    let mut m = DMatrix::zeros(4, 4);
    for (r, col) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
        m[(r, col)] = 1.0;
    }
    let swap = SymplecticMatrix::new(m, 1e-12).unwrap();
    assert!(!swap.is_free(1e-6));
    let out = apply(&swap, 0, &psi, &ApplyOptions::default()).unwrap();
    // μ(swap) f(x) = ± f(swap⁻¹ x) up to a unimodular constant
    let want = SampledWavefunction::from_fn_2d(axis, axis, 1.0, |x, y| {
        cis(0.3 * y) * (-(y * y) / 2.0 - (x - 0.7) * (x - 0.7) / 2.0).exp()
    })
    .unwrap();
    let z = want.inner(&out).unwrap() / want.inner(&want).unwrap();
    assert!((z.norm() - 1.0).abs() < 1e-6, "{z}");
    assert!(out.l2_distance(&want.scaled(z)).unwrap() < 1e-6);
}
