//! FFT building blocks: in-place radix-2, Bluestein for arbitrary lengths,
//! and a chirp-Z transform on arcs of the unit circle.
//!
//! All transforms are unnormalized: `forward` uses `e^{-2πi jk/N}`, `inverse`
//! uses `e^{+2πi jk/N}` without the `1/N`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        }
    }
}

/// `e^{iθ}`.
#[inline]
pub fn cis(theta: f64) -> Complex64 {
    let (s, c) = Float::sin_cos(theta);
    Complex64::new(c, s)
}

fn radix2(data: &mut [Complex64], dir: Direction) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    if n <= 1 {
        return;
    }
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j ^= bit;
        if i < j {
            data.swap(i, j);
        }
    }
    // twiddles from direct evaluation, not recurrence, to keep roundoff flat
    let twiddles: Vec<Complex64> =
        (0..n / 2).map(|k| cis(dir.sign() * 2.0 * PI * k as f64 / n as f64)).collect();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let u = data[start + k];
                let v = data[start + k + half] * w;
                data[start + k] = u + v;
                data[start + k + half] = u - v;
            }
        }
        len <<= 1;
    }
}

/// In-place DFT of any length (radix-2 when possible, otherwise Bluestein).
pub fn fft(data: &mut [Complex64], dir: Direction) {
    let n = data.len();
    if n.is_power_of_two() {
        radix2(data, dir);
    } else if n > 0 {
        let out = chirp_z(data, n, dir.sign() * -2.0 * PI / n as f64, 0.0);
        data.copy_from_slice(&out);
    }
}

/// Chirp-Z transform on the unit circle:
///
/// ```text
/// X_k = Σ_j x_j e^{-i (start + k·step) j},   k = 0 .. out_len-1
/// ```
///
/// for arbitrary real `step` and `start`, via Bluestein's identity
/// `jk = (j² + k² − (k − j)²)/2` and one power-of-two convolution.
pub fn chirp_z(input: &[Complex64], out_len: usize, step: f64, start: f64) -> Vec<Complex64> {
    let n = input.len();
    if n == 0 || out_len == 0 {
        return vec![Complex64::new(0.0, 0.0); out_len];
    }
    let size = (n + out_len - 1).next_power_of_two();
    // e^{-i step d²/2}; d² is formed exactly before the single rounding to f64
    let chirp = |d: usize| cis(-0.5 * step * ((d as u128 * d as u128) as f64));

    let mut a = vec![Complex64::new(0.0, 0.0); size];
    for (j, (slot, &x)) in a.iter_mut().zip(input).enumerate() {
        *slot = x * cis(-start * j as f64) * chirp(j);
    }
    let mut b = vec![Complex64::new(0.0, 0.0); size];
    b[0] = chirp(0).conj();
    for d in 1..n.max(out_len) {
        let v = chirp(d).conj();
        if d < out_len {
            b[d] = v;
        }
        if d < n {
            b[size - d] = v;
        }
    }
    radix2(&mut a, Direction::Forward);
    radix2(&mut b, Direction::Forward);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= *y;
    }
    radix2(&mut a, Direction::Inverse);
    let scale = 1.0 / size as f64;
    (0..out_len).map(|k| a[k] * scale * chirp(k)).collect()
}

/// Angular frequencies `2π·l/(n·dx)` in FFT order (`l = 0, 1, …, −1`).
pub fn angular_frequencies(n: usize, dx: f64) -> Vec<f64> {
    let base = 2.0 * PI / (n as f64 * dx);
    (0..n)
        .map(|l| {
            let signed = if l < n.div_ceil(2) { l as f64 } else { l as f64 - n as f64 };
            signed * base
        })
        .collect()
}
