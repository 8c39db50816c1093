//! Trigonometric interpolation of periodic samples.
//!
//! Samples are taken at `u_j = 2*pi*j/n`. Quadrature, enclosed area, centroid and
//! the normal-graph decomposition all go through the trigonometric interpolant so
//! that smooth closed curves are integrated to spectral accuracy.

use std::cell::RefCell;
use std::f64::consts::TAU;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(values.len()));
    fft.process(&mut buf);
    buf
}

fn inverse_real(mut buf: Vec<Complex64>) -> Vec<f64> {
    let n = buf.len();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n));
    fft.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.into_iter().map(|c| c.re * scale).collect()
}

/// Signed wavenumber of FFT bin `j`; the Nyquist bin of an even length maps to 0
/// for differentiation.
fn wavenumber(j: usize, n: usize) -> f64 {
    if 2 * j < n {
        j as f64
    } else if 2 * j == n {
        0.0
    } else {
        j as f64 - n as f64
    }
}

/// Spectral derivative d/du of periodic samples on the uniform grid over [0, 2pi).
pub fn derivative(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut hat = forward(values);
    for (j, c) in hat.iter_mut().enumerate() {
        *c *= Complex64::new(0.0, wavenumber(j, n));
    }
    inverse_real(hat)
}

/// Values of the trigonometric interpolant on the grid refined `factor` times.
/// The Nyquist mode of an even length is split evenly so that it stays a cosine.
pub fn upsample(values: &[f64], factor: usize) -> Vec<f64> {
    let n = values.len();
    let m = n * factor;
    let hat = forward(values);
    let mut fine = vec![Complex64::new(0.0, 0.0); m];
    let scale = factor as f64;
    for (j, c) in hat.iter().enumerate() {
        if 2 * j < n {
            fine[j] = c * scale;
        } else if 2 * j == n {
            fine[j] = c * (0.5 * scale);
            fine[m - j] = c * (0.5 * scale);
        } else {
            fine[m - (n - j)] = c * scale;
        }
    }
    if factor == 1 && n.is_multiple_of(2) {
        fine[n / 2] = hat[n / 2];
    }
    inverse_real(fine)
}

/// Real trigonometric interpolant of periodic samples, evaluable anywhere.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    mean: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    nyquist: f64,
}

impl TrigInterpolant {
    pub fn new(values: &[f64]) -> Self {
        let n = values.len();
        let hat = forward(values);
        let inv_n = 1.0 / n as f64;
        let half = (n - 1) / 2;
        let mut cos = Vec::with_capacity(half);
        let mut sin = Vec::with_capacity(half);
        for c in hat.iter().take(half + 1).skip(1) {
            cos.push(2.0 * c.re * inv_n);
            sin.push(-2.0 * c.im * inv_n);
        }
        let nyquist = if n.is_multiple_of(2) { hat[n / 2].re * inv_n } else { 0.0 };
        Self {
            mean: hat[0].re * inv_n,
            cos,
            sin,
            nyquist,
        }
    }

    /// Value and first derivative at parameter `u`.
    pub fn eval(&self, u: f64) -> (f64, f64) {
        let step = Complex64::new(u.cos(), u.sin());
        let mut rot = step;
        let mut value = self.mean;
        let mut deriv = 0.0;
        for (k, (&a, &b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let kf = (k + 1) as f64;
            value += a * rot.re + b * rot.im;
            deriv += kf * (b * rot.re - a * rot.im);
            rot *= step;
        }
        if self.nyquist != 0.0 {
            // `rot` now holds exp(i*(half+1)*u) which is the Nyquist wavenumber.
            let kf = (self.cos.len() + 1) as f64;
            value += self.nyquist * rot.re;
            deriv -= kf * self.nyquist * rot.im;
        }
        (value, deriv)
    }
}

/// Uniform grid spacing for `n` samples over one period.
#[inline]
pub fn grid_step(n: usize) -> f64 {
    TAU / n as f64
}
