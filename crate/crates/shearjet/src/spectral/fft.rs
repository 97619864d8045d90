//! In-place multi-dimensional DFT built on 1-D `rustfft` kernels.

use ndarray::{ArrayD, Axis, Dimension};
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Unnormalised DFT along every axis of `data` (forward: `e^{-2πi kj/N}`).
pub fn dft_all_axes(data: &mut ArrayD<Complex64>, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    for ax in 0..data.ndim() {
        let len = data.shape()[ax];
        let fft = if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        };
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for mut lane in data.lanes_mut(Axis(ax)) {
            for (b, v) in buf.iter_mut().zip(lane.iter()) {
                *b = *v;
            }
            fft.process(&mut buf);
            for (v, b) in lane.iter_mut().zip(buf.iter()) {
                *v = *b;
            }
        }
    }
}

/// Multiply each entry by `(−1)^{Σ indices}`.
///
/// This is the phase shift between DFT index space and grid points starting
/// at `x = −π` instead of `x = 0`; it is its own inverse.
pub fn apply_origin_phase(data: &mut ArrayD<Complex64>) {
    for (idx, v) in data.indexed_iter_mut() {
        let s: usize = idx.slice().iter().sum();
        if s % 2 == 1 {
            *v = -*v;
        }
    }
}
