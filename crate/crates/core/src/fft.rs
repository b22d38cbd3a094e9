//! Multi-dimensional FFT on row-major cubic arrays.

use rustfft::FftPlanner;

use crate::linalg::C64;

/// In-place unnormalized FFT of a `dim`-dimensional array with `n` points per
/// axis. The inverse transform is not scaled.
pub fn fft_nd(data: &mut [C64], dim: usize, n: usize, inverse: bool) {
    assert_eq!(data.len(), n.pow(dim as u32));
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut line = vec![C64::new(0.0, 0.0); n];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let outer = data.len() / (n * stride);
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + k * stride];
                }
                fft.process(&mut line);
                for (k, value) in line.iter().enumerate() {
                    data[base + k * stride] = *value;
                }
            }
        }
    }
}

/// Signed frequency index of FFT bin `k` for length `n`: `0..n/2` then `-n/2..0`.
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

pub fn fft_1d(data: &mut [C64], inverse: bool) {
    let n = data.len();
    fft_nd(data, 1, n, inverse);
}
