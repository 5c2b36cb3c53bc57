//! Minimal N-dimensional complex FFT on cubic row-major arrays, built from
//! 1-D rustfft plans applied axis by axis.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub(crate) struct FftNd {
    dim: usize,
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftNd {
    pub fn new(dim: usize, size: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftNd {
            dim,
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    pub fn len(&self) -> usize {
        self.size.pow(self.dim as u32)
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(data.len(), self.len());
        let n = self.size;
        let mut lane = vec![Complex64::default(); n];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let mut stride = 1usize;
        for _axis in 0..self.dim {
            let block = stride * n;
            let outer = data.len() / block;
            for o in 0..outer {
                for i in 0..stride {
                    let base = o * block + i;
                    if stride == 1 {
                        fft.process_with_scratch(&mut data[base..base + n], &mut scratch);
                    } else {
                        for k in 0..n {
                            lane[k] = data[base + k * stride];
                        }
                        fft.process_with_scratch(&mut lane, &mut scratch);
                        for k in 0..n {
                            data[base + k * stride] = lane[k];
                        }
                    }
                }
            }
            stride *= n;
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform including the 1/len normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / self.len() as f64;
        for v in data {
            *v *= scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_recovers_input() {
        let fft = FftNd::new(2, 8);
        let mut data: Vec<Complex64> = (0..64)
            .map(|i| Complex64::new((i as f64 * 0.7).sin(), 0.0))
            .collect();
        let orig = data.clone();
        fft.forward(&mut data);
        fft.inverse(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn matches_direct_dft_in_2d() {
        let n = 8;
        let fft = FftNd::new(2, n);
        let input: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64).cos(), (i as f64 * 0.3).sin()))
            .collect();
        let mut data = input.clone();
        fft.forward(&mut data);
        // direct O(n^4) DFT
        for k0 in 0..n {
            for k1 in 0..n {
                let mut acc = Complex64::default();
                for j0 in 0..n {
                    for j1 in 0..n {
                        let phase = -2.0 * std::f64::consts::PI
                            * ((k0 * j0) as f64 + (k1 * j1) as f64)
                            / n as f64;
                        acc += input[j0 * n + j1] * Complex64::from_polar(1.0, phase);
                    }
                }
                let got = data[k0 * n + k1];
                assert!((got - acc).norm() < 1e-10, "bin ({k0},{k1})");
            }
        }
    }
}
