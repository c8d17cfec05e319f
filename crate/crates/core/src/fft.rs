//! Thin d-dimensional FFT layer over `rustfft` for square N^d grids.
//!
//! Layout is row major with axis 0 slowest. Forward transforms are
//! unnormalized; [`Fft::inverse`] divides by N^d, so forward-then-inverse is
//! the identity. Integer frequencies follow the usual DFT convention: bin i
//! maps to i for i <= N/2 and to i - N for i > N/2.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::sync::Arc;

/// Planned transforms for one grid shape.
pub struct Fft {
    d: usize,
    n: usize,
    fwd: Arc<dyn rustfft::Fft<f64>>,
    inv: Arc<dyn rustfft::Fft<f64>>,
}

impl Fft {
    pub fn new(d: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft {
            d,
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn grid_points(&self) -> usize {
        self.len()
    }

    /// In-place unnormalized forward transform along every axis.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    /// In-place inverse transform, normalized by 1/N^d.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, false);
        let scale = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex64], forward: bool) {
        assert_eq!(data.len(), self.len(), "buffer does not match grid");
        let plan = if forward { &self.fwd } else { &self.inv };
        let n = self.n;
        // Axis d-1 is contiguous: process() handles the whole buffer as
        // back-to-back length-n lines.
        plan.process(data);
        if self.d == 1 {
            return;
        }
        let mut line = vec![Complex64::default(); n];
        for axis in 0..self.d - 1 {
            let stride = n.pow((self.d - 1 - axis) as u32);
            // Enumerate line bases: indices whose `axis` coordinate is zero.
            let total = self.len();
            let block = stride * n;
            for base_block in (0..total).step_by(block) {
                for offset in 0..stride {
                    let base = base_block + offset;
                    for k in 0..n {
                        line[k] = data[base + k * stride];
                    }
                    plan.process(&mut line);
                    for k in 0..n {
                        data[base + k * stride] = line[k];
                    }
                }
            }
        }
    }
}

/// Integer frequency of bin `i` on an N-point axis.
pub fn freq_of_bin(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Fill `xi` with the integer frequency vector of the row-major mode `idx`.
pub fn freq_vector(idx: usize, d: usize, n: usize, xi: &mut [i64]) {
    let mut rem = idx;
    for axis in (0..d).rev() {
        xi[axis] = freq_of_bin(rem % n, n);
        rem /= n;
    }
}

/// True when the mode sits on the unpaired Nyquist plane of some axis along
/// which the derivative order is odd; such modes carry no consistent real
/// odd-order derivative and are zeroed by the spectral calculus.
pub fn odd_nyquist(xi: &[i64], alpha: &[u32], n: usize) -> bool {
    if n % 2 != 0 {
        return false;
    }
    let nyq = (n / 2) as i64;
    xi.iter()
        .zip(alpha)
        .any(|(&x, &a)| a % 2 == 1 && x == nyq)
}
