//! Fourier-collocation form of the cell operator on the unit torus.
//!
//! For a coefficient tensor A of order 2m the operator applied here is
//!
//!   (A u)_i = sum_{|alpha|=|beta|=m} (D^alpha)* [ A^{alpha beta}_{ij} D^beta u_j ],
//!
//! whose bilinear pairing <A u, v> equals the coercivity form
//! sum int D^alpha v_i A^{alpha beta}_{ij} D^beta u_j. Derivatives are
//! spectral, coefficient products are pointwise on the collocation grid, and
//! the adjoint derivative is the conjugate Fourier multiplier. The companion
//! constant-coefficient operator M = sum_alpha (D^alpha)* D^alpha is
//! diagonal in Fourier space with symbol sum_alpha (2 pi)^{2m} xi^{2 alpha};
//! its inverse on the zero-mean subspace is the preconditioner.
//!
//! An optional 2/3-rule dealias mask is applied symmetrically (to the input
//! spectrum and to the output accumulation), preserving self-adjointness.

use crate::coeffs::CoefficientField;
use crate::fft::{freq_vector, Fft};
use num_complex::Complex64;

pub struct CellOperator<'a> {
    pub a: &'a CoefficientField,
    fft: Fft,
    len: usize,
    /// Fourier multiplier of D^alpha per canonical alpha, with odd-order
    /// Nyquist planes zeroed.
    sym: Vec<Vec<Complex64>>,
    /// Preconditioner symbol sum_alpha |sym_alpha|^2, zero at the zero mode.
    msym: Vec<f64>,
    /// Keep-mask for the 2/3 rule; `None` when dealiasing is off.
    dealias: Option<Vec<bool>>,
}

impl<'a> CellOperator<'a> {
    pub fn new(a: &'a CoefficientField, dealias: bool) -> Self {
        let d = a.d;
        let n = a.ngrid;
        let len = a.cell_len();
        let fft = Fft::new(d, n);
        let mut xi = vec![0i64; d];
        let mut sym = Vec::with_capacity(a.nalpha());
        for alpha in &a.alphas {
            let mut s = vec![Complex64::default(); len];
            for (idx, v) in s.iter_mut().enumerate() {
                freq_vector(idx, d, n, &mut xi);
                if crate::fft::odd_nyquist(&xi, alpha.components(), n) {
                    continue;
                }
                *v = alpha.fourier_symbol(&xi);
            }
            sym.push(s);
        }
        let mut msym = vec![0.0; len];
        for s in &sym {
            for (mv, sv) in msym.iter_mut().zip(s) {
                *mv += sv.norm_sqr();
            }
        }
        let dealias = if dealias {
            let cut = (n as i64) / 3;
            let mut mask = vec![true; len];
            for (idx, keep) in mask.iter_mut().enumerate() {
                freq_vector(idx, d, n, &mut xi);
                if xi.iter().any(|x| x.abs() > cut) {
                    *keep = false;
                }
            }
            Some(mask)
        } else {
            None
        };
        CellOperator {
            a,
            fft,
            len,
            sym,
            msym,
            dealias,
        }
    }

    fn mask(&self, buf: &mut [Complex64]) {
        if let Some(mask) = &self.dealias {
            for (b, &keep) in buf.iter_mut().zip(mask) {
                if !keep {
                    *b = Complex64::default();
                }
            }
        }
    }

    /// out = A x, both stored component-major over the cell grid.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.a.n;
        let na = self.a.nalpha();
        let len = self.len;
        assert_eq!(x.len(), n * len);
        assert_eq!(out.len(), n * len);

        // Spectra of the components.
        let mut xhat = Vec::with_capacity(n);
        for j in 0..n {
            let mut buf: Vec<Complex64> = x[j * len..(j + 1) * len]
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect();
            self.fft.forward(&mut buf);
            self.mask(&mut buf);
            xhat.push(buf);
        }

        // Physical derivatives D^beta x_j for every beta.
        let mut dbx = vec![vec![0.0f64; len]; na * n];
        let mut scratch = vec![Complex64::default(); len];
        for bi in 0..na {
            for j in 0..n {
                for ((s, &h), &sv) in scratch.iter_mut().zip(&xhat[j]).zip(&self.sym[bi]) {
                    *s = h * sv;
                }
                self.fft.inverse(&mut scratch);
                for (o, s) in dbx[bi * n + j].iter_mut().zip(&scratch) {
                    *o = s.re;
                }
            }
        }

        // Flux densities t_{alpha,i} = sum_{beta,j} A^{alpha beta}_{ij} D^beta x_j,
        // then adjoint derivatives accumulated per output component.
        let mut acc = vec![vec![Complex64::default(); len]; n];
        let mut t = vec![0.0f64; len];
        for ai in 0..na {
            for i in 0..n {
                t.iter_mut().for_each(|v| *v = 0.0);
                for bi in 0..na {
                    for j in 0..n {
                        let slot = self.a.slot(ai, bi, i, j);
                        let dx = &dbx[bi * n + j];
                        for ((tv, &av), &dv) in t.iter_mut().zip(slot).zip(dx) {
                            *tv += av * dv;
                        }
                    }
                }
                for (s, &tv) in scratch.iter_mut().zip(&t) {
                    *s = Complex64::new(tv, 0.0);
                }
                self.fft.forward(&mut scratch);
                for ((a, &s), &sv) in acc[i].iter_mut().zip(&scratch[..]).zip(&self.sym[ai]) {
                    *a += s * sv.conj();
                }
            }
        }
        for i in 0..n {
            self.mask(&mut acc[i]);
            self.fft.inverse(&mut acc[i]);
            for (o, s) in out[i * len..(i + 1) * len].iter_mut().zip(&acc[i]) {
                *o = s.re;
            }
        }
    }

    /// out = M x with M = sum_alpha (D^alpha)* D^alpha.
    pub fn mass_apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.a.n;
        let len = self.len;
        let mut buf = vec![Complex64::default(); len];
        for j in 0..n {
            for (b, &v) in buf.iter_mut().zip(&x[j * len..(j + 1) * len]) {
                *b = Complex64::new(v, 0.0);
            }
            self.fft.forward(&mut buf);
            for (b, &mv) in buf.iter_mut().zip(&self.msym) {
                *b *= mv;
            }
            self.fft.inverse(&mut buf);
            for (o, b) in out[j * len..(j + 1) * len].iter_mut().zip(&buf) {
                *o = b.re;
            }
        }
    }

    /// out = M^{-1} x on the zero-mean subspace; modes with vanishing
    /// preconditioner symbol (the zero mode and odd-degenerate Nyquist
    /// planes) are projected out.
    pub fn precond_apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.a.n;
        let len = self.len;
        let mut buf = vec![Complex64::default(); len];
        for j in 0..n {
            for (b, &v) in buf.iter_mut().zip(&x[j * len..(j + 1) * len]) {
                *b = Complex64::new(v, 0.0);
            }
            self.fft.forward(&mut buf);
            for (b, &mv) in buf.iter_mut().zip(&self.msym) {
                if mv > 0.0 {
                    *b /= mv;
                } else {
                    *b = Complex64::default();
                }
            }
            self.fft.inverse(&mut buf);
            for (o, b) in out[j * len..(j + 1) * len].iter_mut().zip(&buf) {
                *o = b.re;
            }
        }
    }

    /// Right-hand side of the cell problem for direction gamma and source
    /// component j: b_i = - sum_alpha (D^alpha)* A^{alpha gamma}_{ij}.
    pub fn rhs_corrector(&self, gi: usize, j: usize) -> Vec<f64> {
        let n = self.a.n;
        let na = self.a.nalpha();
        let len = self.len;
        let mut out = vec![0.0; n * len];
        let mut acc = vec![Complex64::default(); len];
        let mut buf = vec![Complex64::default(); len];
        for i in 0..n {
            acc.iter_mut().for_each(|v| *v = Complex64::default());
            for ai in 0..na {
                let slot = self.a.slot(ai, gi, i, j);
                for (b, &v) in buf.iter_mut().zip(slot) {
                    *b = Complex64::new(v, 0.0);
                }
                self.fft.forward(&mut buf);
                for ((a, &b), &sv) in acc.iter_mut().zip(&buf[..]).zip(&self.sym[ai]) {
                    *a -= b * sv.conj();
                }
            }
            self.mask(&mut acc);
            self.fft.inverse(&mut acc);
            for (o, a) in out[i * len..(i + 1) * len].iter_mut().zip(&acc) {
                *o = a.re;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{sample, Preset};
    use crate::grid::{dot, GridFunction};

    #[test]
    fn apply_is_self_adjoint_for_symmetric_fields() {
        let a = sample(&Preset::Laminate2d { a0: 2.0, a1: 1.0 }, 1, 16).unwrap();
        let op = CellOperator::new(&a, false);
        let g = a.grid();
        let u = GridFunction::sample_scalar(g.clone(), |x| {
            (2.0 * std::f64::consts::PI * x[0]).sin() + 0.3 * (4.0 * std::f64::consts::PI * x[1]).cos()
        });
        let v = GridFunction::sample_scalar(g.clone(), |x| {
            (2.0 * std::f64::consts::PI * (x[0] + 2.0 * x[1])).cos()
        });
        let mut au = GridFunction::zeros(g.clone(), 1);
        let mut av = GridFunction::zeros(g.clone(), 1);
        op.apply(&u.values, &mut au.values);
        op.apply(&v.values, &mut av.values);
        let lhs = dot(&v, &au);
        let rhs = dot(&u, &av);
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn constant_coefficient_apply_matches_bilaplacian_symbol() {
        let tau = 2.0 * std::f64::consts::PI;
        let a = sample(&Preset::Constant { d: 1, c: 1.0 }, 2, 32).unwrap();
        let op = CellOperator::new(&a, false);
        let g = a.grid();
        let u = GridFunction::sample_scalar(g.clone(), |x| (tau * 3.0 * x[0]).sin());
        let mut au = GridFunction::zeros(g.clone(), 1);
        op.apply(&u.values, &mut au.values);
        // (D^2)* (1 * D^2 u) = u'''' = (2 pi 3)^4 sin.
        let factor = (tau * 3.0).powi(4);
        for (o, &uv) in au.values.iter().zip(&u.values) {
            assert!((o - factor * uv).abs() < 1e-7);
        }
    }

    #[test]
    fn precond_inverts_mass_on_zero_mean_fields() {
        let a = sample(&Preset::Cosine1d { a0: 2.0, a1: 1.0 }, 1, 64).unwrap();
        let op = CellOperator::new(&a, false);
        let g = a.grid();
        let mut u = GridFunction::sample_scalar(g.clone(), |x| {
            (2.0 * std::f64::consts::PI * 2.0 * x[0]).sin() + 0.1
        });
        u.project_zero_mean();
        let mut mu_field = vec![0.0; u.values.len()];
        op.mass_apply(&u.values, &mut mu_field);
        let mut back = vec![0.0; u.values.len()];
        op.precond_apply(&mu_field, &mut back);
        for (b, &uv) in back.iter().zip(&u.values) {
            assert!((b - uv).abs() < 1e-10);
        }
    }

    #[test]
    fn rhs_has_zero_mean() {
        let a = sample(&Preset::Laminate2d { a0: 2.0, a1: 1.0 }, 1, 16).unwrap();
        let op = CellOperator::new(&a, false);
        let b = op.rhs_corrector(0, 0);
        let mean: f64 = b.iter().sum::<f64>() / b.len() as f64;
        assert!(mean.abs() < 1e-13);
    }
}
