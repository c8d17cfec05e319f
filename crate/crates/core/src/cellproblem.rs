//! Cell problems on the unit torus: correctors chi, homogenized tensor,
//! flux field B, and dual correctors.
//!
//! For each direction gamma of order m and component j the corrector
//! chi^gamma_j solves, weakly over periodic zero-mean fields,
//!
//!   sum_{|alpha|=|beta|=m} D^alpha [ A^{alpha beta} D^beta chi^gamma_j ]
//!     = - sum_{|alpha|=m} D^alpha [ A^{alpha gamma} e_j ],
//!
//! and the homogenized tensor averages the corrected flux:
//!
//!   Abar^{alpha beta}_{ij}
//!     = < A^{alpha beta}_{ij} + sum_gamma A^{alpha gamma}_{il} D^gamma chi^beta_{lj} >.
//!
//! The flux discrepancy B = A + A Dchi - Abar is periodic with zero mean and
//! divergence-free in the multi-index sense, which licenses dual correctors:
//! solving sum_gamma D^{2 gamma} b^{alpha beta} = B^{alpha beta} in Fourier
//! space and antisymmetrizing,
//!
//!   frakB^{gamma alpha beta} = D^gamma b^{alpha beta} - D^alpha b^{gamma beta},
//!
//! gives frakB^{gamma alpha beta} = -frakB^{alpha gamma beta} exactly and
//! sum_gamma D^gamma frakB^{gamma alpha beta} = B^{alpha beta} up to the
//! corrector solve residual.

use crate::coeffs::CoefficientField;
use crate::error::Error;
use crate::fft::{freq_vector, Fft};
use crate::grid::{Grid, GridFunction};
use crate::krylov::{bicgstab, pcg, SolveStats};
use crate::multiindex::MultiIndex;
use crate::operator::CellOperator;
use num_complex::Complex64;

pub const DEFAULT_TOL: f64 = 1e-9;

/// Default iteration cap 10 * N^{d/2}.
pub fn default_max_iter(d: usize, n: usize) -> usize {
    (10.0 * (n as f64).powf(d as f64 / 2.0)).ceil() as usize
}

/// Constant tensor indexed like the coefficient slots.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstTensor {
    pub nalpha: usize,
    pub n: usize,
    pub data: Vec<f64>,
}

impl ConstTensor {
    pub fn zeros(nalpha: usize, n: usize) -> Self {
        ConstTensor {
            nalpha,
            n,
            data: vec![0.0; nalpha * nalpha * n * n],
        }
    }

    pub fn idx(&self, ai: usize, bi: usize, i: usize, j: usize) -> usize {
        ((ai * self.nalpha + bi) * self.n + i) * self.n + j
    }

    pub fn get(&self, ai: usize, bi: usize, i: usize, j: usize) -> f64 {
        self.data[self.idx(ai, bi, i, j)]
    }

    /// Adjoint tensor: entry (alpha, beta, i, j) -> (beta, alpha, j, i).
    pub fn adjoint(&self) -> ConstTensor {
        let mut out = ConstTensor::zeros(self.nalpha, self.n);
        for ai in 0..self.nalpha {
            for bi in 0..self.nalpha {
                for i in 0..self.n {
                    for j in 0..self.n {
                        let idx = out.idx(ai, bi, i, j);
                        out.data[idx] = self.get(bi, ai, j, i);
                    }
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &ConstTensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Order-m tensor field on the cell grid, slot-major like the coefficients.
#[derive(Debug, Clone)]
pub struct TensorField {
    pub d: usize,
    pub m: usize,
    pub n: usize,
    pub ngrid: usize,
    pub alphas: Vec<MultiIndex>,
    pub values: Vec<f64>,
    /// Magnitude of the data the field was derived from (the coefficient
    /// scale for flux fields). Zero-mean and divergence checks are relative
    /// to this, so a flux that vanishes up to solver noise still passes.
    pub ref_scale: f64,
}

impl TensorField {
    pub fn nalpha(&self) -> usize {
        self.alphas.len()
    }

    pub fn cell_len(&self) -> usize {
        self.ngrid.pow(self.d as u32)
    }

    pub fn slot_index(&self, ai: usize, bi: usize, i: usize, j: usize) -> usize {
        ((ai * self.nalpha() + bi) * self.n + i) * self.n + j
    }

    pub fn slot(&self, ai: usize, bi: usize, i: usize, j: usize) -> &[f64] {
        let len = self.cell_len();
        let s = self.slot_index(ai, bi, i, j);
        &self.values[s * len..(s + 1) * len]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn grid(&self) -> Grid {
        Grid::torus(self.d, self.ngrid)
    }
}

/// Dual corrector fields frakB^{gamma alpha beta}_{ij}, slot-major in
/// (gamma, alpha, beta, i, j).
#[derive(Debug, Clone)]
pub struct DualField {
    pub d: usize,
    pub m: usize,
    pub n: usize,
    pub ngrid: usize,
    pub alphas: Vec<MultiIndex>,
    pub values: Vec<f64>,
}

impl DualField {
    pub fn nalpha(&self) -> usize {
        self.alphas.len()
    }

    pub fn cell_len(&self) -> usize {
        self.ngrid.pow(self.d as u32)
    }

    pub fn slot_index(&self, gi: usize, ai: usize, bi: usize, i: usize, j: usize) -> usize {
        (((gi * self.nalpha() + ai) * self.nalpha() + bi) * self.n + i) * self.n + j
    }

    pub fn slot(&self, gi: usize, ai: usize, bi: usize, i: usize, j: usize) -> &[f64] {
        let len = self.cell_len();
        let s = self.slot_index(gi, ai, bi, i, j);
        &self.values[s * len..(s + 1) * len]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// One corrector solve record: direction, component, adjoint flag, solver
/// outcome.
#[derive(Debug, Clone)]
pub struct SolveRecord {
    pub gamma: MultiIndex,
    pub j: usize,
    pub adjoint: bool,
    pub stats: SolveStats,
}

/// Correctors and every cell quantity derived from them.
#[derive(Debug, Clone)]
pub struct CorrectorSet {
    pub field: CoefficientField,
    /// chi[gi * n + j] is the n-component corrector for direction
    /// alphas[gi], source component j.
    pub chi: Vec<GridFunction>,
    pub chi_star: Vec<GridFunction>,
    pub a_bar: ConstTensor,
    pub b_flux: TensorField,
    pub dual_b: DualField,
    pub records: Vec<SolveRecord>,
}

impl CorrectorSet {
    pub fn chi_fn(&self, gi: usize, j: usize) -> &GridFunction {
        &self.chi[gi * self.field.n + j]
    }

    pub fn chi_star_fn(&self, gi: usize, j: usize) -> &GridFunction {
        &self.chi_star[gi * self.field.n + j]
    }

    pub fn max_residual(&self) -> f64 {
        self.records
            .iter()
            .fold(0.0f64, |m, r| m.max(r.stats.rel_residual))
    }
}

/// Solve one cell problem. Nonsymmetric tensors fall back from conjugate
/// gradients to BiCGstab, since the form is no longer self-adjoint.
pub fn solve_corrector(
    a: &CoefficientField,
    gamma: &MultiIndex,
    j: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(GridFunction, SolveStats), Error> {
    solve_corrector_with(a, gamma, j, tol, max_iter, false)
}

pub fn solve_corrector_with(
    a: &CoefficientField,
    gamma: &MultiIndex,
    j: usize,
    tol: f64,
    max_iter: usize,
    dealias: bool,
) -> Result<(GridFunction, SolveStats), Error> {
    assert_eq!(gamma.order() as usize, a.m, "corrector direction must have order m");
    assert!(j < a.n);
    assert!(tol > 0.0);
    if a.mu <= 0.0 {
        return Err(Error::InvalidPreset(
            "coefficient field claims nonpositive ellipticity; coercivity_probe can falsify it but solves need mu > 0".into(),
        ));
    }
    let gi = a
        .alphas
        .iter()
        .position(|al| al == gamma)
        .expect("gamma must be one of the canonical order-m multi-indices");
    let op = CellOperator::new(a, dealias);
    let b = op.rhs_corrector(gi, j);
    let context = format!("corrector gamma={gamma} j={j}");
    let apply = |x: &[f64], y: &mut [f64]| op.apply(x, y);
    let precond = |x: &[f64], y: &mut [f64]| op.precond_apply(x, y);
    let (x, stats) = if a.symmetric {
        pcg(&apply, &precond, &b, tol, max_iter, &context)?
    } else {
        bicgstab(&apply, &precond, &b, tol, max_iter, &context)?
    };
    let mut chi = GridFunction::from_values(a.grid(), a.n, x);
    chi.project_zero_mean();
    Ok((chi, stats))
}

/// Corrected flux density A^{alpha beta}_{ij} + sum_gamma A^{alpha gamma}_{il}
/// D^gamma chi^beta_{lj}, before any averaging.
fn flux_raw(a: &CoefficientField, chi: &[GridFunction]) -> Result<TensorField, Error> {
    let na = a.nalpha();
    let n = a.n;
    let len = a.cell_len();
    if chi.len() != na * n {
        return Err(Error::GridMismatch(format!(
            "corrector list has {} entries, coefficient field needs {}",
            chi.len(),
            na * n
        )));
    }
    for c in chi {
        if c.grid != a.grid() || c.ncomp != n {
            return Err(Error::GridMismatch(
                "corrector grid or component count does not match the coefficient field".into(),
            ));
        }
    }
    let mut out = TensorField {
        d: a.d,
        m: a.m,
        n,
        ngrid: a.ngrid,
        alphas: a.alphas.clone(),
        values: vec![0.0; na * na * n * n * len],
        ref_scale: a.max_abs(),
    };
    for bi in 0..na {
        for j in 0..n {
            let chi_bj = &chi[bi * n + j];
            // D^gamma chi^beta_{.j} for every gamma.
            let mut dchi = Vec::with_capacity(na);
            for gamma in &a.alphas {
                dchi.push(chi_bj.derivative(gamma)?);
            }
            for ai in 0..na {
                for i in 0..n {
                    let s = out.slot_index(ai, bi, i, j);
                    let dst = &mut out.values[s * len..(s + 1) * len];
                    dst.copy_from_slice(a.slot(ai, bi, i, j));
                    for (gi, dg) in dchi.iter().enumerate() {
                        for l in 0..n {
                            let coef = a.slot(ai, gi, i, l);
                            let dliche = dg.comp(l);
                            for ((o, &cv), &dv) in dst.iter_mut().zip(coef).zip(dliche) {
                                *o += cv * dv;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Homogenized tensor: exact grid average of the corrected flux density.
pub fn homogenized_tensor(
    a: &CoefficientField,
    chi: &[GridFunction],
) -> Result<ConstTensor, Error> {
    let flux = flux_raw(a, chi)?;
    let na = a.nalpha();
    let n = a.n;
    let len = a.cell_len();
    let mut out = ConstTensor::zeros(na, n);
    for ai in 0..na {
        for bi in 0..na {
            for i in 0..n {
                for j in 0..n {
                    let s = flux.slot(ai, bi, i, j);
                    let idx = out.idx(ai, bi, i, j);
                    out.data[idx] = s.iter().sum::<f64>() / len as f64;
                }
            }
        }
    }
    Ok(out)
}

/// Flux field B = A + A Dchi - Abar; every slot has zero grid mean because
/// Abar is the grid mean of the first two terms.
pub fn flux_field(
    a: &CoefficientField,
    chi: &[GridFunction],
    a_bar: &ConstTensor,
) -> Result<TensorField, Error> {
    if a_bar.nalpha != a.nalpha() || a_bar.n != a.n {
        return Err(Error::GridMismatch(
            "homogenized tensor shape does not match the coefficient field".into(),
        ));
    }
    let mut flux = flux_raw(a, chi)?;
    let na = a.nalpha();
    let n = a.n;
    let len = a.cell_len();
    for ai in 0..na {
        for bi in 0..na {
            for i in 0..n {
                for j in 0..n {
                    let mean = a_bar.get(ai, bi, i, j);
                    let s = flux.slot_index(ai, bi, i, j);
                    for v in &mut flux.values[s * len..(s + 1) * len] {
                        *v -= mean;
                    }
                }
            }
        }
    }
    Ok(flux)
}

/// Solve sum_gamma D^{2 gamma} b^{alpha beta}_{ij} = B^{alpha beta}_{ij} for
/// every slot, exactly in Fourier space. The symbol is
/// (-1)^m (2 pi)^{2m} sum_gamma xi^{2 gamma}; the zero mode is set to zero,
/// matching the zero-mean normalization of b.
pub fn dual_potentials(b_flux: &TensorField) -> Result<Vec<GridFunction>, Error> {
    let d = b_flux.d;
    let nn = b_flux.ngrid;
    let len = b_flux.cell_len();
    let scale = b_flux.max_abs().max(b_flux.ref_scale);
    let na = b_flux.nalpha();
    let n = b_flux.n;
    // Reject nonzero-mean input per slot.
    for ai in 0..na {
        for bi in 0..na {
            for i in 0..n {
                for j in 0..n {
                    let s = b_flux.slot(ai, bi, i, j);
                    let mean = s.iter().sum::<f64>() / len as f64;
                    if scale > 0.0 && mean.abs() > 1e-10 * scale {
                        return Err(Error::NonZeroMean {
                            comp: format!(
                                "B^({},{})_({i},{j})",
                                b_flux.alphas[ai], b_flux.alphas[bi]
                            ),
                            rel_mean: mean.abs() / scale,
                        });
                    }
                }
            }
        }
    }
    let fft = Fft::new(d, nn);
    let mut xi = vec![0i64; d];
    let tau = 2.0 * std::f64::consts::PI;
    let sign = if b_flux.m % 2 == 0 { 1.0 } else { -1.0 };
    let front = sign * tau.powi(2 * b_flux.m as i32);
    let mut symbol = vec![0.0f64; len];
    for (idx, s) in symbol.iter_mut().enumerate() {
        freq_vector(idx, d, nn, &mut xi);
        let mut acc = 0.0;
        for gamma in &b_flux.alphas {
            let mut p = 1.0;
            for (&g, &x) in gamma.components().iter().zip(&xi) {
                p *= (x as f64).powi(2 * g as i32);
            }
            acc += p;
        }
        *s = front * acc;
    }
    let nslots = na * na * n * n;
    let mut out = Vec::with_capacity(nslots);
    let mut buf = vec![Complex64::default(); len];
    for s in 0..nslots {
        let src = &b_flux.values[s * len..(s + 1) * len];
        for (b, &v) in buf.iter_mut().zip(src) {
            *b = Complex64::new(v, 0.0);
        }
        fft.forward(&mut buf);
        for (b, &sv) in buf.iter_mut().zip(&symbol) {
            if sv != 0.0 {
                *b /= sv;
            } else {
                *b = Complex64::default();
            }
        }
        fft.inverse(&mut buf);
        let vals: Vec<f64> = buf.iter().map(|v| v.re).collect();
        let mut gf = GridFunction::from_values(Grid::torus(d, nn), 1, vals);
        gf.zero_mean = true;
        out.push(gf);
    }
    Ok(out)
}

/// Dual correctors from the flux field. Antisymmetry in (gamma, alpha) is
/// exact because both orientations reuse the same derivative arrays; the
/// divergence identity sum_gamma D^gamma frakB^{gamma alpha beta} = B is
/// checked spectrally and must hold within 1e-8 relative.
pub fn dual_correctors(b_flux: &TensorField) -> Result<DualField, Error> {
    let potentials = dual_potentials(b_flux)?;
    let na = b_flux.nalpha();
    let n = b_flux.n;
    let len = b_flux.cell_len();
    // dgb[gi][slot] = D^gamma_gi b_slot.
    let mut dgb: Vec<Vec<Vec<f64>>> = Vec::with_capacity(na);
    for gamma in &b_flux.alphas {
        let mut per_slot = Vec::with_capacity(potentials.len());
        for p in &potentials {
            per_slot.push(p.derivative(gamma)?.values);
        }
        dgb.push(per_slot);
    }
    let mut dual = DualField {
        d: b_flux.d,
        m: b_flux.m,
        n,
        ngrid: b_flux.ngrid,
        alphas: b_flux.alphas.clone(),
        values: vec![0.0; na * na * na * n * n * len],
    };
    for gi in 0..na {
        for ai in 0..na {
            for bi in 0..na {
                for i in 0..n {
                    for j in 0..n {
                        let src_ab = ((ai * na + bi) * n + i) * n + j;
                        let src_gb = ((gi * na + bi) * n + i) * n + j;
                        let s = dual.slot_index(gi, ai, bi, i, j);
                        let dst = &mut dual.values[s * len..(s + 1) * len];
                        let dg = &dgb[gi][src_ab];
                        let da = &dgb[ai][src_gb];
                        for ((o, &g), &a) in dst.iter_mut().zip(dg).zip(da) {
                            *o = g - a;
                        }
                    }
                }
            }
        }
    }
    // Divergence identity check.
    let grid = b_flux.grid();
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for ai in 0..na {
        for bi in 0..na {
            for i in 0..n {
                for j in 0..n {
                    let mut resid = vec![0.0f64; len];
                    for (gi, gamma) in b_flux.alphas.iter().enumerate() {
                        let gf = GridFunction::from_values(
                            grid.clone(),
                            1,
                            dual.slot(gi, ai, bi, i, j).to_vec(),
                        );
                        let dg = gf.derivative(gamma)?;
                        for (r, &v) in resid.iter_mut().zip(dg.comp(0)) {
                            *r += v;
                        }
                    }
                    let b = b_flux.slot(ai, bi, i, j);
                    for (r, &v) in resid.iter_mut().zip(b) {
                        *r -= v;
                    }
                    num += resid.iter().map(|v| v * v).sum::<f64>();
                    den += b.iter().map(|v| v * v).sum::<f64>();
                }
            }
        }
    }
    // Residual relative to the larger of the flux norm and the coefficient
    // scale: a flux that vanishes up to solver noise must not divide by its
    // own noise.
    let count = (na * na * n * n * len) as f64;
    let den_ref = den.sqrt().max(b_flux.ref_scale * count.sqrt());
    let residual = if den_ref > 0.0 {
        num.sqrt() / den_ref
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    if residual > 1e-8 {
        return Err(Error::DualIdentity { residual });
    }
    Ok(dual)
}

/// Solve every cell problem for A and its adjoint, then assemble the
/// homogenized tensor, flux field, and dual correctors.
pub fn solve_all(a: &CoefficientField, tol: f64, max_iter: usize) -> Result<CorrectorSet, Error> {
    solve_all_with(a, tol, max_iter, false)
}

pub fn solve_all_with(
    a: &CoefficientField,
    tol: f64,
    max_iter: usize,
    dealias: bool,
) -> Result<CorrectorSet, Error> {
    let na = a.nalpha();
    let n = a.n;
    let mut chi = Vec::with_capacity(na * n);
    let mut records = Vec::with_capacity(2 * na * n);
    for gi in 0..na {
        for j in 0..n {
            let gamma = a.alphas[gi].clone();
            let (c, stats) = solve_corrector_with(a, &gamma, j, tol, max_iter, dealias)?;
            records.push(SolveRecord {
                gamma: gamma.clone(),
                j,
                adjoint: false,
                stats,
            });
            chi.push(c);
        }
    }
    let a_star = a.adjoint();
    let mut chi_star = Vec::with_capacity(na * n);
    for gi in 0..na {
        for j in 0..n {
            let gamma = a.alphas[gi].clone();
            let (c, stats) = solve_corrector_with(&a_star, &gamma, j, tol, max_iter, dealias)?;
            records.push(SolveRecord {
                gamma: gamma.clone(),
                j,
                adjoint: true,
                stats,
            });
            chi_star.push(c);
        }
    }
    let a_bar = homogenized_tensor(a, &chi)?;
    let b_flux = flux_field(a, &chi, &a_bar)?;
    let dual_b = dual_correctors(&b_flux)?;
    Ok(CorrectorSet {
        field: a.clone(),
        chi,
        chi_star,
        a_bar,
        b_flux,
        dual_b,
        records,
    })
}
