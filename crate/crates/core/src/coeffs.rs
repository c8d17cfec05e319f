//! Periodic coefficient tensors A^{alpha beta}_{ij}(y) on the unit cell.
//!
//! A field stores, for every pair (alpha, beta) of order-m multi-indices and
//! every component pair (i, j), real samples on an N^d periodic grid. The
//! admissibility conditions are
//!
//! * boundedness: |A^{alpha beta}_{ij}| <= 1/mu,
//! * coercivity: sum over |alpha|=|beta|=m of the form integral dominates
//!   mu * sum_alpha ||D^alpha phi||^2 for smooth periodic phi,
//! * 1-periodicity in every coordinate.
//!
//! Scalar presets embed a(y) diagonally: A^{alpha beta}_{ij} = a(y)
//! delta_{alpha beta} delta_{ij}, which is coercive with mu = ess-inf a.
//! Exact verification of coercivity from samples is impossible, so
//! [`coercivity_probe`] provides a falsifier: a measured upper bound on the
//! best coercivity constant, driven toward the discrete minimum by a
//! preconditioned Rayleigh-quotient eigensolver.

use crate::error::Error;
use crate::fft::freq_vector;
use crate::grid::{dot, Grid, GridFunction};
use crate::multiindex::{enumerate, MultiIndex};
use crate::operator::CellOperator;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Built-in coefficient presets, all scalar (n = 1).
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// A = c * identity embedding, any dimension.
    Constant { d: usize, c: f64 },
    /// a(y) = a0 + a1 cos(2 pi y), d = 1.
    Cosine1d { a0: f64, a1: f64 },
    /// a(y) = a0 + a1 cos(2 pi y_1), d = 2; varies along the first axis only.
    Laminate2d { a0: f64, a1: f64 },
    /// Smooth checkerboard between 1 and `contrast` with transition width
    /// `width`, d = 2.
    SmoothedCheckerboard2d { contrast: f64, width: f64 },
    /// Tabulated scalar samples on an N^d grid (row-major). Accepted without
    /// positivity screening so that non-coercive fields can be probed.
    Explicit { d: usize, values: Vec<f64> },
}

impl Preset {
    pub fn dim(&self) -> usize {
        match self {
            Preset::Constant { d, .. } | Preset::Explicit { d, .. } => *d,
            Preset::Cosine1d { .. } => 1,
            Preset::Laminate2d { .. } | Preset::SmoothedCheckerboard2d { .. } => 2,
        }
    }

    /// Pointwise value for analytic presets; `None` for tabulated data.
    pub fn eval(&self, y: &[f64]) -> Option<f64> {
        let tau = 2.0 * std::f64::consts::PI;
        match self {
            Preset::Constant { c, .. } => Some(*c),
            Preset::Cosine1d { a0, a1 } => Some(a0 + a1 * (tau * y[0]).cos()),
            Preset::Laminate2d { a0, a1 } => Some(a0 + a1 * (tau * y[0]).cos()),
            Preset::SmoothedCheckerboard2d { contrast, width } => {
                let s = ((tau * y[0]).sin() / width).tanh() * ((tau * y[1]).sin() / width).tanh();
                let mid = 0.5 * (1.0 + contrast);
                let amp = 0.5 * (contrast - 1.0);
                Some(mid + amp * s)
            }
            Preset::Explicit { .. } => None,
        }
    }

    /// Canonical text form, used for cache keys and run manifests.
    pub fn key(&self) -> String {
        match self {
            Preset::Constant { d, c } => format!("constant(d={d},c={c})"),
            Preset::Cosine1d { a0, a1 } => format!("cosine_1d({a0},{a1})"),
            Preset::Laminate2d { a0, a1 } => format!("laminate_2d({a0},{a1})"),
            Preset::SmoothedCheckerboard2d { contrast, width } => {
                format!("smoothed_checkerboard_2d({contrast},{width})")
            }
            Preset::Explicit { d, values } => {
                let mut h = 0xcbf29ce484222325u64;
                for v in values {
                    for b in v.to_le_bytes() {
                        h ^= b as u64;
                        h = h.wrapping_mul(0x100000001b3);
                    }
                }
                format!("explicit(d={d},hash={h:016x})")
            }
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        match self {
            Preset::Constant { d, c } => {
                if *d == 0 || *d > 3 {
                    return Err(Error::InvalidPreset("dimension must be 1, 2, or 3".into()));
                }
                if *c <= 0.0 {
                    return Err(Error::InvalidPreset(format!(
                        "constant coefficient {c} is not positive"
                    )));
                }
            }
            Preset::Cosine1d { a0, a1 } | Preset::Laminate2d { a0, a1 } => {
                if *a1 < 0.0 {
                    return Err(Error::InvalidPreset("oscillation amplitude must be >= 0".into()));
                }
                if a1 >= a0 {
                    return Err(Error::InvalidPreset(format!(
                        "a(y) = {a0} + {a1} cos(2 pi y) is not bounded below by a positive constant"
                    )));
                }
            }
            Preset::SmoothedCheckerboard2d { contrast, width } => {
                if *contrast <= 0.0 {
                    return Err(Error::InvalidPreset("contrast must be positive".into()));
                }
                if *width <= 0.0 {
                    return Err(Error::InvalidPreset("smoothing width must be positive".into()));
                }
            }
            Preset::Explicit { d, values } => {
                if *d == 0 || *d > 3 {
                    return Err(Error::InvalidPreset("dimension must be 1, 2, or 3".into()));
                }
                if values.is_empty() {
                    return Err(Error::InvalidPreset("explicit preset has no samples".into()));
                }
            }
        }
        Ok(())
    }
}

/// Sampled periodic tensor with ellipticity metadata.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub d: usize,
    pub m: usize,
    /// Number of system components.
    pub n: usize,
    /// Grid resolution per axis on the unit cell.
    pub ngrid: usize,
    /// Order-m multi-indices in canonical order; rows and columns of the
    /// tensor are indexed against this list.
    pub alphas: Vec<MultiIndex>,
    /// Slot-major samples: slot (ai, bi, i, j) occupies the contiguous range
    /// `[slot_index * ngrid^d, (slot_index + 1) * ngrid^d)`.
    pub values: Vec<f64>,
    /// Claimed ellipticity constant; from sampled bounds for scalar presets.
    pub mu: f64,
    /// A^{alpha beta}_{ij} == A^{beta alpha}_{ji} pointwise.
    pub symmetric: bool,
    pub preset: Preset,
}

impl CoefficientField {
    pub fn nalpha(&self) -> usize {
        self.alphas.len()
    }

    pub fn cell_len(&self) -> usize {
        self.ngrid.pow(self.d as u32)
    }

    pub fn nslots(&self) -> usize {
        self.nalpha() * self.nalpha() * self.n * self.n
    }

    pub fn slot_index(&self, ai: usize, bi: usize, i: usize, j: usize) -> usize {
        ((ai * self.nalpha() + bi) * self.n + i) * self.n + j
    }

    /// Samples of A^{alpha_ai alpha_bi}_{ij} over the cell grid.
    pub fn slot(&self, ai: usize, bi: usize, i: usize, j: usize) -> &[f64] {
        let len = self.cell_len();
        let s = self.slot_index(ai, bi, i, j);
        &self.values[s * len..(s + 1) * len]
    }

    pub fn grid(&self) -> Grid {
        Grid::torus(self.d, self.ngrid)
    }

    /// Largest |A| over all slots and nodes.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Adjoint tensor A*^{alpha beta}_{ij} = A^{beta alpha}_{ji}.
    pub fn adjoint(&self) -> CoefficientField {
        let len = self.cell_len();
        let mut values = vec![0.0; self.values.len()];
        for ai in 0..self.nalpha() {
            for bi in 0..self.nalpha() {
                for i in 0..self.n {
                    for j in 0..self.n {
                        let dst = self.slot_index(ai, bi, i, j);
                        let src = self.slot(bi, ai, j, i);
                        values[dst * len..(dst + 1) * len].copy_from_slice(src);
                    }
                }
            }
        }
        CoefficientField {
            values,
            ..self.clone()
        }
    }

    /// Assemble from raw slot data (test tensors, including nonsymmetric
    /// ones). `slots[slot_index]` follows the canonical slot order.
    pub fn from_raw(
        d: usize,
        m: usize,
        n: usize,
        ngrid: usize,
        slots: Vec<Vec<f64>>,
        mu: f64,
    ) -> CoefficientField {
        let alphas = enumerate(d, m as u32);
        let nslots = alphas.len() * alphas.len() * n * n;
        assert_eq!(slots.len(), nslots);
        let len = ngrid.pow(d as u32);
        let mut values = Vec::with_capacity(nslots * len);
        for s in &slots {
            assert_eq!(s.len(), len);
            values.extend_from_slice(s);
        }
        let mut field = CoefficientField {
            d,
            m,
            n,
            ngrid,
            alphas,
            values,
            mu,
            symmetric: false,
            preset: Preset::Explicit {
                d,
                values: slots.concat(),
            },
        };
        field.symmetric = field.check_symmetric();
        field
    }

    fn check_symmetric(&self) -> bool {
        for ai in 0..self.nalpha() {
            for bi in 0..self.nalpha() {
                for i in 0..self.n {
                    for j in 0..self.n {
                        let a = self.slot(ai, bi, i, j);
                        let b = self.slot(bi, ai, j, i);
                        if a.iter().zip(b).any(|(x, y)| x != y) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Sample the same preset at y = ratio * x on a fine unit-torus grid:
    /// the coefficient seen by the operator at scale eps = 1/ratio. Analytic
    /// presets are re-evaluated exactly; tabulated ones are placed
    /// spectrally, which is exact trigonometric interpolation.
    pub fn rescale(&self, ratio: u32, n_fine: usize) -> CoefficientField {
        let fine_grid = Grid::torus(self.d, n_fine);
        let len = n_fine.pow(self.d as u32);
        let mut values = Vec::with_capacity(self.nslots() * len);
        match self.preset.eval(&vec![0.0; self.d]) {
            Some(_) => {
                let mut scalar = vec![0.0; len];
                let mut x = vec![0.0; self.d];
                let mut y = vec![0.0; self.d];
                for (idx, slot) in scalar.iter_mut().enumerate() {
                    fine_grid.node(idx, &mut x);
                    for (yk, xk) in y.iter_mut().zip(&x) {
                        *yk = (ratio as f64 * xk).rem_euclid(1.0);
                    }
                    *slot = self.preset.eval(&y).unwrap();
                }
                for ai in 0..self.nalpha() {
                    for bi in 0..self.nalpha() {
                        for i in 0..self.n {
                            for j in 0..self.n {
                                if ai == bi && i == j {
                                    values.extend_from_slice(&scalar);
                                } else {
                                    values.extend(std::iter::repeat(0.0).take(len));
                                }
                            }
                        }
                    }
                }
            }
            None => {
                for ai in 0..self.nalpha() {
                    for bi in 0..self.nalpha() {
                        for i in 0..self.n {
                            for j in 0..self.n {
                                let f = GridFunction::from_values(
                                    self.grid(),
                                    1,
                                    self.slot(ai, bi, i, j).to_vec(),
                                );
                                let fine = f.compose_scaled(0, ratio, n_fine);
                                values.extend_from_slice(fine.comp(0));
                            }
                        }
                    }
                }
            }
        }
        CoefficientField {
            ngrid: n_fine,
            values,
            ..self.clone()
        }
    }
}

/// Sample a preset on an N^d periodic grid for operator order 2m.
///
/// Rejects N < 4 or odd N, and analytic presets whose scalar coefficient is
/// not bounded below by a positive constant. Explicit tabulated samples are
/// accepted as-is; their claimed mu may come out nonpositive, which blocks
/// solves but still admits probing.
pub fn sample(preset: &Preset, m: usize, ngrid: usize) -> Result<CoefficientField, Error> {
    preset.validate()?;
    if ngrid < 4 || ngrid % 2 != 0 {
        return Err(Error::InvalidPreset(format!(
            "grid resolution {ngrid} must be even and at least 4"
        )));
    }
    let d = preset.dim();
    let len = ngrid.pow(d as u32);
    let grid = Grid::torus(d, ngrid);
    let scalar: Vec<f64> = match preset {
        Preset::Explicit { values, .. } => {
            if values.len() != len {
                return Err(Error::InvalidPreset(format!(
                    "explicit preset has {} samples, grid needs {len}",
                    values.len()
                )));
            }
            values.clone()
        }
        _ => {
            let mut v = vec![0.0; len];
            let mut x = vec![0.0; d];
            for (idx, slot) in v.iter_mut().enumerate() {
                grid.node(idx, &mut x);
                *slot = preset.eval(&x).unwrap();
            }
            v
        }
    };
    let lo = scalar.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scalar.iter().cloned().fold(0.0f64, |m, v| m.max(v.abs()));
    let mu = lo.min(if hi > 0.0 { 1.0 / hi } else { f64::INFINITY });
    let alphas = enumerate(d, m as u32);
    let nalpha = alphas.len();
    let mut values = Vec::with_capacity(nalpha * nalpha * len);
    for ai in 0..nalpha {
        for bi in 0..nalpha {
            if ai == bi {
                values.extend_from_slice(&scalar);
            } else {
                values.extend(std::iter::repeat(0.0).take(len));
            }
        }
    }
    Ok(CoefficientField {
        d,
        m,
        n: 1,
        ngrid,
        alphas,
        values,
        mu,
        symmetric: true,
        preset: preset.clone(),
    })
}

/// Rayleigh quotient of the coercivity form at a periodic test field:
/// sum over (alpha, beta) of the form integral divided by
/// sum_alpha ||D^alpha phi||^2.
fn rayleigh(op: &CellOperator, phi: &GridFunction) -> f64 {
    let mut aphi = GridFunction::zeros(phi.grid.clone(), phi.ncomp);
    op.apply(&phi.values, &mut aphi.values);
    let mut mphi = GridFunction::zeros(phi.grid.clone(), phi.ncomp);
    op.mass_apply(&phi.values, &mut mphi.values);
    let den = dot(phi, &mphi);
    if den <= 0.0 {
        return f64::INFINITY;
    }
    dot(phi, &aphi) / den
}

/// Measured upper bound mu-hat on the coercivity constant of the sampled
/// field: the minimum Rayleigh quotient over single Fourier modes up to a
/// fixed cutoff, `trials` seeded random band-limited fields, and the result
/// of a preconditioned eigensolver refinement started from the best
/// candidate. mu-hat <= 0 falsifies coercivity for the sampled field.
/// The candidate sets are nested in `trials`, so the bound is monotone
/// nonincreasing as trials grow.
pub fn coercivity_probe(a: &CoefficientField, trials: usize, seed: u64) -> f64 {
    let op = CellOperator::new(a, false);
    let grid = a.grid();
    let d = a.d;
    let nn = a.ngrid;
    let tau = 2.0 * std::f64::consts::PI;
    let mut best = f64::INFINITY;
    let mut best_field: Option<GridFunction> = None;
    let consider = |phi: &mut GridFunction, best: &mut f64, best_field: &mut Option<GridFunction>| {
        phi.project_zero_mean();
        let scale = phi.max_abs();
        if scale < 1e-14 {
            return;
        }
        let q = rayleigh(&op, phi);
        if q < *best {
            *best = q;
            *best_field = Some(phi.clone());
        }
    };

    // Single Fourier modes, both phases, on every system component.
    let cutoff = 4.min(nn / 2 - 1) as i64;
    let mut xi = vec![0i64; d];
    let nmodes = (2 * cutoff + 1).pow(d as u32);
    for flat in 0..nmodes {
        let mut rem = flat;
        for x in xi.iter_mut() {
            *x = rem % (2 * cutoff + 1) - cutoff;
            rem /= 2 * cutoff + 1;
        }
        if xi.iter().all(|&x| x == 0) {
            continue;
        }
        for comp in 0..a.n {
            for phase in 0..2 {
                let mut phi = GridFunction::zeros(grid.clone(), a.n);
                let mut x = vec![0.0; d];
                let vals = phi.comp_mut(comp);
                for idx in 0..grid.len() {
                    grid.node(idx, &mut x);
                    let arg: f64 = tau * xi.iter().zip(&x).map(|(&k, &v)| k as f64 * v).sum::<f64>();
                    vals[idx] = if phase == 0 { arg.sin() } else { arg.cos() };
                }
                consider(&mut phi, &mut best, &mut best_field);
            }
        }
    }

    // Seeded random band-limited fields; the stream is fixed by the seed, so
    // more trials only extend the candidate list.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let band = (nn / 4).max(1) as i64;
    let fft = crate::fft::Fft::new(d, nn);
    for _ in 0..trials {
        let mut phi = GridFunction::zeros(grid.clone(), a.n);
        for c in 0..a.n {
            let vals = phi.comp_mut(c);
            for v in vals.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        low_pass(&mut phi, band, &fft);
        consider(&mut phi, &mut best, &mut best_field);
    }

    // Eigensolver refinement: preconditioned steepest descent on the
    // generalized Rayleigh quotient <phi, A phi> / <phi, M phi> with
    // M = sum_alpha (D^alpha)* D^alpha. Each iterate is itself a periodic
    // test field, so the returned value stays a genuine sampled minimum.
    if let Some(start) = best_field {
        let refined = rayleigh_minimize(&op, start, 160);
        if refined.0 < best {
            best = refined.0;
        }
    }
    best
}

/// Remove all modes with any |xi_k| above `band` from every component.
fn low_pass(f: &mut GridFunction, band: i64, fft: &crate::fft::Fft) {
    let d = f.grid.d;
    let n = f.grid.n;
    let len = f.grid.len();
    let mut xi = vec![0i64; d];
    let mut buf = vec![Complex64::default(); len];
    for c in 0..f.ncomp {
        for (b, &v) in buf.iter_mut().zip(f.comp(c).iter()) {
            *b = Complex64::new(v, 0.0);
        }
        fft.forward(&mut buf);
        for (idx, b) in buf.iter_mut().enumerate() {
            freq_vector(idx, d, n, &mut xi);
            if xi.iter().any(|x| x.abs() > band) {
                *b = Complex64::default();
            }
        }
        fft.inverse(&mut buf);
        for (v, b) in f.comp_mut(c).iter_mut().zip(&buf) {
            *v = b.re;
        }
    }
}

/// Locally optimal preconditioned descent for the smallest generalized
/// Rayleigh quotient. Uses the subspace {x, preconditioned residual, previous
/// step} and an exact 3x3 restriction each iteration.
fn rayleigh_minimize(op: &CellOperator, start: GridFunction, iters: usize) -> (f64, GridFunction) {
    let grid = start.grid.clone();
    let ncomp = start.ncomp;
    let len = start.values.len();
    let apply_a = |x: &[f64], y: &mut [f64]| op.apply(x, y);
    let apply_m = |x: &[f64], y: &mut [f64]| op.mass_apply(x, y);
    let ip = |x: &[f64], y: &[f64]| -> f64 {
        x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() * grid.weight()
    };

    let mut x = start.values.clone();
    let mut p: Option<Vec<f64>> = None;
    let mut ax = vec![0.0; len];
    let mut mx = vec![0.0; len];
    apply_a(&x, &mut ax);
    apply_m(&x, &mut mx);
    let mut theta = ip(&x, &ax) / ip(&x, &mx);

    for _ in 0..iters {
        // Residual of the eigen equation and its preconditioned image.
        let mut g: Vec<f64> = ax.iter().zip(&mx).map(|(a, m)| a - theta * m).collect();
        let gn = ip(&g, &g).sqrt();
        if gn < 1e-13 * theta.abs().max(1.0) {
            break;
        }
        let mut w = vec![0.0; len];
        op.precond_apply(&g, &mut w);
        g.clear();

        // Basis {x, w, p}; restrict both forms and take the smallest
        // eigenvalue of the 3x3 (or 2x2) pencil.
        let mut basis: Vec<Vec<f64>> = vec![x.clone(), w];
        if let Some(pv) = &p {
            basis.push(pv.clone());
        }
        let k = basis.len();
        let mut abas = Vec::with_capacity(k);
        let mut mbas = Vec::with_capacity(k);
        for b in &basis {
            let mut ab = vec![0.0; len];
            let mut mb = vec![0.0; len];
            apply_a(b, &mut ab);
            apply_m(b, &mut mb);
            abas.push(ab);
            mbas.push(mb);
        }
        let mut amat = vec![0.0; k * k];
        let mut mmat = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                amat[i * k + j] = ip(&basis[i], &abas[j]);
                mmat[i * k + j] = ip(&basis[i], &mbas[j]);
            }
        }
        let coeffs = match smallest_pencil_vector(&amat, &mmat, k) {
            Some(c) => c,
            None => break,
        };
        let mut xn = vec![0.0; len];
        for (ci, b) in coeffs.iter().zip(&basis) {
            for (o, v) in xn.iter_mut().zip(b) {
                *o += ci * v;
            }
        }
        // New conjugate direction: the update without the x component.
        let mut pn = vec![0.0; len];
        for (o, v) in pn.iter_mut().zip(&basis[1]) {
            *o += coeffs[1] * v;
        }
        if k == 3 {
            for (o, v) in pn.iter_mut().zip(&basis[2]) {
                *o += coeffs[2] * v;
            }
        }
        let scale = ip(&xn, &xn).sqrt();
        if scale < 1e-300 {
            break;
        }
        for v in &mut xn {
            *v /= scale;
        }
        for v in &mut pn {
            *v /= scale;
        }
        x = xn;
        p = Some(pn);
        apply_a(&x, &mut ax);
        apply_m(&x, &mut mx);
        let den = ip(&x, &mx);
        if den <= 0.0 {
            break;
        }
        theta = ip(&x, &ax) / den;
    }
    let out = GridFunction::from_values(grid, ncomp, x);
    (theta, out)
}

/// Smallest-eigenvalue vector of the k x k symmetric pencil (A, M), k <= 3,
/// via Cholesky reduction of M and Jacobi iteration. Returns None if M is
/// not positive definite on the subspace.
fn smallest_pencil_vector(a: &[f64], m: &[f64], k: usize) -> Option<Vec<f64>> {
    // Cholesky M = L L^T.
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = m[i * k + j];
            for t in 0..j {
                s -= l[i * k + t] * l[j * k + t];
            }
            if i == j {
                if s <= 1e-14 * m[i * k + i].abs().max(1e-300) {
                    return None;
                }
                l[i * k + i] = s.sqrt();
            } else {
                l[i * k + j] = s / l[j * k + j];
            }
        }
    }
    // B = L^{-1} A L^{-T}, assembled by forward/back substitution per column.
    let solve_lower = |l: &[f64], b: &mut [f64]| {
        for i in 0..k {
            for t in 0..i {
                b[i] -= l[i * k + t] * b[t];
            }
            b[i] /= l[i * k + i];
        }
    };
    let mut bmat = vec![0.0; k * k];
    for j in 0..k {
        let mut col: Vec<f64> = (0..k).map(|i| a[i * k + j]).collect();
        solve_lower(&l, &mut col);
        for i in 0..k {
            bmat[i * k + j] = col[i];
        }
    }
    for i in 0..k {
        let mut row: Vec<f64> = (0..k).map(|j| bmat[i * k + j]).collect();
        solve_lower(&l, &mut row);
        for j in 0..k {
            bmat[i * k + j] = row[j];
        }
    }
    // Jacobi sweeps on the symmetric k x k matrix.
    let mut v = vec![0.0; k * k];
    for i in 0..k {
        v[i * k + i] = 1.0;
    }
    for _ in 0..50 {
        let mut off = 0.0;
        for i in 0..k {
            for j in i + 1..k {
                off += bmat[i * k + j] * bmat[i * k + j];
            }
        }
        if off < 1e-28 {
            break;
        }
        for i in 0..k {
            for j in i + 1..k {
                let apq = bmat[i * k + j];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = bmat[i * k + i];
                let aqq = bmat[j * k + j];
                let phi = 0.5 * (2.0 * apq).atan2(aqq - app);
                let (c, s) = (phi.cos(), phi.sin());
                for t in 0..k {
                    let bit = bmat[i * k + t];
                    let bjt = bmat[j * k + t];
                    bmat[i * k + t] = c * bit - s * bjt;
                    bmat[j * k + t] = s * bit + c * bjt;
                }
                for t in 0..k {
                    let bti = bmat[t * k + i];
                    let btj = bmat[t * k + j];
                    bmat[t * k + i] = c * bti - s * btj;
                    bmat[t * k + j] = s * bti + c * btj;
                }
                for t in 0..k {
                    let vti = v[t * k + i];
                    let vtj = v[t * k + j];
                    v[t * k + i] = c * vti - s * vtj;
                    v[t * k + j] = s * vti + c * vtj;
                }
            }
        }
    }
    let mut imin = 0;
    for i in 1..k {
        if bmat[i * k + i] < bmat[imin * k + imin] {
            imin = i;
        }
    }
    // Map back through L^{-T}.
    let mut y: Vec<f64> = (0..k).map(|t| v[t * k + imin]).collect();
    for i in (0..k).rev() {
        for t in i + 1..k {
            y[i] -= l[t * k + i] * y[t];
        }
        y[i] /= l[i * k + i];
    }
    Some(y)
}
