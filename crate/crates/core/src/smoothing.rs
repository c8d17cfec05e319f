//! The eps-smoothing operator S_eps, the boundary cutoff rho_eps, and
//! extension of interval functions to a larger torus.
//!
//! S_eps f (x) = int phi_eps(x - y) f(y) dy with phi_eps(x) =
//! eps^{-d} phi(x/eps) and the bump phi(x) = c exp(-1/(1 - |2x|^2)) on
//! |x| < 1/2. The kernel is sampled on the working grid and renormalized so
//! its discrete integral is exactly 1, making constants fixed points of the
//! discrete operator. On the torus the convolution is circular and computed
//! spectrally, so S_eps commutes with spectral derivatives.
//!
//! Interval functions are extended before smoothing: a Hestenes reflection
//! u(a - t) = sum_{i=1..q} c_i u(a + beta_i t), beta_i = i/q, q = m + 2,
//! with sum_i c_i beta_i^p = (-1)^p for p < q, matches one-sided derivatives
//! up to order q - 1 = m + 1 across each endpoint, giving an H^{m+1}
//! extension. The extension lives on a period-2L torus with origin a - L/2
//! and twice the sampling rate, chosen so every interval node is also an
//! extension node (interval node j sits at extension index M + 2j + 1); a
//! fixed smooth taper, 1 on [a - 0.30 L, b + 0.30 L] and 0 beyond
//! 0.38 L, makes the extension compactly supported away from the wrap.
//!
//! The cutoff rho_eps mollifies the indicator of {dist(x, boundary) >=
//! 3.5 eps} with a width-(eps/4) kernel, so rho_eps = 0 where dist < 3 eps
//! and rho_eps = 1 where dist > 4 eps, with k-th difference quotients of
//! size eps^{-k}.

use crate::error::Error;
use crate::fft::Fft;
use crate::grid::{Domain, Grid, GridFunction};
use num_complex::Complex64;

/// Sampled mollifier kernel phi_eps on a torus grid, discretely normalized.
#[derive(Debug, Clone)]
pub struct Mollifier {
    pub eps: f64,
    pub kernel: GridFunction,
}

fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

impl Mollifier {
    /// Sample phi_eps on the given torus grid. The kernel must span at
    /// least two grid cells and fit inside one period.
    pub fn new(grid: &Grid, eps: f64) -> Result<Mollifier, Error> {
        assert!(grid.is_torus(), "mollifier kernels live on torus grids");
        let h = grid.spacing();
        if eps < 2.0 * h {
            return Err(Error::KernelUnderResolved { eps, spacing: h });
        }
        let period = grid.extent();
        if eps > period {
            return Err(Error::GridMismatch(format!(
                "mollifier support eps = {eps} exceeds the torus period {period}"
            )));
        }
        let d = grid.d;
        let n = grid.n;
        let len = grid.len();
        let mut values = vec![0.0; len];
        for (idx, v) in values.iter_mut().enumerate() {
            // Offset vector of this index, minimum-image per axis.
            let mut rem = idx;
            let mut r2 = 0.0;
            for _ in 0..d {
                let i = rem % n;
                rem /= n;
                let mut delta = i as f64 * h;
                if delta > period / 2.0 {
                    delta -= period;
                }
                let s = 2.0 * delta / eps;
                r2 += s * s;
            }
            *v = bump(r2);
        }
        let total: f64 = values.iter().sum::<f64>() * grid.weight();
        for v in &mut values {
            *v /= total;
        }
        let mut kernel = GridFunction::from_values(grid.clone(), 1, values);
        kernel.zero_mean = false;
        Ok(Mollifier { eps, kernel })
    }

    /// Discrete integral of the kernel (1 up to rounding).
    pub fn mass(&self) -> f64 {
        self.kernel.values.iter().sum::<f64>() * self.kernel.grid.weight()
    }

    /// Support radius of the sampled kernel: largest node distance with a
    /// nonzero sample.
    pub fn support_radius(&self) -> f64 {
        let grid = &self.kernel.grid;
        let h = grid.spacing();
        let period = grid.extent();
        let n = grid.n;
        let d = grid.d;
        let mut rmax: f64 = 0.0;
        for (idx, &v) in self.kernel.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let mut rem = idx;
            let mut r2 = 0.0;
            for _ in 0..d {
                let i = rem % n;
                rem /= n;
                let mut delta = i as f64 * h;
                if delta > period / 2.0 {
                    delta -= period;
                }
                r2 += delta * delta;
            }
            rmax = rmax.max(r2.sqrt());
        }
        rmax
    }
}

/// Circular convolution of each component with the kernel, spectrally.
fn convolve(f: &GridFunction, kernel: &GridFunction) -> GridFunction {
    let grid = &f.grid;
    let len = grid.len();
    let fft = Fft::new(grid.d, grid.n);
    let mut khat: Vec<Complex64> = kernel
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft.forward(&mut khat);
    let w = grid.weight();
    let mut out = GridFunction::zeros(grid.clone(), f.ncomp);
    let mut buf = vec![Complex64::default(); len];
    for c in 0..f.ncomp {
        for (b, &v) in buf.iter_mut().zip(f.comp(c)) {
            *b = Complex64::new(v, 0.0);
        }
        fft.forward(&mut buf);
        for (b, &k) in buf.iter_mut().zip(&khat) {
            *b *= k * w;
        }
        fft.inverse(&mut buf);
        for (o, b) in out.comp_mut(c).iter_mut().zip(&buf) {
            *o = b.re;
        }
    }
    out.zero_mean = f.zero_mean;
    out
}

/// S_eps f. Torus functions are convolved in place; interval functions are
/// extended (order-2 jets), convolved on the extension torus, and
/// restricted back to the interval nodes.
pub fn smooth(f: &GridFunction, eps: f64) -> Result<GridFunction, Error> {
    if f.grid.is_torus() {
        let k = Mollifier::new(&f.grid, eps)?;
        Ok(convolve(f, &k.kernel))
    } else {
        let ext = extend(f, 2)?;
        let sm = smooth(&ext, eps)?;
        Ok(restrict_to_interval(&sm, &f.grid))
    }
}

/// S^2_eps f = S_eps(S_eps f).
pub fn smooth_twice(f: &GridFunction, eps: f64) -> Result<GridFunction, Error> {
    if f.grid.is_torus() {
        let k = Mollifier::new(&f.grid, eps)?;
        Ok(convolve(&convolve(f, &k.kernel), &k.kernel))
    } else {
        let ext = extend(f, 2)?;
        let sm = smooth_twice(&ext, eps)?;
        Ok(restrict_to_interval(&sm, &f.grid))
    }
}

/// Reflection weights c_1..c_q with sum_i c_i (i/q)^p = (-1)^p, p < q.
fn reflection_weights(q: usize) -> Vec<f64> {
    let mut a = vec![0.0; q * q];
    let mut rhs = vec![0.0; q];
    for p in 0..q {
        for i in 1..=q {
            a[p * q + (i - 1)] = (i as f64 / q as f64).powi(p as i32);
        }
        rhs[p] = if p % 2 == 0 { 1.0 } else { -1.0 };
    }
    // Dense Gaussian elimination with partial pivoting on the tiny system.
    for col in 0..q {
        let mut piv = col;
        for r in col + 1..q {
            if a[r * q + col].abs() > a[piv * q + col].abs() {
                piv = r;
            }
        }
        if piv != col {
            for c in 0..q {
                a.swap(col * q + c, piv * q + c);
            }
            rhs.swap(col, piv);
        }
        let diag = a[col * q + col];
        for r in col + 1..q {
            let factor = a[r * q + col] / diag;
            for c in col..q {
                a[r * q + c] -= factor * a[col * q + c];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut c = vec![0.0; q];
    for r in (0..q).rev() {
        let mut s = rhs[r];
        for k in r + 1..q {
            s -= a[r * q + k] * c[k];
        }
        c[r] = s / a[r * q + r];
    }
    c
}

/// Local Lagrange interpolation of interval samples at x, stencil of
/// `points` nodes clamped to the grid.
fn interp_interval(f: &[f64], grid: &Grid, x: f64, points: usize) -> f64 {
    let (a, b) = match grid.domain {
        Domain::Interval { a, b } => (a, b),
        _ => unreachable!(),
    };
    let m = grid.n;
    let h = (b - a) / m as f64;
    let center = ((x - a) / h - 0.5).round() as isize;
    let half = (points / 2) as isize;
    let lo = (center - half).clamp(0, m as isize - points as isize) as usize;
    let mut acc = 0.0;
    for i in lo..lo + points {
        let xi = a + (i as f64 + 0.5) * h;
        let mut w = 1.0;
        for jn in lo..lo + points {
            if jn == i {
                continue;
            }
            let xj = a + (jn as f64 + 0.5) * h;
            w *= (x - xj) / (xi - xj);
        }
        acc += w * f[i];
    }
    acc
}

/// C-infinity ramp: 0 for u <= 0, 1 for u >= 1.
fn ramp(u: f64) -> f64 {
    let psi = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let p = psi(u);
    let q = psi(1.0 - u);
    if p + q == 0.0 {
        0.0
    } else {
        p / (p + q)
    }
}

/// Hestenes extension of an interval function to the period-2L torus with
/// origin a - L/2 and 4M nodes (M interval nodes embed at index M + 2j + 1).
/// Matches one-sided derivatives up to order m + 1 at both endpoints and
/// tapers to zero beyond 0.38 L outside the interval.
pub fn extend(f: &GridFunction, m: usize) -> Result<GridFunction, Error> {
    let (a, b) = match f.grid.domain {
        Domain::Interval { a, b } => (a, b),
        _ => {
            return Err(Error::GridMismatch(
                "extend takes interval functions; torus functions need no extension".into(),
            ))
        }
    };
    let q = m + 2;
    let mm = f.grid.n;
    if mm < 4 * q {
        return Err(Error::JetExtraction(format!(
            "interval grid with {mm} nodes cannot resolve order-{} jets at the endpoints; need at least {}",
            m + 1,
            4 * q
        )));
    }
    if f.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::JetExtraction(
            "input samples are not finite".into(),
        ));
    }
    let l = b - a;
    let n_ext = 4 * mm;
    let ext_grid = Grid::torus_scaled(1, n_ext, a - l / 2.0, 2.0 * l);
    let c = reflection_weights(q);
    let stencil = q + 2;
    let taper = |x: f64| -> f64 {
        let left = ramp((x - (a - 0.38 * l)) / (0.08 * l));
        let right = ramp(((b + 0.38 * l) - x) / (0.08 * l));
        left * right
    };
    let mut out = GridFunction::zeros(ext_grid.clone(), f.ncomp);
    for comp in 0..f.ncomp {
        let src = f.comp(comp);
        let mut vals = vec![0.0; n_ext];
        for (k, v) in vals.iter_mut().enumerate() {
            let x = ext_grid.node1(k);
            let raw = if x < a {
                let t = a - x;
                c.iter()
                    .enumerate()
                    .map(|(i, &ci)| {
                        ci * interp_interval(src, &f.grid, a + (i + 1) as f64 / q as f64 * t, stencil)
                    })
                    .sum()
            } else if x > b {
                let t = x - b;
                c.iter()
                    .enumerate()
                    .map(|(i, &ci)| {
                        ci * interp_interval(src, &f.grid, b - (i + 1) as f64 / q as f64 * t, stencil)
                    })
                    .sum()
            } else {
                interp_interval(src, &f.grid, x, stencil)
            };
            *v = raw * taper(x);
        }
        out.comp_mut(comp).copy_from_slice(&vals);
    }
    out.zero_mean = false;
    Ok(out)
}

/// Pull an extension-torus function back to the interval nodes it embeds.
pub fn restrict_to_interval(ext: &GridFunction, interval: &Grid) -> GridFunction {
    let (a, b) = match interval.domain {
        Domain::Interval { a, b } => (a, b),
        _ => panic!("restriction target must be an interval grid"),
    };
    let mm = interval.n;
    let l = b - a;
    match ext.grid.domain {
        Domain::Torus { origin, period } => {
            assert_eq!(ext.grid.n, 4 * mm, "extension grid must have 4M nodes");
            assert!((origin - (a - l / 2.0)).abs() < 1e-12 * l.max(1.0));
            assert!((period - 2.0 * l).abs() < 1e-12 * l.max(1.0));
        }
        _ => panic!("restriction source must be an extension torus"),
    }
    let mut out = GridFunction::zeros(interval.clone(), ext.ncomp);
    for c in 0..ext.ncomp {
        let src = ext.comp(c);
        let dst = out.comp_mut(c);
        for j in 0..mm {
            dst[j] = src[mm + 2 * j + 1];
        }
    }
    out.zero_mean = false;
    out
}

/// Boundary cutoff rho_eps.
#[derive(Debug, Clone)]
pub struct Cutoff {
    pub eps: f64,
    pub values: GridFunction,
}

/// Build rho_eps on the given grid: identically 1 on torus domains;
/// on intervals, the indicator of {dist >= 3.5 eps} mollified with a
/// width-(eps/4) kernel, so rho = 0 below distance 3 eps and rho = 1 above
/// 4 eps.
pub fn cutoff(grid: &Grid, eps: f64) -> Result<Cutoff, Error> {
    match grid.domain {
        Domain::Torus { .. } => {
            let mut values = GridFunction::zeros(grid.clone(), 1);
            values.comp_mut(0).iter_mut().for_each(|v| *v = 1.0);
            values.zero_mean = false;
            Ok(Cutoff { eps, values })
        }
        Domain::Interval { a, b } => {
            let l = b - a;
            if 5.0 * eps >= l {
                return Err(Error::CutoffTooWide { eps, diameter: l });
            }
            let n = grid.n;
            let h = grid.spacing();
            // Indicator of dist(x, {a, b}) >= 3.5 eps.
            let mut ind = vec![0.0; n];
            for (j, v) in ind.iter_mut().enumerate() {
                let x = a + (j as f64 + 0.5) * h;
                if (x - a).min(b - x) >= 3.5 * eps {
                    *v = 1.0;
                }
            }
            // The indicator vanishes within 3.375 eps of each endpoint and
            // the kernel radius is eps/8, so circular convolution on a
            // period-L torus never mixes mass across the boundary.
            let conv_grid = Grid::torus_scaled(1, n, a, l);
            let kernel = Mollifier::new(&conv_grid, eps / 4.0)?;
            let f = GridFunction::from_values(conv_grid.clone(), 1, ind);
            let mut sm = convolve(&f, &kernel.kernel);
            for v in &mut sm.values {
                *v = v.clamp(0.0, 1.0);
            }
            let values = GridFunction::from_values(grid.clone(), 1, sm.values);
            Ok(Cutoff { eps, values })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::dot;

    #[test]
    fn kernel_is_normalized_and_supported() {
        let g = Grid::torus(1, 256);
        let k = Mollifier::new(&g, 1.0 / 16.0).unwrap();
        assert!(k.kernel.values.iter().all(|&v| v >= 0.0));
        assert!((k.mass() - 1.0).abs() < 1e-12);
        assert!(k.support_radius() <= 0.5 / 16.0 + g.spacing());
    }

    #[test]
    fn under_resolved_kernel_rejected() {
        let g = Grid::torus(1, 16);
        match Mollifier::new(&g, 0.05) {
            Err(Error::KernelUnderResolved { .. }) => {}
            other => panic!("expected resolution error, got {other:?}"),
        }
    }

    #[test]
    fn constants_are_fixed_points() {
        let g = Grid::torus(1, 128);
        let f = GridFunction::sample_scalar(g, |_| 3.25);
        let sf = smooth(&f, 1.0 / 8.0).unwrap();
        for v in &sf.values {
            assert!((v - 3.25).abs() < 1e-13);
        }
    }

    #[test]
    fn single_mode_is_scaled_not_rotated() {
        let tau = 2.0 * std::f64::consts::PI;
        let g = Grid::torus(1, 256);
        let f = GridFunction::sample_scalar(g.clone(), |x| (tau * x[0]).sin());
        let sf = smooth(&f, 1.0 / 16.0).unwrap();
        // S_eps sin = rho sin with |rho| <= 1.
        let num = dot(&sf, &f);
        let den = dot(&f, &f);
        let rho = num / den;
        assert!(rho.abs() <= 1.0 + 1e-12);
        for (s, &v) in sf.values.iter().zip(&f.values) {
            assert!((s - rho * v).abs() < 1e-12);
        }
        // The residual S f - f obeys the first-order smoothing bound.
        let diff: f64 = sf
            .values
            .iter()
            .zip(&f.values)
            .map(|(s, v)| (s - v) * (s - v))
            .sum::<f64>()
            .sqrt();
        let grad_norm = tau * den.sqrt();
        assert!(diff / ((1.0 / 16.0) * grad_norm) < 1.0);
    }

    #[test]
    fn smoothing_commutes_with_spectral_derivative() {
        let tau = 2.0 * std::f64::consts::PI;
        let g = Grid::torus(1, 256);
        let f = GridFunction::sample_scalar(g, |x| {
            (tau * x[0]).sin() + 0.5 * (tau * 3.0 * x[0]).cos()
        });
        let alpha = crate::multiindex::MultiIndex::new(vec![1]);
        let a_then_s = smooth(&f.derivative(&alpha).unwrap(), 1.0 / 8.0).unwrap();
        let s_then_a = smooth(&f, 1.0 / 8.0).unwrap().derivative(&alpha).unwrap();
        let scale = a_then_s.max_abs();
        for (x, y) in a_then_s.values.iter().zip(&s_then_a.values) {
            assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn double_smoothing_squares_the_multiplier() {
        let tau = 2.0 * std::f64::consts::PI;
        let g = Grid::torus(1, 256);
        let f = GridFunction::sample_scalar(g.clone(), |x| (tau * 2.0 * x[0]).sin());
        let s1 = smooth(&f, 1.0 / 8.0).unwrap();
        let s2 = smooth_twice(&f, 1.0 / 8.0).unwrap();
        let rho = dot(&s1, &f) / dot(&f, &f);
        for (o, &v) in s2.values.iter().zip(&f.values) {
            assert!((o - rho * rho * v).abs() < 1e-11);
        }
        // Triangle inequality form: ||S^2 f - f|| <= 2 ||S f - f||.
        let d1: f64 = s1
            .values
            .iter()
            .zip(&f.values)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        let d2: f64 = s2
            .values
            .iter()
            .zip(&f.values)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        assert!(d2 <= 2.0 * d1 + 1e-14);
    }

    #[test]
    fn extension_reproduces_polynomials_near_the_interval() {
        // Degree m+1 polynomials are reproduced exactly by an order-(m+2)
        // reflection; check inside the taper-1 region.
        let g = Grid::interval(64, 0.0, 1.0);
        let m = 2usize;
        let f = GridFunction::sample_scalar(g.clone(), |x| {
            1.0 + x[0] - 2.0 * x[0] * x[0] + 0.5 * x[0] * x[0] * x[0]
        });
        let ext = extend(&f, m).unwrap();
        for k in 0..ext.grid.len() {
            let x = ext.grid.node1(k);
            if (-0.25..=1.25).contains(&x) {
                let expect = 1.0 + x - 2.0 * x * x + 0.5 * x * x * x;
                assert!(
                    (ext.comp(0)[k] - expect).abs() < 1e-9,
                    "x = {x}: {} vs {expect}",
                    ext.comp(0)[k]
                );
            }
        }
    }

    #[test]
    fn extension_embeds_interval_nodes_exactly() {
        let g = Grid::interval(32, 0.0, 1.0);
        let f = GridFunction::sample_scalar(g.clone(), |x| (x[0] * 3.0).sin());
        let ext = extend(&f, 1).unwrap();
        let back = restrict_to_interval(&ext, &g);
        for (r, &v) in back.values.iter().zip(&f.values) {
            assert!((r - v).abs() < 1e-12);
        }
    }

    #[test]
    fn extension_matches_the_reflection_formula() {
        let tau = 2.0 * std::f64::consts::PI;
        let g = Grid::interval(256, 0.0, 1.0);
        let f = GridFunction::sample_scalar(g.clone(), |x| (tau * x[0]).sin());
        let m = 2usize;
        let q = m + 2;
        let ext = extend(&f, m).unwrap();
        let c = reflection_weights(q);
        for k in 0..ext.grid.len() {
            let x = ext.grid.node1(k);
            if (-0.2..0.0).contains(&x) {
                let t = -x;
                let expect: f64 = c
                    .iter()
                    .enumerate()
                    .map(|(i, &ci)| ci * (tau * (i + 1) as f64 / q as f64 * t).sin())
                    .sum();
                assert!(
                    (ext.comp(0)[k] - expect).abs() < 1e-8,
                    "x = {x}: {} vs {expect}",
                    ext.comp(0)[k]
                );
            }
        }
    }

    #[test]
    fn extension_second_differences_are_continuous_at_endpoints() {
        let tau = 2.0 * std::f64::consts::PI;
        let g = Grid::interval(256, 0.0, 1.0);
        let f = GridFunction::sample_scalar(g.clone(), |x| (tau * x[0]).sin());
        let ext = extend(&f, 2).unwrap();
        let n = ext.grid.len();
        let h = ext.grid.spacing();
        let mm = g.n;
        let d2 = |k: usize| {
            (ext.comp(0)[(k + 1) % n] - 2.0 * ext.comp(0)[k] + ext.comp(0)[(k + n - 1) % n])
                / (h * h)
        };
        // An order-4 reflection matches derivatives through order 3, so the
        // second difference quotient varies by O(h) between consecutive
        // nodes across the seam at x = 0; a C^1-only extension would show an
        // O(1) jump there.
        for k in mm - 4..mm + 4 {
            let jump = (d2(k + 1) - d2(k)).abs();
            assert!(
                jump < 5.0 * tau.powi(3) * h,
                "second difference jumps by {jump} at node {k}"
            );
        }
    }

    #[test]
    fn tiny_interval_grid_cannot_give_jets() {
        let g = Grid::interval(8, 0.0, 1.0);
        let f = GridFunction::sample_scalar(g, |x| x[0]);
        match extend(&f, 2) {
            Err(Error::JetExtraction(_)) => {}
            other => panic!("expected jet extraction failure, got {other:?}"),
        }
    }

    #[test]
    fn cutoff_bands_are_exact() {
        let eps = 1.0 / 32.0;
        let g = Grid::interval(2048, 0.0, 1.0);
        let rho = cutoff(&g, eps).unwrap();
        for j in 0..g.n {
            let x = g.node1(j);
            let dist = x.min(1.0 - x);
            let v = rho.values.comp(0)[j];
            assert!((0.0..=1.0).contains(&v));
            if dist < 3.0 * eps {
                assert_eq!(v, 0.0, "x = {x}");
            }
            if dist >= 4.0 * eps {
                assert!((v - 1.0).abs() < 1e-12, "x = {x}");
            }
        }
        // Midpoint and near-boundary spot checks.
        let mid = rho.values.comp(0)[g.n / 2];
        assert!((mid - 1.0).abs() < 1e-12);
        let near = rho.values.comp(0)[(0.05 * g.n as f64) as usize];
        assert_eq!(near, 0.0);
    }

    #[test]
    fn cutoff_on_torus_is_one() {
        let g = Grid::torus(1, 64);
        let rho = cutoff(&g, 1.0 / 8.0).unwrap();
        assert!(rho.values.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn cutoff_rejects_eps_too_large() {
        let g = Grid::interval(128, 0.0, 1.0);
        match cutoff(&g, 0.25) {
            Err(Error::CutoffTooWide { .. }) => {}
            other => panic!("expected cutoff width rejection, got {other:?}"),
        }
    }

    #[test]
    fn cutoff_gradient_scales_like_inverse_eps() {
        let mut consts = Vec::new();
        for k in [16.0f64, 32.0, 64.0, 128.0, 256.0] {
            let eps = 1.0 / k;
            let n = (k as usize) * 64;
            let g = Grid::interval(n, 0.0, 1.0);
            let rho = cutoff(&g, eps).unwrap();
            let d = rho.values.difference_derivative();
            let sup = d.max_abs();
            consts.push(sup * eps);
        }
        let cmax = consts.iter().cloned().fold(0.0f64, f64::max);
        let cmin = consts.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(
            cmax / cmin < 1.5,
            "sup|rho'| * eps drifts across the sweep: {consts:?}"
        );
    }
}
