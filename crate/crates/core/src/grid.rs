//! Uniform grids and sampled fields with spectral calculus.
//!
//! Two grid kinds cover every computation in the crate:
//!
//! * torus grids: N^d nodes x_j = origin + j*L/N on a period-L cube, exact
//!   trigonometric interpolation, spectral derivatives of any order;
//! * interval grids (1D): N cell-centered nodes x_j = a + (j+1/2)h with
//!   h = (b-a)/N, midpoint quadrature, difference-quotient derivatives.
//!
//! Cell-centered interval nodes never coincide with finite-element mesh
//! nodes, so piecewise quantities are always sampled where they are smooth.

use crate::error::Error;
use crate::fft::{freq_vector, odd_nyquist, Fft};
use crate::multiindex::MultiIndex;
use num_complex::Complex64;

/// Spatial layout of a grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Cube of side `period` with corner `origin`, periodic on every axis.
    Torus { origin: f64, period: f64 },
    /// Interval (a, b), 1D only, cell-centered sampling.
    Interval { a: f64, b: f64 },
}

/// A uniform N^d grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub d: usize,
    pub n: usize,
    pub domain: Domain,
}

impl Grid {
    /// Unit torus [0,1)^d.
    pub fn torus(d: usize, n: usize) -> Self {
        Grid {
            d,
            n,
            domain: Domain::Torus {
                origin: 0.0,
                period: 1.0,
            },
        }
    }

    /// Torus cube with explicit corner and side length (1D extension grids).
    pub fn torus_scaled(d: usize, n: usize, origin: f64, period: f64) -> Self {
        assert!(period > 0.0);
        Grid {
            d,
            n,
            domain: Domain::Torus { origin, period },
        }
    }

    /// Cell-centered interval grid on (a, b).
    pub fn interval(n: usize, a: f64, b: f64) -> Self {
        assert!(b > a);
        Grid {
            d: 1,
            n,
            domain: Domain::Interval { a, b },
        }
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.domain, Domain::Torus { .. })
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Side length of the domain cube (or interval length).
    pub fn extent(&self) -> f64 {
        match self.domain {
            Domain::Torus { period, .. } => period,
            Domain::Interval { a, b } => b - a,
        }
    }

    /// Grid spacing along each axis.
    pub fn spacing(&self) -> f64 {
        self.extent() / self.n as f64
    }

    /// Quadrature weight of one node (midpoint rule; exact trapezoid on the
    /// torus).
    pub fn weight(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// Coordinates of the row-major node `idx`.
    pub fn node(&self, idx: usize, out: &mut [f64]) {
        assert_eq!(out.len(), self.d);
        let mut rem = idx;
        for axis in (0..self.d).rev() {
            let i = rem % self.n;
            rem /= self.n;
            out[axis] = match self.domain {
                Domain::Torus { origin, period } => {
                    origin + i as f64 * period / self.n as f64
                }
                Domain::Interval { a, b } => {
                    a + (i as f64 + 0.5) * (b - a) / self.n as f64
                }
            };
        }
    }

    /// 1D node coordinate.
    pub fn node1(&self, i: usize) -> f64 {
        assert_eq!(self.d, 1);
        let mut x = [0.0];
        self.node(i, &mut x);
        x[0]
    }
}

/// An n-component field sampled on a [`Grid`]. Component c occupies
/// `values[c*grid.len() .. (c+1)*grid.len()]` in row-major node order.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub grid: Grid,
    pub ncomp: usize,
    pub values: Vec<f64>,
    /// Set only by constructors that enforce a per-component mean within
    /// 1e-12 of the value scale.
    pub zero_mean: bool,
}

impl GridFunction {
    pub fn zeros(grid: Grid, ncomp: usize) -> Self {
        let len = grid.len() * ncomp;
        GridFunction {
            grid,
            ncomp,
            values: vec![0.0; len],
            zero_mean: true,
        }
    }

    pub fn from_values(grid: Grid, ncomp: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len() * ncomp);
        GridFunction {
            grid,
            ncomp,
            values,
            zero_mean: false,
        }
    }

    /// Sample a function of the node coordinates into component 0.
    pub fn sample_scalar(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let len = grid.len();
        let mut values = vec![0.0; len];
        let mut x = vec![0.0; grid.d];
        for (idx, slot) in values.iter_mut().enumerate() {
            grid.node(idx, &mut x);
            *slot = f(&x);
        }
        GridFunction::from_values(grid, 1, values)
    }

    pub fn comp(&self, c: usize) -> &[f64] {
        let len = self.grid.len();
        &self.values[c * len..(c + 1) * len]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        let len = self.grid.len();
        self.zero_mean = false;
        &mut self.values[c * len..(c + 1) * len]
    }

    pub fn mean(&self, c: usize) -> f64 {
        let comp = self.comp(c);
        comp.iter().sum::<f64>() / comp.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Subtract each component's mean and set the `zero_mean` flag.
    pub fn project_zero_mean(&mut self) {
        let len = self.grid.len();
        for c in 0..self.ncomp {
            let mean = self.mean(c);
            for v in &mut self.values[c * len..(c + 1) * len] {
                *v -= mean;
            }
        }
        self.zero_mean = true;
    }

    /// Normalized Fourier coefficients of one component (torus grids): the
    /// coefficients of the trigonometric interpolant through the samples.
    pub fn spectrum(&self, c: usize) -> Vec<Complex64> {
        assert!(self.grid.is_torus(), "spectrum needs a torus grid");
        let fft = Fft::new(self.grid.d, self.grid.n);
        let mut buf: Vec<Complex64> = self
            .comp(c)
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fft.forward(&mut buf);
        let scale = 1.0 / self.grid.len() as f64;
        for v in &mut buf {
            *v *= scale;
        }
        buf
    }

    /// D^alpha by spectral differentiation (torus grids only). Odd-order
    /// Nyquist planes are zeroed to keep real output consistent.
    pub fn derivative(&self, alpha: &MultiIndex) -> Result<GridFunction, Error> {
        if !self.grid.is_torus() {
            return Err(Error::GridMismatch(
                "spectral derivative requires a torus grid; interval fields use difference quotients".into(),
            ));
        }
        assert_eq!(alpha.dim(), self.grid.d);
        let d = self.grid.d;
        let n = self.grid.n;
        let period = self.grid.extent();
        let fft = Fft::new(d, n);
        let len = self.grid.len();
        let mut out = GridFunction::zeros(self.grid.clone(), self.ncomp);
        let mut xi = vec![0i64; d];
        let mut xi_phys = vec![0.0f64; d];
        let mut buf = vec![Complex64::default(); len];
        for c in 0..self.ncomp {
            for (b, &v) in buf.iter_mut().zip(self.comp(c)) {
                *b = Complex64::new(v, 0.0);
            }
            fft.forward(&mut buf);
            for (idx, b) in buf.iter_mut().enumerate() {
                freq_vector(idx, d, n, &mut xi);
                if odd_nyquist(&xi, alpha.components(), n) {
                    *b = Complex64::default();
                    continue;
                }
                for (p, &x) in xi_phys.iter_mut().zip(&xi) {
                    *p = x as f64 / period;
                }
                let mut sym = Complex64::new(1.0, 0.0);
                for (a, &p) in alpha.components().iter().zip(&xi_phys) {
                    let f = Complex64::new(0.0, 2.0 * std::f64::consts::PI * p);
                    for _ in 0..*a {
                        sym *= f;
                    }
                }
                *b *= sym;
            }
            fft.inverse(&mut buf);
            for (o, b) in out.comp_mut(c).iter_mut().zip(&buf) {
                *o = b.re;
            }
        }
        out.zero_mean = alpha.order() > 0;
        Ok(out)
    }

    /// First difference quotient of one component on an interval grid:
    /// central in the interior, one-sided at the two end nodes.
    pub fn difference_derivative(&self) -> GridFunction {
        assert!(!self.grid.is_torus(), "interval grids only");
        let n = self.grid.n;
        let h = self.grid.spacing();
        let mut out = GridFunction::zeros(self.grid.clone(), self.ncomp);
        for c in 0..self.ncomp {
            let src = self.comp(c);
            let dst = out.comp_mut(c);
            dst[0] = (src[1] - src[0]) / h;
            dst[n - 1] = (src[n - 1] - src[n - 2]) / h;
            for j in 1..n - 1 {
                dst[j] = (src[j + 1] - src[j - 1]) / (2.0 * h);
            }
        }
        out.zero_mean = false;
        out
    }

    /// Evaluate the trigonometric interpolant of a 1D torus component at an
    /// arbitrary point (Nyquist rendered as a cosine).
    pub fn eval_trig_1d(&self, c: usize, points: &[f64]) -> Vec<f64> {
        assert_eq!(self.grid.d, 1);
        let spec = self.spectrum(c);
        let n = self.grid.n;
        let (origin, period) = match self.grid.domain {
            Domain::Torus { origin, period } => (origin, period),
            _ => panic!("eval_trig_1d needs a torus grid"),
        };
        let tau = 2.0 * std::f64::consts::PI;
        points
            .iter()
            .map(|&x| {
                let t = (x - origin) / period;
                let mut acc = spec[0].re;
                let half = n / 2;
                for k in 1..n {
                    let xi = crate::fft::freq_of_bin(k, n);
                    if n % 2 == 0 && k == half {
                        acc += spec[k].re * (tau * half as f64 * t).cos();
                    } else {
                        let phase = tau * xi as f64 * t;
                        let e = Complex64::new(phase.cos(), phase.sin());
                        acc += (spec[k] * e).re;
                    }
                }
                acc
            })
            .collect()
    }

    /// Sample y -> f(R*y) on a unit-torus grid with `n_fine` points per axis,
    /// where f is this (unit-torus) function and R is a positive integer.
    /// Mode placement in Fourier space makes this exact trigonometric
    /// evaluation at the fine nodes, including aliased placements.
    pub fn compose_scaled(&self, c: usize, ratio: u32, n_fine: usize) -> GridFunction {
        assert!(self.grid.is_torus());
        assert_eq!(self.grid.extent(), 1.0, "cell functions live on the unit torus");
        let d = self.grid.d;
        let n_c = self.grid.n;
        let spec = self.spectrum(c);
        let fine_len = n_fine.pow(d as u32);
        let mut fine_spec = vec![Complex64::default(); fine_len];
        let r = ratio as i64;
        let nf = n_fine as i64;
        let mut xi = vec![0i64; d];
        let mut place = |xi: &[i64], coeff: Complex64| {
            let mut idx = 0usize;
            for &x in xi {
                let bin = ((r * x) % nf + nf) % nf;
                idx = idx * n_fine + bin as usize;
            }
            fine_spec[idx] += coeff;
        };
        // Self-conjugate Nyquist bins carry cosine content: split them into
        // +-N/2 halves before scaling so the composed samples stay real.
        let nyq = if n_c % 2 == 0 { (n_c / 2) as i64 } else { i64::MAX };
        for (idx, &coeff) in spec.iter().enumerate() {
            freq_vector(idx, d, n_c, &mut xi);
            let nyq_axes: Vec<usize> = (0..d).filter(|&a| xi[a] == nyq).collect();
            if nyq_axes.is_empty() {
                place(&xi, coeff);
            } else {
                let parts = 1usize << nyq_axes.len();
                let split = coeff / parts as f64;
                for mask in 0..parts {
                    let mut xim = xi.clone();
                    for (bit, &axis) in nyq_axes.iter().enumerate() {
                        if mask >> bit & 1 == 1 {
                            xim[axis] = -nyq;
                        }
                    }
                    place(&xim, split);
                }
            }
        }
        // fine_spec holds normalized coefficients; the inverse transform
        // divides by the grid size, so predo the scaling.
        for v in &mut fine_spec {
            *v *= fine_len as f64;
        }
        let fft = Fft::new(d, n_fine);
        fft.inverse(&mut fine_spec);
        let values: Vec<f64> = fine_spec.iter().map(|v| v.re).collect();
        let mut out = GridFunction::from_values(Grid::torus(d, n_fine), 1, values);
        out.zero_mean = self.zero_mean;
        out
    }
}

/// L2 grid inner product over all components (quadrature weighted).
pub fn dot(f: &GridFunction, g: &GridFunction) -> f64 {
    assert_eq!(f.grid, g.grid);
    assert_eq!(f.ncomp, g.ncomp);
    let w = f.grid.weight();
    f.values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        * w
}
