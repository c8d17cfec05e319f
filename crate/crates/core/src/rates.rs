//! Two-scale remainder assembly, discrete norms, and convergence-slope
//! fits.
//!
//! The remainder of the corrector expansion is
//!
//!   w_eps = u_eps - u_0 - eps^m sum_{|g|=m} chi^g(x/eps) S^2_eps(D^g u0~)
//!           rho_eps,
//!
//! with chi evaluated by trigonometric interpolation of the cell-grid
//! corrector (exact mode placement on torus grids), u0~ the Hestenes
//! extension on intervals (the identity on the torus), S^2_eps the squared
//! smoothing operator and rho_eps the boundary cutoff. Its H^m smallness in
//! eps is the quantitative homogenization statement; slopes are measured by
//! least squares on (log eps, log error) with a floor guard that refuses
//! data within 10x of the solver accuracy.
//!
//! Norms: Lebesgue norms by grid quadrature of the pointwise Euclidean
//! magnitude; Sobolev seminorms by spectral derivatives on torus grids and
//! iterated difference quotients (one-sided at the two end nodes) on
//! intervals, with |grad^k f|^2 = sum_{|a|=k} (k!/a!) |D^a f|^2.

use crate::cellproblem::{default_max_iter, CorrectorSet};
use crate::coeffs::{CoefficientField, Preset};
use crate::error::Error;
use crate::grid::{Domain, Grid, GridFunction};
use crate::multiindex::enumerate;
use crate::smoothing::{cutoff, extend, restrict_to_interval, smooth_twice};
use crate::solvers::{
    solve_dirichlet_1d, solve_homogenized, solve_periodic, Dirichlet1D, PeriodicProblem,
};
use std::collections::BTreeMap;

/// Norm selector for measured errors.
#[derive(Debug, Clone, PartialEq)]
pub enum NormKind {
    L2,
    Lq(f64),
    /// H^k seminorm: derivatives of order exactly k.
    HSemi(usize),
    /// Full H^k norm: orders 0 through k.
    HFull(usize),
    /// Full W^{k,q} norm: L^q norms of the gradient magnitudes of orders
    /// 0 through k, combined in the q-th power.
    WFull(usize, f64),
}

impl std::fmt::Display for NormKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormKind::L2 => write!(f, "L2"),
            NormKind::Lq(q) => write!(f, "L{q}"),
            NormKind::HSemi(k) => write!(f, "H{k}_semi"),
            NormKind::HFull(k) => write!(f, "H{k}_full"),
            NormKind::WFull(k, q) => write!(f, "W{k}_{q}"),
        }
    }
}

fn lebesgue(f: &GridFunction, q: f64) -> f64 {
    let len = f.grid.len();
    let w = f.grid.weight();
    let mut acc = 0.0;
    for idx in 0..len {
        let mut mag2 = 0.0;
        for c in 0..f.ncomp {
            let v = f.comp(c)[idx];
            mag2 += v * v;
        }
        acc += mag2.sqrt().powf(q) * w;
    }
    // Normalize by the domain measure so norms are averages, matching the
    // unit-measure cell convention on every grid.
    let measure = w * len as f64;
    (acc / measure).powf(1.0 / q)
}

/// Pointwise magnitude of the order-k gradient as a scalar field:
/// |grad^k f|^2 = sum_{|a|=k} (k!/a!) sum_i |D^a f_i|^2, with spectral
/// derivatives on torus grids and iterated difference quotients on
/// intervals.
fn grad_mag(f: &GridFunction, k: usize) -> Result<GridFunction, Error> {
    let len = f.grid.len();
    let mut out = GridFunction::zeros(f.grid.clone(), 1);
    if k == 0 {
        for idx in 0..len {
            let mut mag2 = 0.0;
            for c in 0..f.ncomp {
                let v = f.comp(c)[idx];
                mag2 += v * v;
            }
            out.comp_mut(0)[idx] = mag2.sqrt();
        }
    } else if f.grid.is_torus() {
        let alphas = enumerate(f.grid.d, k as u32);
        let kfact: f64 = (1..=k as u64).product::<u64>() as f64;
        let mut acc = vec![0.0; len];
        for a in &alphas {
            let da = f.derivative(a)?;
            let weight = kfact / a.factorial()? as f64;
            for c in 0..da.ncomp {
                for (s, &v) in acc.iter_mut().zip(da.comp(c)) {
                    *s += weight * v * v;
                }
            }
        }
        for (o, s) in out.comp_mut(0).iter_mut().zip(&acc) {
            *o = s.sqrt();
        }
    } else {
        let mut g = f.clone();
        for _ in 0..k {
            g = g.difference_derivative();
        }
        return grad_mag(&g, 0);
    }
    out.zero_mean = false;
    Ok(out)
}

fn h_seminorm(f: &GridFunction, k: usize) -> Result<f64, Error> {
    Ok(lebesgue(&grad_mag(f, k)?, 2.0))
}

/// Grid norm of a sampled field.
pub fn norm(f: &GridFunction, kind: &NormKind) -> Result<f64, Error> {
    match kind {
        NormKind::L2 => Ok(lebesgue(f, 2.0)),
        NormKind::Lq(q) => {
            if *q < 1.0 {
                return Err(Error::InvalidExponent(*q));
            }
            Ok(lebesgue(f, *q))
        }
        NormKind::HSemi(k) => h_seminorm(f, *k),
        NormKind::HFull(k) => {
            let mut acc = 0.0;
            for j in 0..=*k {
                let s = h_seminorm(f, j)?;
                acc += s * s;
            }
            Ok(acc.sqrt())
        }
        NormKind::WFull(k, q) => {
            if *q < 1.0 {
                return Err(Error::InvalidExponent(*q));
            }
            let mut acc = 0.0;
            for j in 0..=*k {
                let s = lebesgue(&grad_mag(f, j)?, *q);
                acc += s.powf(*q);
            }
            Ok(acc.powf(1.0 / *q))
        }
    }
}

/// Assemble the two-scale remainder w_eps on the evaluation grid shared by
/// u_eps and u_0. Correctors with identically zero samples contribute
/// nothing, so w reduces to u_eps - u_0 bitwise in the constant case.
pub fn build_w(
    u_eps: &GridFunction,
    u0: &GridFunction,
    chi: &CorrectorSet,
    eps: f64,
) -> Result<GridFunction, Error> {
    let grid = &u_eps.grid;
    if u0.grid.n != grid.n || u0.grid.d != grid.d || u0.ncomp != u_eps.ncomp {
        return Err(Error::GridMismatch(
            "u_eps and u_0 must share one evaluation grid".into(),
        ));
    }
    let m = chi.field.m;
    let n = chi.field.n;
    if u_eps.ncomp != n {
        return Err(Error::GridMismatch(format!(
            "solutions have {} components, correctors act on {n}",
            u_eps.ncomp
        )));
    }
    let alphas = enumerate(grid.d, m as u32);
    let mut w = GridFunction::zeros(grid.clone(), n);
    for (ov, (ue, u0v)) in w
        .values
        .iter_mut()
        .zip(u_eps.values.iter().zip(&u0.values))
    {
        *ov = ue - u0v;
    }
    w.zero_mean = false;
    if chi.chi.iter().all(|c| c.max_abs() == 0.0) {
        return Ok(w);
    }

    let rho = cutoff(grid, eps)?;
    // Smoothed m-th derivatives of (the extension of) u_0, per gamma and
    // solution component.
    let smoothed: Vec<GridFunction> = match grid.domain {
        Domain::Torus { .. } => alphas
            .iter()
            .map(|a| smooth_twice(&u0.derivative(a)?, eps))
            .collect::<Result<_, _>>()?,
        Domain::Interval { .. } => {
            let ext = extend(u0, m)?;
            alphas
                .iter()
                .map(|a| {
                    let s = smooth_twice(&ext.derivative(a)?, eps)?;
                    Ok::<GridFunction, Error>(restrict_to_interval(&s, grid))
                })
                .collect::<Result<_, _>>()?
        }
    };
    // Corrector samples chi^g_{ij}(x/eps) on the evaluation grid.
    let ratio = (1.0 / eps).round();
    if ((1.0 / eps) - ratio).abs() > 1e-9 / eps || ratio < 1.0 {
        return Err(Error::InvalidPreset(format!(
            "eps = {eps} must have integer 1/eps for exact corrector placement"
        )));
    }
    let len = grid.len();
    for (gi, _) in alphas.iter().enumerate() {
        for j in 0..n {
            let cell = chi.chi_fn(gi, j);
            if cell.max_abs() == 0.0 {
                continue;
            }
            let sdd = &smoothed[gi];
            for i in 0..n {
                let chi_vals: Vec<f64> = match grid.domain {
                    Domain::Torus { .. } => {
                        cell.compose_scaled(i, ratio as u32, grid.n).values
                    }
                    Domain::Interval { .. } => {
                        let ys: Vec<f64> =
                            (0..len).map(|k| grid.node1(k) / eps).collect();
                        cell.eval_trig_1d(i, &ys)
                    }
                };
                let wi = w.comp_mut(i);
                let sj = sdd.comp(j);
                let rv = rho.values.comp(0);
                for idx in 0..len {
                    wi[idx] -= eps.powi(m as i32) * chi_vals[idx] * sj[idx] * rv[idx];
                }
            }
        }
    }
    Ok(w)
}

/// Least-squares slope of log err against log eps.
#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Fit a power law to (eps, err) data. Refuses fits contaminated by the
/// solver floor (any err below 10x `floor`) or with fewer than 3 points.
pub fn rate_fit(points: &[(f64, f64)], floor: f64) -> Result<RateFit, Error> {
    let valid: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(e, v)| e > 0.0 && v > 0.0 && v.is_finite())
        .collect();
    if valid.len() < 3 {
        return Err(Error::TooFewPoints(valid.len()));
    }
    for &(eps, err) in &valid {
        if err < 10.0 * floor {
            return Err(Error::FloorContamination { eps, err, floor });
        }
    }
    let n = valid.len() as f64;
    let xs: Vec<f64> = valid.iter().map(|&(e, _)| e.ln()).collect();
    let ys: Vec<f64> = valid.iter().map(|&(_, v)| v.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    if sxx == 0.0 {
        return Err(Error::TooFewPoints(1));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_tot: f64 = ys.iter().map(|y| (y - ybar) * (y - ybar)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let p = intercept + slope * x;
            (y - p) * (y - p)
        })
        .sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(RateFit {
        slope,
        intercept,
        r2,
    })
}

/// One measured error datum.
#[derive(Debug, Clone)]
pub struct RateRow {
    pub eps: f64,
    pub error: f64,
    pub norm_kind: String,
    pub slope_group: String,
    pub cert: String,
}

/// A rate experiment: rows plus the per-group fits.
#[derive(Debug, Clone)]
pub struct RateReport {
    pub experiment: String,
    pub rows: Vec<RateRow>,
    pub fits: Vec<(String, RateFit)>,
}

/// Enforce the dyadic sweep invariant: strictly decreasing with each eps
/// half its predecessor.
pub fn validate_dyadic(eps_list: &[f64]) -> Result<(), Error> {
    if eps_list.len() < 3 {
        return Err(Error::TooFewPoints(eps_list.len()));
    }
    for pair in eps_list.windows(2) {
        if (pair[1] - pair[0] / 2.0).abs() > 1e-12 * pair[0] {
            return Err(Error::InvalidPreset(format!(
                "eps list must decrease dyadically, got {} after {}",
                pair[1], pair[0]
            )));
        }
    }
    Ok(())
}

/// Dirichlet convergence experiment on (0, 1): for each eps solve the
/// oscillating problem at mesh width h and h/2 (the gap between the two is
/// the per-datum discretization certificate), the homogenized problem with
/// the tensor carried by `chi`, and record on a shared evaluation grid the
/// L2 and W^{m-1,4} errors of u_eps - u_0 and the H^m seminorm of w_eps.
#[derive(Debug, Clone)]
pub struct DirichletSweep {
    pub preset: Preset,
    pub m: usize,
    pub eps_list: Vec<f64>,
    /// Elements per coefficient period; the mesh for eps has
    /// nel_per_eps / eps elements.
    pub nel_per_eps: usize,
    /// Node count of the shared evaluation grid.
    pub n_eval: usize,
}

pub fn dirichlet_rate_sweep(
    cfg: &DirichletSweep,
    chi: &CorrectorSet,
    f: &dyn Fn(f64) -> f64,
) -> Result<RateReport, Error> {
    validate_dyadic(&cfg.eps_list)?;
    let m = cfg.m;
    let a_bar = chi.a_bar.get(0, 0, 0, 0);
    let eval = Grid::interval(cfg.n_eval, 0.0, 1.0);
    let xs: Vec<f64> = (0..cfg.n_eval).map(|i| eval.node1(i)).collect();
    let mut rows = Vec::new();
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut u_scale = 0.0f64;
    for &eps in &cfg.eps_list {
        let inv = (1.0 / eps).round() as usize;
        let nel = cfg.nel_per_eps * inv;
        let p = Dirichlet1D {
            a: cfg.preset.clone(),
            eps,
            m,
            nel,
            bc_left: [0.0; 2],
            bc_right: [0.0; 2],
        };
        let uh = solve_dirichlet_1d(&p, f)?;
        let uh2 = solve_dirichlet_1d(
            &Dirichlet1D {
                nel: 2 * nel,
                ..p.clone()
            },
            f,
        )?;
        let u0h = solve_dirichlet_1d(
            &Dirichlet1D {
                a: Preset::Constant { d: 1, c: a_bar },
                eps: 1.0,
                m,
                nel,
                bc_left: [0.0; 2],
                bc_right: [0.0; 2],
            },
            f,
        )?;
        let ue = GridFunction::from_values(eval.clone(), 1, uh.eval(&xs));
        let ue2 = GridFunction::from_values(eval.clone(), 1, uh2.eval(&xs));
        let u0 = GridFunction::from_values(eval.clone(), 1, u0h.eval(&xs));
        u_scale = u_scale.max(u0.max_abs());
        let mut diff = ue.clone();
        for (dv, v) in diff.values.iter_mut().zip(&u0.values) {
            *dv -= v;
        }
        let mut gap = ue.clone();
        for (gv, v) in gap.values.iter_mut().zip(&ue2.values) {
            *gv -= v;
        }
        let err_l2 = norm(&diff, &NormKind::L2)?;
        let rel_gap = norm(&gap, &NormKind::L2)? / err_l2;
        // A mesh-halving gap above 20% of the measured error means the
        // datum is discretization noise, not homogenization error.
        if !rel_gap.is_finite() || rel_gap > 0.2 {
            return Err(Error::DiscretizationGuard { rel_gap });
        }
        let cert = format!("{rel_gap:.3e}");
        let err_w = norm(&diff, &NormKind::WFull(m - 1, 4.0))?;
        let w = build_w(&ue, &u0, chi, eps)?;
        let err_rem = norm(&w, &NormKind::HSemi(m))?;
        for (kind, err, group) in [
            (NormKind::L2, err_l2, "u_minus_u0_L2"),
            (NormKind::WFull(m - 1, 4.0), err_w, "u_minus_u0_W"),
            (NormKind::HSemi(m), err_rem, "w_Hm_semi"),
        ] {
            rows.push(RateRow {
                eps,
                error: err,
                norm_kind: kind.to_string(),
                slope_group: group.to_string(),
                cert: cert.clone(),
            });
            groups.entry(group.to_string()).or_default().push((eps, err));
        }
    }
    let floor = 1e-12 * u_scale;
    let mut fits = Vec::new();
    for (group, pts) in groups {
        fits.push((group, rate_fit(&pts, floor)?));
    }
    Ok(RateReport {
        experiment: format!("dirichlet_m{m}_{}", cfg.preset.key()),
        rows,
        fits,
    })
}

/// Torus convergence experiment on the unit cell: for each eps solve the
/// fine periodic problem and the homogenized problem spectrally, and record
/// the L2 error of u_eps - u_0 and the H^m seminorm of w_eps. No boundary,
/// so the cutoff is identically 1 and the remainder rate is not limited by
/// a boundary layer.
#[derive(Debug, Clone)]
pub struct TorusSweep {
    pub m: usize,
    pub eps_list: Vec<f64>,
    /// Fine nodes per eps period; the grid for eps has n_per_eps / eps
    /// nodes per axis.
    pub n_per_eps: usize,
    pub tol: f64,
}

pub fn torus_rate_sweep(
    cfg: &TorusSweep,
    a: &CoefficientField,
    chi: &CorrectorSet,
    f: &dyn Fn(&[f64]) -> f64,
) -> Result<RateReport, Error> {
    validate_dyadic(&cfg.eps_list)?;
    let m = cfg.m;
    let mut rows = Vec::new();
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut u_scale = 0.0f64;
    for &eps in &cfg.eps_list {
        let inv = (1.0 / eps).round() as usize;
        let n_f = cfg.n_per_eps * inv;
        let grid = Grid::torus(a.d, n_f);
        let load = GridFunction::sample_scalar(grid.clone(), f);
        let p = PeriodicProblem {
            a: a.clone(),
            eps,
            f: load.clone(),
        };
        let (ue, stats) = solve_periodic(&p, cfg.tol, default_max_iter(a.d, n_f))?;
        let u0 = solve_homogenized(&chi.a_bar, m, &load)?;
        u_scale = u_scale.max(u0.max_abs());
        let mut diff = ue.clone();
        for (dv, v) in diff.values.iter_mut().zip(&u0.values) {
            *dv -= v;
        }
        let err_l2 = norm(&diff, &NormKind::L2)?;
        let w = build_w(&ue, &u0, chi, eps)?;
        let err_rem = norm(&w, &NormKind::HSemi(m))?;
        let cert = format!("{:.3e}", stats.rel_residual);
        for (kind, err, group) in [
            (NormKind::L2, err_l2, "u_minus_u0_L2"),
            (NormKind::HSemi(m), err_rem, "w_Hm_semi"),
        ] {
            rows.push(RateRow {
                eps,
                error: err,
                norm_kind: kind.to_string(),
                slope_group: group.to_string(),
                cert: cert.clone(),
            });
            groups.entry(group.to_string()).or_default().push((eps, err));
        }
    }
    let floor = cfg.tol * u_scale;
    let mut fits = Vec::new();
    for (group, pts) in groups {
        fits.push((group, rate_fit(&pts, floor)?));
    }
    Ok(RateReport {
        experiment: format!("torus_m{m}_{}", a.preset.key()),
        rows,
        fits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellproblem::solve_all;
    use crate::coeffs::sample;

    const TAU: f64 = 2.0 * std::f64::consts::PI;

    #[test]
    fn lebesgue_norm_of_a_single_mode() {
        let g = Grid::torus(1, 128);
        let f = GridFunction::sample_scalar(g, |x| (TAU * x[0]).sin());
        let l2 = norm(&f, &NormKind::L2).unwrap();
        assert!((l2 - 0.5f64.sqrt()).abs() < 1e-12);
        let l4 = norm(&f, &NormKind::Lq(4.0)).unwrap();
        // avg sin^4 = 3/8.
        assert!((l4 - (3.0f64 / 8.0).powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn sobolev_seminorms_spectral_and_difference() {
        let g = Grid::torus(1, 128);
        let f = GridFunction::sample_scalar(g, |x| (TAU * x[0]).sin());
        let h1 = norm(&f, &NormKind::HSemi(1)).unwrap();
        assert!((h1 - TAU * 0.5f64.sqrt()).abs() < 1e-10);
        let full = norm(&f, &NormKind::HFull(1)).unwrap();
        let expect = (0.5 + TAU * TAU * 0.5).sqrt();
        assert!((full - expect).abs() < 1e-10);

        let gi = Grid::interval(4096, 0.0, 1.0);
        let fi = GridFunction::sample_scalar(gi, |x| x[0] * x[0]);
        let h1i = norm(&fi, &NormKind::HSemi(1)).unwrap();
        // ||2x||_{L2} = 2/sqrt(3); difference quotients are O(h^2) inside
        // and O(h) at the two end nodes, which contribute O(h) to the norm.
        assert!(
            (h1i - 2.0 / 3.0f64.sqrt()).abs() < 2e-3,
            "{h1i} vs {}",
            2.0 / 3.0f64.sqrt()
        );
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let g = Grid::torus(1, 32);
        let f = GridFunction::zeros(g, 1);
        for kind in [
            NormKind::L2,
            NormKind::Lq(4.0),
            NormKind::HSemi(2),
            NormKind::HFull(2),
        ] {
            assert_eq!(norm(&f, &kind).unwrap(), 0.0);
        }
    }

    #[test]
    fn norm_rejects_sub_lebesgue_exponents() {
        let g = Grid::torus(1, 32);
        let f = GridFunction::zeros(g, 1);
        match norm(&f, &NormKind::Lq(0.5)) {
            Err(Error::InvalidExponent(_)) => {}
            other => panic!("expected exponent rejection, got {other:?}"),
        }
    }

    #[test]
    fn rate_fit_recovers_exact_power_laws() {
        let c = 0.37;
        let pts: Vec<(f64, f64)> = [8.0, 16.0, 32.0]
            .iter()
            .map(|k| (1.0 / k, c / k))
            .collect();
        let fit = rate_fit(&pts, 0.0).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        let pts: Vec<(f64, f64)> = [8.0f64, 16.0, 32.0]
            .iter()
            .map(|k| (1.0 / k, c / k.sqrt()))
            .collect();
        let fit = rate_fit(&pts, 0.0).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rate_fit_guards() {
        match rate_fit(&[(0.125, 1.0), (0.0625, 0.5)], 0.0) {
            Err(Error::TooFewPoints(2)) => {}
            other => panic!("expected point-count guard, got {other:?}"),
        }
        match rate_fit(
            &[(0.125, 1.0), (0.0625, 0.5), (0.03125, 1e-9)],
            1e-9,
        ) {
            Err(Error::FloorContamination { .. }) => {}
            other => panic!("expected floor guard, got {other:?}"),
        }
    }

    #[test]
    fn dyadic_validation() {
        assert!(validate_dyadic(&[0.125, 0.0625, 0.03125]).is_ok());
        assert!(validate_dyadic(&[0.125, 0.05, 0.025]).is_err());
        assert!(validate_dyadic(&[0.125, 0.0625]).is_err());
    }

    #[test]
    fn zero_corrector_reduces_w_to_the_solver_difference() {
        let a = sample(&Preset::Constant { d: 1, c: 2.0 }, 1, 16).unwrap();
        let mut chi = solve_all(&a, 1e-9, default_max_iter(1, 16)).unwrap();
        for c in chi.chi.iter_mut() {
            for v in c.values.iter_mut() {
                *v = 0.0;
            }
        }
        let g = Grid::torus(1, 64);
        let ue = GridFunction::sample_scalar(g.clone(), |x| (TAU * x[0]).sin());
        let u0 = GridFunction::sample_scalar(g, |x| (TAU * 2.0 * x[0]).cos());
        let w = build_w(&ue, &u0, &chi, 0.125).unwrap();
        for (wv, (a, b)) in w.values.iter().zip(ue.values.iter().zip(&u0.values)) {
            assert_eq!(*wv, a - b);
        }
    }

    #[test]
    fn dirichlet_sweep_finds_first_order_convergence() {
        let preset = Preset::Cosine1d { a0: 2.0, a1: 1.0 };
        let a = sample(&preset, 1, 64).unwrap();
        let chi = solve_all(&a, 1e-10, default_max_iter(1, 64)).unwrap();
        let cfg = DirichletSweep {
            preset,
            m: 1,
            eps_list: vec![0.125, 0.0625, 0.03125],
            nel_per_eps: 64,
            n_eval: 1024,
        };
        let report =
            dirichlet_rate_sweep(&cfg, &chi, &|x| (TAU * x).sin()).unwrap();
        assert_eq!(report.rows.len(), 9);
        let (_, fit) = report
            .fits
            .iter()
            .find(|(g, _)| g == "u_minus_u0_L2")
            .unwrap();
        assert!(
            fit.slope > 0.8 && fit.slope < 1.3,
            "L2 slope {} outside the first-order window",
            fit.slope
        );
        assert!(fit.r2 > 0.95, "log-log fit is not linear: r2 = {}", fit.r2);
        for row in &report.rows {
            let cert: f64 = row.cert.parse().unwrap();
            assert!(cert < 0.02, "discretization gap too large: {cert}");
        }
    }

    #[test]
    fn torus_remainder_shrinks_with_eps() {
        // Single-mode load on a 1D oscillating coefficient: the corrected
        // remainder must decrease from eps = 1/8 to 1/32.
        let preset = Preset::Cosine1d { a0: 2.0, a1: 1.0 };
        let a = sample(&preset, 1, 64).unwrap();
        let chi = solve_all(&a, 1e-10, default_max_iter(1, 64)).unwrap();
        let mut h1 = Vec::new();
        for &inv in &[8usize, 32] {
            let eps = 1.0 / inv as f64;
            let n_f = 32 * inv;
            let grid = Grid::torus(1, n_f);
            let f = GridFunction::sample_scalar(grid.clone(), |x| (TAU * x[0]).sin());
            let p = PeriodicProblem {
                a: a.clone(),
                eps,
                f: f.clone(),
            };
            let (ue, _) = solve_periodic(&p, 1e-10, default_max_iter(1, n_f)).unwrap();
            let u0 = solve_homogenized(&chi.a_bar, 1, &f).unwrap();
            let w = build_w(&ue, &u0, &chi, eps).unwrap();
            h1.push(norm(&w, &NormKind::HSemi(1)).unwrap());
        }
        assert!(
            h1[1] < 0.5 * h1[0],
            "remainder did not shrink: {h1:?}"
        );
    }

    #[test]
    fn torus_sweep_remainder_rate_is_first_order() {
        let preset = Preset::Cosine1d { a0: 2.0, a1: 1.0 };
        let a = sample(&preset, 1, 64).unwrap();
        let chi = solve_all(&a, 1e-10, default_max_iter(1, 64)).unwrap();
        let cfg = TorusSweep {
            m: 1,
            eps_list: vec![0.125, 0.0625, 0.03125],
            n_per_eps: 32,
            tol: 1e-10,
        };
        let report =
            torus_rate_sweep(&cfg, &a, &chi, &|x| (TAU * x[0]).sin()).unwrap();
        let (_, fit) = report
            .fits
            .iter()
            .find(|(g, _)| g == "w_Hm_semi")
            .unwrap();
        assert!(
            fit.slope > 0.8,
            "torus remainder slope {} below first order",
            fit.slope
        );
        assert!(fit.r2 > 0.9, "r2 = {}", fit.r2);
    }
}
