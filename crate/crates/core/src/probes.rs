//! Regularity probes measured on explicit solution families.
//!
//! Large-scale Lipschitz probe: for an L_eps-harmonic u,
//!
//!   sup_{r in [eps, 1/2]}  (avg_{B_r} |grad^m u|^2)^{1/2}
//!                          / [R^{-m} (avg_{B_R} |u|^2)^{1/2}]   at R = 1.
//!
//! Interior regularity at scales above eps makes the sup bounded uniformly
//! in eps; the sweep drivers measure that uniformity.
//!
//! Reverse Holder probe: (avg_B |grad^m u|^p)^{1/p} /
//! (avg_{2B} |grad^m u|^2)^{1/2} for p > 2, the self-improvement ratio of
//! the gradient of an L_eps-harmonic function.
//!
//! Smoothing-operator constants, measured on a fixed band-limited corpus:
//! the approximation constant ||S_eps f - f|| / (eps ||grad f||), the
//! oscillation-damping constant ||g(./eps) S_eps f|| / (||g||_{L2(Q)}
//! ||f||), and the boundary-layer constant ||S_eps f'||_{L2(Omega_eps)} /
//! (eps^{-1} ||f||_{L2(Omega~_{2eps})}) with Omega_eps the inner distance
//! layer and Omega~ its two-sided version.

use crate::cellproblem::default_max_iter;
use crate::coeffs::{CoefficientField, Preset};
use crate::error::Error;
use crate::excess::{ball_mean_pow, default_ball_nodes};
use crate::grid::{Grid, GridFunction};
use crate::multiindex::MultiIndex;
use crate::rates::{norm, NormKind};
use crate::smoothing::smooth;
use crate::solvers::{exact_kernel_solution_1d, solve_periodic, PeriodicProblem};

/// One measured probe value.
#[derive(Debug, Clone)]
pub struct ProbeRow {
    pub probe: String,
    pub eps: f64,
    /// Exponent p for Holder-type probes, radius r or grid size for the
    /// others.
    pub p_or_r: f64,
    pub value: f64,
}

/// Ratio of the ball-averaged m-th gradient to the unit-ball average of u,
/// per radius, plus the sup over the swept radii.
pub fn lipschitz_probe(
    u: &dyn Fn(f64) -> f64,
    dmu: &dyn Fn(f64) -> f64,
    x0: f64,
    eps: f64,
    radii: &[f64],
) -> Result<(f64, Vec<(f64, f64)>), Error> {
    let nq = default_ball_nodes(1.0, eps);
    let den = ball_mean_pow(u, x0, 1.0, 2.0, nq);
    let mut rows = Vec::with_capacity(radii.len());
    let mut sup = 0.0f64;
    for &r in radii {
        if r < eps || r > 0.5 {
            return Err(Error::RadiusOutOfRange {
                r,
                lo: eps,
                hi: 0.5,
            });
        }
        let num = ball_mean_pow(dmu, x0, r, 2.0, default_ball_nodes(r, eps));
        let ratio = if num == 0.0 && den == 0.0 {
            0.0
        } else {
            num / den
        };
        sup = sup.max(ratio);
        rows.push((r, ratio));
    }
    Ok((sup, rows))
}

/// Gradient self-improvement ratio on the doubled ball. Returns 0 when
/// numerator and denominator both vanish (a polynomial of degree below m).
pub fn reverse_holder_probe(
    dmu: &dyn Fn(f64) -> f64,
    x0: f64,
    r: f64,
    p: f64,
    eps: f64,
) -> Result<f64, Error> {
    if p <= 2.0 {
        return Err(Error::InvalidReverseHolderExponent(p));
    }
    let num = ball_mean_pow(dmu, x0, r, p, default_ball_nodes(r, eps));
    let den = ball_mean_pow(dmu, x0, 2.0 * r, 2.0, default_ball_nodes(2.0 * r, eps));
    if num == 0.0 && den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

/// Dyadic radii 1/2, 1/4, ... down to the first one >= eps.
pub fn dyadic_radii(eps: f64) -> Vec<f64> {
    let mut radii = Vec::new();
    let mut r = 0.5;
    while r >= eps {
        radii.push(r);
        r /= 2.0;
    }
    radii
}

/// The oscillating kernel family used by the probe sweeps: the solution of
/// a(x/eps) u^(m) = 1 with zero trailing constants, harmonic for the
/// 2m-order operator by construction.
fn kernel_family(
    preset: &Preset,
    m: usize,
    eps: f64,
) -> Result<crate::solvers::KernelSolution1d, Error> {
    let mut constants = vec![0.0; 2 * m];
    constants[0] = 1.0;
    exact_kernel_solution_1d(preset, eps, m, &constants, -1.25, 1.25, 64)
}

/// Lipschitz-probe sweep over eps: one row per radius plus the sup row
/// (p_or_r = 0) per eps.
pub fn lipschitz_sweep(
    preset: &Preset,
    m: usize,
    eps_list: &[f64],
) -> Result<Vec<ProbeRow>, Error> {
    let mut rows = Vec::new();
    for &eps in eps_list {
        let u = kernel_family(preset, m, eps)?;
        let radii = dyadic_radii(eps);
        let (sup, per_r) = lipschitz_probe(
            &|x| u.eval(x, 0),
            &|x| u.eval(x, m),
            0.0,
            eps,
            &radii,
        )?;
        for (r, v) in per_r {
            rows.push(ProbeRow {
                probe: "lipschitz".into(),
                eps,
                p_or_r: r,
                value: v,
            });
        }
        rows.push(ProbeRow {
            probe: "lipschitz_sup".into(),
            eps,
            p_or_r: 0.0,
            value: sup,
        });
    }
    Ok(rows)
}

/// Reverse-Holder sweep: one row per (eps, p) at a fixed ball radius.
pub fn reverse_holder_sweep(
    preset: &Preset,
    m: usize,
    eps_list: &[f64],
    ps: &[f64],
    r: f64,
) -> Result<Vec<ProbeRow>, Error> {
    let mut rows = Vec::new();
    for &eps in eps_list {
        let u = kernel_family(preset, m, eps)?;
        for &p in ps {
            let v = reverse_holder_probe(&|x| u.eval(x, m), 0.0, r, p, eps)?;
            rows.push(ProbeRow {
                probe: "reverse_holder".into(),
                eps,
                p_or_r: p,
                value: v,
            });
        }
    }
    Ok(rows)
}

/// Measured smoothing constants at one grid resolution.
#[derive(Debug, Clone, Copy)]
pub struct SmoothingConstants {
    /// ||S_eps f - f|| / (eps ||grad f||), max over the corpus.
    pub c_approx: f64,
    /// ||g(./eps) S_eps f|| / (||g||_{L2(Q)} ||f||), max over the corpus.
    pub c_bilinear: f64,
    /// ||S_eps f'||_{L2(Omega_eps)} / (eps^{-1}||f||_{L2(Omega~_{2eps})}),
    /// max over the corpus.
    pub c_layer: f64,
}

/// Band-limited corpus on the unit torus for the approximation and
/// oscillation-damping constants.
fn unit_corpus(grid: &Grid) -> Vec<GridFunction> {
    let tau = 2.0 * std::f64::consts::PI;
    vec![
        GridFunction::sample_scalar(grid.clone(), move |x| (tau * x[0]).sin()),
        GridFunction::sample_scalar(grid.clone(), move |x| {
            (2.0 * tau * x[0]).cos() + 0.5 * (tau * x[0]).sin()
        }),
        GridFunction::sample_scalar(grid.clone(), move |x| {
            (3.0 * tau * x[0] - 1.0).sin()
        }),
    ]
}

/// Periodic oscillation factors g with closed-form L2(Q) norms.
fn oscillation_corpus() -> Vec<(Box<dyn Fn(f64) -> f64>, f64)> {
    let tau = 2.0 * std::f64::consts::PI;
    vec![
        (Box::new(move |y: f64| (tau * y).cos()), 0.5f64.sqrt()),
        (
            Box::new(move |y: f64| 2.0 + (tau * y).cos()),
            4.5f64.sqrt(),
        ),
    ]
}

/// Integral of |f|^2 over the nodes where `inside` holds, by midpoint
/// quadrature.
fn restricted_l2(f: &GridFunction, inside: &dyn Fn(f64) -> bool) -> f64 {
    let w = f.grid.weight();
    let mut acc = 0.0;
    for i in 0..f.grid.len() {
        let x = f.grid.node1(i);
        if inside(x) {
            let v = f.comp(0)[i];
            acc += v * v * w;
        }
    }
    acc.sqrt()
}

/// Measure the three smoothing constants at resolution n per eps. The
/// boundary-layer constant lives on the covering torus of (0, 1) with
/// period 2, so its resolution is 2n nodes over twice the length.
pub fn smoothing_constants(
    n: usize,
    eps_list: &[f64],
) -> Result<Vec<(f64, SmoothingConstants)>, Error> {
    let tau = 2.0 * std::f64::consts::PI;
    let unit = Grid::torus(1, n);
    let corpus = unit_corpus(&unit);
    let oscillators = oscillation_corpus();
    let cover = Grid::torus_scaled(1, 2 * n, -0.5, 2.0);
    let layer_corpus: Vec<GridFunction> = vec![
        GridFunction::sample_scalar(cover.clone(), move |x| (0.5 * tau * x[0]).sin()),
        GridFunction::sample_scalar(cover.clone(), move |x| {
            (tau * x[0]).cos() + 0.4 * (0.5 * tau * x[0]).sin()
        }),
    ];
    let d1 = MultiIndex::new(vec![1]);
    let mut out = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let mut c_approx = 0.0f64;
        let mut c_bilinear = 0.0f64;
        for f in &corpus {
            let sf = smooth(f, eps)?;
            let mut diff = sf.clone();
            for (dv, v) in diff.values.iter_mut().zip(&f.values) {
                *dv -= v;
            }
            let grad = norm(f, &NormKind::HSemi(1))?;
            c_approx = c_approx.max(norm(&diff, &NormKind::L2)? / (eps * grad));
            let f_l2 = norm(f, &NormKind::L2)?;
            for (g, g_norm) in &oscillators {
                let mut prod = sf.clone();
                for i in 0..unit.len() {
                    prod.comp_mut(0)[i] *= g(unit.node1(i) / eps);
                }
                c_bilinear =
                    c_bilinear.max(norm(&prod, &NormKind::L2)? / (g_norm * f_l2));
            }
        }
        let mut c_layer = 0.0f64;
        for f in &layer_corpus {
            let sdf = smooth(&f.derivative(&d1)?, eps)?;
            let lhs = restricted_l2(&sdf, &|x| {
                (0.0..eps).contains(&x) || (1.0 - eps..1.0).contains(&x)
            });
            let rhs = restricted_l2(f, &|x| {
                x.abs() < 2.0 * eps || (x - 1.0).abs() < 2.0 * eps
            });
            c_layer = c_layer.max(lhs * eps / rhs);
        }
        out.push((
            eps,
            SmoothingConstants {
                c_approx,
                c_bilinear,
                c_layer,
            },
        ));
    }
    Ok(out)
}

/// Smoothing constants as probe rows; p_or_r records the grid resolution.
pub fn smoothing_constant_rows(
    n: usize,
    eps_list: &[f64],
) -> Result<Vec<ProbeRow>, Error> {
    let mut rows = Vec::new();
    for (eps, c) in smoothing_constants(n, eps_list)? {
        for (probe, value) in [
            ("smoothing_approx", c.c_approx),
            ("smoothing_bilinear", c.c_bilinear),
            ("smoothing_layer", c.c_layer),
        ] {
            rows.push(ProbeRow {
                probe: probe.into(),
                eps,
                p_or_r: n as f64,
                value,
            });
        }
    }
    Ok(rows)
}

/// Discrete energy bound: ||u_eps||_{H^m seminorm} / ||f||_{L2} across the
/// sweep, measured on the torus with a fixed single-mode load.
pub fn energy_bound_sweep(
    a: &CoefficientField,
    eps_list: &[f64],
    n_per_eps: usize,
    tol: f64,
) -> Result<Vec<ProbeRow>, Error> {
    let tau = 2.0 * std::f64::consts::PI;
    let mut rows = Vec::new();
    for &eps in eps_list {
        let inv = (1.0 / eps).round() as usize;
        let n_f = n_per_eps * inv;
        let grid = Grid::torus(a.d, n_f);
        let f = GridFunction::sample_scalar(grid, move |x| (tau * x[0]).sin());
        let p = PeriodicProblem {
            a: a.clone(),
            eps,
            f: f.clone(),
        };
        let (u, _) = solve_periodic(&p, tol, default_max_iter(a.d, n_f))?;
        let value = norm(&u, &NormKind::HSemi(a.m))? / norm(&f, &NormKind::L2)?;
        rows.push(ProbeRow {
            probe: "energy_bound".into(),
            eps,
            p_or_r: 0.0,
            value,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::sample;

    #[test]
    fn lipschitz_ratio_of_a_monomial_matches_hand_integration() {
        // u = x, m = 1: numerator 1, denominator (avg of x^2 on B_1)^{1/2}
        // = 1/sqrt(3), ratio sqrt(3) at every radius.
        let radii = [0.5, 0.25, 0.125];
        let (sup, rows) =
            lipschitz_probe(&|x| x, &|_| 1.0, 0.0, 0.0625, &radii).unwrap();
        for (_, v) in &rows {
            assert!((v - 3.0f64.sqrt()).abs() < 1e-4, "ratio {v}");
        }
        assert!((sup - 3.0f64.sqrt()).abs() < 1e-4);
        // u = x^2, m = 2: numerator 2, denominator (avg x^4)^{1/2} =
        // 1/sqrt(5).
        let (sup2, _) =
            lipschitz_probe(&|x| x * x, &|_| 2.0, 0.0, 0.0625, &radii).unwrap();
        assert!((sup2 - 2.0 * 5.0f64.sqrt()).abs() < 1e-3, "{sup2}");
    }

    #[test]
    fn lipschitz_vanishes_below_the_gradient_order() {
        // u affine, m = 2: the second derivative is zero, every ratio 0.
        let (sup, rows) =
            lipschitz_probe(&|x| 1.0 + 3.0 * x, &|_| 0.0, 0.0, 0.125, &[0.25])
                .unwrap();
        assert_eq!(sup, 0.0);
        assert_eq!(rows[0].1, 0.0);
    }

    #[test]
    fn lipschitz_rejects_radii_outside_the_window() {
        match lipschitz_probe(&|x| x, &|_| 1.0, 0.0, 0.125, &[0.0625]) {
            Err(Error::RadiusOutOfRange { .. }) => {}
            other => panic!("expected radius guard, got {other:?}"),
        }
        match lipschitz_probe(&|x| x, &|_| 1.0, 0.0, 0.125, &[0.75]) {
            Err(Error::RadiusOutOfRange { .. }) => {}
            other => panic!("expected radius guard, got {other:?}"),
        }
    }

    #[test]
    fn reverse_holder_exponent_guard() {
        match reverse_holder_probe(&|_| 1.0, 0.0, 0.25, 2.0, 0.125) {
            Err(Error::InvalidReverseHolderExponent(p)) => assert_eq!(p, 2.0),
            other => panic!("expected exponent guard, got {other:?}"),
        }
    }

    #[test]
    fn reverse_holder_degenerate_and_constant_cases() {
        assert_eq!(
            reverse_holder_probe(&|_| 0.0, 0.0, 0.25, 4.0, 0.125).unwrap(),
            0.0
        );
        let v = reverse_holder_probe(&|_| 2.0, 0.0, 0.25, 3.0, 0.125).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "constant integrand ratio {v}");
    }

    #[test]
    fn reverse_holder_bounded_across_the_sweep() {
        let preset = Preset::Cosine1d { a0: 2.0, a1: 1.0 };
        let rows = reverse_holder_sweep(
            &preset,
            1,
            &[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
            &[4.0],
            0.25,
        )
        .unwrap();
        let vals: Vec<f64> = rows.iter().map(|r| r.value).collect();
        let max = vals.iter().cloned().fold(0.0f64, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min > 0.0);
        assert!(max / min < 2.0, "ratios {vals:?}");
        // The integrand 1/a is bounded between 1/3 and 1, so each ratio
        // lies in [1/3, 3] with room to spare.
        for v in &vals {
            assert!(*v > 0.33 && *v < 3.0, "ratio {v} outside sanity band");
        }
    }

    #[test]
    fn lipschitz_sweep_is_uniform_in_eps() {
        let preset = Preset::Cosine1d { a0: 2.0, a1: 1.0 };
        let rows =
            lipschitz_sweep(&preset, 1, &[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0])
                .unwrap();
        let sups: Vec<f64> = rows
            .iter()
            .filter(|r| r.probe == "lipschitz_sup")
            .map(|r| r.value)
            .collect();
        assert_eq!(sups.len(), 3);
        let max = sups.iter().cloned().fold(0.0f64, f64::max);
        let min = sups.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min < 2.0, "sups {sups:?}");
    }

    #[test]
    fn smoothing_constants_stable_under_refinement() {
        let eps_list = [0.125, 0.0625];
        let coarse = smoothing_constants(256, &eps_list).unwrap();
        let fine = smoothing_constants(512, &eps_list).unwrap();
        for ((_, a), (_, b)) in coarse.iter().zip(&fine) {
            for (ca, cb) in [
                (a.c_approx, b.c_approx),
                (a.c_bilinear, b.c_bilinear),
                (a.c_layer, b.c_layer),
            ] {
                assert!(ca > 0.0 && cb > 0.0);
                let rel = (ca - cb).abs() / cb;
                assert!(rel < 0.2, "constant moved {rel} under refinement");
            }
        }
    }

    #[test]
    fn energy_bound_uniform_in_eps() {
        let a = sample(&Preset::Cosine1d { a0: 2.0, a1: 1.0 }, 1, 64).unwrap();
        let rows = energy_bound_sweep(
            &a,
            &[0.125, 0.0625, 0.03125],
            16,
            1e-9,
        )
        .unwrap();
        let vals: Vec<f64> = rows.iter().map(|r| r.value).collect();
        let max = vals.iter().cloned().fold(0.0f64, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min > 0.0);
        assert!(max / min < 1.5, "energy ratios {vals:?}");
    }
}
