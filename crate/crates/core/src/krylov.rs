//! Preconditioned Krylov solvers over plain `f64` slices.
//!
//! Convergence is measured in the preconditioner metric:
//! sqrt(<r, M^{-1} r> / <b, M^{-1} b>). With M the constant-coefficient
//! operator of matching order this is the natural dual norm for weak
//! residuals of the cell problem, which makes the stopping tolerance a bound
//! on the residual tested against all discrete periodic fields.

use crate::error::Error;

/// Outcome of a converged solve; attached to downstream certificates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iters: usize,
    pub rel_residual: f64,
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yv, &xv) in y.iter_mut().zip(x) {
        *yv += alpha * xv;
    }
}

/// Preconditioned conjugate gradients for a self-adjoint positive form.
/// `apply` must be symmetric with respect to the Euclidean pairing and
/// `precond` symmetric positive definite on the solution subspace.
/// Nonpositive curvature <p, A p> <= 0 on a nonvanishing direction aborts
/// with a coercivity report, since a coercive form cannot produce it.
pub fn pcg(
    apply: &dyn Fn(&[f64], &mut [f64]),
    precond: &dyn Fn(&[f64], &mut [f64]),
    b: &[f64],
    tol: f64,
    max_iter: usize,
    context: &str,
) -> Result<(Vec<f64>, SolveStats), Error> {
    let len = b.len();
    let mut x = vec![0.0; len];
    let mut r = b.to_vec();
    let mut z = vec![0.0; len];
    precond(&r, &mut z);
    let rho_b = dot(&r, &z);
    if rho_b <= 0.0 {
        // Zero (or preconditioner-null) right-hand side: x = 0 solves it.
        return Ok((
            x,
            SolveStats {
                iters: 0,
                rel_residual: 0.0,
            },
        ));
    }
    let mut rho = rho_b;
    let mut p = z.clone();
    let mut q = vec![0.0; len];
    for iter in 1..=max_iter {
        apply(&p, &mut q);
        let pap = dot(&p, &q);
        if pap <= 0.0 {
            if dot(&p, &p) == 0.0 {
                break;
            }
            return Err(Error::NegativeCurvature {
                context: context.to_string(),
                iter,
            });
        }
        let alpha = rho / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        precond(&r, &mut z);
        let rho_new = dot(&r, &z);
        let rel = (rho_new.max(0.0) / rho_b).sqrt();
        if rel <= tol {
            return Ok((
                x,
                SolveStats {
                    iters: iter,
                    rel_residual: rel,
                },
            ));
        }
        let beta = rho_new / rho;
        rho = rho_new;
        for (pv, &zv) in p.iter_mut().zip(&z) {
            *pv = zv + beta * *pv;
        }
    }
    let achieved = {
        precond(&r, &mut z);
        (dot(&r, &z).max(0.0) / rho_b).sqrt()
    };
    Err(Error::NonConvergence {
        context: context.to_string(),
        iters: max_iter,
        achieved,
        tol,
    })
}

/// Right-preconditioned BiCGstab for forms without the symmetry PCG needs
/// (coefficient tensors with A^{alpha beta}_{ij} != A^{beta alpha}_{ji}).
/// Same residual metric and error contract as [`pcg`].
pub fn bicgstab(
    apply: &dyn Fn(&[f64], &mut [f64]),
    precond: &dyn Fn(&[f64], &mut [f64]),
    b: &[f64],
    tol: f64,
    max_iter: usize,
    context: &str,
) -> Result<(Vec<f64>, SolveStats), Error> {
    let len = b.len();
    let mut x = vec![0.0; len];
    let mut r = b.to_vec();
    let mut z = vec![0.0; len];
    precond(&b, &mut z);
    let rho_b = dot(b, &z);
    if rho_b <= 0.0 {
        return Ok((
            x,
            SolveStats {
                iters: 0,
                rel_residual: 0.0,
            },
        ));
    }
    let rel_of = |r: &[f64], z: &mut Vec<f64>| -> f64 {
        precond(r, z);
        (dot(r, z).max(0.0) / rho_b).sqrt()
    };
    let r0 = r.clone();
    let mut rho = 1.0f64;
    let mut alpha = 1.0f64;
    let mut omega = 1.0f64;
    let mut v = vec![0.0; len];
    let mut p = vec![0.0; len];
    let mut phat = vec![0.0; len];
    let mut shat = vec![0.0; len];
    let mut t = vec![0.0; len];
    let mut rel = 1.0;
    for iter in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-300 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..len {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond(&p, &mut phat);
        apply(&phat, &mut v);
        let denom = dot(&r0, &v);
        if denom.abs() < 1e-300 {
            break;
        }
        alpha = rho / denom;
        let s: Vec<f64> = r.iter().zip(&v).map(|(rv, vv)| rv - alpha * vv).collect();
        rel = rel_of(&s, &mut z);
        if rel <= tol {
            axpy(alpha, &phat, &mut x);
            return Ok((
                x,
                SolveStats {
                    iters: iter,
                    rel_residual: rel,
                },
            ));
        }
        precond(&s, &mut shat);
        apply(&shat, &mut t);
        let tt = dot(&t, &t);
        if tt < 1e-300 {
            break;
        }
        omega = dot(&t, &s) / tt;
        if omega.abs() < 1e-300 {
            break;
        }
        axpy(alpha, &phat, &mut x);
        axpy(omega, &shat, &mut x);
        for i in 0..len {
            r[i] = s[i] - omega * t[i];
        }
        rel = rel_of(&r, &mut z);
        if rel <= tol {
            return Ok((
                x,
                SolveStats {
                    iters: iter,
                    rel_residual: rel,
                },
            ));
        }
    }
    Err(Error::NonConvergence {
        context: context.to_string(),
        iters: max_iter,
        achieved: rel,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pcg_solves_small_spd_system() {
        // 3x3 SPD matrix, identity preconditioner.
        let a = [4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0];
        let apply = move |x: &[f64], y: &mut [f64]| {
            for i in 0..3 {
                y[i] = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            }
        };
        let precond = |x: &[f64], y: &mut [f64]| y.copy_from_slice(x);
        let b = vec![1.0, 2.0, 3.0];
        let (x, stats) = pcg(&apply, &precond, &b, 1e-12, 50, "spd3").unwrap();
        let mut ax = vec![0.0; 3];
        apply(&x, &mut ax);
        for (av, bv) in ax.iter().zip(&b) {
            assert!((av - bv).abs() < 1e-10);
        }
        assert!(stats.iters <= 3 + 1);
    }

    #[test]
    fn pcg_reports_negative_curvature_on_indefinite_system() {
        let a = [1.0, 0.0, 0.0, -1.0];
        let apply = move |x: &[f64], y: &mut [f64]| {
            y[0] = a[0] * x[0];
            y[1] = a[3] * x[1];
        };
        let precond = |x: &[f64], y: &mut [f64]| y.copy_from_slice(x);
        let b = vec![0.0, 1.0];
        match pcg(&apply, &precond, &b, 1e-12, 50, "indefinite") {
            Err(Error::NegativeCurvature { .. }) => {}
            other => panic!("expected negative curvature, got {other:?}"),
        }
    }

    #[test]
    fn pcg_nonconvergence_carries_achieved_residual() {
        let a = [4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0];
        let apply = move |x: &[f64], y: &mut [f64]| {
            for i in 0..3 {
                y[i] = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            }
        };
        let precond = |x: &[f64], y: &mut [f64]| y.copy_from_slice(x);
        let b = vec![1.0, 2.0, 3.0];
        match pcg(&apply, &precond, &b, 1e-12, 1, "short") {
            Err(Error::NonConvergence { achieved, .. }) => assert!(achieved > 0.0),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn bicgstab_solves_nonsymmetric_system() {
        let a = [3.0, 1.0, 0.0, -1.0, 2.5, 0.5, 0.2, 0.0, 2.0];
        let apply = move |x: &[f64], y: &mut [f64]| {
            for i in 0..3 {
                y[i] = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            }
        };
        let precond = |x: &[f64], y: &mut [f64]| y.copy_from_slice(x);
        let b = vec![1.0, -2.0, 0.5];
        let (x, _) = bicgstab(&apply, &precond, &b, 1e-12, 100, "nonsym3").unwrap();
        let mut ax = vec![0.0; 3];
        apply(&x, &mut ax);
        for (av, bv) in ax.iter().zip(&b) {
            assert!((av - bv).abs() < 1e-9);
        }
    }
}
