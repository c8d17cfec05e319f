//! Error type shared by all modules.

use thiserror::Error;

/// Failure modes of solvers, probes, and data plumbing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid preset: {0}")]
    InvalidPreset(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("multi-index factorial overflows u128")]
    FactorialOverflow,

    #[error("{context}: no convergence after {iters} iterations, relative residual {achieved:.3e} > tol {tol:.3e}")]
    NonConvergence {
        context: String,
        iters: usize,
        achieved: f64,
        tol: f64,
    },

    #[error("{context}: negative curvature encountered at iteration {iter}; the coefficient field likely violates coercivity")]
    NegativeCurvature { context: String, iter: usize },

    #[error("mollifier kernel under-resolved: eps {eps} spans fewer than 2 grid cells (spacing {spacing})")]
    KernelUnderResolved { eps: f64, spacing: f64 },

    #[error("cutoff scale too large: need 5*eps < domain diameter, got eps {eps} on diameter {diameter}")]
    CutoffTooWide { eps: f64, diameter: f64 },

    #[error("extension jet extraction failed: {0}")]
    JetExtraction(String),

    #[error("nonzero mean input where zero mean is required: {comp} has relative mean {rel_mean:.3e}")]
    NonZeroMean { comp: String, rel_mean: f64 },

    #[error("dual-corrector divergence identity residual {residual:.3e} exceeds 1e-8")]
    DualIdentity { residual: f64 },

    #[error("quadrature under-resolved: {nodes_per_period} nodes per eps-period, need at least 64")]
    QuadratureUnderResolved { nodes_per_period: usize },

    #[error("resolution guard: fine grid N_f = {n_f} below 16/eps = {required} for eps = {eps}")]
    ResolutionGuard { n_f: usize, required: usize, eps: f64 },

    #[error("discretization guard: solves at h and h/2 disagree by {rel_gap:.3e} of the measured value, above the 0.02 certificate threshold; use a smaller h")]
    DiscretizationGuard { rel_gap: f64 },

    #[error("rate fit refused: error {err:.3e} at eps {eps} is within 10x of the solver floor {floor:.3e}")]
    FloorContamination { eps: f64, err: f64, floor: f64 },

    #[error("rate fit needs at least 3 positive data points, got {0}")]
    TooFewPoints(usize),

    #[error("least-squares fit basis is rank deficient on this ball (radius {r} spans too few grid cells)")]
    RankDeficientFit { r: f64 },

    #[error("norm exponent must satisfy q >= 1, got {0}")]
    InvalidExponent(f64),

    #[error("probe exponent must satisfy p > 2, got {0}")]
    InvalidReverseHolderExponent(f64),

    #[error("radius {r} outside the validity window [{lo}, {hi}]")]
    RadiusOutOfRange { r: f64, lo: f64, hi: f64 },

    #[error("coercivity probe: every test field had vanishing m-th derivatives")]
    AllTestFieldsDegenerate,

    #[error("constant-coefficient symbol block is singular: {0}")]
    SingularSymbol(String),

    #[error("corrector cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
