//! Numerical toolkit for quantitative periodic homogenization of 2m-order
//! elliptic systems in divergence form,
//!
//! ```text
//! (L_eps u)_i = (-1)^m sum_{|alpha|=|beta|=m} D^alpha ( A^{alpha beta}_{ij}(x/eps) D^beta u_j ).
//! ```
//!
//! The crate computes the constructive objects of the theory and measures the
//! quantitative estimates attached to them:
//!
//! * cell correctors chi^gamma, the homogenized tensor A_bar, the flux field
//!   B, and the antisymmetric dual correctors (module [`cellproblem`]);
//! * the eps-smoothing operator S_eps, boundary cutoffs, and Hestenes
//!   extension of interval data (module [`smoothing`]);
//! * forward solvers: a spectral periodic solver for L_eps u = f, an exact
//!   Fourier solve for the homogenized operator, a 1D Dirichlet FEM for
//!   m in {1,2}, and quadrature-exact 1D kernel solutions (module [`solvers`]);
//! * two-scale remainders w_eps, discrete norms, convergence-slope fits, and
//!   the excess-decay / large-scale Lipschitz / reverse Holder probes
//!   (modules [`rates`], [`excess`], [`probes`]).
//!
//! Grids are uniform: the unit torus for periodic work, cell-centered
//! interval meshes for Dirichlet work. All tensor storage uses the canonical
//! multi-index ordering of [`multiindex::enumerate`].

pub mod cache;
pub mod cellproblem;
pub mod coeffs;
pub mod error;
pub mod excess;
pub mod fft;
pub mod grid;
pub mod krylov;
pub mod multiindex;
pub mod operator;
pub mod probes;
pub mod rates;
pub mod report;
pub mod smoothing;
pub mod solvers;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
