//! Space-time discontinuous Galerkin solver for a first-order model of
//! nonlinear acoustics.
//!
//! The discretization couples an upwind Friedrichs-system treatment of the
//! first-order part `M ∂_t u + A u` with an interior penalty method for the
//! damping terms `-D Δu` on tensor-product space-time meshes with per-cell
//! polynomial degrees. The nonlinear volume terms are handled by Newton's
//! method; the slab-wise block lower-triangular systems are solved with
//! GMRES and a block Gauss-Seidel preconditioner.
//!
//! Module map:
//! - [`model`]: PDE coefficients, the nonlinear operator, flux matrices and
//!   analytic data (manufactured solution, Gaussian bump excitation).
//! - [`mesh`]: tensor-product space-time meshes over axis-aligned
//!   quadrilateral grids, with faces, normals and boundary labels.
//! - [`space`]: broken tensor-product Legendre spaces, quadrature, dof maps
//!   and the projections used in the error analysis.
//! - [`forms`]: assembly of the discrete (bi)linear forms and the load
//!   functional, producing the slab-wise block system.
//! - [`linsolve`]: GMRES, the block Gauss-Seidel preconditioner, per-slab
//!   direct/iterative solvers and the sequential slab oracle.
//! - [`newton`]: the undamped Newton-Raphson loop on the discrete system.
//! - [`adapt`]: DG norms, the residual error indicator and maximum-strategy
//!   p-refinement/derefinement.
//! - [`analysis`]: goal functionals, error norms, convergence orders and
//!   discrete Fourier spectra.

pub mod adapt;
pub mod analysis;
pub mod forms;
pub mod linsolve;
pub mod mesh;
pub mod model;
pub mod newton;
pub mod space;

pub use model::ModelParams;
