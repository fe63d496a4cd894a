//! Solvers for the 2D Helmholtz impedance boundary value problem
//!
//! ```text
//!     Δu + k²u = 0           in Ω
//!     ∂u/∂n + iku = g        on ∂Ω
//! ```
//!
//! on rectangular domains, built around two families of methods:
//!
//! * **Collocation-trained neural fields** ([`network`]): fully connected
//!   networks with a complex output layer, trained by L-BFGS ([`lbfgs`]) on
//!   mean squared PDE and boundary residuals. Supported activations are
//!   `tanh`, `sin`, and the plane wave `x ↦ e^{ix}`, whose one-hidden-layer
//!   form is a sum of plane waves with learned amplitudes and directions.
//! * **Plane-wave Trefftz discretization** ([`pwpum`]): expansion in plane
//!   waves of exact wavenumber matched weakly on the boundary, including a
//!   wave-tracking variant (one learned rotation of the whole basis) and a
//!   rebasing path that reuses directions learned by a trained network.
//!
//! Derivatives for the residuals come from second-order forward jets
//! ([`jets`]); parameter gradients are obtained by reverse accumulation
//! through the jet computation so the cost per gradient is a constant
//! multiple of one loss evaluation.
//!
//! [`problems`] defines the benchmark problems (circular-wave and
//! plane-wave-mix exact solutions with derived boundary data), [`evaluation`]
//! the error metrics and direction-recovery reports, [`experiments`] the
//! seeded benchmark harness, and [`cli`] the command line front end used by
//! the `helmlab` binary.

pub mod cli;
pub mod evaluation;
pub mod experiments;
pub mod jets;
pub mod lbfgs;
pub mod network;
pub mod problems;
pub mod pwpum;
pub mod rng;
pub mod specfun;

pub use specfun::Cplx;
