//! Numerical machinery for the prescribed-curvature problem on the disk and
//! ball with negative interior and positive boundary curvature: explicit
//! bubble solutions on the half-space and the ball, the reduced energy Γ and
//! its small-λ expansion, and the Morse/degree existence certificates.
//!
//! The library is organized around the analytic pipeline:
//!
//! * [`geometry`] — the inversion map between the upper half-space and the
//!   unit ball, and its conformal factors;
//! * [`fields`] — exact polynomial curvature data `K`, `H` with the sphere
//!   calculus (normal derivatives, tangential Laplacians, half-Laplacian on
//!   the circle);
//! * [`quadrature`] — deterministic adaptive quadrature over the half-space,
//!   ball, sphere, and boundary hyperplane, with graded-mesh regularization
//!   for singular integrands;
//! * [`bubbles`] — the explicit solution families and their linearization
//!   kernels;
//! * [`energy`] — the perturbed energy functionals and the reduced energy Γ;
//! * [`expansion`] — the constants table, the boundary function ψ, the
//!   coefficient cascade Φ_m, and validation of the expansion against Γ;
//! * [`critical`] — critical-point search for ψ on the sphere and the
//!   degree-based existence certificate.

pub mod bubbles;
pub mod critical;
pub mod energy;
pub mod expansion;
pub mod fields;
pub mod geometry;
pub mod jets;
pub mod quadrature;
pub mod special;

pub use bubbles::BubbleParams;
pub use energy::EnergyInput;
pub use expansion::{ConstantsTable, PhiTable};
pub use fields::{PolyField, SphereFunction};
pub use geometry::{BallPoint, Dimension, HalfSpacePoint};
pub use quadrature::{IntegralResult, QuadratureSpec};
