//! Periodic entropy solutions of degenerate parabolic equations
//! `u_t + div(phi(u) - a(u) grad u) = 0` on a torus.
//!
//! * [`lattice`]: exact dual lattices, saturation and basis completion.
//! * [`model`]: piecewise-polynomial flux, diffusion and entropy data.
//! * [`condition`]: the nonlinearity-diffusivity decision, the canonical
//!   reduction and the travelling-wave counterexample.
//! * [`solver`]: a conservative monotone finite-volume scheme.
//! * [`diagnostics`]: discrete audits of conservation, entropy decrease,
//!   contraction, dissipation and decay.

pub mod condition;
pub mod diagnostics;
pub mod lattice;
pub mod model;
pub mod rational;
pub mod solver;
