//! Relativistic kinematics in the Chang-Tangherlini (CT) clock
//! synchronization and the Poincare-covariant quantum mechanics of a free
//! massive particle built on top of it.
//!
//! The crate is organised bottom-up:
//!
//! * [`kinematics`]: four-velocities of the preferred frame, CT frame
//!   transforms `D(Lambda, u)`, the intertwiner `T(u)`, metrics and
//!   light-signal speeds.
//! * [`classical`]: Lagrangian, Hamiltonian and the covariant Poisson
//!   bracket of a free particle.
//! * [`spin`]: spin-`s` matrices, rotation representations and the
//!   frame-dependent spin tensors `S_ij(u)`.
//! * [`representation`]: momentum eigenbasis, translations, Wigner rotations
//!   and the Lorentz action on finite superpositions.
//! * [`wavepacket`]: momentum-space wavefunctions on grids, the covariant
//!   position operator, localized states and the Newton-Wigner oracle.
//! * [`verify`]: randomized verification suites producing JSON reports.

pub mod classical;
pub mod error;
pub mod kinematics;
pub mod representation;
pub mod spin;
pub mod verify;
pub mod wavepacket;

pub use error::{CtError, Result};
pub use kinematics::{FourVector, FourVelocity, FrameTransform, MetricTensor, Variance};
