//! Open Tavis-Cummings dynamics on simulated qubit registers.
//!
//! Two dilation-based algorithms are provided, each cross-checked against
//! exact Lindblad propagation:
//!
//! * [`splitj`]: per-term J-matrix dilations for dissipators, Trotterized
//!   coherent part.
//! * [`wml`]: randomized wave-matrix Lindbladization, sampling one
//!   Hamiltonian or Lindblad program per step.
//!
//! [`oracle`] holds the exact references (dense Liouvillian, Taylor
//! propagation, quantum trajectories), [`obs`] the observables, and
//! [`scenario`] the configuration-driven runner used by the command-line tool.

pub mod numkit;
pub mod obs;
pub mod oracle;
pub mod par;
pub mod qsim;
pub mod scenario;
pub mod splitj;
pub mod tcmodel;
pub mod wml;

pub use num_complex::Complex64 as C64;
