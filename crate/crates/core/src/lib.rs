//! Approximate message passing for synchronization over compact groups.
//!
//! The crate covers the whole pipeline: sampling spiked observations over
//! ℤ/L, U(1), SO(3) or an explicit finite group, the AMP iteration and its
//! baselines, the scalar state-evolution recurrence, and the Bethe free
//! energy used to locate statistical-to-computational gaps.

pub mod amp;
pub mod baselines;
pub mod error;
pub mod free_energy;
pub mod groups;
pub mod linalg;
pub mod metrics;
pub mod observation;
pub(crate) mod par;
pub mod rng;
pub mod state_evolution;

pub use error::{Error, Result};
pub use groups::{GroupElement, GroupKind, GroupModel, GroupSpec, IrrepDescriptor, RepType};
pub use linalg::{CMat, C64};
