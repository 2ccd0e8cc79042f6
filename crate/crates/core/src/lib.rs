//! Numerical laboratory for Forrelation-based pseudorandom quantum states.
//!
//! The crate is organised bottom-up: [`boolfn`] holds truth tables and the
//! Walsh–Hadamard transform, [`fordist`] and [`walk`] sample the discrete
//! Forrelation distribution directly and through the polarizing random walk,
//! [`qstate`] simulates the states involved, [`hybrids`] builds the keyed
//! ensemble and the single-copy hybrids, [`games`] measures distinguishing
//! advantages, and [`recoracle`] is a toy model of the recursive oracle.
//!
//! Every random routine takes an explicit RNG or master seed; see [`rng`] for
//! how seeds are split across trials.

pub mod boolfn;
pub mod error;
pub mod fordist;
pub mod games;
pub mod hybrids;
pub mod oracle;
pub mod qstate;
pub mod recoracle;
pub mod rng;
pub mod stats;
pub mod walk;

pub use boolfn::{fwht, inverse_fwht, FourierSpectrum, TruthTable};
pub use error::{LabError, Result};
pub use fordist::{ForrelationPair, ForrelationParams};
pub use hybrids::{ChallengeLaw, HybridParams, KeyedEnsemble, OracleSpec};
pub use qstate::{DensityMatrix, StateVector};
pub use recoracle::RecursiveOracle;
pub use rng::{rng_from_seed, stream_rng, LabRng, Workers};
