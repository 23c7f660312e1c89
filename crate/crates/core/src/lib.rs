//! Lattice-coded private information retrieval over a block-fading Gaussian
//! multiple-access channel.
//!
//! The crate covers nested-lattice arithmetic ([`lattice`]), the channel
//! ([`channel`]), grouping of databases ([`partition`]), the PIR scheme
//! ([`pir`]) and its symmetric variants ([`spir`]), closed-form and
//! Monte-Carlo rates ([`rates`]), privacy audits ([`audit`]) and the
//! experiment drivers behind the command-line tool ([`harness`]).

pub mod audit;
pub mod channel;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod partition;
pub mod pir;
pub mod rates;
pub mod rng;
pub mod spir;

pub use audit::{AuditVerdict, Scheme};
pub use channel::ChannelState;
pub use error::{Error, Result};
pub use lattice::{FieldVector, LatticeKind, LatticePoint, NestedLatticePair};
pub use partition::{PartitionMethod, PartitionResult};
pub use pir::{Query, RetrievalOptions, RetrievalTrace, TransmitBlock};
pub use rates::RateReport;
pub use spir::{CommonRandomness, SphereCodebook};
