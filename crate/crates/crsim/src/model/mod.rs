//! Physical model of the driven two-transmon system: device parameters,
//! pulse envelopes, rotating-frame Hamiltonian assembly and the dressed
//! (static-eigenbasis) bookkeeping.

mod dressed;
mod hamiltonian;
mod params;
mod pulse;

pub use dressed::{diagonalize_static, resolve_drive_frame, resolved_basis, DressedBasis};
pub use hamiltonian::{build_drive_hamiltonian, build_static_hamiltonian, zz_approx, BareIndex};
pub use params::{Config, DecoherenceParams, DeviceParams, DriveFrame};
pub use pulse::{Pulse, Segment};
