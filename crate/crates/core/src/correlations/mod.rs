//! Ground-state correlators, unfolding onto the circle and one-particle overlaps.

pub mod overlap;
pub mod series;
pub mod unfold;

pub use overlap::{
    g_ff, g_minus, gaussian_packet, overlap_at_epsilon, overlap_f, overlap_norm, Overlap, OverlapMethod,
    OverlapOptions, OverlapResult, WavePacketPair,
};
pub use series::{phi_phi_closed_form, phi_phi_series, theta_correlators, CorrelatorRequest, ModeSet, SeriesValue};
pub use unfold::{unfold, UnfoldedMap};
