//! Proximal reconstruction of `sigma_{x,tf}` on a pruned chord graph of the
//! unit disk from spot illumination.

mod geometry;
mod recover;
mod spots;

pub use geometry::{
    boundary_packing, build_skeleton, circle_points, covering_check, point_segment_distance, Chord, CoveringReport,
    SkeletonGraph,
};
pub use recover::{
    recover_sigma_skeleton, RecoveryOptions, RecoveryZones, SkeletonRecovery, SkeletonSample, SkippedSample,
};
pub use spots::{bfactor, chord_attenuation, LocalizedSource, SpotCorrelators, SpotField, NU_1};
