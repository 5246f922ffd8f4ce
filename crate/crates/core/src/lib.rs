//! Trait extraction and skeleton evaluation for labelled 3D plant point
//! clouds.
//!
//! The crate turns labelled scans into biologically meaningful traits
//! (volume, leaf area, stem length, organ counts, per-organ time series) and
//! scores estimated stem skeletons against ground-truth skeletons:
//!
//! - [`cloud`] / [`io`]: labelled point clouds, skeleton graphs and meshes
//!   in the dataset's file formats, plus dataset validation.
//! - [`volumetrics`]: voxel-occupancy plant volume.
//! - [`leafmesh`]: leaf surface reconstruction (2.5D Delaunay, ball
//!   pivoting, and a cleanup + multi-radius pivoting pipeline) and area
//!   error metrics.
//! - [`skeletor`]: stem skeleton estimation (geodesic binning and a 1D
//!   self-organizing map) and skeleton geometry queries.
//! - [`skelmatch`]: dense polyline graph matching of estimated skeletons
//!   against ground truth with precision/recall/F1, matched length, and
//!   length error.
//! - [`tracking`]: organ counts, petiole-to-leaf assignment, and per-plant
//!   trait time series.
//! - [`synth`]: deterministic synthetic scans with exact ground truth.
//!
//! Geometry is generic over the scalar type via [`scalar::Real`]; the
//! crate-root aliases pin the `f64` instantiations used by I/O and the CLI.

pub mod cloud;
pub mod error;
pub mod geom;
pub mod io;
pub mod kdtree;
pub mod leafmesh;
pub mod mesh;
pub mod scalar;
pub mod skeleton;
pub mod skeletor;
pub mod skelmatch;
pub mod synth;
pub mod tracking;
pub mod volumetrics;

pub use error::{Error, Result};
pub use scalar::Real;

/// Concrete `f64` instantiations; the generic types default to `f64` as
/// well, so these mainly serve as the vocabulary of the I/O layer.
pub type Point3 = geom::Vec3<f64>;
pub type Cloud = cloud::LabeledPointCloud<f64>;
pub type StemSkeleton = skeleton::Skeleton<f64>;
pub type LeafMesh = mesh::TriangleMesh<f64>;
