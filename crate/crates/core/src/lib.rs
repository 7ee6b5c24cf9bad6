//! Hierarchically compressed radiosity view-factor matrices for triangle
//! meshes of rough terrain, and the thermal models built on top of them.
//!
//! The pipeline is:
//!
//! 1. build or load a [`mesh::TriangleMesh`] (spherical-cap crater generator,
//!    DEM grids, OBJ files);
//! 2. build a [`raytrace::Bvh`] for visibility queries;
//! 3. partition the face centroids with a [`spatial::SpatialTree`];
//! 4. assemble the view-factor matrix either in full ([`viewfactor`]) or
//!    hierarchically compressed ([`hmatrix::compress`]);
//! 5. drive equilibrium or time-dependent temperature solves ([`thermal`]).

pub mod hmatrix;
pub mod linalg;
pub mod mesh;
pub mod raytrace;
pub mod spatial;
pub mod thermal;
pub mod viewfactor;

pub use hmatrix::{CompressedViewFactor, VfBlock};
pub use linalg::{DenseBlock, LinearOperator, SparseCsr, TruncatedSvd};
pub use mesh::TriangleMesh;
pub use raytrace::Bvh;
pub use spatial::{SpatialTree, TreeKind};

/// Three-component vector in double precision, used for all geometry.
pub type Vec3 = nalgebra::Vector3<f64>;
