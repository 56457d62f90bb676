//! Grasp planning for the asymmetric three-contact GET gripper.
//!
//! The crate is split the same way the planning pipeline is:
//!
//! - [`geometry2d`]: binary mask to metric polygon, plus the planar primitives
//!   (centroid, point location, circle-finger sweeps, oriented bounding box).
//! - [`wrench`]: contact wrenches, force closure and the Ferrari-Canny metric in
//!   planar (3D wrench) and spatial (6D wrench) modes.
//! - [`planner2d`]: the polygon planner with its edge, vertex and hole samplers,
//!   and the oriented-bounding-box baseline.
//! - [`mesh3d`]: triangle meshes, BVH ray casting, area-weighted sampling and ICP.
//! - [`planner3d`]: the mesh planner built on ray-grid contact solving.
//!
//! All planners are deterministic functions of their inputs and a single seed.

pub mod geometry2d;
pub mod mesh3d;
pub mod planner2d;
pub mod planner3d;
pub mod rng;
pub mod wrench;
