//! Triangle meshes for leaf surfaces.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::scalar::{real, Real};

/// Area below which a triangle is treated as degenerate and dropped.
pub const DEGENERATE_AREA_MM2: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TriangleMesh<T = f64> {
    vertices: Vec<Vec3<T>>,
    triangles: Vec<[u32; 3]>,
}

impl<T: Real> TriangleMesh<T> {
    /// Builds a mesh, rejecting out-of-range indices and dropping
    /// zero-area triangles.
    pub fn new(vertices: Vec<Vec3<T>>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (i, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v as usize >= n) {
                return Err(Error::DanglingEdgeIndex {
                    edge: i,
                    index: *t.iter().max().unwrap() as usize,
                    vertex_count: n,
                });
            }
        }
        let eps = real::<T>(DEGENERATE_AREA_MM2);
        let triangles = triangles
            .into_iter()
            .filter(|t| triangle_area(vertices[t[0] as usize], vertices[t[1] as usize], vertices[t[2] as usize]) >= eps)
            .collect();
        Ok(Self { vertices, triangles })
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Total surface area in square millimetres (each triangle counted
    /// once).
    pub fn area(&self) -> T {
        let mut sum = T::zero();
        for t in &self.triangles {
            sum += triangle_area(
                self.vertices[t[0] as usize],
                self.vertices[t[1] as usize],
                self.vertices[t[2] as usize],
            );
        }
        sum
    }
}

pub fn triangle_area<T: Real>(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> T {
    (b - a).cross(c - a).norm() / real(2.0)
}

/// Surface area of a mesh; alias for [`TriangleMesh::area`] kept as a free
/// function for symmetry with the other per-mesh measurements.
pub fn mesh_area<T: Real>(mesh: &TriangleMesh<T>) -> T {
    mesh.area()
}
