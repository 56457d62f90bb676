//! Separating-axis overlap test between triangles and oriented boxes.

use nalgebra::{Point3, Vector3};

/// Box given in a local frame: corners `min`..`max` along the frame axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalBox {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl LocalBox {
    pub fn corners(&self) -> [Vector3<f64>; 8] {
        std::array::from_fn(|i| {
            Vector3::new(
                if i & 1 == 0 { self.min.x } else { self.max.x },
                if i & 2 == 0 { self.min.y } else { self.max.y },
                if i & 4 == 0 { self.min.z } else { self.max.z },
            )
        })
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|k| self.max[k] <= self.min[k])
    }
}

/// Exact overlap of a triangle and an axis-aligned box (both in the box frame).
pub fn triangle_box_overlap(tri: &[Vector3<f64>; 3], b: &LocalBox) -> bool {
    let c = (b.min + b.max) * 0.5;
    let h = (b.max - b.min) * 0.5;
    let v = tri.map(|p| p - c);
    let e = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];

    let separated = |axis: Vector3<f64>| {
        if axis.norm_squared() < 1e-30 {
            return false;
        }
        let p = v.map(|x| x.dot(&axis));
        let r = h.x * axis.x.abs() + h.y * axis.y.abs() + h.z * axis.z.abs();
        p.iter().cloned().fold(f64::INFINITY, f64::min) > r || p.iter().cloned().fold(f64::NEG_INFINITY, f64::max) < -r
    };

    for k in 0..3 {
        let mut axis = Vector3::zeros();
        axis[k] = 1.0;
        if separated(axis) {
            return false;
        }
    }
    if separated(e[0].cross(&e[1])) {
        return false;
    }
    for edge in &e {
        for k in 0..3 {
            let mut axis = Vector3::zeros();
            axis[k] = 1.0;
            if separated(edge.cross(&axis)) {
                return false;
            }
        }
    }
    true
}

/// World triangle expressed in a frame with the given origin and orthonormal axes (columns).
pub fn to_frame(tri: &[Point3<f64>; 3], origin: &Point3<f64>, axes: &nalgebra::Matrix3<f64>) -> [Vector3<f64>; 3] {
    tri.map(|p| axes.transpose() * (p - origin))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> LocalBox {
        LocalBox { min: Vector3::repeat(-1.0), max: Vector3::repeat(1.0) }
    }

    #[test]
    fn overlap_cases() {
        let t = |a: [f64; 3], b: [f64; 3], c: [f64; 3]| [Vector3::from(a), Vector3::from(b), Vector3::from(c)];
        // Fully inside.
        assert!(triangle_box_overlap(&t([0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, 0.0, 0.1]), &unit()));
        // Far away.
        assert!(!triangle_box_overlap(&t([3.0, 0.0, 0.0], [4.0, 0.0, 0.0], [3.0, 1.0, 0.0]), &unit()));
        // Large triangle slicing through the box with no vertex inside.
        assert!(triangle_box_overlap(&t([-10.0, -10.0, 0.0], [10.0, -10.0, 0.0], [0.0, 10.0, 0.0]), &unit()));
        // Triangle near a corner, separated only along an edge-cross axis.
        assert!(!triangle_box_overlap(&t([1.5, 1.2, 0.0], [1.2, 1.5, 0.0], [1.5, 1.5, 0.5]), &unit()));
        // Plane of the triangle misses the box.
        assert!(!triangle_box_overlap(&t([2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]).map(|v| v * 2.0), &unit()));
    }
}
