use crate::geom::{self, Vec3};

/// Rays closer than this to the origin are treated as self-hits.
pub const MIN_T: f64 = 1e-9;
/// Beams with `|dir . n_hat|` below this are parallel to the face.
pub const PARALLEL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    /// Distance along the (unit) ray direction.
    pub t: f64,
    pub point: Vec3,
}

/// Parametric ray/triangle test (Möller–Trumbore) with inclusive edges.
/// `dir` must be a unit vector so that `t` is a Euclidean distance.
#[inline]
pub fn ray_triangle_intersect(origin: Vec3, dir: Vec3, v0: Vec3, v1: Vec3, v2: Vec3) -> Option<RayHit> {
    let e1 = geom::sub(v1, v0);
    let e2 = geom::sub(v2, v0);
    let p = geom::cross(dir, e2);
    let det = geom::dot(e1, p);
    // det == -dir.(e1 x e2)
    let n_len = geom::norm(geom::cross(e1, e2));
    if det.abs() < PARALLEL_EPS * n_len || n_len == 0.0 {
        return None;
    }
    let inv = 1.0 / det;
    let s = geom::sub(origin, v0);
    let u = geom::dot(s, p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = geom::cross(s, e1);
    let v = geom::dot(dir, q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = geom::dot(e2, q) * inv;
    if t <= MIN_T {
        return None;
    }
    Some(RayHit {
        t,
        point: geom::add(origin, geom::scale(dir, t)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRI: [Vec3; 3] = [[1.0, -1.0, -1.0], [1.0, 1.0, -1.0], [1.0, 0.0, 1.0]];

    #[test]
    fn axis_hit() {
        let h = ray_triangle_intersect([0.0; 3], [1.0, 0.0, 0.0], TRI[0], TRI[1], TRI[2]).unwrap();
        assert!((h.t - 1.0).abs() < 1e-12);
        assert!(geom::dist(h.point, [1.0, 0.0, 0.0]) < 1e-12);
    }

    #[test]
    fn parallel_misses() {
        assert!(ray_triangle_intersect([0.0; 3], [0.0, 1.0, 0.0], TRI[0], TRI[1], TRI[2]).is_none());
    }

    #[test]
    fn behind_origin_misses() {
        assert!(ray_triangle_intersect([0.0; 3], [-1.0, 0.0, 0.0], TRI[0], TRI[1], TRI[2]).is_none());
        assert!(ray_triangle_intersect([2.0, 0.0, 0.0], [1.0, 0.0, 0.0], TRI[0], TRI[1], TRI[2]).is_none());
    }

    #[test]
    fn outside_misses_and_winding_is_irrelevant() {
        let d = geom::normalize([1.0, 3.0, 0.0]).unwrap();
        assert!(ray_triangle_intersect([0.0; 3], d, TRI[0], TRI[1], TRI[2]).is_none());
        let h = ray_triangle_intersect([0.0; 3], [1.0, 0.0, 0.0], TRI[0], TRI[2], TRI[1]);
        assert!(h.is_some());
    }
}
