//! Vertex visibility: fast z-buffer test plus a brute-force ray-cast oracle.

use nalgebra::{Point3, Vector3};

use crate::body::PosedMesh;
use crate::camera::Camera;
use crate::raster::DepthBuffer;

/// Default depth tolerance in meters for the z-buffer test.
pub const DEPTH_EPS: f64 = 1e-3;

/// A vertex is visible iff it projects in-bounds, its depth is within `eps`
/// of the z-buffer at its pixel, and its normal faces the camera.
pub fn vertex_visibility(
    mesh: &PosedMesh,
    cam: &Camera,
    zbuf: &DepthBuffer,
    eps: f64,
) -> Vec<bool> {
    let center = cam.center();
    mesh.vertices
        .iter()
        .zip(&mesh.normals)
        .map(|(p, n)| {
            let Ok(pr) = cam.project(p) else {
                return false;
            };
            if !cam.in_bounds(pr.u, pr.v) {
                return false;
            }
            let view = p - center;
            if n.dot(&view) >= 0.0 {
                return false;
            }
            let px = (pr.u as usize).min(zbuf.width - 1);
            let py = (pr.v as usize).min(zbuf.height - 1);
            pr.depth <= zbuf.at(px, py) + eps
        })
        .collect()
}

/// Watertight-enough Moller-Trumbore ray/triangle intersection.
/// Returns the ray parameter t of the hit, if any.
fn ray_triangle(
    orig: &Point3<f64>,
    dir: &Vector3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    if det.abs() < 1e-12 {
        return None;
    }
    let inv_det = 1.0 / det;
    let tvec = orig - a;
    let u = tvec.dot(&pvec) * inv_det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv_det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(e2.dot(&qvec) * inv_det)
}

/// Brute-force visibility oracle: cast a ray from the camera center to the
/// vertex; visible iff no non-incident triangle intersects strictly closer
/// (eps 1e-6 on the unit-length ray parameter).
pub fn visibility_oracle(mesh: &PosedMesh, cam: &Camera, vertex: usize) -> bool {
    let target = &mesh.vertices[vertex];
    let Ok(pr) = cam.project(target) else {
        return false;
    };
    if !cam.in_bounds(pr.u, pr.v) {
        return false;
    }
    let orig = cam.center();
    let dir = target - orig;
    let eps = 1e-6;
    for f in &mesh.faces {
        if f.contains(&(vertex as u32)) {
            continue;
        }
        let a = &mesh.vertices[f[0] as usize];
        let b = &mesh.vertices[f[1] as usize];
        let c = &mesh.vertices[f[2] as usize];
        if let Some(t) = ray_triangle(&orig, &dir, a, b, c) {
            if t > eps && t < 1.0 - eps {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::vertex_normals;
    use crate::raster::rasterize_depth;
    use nalgebra::Matrix3;

    fn camera_at_origin() -> Camera {
        Camera::new(
            Matrix3::identity(),
            Vector3::zeros(),
            (60.0, 60.0),
            (32.0, 32.0),
            (64, 64),
        )
        .unwrap()
    }

    fn front_triangle(z: f64) -> PosedMesh {
        // wound so the normal points toward a camera looking down +z
        let vertices = vec![
            Point3::new(-0.5, -0.5, z),
            Point3::new(0.0, 0.6, z),
            Point3::new(0.5, -0.5, z),
        ];
        let faces = vec![[0u32, 1, 2]];
        let normals = vertex_normals(&vertices, &faces);
        PosedMesh {
            vertices,
            normals,
            joints_world: vec![],
            faces,
        }
    }

    #[test]
    fn triangle_normal_faces_camera() {
        let mesh = front_triangle(2.0);
        assert!(mesh.normals[0].z < 0.0, "{:?}", mesh.normals[0]);
    }

    #[test]
    fn own_vertices_of_single_triangle_are_visible() {
        let cam = camera_at_origin();
        let mesh = front_triangle(2.0);
        let zbuf = rasterize_depth(&mesh, &cam);
        let vis = vertex_visibility(&mesh, &cam, &zbuf, DEPTH_EPS);
        assert_eq!(vis, vec![true; 3]);
        for i in 0..3 {
            assert!(visibility_oracle(&mesh, &cam, i));
        }
    }

    #[test]
    fn vertex_behind_triangle_is_occluded() {
        let cam = camera_at_origin();
        let near = front_triangle(2.0);
        // merge in a vertex behind the triangle on the optical axis
        let mut mesh = near.clone();
        mesh.vertices.push(Point3::new(0.0, 0.0, 5.0));
        mesh.normals.push(Vector3::new(0.0, 0.0, -1.0));
        let zbuf = rasterize_depth(&mesh, &cam);
        let vis = vertex_visibility(&mesh, &cam, &zbuf, DEPTH_EPS);
        assert!(!vis[3]);
        assert!(!visibility_oracle(&mesh, &cam, 3));
    }

    #[test]
    fn raster_nearest_depth_wins() {
        let cam = camera_at_origin();
        let mut mesh = front_triangle(1.0);
        let far = front_triangle(2.0);
        let base = mesh.vertices.len() as u32;
        mesh.vertices.extend(far.vertices);
        mesh.normals.extend(far.normals);
        mesh.faces.push([base, base + 1, base + 2]);
        let zbuf = rasterize_depth(&mesh, &cam);
        assert!((zbuf.at(32, 32) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_front_triangle_depth_written() {
        let cam = camera_at_origin();
        let mesh = front_triangle(2.0);
        let zbuf = rasterize_depth(&mesh, &cam);
        assert!((zbuf.at(32, 32) - 2.0).abs() < 1e-9);
        // back-facing copy rasterizes nothing
        let mut flipped = mesh.clone();
        flipped.faces[0] = [0, 2, 1];
        crate::body::compute_normals(&mut flipped);
        let zb2 = rasterize_depth(&flipped, &cam);
        assert!(zb2.data.iter().all(|d| d.is_infinite()));
    }
}
