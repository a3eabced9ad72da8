//! Software z-buffer rasterization with back-face culling and the top-left
//! fill rule. Depth is screen-space barycentric-interpolated camera z.

use nalgebra::Point3;

use crate::body::PosedMesh;
use crate::camera::{Camera, NEAR_PLANE};

#[derive(Clone, Debug)]
pub struct DepthBuffer {
    pub height: usize,
    pub width: usize,
    /// Camera-space z per pixel; +inf where nothing was drawn.
    pub data: Vec<f64>,
}

impl DepthBuffer {
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// Full rasterization output: depth plus face id and barycentrics per pixel,
/// so shading passes can interpolate vertex attributes.
#[derive(Clone, Debug)]
pub struct RasterBuffers {
    pub height: usize,
    pub width: usize,
    pub depth: Vec<f64>,
    /// Covering face index or -1.
    pub face: Vec<i32>,
    /// Barycentric weights of the face's three vertices.
    pub bary: Vec<[f64; 3]>,
}

fn orient2d(ax: f64, ay: f64, bx: f64, by: f64, px: f64, py: f64) -> f64 {
    (bx - ax) * (py - ay) - (by - ay) * (px - ax)
}

/// Boundary pixels belong to top edges (horizontal, pointing +x) and left
/// edges (pointing -y), matching the positive-orientation inside test.
fn edge_accepts_boundary(ax: f64, ay: f64, bx: f64, by: f64) -> bool {
    let dy = by - ay;
    let dx = bx - ax;
    dy < 0.0 || (dy == 0.0 && dx > 0.0)
}

/// Rasterize a posed mesh. Front faces are those whose outward normal points
/// toward the camera (negative screen-space signed area in the original
/// winding); back faces are culled. Triangles with any vertex behind the
/// near plane are skipped.
pub fn rasterize(mesh: &PosedMesh, cam: &Camera) -> RasterBuffers {
    let (h, w) = (cam.height, cam.width);
    let mut out = RasterBuffers {
        height: h,
        width: w,
        depth: vec![f64::INFINITY; h * w],
        face: vec![-1; h * w],
        bary: vec![[0.0; 3]; h * w],
    };

    // project all vertices once
    let projected: Vec<Option<(f64, f64, f64)>> = mesh
        .vertices
        .iter()
        .map(|p| {
            let c = cam.to_camera(p);
            if c.z <= NEAR_PLANE {
                None
            } else {
                Some((
                    cam.fx * c.x / c.z + cam.cx,
                    cam.fy * c.y / c.z + cam.cy,
                    c.z,
                ))
            }
        })
        .collect();

    for (fi, f) in mesh.faces.iter().enumerate() {
        let (Some(pa), Some(pb), Some(pc)) = (
            projected[f[0] as usize],
            projected[f[1] as usize],
            projected[f[2] as usize],
        ) else {
            continue;
        };
        // front faces have negative signed area in the original winding
        let area_signed = orient2d(pa.0, pa.1, pb.0, pb.1, pc.0, pc.1);
        if area_signed >= 0.0 {
            continue;
        }
        // swap b and c so the inside test works with w >= 0
        let (pb, pc) = (pc, pb);
        let bary_order = [0usize, 2, 1]; // map back to original vertex order
        let area = -area_signed;

        let min_x = pa.0.min(pb.0).min(pc.0).floor().max(0.0) as usize;
        let max_x = (pa.0.max(pb.0).max(pc.0).ceil() as isize).min(w as isize - 1);
        let min_y = pa.1.min(pb.1).min(pc.1).floor().max(0.0) as usize;
        let max_y = (pa.1.max(pb.1).max(pc.1).ceil() as isize).min(h as isize - 1);
        if max_x < min_x as isize || max_y < min_y as isize {
            continue;
        }
        let accept_ab = edge_accepts_boundary(pa.0, pa.1, pb.0, pb.1);
        let accept_bc = edge_accepts_boundary(pb.0, pb.1, pc.0, pc.1);
        let accept_ca = edge_accepts_boundary(pc.0, pc.1, pa.0, pa.1);

        for py in min_y..=max_y as usize {
            let sy = py as f64 + 0.5;
            for px in min_x..=max_x as usize {
                let sx = px as f64 + 0.5;
                let w_ab = orient2d(pa.0, pa.1, pb.0, pb.1, sx, sy); // opposite c
                let w_bc = orient2d(pb.0, pb.1, pc.0, pc.1, sx, sy); // opposite a
                let w_ca = orient2d(pc.0, pc.1, pa.0, pa.1, sx, sy); // opposite b
                let inside = (w_bc > 0.0 || (w_bc == 0.0 && accept_bc))
                    && (w_ca > 0.0 || (w_ca == 0.0 && accept_ca))
                    && (w_ab > 0.0 || (w_ab == 0.0 && accept_ab));
                if !inside {
                    continue;
                }
                let la = w_bc / area;
                let lb = w_ca / area;
                let lc = w_ab / area;
                let z = la * pa.2 + lb * pb.2 + lc * pc.2;
                let idx = py * w + px;
                if z < out.depth[idx] {
                    out.depth[idx] = z;
                    out.face[idx] = fi as i32;
                    let mut bary = [0.0; 3];
                    bary[bary_order[0]] = la;
                    bary[bary_order[1]] = lb;
                    bary[bary_order[2]] = lc;
                    out.bary[idx] = bary;
                }
            }
        }
    }
    out
}

/// Depth-only rasterization.
pub fn rasterize_depth(mesh: &PosedMesh, cam: &Camera) -> DepthBuffer {
    let buffers = rasterize(mesh, cam);
    DepthBuffer {
        height: buffers.height,
        width: buffers.width,
        data: buffers.depth,
    }
}

/// World-space position of the surface covering a pixel, if any.
pub fn surface_point(buffers: &RasterBuffers, mesh: &PosedMesh, x: usize, y: usize) -> Option<Point3<f64>> {
    let idx = y * buffers.width + x;
    let fi = buffers.face[idx];
    if fi < 0 {
        return None;
    }
    let f = mesh.faces[fi as usize];
    let b = buffers.bary[idx];
    let p = mesh.vertices[f[0] as usize].coords * b[0]
        + mesh.vertices[f[1] as usize].coords * b[1]
        + mesh.vertices[f[2] as usize].coords * b[2];
    Some(Point3::from(p))
}
