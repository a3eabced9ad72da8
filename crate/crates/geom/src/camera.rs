//! Pinhole camera: world->camera extrinsic, intrinsics, projection and
//! continuous-coordinate bilinear sampling.
//!
//! Pixel convention: continuous coordinate u in [0, W) covers the image;
//! texel (ix, iy) occupies [ix, ix+1) x [iy, iy+1) with its center at
//! half-integer coordinates.

use nalgebra::{Matrix3, Point3, Vector3};

use crate::error::{GeomError, Result};

pub const NEAR_PLANE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct Camera {
    /// World->camera rotation (orthonormal, det +1).
    pub rot: Matrix3<f64>,
    pub trans: Vector3<f64>,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    /// Camera-space z in meters.
    pub depth: f64,
}

impl Camera {
    pub fn new(
        rot: Matrix3<f64>,
        trans: Vector3<f64>,
        (fx, fy): (f64, f64),
        (cx, cy): (f64, f64),
        (height, width): (usize, usize),
    ) -> Result<Self> {
        let gram = rot * rot.transpose() - Matrix3::identity();
        if gram.abs().max() > 1e-5 {
            return Err(GeomError::InvalidCamera(
                "rotation block is not orthonormal".into(),
            ));
        }
        if (rot.determinant() - 1.0).abs() > 1e-5 {
            return Err(GeomError::InvalidCamera("rotation determinant != +1".into()));
        }
        if fx <= 0.0 || fy <= 0.0 {
            return Err(GeomError::InvalidCamera("focal lengths must be > 0".into()));
        }
        if height == 0 || width == 0 {
            return Err(GeomError::InvalidCamera("empty image".into()));
        }
        Ok(Self {
            rot,
            trans,
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    /// Camera from a 3x4 row-major extrinsic and 3x3 row-major intrinsic.
    pub fn from_parts(extrinsic: &[f64; 12], intrinsic: &[f64; 9], size: (usize, usize)) -> Result<Self> {
        let rot = Matrix3::new(
            extrinsic[0],
            extrinsic[1],
            extrinsic[2],
            extrinsic[4],
            extrinsic[5],
            extrinsic[6],
            extrinsic[8],
            extrinsic[9],
            extrinsic[10],
        );
        let trans = Vector3::new(extrinsic[3], extrinsic[7], extrinsic[11]);
        Self::new(
            rot,
            trans,
            (intrinsic[0], intrinsic[4]),
            (intrinsic[2], intrinsic[5]),
            size,
        )
    }

    /// Camera at `eye` looking toward `target` (+z forward, y down in image).
    pub fn look_at(
        eye: Point3<f64>,
        target: Point3<f64>,
        up: Vector3<f64>,
        focal: f64,
        (height, width): (usize, usize),
    ) -> Result<Self> {
        let fwd = (target - eye).normalize();
        let right = fwd.cross(&up).normalize();
        let down = fwd.cross(&right);
        let rot = Matrix3::from_rows(&[right.transpose(), down.transpose(), fwd.transpose()]);
        let trans = -rot * eye.coords;
        Self::new(
            rot,
            trans,
            (focal, focal),
            (width as f64 * 0.5, height as f64 * 0.5),
            (height, width),
        )
    }

    pub fn extrinsic_flat(&self) -> [f64; 12] {
        let r = &self.rot;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            self.trans[0],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            self.trans[1],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            self.trans[2],
        ]
    }

    pub fn intrinsic_flat(&self) -> [f64; 9] {
        [self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0]
    }

    pub fn to_camera(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rot * p.coords + self.trans)
    }

    /// Optical center in world space.
    pub fn center(&self) -> Point3<f64> {
        Point3::from(-(self.rot.transpose() * self.trans))
    }

    /// Continuous pixel coordinates plus camera-space depth.
    pub fn project(&self, p: &Point3<f64>) -> Result<Projection> {
        if !p.coords.iter().all(|v| v.is_finite()) {
            return Err(GeomError::Input("non-finite point".into()));
        }
        let c = self.to_camera(p);
        if c.z <= NEAR_PLANE {
            return Err(GeomError::BehindCamera);
        }
        Ok(Projection {
            u: self.fx * c.x / c.z + self.cx,
            v: self.fy * c.y / c.z + self.cy,
            depth: c.z,
        })
    }

    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Point3<f64> {
        let x = (u - self.cx) / self.fx * depth;
        let y = (v - self.cy) / self.fy * depth;
        let cam = Vector3::new(x, y, depth);
        Point3::from(self.rot.transpose() * (cam - self.trans))
    }

    pub fn in_bounds(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && u < self.width as f64 && v >= 0.0 && v < self.height as f64
    }
}

/// Bilinear taps (y, x, weight) for continuous coords (u, v) on an h x w
/// grid; None when the sample point falls outside the grid. Edge texels are
/// clamp-extended.
pub fn bilinear_taps(h: usize, w: usize, u: f64, v: f64) -> Option<[(usize, usize, f64); 4]> {
    if !(u >= 0.0 && u < w as f64 && v >= 0.0 && v < h as f64) {
        return None;
    }
    let x = u - 0.5;
    let y = v - 0.5;
    let x0f = x.floor();
    let y0f = y.floor();
    let wx = x - x0f;
    let wy = y - y0f;
    let clamp = |i: f64, hi: usize| -> usize { (i.max(0.0) as usize).min(hi - 1) };
    let x0 = clamp(x0f, w);
    let x1 = clamp(x0f + 1.0, w);
    let y0 = clamp(y0f, h);
    let y1 = clamp(y0f + 1.0, h);
    Some([
        (y0, x0, (1.0 - wy) * (1.0 - wx)),
        (y0, x1, (1.0 - wy) * wx),
        (y1, x0, wy * (1.0 - wx)),
        (y1, x1, wy * wx),
    ])
}

/// Dense CHW feature grid for sampling tests and debug dumps.
#[derive(Clone, Debug)]
pub struct FeatureGrid {
    pub h: usize,
    pub w: usize,
    pub c: usize,
    /// CHW row-major.
    pub data: Vec<f64>,
}

/// Bilinear feature fetch; (zero vector, false) when out of bounds.
pub fn sample_bilinear(grid: &FeatureGrid, u: f64, v: f64) -> (Vec<f64>, bool) {
    match bilinear_taps(grid.h, grid.w, u, v) {
        None => (vec![0.0; grid.c], false),
        Some(taps) => {
            let hw = grid.h * grid.w;
            let mut out = vec![0.0; grid.c];
            for &(y, x, wt) in &taps {
                let base = y * grid.w + x;
                for ch in 0..grid.c {
                    out[ch] += grid.data[ch * hw + base] * wt;
                }
            }
            (out, true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_cam() -> Camera {
        Camera::new(
            Matrix3::identity(),
            Vector3::zeros(),
            (100.0, 100.0),
            (64.0, 64.0),
            (128, 128),
        )
        .unwrap()
    }

    #[test]
    fn project_on_axis_hits_principal_point() {
        let cam = identity_cam();
        let p = cam.project(&Point3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!((p.u, p.v, p.depth), (64.0, 64.0, 1.0));
    }

    #[test]
    fn project_hand_computed_offset() {
        let cam = identity_cam();
        let p = cam.project(&Point3::new(0.1, 0.0, 1.0)).unwrap();
        assert!((p.u - 74.0).abs() < 1e-12);
        assert!((p.v - 64.0).abs() < 1e-12);
    }

    #[test]
    fn project_behind_camera_errors() {
        let cam = identity_cam();
        assert!(matches!(
            cam.project(&Point3::new(0.0, 0.0, -1.0)),
            Err(GeomError::BehindCamera)
        ));
    }

    #[test]
    fn rejects_bad_rotation_and_focal() {
        let mut rot = Matrix3::identity();
        rot[(0, 0)] = 2.0;
        assert!(Camera::new(rot, Vector3::zeros(), (1.0, 1.0), (0.0, 0.0), (4, 4)).is_err());
        assert!(Camera::new(
            Matrix3::identity(),
            Vector3::zeros(),
            (0.0, 1.0),
            (0.0, 0.0),
            (4, 4)
        )
        .is_err());
        // reflection (det -1)
        let mut refl = Matrix3::identity();
        refl[(2, 2)] = -1.0;
        assert!(Camera::new(refl, Vector3::zeros(), (1.0, 1.0), (0.0, 0.0), (4, 4)).is_err());
    }

    #[test]
    fn project_unproject_round_trip() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let cam = Camera::look_at(
            Point3::new(1.0, 2.0, -3.0),
            Point3::new(0.0, 1.0, 0.0),
            Vector3::y(),
            90.0,
            (96, 128),
        )
        .unwrap();
        for _ in 0..200 {
            let p = Point3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..2.0),
                rng.gen_range(-1.0..1.0),
            );
            let Ok(pr) = cam.project(&p) else { continue };
            let back = cam.unproject(pr.u, pr.v, pr.depth);
            assert!((back - p).norm() < 1e-5);
            let re = cam.project(&back).unwrap();
            assert!((re.u - pr.u).abs() < 1e-5 && (re.v - pr.v).abs() < 1e-5);
            assert!((re.depth - pr.depth).abs() < 1e-5);
        }
    }

    #[test]
    fn look_at_keeps_target_centered() {
        let cam = Camera::look_at(
            Point3::new(0.0, 1.0, -4.0),
            Point3::new(0.0, 1.0, 0.0),
            Vector3::y(),
            80.0,
            (64, 64),
        )
        .unwrap();
        let p = cam.project(&Point3::new(0.0, 1.0, 0.0)).unwrap();
        assert!((p.u - 32.0).abs() < 1e-9);
        assert!((p.v - 32.0).abs() < 1e-9);
        assert!((p.depth - 4.0).abs() < 1e-9);
        // world up should project above center (smaller v, y-down image)
        let top = cam.project(&Point3::new(0.0, 1.5, 0.0)).unwrap();
        assert!(top.v < 32.0);
    }

    #[test]
    fn bilinear_texel_center_is_exact() {
        let grid = FeatureGrid {
            h: 2,
            w: 3,
            c: 2,
            data: (0..12).map(|i| i as f64).collect(),
        };
        // texel (y=1, x=2) center at (2.5, 1.5)
        let (f, ok) = sample_bilinear(&grid, 2.5, 1.5);
        assert!(ok);
        assert_eq!(f, vec![5.0, 11.0]);
    }

    #[test]
    fn bilinear_midpoint_blends_evenly() {
        let grid = FeatureGrid {
            h: 1,
            w: 2,
            c: 1,
            data: vec![2.0, 6.0],
        };
        let (f, ok) = sample_bilinear(&grid, 1.0, 0.5);
        assert!(ok);
        assert!((f[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn bilinear_out_of_bounds_flags_false() {
        let grid = FeatureGrid {
            h: 2,
            w: 2,
            c: 3,
            data: vec![1.0; 12],
        };
        let (f, ok) = sample_bilinear(&grid, -5.0, -5.0);
        assert!(!ok);
        assert_eq!(f, vec![0.0; 3]);
        assert!(!sample_bilinear(&grid, 2.0, 1.0).1);
    }
}
