//! Body pose: 24 axis-angle joint rotations plus a global translation.

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::error::{GeomError, Result};

pub const NUM_JOINTS: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct Pose {
    /// Axis-angle per joint, radians; magnitudes canonicalized to [0, 2*pi).
    pub joint_rotations: [[f64; 3]; NUM_JOINTS],
    pub global_translation: [f64; 3],
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            joint_rotations: [[0.0; 3]; NUM_JOINTS],
            global_translation: [0.0; 3],
        }
    }

    pub fn new(joint_rotations: [[f64; 3]; NUM_JOINTS], global_translation: [f64; 3]) -> Result<Self> {
        for r in joint_rotations.iter().flatten() {
            if !r.is_finite() {
                return Err(GeomError::Input("non-finite pose rotation".into()));
            }
        }
        if !global_translation.iter().all(|t| t.is_finite()) {
            return Err(GeomError::Input("non-finite pose translation".into()));
        }
        let mut canon = joint_rotations;
        for r in canon.iter_mut() {
            canonicalize(r);
        }
        Ok(Self {
            joint_rotations: canon,
            global_translation,
        })
    }

    pub fn from_flat(rotations: &[f64], translation: &[f64]) -> Result<Self> {
        if rotations.len() != NUM_JOINTS * 3 || translation.len() != 3 {
            return Err(GeomError::Input(format!(
                "pose wants {}x3 rotations and 3 translation, got {} and {}",
                NUM_JOINTS,
                rotations.len(),
                translation.len()
            )));
        }
        let mut jr = [[0.0; 3]; NUM_JOINTS];
        for (j, chunk) in rotations.chunks_exact(3).enumerate() {
            jr[j] = [chunk[0], chunk[1], chunk[2]];
        }
        Self::new(jr, [translation[0], translation[1], translation[2]])
    }

    pub fn rotation_matrix(&self, joint: usize) -> Matrix3<f64> {
        let aa = Vector3::new(
            self.joint_rotations[joint][0],
            self.joint_rotations[joint][1],
            self.joint_rotations[joint][2],
        );
        Rotation3::from_scaled_axis(aa).into_inner()
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::from_row_slice(&self.global_translation)
    }

    pub fn flat_rotations(&self) -> Vec<f64> {
        self.joint_rotations.iter().flatten().copied().collect()
    }
}

/// Reduce axis-angle magnitude into [0, 2*pi) keeping the rotation identical.
fn canonicalize(aa: &mut [f64; 3]) {
    let theta = (aa[0] * aa[0] + aa[1] * aa[1] + aa[2] * aa[2]).sqrt();
    if theta < std::f64::consts::TAU {
        return;
    }
    let reduced = theta % std::f64::consts::TAU;
    let scale = reduced / theta;
    for a in aa.iter_mut() {
        *a *= scale;
    }
}

/// Geodesic angle between two rotations given as axis-angle.
pub fn rotation_geodesic(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let ra = Rotation3::from_scaled_axis(Vector3::from_row_slice(a));
    let rb = Rotation3::from_scaled_axis(Vector3::from_row_slice(b));
    ra.rotation_to(&rb).angle()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalizes_large_magnitudes() {
        let mut jr = [[0.0; 3]; NUM_JOINTS];
        jr[0] = [std::f64::consts::TAU + 0.5, 0.0, 0.0];
        let p = Pose::new(jr, [0.0; 3]).unwrap();
        assert!((p.joint_rotations[0][0] - 0.5).abs() < 1e-12);
        // the rotation itself is unchanged
        assert!(rotation_geodesic(&jr[0], &p.joint_rotations[0]) < 1e-9);
    }

    #[test]
    fn rejects_nan() {
        let mut jr = [[0.0; 3]; NUM_JOINTS];
        jr[3] = [f64::NAN, 0.0, 0.0];
        assert!(Pose::new(jr, [0.0; 3]).is_err());
    }

    #[test]
    fn geodesic_of_equal_rotations_is_zero() {
        let a = [0.3, -0.2, 0.9];
        assert!(rotation_geodesic(&a, &a) < 1e-12);
        let b = [0.0, 0.0, 0.5];
        let c = [0.0, 0.0, -0.25];
        assert!((rotation_geodesic(&b, &c) - 0.75).abs() < 1e-12);
    }
}
