//! Skinned body model: forward kinematics, linear blend skinning, vertex
//! normals, and the pose-distance pair used for source-frame selection.

use nalgebra::{Matrix3, Matrix4, Point3, Vector3, SVD};

use crate::error::{GeomError, Result};
use crate::pose::{rotation_geodesic, Pose, NUM_JOINTS};

#[derive(Clone, Debug)]
pub struct SkinnedBodyModel {
    /// Rest-pose vertices, V x 3 meters.
    pub template_vertices: Vec<Point3<f64>>,
    pub faces: Vec<[u32; 3]>,
    pub rest_joints: Vec<Point3<f64>>,
    /// parent[0] == -1; tree is acyclic rooted at joint 0.
    pub parents: Vec<i32>,
    /// Dense skinning weights, row-major V x J; rows sum to 1, entries >= 0.
    pub skin_weights: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PosedMesh {
    pub vertices: Vec<Point3<f64>>,
    /// Area-weighted unit vertex normals.
    pub normals: Vec<Vector3<f64>>,
    pub joints_world: Vec<Point3<f64>>,
    pub faces: Vec<[u32; 3]>,
}

impl SkinnedBodyModel {
    pub fn num_vertices(&self) -> usize {
        self.template_vertices.len()
    }

    pub fn num_joints(&self) -> usize {
        self.rest_joints.len()
    }

    /// Check every structural invariant; called by loaders and the synthesizer.
    pub fn validate(&self) -> Result<()> {
        let v = self.num_vertices();
        let j = self.num_joints();
        if j != NUM_JOINTS {
            return Err(GeomError::Model(format!(
                "expected {NUM_JOINTS} joints, got {j}"
            )));
        }
        if self.parents.len() != j {
            return Err(GeomError::Model("parents length != joint count".into()));
        }
        if self.parents[0] != -1 {
            return Err(GeomError::Model("joint 0 must be the root".into()));
        }
        for (i, &p) in self.parents.iter().enumerate().skip(1) {
            if p < 0 || p as usize >= j {
                return Err(GeomError::Model(format!("joint {i} has invalid parent {p}")));
            }
            if p as usize >= i {
                // parents must precede children, which also rules out cycles
                return Err(GeomError::Model(format!(
                    "joint {i} has parent {p}; joints must be topologically ordered"
                )));
            }
        }
        if self.skin_weights.len() != v * j {
            return Err(GeomError::Model("skin weight matrix is not V x J".into()));
        }
        for vi in 0..v {
            let row = &self.skin_weights[vi * j..(vi + 1) * j];
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(GeomError::Model(format!(
                    "skin weight row {vi} sums to {sum}"
                )));
            }
            if row.iter().any(|&w| w < 0.0) {
                return Err(GeomError::Model(format!("negative skin weight at row {vi}")));
            }
        }
        for f in &self.faces {
            if f.iter().any(|&i| i as usize >= v) {
                return Err(GeomError::Model(format!("face {f:?} indexes past {v} vertices")));
            }
        }
        Ok(())
    }
}

/// Rigid transform rotating by `rot` about `center`, then translating.
fn rot_about(center: &Point3<f64>, rot: &Matrix3<f64>, extra_translation: &Vector3<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(rot);
    let t = center.coords - rot * center.coords + extra_translation;
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
    m
}

/// Per-joint world transforms mapping rest space to posed space.
/// Zero pose yields identity (plus the global translation at every joint).
pub fn forward_kinematics(model: &SkinnedBodyModel, pose: &Pose) -> Result<Vec<Matrix4<f64>>> {
    if model.num_joints() != NUM_JOINTS {
        return Err(GeomError::Model("model joint count mismatch".into()));
    }
    let mut out = Vec::with_capacity(NUM_JOINTS);
    for j in 0..NUM_JOINTS {
        let rot = pose.rotation_matrix(j);
        let local = if j == 0 {
            rot_about(&model.rest_joints[0], &rot, &pose.translation())
        } else {
            rot_about(&model.rest_joints[j], &rot, &Vector3::zeros())
        };
        let world = if j == 0 {
            local
        } else {
            out[model.parents[j] as usize] * local
        };
        out.push(world);
    }
    Ok(out)
}

fn apply(m: &Matrix4<f64>, p: &Point3<f64>) -> Point3<f64> {
    m.transform_point(p)
}

/// Pose the template with linear blend skinning.
pub fn lbs_pose(model: &SkinnedBodyModel, pose: &Pose) -> Result<PosedMesh> {
    let transforms = forward_kinematics(model, pose)?;
    let j = model.num_joints();
    let mut vertices = Vec::with_capacity(model.num_vertices());
    for (vi, tv) in model.template_vertices.iter().enumerate() {
        let row = &model.skin_weights[vi * j..(vi + 1) * j];
        let mut acc = Vector3::zeros();
        for (ji, &w) in row.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            acc += apply(&transforms[ji], tv).coords * w;
        }
        vertices.push(Point3::from(acc));
    }
    let joints_world = model
        .rest_joints
        .iter()
        .enumerate()
        .map(|(ji, p)| apply(&transforms[ji], p))
        .collect();
    let normals = vertex_normals(&vertices, &model.faces);
    Ok(PosedMesh {
        vertices,
        normals,
        joints_world,
        faces: model.faces.clone(),
    })
}

/// Area-weighted vertex normals. Degenerate faces contribute nothing;
/// vertices in no face get an arbitrary unit fallback.
pub fn vertex_normals(vertices: &[Point3<f64>], faces: &[[u32; 3]]) -> Vec<Vector3<f64>> {
    let mut acc = vec![Vector3::zeros(); vertices.len()];
    for f in faces {
        let a = &vertices[f[0] as usize];
        let b = &vertices[f[1] as usize];
        let c = &vertices[f[2] as usize];
        // cross product length is twice the face area
        let n = (b - a).cross(&(c - a));
        for &vi in f {
            acc[vi as usize] += n;
        }
    }
    acc.into_iter()
        .map(|n| {
            let len = n.norm();
            if len < 1e-12 {
                Vector3::new(0.0, 0.0, 1.0)
            } else {
                n / len
            }
        })
        .collect()
}

/// Recompute the normals of an already-posed mesh.
pub fn compute_normals(mesh: &mut PosedMesh) {
    mesh.normals = vertex_normals(&mesh.vertices, &mesh.faces);
}

/// (torso rotation difference in radians, Procrustes pose difference in meters).
///
/// Torso is the geodesic angle between the root (pelvis) rotations. The
/// Procrustes part is joint-position RMSE after optimal similarity alignment
/// (Kabsch rotation plus uniform scale).
pub fn pose_distance(
    a: &Pose,
    b: &Pose,
    joints_a: &[Point3<f64>],
    joints_b: &[Point3<f64>],
) -> Result<(f64, f64)> {
    if joints_a.len() != joints_b.len() || joints_a.is_empty() {
        return Err(GeomError::Input("joint sets must match and be non-empty".into()));
    }
    let torso = rotation_geodesic(&a.joint_rotations[0], &b.joint_rotations[0]);
    let procrustes = procrustes_rmse(joints_a, joints_b)?;
    Ok((torso, procrustes))
}

/// RMSE of `b` against `a` after the optimal similarity transform of `a`.
pub fn procrustes_rmse(a: &[Point3<f64>], b: &[Point3<f64>]) -> Result<f64> {
    let n = a.len() as f64;
    let ca = a.iter().fold(Vector3::zeros(), |s, p| s + p.coords) / n;
    let cb = b.iter().fold(Vector3::zeros(), |s, p| s + p.coords) / n;
    let mut h = Matrix3::<f64>::zeros();
    let mut var_a = 0.0;
    for (pa, pb) in a.iter().zip(b) {
        let da = pa.coords - ca;
        let db = pb.coords - cb;
        h += da * db.transpose();
        var_a += da.norm_squared();
    }
    if var_a < 1e-18 {
        return Err(GeomError::Alignment(
            "degenerate joint set: all points coincide".into(),
        ));
    }
    let svd = SVD::new(h, true, true);
    let u = svd.u.ok_or_else(|| GeomError::Alignment("svd failed".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| GeomError::Alignment("svd failed".into()))?;
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant();
    let mut s = Matrix3::identity();
    if d < 0.0 {
        s[(2, 2)] = -1.0;
    }
    let rot = v * s * u.transpose();
    let sv = svd.singular_values;
    let trace = sv[0] + sv[1] + sv[2] * s[(2, 2)];
    let scale = trace / var_a;

    let mut sq = 0.0;
    for (pa, pb) in a.iter().zip(b) {
        let da = pa.coords - ca;
        let db = pb.coords - cb;
        let residual = scale * (rot * da) - db;
        sq += residual.norm_squared();
    }
    Ok((sq / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_joint_chain_model() -> SkinnedBodyModel {
        // joint 0 at origin, joint 1 one meter up +y, rest of SMPL tree collapsed
        let mut rest = vec![Point3::origin(); NUM_JOINTS];
        rest[3] = Point3::new(0.0, 1.0, 0.0); // use joint 3 (child of 0)
        rest[6] = Point3::new(0.0, 2.0, 0.0); // child of 3
        let parents = crate::synth::SMPL_PARENTS.to_vec();
        // one vertex rigidly attached to joint 3
        let mut weights = vec![0.0; NUM_JOINTS];
        weights[3] = 1.0;
        SkinnedBodyModel {
            template_vertices: vec![Point3::new(0.5, 1.5, 0.0)],
            faces: vec![],
            rest_joints: rest,
            parents,
            skin_weights: weights,
        }
    }

    #[test]
    fn fk_zero_pose_is_identity() {
        let model = two_joint_chain_model();
        let t = forward_kinematics(&model, &Pose::identity()).unwrap();
        for m in &t {
            assert!((m - Matrix4::identity()).abs().max() < 1e-12);
        }
    }

    #[test]
    fn fk_chain_composition_hand_case() {
        // bend joint 3 by 90 degrees about z; joint 6 (at rest (0,2,0), child)
        // rotates about joint 3's position (0,1,0): (0,2,0) -> (-1,1,0)
        let model = two_joint_chain_model();
        let mut jr = [[0.0; 3]; NUM_JOINTS];
        jr[3] = [0.0, 0.0, std::f64::consts::FRAC_PI_2];
        let pose = Pose::new(jr, [0.0; 3]).unwrap();
        let t = forward_kinematics(&model, &pose).unwrap();
        let j6 = t[6].transform_point(&model.rest_joints[6]);
        assert!((j6 - Point3::new(-1.0, 1.0, 0.0)).norm() < 1e-12, "{j6:?}");
    }

    #[test]
    fn fk_root_rotation_rotates_children_about_root() {
        let model = two_joint_chain_model();
        let mut jr = [[0.0; 3]; NUM_JOINTS];
        jr[0] = [0.0, 0.0, std::f64::consts::FRAC_PI_2];
        let pose = Pose::new(jr, [0.0; 3]).unwrap();
        let t = forward_kinematics(&model, &pose).unwrap();
        // rest joint (0,2,0) rotated 90 deg about z around root at origin -> (-2,0,0)
        let j6 = t[6].transform_point(&model.rest_joints[6]);
        assert!((j6 - Point3::new(-2.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn fk_rejects_nan_via_pose_constructor() {
        let mut jr = [[0.0; 3]; NUM_JOINTS];
        jr[0][0] = f64::INFINITY;
        assert!(Pose::new(jr, [0.0; 3]).is_err());
    }

    #[test]
    fn lbs_single_bone_vertex_moves_rigidly() {
        let model = two_joint_chain_model();
        let mut jr = [[0.0; 3]; NUM_JOINTS];
        jr[3] = [0.0, 0.0, std::f64::consts::FRAC_PI_2];
        let pose = Pose::new(jr, [0.0; 3]).unwrap();
        let t = forward_kinematics(&model, &pose).unwrap();
        let mesh = lbs_pose(&model, &pose).unwrap();
        let expect = t[3].transform_point(&model.template_vertices[0]);
        assert!((mesh.vertices[0] - expect).norm() < 1e-12);
        // hand value: (0.5,1.5) rotated 90 deg about (0,1): (0.5,0.5)->(-0.5,0.5)->( -0.5,1.5 )
        assert!((mesh.vertices[0] - Point3::new(-0.5, 1.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn procrustes_removes_global_similarity() {
        let a: Vec<Point3<f64>> = (0..8)
            .map(|i| Point3::new(i as f64 * 0.3, (i * i % 5) as f64 * 0.2, -(i as f64) * 0.1))
            .collect();
        let rot = nalgebra::Rotation3::from_scaled_axis(Vector3::new(0.4, -0.8, 0.2));
        let b: Vec<Point3<f64>> = a
            .iter()
            .map(|p| Point3::from(rot * (p.coords * 1.7) + Vector3::new(5.0, -2.0, 0.5)))
            .collect();
        assert!(procrustes_rmse(&a, &b).unwrap() < 1e-9);
    }

    #[test]
    fn procrustes_degenerate_points_error() {
        let a = vec![Point3::new(1.0, 2.0, 3.0); 5];
        let b = vec![Point3::new(0.0, 0.0, 1.0); 5];
        assert!(procrustes_rmse(&a, &b).is_err());
    }
}
