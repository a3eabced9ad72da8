//! Procedural capsule-limb humanoid used in place of licensed body assets.
//! Deterministic per (config, seed): same inputs, byte-identical model.

use nalgebra::{Point3, UnitVector3, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::body::SkinnedBodyModel;
use crate::error::{GeomError, Result};
use crate::pose::NUM_JOINTS;

/// Kinematic tree: 24 joints, pelvis root, two leg chains, spine chain,
/// collars, arms.
pub const SMPL_PARENTS: [i32; NUM_JOINTS] = [
    -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21,
];

/// Rest joint positions in meters, y-up, subject facing +z, arms in T-pose.
pub const REST_JOINTS: [[f64; 3]; NUM_JOINTS] = [
    [0.00, 0.95, 0.00],  // 0 pelvis
    [0.09, 0.91, 0.00],  // 1 left hip
    [-0.09, 0.91, 0.00], // 2 right hip
    [0.00, 1.05, 0.00],  // 3 spine1
    [0.10, 0.50, 0.00],  // 4 left knee
    [-0.10, 0.50, 0.00], // 5 right knee
    [0.00, 1.15, 0.00],  // 6 spine2
    [0.11, 0.09, 0.00],  // 7 left ankle
    [-0.11, 0.09, 0.00], // 8 right ankle
    [0.00, 1.25, 0.00],  // 9 spine3
    [0.12, 0.04, 0.12],  // 10 left foot
    [-0.12, 0.04, 0.12], // 11 right foot
    [0.00, 1.42, 0.00],  // 12 neck
    [0.06, 1.36, 0.00],  // 13 left collar
    [-0.06, 1.36, 0.00], // 14 right collar
    [0.00, 1.58, 0.00],  // 15 head
    [0.18, 1.36, 0.00],  // 16 left shoulder
    [-0.18, 1.36, 0.00], // 17 right shoulder
    [0.45, 1.36, 0.00],  // 18 left elbow
    [-0.45, 1.36, 0.00], // 19 right elbow
    [0.70, 1.36, 0.00],  // 20 left wrist
    [-0.70, 1.36, 0.00], // 21 right wrist
    [0.81, 1.36, 0.00],  // 22 left hand
    [-0.81, 1.36, 0.00], // 23 right hand
];

/// Base capsule radius per bone, indexed by the bone's distal joint.
fn bone_radius(child: usize) -> f64 {
    match child {
        3 | 6 | 9 => 0.13,   // torso segments
        12 => 0.07,          // chest -> neck
        15 => 0.10,          // head
        13 | 14 => 0.055,    // collars
        16 | 17 => 0.055,    // collar -> shoulder
        18 | 19 => 0.05,     // upper arms
        20 | 21 => 0.042,    // forearms
        22 | 23 => 0.038,    // hands
        1 | 2 => 0.085,      // pelvis -> hip
        4 | 5 => 0.075,      // thighs
        7 | 8 => 0.055,      // shins
        10 | 11 => 0.045,    // feet
        _ => 0.05,
    }
}

#[derive(Clone, Debug)]
pub struct BodyConfig {
    /// Exact vertex count to emit.
    pub vertices: usize,
    pub seed: u64,
    /// Radius jitter fraction (0 disables randomization entirely).
    pub jitter: f64,
}

impl Default for BodyConfig {
    fn default() -> Self {
        Self {
            vertices: 1400,
            seed: 0,
            jitter: 0.15,
        }
    }
}

struct CapsuleSpec {
    proximal: usize,
    distal: usize,
    radius: f64,
    budget: usize,
}

/// Bridge two vertex rings (any sizes >= 1) with a watertight triangle band.
fn bridge_rings(a: &[u32], b: &[u32], faces: &mut Vec<[u32; 3]>) {
    let (m, n) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    while i < m || j < n {
        let fa = (i + 1) as f64 / m as f64;
        let fb = (j + 1) as f64 / n as f64;
        if i < m && (j >= n || fa <= fb) {
            faces.push([a[i], b[j % n], a[(i + 1) % m]]);
            i += 1;
        } else {
            faces.push([a[i % m], b[j % n], b[(j + 1) % n]]);
            j += 1;
        }
    }
}

/// Orthonormal frame perpendicular to `axis`.
fn perp_frame(axis: &UnitVector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if axis.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let e1 = axis.cross(&helper).normalize();
    let e2 = axis.cross(&e1);
    (e1, e2)
}

/// Emit one capsule running joint `proximal` -> `distal`, spending exactly
/// `budget` vertices (two poles plus rings). Weights ride the proximal joint
/// and blend toward the distal joint over the last 30% of the axis.
fn emit_capsule(
    spec: &CapsuleSpec,
    joints: &[Point3<f64>],
    vertices: &mut Vec<Point3<f64>>,
    faces: &mut Vec<[u32; 3]>,
    weights: &mut Vec<f64>,
) {
    let p0 = joints[spec.proximal];
    let p1 = joints[spec.distal];
    let seg = p1 - p0;
    let len = seg.norm().max(1e-6);
    let axis = UnitVector3::new_normalize(seg);
    let (e1, e2) = perp_frame(&axis);
    let r = spec.radius;

    // ring layout: poles cost 2 vertices; distribute the rest over rings of
    // 6, with one remainder ring of 3..8 so any budget >= 5 lands exactly
    let ring_budget = spec.budget - 2;
    let mut ring_sizes: Vec<usize> = Vec::new();
    let mut rest = ring_budget;
    while rest > 0 {
        if rest <= 8 && rest >= 3 && ring_sizes.is_empty() {
            ring_sizes.push(rest);
            rest = 0;
        } else if rest >= 9 || rest == 6 {
            ring_sizes.push(6);
            rest -= 6;
        } else {
            // 3..=5 or 7..=8 left over: absorb into a final odd ring
            ring_sizes.push(rest);
            rest = 0;
        }
    }
    let nr = ring_sizes.len();

    let arc = std::f64::consts::PI * r + len; // pole-to-pole surface path
    let mut write_weight = |t: f64| {
        // axial fraction in [0,1] over the full capsule
        let s = ((t + r) / (len + 2.0 * r)).clamp(0.0, 1.0);
        let blend = ((s - 0.7) / 0.3).clamp(0.0, 1.0);
        let mut row = vec![0.0; NUM_JOINTS];
        row[spec.proximal] = 1.0 - blend;
        row[spec.distal] += blend;
        weights.extend_from_slice(&row);
    };

    let base = vertices.len() as u32;
    // proximal pole
    vertices.push(p0 - axis.into_inner() * r);
    write_weight(-r);
    let mut prev_ring = vec![base];
    let mut next_id = base + 1;
    for (ri, &size) in ring_sizes.iter().enumerate() {
        let u = (ri + 1) as f64 / (nr + 1) as f64;
        let s = u * arc;
        let (t, ring_r) = if s < std::f64::consts::FRAC_PI_2 * r {
            let a = s / r;
            (-r * a.cos(), r * a.sin())
        } else if s <= std::f64::consts::FRAC_PI_2 * r + len {
            (s - std::f64::consts::FRAC_PI_2 * r, r)
        } else {
            let a = (s - std::f64::consts::FRAC_PI_2 * r - len) / r;
            (len + r * a.sin(), r * a.cos())
        };
        let center = p0 + axis.into_inner() * t;
        let ring: Vec<u32> = (0..size)
            .map(|k| {
                let theta = std::f64::consts::TAU * k as f64 / size as f64;
                vertices.push(center + (e1 * theta.cos() + e2 * theta.sin()) * ring_r);
                write_weight(t);
                let id = next_id;
                next_id += 1;
                id
            })
            .collect();
        bridge_rings(&prev_ring, &ring, faces);
        prev_ring = ring;
    }
    // distal pole
    vertices.push(p1 + axis.into_inner() * r);
    write_weight(len + r);
    bridge_rings(&prev_ring, &[next_id], faces);
}

/// Signed volume of a triangle soup; positive for outward-wound closed meshes.
fn signed_volume(vertices: &[Point3<f64>], faces: &[[u32; 3]]) -> f64 {
    faces
        .iter()
        .map(|f| {
            let a = vertices[f[0] as usize].coords;
            let b = vertices[f[1] as usize].coords;
            let c = vertices[f[2] as usize].coords;
            a.dot(&b.cross(&c)) / 6.0
        })
        .sum()
}

/// Build a deterministic humanoid satisfying every SkinnedBodyModel
/// invariant, with exactly `config.vertices` vertices.
pub fn synthesize_body(config: &BodyConfig) -> Result<SkinnedBodyModel> {
    let min_per_bone = 5;
    let bones: Vec<(usize, usize)> = (1..NUM_JOINTS)
        .map(|j| (SMPL_PARENTS[j] as usize, j))
        .collect();
    if config.vertices < bones.len() * min_per_bone {
        return Err(GeomError::Input(format!(
            "need at least {} vertices for {} bones",
            bones.len() * min_per_bone,
            bones.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let joints: Vec<Point3<f64>> = REST_JOINTS
        .iter()
        .map(|p| Point3::new(p[0], p[1], p[2]))
        .collect();

    // per-bone radii with deterministic jitter
    let radii: Vec<f64> = bones
        .iter()
        .map(|&(_, child)| {
            let base = bone_radius(child);
            if config.jitter > 0.0 {
                base * (1.0 + rng.gen_range(-config.jitter..config.jitter))
            } else {
                base
            }
        })
        .collect();

    // budget split proportional to capsule surface area, largest remainder
    let areas: Vec<f64> = bones
        .iter()
        .zip(&radii)
        .map(|(&(p, c), &r)| {
            let len = (joints[c] - joints[p]).norm();
            r * (len + r)
        })
        .collect();
    let total_area: f64 = areas.iter().sum();
    let spendable = config.vertices - bones.len() * min_per_bone;
    let shares: Vec<f64> = areas
        .iter()
        .map(|a| a / total_area * spendable as f64)
        .collect();
    let mut budgets: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let mut assigned: usize = budgets.iter().sum();
    let mut order: Vec<usize> = (0..bones.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = shares[a] - shares[a].floor();
        let fb = shares[b] - shares[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let mut k = 0;
    while assigned < spendable {
        budgets[order[k % bones.len()]] += 1;
        assigned += 1;
        k += 1;
    }

    let mut vertices = Vec::with_capacity(config.vertices);
    let mut faces = Vec::new();
    let mut weights = Vec::with_capacity(config.vertices * NUM_JOINTS);
    for (bi, &(p, c)) in bones.iter().enumerate() {
        let spec = CapsuleSpec {
            proximal: p,
            distal: c,
            radius: radii[bi],
            budget: min_per_bone + budgets[bi],
        };
        let start = faces.len();
        let vstart = vertices.len();
        emit_capsule(&spec, &joints, &mut vertices, &mut faces, &mut weights);
        // enforce outward winding per capsule
        if signed_volume(&vertices, &faces[start..]) < 0.0 {
            for f in faces[start..].iter_mut() {
                f.swap(1, 2);
            }
        }
        debug_assert!(vertices.len() - vstart == spec.budget);
    }

    let model = SkinnedBodyModel {
        template_vertices: vertices,
        faces,
        rest_joints: joints,
        parents: SMPL_PARENTS.to_vec(),
        skin_weights: weights,
    };
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::lbs_pose;
    use crate::pose::Pose;

    #[test]
    fn default_body_satisfies_invariants() {
        let model = synthesize_body(&BodyConfig::default()).unwrap();
        model.validate().unwrap();
        assert_eq!(model.num_vertices(), BodyConfig::default().vertices);
    }

    #[test]
    fn exact_vertex_counts() {
        for v in [500usize, 501, 777, 1201, 2000] {
            let model = synthesize_body(&BodyConfig {
                vertices: v,
                seed: 3,
                jitter: 0.15,
            })
            .unwrap();
            assert_eq!(model.num_vertices(), v, "requested {v}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = BodyConfig {
            vertices: 640,
            seed: 9,
            jitter: 0.2,
        };
        let a = synthesize_body(&cfg).unwrap();
        let b = synthesize_body(&cfg).unwrap();
        assert_eq!(a.template_vertices, b.template_vertices);
        assert_eq!(a.skin_weights, b.skin_weights);
        let c = synthesize_body(&BodyConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.template_vertices, c.template_vertices);
    }

    #[test]
    fn bent_elbow_stays_within_reach_bound() {
        let model = synthesize_body(&BodyConfig::default()).unwrap();
        let root = model.rest_joints[0];
        let max_rest = model
            .template_vertices
            .iter()
            .map(|v| (v - root).norm())
            .fold(0.0, f64::max);
        let bone_len = (model.rest_joints[18] - model.rest_joints[16]).norm();
        let mut jr = [[0.0; 3]; NUM_JOINTS];
        jr[18] = [0.0, 0.0, std::f64::consts::FRAC_PI_2]; // bend left elbow
        let pose = Pose::new(jr, [0.0; 3]).unwrap();
        let mesh = lbs_pose(&model, &pose).unwrap();
        let bound = max_rest + bone_len + 1e-9;
        for v in &mesh.vertices {
            assert!((v - root).norm() <= bound);
        }
    }
}
