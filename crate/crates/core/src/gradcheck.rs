//! Central finite-difference gradient checking (f64).
//!
//! `check` builds the graph twice per probed coordinate (x+h, x-h) through a
//! user closure, compares (f(x+h) - f(x-h)) / 2h against the analytic
//! gradient from one backward pass. Coordinates are subsampled for large
//! parameter sets.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, NodeId};
use crate::tensor::Tensor;

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_TOL: f64 = 1e-4;

/// Builds a scalar loss from leaf tensors; must be deterministic.
pub type LossFn<'f> = dyn Fn(&mut Graph<f64>, &[NodeId]) -> NodeId + 'f;

pub struct GradCheck<'f> {
    pub leaves: Vec<Tensor<f64>>,
    pub build: Box<LossFn<'f>>,
    /// Max probed coordinates per leaf (all when numel is smaller).
    pub max_probes: usize,
    pub step: f64,
    pub tol: f64,
}

pub struct GradReport {
    pub checked: usize,
    pub max_rel_err: f64,
    pub worst: Option<(usize, usize, f64, f64)>, // (leaf, coord, analytic, numeric)
}

impl GradReport {
    pub fn ok(&self, tol: f64) -> bool {
        self.max_rel_err < tol
    }
}

fn eval(leaves: &[Tensor<f64>], build: &LossFn) -> f64 {
    let mut g = Graph::<f64>::new();
    let ids: Vec<NodeId> = leaves.iter().map(|t| g.leaf(t.clone(), true)).collect();
    let root = build(&mut g, &ids);
    g.value(root).item()
}

impl<'f> GradCheck<'f> {
    pub fn new(
        leaves: Vec<Tensor<f64>>,
        build: impl Fn(&mut Graph<f64>, &[NodeId]) -> NodeId + 'f,
    ) -> Self {
        Self {
            leaves,
            build: Box::new(build),
            max_probes: 24,
            step: DEFAULT_STEP,
            tol: DEFAULT_TOL,
        }
    }

    pub fn max_probes(mut self, n: usize) -> Self {
        self.max_probes = n;
        self
    }

    /// Run the check; panics with a diagnostic on failure.
    pub fn run(&self, rng: &mut ChaCha8Rng) -> GradReport {
        // analytic gradients
        let mut g = Graph::<f64>::new();
        let ids: Vec<NodeId> = self
            .leaves
            .iter()
            .map(|t| g.leaf(t.clone(), true))
            .collect();
        let root = (self.build)(&mut g, &ids);
        assert!(
            g.value(root).is_scalar(),
            "gradcheck loss must be scalar, got {:?}",
            g.value(root).shape()
        );
        g.backward(root).expect("backward failed");
        let analytic: Vec<Tensor<f64>> = ids
            .iter()
            .zip(&self.leaves)
            .map(|(&id, leaf)| {
                g.grad(id)
                    .cloned()
                    .unwrap_or_else(|| Tensor::zeros(leaf.shape()))
            })
            .collect();

        let mut checked = 0usize;
        let mut max_rel = 0.0f64;
        let mut worst = None;
        for (li, leaf) in self.leaves.iter().enumerate() {
            let numel = leaf.numel();
            let coords: Vec<usize> = if numel <= self.max_probes {
                (0..numel).collect()
            } else {
                (0..self.max_probes)
                    .map(|_| rng.gen_range(0..numel))
                    .collect()
            };
            for ci in coords {
                let mut plus = self.leaves.clone();
                plus[li].data_mut()[ci] += self.step;
                let mut minus = self.leaves.clone();
                minus[li].data_mut()[ci] -= self.step;
                let numeric =
                    (eval(&plus, &self.build) - eval(&minus, &self.build)) / (2.0 * self.step);
                let exact = analytic[li].data()[ci];
                let denom = exact.abs().max(numeric.abs()).max(1e-4);
                let rel = (exact - numeric).abs() / denom;
                checked += 1;
                if rel > max_rel {
                    max_rel = rel;
                    worst = Some((li, ci, exact, numeric));
                }
            }
        }
        GradReport {
            checked,
            max_rel_err: max_rel,
            worst,
        }
    }

    pub fn assert_ok(&self, rng: &mut ChaCha8Rng) {
        let report = self.run(rng);
        assert!(
            report.ok(self.tol),
            "gradient check failed: max rel err {:.3e} over {} coords, worst {:?}",
            report.max_rel_err,
            report.checked,
            report.worst
        );
    }
}
