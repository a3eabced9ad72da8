//! Named parameter store shared by all learnable stages, plus the graph
//! wrapper that interns parameters as tape leaves during a forward pass.

use std::collections::BTreeMap;

use crate::adam::{adam_step, AdamState};
use crate::element::Element;
use crate::error::{Result, TensorError};
use crate::graph::{Graph, NodeId};
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct Param<T: Element> {
    pub value: Tensor<T>,
    pub trainable: bool,
}

/// Ordered name -> tensor map. BTreeMap keeps iteration (and so checkpoint
/// layout and update order) deterministic.
#[derive(Clone, Debug, Default)]
pub struct ParamStore<T: Element> {
    map: BTreeMap<String, Param<T>>,
}

impl<T: Element> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            map: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: &str, value: Tensor<T>, trainable: bool) {
        if self
            .map
            .insert(name.to_string(), Param { value, trainable })
            .is_some()
        {
            panic!("duplicate parameter name {name}");
        }
    }

    pub fn get(&self, name: &str) -> Option<&Param<T>> {
        self.map.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Param<T>> {
        self.map.get_mut(name)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Param<T>)> {
        self.map.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.map.keys()
    }

    /// Total number of scalar parameters.
    pub fn numel(&self) -> usize {
        self.map.values().map(|p| p.value.numel()).sum()
    }

    pub fn to_f32_map(&self) -> BTreeMap<String, Tensor<f32>> {
        self.map
            .iter()
            .map(|(k, p)| (k.clone(), p.value.cast()))
            .collect()
    }

    /// Replace values from a checkpoint map; shapes must match.
    pub fn load_f32_map(&mut self, loaded: &BTreeMap<String, Tensor<f32>>) -> Result<()> {
        for (name, param) in self.map.iter_mut() {
            let src = loaded.get(name).ok_or_else(|| {
                TensorError::Checkpoint(format!("missing parameter {name} in checkpoint"))
            })?;
            if src.shape() != param.value.shape() {
                return Err(TensorError::Checkpoint(format!(
                    "parameter {name}: checkpoint shape {:?} vs model {:?}",
                    src.shape(),
                    param.value.shape()
                )));
            }
            param.value = src.cast();
        }
        Ok(())
    }
}

/// Graph plus parameter store: `param("name")` interns each parameter as a
/// single leaf per forward pass, so repeated uses share gradients.
pub struct ParamGraph<'a, T: Element> {
    pub g: Graph<T>,
    store: &'a ParamStore<T>,
    interned: BTreeMap<String, NodeId>,
}

impl<'a, T: Element> ParamGraph<'a, T> {
    pub fn new(store: &'a ParamStore<T>) -> Self {
        Self {
            g: Graph::new(),
            store,
            interned: BTreeMap::new(),
        }
    }

    pub fn param(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.interned.get(name) {
            return id;
        }
        let p = self
            .store
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"));
        let id = self.g.leaf(p.value.clone(), p.trainable);
        self.interned.insert(name.to_string(), id);
        id
    }

    /// Gradients of all trainable parameters touched by the last backward.
    pub fn take_param_grads(&mut self) -> BTreeMap<String, Tensor<T>> {
        let names: Vec<(String, NodeId)> = self
            .interned
            .iter()
            .map(|(n, &id)| (n.clone(), id))
            .collect();
        let mut out = BTreeMap::new();
        for (name, id) in names {
            if let Some(g) = self.g.take_grad(id) {
                out.insert(name, g);
            }
        }
        out
    }
}

/// Per-module learning rates keyed by parameter name prefix.
#[derive(Clone, Debug)]
pub struct LrGroups {
    groups: Vec<(String, f64)>,
}

impl LrGroups {
    pub fn new(groups: &[(&str, f64)]) -> Self {
        Self {
            groups: groups
                .iter()
                .map(|(p, lr)| (p.to_string(), *lr))
                .collect(),
        }
    }

    pub fn lr_for(&self, name: &str) -> Option<f64> {
        self.groups
            .iter()
            .find(|(prefix, _)| name.starts_with(prefix.as_str()))
            .map(|(_, lr)| *lr)
    }
}

/// Adam optimizer over a parameter store, honoring lr groups. Parameters
/// whose name matches no group are left untouched.
#[derive(Clone, Debug, Default)]
pub struct Optimizer<T: Element> {
    states: BTreeMap<String, AdamState<T>>,
}

impl<T: Element> Optimizer<T> {
    pub fn new() -> Self {
        Self {
            states: BTreeMap::new(),
        }
    }

    pub fn apply(
        &mut self,
        store: &mut ParamStore<T>,
        grads: &BTreeMap<String, Tensor<T>>,
        lr_groups: &LrGroups,
    ) -> Result<()> {
        for (name, grad) in grads {
            let Some(lr) = lr_groups.lr_for(name) else {
                continue;
            };
            let param = store
                .get_mut(name)
                .ok_or_else(|| TensorError::Usage(format!("gradient for unknown param {name}")))?;
            if !param.trainable {
                continue;
            }
            let state = self
                .states
                .entry(name.clone())
                .or_insert_with(|| AdamState::new(grad.shape(), lr));
            state.lr = lr;
            adam_step(&mut param.value, grad, state)?;
        }
        Ok(())
    }
}
