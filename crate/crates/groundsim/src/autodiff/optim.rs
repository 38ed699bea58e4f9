//! Named parameter storage and the Adam optimizer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::tape::{Tape, Var};
use super::tensor::Tensor;

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ParamEntry {
    value: Tensor,
    m: Tensor,
    v: Tensor,
}

/// Named trainable tensors plus per-parameter Adam moment accumulators.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamStore {
    entries: BTreeMap<String, ParamEntry>,
    step: u64,
}

/// Tape handles for every parameter of a store, in name order.
pub struct Bindings {
    vars: BTreeMap<String, Var>,
}

impl Bindings {
    pub fn var(&self, name: &str) -> Result<Var> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownId { kind: "parameter", id: name.to_string() })
    }

    /// Collects gradients per parameter after a backward pass.
    pub fn grads(&self, tape: &Tape) -> BTreeMap<String, Tensor> {
        self.vars
            .iter()
            .map(|(name, var)| {
                let g = tape.grad(*var).expect("backward has run").clone();
                (name.clone(), g)
            })
            .collect()
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) {
        let m = Tensor::zeros(value.shape().to_vec());
        let v = Tensor::zeros(value.shape().to_vec());
        self.entries.insert(name.into(), ParamEntry { value, m, v });
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.entries
            .get(name)
            .map(|e| &e.value)
            .ok_or_else(|| Error::UnknownId { kind: "parameter", id: name.to_string() })
    }

    pub fn set_value(&mut self, name: &str, value: Tensor) -> Result<()> {
        let entry = self
            .entries
            .get_mut(name)
            .ok_or_else(|| Error::UnknownId { kind: "parameter", id: name.to_string() })?;
        entry.value = value;
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n_scalars(&self) -> usize {
        self.entries.values().map(|e| e.value.len()).sum()
    }

    /// Copies every parameter onto `tape` as a trainable leaf.
    pub fn bind(&self, tape: &mut Tape) -> Bindings {
        let vars = self
            .entries
            .iter()
            .map(|(name, e)| (name.clone(), tape.leaf(e.value.clone())))
            .collect();
        Bindings { vars }
    }

    /// Parameter values only (no optimizer state), for checkpoints.
    pub fn values(&self) -> BTreeMap<String, Tensor> {
        self.entries.iter().map(|(n, e)| (n.clone(), e.value.clone())).collect()
    }

    /// Rebuilds a store from checkpoint values, with fresh optimizer state.
    pub fn from_values(values: BTreeMap<String, Tensor>) -> Self {
        let mut store = ParamStore::new();
        for (name, value) in values {
            store.insert(name, value);
        }
        store
    }

    /// One Adam update with bias correction. Gradients must align with
    /// parameters by name and shape; a NaN or Inf gradient aborts with the
    /// offending parameter's name.
    pub fn adam_step(&mut self, grads: &BTreeMap<String, Tensor>, hyper: AdamHyper) -> Result<()> {
        for (name, g) in grads {
            let entry = self
                .entries
                .get(name)
                .ok_or_else(|| Error::UnknownId { kind: "parameter", id: name.clone() })?;
            if g.shape() != entry.value.shape() {
                return Err(Error::Dimension {
                    op: "adam_step",
                    lhs: entry.value.shape().to_vec(),
                    rhs: g.shape().to_vec(),
                });
            }
            if !g.is_finite() {
                return Err(Error::Numeric(format!("gradient of parameter {name}")));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - hyper.beta1.powi(t);
        let bc2 = 1.0 - hyper.beta2.powi(t);
        for (name, g) in grads {
            let entry = self.entries.get_mut(name).expect("validated above");
            let gd = g.data();
            let m = entry.m.data_mut();
            let v = entry.v.data_mut();
            let p = entry.value.data_mut();
            for i in 0..gd.len() {
                m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * gd[i];
                v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * gd[i] * gd[i];
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p[i] -= hyper.lr * mhat / (vhat.sqrt() + hyper.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut store = ParamStore::new();
        store.insert("w", Tensor::vector(vec![1.0, -2.0, 3.0]));
        let before = store.get("w").unwrap().clone();
        let grads: BTreeMap<String, Tensor> =
            [("w".to_string(), Tensor::vector(vec![0.0; 3]))].into();
        store.adam_step(&grads, AdamHyper::default()).unwrap();
        assert_eq!(store.get("w").unwrap(), &before);
    }

    #[test]
    fn first_step_closed_form() {
        // p = 0, g = 1, lr = 0.1: after one step p = -0.1 * 1/(1 + eps)
        let mut store = ParamStore::new();
        store.insert("p", Tensor::scalar(0.0));
        let grads: BTreeMap<String, Tensor> = [("p".to_string(), Tensor::scalar(1.0))].into();
        let hyper = AdamHyper { lr: 0.1, ..AdamHyper::default() };
        store.adam_step(&grads, hyper).unwrap();
        let expected = -0.1 / (1.0 + hyper.eps);
        assert!((store.get("p").unwrap().item().unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn converges_on_scalar_quadratic() {
        // Minimize (p - 3)^2 from p = 0; gradient is 2(p - 3).
        let mut store = ParamStore::new();
        store.insert("p", Tensor::scalar(0.0));
        let hyper = AdamHyper { lr: 0.1, ..AdamHyper::default() };
        for _ in 0..200 {
            let p = store.get("p").unwrap().item().unwrap();
            let g = 2.0 * (p - 3.0);
            let grads: BTreeMap<String, Tensor> = [("p".to_string(), Tensor::scalar(g))].into();
            store.adam_step(&grads, hyper).unwrap();
        }
        let p = store.get("p").unwrap().item().unwrap();
        assert!((p - 3.0).abs() < 1e-2, "p = {p}");
    }

    #[test]
    fn nan_gradient_names_parameter() {
        let mut store = ParamStore::new();
        store.insert("enc.w", Tensor::scalar(0.0));
        let grads: BTreeMap<String, Tensor> =
            [("enc.w".to_string(), Tensor::scalar(f64::NAN))].into();
        match store.adam_step(&grads, AdamHyper::default()) {
            Err(Error::Numeric(msg)) => assert!(msg.contains("enc.w")),
            other => panic!("expected numeric error, got {other:?}"),
        }
    }

    #[test]
    fn update_is_deterministic() {
        let run = || {
            let mut store = ParamStore::new();
            store.insert("w", Tensor::vector(vec![0.5, -0.5]));
            for i in 0..10 {
                let grads: BTreeMap<String, Tensor> =
                    [("w".to_string(), Tensor::vector(vec![0.1 * i as f64, -0.2]))].into();
                store.adam_step(&grads, AdamHyper::default()).unwrap();
            }
            store.get("w").unwrap().data().to_vec()
        };
        assert_eq!(run(), run());
    }
}
