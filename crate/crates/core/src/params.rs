//! Named trainable parameters.
//!
//! A `ParamStore` owns the canonical values of every weight and bias; the
//! graph takes immutable snapshots of them per forward pass, and the
//! optimizer writes updates back through [`ParamStore::apply`]. A `BTreeMap`
//! keeps iteration order deterministic, which the whole training pipeline
//! relies on.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};

use crate::error::{CoreError, Result};
use crate::matrix::Matrix;

/// Gradient of a scalar loss with respect to each named parameter.
pub type GradMap = BTreeMap<String, Matrix>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    entries: BTreeMap<String, Matrix>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a new parameter. Names are unique; shapes are fixed from here on.
    pub fn register(&mut self, name: &str, value: Matrix) -> Result<()> {
        if self.entries.contains_key(name) {
            return Err(CoreError::DuplicateParam {
                name: name.to_string(),
            });
        }
        if !value.is_finite() {
            return Err(CoreError::NonFinite { op: "register" });
        }
        self.entries.insert(name.to_string(), value);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Matrix> {
        self.entries.get(name).ok_or_else(|| CoreError::UnknownParam {
            name: name.to_string(),
        })
    }

    /// Replace a parameter's value; the shape must match the registered one.
    pub fn set(&mut self, name: &str, value: Matrix) -> Result<()> {
        let slot = self.entries.get_mut(name).ok_or_else(|| CoreError::UnknownParam {
            name: name.to_string(),
        })?;
        if slot.shape() != value.shape() {
            return Err(CoreError::ShapeMismatch {
                op: "param set",
                lhs: slot.shape(),
                rhs: value.shape(),
            });
        }
        *slot = value;
        Ok(())
    }

    /// In-place update of every parameter, in name order.
    pub fn apply(&mut self, mut f: impl FnMut(&str, &mut Matrix)) {
        for (name, value) in self.entries.iter_mut() {
            f(name, value);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|k| k.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar entries across all parameters.
    pub fn scalar_count(&self) -> usize {
        self.entries.values().map(|m| m.as_slice().len()).sum()
    }
}
