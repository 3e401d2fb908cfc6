use crate::{Result, Tensor, TensorError};

/// Handle to a parameter inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

/// Named learned parameters that persist across tapes.
///
/// Insertion order is the canonical order: the optimizer walks it, the
/// checkpoint writes it, and gradient accumulation follows it, which keeps
/// training trajectories bitwise reproducible.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    entries: Vec<(String, Tensor)>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, mut value: Tensor) -> ParamId {
        assert!(
            self.lookup(name).is_none(),
            "duplicate parameter name {name:?}"
        );
        value.requires_grad = true;
        self.entries.push((name.to_string(), value));
        ParamId(self.entries.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].0
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].1
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0].1
    }

    pub fn lookup(&self, name: &str) -> Option<ParamId> {
        self.entries
            .iter()
            .position(|(n, _)| n == name)
            .map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    pub fn zero_grad(&mut self) {
        for (_, t) in &mut self.entries {
            t.zero_grad();
        }
    }

    pub(crate) fn accumulate_grad(&mut self, id: ParamId, delta: &[f64]) {
        self.entries[id.0].1.accumulate_grad(delta);
    }

    /// Gradient of a parameter, failing loudly when backward never reached it.
    pub fn grad(&self, id: ParamId) -> Result<&[f64]> {
        self.entries[id.0]
            .1
            .grad
            .as_deref()
            .ok_or_else(|| TensorError::MissingGrad {
                name: self.entries[id.0].0.clone(),
            })
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.numel()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_and_order() {
        let mut store = ParamStore::new();
        let a = store.add("w1", Tensor::zeros(&[2, 2]));
        let b = store.add("w2", Tensor::zeros(&[2]));
        assert_eq!(store.lookup("w1"), Some(a));
        assert_eq!(store.lookup("w2"), Some(b));
        assert_eq!(store.lookup("nope"), None);
        let names: Vec<_> = store.iter().map(|(n, _)| n.to_string()).collect();
        assert_eq!(names, ["w1", "w2"]);
    }

    #[test]
    #[should_panic(expected = "duplicate parameter")]
    fn duplicate_name_panics() {
        let mut store = ParamStore::new();
        store.add("w", Tensor::zeros(&[1]));
        store.add("w", Tensor::zeros(&[1]));
    }

    #[test]
    fn missing_grad_is_an_error() {
        let mut store = ParamStore::new();
        let id = store.add("w", Tensor::zeros(&[2]));
        assert!(matches!(
            store.grad(id),
            Err(TensorError::MissingGrad { .. })
        ));
    }
}
