//! The set of candidate drain operations known to a simulation.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ComponentSpec, Validate, Violation};

/// Ordered collection of components, unique by id. Serializes as a JSON
/// array of [`ComponentSpec`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ComponentSpec>", into = "Vec<ComponentSpec>")]
pub struct Registry {
    components: Vec<ComponentSpec>,
    index: HashMap<String, usize>,
}

impl Registry {
    pub fn new(components: Vec<ComponentSpec>) -> Result<Self> {
        let mut registry = Registry::default();
        for spec in components {
            registry.insert(spec)?;
        }
        Ok(registry)
    }

    pub fn insert(&mut self, spec: ComponentSpec) -> Result<()> {
        if self.index.contains_key(&spec.id) {
            return Err(Error::DuplicateComponent(spec.id));
        }
        self.index.insert(spec.id.clone(), self.components.len());
        self.components.push(spec);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&ComponentSpec> {
        self.index.get(id).map(|&i| &self.components[i])
    }

    /// Overrides the detectability level of one component.
    pub fn set_stealth_level(&mut self, id: &str, level: Option<u8>) -> Result<()> {
        let i = self
            .index_of(id)
            .ok_or_else(|| Error::UnknownComponent(id.to_owned()))?;
        self.components[i].stealth_level = level;
        Ok(())
    }

    pub fn require(&self, id: &str) -> Result<&ComponentSpec> {
        self.get(id)
            .ok_or_else(|| Error::UnknownComponent(id.to_owned()))
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn by_index(&self, index: usize) -> &ComponentSpec {
        &self.components[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = &ComponentSpec> {
        self.components.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.components.iter().map(|c| c.id.as_str())
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Copy with every drain time multiplied by `factor`, i.e. every rate
    /// divided by it.
    pub fn with_time_scale(&self, factor: f64) -> Registry {
        let mut out = self.clone();
        for c in &mut out.components {
            c.drain_time_mean *= factor;
            c.drain_time_sd *= factor;
            c.drain_time_min *= factor;
            c.drain_time_max *= factor;
            if let Some(full) = c.full_drain_minutes.as_mut() {
                *full *= factor;
            }
        }
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let registry: Registry = serde_json::from_str(text)?;
        registry.ensure_valid("component registry")?;
        Ok(registry)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl TryFrom<Vec<ComponentSpec>> for Registry {
    type Error = Error;

    fn try_from(components: Vec<ComponentSpec>) -> Result<Self> {
        Registry::new(components)
    }
}

impl From<Registry> for Vec<ComponentSpec> {
    fn from(registry: Registry) -> Self {
        registry.components
    }
}

impl Validate for Registry {
    fn validate(&self) -> Vec<Violation> {
        self.components
            .iter()
            .flat_map(|c| {
                c.validate()
                    .into_iter()
                    .map(move |v| Violation::new(format!("{}.{}", c.id, v.field), v.message))
            })
            .collect()
    }
}
