//! Named learnable arrays partitioned by network role.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autodiff::Array2;

/// Which network a parameter belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    /// Image encoder.
    F,
    /// Caption encoder.
    G,
    /// Caption decoder.
    H,
    /// Image-to-caption feature transformer.
    Tvc,
    /// Caption-to-image feature transformer.
    Tcv,
    /// Discriminators (the pair discriminator and the two domain discriminators).
    D,
}

impl Role {
    pub const ALL: [Role; 6] = [Role::F, Role::G, Role::H, Role::Tvc, Role::Tcv, Role::D];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::F => "F",
            Role::G => "G",
            Role::H => "H",
            Role::Tvc => "Tvc",
            Role::Tcv => "Tcv",
            Role::D => "D",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown role {s:?}"))
    }
}

/// The two players of the adversarial game.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateSet {
    /// Encoders, decoder and transformers.
    Generator,
    Discriminator,
}

impl UpdateSet {
    pub fn contains(self, role: Role) -> bool {
        match self {
            UpdateSet::Generator => role != Role::D,
            UpdateSet::Discriminator => role == Role::D,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub role: Role,
    pub name: String,
    pub value: Array2,
}

/// Every learnable array, addressed by [`ParamId`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Param>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers an array. Names must be unique within the store.
    pub fn add(&mut self, role: Role, name: impl Into<String>, value: Array2) -> ParamId {
        let name = name.into();
        debug_assert!(
            self.params.iter().all(|p| p.name != name),
            "duplicate parameter {name}"
        );
        self.params.push(Param { role, name, value });
        ParamId(self.params.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Array2 {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Array2 {
        &mut self.params[id.0].value
    }

    pub fn role(&self, id: ParamId) -> Role {
        self.params[id.0].role
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        (0..self.params.len()).map(ParamId)
    }

    pub fn ids_in(&self, set: UpdateSet) -> Vec<ParamId> {
        self.iter()
            .filter(|(_, p)| set.contains(p.role))
            .map(|(id, _)| id)
            .collect()
    }

    pub fn ids_with_role(&self, role: Role) -> Vec<ParamId> {
        self.iter()
            .filter(|(_, p)| p.role == role)
            .map(|(id, _)| id)
            .collect()
    }

    /// Copies of all arrays belonging to `set`, for before/after comparisons.
    pub fn snapshot(&self, set: UpdateSet) -> Vec<Array2> {
        self.ids_in(set)
            .into_iter()
            .map(|id| self.value(id).clone())
            .collect()
    }
}
