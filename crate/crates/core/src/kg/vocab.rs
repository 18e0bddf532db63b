use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Dense bijection between names and ids `0..len`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interner {
    names: Vec<String>,
    #[serde(skip)]
    ids: HashMap<String, u32>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an interner from names listed in id order.
    pub fn from_names<I, S>(names: I) -> Option<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut interner = Interner::new();
        for name in names {
            let name = name.into();
            if interner.ids.contains_key(&name) {
                return None;
            }
            interner.get_or_insert(&name);
        }
        Some(interner)
    }

    pub fn get_or_insert(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        id
    }

    pub fn id(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Rebuilds the reverse index, e.g. after deserialization.
    pub fn reindex(&mut self) {
        self.ids = self
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
    }

    /// True when the reverse index agrees with the name list in both directions.
    pub fn is_bijective(&self) -> bool {
        self.ids.len() == self.names.len()
            && self
                .names
                .iter()
                .enumerate()
                .all(|(i, n)| self.ids.get(n) == Some(&(i as u32)))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub entities: Interner,
    pub relations: Interner,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_follow_first_appearance() {
        let mut v = Interner::new();
        assert_eq!(v.get_or_insert("b"), 0);
        assert_eq!(v.get_or_insert("a"), 1);
        assert_eq!(v.get_or_insert("b"), 0);
        assert_eq!(v.name(1), Some("a"));
        assert!(v.is_bijective());
    }

    #[test]
    fn duplicate_names_are_rejected() {
        assert!(Interner::from_names(["x", "y", "x"]).is_none());
    }
}
