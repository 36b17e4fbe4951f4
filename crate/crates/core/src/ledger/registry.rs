//! Registry of known hierarchy keys.
//!
//! Owners may declare extra paths under `H(xsk)`. When an `xsk` becomes
//! public, its key set `K_xsk` (every prefix, including the empty one, of each
//! regular or declared path) is stamped with the height `b_xsk`. A non-lifted
//! derived spend whose parent key lies in some `K_xsk` and whose commitment is
//! at or after `b_xsk` is invalid.

use std::collections::BTreeMap;

use im::{OrdMap, Vector};
use thiserror::Error;

use crate::group::Group;
use crate::hash::Digest32;
use crate::hd::{child, DerivationPath, ExtendedSecretKey};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("declaration would hold {have} paths, bound is {bound}")]
    PathBound { have: usize, bound: usize },
}

/// Public view of one registry entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyRegistryEntry {
    pub key_id: Digest32,
    pub declared_paths: Vec<DerivationPath>,
    pub included_height: Option<u64>,
    pub materialized_keys: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    declared: OrdMap<Digest32, Vector<DerivationPath>>,
    /// `key id -> (b_xsk, |K_xsk|)`.
    materialized: OrdMap<Digest32, (u64, usize)>,
    /// Encoded key to the earliest `b_xsk` of a set containing it.
    banned: OrdMap<Vec<u8>, u64>,
}

/// Prefix closure of `paths` under `xsk`, deduplicated, in first-seen order.
pub fn key_set(group: &Group, xsk: &ExtendedSecretKey, paths: &[DerivationPath]) -> Vec<ExtendedSecretKey> {
    let mut cache: BTreeMap<DerivationPath, ExtendedSecretKey> = BTreeMap::new();
    cache.insert(DerivationPath::empty(), xsk.clone());
    let mut order = vec![DerivationPath::empty()];
    for p in paths {
        let mut cur = DerivationPath::empty();
        for step in p.steps() {
            let next = cur.child(*step);
            if !cache.contains_key(&next) {
                let k = child(group, &cache[&cur], *step);
                cache.insert(next.clone(), k);
                order.push(next.clone());
            }
            cur = next;
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    order
        .into_iter()
        .map(|p| cache.remove(&p).expect("cached"))
        .filter(|k| seen.insert(k.clone()))
        .collect()
}

impl Registry {
    pub fn declare(&mut self, key_id: Digest32, paths: &[DerivationPath], bound: usize) -> Result<(), RegistryError> {
        let existing = self.declared.get(&key_id).map_or(0, |v| v.len());
        let have = existing + paths.len();
        if have > bound {
            return Err(RegistryError::PathBound { have, bound });
        }
        let entry = self.declared.entry(key_id).or_default();
        entry.extend(paths.iter().cloned());
        Ok(())
    }

    pub fn declared(&self, key_id: &Digest32) -> Vec<DerivationPath> {
        self.declared
            .get(key_id)
            .map(|v| v.iter().cloned().collect())
            .unwrap_or_default()
    }

    /// Stamp `K_xsk` at `height`. Returns the keys, or `None` if `xsk` was
    /// already materialized.
    pub fn materialize(
        &mut self,
        group: &Group,
        xsk: &ExtendedSecretKey,
        regular: &[DerivationPath],
        height: u64,
    ) -> Option<Vec<ExtendedSecretKey>> {
        let id = xsk.id(group);
        if self.materialized.contains_key(&id) {
            return None;
        }
        let mut paths = regular.to_vec();
        paths.extend(self.declared(&id));
        let keys = key_set(group, xsk, &paths);
        for k in &keys {
            self.banned.entry(k.encode(group)).or_insert(height);
        }
        self.materialized.insert(id, (height, keys.len()));
        Some(keys)
    }

    /// Earliest `b_xsk` over key sets containing `key`.
    pub fn banned_since(&self, group: &Group, key: &ExtendedSecretKey) -> Option<u64> {
        self.banned.get(&key.encode(group)).copied()
    }

    /// Whether a spend revealing `key`, committed at `commit_height`, is invalid.
    pub fn is_banned(&self, group: &Group, key: &ExtendedSecretKey, commit_height: u64) -> bool {
        self.banned_since(group, key).is_some_and(|b| commit_height >= b)
    }

    pub fn entry(&self, key_id: &Digest32) -> KeyRegistryEntry {
        let m = self.materialized.get(key_id);
        KeyRegistryEntry {
            key_id: *key_id,
            declared_paths: self.declared(key_id),
            included_height: m.map(|m| m.0),
            materialized_keys: m.map_or(0, |m| m.1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hd::{derive, Kdf, Seed};

    fn setup() -> (Group, ExtendedSecretKey) {
        let g = Group::toy_bits(20).unwrap();
        let msk = Kdf::new(4).kdf(&g, &Seed::new(vec![7; 16], vec![]).unwrap());
        (g, msk)
    }

    fn p(s: &str) -> DerivationPath {
        s.parse().unwrap()
    }

    #[test]
    fn prefix_closure_includes_root() {
        let (g, msk) = setup();
        let keys = key_set(&g, &msk, &[p("m/0"), p("m/0/1")]);
        assert_eq!(keys, vec![msk.clone(), derive(&g, &msk, &p("m/0")), derive(&g, &msk, &p("m/0/1"))]);
    }

    #[test]
    fn ban_applies_from_materialization_height() {
        let (g, msk) = setup();
        let mut r = Registry::default();
        let child = derive(&g, &msk, &p("m/0h/0"));
        assert!(r.materialize(&g, &msk, &[p("m/0h/0/3")], 50).is_some());
        assert!(r.materialize(&g, &msk, &[], 60).is_none());
        assert!(r.is_banned(&g, &child, 50));
        assert!(r.is_banned(&g, &child, 51));
        assert!(!r.is_banned(&g, &child, 49));
        assert!(!r.is_banned(&g, &derive(&g, &msk, &p("m/1")), 99));
        let e = r.entry(&msk.id(&g));
        assert_eq!(e.included_height, Some(50));
        assert_eq!(e.materialized_keys, 4);
    }

    #[test]
    fn declared_paths_join_the_set() {
        let (g, msk) = setup();
        let mut r = Registry::default();
        r.declare(msk.id(&g), &[p("m/9h/1")], 32).unwrap();
        r.materialize(&g, &msk, &[], 10).unwrap();
        assert!(r.is_banned(&g, &derive(&g, &msk, &p("m/9h")), 10));
        assert!(r.is_banned(&g, &derive(&g, &msk, &p("m/9h/1")), 10));
    }

    #[test]
    fn declaration_bound() {
        let (g, msk) = setup();
        let mut r = Registry::default();
        let paths: Vec<_> = (0..3).map(|i| p(&format!("m/{i}"))).collect();
        r.declare(msk.id(&g), &paths, 4).unwrap();
        assert_eq!(
            r.declare(msk.id(&g), &paths, 4),
            Err(RegistryError::PathBound { have: 6, bound: 4 })
        );
        assert_eq!(r.declared(&msk.id(&g)).len(), 3);
    }
}
