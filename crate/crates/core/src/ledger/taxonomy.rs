//! UTXO classes by who knows what.

use std::fmt;

use thiserror::Error;

use super::{Address, Utxo};

/// Knowledge about one UTXO, held by its owner and by an adversary.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Hash)]
pub struct KnowledgeModel {
    pub owner_seed: bool,
    pub owner_sk: bool,
    pub owner_pk: bool,
    pub adversary_pk: bool,
    /// The adversary knows the key is non-derived or that the owner lost it.
    pub adversary_knows_nd: bool,
}

impl KnowledgeModel {
    /// All 32 combinations, in bit order `seed, sk, pk, adv_pk, adv_nd`.
    pub fn all() -> impl Iterator<Item = KnowledgeModel> {
        (0u8..32).map(|b| KnowledgeModel {
            owner_seed: b & 16 != 0,
            owner_sk: b & 8 != 0,
            owner_pk: b & 4 != 0,
            adversary_pk: b & 2 != 0,
            adversary_knows_nd: b & 1 != 0,
        })
    }

    pub fn derived() -> Self {
        Self {
            owner_seed: true,
            owner_sk: true,
            owner_pk: true,
            ..Self::default()
        }
    }

    pub fn hashed() -> Self {
        Self {
            owner_sk: true,
            owner_pk: true,
            ..Self::default()
        }
    }

    pub fn naked() -> Self {
        Self {
            owner_sk: true,
            owner_pk: true,
            adversary_pk: true,
            ..Self::default()
        }
    }

    pub fn lost() -> Self {
        Self {
            owner_pk: true,
            adversary_pk: true,
            ..Self::default()
        }
    }

    pub fn stealable() -> Self {
        Self {
            owner_sk: true,
            owner_pk: true,
            adversary_pk: true,
            adversary_knows_nd: true,
            ..Self::default()
        }
    }

    pub fn doomed() -> Self {
        Self::default()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub enum UtxoClass {
    Hashed,
    Derived,
    Naked,
    Lost,
    Stealable,
    Doomed,
    PostQuantum,
}

impl fmt::Display for UtxoClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            UtxoClass::Hashed => "hashed",
            UtxoClass::Derived => "derived",
            UtxoClass::Naked => "naked",
            UtxoClass::Lost => "lost",
            UtxoClass::Stealable => "stealable",
            UtxoClass::Doomed => "doomed",
            UtxoClass::PostQuantum => "post-quantum",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Error)]
pub enum KnowledgeError {
    #[error("malformed knowledge model: {0}")]
    Malformed(&'static str),
    /// Owner knows only the public key and the adversary knows nothing: no
    /// class describes this combination.
    #[error("knowledge model matches no class")]
    Unclassifiable,
}

fn check(k: &KnowledgeModel) -> Result<(), KnowledgeError> {
    if k.owner_seed && !k.owner_sk {
        return Err(KnowledgeError::Malformed("seed without secret key"));
    }
    if k.owner_sk && !k.owner_pk {
        return Err(KnowledgeError::Malformed("secret key without public key"));
    }
    if k.owner_seed && k.adversary_knows_nd {
        return Err(KnowledgeError::Malformed("adversary certain of a false non-derived claim"));
    }
    if k.adversary_pk && !k.owner_pk {
        return Err(KnowledgeError::Malformed("adversary knows a public key the owner cannot"));
    }
    Ok(())
}

/// Every class `k` belongs to. Only hashed and derived overlap.
pub fn memberships(k: &KnowledgeModel) -> Result<Vec<UtxoClass>, KnowledgeError> {
    check(k)?;
    let mut out = Vec::new();
    if k.owner_seed {
        out.push(UtxoClass::Derived);
    }
    if k.owner_sk && !k.adversary_pk {
        out.push(UtxoClass::Hashed);
    }
    if !k.owner_seed && k.adversary_pk {
        out.push(if k.adversary_knows_nd {
            UtxoClass::Stealable
        } else if k.owner_sk {
            UtxoClass::Naked
        } else {
            UtxoClass::Lost
        });
    }
    if !k.owner_sk && !k.owner_pk {
        out.push(UtxoClass::Doomed);
    }
    if out.is_empty() {
        return Err(KnowledgeError::Unclassifiable);
    }
    Ok(out)
}

/// Class of a UTXO. Post-quantum addresses short-circuit; otherwise derived
/// wins over hashed when both apply.
pub fn classify(u: &Utxo, k: &KnowledgeModel) -> Result<UtxoClass, KnowledgeError> {
    if matches!(u.address, Address::PostQuantum(_)) {
        return Ok(UtxoClass::PostQuantum);
    }
    memberships(k).map(|m| m[0])
}

/// Fate of a non-cautiously-spendable UTXO under one FawkesCoin mode.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum SalvageStatus {
    Burnt,
    Spendable,
    Unspendable,
    Loot,
    QuantumLoot,
}

impl fmt::Display for SalvageStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SalvageStatus::Burnt => "Burnt",
            SalvageStatus::Spendable => "Spendable",
            SalvageStatus::Unspendable => "Unspendable",
            SalvageStatus::Loot => "Loot",
            SalvageStatus::QuantumLoot => "Quantum Loot",
        };
        f.write_str(s)
    }
}

/// What was observed when each party tried to spend a UTXO.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct SalvageOutcome {
    pub owner_succeeds: bool,
    pub classical_theft_succeeds: bool,
    pub quantum_theft_succeeds: bool,
    /// The adversary can tell the owner cannot defend the UTXO.
    pub adversary_certain: bool,
}

impl SalvageOutcome {
    pub fn status(&self) -> SalvageStatus {
        if self.adversary_certain && self.classical_theft_succeeds {
            SalvageStatus::Loot
        } else if self.adversary_certain && self.quantum_theft_succeeds {
            SalvageStatus::QuantumLoot
        } else if self.owner_succeeds {
            SalvageStatus::Spendable
        } else if self.classical_theft_succeeds || self.quantum_theft_succeeds {
            SalvageStatus::Unspendable
        } else {
            SalvageStatus::Burnt
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_columns() {
        assert_eq!(memberships(&KnowledgeModel::derived()).unwrap(), vec![UtxoClass::Derived, UtxoClass::Hashed]);
        let derived_leaked = KnowledgeModel {
            adversary_pk: true,
            ..KnowledgeModel::derived()
        };
        assert_eq!(memberships(&derived_leaked).unwrap(), vec![UtxoClass::Derived]);
        assert_eq!(memberships(&KnowledgeModel::hashed()).unwrap(), vec![UtxoClass::Hashed]);
        assert_eq!(memberships(&KnowledgeModel::naked()).unwrap(), vec![UtxoClass::Naked]);
        assert_eq!(memberships(&KnowledgeModel::lost()).unwrap(), vec![UtxoClass::Lost]);
        assert_eq!(memberships(&KnowledgeModel::stealable()).unwrap(), vec![UtxoClass::Stealable]);
        assert_eq!(memberships(&KnowledgeModel::doomed()).unwrap(), vec![UtxoClass::Doomed]);
    }

    #[test]
    fn total_over_all_combinations() {
        let mut classified = 0;
        let mut unclassifiable = 0;
        for k in KnowledgeModel::all() {
            match memberships(&k) {
                Ok(m) => {
                    classified += 1;
                    // Only hashed and derived overlap.
                    if m.len() > 1 {
                        assert_eq!(m, vec![UtxoClass::Derived, UtxoClass::Hashed]);
                    }
                    assert_eq!(memberships(&k).unwrap(), m);
                }
                Err(KnowledgeError::Unclassifiable) => unclassifiable += 1,
                Err(KnowledgeError::Malformed(_)) => {}
            }
        }
        assert_eq!(classified, 10);
        assert_eq!(unclassifiable, 2);
    }

    #[test]
    fn salvage_table() {
        // (owner, classical, quantum, certain)
        let o = |a, b, c, d| SalvageOutcome {
            owner_succeeds: a,
            classical_theft_succeeds: b,
            quantum_theft_succeeds: c,
            adversary_certain: d,
        };
        assert_eq!(o(false, false, false, false).status(), SalvageStatus::Burnt);
        assert_eq!(o(true, false, true, false).status(), SalvageStatus::Spendable);
        assert_eq!(o(false, false, true, false).status(), SalvageStatus::Unspendable);
        assert_eq!(o(true, false, true, true).status(), SalvageStatus::QuantumLoot);
        assert_eq!(o(true, true, true, true).status(), SalvageStatus::Loot);
    }
}
