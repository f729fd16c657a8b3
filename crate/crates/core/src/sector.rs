//! Decomposition of the envelope matrix into sectors that evolve independently.
//!
//! Every basis state carries the labels `(A, B)` of
//! [`CompositeIndex::excitation_labels`]. The coherent couplings only connect
//! states with equal labels, and each loss channel lowers the labels of both
//! indices of an element together, so the difference
//! `(A_a − A_b, B_a − B_b)` of an element `p[a, b]` is preserved. The set of
//! elements sharing one difference is a *sector*; the generator is block
//! diagonal over sectors.
//!
//! Populations, photon statistics, quantum polarizations and the bipartite
//! distribution all live in sector `(0, 0)`. The coherences `P^C_31`,
//! `P^C_32`, `P^C_21` live in `(1, 0)`, `(0, 1)` and `(1, −1)`.
//!
//! [`CompositeIndex::excitation_labels`]: crate::fock_basis::CompositeIndex::excitation_labels

use std::collections::{BTreeMap, BTreeSet};

use crate::fock_basis::Truncation;

pub type SectorLabel = (i64, i64);

pub const DIAGONAL: SectorLabel = (0, 0);
pub const COHERENCE_31: SectorLabel = (1, 0);
pub const COHERENCE_32: SectorLabel = (0, 1);
pub const COHERENCE_21: SectorLabel = (1, -1);

/// Basis states grouped by their excitation labels.
#[derive(Debug, Clone)]
pub struct SectorMap {
    blocks: BTreeMap<(i64, i64), Vec<u32>>,
}

impl SectorMap {
    pub fn new(trunc: Truncation) -> Self {
        let mut blocks: BTreeMap<(i64, i64), Vec<u32>> = BTreeMap::new();
        for (i, idx) in trunc.basis().enumerate() {
            blocks.entry(idx.excitation_labels()).or_default().push(i as u32);
        }
        SectorMap { blocks }
    }

    /// Every label difference realized by at least one element.
    pub fn labels(&self) -> BTreeSet<SectorLabel> {
        let keys: Vec<_> = self.blocks.keys().copied().collect();
        let mut out = BTreeSet::new();
        for &(a1, b1) in &keys {
            for &(a2, b2) in &keys {
                out.insert((a1 - a2, b1 - b2));
            }
        }
        out
    }

    /// Elements `(a, b)` of one sector, in a fixed order.
    pub fn elements(&self, label: SectorLabel) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for (&(a, b), rows) in &self.blocks {
            if let Some(cols) = self.blocks.get(&(a - label.0, b - label.1)) {
                for &r in rows {
                    for &c in cols {
                        out.push((r, c));
                    }
                }
            }
        }
        out
    }
}

/// Which sectors a computation needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SectorSelection {
    All,
    Only(BTreeSet<SectorLabel>),
}

impl SectorSelection {
    pub fn only(labels: impl IntoIterator<Item = SectorLabel>) -> Self {
        SectorSelection::Only(labels.into_iter().collect())
    }

    pub fn union(self, other: SectorSelection) -> SectorSelection {
        match (self, other) {
            (SectorSelection::Only(mut a), SectorSelection::Only(b)) => {
                a.extend(b);
                SectorSelection::Only(a)
            }
            _ => SectorSelection::All,
        }
    }

    /// Resolve against a basis, adding `−l` for every `l` so that Hermitian
    /// partners are always evolved together.
    pub fn resolve(&self, map: &SectorMap) -> Vec<SectorLabel> {
        let present = map.labels();
        match self {
            SectorSelection::All => present.into_iter().collect(),
            SectorSelection::Only(set) => {
                let mut out: BTreeSet<SectorLabel> = BTreeSet::new();
                for &(x, y) in set {
                    out.insert((x, y));
                    out.insert((-x, -y));
                }
                out.into_iter().filter(|l| present.contains(l)).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::master_equation::{for_each_term, LossConfig, SystemConfig};

    #[test]
    fn sectors_partition_all_elements() {
        let t = Truncation::new(3, 2);
        let map = SectorMap::new(t);
        let mut seen = vec![false; t.dim() * t.dim()];
        for l in map.labels() {
            for (a, b) in map.elements(l) {
                let i = a as usize * t.dim() + b as usize;
                assert!(!seen[i]);
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn generator_never_leaves_a_sector() {
        let t = Truncation::new(3, 3);
        let sys = SystemConfig { delta_p: 0.3, delta_c: 0.2, ..Default::default() };
        let loss = LossConfig { kappa1: 0.1, kappa2: 0.2, r13: 0.3, r23: 0.4, r12: 0.5, g31: 0.1, g32: 0.1, g21: 0.1 };
        let label_of = |a: usize, b: usize| {
            let (x, y) = (t.unflatten(a).unwrap(), t.unflatten(b).unwrap());
            let (la, lb) = (x.excitation_labels(), y.excitation_labels());
            (la.0 - lb.0, la.1 - lb.1)
        };
        for a in 0..t.dim() {
            for b in 0..t.dim() {
                let own = label_of(a, b);
                for_each_term(t, &sys, &loss, a, b, |sa, sb, _, _| {
                    assert_eq!(label_of(sa, sb), own);
                });
            }
        }
    }

    #[test]
    fn selection_adds_conjugate_sectors() {
        let map = SectorMap::new(Truncation::new(2, 2));
        let got = SectorSelection::only([COHERENCE_21]).resolve(&map);
        assert_eq!(got, vec![(-1, 1), (1, -1)]);
        let diag = SectorSelection::only([DIAGONAL]).resolve(&map);
        assert_eq!(diag, vec![(0, 0)]);
    }
}
