//! Atom-to-atom maps with exact fibers.

use std::collections::{BTreeMap, HashMap};

use crate::atom::AtomId;
use crate::error::{Error, Result};
use crate::measure::{Family, MeasurableSet, MeasureSpace, SpaceWindow};
use crate::verdict::{Collision, Status, Verdict, Witness};

/// An explicit map on a finite space together with its precomputed fibers.
#[derive(Clone, Debug, PartialEq)]
pub struct MapTable {
    forward: BTreeMap<AtomId, AtomId>,
    fibers: BTreeMap<AtomId, Vec<AtomId>>,
}

impl MapTable {
    pub fn entries(&self) -> impl Iterator<Item = (&AtomId, &AtomId)> {
        self.forward.iter()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Transformation {
    Identity,
    /// `i ↦ i + k` on integer atoms.
    Shift(i64),
    /// `(i,0) ↦ (i+2,0)`, `(n,j) ↦ (n,j-1)`.
    Comb,
    Table(MapTable),
}

impl Transformation {
    /// Builds an explicit map on a finite space. Every atom needs exactly one
    /// image and every image must lie in the space.
    pub fn table(space: &MeasureSpace, pairs: impl IntoIterator<Item = (AtomId, AtomId)>) -> Result<Self> {
        if !space.is_finite_explicit() {
            return Err(Error::IncompatibleMap("explicit maps need a finite space".into()));
        }
        let mut forward = BTreeMap::new();
        for (from, to) in pairs {
            for a in [from, to] {
                if !space.contains(&a) {
                    return Err(Error::AtomNotInSpace(a));
                }
            }
            if forward.insert(from, to).is_some() {
                return Err(Error::IncompatibleMap(format!("atom {from} is mapped twice")));
            }
        }
        if let Some(a) = space.atoms().find(|a| !forward.contains_key(a)) {
            return Err(Error::IncompatibleMap(format!("atom {a} has no image")));
        }
        let mut fibers: BTreeMap<AtomId, Vec<AtomId>> = BTreeMap::new();
        for (from, to) in &forward {
            fibers.entry(*to).or_default().push(*from);
        }
        Ok(Transformation::Table(MapTable { forward, fibers }))
    }

    /// Checks that the map is total on the space's atoms and stays inside it.
    pub fn check_compatible(&self, space: &MeasureSpace) -> Result<()> {
        let ok = match (self, space.family()) {
            (Transformation::Identity, _) => true,
            (Transformation::Shift(0), _) => true,
            (Transformation::Shift(k), Some(Family::UnilateralShift { .. })) => *k > 0,
            (Transformation::Shift(_), Some(Family::BilateralShift { .. } | Family::BilateralValley { .. })) => true,
            (Transformation::Comb, Some(Family::Comb)) => true,
            (Transformation::Table(t), None) => {
                space.atom_count() == Some(t.forward.len()) && t.forward.keys().all(|a| space.contains(a))
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::IncompatibleMap(format!("{} does not act on this space", self.name())))
        }
    }

    pub fn name(&self) -> String {
        match self {
            Transformation::Identity => "identity".into(),
            Transformation::Shift(k) => format!("shift({k})"),
            Transformation::Comb => "comb".into(),
            Transformation::Table(_) => "table".into(),
        }
    }

    /// Image of an atom. Only meaningful on a compatible space.
    pub fn apply(&self, a: &AtomId) -> AtomId {
        match (self, *a) {
            (Transformation::Identity, _) => *a,
            (Transformation::Shift(k), AtomId::Int(i)) => AtomId::Int(i + k),
            (Transformation::Comb, AtomId::Pair(i, 0)) => AtomId::Pair(i + 2, 0),
            (Transformation::Comb, AtomId::Pair(n, j)) => AtomId::Pair(n, j - 1),
            (Transformation::Table(t), _) => *t.forward.get(a).unwrap_or(a),
            _ => *a,
        }
    }

    /// Exact fiber `τ^{-1}({a})`, in canonical order.
    pub fn fiber(&self, space: &MeasureSpace, a: &AtomId) -> Vec<AtomId> {
        if !space.contains(a) {
            return Vec::new();
        }
        match (self, *a) {
            (Transformation::Identity, _) => vec![*a],
            (Transformation::Shift(k), AtomId::Int(i)) => {
                let b = AtomId::Int(i - k);
                if space.contains(&b) {
                    vec![b]
                } else {
                    Vec::new()
                }
            }
            (Transformation::Comb, AtomId::Pair(i, 0)) => {
                let mut out = vec![AtomId::Pair(i - 2, 0)];
                if i >= 1 {
                    out.push(AtomId::Pair(i, 1));
                }
                out.sort();
                out
            }
            (Transformation::Comb, AtomId::Pair(n, j)) => vec![AtomId::Pair(n, j + 1)],
            (Transformation::Table(t), _) => t.fibers.get(a).cloned().unwrap_or_default(),
            _ => Vec::new(),
        }
    }

    pub fn preimage(&self, space: &MeasureSpace, set: &MeasurableSet) -> MeasurableSet {
        set.atoms().flat_map(|a| self.fiber(space, a)).collect()
    }

    pub fn image(&self, set: &MeasurableSet) -> MeasurableSet {
        set.atoms().map(|a| self.apply(a)).collect()
    }

    /// The inverse map when `τ` is a bijection of the space.
    pub fn inverse(&self, space: &MeasureSpace) -> Option<Transformation> {
        match self {
            Transformation::Identity | Transformation::Shift(0) => Some(Transformation::Identity),
            Transformation::Shift(k) => match space.family() {
                Some(Family::BilateralShift { .. } | Family::BilateralValley { .. }) => Some(Transformation::Shift(-k)),
                _ => None,
            },
            Transformation::Comb => None,
            Transformation::Table(t) => {
                if t.fibers.len() != t.forward.len() {
                    return None;
                }
                Transformation::table(space, t.forward.iter().map(|(a, b)| (*b, *a))).ok()
            }
        }
    }

    pub fn is_invertible(&self, space: &MeasureSpace) -> bool {
        self.inverse(space).is_some()
    }
}

/// `τ^{-n}(set)`.
pub fn preimage_n(space: &MeasureSpace, tau: &Transformation, set: &MeasurableSet, n: usize) -> MeasurableSet {
    let mut current = set.clone();
    for _ in 0..n {
        if current.is_empty() {
            break;
        }
        current = tau.preimage(space, &current);
    }
    current
}

/// `τ^n(set)`.
pub fn forward_image_n(tau: &Transformation, set: &MeasurableSet, n: usize) -> MeasurableSet {
    (0..n).fold(set.clone(), |s, _| tau.image(&s))
}

/// First collision `τ(a) = τ(b)` among window atoms, scanning in canonical order.
pub fn first_collision(tau: &Transformation, window: &SpaceWindow) -> Option<Collision> {
    let mut seen: HashMap<AtomId, AtomId> = HashMap::new();
    for a in &window.atoms {
        let image = tau.apply(a);
        if let Some(first) = seen.get(&image) {
            return Some(Collision { first: *first, second: *a, image });
        }
        seen.insert(image, *a);
    }
    None
}

pub fn check_injective(tau: &Transformation, window: &SpaceWindow) -> Result<Verdict> {
    if window.atoms.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let mut witness = Witness::default();
    Ok(match first_collision(tau, window) {
        Some(c) => {
            witness.add_set([c.first, c.second].into_iter().collect());
            let summary = format!("τ({}) = {} = τ({})", c.first, c.image, c.second);
            witness.collision = Some(c);
            Verdict::new(Status::Refuted, window.size, summary).with_witness(witness)
        }
        None => {
            witness.add_set(window.atoms.iter().copied().collect());
            Verdict::new(Status::Confirmed, window.size, format!("no collision among the first {} atoms", window.size))
                .with_witness(witness)
        }
    })
}
