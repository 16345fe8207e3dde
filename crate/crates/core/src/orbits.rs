//! Canonical representation and enumeration of orbits of k-tuples.
//!
//! An orbit is an equality pattern on the coordinates (a partition into
//! blocks, numbered by first occurrence) together with orbital labels between
//! distinct blocks. In a homogeneous structure this data determines the tuple
//! up to automorphism, so orbits are the unit of every relation
//! representation in this crate.

use std::collections::BTreeSet;
use std::fmt;

use crate::binary_core::{embeds_into_core, BinaryCore, CoreSignature, FiniteStructure, OrbitalId};
use crate::error::Error;
use crate::Result;

/// Default cap on the arity of orbit enumeration.
pub const DEFAULT_ARITY_CAP: usize = 8;

/// The label of an ordered coordinate pair: equality or an orbital.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PairLabel {
    Eq,
    Orbital(OrbitalId),
}

impl PairLabel {
    pub fn inverse(self, sig: &CoreSignature) -> PairLabel {
        match self {
            PairLabel::Eq => PairLabel::Eq,
            PairLabel::Orbital(o) => PairLabel::Orbital(sig.inverse(o)),
        }
    }

    pub fn is_eq(self) -> bool {
        matches!(self, PairLabel::Eq)
    }
}

/// A small set of pair labels, as a bitmask. Bit 0 is equality, bit `1 + i`
/// is the orbital with index `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LabelSet(pub u64);

impl LabelSet {
    pub const EMPTY: LabelSet = LabelSet(0);

    pub fn eq_only() -> LabelSet {
        LabelSet(1)
    }

    /// All orbitals plus equality.
    pub fn full(sig: &CoreSignature) -> LabelSet {
        LabelSet((1u64 << (sig.orbital_count() + 1)) - 1)
    }

    /// All orbitals, without equality.
    pub fn all_orbitals(sig: &CoreSignature) -> LabelSet {
        LabelSet(Self::full(sig).0 & !1)
    }

    pub fn singleton(label: PairLabel) -> LabelSet {
        let mut s = LabelSet::EMPTY;
        s.insert(label);
        s
    }

    pub fn insert(&mut self, label: PairLabel) {
        match label {
            PairLabel::Eq => self.0 |= 1,
            PairLabel::Orbital(o) => self.0 |= 1u64 << (1 + o.index()),
        }
    }

    pub fn contains(self, label: PairLabel) -> bool {
        match label {
            PairLabel::Eq => self.0 & 1 != 0,
            PairLabel::Orbital(o) => self.0 & (1u64 << (1 + o.index())) != 0,
        }
    }

    pub fn contains_eq(self) -> bool {
        self.0 & 1 != 0
    }

    pub fn intersect(self, other: LabelSet) -> LabelSet {
        LabelSet(self.0 & other.0)
    }

    pub fn union(self, other: LabelSet) -> LabelSet {
        LabelSet(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, other: LabelSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = PairLabel> {
        (0..64).filter_map(move |bit| {
            if self.0 & (1u64 << bit) != 0 {
                Some(if bit == 0 {
                    PairLabel::Eq
                } else {
                    PairLabel::Orbital(OrbitalId::from_index(bit - 1))
                })
            } else {
                None
            }
        })
    }

    pub fn orbitals(self) -> impl Iterator<Item = OrbitalId> {
        self.iter().filter_map(|l| match l {
            PairLabel::Orbital(o) => Some(o),
            PairLabel::Eq => None,
        })
    }

    pub fn map_inverse(self, sig: &CoreSignature) -> LabelSet {
        let mut out = LabelSet::EMPTY;
        for l in self.iter() {
            out.insert(l.inverse(sig));
        }
        out
    }
}

fn tri_index(a: usize, b: usize) -> usize {
    debug_assert!(a < b);
    b * (b - 1) / 2 + a
}

/// The orbit of a k-tuple: canonical block partition plus orbital labels
/// between blocks (stored for block pairs `a < b` only).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Orbit {
    partition: Vec<u8>,
    labels: Vec<OrbitalId>,
}

impl Orbit {
    pub fn arity(&self) -> usize {
        self.partition.len()
    }

    pub fn block_count(&self) -> usize {
        self.partition.iter().map(|b| *b as usize + 1).max().unwrap_or(0)
    }

    pub fn block_of(&self, coordinate: usize) -> usize {
        self.partition[coordinate] as usize
    }

    pub fn partition(&self) -> &[u8] {
        &self.partition
    }

    pub fn is_injective(&self) -> bool {
        self.block_count() == self.arity()
    }

    pub fn is_constant(&self) -> bool {
        self.block_count() <= 1
    }

    /// The label of the ordered coordinate pair `(i, j)`: equality when the
    /// coordinates share a block, otherwise the stored orbital.
    pub fn pair_label(&self, i: usize, j: usize, sig: &CoreSignature) -> PairLabel {
        let (a, b) = (self.block_of(i), self.block_of(j));
        if a == b {
            PairLabel::Eq
        } else if a < b {
            PairLabel::Orbital(self.labels[tri_index(a, b)])
        } else {
            PairLabel::Orbital(sig.inverse(self.labels[tri_index(b, a)]))
        }
    }

    /// The structure induced on the blocks; labels share the storage order of
    /// [`FiniteStructure`].
    pub fn quotient(&self) -> FiniteStructure {
        FiniteStructure::from_upper_triangle(self.block_count(), self.labels.clone())
            .expect("orbit labels are total by construction")
    }

    /// The single 1-orbit.
    pub fn point() -> Orbit {
        Orbit {
            partition: vec![0],
            labels: vec![],
        }
    }

    /// The 2-orbit with both coordinates equal.
    pub fn eq_pair() -> Orbit {
        Orbit {
            partition: vec![0, 0],
            labels: vec![],
        }
    }

    /// The injective 2-orbit labeled by `o`.
    pub fn orbital_pair(o: OrbitalId) -> Orbit {
        Orbit {
            partition: vec![0, 1],
            labels: vec![o],
        }
    }

    /// The 2-orbit carrying `label`.
    pub fn pair(label: PairLabel) -> Orbit {
        match label {
            PairLabel::Eq => Orbit::eq_pair(),
            PairLabel::Orbital(o) => Orbit::orbital_pair(o),
        }
    }

    /// Reads a 2-orbit back as a pair label.
    pub fn as_pair_label(&self) -> Option<PairLabel> {
        if self.arity() != 2 {
            return None;
        }
        Some(if self.block_count() == 1 {
            PairLabel::Eq
        } else {
            PairLabel::Orbital(self.labels[0])
        })
    }
}

impl fmt::Display for Orbit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, b) in self.partition.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, "|")?;
        for (i, o) in self.labels.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{o}")?;
        }
        write!(f, "]")
    }
}

/// Builds the canonical orbit described by a raw equality pattern and raw
/// pair labels. Two presentations of the same orbit map to identical values;
/// labels violating the involution or the pattern are rejected.
pub fn canonicalize(
    arity: usize,
    pattern: &[usize],
    labels: &[(usize, usize, PairLabel)],
    sig: &CoreSignature,
) -> Result<Orbit> {
    if pattern.len() != arity {
        return Err(Error::InvalidInput(format!(
            "pattern length {} does not match arity {arity}",
            pattern.len()
        )));
    }
    // Renumber blocks by first occurrence.
    let mut canon: Vec<u8> = Vec::with_capacity(arity);
    let mut seen: Vec<usize> = Vec::new();
    for &raw in pattern {
        let id = match seen.iter().position(|s| *s == raw) {
            Some(pos) => pos,
            None => {
                seen.push(raw);
                seen.len() - 1
            }
        };
        if id > u8::MAX as usize {
            return Err(Error::InvalidInput("too many blocks".into()));
        }
        canon.push(id as u8);
    }
    let block_count = seen.len();
    let mut slots: Vec<Option<OrbitalId>> = vec![None; block_count * block_count.saturating_sub(1) / 2];

    for &(i, j, label) in labels {
        if i >= arity || j >= arity {
            return Err(Error::CoordinateOutOfRange { index: i.max(j), arity });
        }
        let (a, b) = (canon[i] as usize, canon[j] as usize);
        if a == b {
            if !label.is_eq() {
                return Err(Error::IncoherentLabels(format!(
                    "coordinates {i},{j} share a block but carry an orbital label"
                )));
            }
            continue;
        }
        let o = match label {
            PairLabel::Eq => {
                return Err(Error::IncoherentLabels(format!(
                    "coordinates {i},{j} lie in distinct blocks but are labeled equal"
                )))
            }
            PairLabel::Orbital(o) => o,
        };
        let (lo, hi, oriented) = if a < b { (a, b, o) } else { (b, a, sig.inverse(o)) };
        let slot = &mut slots[tri_index(lo, hi)];
        match *slot {
            None => *slot = Some(oriented),
            Some(prev) if prev == oriented => {}
            Some(_) => {
                return Err(Error::IncoherentLabels(format!(
                    "conflicting labels for block pair ({lo},{hi})"
                )))
            }
        }
    }

    let mut out = Vec::with_capacity(slots.len());
    for (idx, slot) in slots.iter().enumerate() {
        match slot {
            Some(o) => out.push(*o),
            None => {
                return Err(Error::IncoherentLabels(format!(
                    "no label given for block pair slot {idx}"
                )))
            }
        }
    }
    Ok(Orbit {
        partition: canon,
        labels: out,
    })
}

/// The orbit of the tuple projected to `indices` (repetitions allowed).
pub fn restrict_orbit(orbit: &Orbit, indices: &[usize], sig: &CoreSignature) -> Orbit {
    let mut canon: Vec<u8> = Vec::with_capacity(indices.len());
    let mut seen: Vec<usize> = Vec::new();
    let mut reps: Vec<usize> = Vec::new(); // representative source coordinate per new block
    for &idx in indices {
        debug_assert!(idx < orbit.arity(), "index within arity");
        let old_block = orbit.block_of(idx);
        let id = match seen.iter().position(|s| *s == old_block) {
            Some(pos) => pos,
            None => {
                seen.push(old_block);
                reps.push(idx);
                seen.len() - 1
            }
        };
        canon.push(id as u8);
    }
    let blocks = seen.len();
    let mut labels = Vec::with_capacity(blocks * blocks.saturating_sub(1) / 2);
    for b in 1..blocks {
        for a in 0..b {
            match orbit.pair_label(reps[a], reps[b], sig) {
                PairLabel::Orbital(o) => labels.push(o),
                PairLabel::Eq => unreachable!("distinct new blocks come from distinct old blocks"),
            }
        }
    }
    Orbit {
        partition: canon,
        labels,
    }
}

/// Constraints on the labels an orbit may carry, per ordered coordinate pair
/// `i < j`. Used to enumerate only the orbits compatible with known pair
/// domains.
pub trait PairFilter {
    fn allowed(&self, i: usize, j: usize) -> LabelSet;
}

/// The unconstrained filter.
pub struct Unconstrained<'a>(pub &'a CoreSignature);

impl PairFilter for Unconstrained<'_> {
    fn allowed(&self, _i: usize, _j: usize) -> LabelSet {
        LabelSet::full(self.0)
    }
}

impl<F: Fn(usize, usize) -> LabelSet> PairFilter for F {
    fn allowed(&self, i: usize, j: usize) -> LabelSet {
        self(i, j)
    }
}

/// Enumerates all orbits of arity `k` whose quotient embeds into the core and
/// whose pair labels satisfy `filter`. The result is canonically ordered.
pub fn enumerate_orbits_filtered(
    core: &BinaryCore,
    k: usize,
    filter: &impl PairFilter,
) -> BTreeSet<Orbit> {
    let sig = core.signature();
    let mut out = BTreeSet::new();
    if k == 0 {
        return out;
    }
    let mut rgs: Vec<u8> = vec![0; k];
    enumerate_partitions(core, sig, k, &mut rgs, 1, filter, &mut out);
    out
}

fn enumerate_partitions(
    core: &BinaryCore,
    sig: &CoreSignature,
    k: usize,
    rgs: &mut Vec<u8>,
    depth: usize,
    filter: &impl PairFilter,
    out: &mut BTreeSet<Orbit>,
) {
    if depth == k {
        fill_labels(core, sig, rgs, filter, out);
        return;
    }
    let max_block = *rgs[..depth].iter().max().unwrap();
    'blocks: for b in 0..=(max_block + 1) {
        // Merging `depth` into block b requires equality to be allowed with
        // every earlier coordinate of that block.
        for (i, block) in rgs[..depth].iter().enumerate() {
            if *block == b && !filter.allowed(i, depth).contains_eq() {
                continue 'blocks;
            }
        }
        rgs[depth] = b;
        enumerate_partitions(core, sig, k, rgs, depth + 1, filter, out);
    }
    rgs[depth] = 0;
}

fn fill_labels(
    core: &BinaryCore,
    sig: &CoreSignature,
    rgs: &[u8],
    filter: &impl PairFilter,
    out: &mut BTreeSet<Orbit>,
) {
    let blocks = rgs.iter().map(|b| *b as usize + 1).max().unwrap_or(0);
    let slot_count = blocks * blocks.saturating_sub(1) / 2;
    // Allowed orbital mask per block-pair slot, intersected over all
    // coordinate pairs spanning the two blocks.
    let mut masks: Vec<LabelSet> = vec![LabelSet::all_orbitals(sig); slot_count];
    for j in 0..rgs.len() {
        for i in 0..j {
            let (a, b) = (rgs[i] as usize, rgs[j] as usize);
            if a == b {
                continue;
            }
            let allowed = filter.allowed(i, j);
            let (lo, hi, oriented) = if a < b {
                (a, b, allowed)
            } else {
                (b, a, allowed.map_inverse(sig))
            };
            let slot = tri_index(lo, hi);
            masks[slot] = masks[slot].intersect(oriented);
            if masks[slot].is_empty() {
                return;
            }
        }
    }
    let mut labels: Vec<OrbitalId> = Vec::with_capacity(slot_count);
    assign_labels(core, rgs, blocks, &masks, &mut labels, out);
}

fn assign_labels(
    core: &BinaryCore,
    rgs: &[u8],
    blocks: usize,
    masks: &[LabelSet],
    labels: &mut Vec<OrbitalId>,
    out: &mut BTreeSet<Orbit>,
) {
    if labels.len() == masks.len() {
        let orbit = Orbit {
            partition: rgs.to_vec(),
            labels: labels.clone(),
        };
        if blocks < 3 || embeds_into_core(&orbit.quotient(), core) {
            out.insert(orbit);
        }
        return;
    }
    let slot = labels.len();
    for o in masks[slot].orbitals() {
        labels.push(o);
        assign_labels(core, rgs, blocks, masks, labels, out);
        labels.pop();
    }
}

/// All orbits of arity `k` over the core, up to `cap`.
pub fn enumerate_orbits_with_cap(core: &BinaryCore, k: usize, cap: usize) -> Result<BTreeSet<Orbit>> {
    if k > cap {
        return Err(Error::CapExceeded {
            what: "orbit enumeration arity",
            requested: k,
            limit: cap,
        });
    }
    Ok(enumerate_orbits_filtered(core, k, &Unconstrained(core.signature())))
}

/// All orbits of arity `k` over the core, up to the default cap.
pub fn enumerate_orbits(core: &BinaryCore, k: usize) -> Result<BTreeSet<Orbit>> {
    enumerate_orbits_with_cap(core, k, DEFAULT_ARITY_CAP)
}
