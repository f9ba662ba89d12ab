//! Følner sets for tiled groups.
//!
//! The search runs in `D`: with `K ⊂ ⋃ rep(hᵢ)U` and `U² ∪ U⁻¹U` covered by
//! `L` tiles `rep(kⱼ)U`, a box `E ⊂ D` with
//! `|kⱼhᵢ^{±1}E Δ E| ≤ (ε/L)|E|` for all `i, j` gives
//! `|xUE Δ UE| ≤ 2ε|UE|` for every `x ∈ KU`. The second inequality is then
//! recounted atom by atom and stored as the certificate.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::{Elem, GroupKind, Label, TiledGroup};
use crate::{Error, Result};

/// One tested `x ∈ KU`.
#[derive(Debug, Clone, PartialEq)]
pub struct FolnerEntry {
    pub x: Elem,
    /// `|xUE Δ UE|` in atoms.
    pub sym_diff_atoms: u64,
    /// `|UE|` in atoms.
    pub ue_atoms: u64,
}

impl FolnerEntry {
    pub fn ratio(&self) -> f64 {
        self.sym_diff_atoms as f64 / self.ue_atoms as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FolnerCertificate {
    pub epsilon: f64,
    pub entries: Vec<FolnerEntry>,
}

impl FolnerCertificate {
    /// `|xUE Δ UE| ≤ 2ε|UE|` for every entry.
    pub fn holds(&self) -> bool {
        self.entries.iter().all(|e| e.sym_diff_atoms as f64 <= 2.0 * self.epsilon * e.ue_atoms as f64)
    }

    pub fn worst_ratio(&self) -> f64 {
        self.entries.iter().map(FolnerEntry::ratio).fold(0.0, f64::max)
    }
}

/// A box `E = ∏ [0, nᵢ)` in `D` with its certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct FolnerSet {
    group: TiledGroup,
    shape: [usize; 3],
    /// Search radius at which `E` was found.
    pub radius: usize,
    /// Number of tiles covering `U² ∪ U⁻¹U`.
    pub cover: usize,
    /// `max_t |tE Δ E| / |E|` over the `D`-level test set.
    pub d_ratio: f64,
    pub certificate: FolnerCertificate,
}

impl FolnerSet {
    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, l: Label) -> bool {
        in_box(&self.shape, l)
    }

    pub fn labels(&self) -> Vec<Label> {
        box_iter(self.shape).collect()
    }

    pub fn group(&self) -> TiledGroup {
        self.group
    }
}

fn in_box(shape: &[usize; 3], l: Label) -> bool {
    l.0.iter().zip(shape).all(|(&c, &n)| c >= 0 && (c as usize) < n)
}

fn box_iter(shape: [usize; 3]) -> impl Iterator<Item = Label> {
    let [a, b, c] = shape.map(|n| n as i64);
    (0..a).flat_map(move |x| (0..b).flat_map(move |y| (0..c).map(move |z| Label([x, y, z]))))
}

/// `|tE ∩ E|` for the box `E` with the given shape.
fn box_overlap(group: &TiledGroup, shape: &[usize; 3], t: Label) -> u64 {
    let n = shape.map(|v| v as i64);
    let overlap = |len: i64, shift: i64| (len - shift.abs()).max(0) as u64;
    match group.kind() {
        GroupKind::Heisenberg => {
            let [p, s, u] = t.0;
            let x = overlap(n[0], p);
            let (lo, hi) = ((-s).max(0), n[1].min(n[1] - s));
            let z: u64 = (lo..hi).map(|y| overlap(n[2], u + p * y)).sum();
            x * z
        }
        // the parity coordinate runs over all of ℤ/2
        GroupKind::ZxS3 { .. } => overlap(n[0], t.0[0]) * n[1] as u64,
        GroupKind::Lattice { .. } | GroupKind::Grid { .. } => (0..3).map(|i| overlap(n[i], t.0[i])).product(),
    }
}

/// Candidate boxes of radius `r`, in search order.
fn candidates(group: &TiledGroup, r: usize) -> Vec<[usize; 3]> {
    match group.kind() {
        GroupKind::Heisenberg => alloc::vec![[r, r, r * r]],
        GroupKind::ZxS3 { .. } => alloc::vec![[r, 2, 1]],
        GroupKind::Lattice { dim } | GroupKind::Grid { dim, .. } => {
            let mut out = Vec::new();
            let total = r.pow(dim as u32);
            for idx in 0..total {
                let mut shape = [1; 3];
                let mut rest = idx;
                for axis in (0..dim).rev() {
                    shape[axis] = rest % r + 1;
                    rest /= r;
                }
                if shape[..dim].contains(&r) {
                    out.push(shape);
                }
            }
            out
        }
    }
}

/// Labels of the tiles meeting `U² ∪ U⁻¹U`.
pub(crate) fn cover_labels(group: &TiledGroup) -> BTreeSet<Label> {
    let u = group.tile_atom_set();
    let u2 = group.atoms_product(&u, &u);
    let uiu = group.atoms_product(&group.atoms_inverse(&u), &u);
    u2.union(&uiu).map(|&a| group.locate_atom(a)).collect()
}

/// Searches boxes of radius `1..=max_radius` for a Følner set of
/// `K·U` (`K` given by tile labels) and certifies it atom by atom.
pub fn folner_set(group: &TiledGroup, k: &[Label], epsilon: f64, max_radius: usize) -> Result<FolnerSet> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("epsilon must be positive, got {epsilon}")));
    }
    let cover = cover_labels(group);
    let l = cover.len();
    let mut tests = BTreeSet::new();
    for &kj in &cover {
        for &h in k {
            tests.insert(group.label_mul(kj, h));
            tests.insert(group.label_mul(kj, group.label_inv(h)));
        }
    }

    let mut best = f64::INFINITY;
    for r in 1..=max_radius {
        for shape in candidates(group, r) {
            let size: u64 = shape.iter().map(|&n| n as u64).product();
            let mut worst = 0u64;
            for &t in &tests {
                worst = worst.max(2 * (size - box_overlap(group, &shape, t)));
            }
            let ratio = worst as f64 / size as f64;
            best = best.min(ratio);
            if (l as u64 * worst) as f64 <= epsilon * size as f64 {
                let certificate = certify(group, &shape, k, epsilon);
                return Ok(FolnerSet { group: *group, shape, radius: r, cover: l, d_ratio: ratio, certificate });
            }
        }
    }
    Err(Error::FolnerExhausted { radius: max_radius, best_ratio: best })
}

fn certify(group: &TiledGroup, shape: &[usize; 3], k: &[Label], epsilon: f64) -> FolnerCertificate {
    let tile: Vec<Elem> = group.tile_atom_set().into_iter().collect();
    let points = group.tile_points();
    let ue: Vec<Elem> = box_iter(*shape)
        .flat_map(|e| {
            let r = group.rep(e);
            tile.iter().map(move |&a| group.mul(r, a))
        })
        .collect();
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for &h in k {
        for &u in &points {
            let x = group.mul(group.rep(h), u);
            if !seen.insert(x) {
                continue;
            }
            let xi = group.inv(x);
            let outside = |g: Elem| !in_box(shape, group.locate_atom(g)) as u64;
            let gained: u64 = ue.iter().map(|&a| outside(group.mul(x, a))).sum();
            let lost: u64 = ue.iter().map(|&a| outside(group.mul(xi, a))).sum();
            entries.push(FolnerEntry { x, sym_diff_atoms: gained + lost, ue_atoms: ue.len() as u64 });
        }
    }
    FolnerCertificate { epsilon, entries }
}
