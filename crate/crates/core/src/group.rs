//! Tiled groups `G = ⊔ rep(ḣ)·U` with their index group `D`.
//!
//! Four families ship:
//!
//! | kind | `G` | tile `U` | `D` |
//! |------|-----|----------|-----|
//! | [`GroupKind::Lattice`] | `ℤᵈ` | `{0}` | `ℤᵈ` |
//! | [`GroupKind::Heisenberg`] | integer Heisenberg group | `{e}` | `G` |
//! | [`GroupKind::ZxS3`] | `ℤ × S₃` | `{0} × A₃` | `ℤ × ℤ/2` |
//! | [`GroupKind::Grid`] | `ℝᵈ` on a `1/2q` lattice | `[-½, ½)ᵈ`, `q` cells per axis | `ℤᵈ` |
//!
//! Elements of `G` and of `D` are stored as three `i64` coordinates padded
//! with zeros, so they are `Copy`, totally ordered and cheap to hash.
//! Grid elements are numerators over `2q`: the element `[21]` of a `q = 8`
//! grid is the point `21/16 = 1.3125`.
//!
//! Haar measure is normalized so that `|U| = 1`; measurable sets are handled
//! as finite unions of atoms (group elements for discrete tiles, cells of
//! width `1/2q` for grids).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

mod folner;
mod window;

pub use folner::{folner_set, FolnerCertificate, FolnerEntry, FolnerSet};
pub use window::{Window, WindowShape};

/// Word lengths of every label within distance `cap` of the identity.
pub fn word_lengths(group: &TiledGroup, cap: usize) -> BTreeMap<Label, usize> {
    window::ball(group, cap)
}

/// Largest supported lattice or grid dimension.
pub const MAX_DIM: usize = 3;

/// Element of the group `G`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Elem(pub [i64; MAX_DIM]);

/// Element of the index group `D`; labels tiles and side diagonals.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Label(pub [i64; MAX_DIM]);

impl fmt::Debug for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Elem{:?}", self.0)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Label{:?}", self.0)
    }
}

/// Choice of representatives `rep(n, odd)` for `ℤ × S₃`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Transversal {
    /// `rep(n, odd) = (n, (12))`; the representatives form a subgroup.
    Fixed,
    /// `(n, (12))` for even `n`, `(n, (13))` for odd `n`; not a subgroup.
    Alternating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupKind {
    Lattice { dim: usize },
    Heisenberg,
    ZxS3 { transversal: Transversal },
    Grid { dim: usize, q: u32 },
}

// One-line notation of the permutations of {1,2,3}. Indices 0, 4, 5 are A₃.
const S3: [[u8; 3]; 6] = [[1, 2, 3], [2, 1, 3], [3, 2, 1], [1, 3, 2], [2, 3, 1], [3, 1, 2]];
const A3: [i64; 3] = [0, 4, 5];

fn s3_index(p: [u8; 3]) -> i64 {
    S3.iter().position(|&s| s == p).expect("permutation of {1,2,3}") as i64
}

fn s3_compose(a: i64, b: i64) -> i64 {
    let (a, b) = (S3[a as usize], S3[b as usize]);
    s3_index([a[b[0] as usize - 1], a[b[1] as usize - 1], a[b[2] as usize - 1]])
}

fn s3_inverse(a: i64) -> i64 {
    let p = S3[a as usize];
    let mut inv = [0u8; 3];
    for (i, &v) in p.iter().enumerate() {
        inv[v as usize - 1] = i as u8 + 1;
    }
    s3_index(inv)
}

fn s3_parity(a: i64) -> i64 {
    if A3.contains(&a) {
        0
    } else {
        1
    }
}

/// A group together with its tiling. Small and `Copy`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TiledGroup {
    kind: GroupKind,
}

/// Result of [`TiledGroup::overlap_count`]. The bound is the rational
/// `bound_atoms / tile_atoms`, so `count ≤ bound` is decided exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlapCount {
    pub count: u64,
    pub bound_atoms: u64,
    pub tile_atoms: u64,
}

impl OverlapCount {
    pub fn bound(&self) -> f64 {
        self.bound_atoms as f64 / self.tile_atoms as f64
    }

    pub fn holds(&self) -> bool {
        self.count as u128 * self.tile_atoms as u128 <= self.bound_atoms as u128
    }
}

/// Result of [`TiledGroup::diagonal_overlap_constant`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagonalOverlap {
    /// `⌈|U²U⁻²U| / |U|⌉`.
    pub n: u64,
    pub product_atoms: u64,
    pub tile_atoms: u64,
    /// Labels checked for approximate-block/block coincidence.
    pub labels_checked: usize,
    /// Labels whose approximate block diagonal differs from the block diagonal.
    pub mismatches: Vec<Label>,
}

impl TiledGroup {
    pub fn new(kind: GroupKind) -> Result<Self> {
        match kind {
            GroupKind::Lattice { dim } | GroupKind::Grid { dim, .. } if dim == 0 || dim > MAX_DIM => {
                Err(Error::InvalidArgument(format!("dimension {dim} outside 1..={MAX_DIM}")))
            }
            GroupKind::Grid { q: 0, .. } => Err(Error::InvalidArgument("q must be at least 1".into())),
            _ => Ok(Self { kind }),
        }
    }

    pub fn lattice(dim: usize) -> Result<Self> {
        Self::new(GroupKind::Lattice { dim })
    }

    pub fn heisenberg() -> Self {
        Self { kind: GroupKind::Heisenberg }
    }

    pub fn z_x_s3(transversal: Transversal) -> Self {
        Self { kind: GroupKind::ZxS3 { transversal } }
    }

    pub fn grid(dim: usize, q: u32) -> Result<Self> {
        Self::new(GroupKind::Grid { dim, q })
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    /// Number of free coordinates of `D` (and of `G` for the discrete kinds).
    pub fn dim(&self) -> usize {
        match self.kind {
            GroupKind::Lattice { dim } | GroupKind::Grid { dim, .. } => dim,
            GroupKind::Heisenberg => 3,
            GroupKind::ZxS3 { .. } => 1,
        }
    }

    /// `|D|`-coordinates used in serialization.
    fn label_arity(&self) -> usize {
        match self.kind {
            GroupKind::ZxS3 { .. } => 2,
            _ => self.dim(),
        }
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self.kind, GroupKind::Grid { .. })
    }

    // ---- G ----------------------------------------------------------------

    pub fn identity(&self) -> Elem {
        Elem::default()
    }

    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        let (x, y) = (a.0, b.0);
        match self.kind {
            GroupKind::Lattice { .. } | GroupKind::Grid { .. } => Elem([x[0] + y[0], x[1] + y[1], x[2] + y[2]]),
            GroupKind::Heisenberg => Elem([x[0] + y[0], x[1] + y[1], x[2] + y[2] + x[0] * y[1]]),
            GroupKind::ZxS3 { .. } => Elem([x[0] + y[0], s3_compose(x[1], y[1]), 0]),
        }
    }

    pub fn inv(&self, a: Elem) -> Elem {
        let x = a.0;
        match self.kind {
            GroupKind::Lattice { .. } | GroupKind::Grid { .. } => Elem([-x[0], -x[1], -x[2]]),
            GroupKind::Heisenberg => Elem([-x[0], -x[1], -x[2] + x[0] * x[1]]),
            GroupKind::ZxS3 { .. } => Elem([-x[0], s3_inverse(x[1]), 0]),
        }
    }

    // ---- D ----------------------------------------------------------------

    pub fn label_identity(&self) -> Label {
        Label::default()
    }

    pub fn label_mul(&self, a: Label, b: Label) -> Label {
        let (x, y) = (a.0, b.0);
        match self.kind {
            GroupKind::Lattice { .. } | GroupKind::Grid { .. } => Label([x[0] + y[0], x[1] + y[1], x[2] + y[2]]),
            GroupKind::Heisenberg => Label([x[0] + y[0], x[1] + y[1], x[2] + y[2] + x[0] * y[1]]),
            GroupKind::ZxS3 { .. } => Label([x[0] + y[0], (x[1] + y[1]) & 1, 0]),
        }
    }

    pub fn label_inv(&self, a: Label) -> Label {
        let x = a.0;
        match self.kind {
            GroupKind::Lattice { .. } | GroupKind::Grid { .. } => Label([-x[0], -x[1], -x[2]]),
            GroupKind::Heisenberg => Label([-x[0], -x[1], -x[2] + x[0] * x[1]]),
            GroupKind::ZxS3 { .. } => Label([-x[0], x[1], 0]),
        }
    }

    /// Symmetric generating set of `D` defining its word metric.
    pub fn generators(&self) -> Vec<Label> {
        let unit = |i: usize, s: i64| {
            let mut c = [0; MAX_DIM];
            c[i] = s;
            Label(c)
        };
        match self.kind {
            GroupKind::Lattice { dim } | GroupKind::Grid { dim, .. } => {
                (0..dim).flat_map(|i| [unit(i, 1), unit(i, -1)]).collect()
            }
            GroupKind::Heisenberg => vec![unit(0, 1), unit(0, -1), unit(1, 1), unit(1, -1)],
            GroupKind::ZxS3 { .. } => vec![unit(0, 1), unit(0, -1), unit(1, 1)],
        }
    }

    /// Sup-norm of the free coordinates; boxes are balls of this gauge.
    pub fn box_norm(&self, l: Label) -> i64 {
        match self.kind {
            GroupKind::ZxS3 { .. } => l.0[0].abs(),
            _ => l.0[..self.dim()].iter().map(|c| c.abs()).max().unwrap_or(0),
        }
    }

    // ---- tiling -----------------------------------------------------------

    /// Number of grid points of the tile.
    pub fn tile_len(&self) -> usize {
        match self.kind {
            GroupKind::Lattice { .. } | GroupKind::Heisenberg => 1,
            GroupKind::ZxS3 { .. } => 3,
            GroupKind::Grid { dim, q } => (q as usize).pow(dim as u32),
        }
    }

    /// Haar weight of one tile grid point, `|U| / tile_len` with `|U| = 1`.
    pub fn tile_weight(&self) -> f64 {
        1.0 / self.tile_len() as f64
    }

    /// The `t`-th tile grid point (row-major over axes for grids).
    pub fn tile_point(&self, t: usize) -> Elem {
        match self.kind {
            GroupKind::Lattice { .. } | GroupKind::Heisenberg => Elem::default(),
            GroupKind::ZxS3 { .. } => Elem([0, A3[t], 0]),
            GroupKind::Grid { dim, q } => {
                let q = q as i64;
                let mut c = [0; MAX_DIM];
                let mut rest = t as i64;
                for axis in (0..dim).rev() {
                    let idx = rest % q;
                    rest /= q;
                    c[axis] = 2 * idx + 1 - q;
                }
                Elem(c)
            }
        }
    }

    pub fn tile_points(&self) -> Vec<Elem> {
        (0..self.tile_len()).map(|t| self.tile_point(t)).collect()
    }

    /// Transversal representative `rep(ḣ)`.
    pub fn rep(&self, l: Label) -> Elem {
        let c = l.0;
        match self.kind {
            GroupKind::Lattice { .. } | GroupKind::Heisenberg => Elem(c),
            GroupKind::ZxS3 { transversal } => {
                let odd = match transversal {
                    Transversal::Fixed => 1,
                    Transversal::Alternating if c[0].rem_euclid(2) == 0 => 1,
                    Transversal::Alternating => 2,
                };
                Elem([c[0], if c[1] == 0 { 0 } else { odd }, 0])
            }
            GroupKind::Grid { q, .. } => {
                let s = 2 * q as i64;
                Elem([c[0] * s, c[1] * s, c[2] * s])
            }
        }
    }

    /// The unique `ḣ` with `g ∈ rep(ḣ)·U`.
    pub fn locate(&self, g: Elem) -> Label {
        let c = g.0;
        match self.kind {
            GroupKind::Lattice { .. } | GroupKind::Heisenberg => Label(c),
            GroupKind::ZxS3 { .. } => Label([c[0], s3_parity(c[1]), 0]),
            GroupKind::Grid { dim, q } => {
                let q = q as i64;
                let mut l = [0; MAX_DIM];
                for axis in 0..dim {
                    l[axis] = (c[axis] + q).div_euclid(2 * q);
                }
                Label(l)
            }
        }
    }

    /// `g ↦ (ḣ, t)` with `rep(ḣ)·tile_point(t) = g`.
    pub fn decompose(&self, g: Elem) -> Result<(Label, usize)> {
        let l = self.locate(g);
        let u = self.mul(self.inv(self.rep(l)), g);
        match self.kind {
            GroupKind::Lattice { .. } | GroupKind::Heisenberg => Ok((l, 0)),
            GroupKind::ZxS3 { .. } => {
                let t = A3.iter().position(|&a| a == u.0[1]).expect("rep(ḣ)⁻¹g lies in A₃");
                Ok((l, t))
            }
            GroupKind::Grid { dim, q } => {
                let q = q as i64;
                let mut t = 0usize;
                let mut nearest = g.0;
                let mut on_grid = true;
                for axis in 0..dim {
                    // u in [-q, q); grid points are u = 2k + 1 - q
                    let shifted = u.0[axis] + q - 1;
                    if shifted.rem_euclid(2) != 0 {
                        on_grid = false;
                        let k = (shifted + 1).div_euclid(2).clamp(0, q - 1);
                        nearest[axis] = g.0[axis] - u.0[axis] + 2 * k + 1 - q;
                    }
                    let k = shifted.div_euclid(2).clamp(0, q - 1);
                    t = t * q as usize + k as usize;
                }
                if !on_grid {
                    return Err(Error::OffGrid {
                        elem: self.format_elem(g),
                        nearest: self.format_elem(Elem(nearest)),
                    });
                }
                Ok((l, t))
            }
        }
    }

    /// Grid element nearest to a real position; errors when the position is
    /// not itself a grid point (reporting the nearest one).
    pub fn grid_point(&self, position: &[f64]) -> Result<Elem> {
        let GroupKind::Grid { dim, q } = self.kind else {
            return Err(Error::InvalidArgument("positions only exist on grid groups".into()));
        };
        if position.len() != dim {
            return Err(Error::InvalidArgument(format!("expected {dim} coordinates")));
        }
        let q = q as i64;
        let mut exact = [0; MAX_DIM];
        let mut nearest = [0; MAX_DIM];
        let mut on_grid = true;
        for (axis, &x) in position.iter().enumerate() {
            let scaled = x * 2.0 * q as f64;
            let n = libm::round(scaled) as i64;
            // grid numerators have the parity of q + 1
            let parity_ok = (n - q - 1).rem_euclid(2) == 0;
            if scaled != n as f64 || !parity_ok {
                on_grid = false;
            }
            exact[axis] = n;
            let cell = libm::floor(x + 0.5) as i64;
            let k = libm::floor((x - cell as f64 + 0.5) * q as f64) as i64;
            nearest[axis] = 2 * q * cell + 2 * k.clamp(0, q - 1) + 1 - q;
        }
        if !on_grid {
            return Err(Error::OffGrid {
                elem: format!("{position:?}"),
                nearest: self.format_elem(Elem(nearest)),
            });
        }
        Ok(Elem(exact))
    }

    /// Real coordinates of a grid element.
    pub fn position(&self, g: Elem) -> Vec<f64> {
        match self.kind {
            GroupKind::Grid { dim, q } => g.0[..dim].iter().map(|&n| n as f64 / (2.0 * q as f64)).collect(),
            _ => g.0[..self.dim()].iter().map(|&n| n as f64).collect(),
        }
    }

    // ---- atoms and measure ------------------------------------------------

    /// Atoms per tile (`|U|` in atom units).
    pub fn tile_atoms(&self) -> u64 {
        match self.kind {
            GroupKind::Grid { dim, q } => (2 * q as u64).pow(dim as u32),
            _ => self.tile_len() as u64,
        }
    }

    pub(crate) fn tile_atom_set(&self) -> BTreeSet<Elem> {
        match self.kind {
            GroupKind::Grid { dim, q } => {
                let q = q as i64;
                let mut out = BTreeSet::new();
                let span = 2 * q;
                let total = span.pow(dim as u32);
                for idx in 0..total {
                    let mut c = [0; MAX_DIM];
                    let mut rest = idx;
                    for axis in 0..dim {
                        c[axis] = rest % span - q;
                        rest /= span;
                    }
                    out.insert(Elem(c));
                }
                out
            }
            _ => self.tile_points().into_iter().collect(),
        }
    }

    fn point_times_atoms(&self, g: Elem, atoms: &BTreeSet<Elem>) -> BTreeSet<Elem> {
        atoms.iter().map(|&a| self.mul(g, a)).collect()
    }

    /// Minkowski product of two atom sets (closure of the product set).
    pub(crate) fn atoms_product(&self, a: &BTreeSet<Elem>, b: &BTreeSet<Elem>) -> BTreeSet<Elem> {
        let mut out = BTreeSet::new();
        match self.kind {
            GroupKind::Grid { dim, .. } => {
                for x in a {
                    for y in b {
                        let base = self.mul(*x, *y);
                        for corner in 0..(1u32 << dim) {
                            let mut c = base.0;
                            for (axis, v) in c.iter_mut().enumerate().take(dim) {
                                *v += ((corner >> axis) & 1) as i64;
                            }
                            out.insert(Elem(c));
                        }
                    }
                }
            }
            _ => {
                for x in a {
                    for y in b {
                        out.insert(self.mul(*x, *y));
                    }
                }
            }
        }
        out
    }

    pub(crate) fn atoms_inverse(&self, a: &BTreeSet<Elem>) -> BTreeSet<Elem> {
        match self.kind {
            GroupKind::Grid { dim, .. } => a
                .iter()
                .map(|x| {
                    let mut c = [0; MAX_DIM];
                    for axis in 0..dim {
                        c[axis] = -x.0[axis] - 1;
                    }
                    Elem(c)
                })
                .collect(),
            _ => a.iter().map(|&x| self.inv(x)).collect(),
        }
    }

    /// Tile label of an atom.
    pub(crate) fn locate_atom(&self, a: Elem) -> Label {
        // a grid atom [f, f+1)/2q lies in the tile containing its left end
        self.locate(a)
    }

    // ---- operations -------------------------------------------------------

    /// Number of `ḣ` with `rep(ḣ)L ∩ zK ≠ ∅`, together with the bound
    /// `|K L⁻¹ U| / |U|`.
    pub fn overlap_count(&self, z: Elem, k: &[Elem], l: &[Elem]) -> OverlapCount {
        let mut hits = BTreeSet::new();
        let mut diffs = BTreeSet::new();
        for &a in k {
            for &b in l {
                let d = self.mul(a, self.inv(b));
                diffs.insert(d);
                let g = self.mul(z, d);
                let h = self.locate(g);
                if self.rep(h) == g {
                    hits.insert(h);
                }
            }
        }
        let tile = self.tile_atom_set();
        let mut covered = BTreeSet::new();
        for d in diffs {
            covered.extend(self.point_times_atoms(d, &tile));
        }
        OverlapCount {
            count: hits.len() as u64,
            bound_atoms: covered.len() as u64,
            tile_atoms: self.tile_atoms(),
        }
    }

    /// `n = |U²U⁻²U| / |U|` and a check, over `window`, that every
    /// approximate block diagonal `{(i, j) : rep(i)rep(j)⁻¹ ∈ rep(l)U}`
    /// coincides with the block diagonal `{(i, j) : i j⁻¹ = l}`.
    pub fn diagonal_overlap_constant(&self, window: &Window) -> DiagonalOverlap {
        let u = self.tile_atom_set();
        let u2 = self.atoms_product(&u, &u);
        let u_inv = self.atoms_inverse(&u);
        let u_inv2 = self.atoms_product(&u_inv, &u_inv);
        let product = self.atoms_product(&self.atoms_product(&u2, &u_inv2), &u);
        let product_atoms = product.len() as u64;
        let tile_atoms = self.tile_atoms();

        let mut approximate: BTreeMap<Label, BTreeSet<(usize, usize)>> = BTreeMap::new();
        let mut exact: BTreeMap<Label, BTreeSet<(usize, usize)>> = BTreeMap::new();
        let labels = window.labels();
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                let g = self.mul(self.rep(li), self.inv(self.rep(lj)));
                approximate.entry(self.locate(g)).or_default().insert((i, j));
                exact.entry(self.label_mul(li, self.label_inv(lj))).or_default().insert((i, j));
            }
        }
        let all: BTreeSet<Label> = approximate.keys().chain(exact.keys()).copied().collect();
        let mismatches = all.iter().filter(|l| approximate.get(l) != exact.get(l)).copied().collect();
        DiagonalOverlap {
            n: product_atoms.div_ceil(tile_atoms),
            product_atoms,
            tile_atoms,
            labels_checked: all.len(),
            mismatches,
        }
    }

    /// Checks that `rep(ḣ)·U·rep(ḣ)⁻¹ = U` for every `ḣ` in the window.
    pub fn conjugation_invariant(&self, window: &Window) -> bool {
        let u = self.tile_atom_set();
        window.labels().iter().all(|&l| {
            let r = self.rep(l);
            let ri = self.inv(r);
            let conj: BTreeSet<Elem> = match self.kind {
                GroupKind::Grid { .. } => u.clone(),
                _ => u.iter().map(|&a| self.mul(self.mul(r, a), ri)).collect(),
            };
            conj == u
        })
    }

    /// Checks the partition property over the window: the points
    /// `rep(ḣ)·u` are pairwise distinct and decompose back to `(ḣ, u)`.
    pub fn partition_holds(&self, window: &Window) -> bool {
        let mut seen = BTreeSet::new();
        for &l in window.labels() {
            for t in 0..self.tile_len() {
                let g = self.mul(self.rep(l), self.tile_point(t));
                if !seen.insert(g) || self.decompose(g) != Ok((l, t)) {
                    return false;
                }
            }
        }
        seen.len() == window.len() * self.tile_len()
    }

    // ---- serialization ----------------------------------------------------

    /// Decimal coordinates joined by `:`. `ℤ × S₃` elements print the
    /// permutation in one-line notation (`5:213` is `(5, (12))`); grid
    /// elements print numerators over `2q`.
    pub fn format_elem(&self, g: Elem) -> String {
        match self.kind {
            GroupKind::ZxS3 { .. } => {
                let p = S3[g.0[1] as usize];
                format!("{}:{}{}{}", g.0[0], p[0], p[1], p[2])
            }
            _ => join(&g.0[..self.dim()]),
        }
    }

    pub fn parse_elem(&self, s: &str) -> Result<Elem> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::Parse(String::from(s));
        match self.kind {
            GroupKind::ZxS3 { .. } => {
                if parts.len() != 2 {
                    return Err(bad());
                }
                let n = parts[0].parse::<i64>().map_err(|_| bad())?;
                let digits: Vec<u8> = parts[1].bytes().map(|b| b.wrapping_sub(b'0')).collect();
                let perm: [u8; 3] = digits.try_into().map_err(|_| bad())?;
                let idx = S3.iter().position(|&p| p == perm).ok_or_else(bad)?;
                Ok(Elem([n, idx as i64, 0]))
            }
            _ => Ok(Elem(parse_coords(&parts, self.dim()).ok_or_else(bad)?)),
        }
    }

    /// `D` labels use the same syntax; `ℤ × S₃` labels are `n:parity`.
    pub fn format_label(&self, l: Label) -> String {
        join(&l.0[..self.label_arity()])
    }

    pub fn parse_label(&self, s: &str) -> Result<Label> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let c = parse_coords(&parts, self.label_arity()).ok_or_else(|| Error::Parse(String::from(s)))?;
        if matches!(self.kind, GroupKind::ZxS3 { .. }) && !(0..=1).contains(&c[1]) {
            return Err(Error::Parse(String::from(s)));
        }
        Ok(Label(c))
    }
}

fn join(c: &[i64]) -> String {
    let mut s = String::new();
    for (i, v) in c.iter().enumerate() {
        if i > 0 {
            s.push(':');
        }
        s.push_str(&format!("{v}"));
    }
    s
}

fn parse_coords(parts: &[&str], arity: usize) -> Option<[i64; MAX_DIM]> {
    if parts.len() != arity {
        return None;
    }
    let mut c = [0; MAX_DIM];
    for (slot, p) in c.iter_mut().zip(parts) {
        *slot = p.trim().parse().ok()?;
    }
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shipped() -> Vec<TiledGroup> {
        vec![
            TiledGroup::lattice(1).unwrap(),
            TiledGroup::lattice(2).unwrap(),
            TiledGroup::heisenberg(),
            TiledGroup::z_x_s3(Transversal::Fixed),
            TiledGroup::z_x_s3(Transversal::Alternating),
            TiledGroup::grid(1, 8).unwrap(),
            TiledGroup::grid(2, 3).unwrap(),
        ]
    }

    #[test]
    fn decompose_examples() {
        let zs3 = TiledGroup::z_x_s3(Transversal::Fixed);
        let g = zs3.parse_elem("5:123").unwrap();
        assert_eq!(zs3.decompose(g).unwrap(), (Label([5, 0, 0]), 0));
        assert_eq!(zs3.tile_point(0), zs3.identity());

        let line = TiledGroup::grid(1, 8).unwrap();
        let g = line.grid_point(&[1.3125]).unwrap();
        let (h, t) = line.decompose(g).unwrap();
        assert_eq!(h, Label([1, 0, 0]));
        assert_eq!(line.position(line.tile_point(t)), vec![0.3125]);

        let heis = TiledGroup::heisenberg();
        let g = heis.parse_elem("2:3:1").unwrap();
        assert_eq!(heis.decompose(g).unwrap(), (Label([2, 3, 1]), 0));
    }

    #[test]
    fn off_grid_reports_nearest_point() {
        let line = TiledGroup::grid(1, 8).unwrap();
        match line.grid_point(&[1.3]) {
            Err(Error::OffGrid { nearest, .. }) => assert_eq!(nearest, "21"),
            other => panic!("{other:?}"),
        }
        // an element of the 1/16 lattice that is a cell boundary, not a centre
        match line.decompose(Elem([20, 0, 0])) {
            Err(Error::OffGrid { .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overlap_examples() {
        let z = TiledGroup::lattice(1).unwrap();
        let k: Vec<Elem> = (0..3).map(|i| Elem([i, 0, 0])).collect();
        let c = z.overlap_count(z.identity(), &k, &k);
        assert_eq!((c.count, c.bound()), (5, 5.0));
        assert!(c.holds());
        let empty = z.overlap_count(z.identity(), &[], &k);
        assert_eq!(empty.count, 0);

        let z2 = TiledGroup::lattice(2).unwrap();
        let k: Vec<Elem> = [[0, 0], [0, 1], [1, 0], [1, 1]].iter().map(|c| Elem([c[0], c[1], 0])).collect();
        let c = z2.overlap_count(z2.identity(), &k, &k);
        assert_eq!((c.count, c.bound()), (9, 9.0));
    }

    #[test]
    fn diagonal_overlap_constants() {
        let z = TiledGroup::lattice(1).unwrap();
        let w = Window::new(&z, WindowShape::Box, 3);
        let d = z.diagonal_overlap_constant(&w);
        assert_eq!(d.n, 1);
        assert!(d.mismatches.is_empty());

        let line = TiledGroup::grid(1, 4).unwrap();
        let d = line.diagonal_overlap_constant(&Window::new(&line, WindowShape::Box, 3));
        assert_eq!(d.product_atoms, 5 * d.tile_atoms);
        assert_eq!(d.n, 5);
        assert!(d.mismatches.is_empty());

        for t in [Transversal::Fixed, Transversal::Alternating] {
            let zs3 = TiledGroup::z_x_s3(t);
            let w = Window::new(&zs3, WindowShape::Box, 4);
            let d = zs3.diagonal_overlap_constant(&w);
            assert_eq!(d.n, 1);
            assert!(d.mismatches.is_empty(), "{t:?}: {:?}", d.mismatches);
            assert_eq!(d.labels_checked, 17 * 2);
        }
    }

    #[test]
    fn alternating_transversal_is_not_a_subgroup() {
        let g = TiledGroup::z_x_s3(Transversal::Alternating);
        let a = g.rep(Label([0, 1, 0]));
        let b = g.rep(Label([1, 1, 0]));
        let ab = g.mul(a, b);
        assert_ne!(g.rep(g.locate(ab)), ab);
        let fixed = TiledGroup::z_x_s3(Transversal::Fixed);
        let ab = fixed.mul(fixed.rep(Label([0, 1, 0])), fixed.rep(Label([1, 1, 0])));
        assert_eq!(fixed.rep(fixed.locate(ab)), ab);
    }

    #[test]
    fn partition_and_conjugation_over_windows() {
        for g in shipped() {
            let w = Window::new(&g, WindowShape::Box, 2);
            assert!(g.partition_holds(&w), "{g:?}");
            assert!(g.conjugation_invariant(&w), "{g:?}");
            for l in w.labels() {
                assert_eq!(g.locate(g.rep(*l)), *l);
            }
        }
    }

    #[test]
    fn partition_counts_tile_points() {
        // every element of a G-box lands in exactly one tile of the box in D
        let g = TiledGroup::z_x_s3(Transversal::Alternating);
        let mut per_tile: BTreeMap<Label, usize> = BTreeMap::new();
        for n in -3..=3 {
            for s in 0..6 {
                let e = Elem([n, s, 0]);
                let (l, t) = g.decompose(e).unwrap();
                assert_eq!(g.mul(g.rep(l), g.tile_point(t)), e);
                *per_tile.entry(l).or_default() += 1;
            }
        }
        assert_eq!(per_tile.len(), 14);
        assert!(per_tile.values().all(|&c| c == 3));
    }

    #[test]
    fn serialization_round_trips() {
        for g in shipped() {
            let w = Window::new(&g, WindowShape::Box, 1);
            for &l in w.labels() {
                assert_eq!(g.parse_label(&g.format_label(l)).unwrap(), l);
                for t in 0..g.tile_len() {
                    let e = g.mul(g.rep(l), g.tile_point(t));
                    assert_eq!(g.parse_elem(&g.format_elem(e)).unwrap(), e);
                }
            }
        }
        assert!(TiledGroup::z_x_s3(Transversal::Fixed).parse_elem("1:124").is_err());
    }

    fn elem_strategy(g: TiledGroup) -> impl Strategy<Value = Elem> {
        let range = -6i64..=6;
        (range.clone(), range.clone(), range, 0i64..6).prop_map(move |(a, b, c, s)| match g.kind() {
            GroupKind::ZxS3 { .. } => Elem([a, s, 0]),
            GroupKind::Lattice { dim } | GroupKind::Grid { dim, .. } => {
                let mut v = [a, b, c];
                v[dim..].fill(0);
                Elem(v)
            }
            GroupKind::Heisenberg => Elem([a, b, c]),
        })
    }

    proptest! {
        #[test]
        fn group_axioms_hold(idx in 0usize..7, seed in any::<u64>()) {
            let g = shipped()[idx];
            let mut runner = proptest::test_runner::TestRunner::new_with_rng(
                Default::default(),
                proptest::test_runner::TestRng::from_seed(
                    proptest::test_runner::RngAlgorithm::ChaCha,
                    &{ let mut s = [0u8; 32]; s[..8].copy_from_slice(&seed.to_le_bytes()); s },
                ),
            );
            let strat = elem_strategy(g);
            use proptest::strategy::ValueTree;
            let a = strat.new_tree(&mut runner).unwrap().current();
            let b = strat.new_tree(&mut runner).unwrap().current();
            let c = strat.new_tree(&mut runner).unwrap().current();
            prop_assert_eq!(g.mul(g.mul(a, b), c), g.mul(a, g.mul(b, c)));
            prop_assert_eq!(g.mul(g.inv(a), a), g.identity());
            prop_assert_eq!(g.mul(a, g.identity()), a);
            let (la, lb) = (g.locate(a), g.locate(b));
            let lc = Label(c.0);
            let lc = if matches!(g.kind(), GroupKind::ZxS3 { .. }) { Label([lc.0[0], lc.0[1] & 1, 0]) } else { lc };
            prop_assert_eq!(g.label_mul(g.label_mul(la, lb), lc), g.label_mul(la, g.label_mul(lb, lc)));
            prop_assert_eq!(g.label_mul(g.label_inv(la), la), g.label_identity());
        }

        #[test]
        fn overlap_count_never_exceeds_bound(
            idx in 0usize..7,
            z in proptest::collection::vec(-4i64..=4, 3),
            ks in proptest::collection::vec((-2i64..=2, -2i64..=2, 0i64..6), 0..4),
            ls in proptest::collection::vec((-2i64..=2, -2i64..=2, 0i64..6), 0..4),
        ) {
            let g = shipped()[idx];
            let fix = |(a, b, s): (i64, i64, i64)| match g.kind() {
                GroupKind::ZxS3 { .. } => Elem([a, s, 0]),
                GroupKind::Lattice { dim: 1 } | GroupKind::Grid { dim: 1, .. } => Elem([a, 0, 0]),
                GroupKind::Heisenberg => Elem([a, b, s]),
                _ => Elem([a, b, 0]),
            };
            let k: Vec<Elem> = ks.into_iter().map(fix).collect();
            let l: Vec<Elem> = ls.into_iter().map(fix).collect();
            let zz = fix((z[0], z[1], z[2].rem_euclid(6)));
            let c = g.overlap_count(zz, &k, &l);
            prop_assert!(c.holds(), "{:?}", c);
        }
    }
}
