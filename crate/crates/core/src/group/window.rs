use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use super::{Elem, Label, TiledGroup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindowShape {
    /// Sup-norm box in `D`-coordinates.
    Box,
    /// Ball of the word metric of [`TiledGroup::generators`].
    Ball,
}

/// Finite set of `D`-labels in sorted order, with an index lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    shape: Option<WindowShape>,
    radius: usize,
    labels: Vec<Label>,
    index: BTreeMap<Label, usize>,
}

impl Window {
    pub fn new(group: &TiledGroup, shape: WindowShape, radius: usize) -> Self {
        let labels: BTreeSet<Label> = match shape {
            WindowShape::Box => box_labels(group, radius as i64),
            WindowShape::Ball => ball(group, radius).into_keys().collect(),
        };
        let mut w = Self::from_labels(labels);
        w.shape = Some(shape);
        w.radius = radius;
        w
    }

    /// Arbitrary finite window. Shape and radius are left unset.
    pub fn from_labels(labels: impl IntoIterator<Item = Label>) -> Self {
        let labels: Vec<Label> = labels.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let index = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        Self { shape: None, radius: 0, labels, index }
    }

    pub fn shape(&self) -> Option<WindowShape> {
        self.shape
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, l: Label) -> Option<usize> {
        self.index.get(&l).copied()
    }

    pub fn contains(&self, l: Label) -> bool {
        self.index.contains_key(&l)
    }

    pub fn is_subset(&self, other: &Window) -> bool {
        self.labels.iter().all(|&l| other.contains(l))
    }

    /// Closed under `l ↦ l⁻¹`.
    pub fn is_symmetric(&self, group: &TiledGroup) -> bool {
        self.labels.iter().all(|&l| self.contains(group.label_inv(l)))
    }

    /// Induced subset `⋃ rep(ḣ)·U` of `G`, tile points in order.
    pub fn elements(&self, group: &TiledGroup) -> Vec<Elem> {
        let tile = group.tile_points();
        self.labels
            .iter()
            .flat_map(|&l| {
                let r = group.rep(l);
                tile.iter().map(move |&u| group.mul(r, u))
            })
            .collect()
    }

    /// Indices `j` such that `s₁⋯s_c·j` stays in the window for every word
    /// of at most `depth` generators.
    pub fn interior(&self, group: &TiledGroup, depth: usize) -> Vec<usize> {
        let gens = group.generators();
        let mut inside = vec![true; self.len()];
        for _ in 0..depth {
            let prev = inside.clone();
            for (j, &l) in self.labels.iter().enumerate() {
                if !prev[j] {
                    continue;
                }
                inside[j] = gens.iter().all(|&s| self.index_of(group.label_mul(s, l)).is_some_and(|k| prev[k]));
            }
        }
        (0..self.len()).filter(|&j| inside[j]).collect()
    }
}

fn box_labels(group: &TiledGroup, r: i64) -> BTreeSet<Label> {
    use super::GroupKind;
    let mut out = BTreeSet::new();
    match group.kind() {
        GroupKind::ZxS3 { .. } => {
            for n in -r..=r {
                out.insert(Label([n, 0, 0]));
                out.insert(Label([n, 1, 0]));
            }
        }
        _ => {
            let dim = group.dim();
            let side = 2 * r + 1;
            for idx in 0..side.pow(dim as u32) {
                let mut c = [0; 3];
                let mut rest = idx;
                for v in c.iter_mut().take(dim) {
                    *v = rest % side - r;
                    rest /= side;
                }
                out.insert(Label(c));
            }
        }
    }
    out
}

/// Word-metric ball around the identity, with distances.
pub(crate) fn ball(group: &TiledGroup, radius: usize) -> BTreeMap<Label, usize> {
    let gens = group.generators();
    let mut dist = BTreeMap::new();
    let mut queue = VecDeque::new();
    dist.insert(group.label_identity(), 0);
    queue.push_back(group.label_identity());
    while let Some(l) = queue.pop_front() {
        let d = dist[&l];
        if d == radius {
            continue;
        }
        for &s in &gens {
            let next = group.label_mul(s, l);
            if let alloc::collections::btree_map::Entry::Vacant(e) = dist.entry(next) {
                e.insert(d + 1);
                queue.push_back(next);
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Transversal;

    #[test]
    fn sizes() {
        let z = TiledGroup::lattice(1).unwrap();
        assert_eq!(Window::new(&z, WindowShape::Box, 64).len(), 129);
        assert_eq!(Window::new(&z, WindowShape::Ball, 64).len(), 129);
        let zs3 = TiledGroup::z_x_s3(Transversal::Fixed);
        assert_eq!(Window::new(&zs3, WindowShape::Box, 4).len(), 18);
        let h = TiledGroup::heisenberg();
        let sizes: Vec<usize> = [6, 8, 10].iter().map(|&r| Window::new(&h, WindowShape::Ball, r).len()).collect();
        assert_eq!(sizes, [593, 1793, 4309]);
    }

    #[test]
    fn monotone_and_symmetric() {
        let h = TiledGroup::heisenberg();
        for shape in [WindowShape::Box, WindowShape::Ball] {
            let small = Window::new(&h, shape, 2);
            let big = Window::new(&h, shape, 3);
            assert!(small.is_subset(&big));
        }
        assert!(Window::new(&h, WindowShape::Ball, 3).is_symmetric(&h));
        // (1, 1, 1)⁻¹ = (-1, -1, 0) but (1, 1, -1)⁻¹ = (-1, -1, 2)
        assert!(!Window::new(&h, WindowShape::Box, 1).is_symmetric(&h));
    }

    #[test]
    fn interior_of_interval() {
        let z = TiledGroup::lattice(1).unwrap();
        let w = Window::new(&z, WindowShape::Box, 10);
        let inner = w.interior(&z, 4);
        let labels: Vec<i64> = inner.iter().map(|&j| w.labels()[j].0[0]).collect();
        assert_eq!(labels, (-6..=6).collect::<Vec<_>>());
        assert_eq!(w.interior(&z, 0).len(), w.len());
    }

    #[test]
    fn heisenberg_ball_interior_is_a_smaller_ball() {
        let h = TiledGroup::heisenberg();
        let w = Window::new(&h, WindowShape::Ball, 6);
        let inner: BTreeSet<Label> = w.interior(&h, 4).into_iter().map(|j| w.labels()[j]).collect();
        // the central element (0, 0, ±1) has length 4 but its 4-neighbourhood fits
        let expected: BTreeSet<Label> = ball(&h, 2).into_keys().collect();
        assert!(expected.is_subset(&inner));
        assert_eq!(inner.len(), 19);
        assert!(inner.contains(&Label([0, 0, 1])));
    }
}
