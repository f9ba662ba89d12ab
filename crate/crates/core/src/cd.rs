//! Kernel-valued matrices stored by side diagonal.
//!
//! The block in row `i`, column `j` of an operator on `⊕ᵢ L²(rep(i)U)` lies
//! on the diagonal labelled `l = i·j⁻¹`. A [`CdMatrix`] keeps, per label, the
//! columns `j` of the window whose row `l·j` is also in the window, together
//! with the blocks. Rows outside the window are dropped (zero extension).
//!
//! The norm is
//!
//! ```text
//! ‖A‖ = Σ_l sup_j ‖a_{lj, j}‖∞
//! ```
//!
//! with the sup taken over the window.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{self, DenseMatrix};
use crate::group::{Label, TiledGroup, Window};
use crate::kernel::{self, KernelBlock};
use crate::math::sqrt;
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Largest dense materialization, in unknowns.
pub const DENSE_LIMIT: usize = 6000;

/// Entries of one side diagonal, sorted by column.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagonal {
    pub(crate) cols: Vec<usize>,
    pub(crate) rows: Vec<usize>,
    pub(crate) blocks: Vec<C64>,
}

impl Diagonal {
    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    /// Window indices of the columns.
    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    /// Window indices of the rows; `rows[k]` is the index of `l·cols[k]`.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn block(&self, k: usize, m: usize) -> &[C64] {
        &self.blocks[k * m * m..(k + 1) * m * m]
    }

    pub fn find(&self, col: usize) -> Option<usize> {
        self.cols.binary_search(&col).ok()
    }

    pub(crate) fn sup(&self, m: usize) -> f64 {
        self.blocks.chunks(m * m).map(kernel::sup_norm).fold(0.0, f64::max)
    }

    pub(crate) fn push(&mut self, col: usize, row: usize, block: &[C64]) {
        self.cols.push(col);
        self.rows.push(row);
        self.blocks.extend_from_slice(block);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdMatrix {
    group: TiledGroup,
    window: Arc<Window>,
    m: usize,
    diagonals: BTreeMap<Label, Diagonal>,
}

/// Element of `⊕_{i ∈ W} L²(U)`: one tile vector per window index.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    window: Arc<Window>,
    m: usize,
    data: Vec<C64>,
}

/// `d(l)` per diagonal label, for labels with a nonzero block.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecayProfile {
    entries: BTreeMap<Label, f64>,
}

/// How a dense matrix entry is assigned to a diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalKind {
    /// `l = i·j⁻¹` in `D`.
    Block,
    /// `l` is the tile containing `rep(i)·rep(j)⁻¹`.
    Band,
}

fn same_window(a: &Arc<Window>, b: &Arc<Window>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl CdMatrix {
    pub fn zeros(group: TiledGroup, window: Arc<Window>) -> Self {
        Self { group, m: group.tile_len(), window, diagonals: BTreeMap::new() }
    }

    pub fn identity(group: TiledGroup, window: Arc<Window>) -> Self {
        Self::from_diagonals(group, window, [(group.label_identity(), KernelBlock::identity(group.tile_len()))])
            .expect("identity block matches the tile")
    }

    /// Left translation `λ_h`: identity blocks on diagonal `h`.
    pub fn shift(group: TiledGroup, window: Arc<Window>, h: Label) -> Self {
        Self::from_diagonals(group, window, [(h, KernelBlock::identity(group.tile_len()))])
            .expect("identity block matches the tile")
    }

    /// Constant blocks along each listed diagonal; labels may repeat and are
    /// summed.
    pub fn from_diagonals(
        group: TiledGroup,
        window: Arc<Window>,
        diagonals: impl IntoIterator<Item = (Label, KernelBlock)>,
    ) -> Result<Self> {
        let m = group.tile_len();
        let mut sum: BTreeMap<Label, KernelBlock> = BTreeMap::new();
        for (l, b) in diagonals {
            if b.m() != m {
                return Err(Error::GridMismatch { left: m, right: b.m() });
            }
            let next = match sum.remove(&l) {
                Some(prev) => prev.add(&b)?,
                None => b,
            };
            sum.insert(l, next);
        }
        let mut a = Self::zeros(group, window);
        for (l, b) in sum {
            let mut d = Diagonal::default();
            for (j, &lj) in a.window.labels().iter().enumerate() {
                if let Some(i) = a.window.index_of(group.label_mul(l, lj)) {
                    d.push(j, i, b.as_slice());
                }
            }
            a.diagonals.insert(l, d);
        }
        Ok(a)
    }

    /// Builds the matrix with block `f(l, j)` at column `j` of diagonal `l`
    /// for each listed label; `None` leaves the entry empty. Entries whose row
    /// falls outside the window are skipped.
    pub fn from_fn(
        group: TiledGroup,
        window: Arc<Window>,
        labels: &[Label],
        mut f: impl FnMut(Label, Label) -> Option<KernelBlock>,
    ) -> Result<Self> {
        let m = group.tile_len();
        let mut a = Self::zeros(group, window);
        for &l in labels {
            let mut d = a.diagonals.remove(&l).unwrap_or_default();
            if !d.is_empty() {
                return Err(Error::InvalidArgument("repeated diagonal label".to_string()));
            }
            for (j, &lj) in a.window.labels().iter().enumerate() {
                let Some(i) = a.window.index_of(group.label_mul(l, lj)) else { continue };
                if let Some(b) = f(l, lj) {
                    if b.m() != m {
                        return Err(Error::GridMismatch { left: m, right: b.m() });
                    }
                    d.push(j, i, b.as_slice());
                }
            }
            a.diagonals.insert(l, d);
        }
        Ok(a)
    }

    pub(crate) fn from_parts(group: TiledGroup, window: Arc<Window>, diagonals: BTreeMap<Label, Diagonal>) -> Self {
        Self { group, m: group.tile_len(), window, diagonals }
    }

    /// Sets the block of diagonal `l` at column `j`.
    pub fn set_block(&mut self, l: Label, j: Label, block: &KernelBlock) -> Result<()> {
        if block.m() != self.m {
            return Err(Error::GridMismatch { left: self.m, right: block.m() });
        }
        let col = self.window.index_of(j).ok_or_else(|| Error::OutsideWindow(self.group.format_label(j)))?;
        let row = self
            .window
            .index_of(self.group.label_mul(l, j))
            .ok_or_else(|| Error::OutsideWindow(self.group.format_label(l)))?;
        let m2 = self.m * self.m;
        let d = self.diagonals.entry(l).or_default();
        match d.cols.binary_search(&col) {
            Ok(k) => d.blocks[k * m2..(k + 1) * m2].copy_from_slice(block.as_slice()),
            Err(k) => {
                d.cols.insert(k, col);
                d.rows.insert(k, row);
                d.blocks.splice(k * m2..k * m2, block.as_slice().iter().copied());
            }
        }
        Ok(())
    }

    pub fn group(&self) -> &TiledGroup {
        &self.group
    }

    pub fn window(&self) -> &Arc<Window> {
        &self.window
    }

    /// Tile points per block.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Labels of stored diagonals, ascending.
    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.diagonals.keys().copied()
    }

    pub fn diagonals(&self) -> impl Iterator<Item = (Label, &Diagonal)> + '_ {
        self.diagonals.iter().map(|(&l, d)| (l, d))
    }

    pub fn diagonal(&self, l: Label) -> Option<&Diagonal> {
        self.diagonals.get(&l)
    }

    /// Block of diagonal `l` at window column `col`.
    pub fn block(&self, l: Label, col: usize) -> Option<KernelBlock> {
        let d = self.diagonals.get(&l)?;
        let k = d.find(col)?;
        Some(KernelBlock::from_row_major(self.m, d.block(k, self.m).to_vec()).expect("stored blocks are m×m"))
    }

    /// Number of stored blocks.
    pub fn nnz_blocks(&self) -> usize {
        self.diagonals.values().map(Diagonal::len).sum()
    }

    /// Largest word length of a stored label, or `None` beyond `cap`.
    pub fn support_radius(&self, cap: usize) -> Option<usize> {
        let lengths = crate::group::word_lengths(&self.group, cap);
        self.diagonals.keys().map(|l| lengths.get(l).copied()).try_fold(0, |acc, d| Some(acc.max(d?)))
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.group != other.group {
            return Err(Error::TilingMismatch);
        }
        if !same_window(&self.window, &other.window) {
            return Err(Error::WindowMismatch);
        }
        Ok(())
    }

    /// `Σ_l sup_j ‖a_{lj, j}‖∞`, summed in increasing order.
    pub fn cd_norm(&self) -> f64 {
        crate::math::sorted_sum(self.diagonals.values().map(|d| d.sup(self.m)))
    }

    /// Per-diagonal sups; its aggregate is [`cd_norm`](Self::cd_norm).
    pub fn profile(&self) -> DecayProfile {
        let entries = self
            .diagonals
            .iter()
            .map(|(&l, d)| (l, d.sup(self.m)))
            .filter(|&(_, s)| s > 0.0)
            .collect();
        DecayProfile { entries }
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        for d in out.diagonals.values_mut() {
            d.blocks.iter_mut().for_each(|z| *z *= c);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, C64::new(-1.0, 0.0))
    }

    fn combine(&self, other: &Self, sign: C64) -> Result<Self> {
        self.compatible(other)?;
        let m2 = self.m * self.m;
        let mut out = Self::zeros(self.group, self.window.clone());
        let labels: alloc::collections::BTreeSet<Label> = self.labels().chain(other.labels()).collect();
        let empty = Diagonal::default();
        for l in labels {
            let a = self.diagonals.get(&l).unwrap_or(&empty);
            let b = other.diagonals.get(&l).unwrap_or(&empty);
            let mut d = Diagonal::default();
            let (mut p, mut q) = (0, 0);
            let mut buf = vec![ZERO; m2];
            while p < a.len() || q < b.len() {
                let ca = a.cols.get(p).copied().unwrap_or(usize::MAX);
                let cb = b.cols.get(q).copied().unwrap_or(usize::MAX);
                if ca < cb {
                    d.push(ca, a.rows[p], a.block(p, self.m));
                    p += 1;
                } else if cb < ca {
                    buf.iter_mut().zip(b.block(q, self.m)).for_each(|(o, z)| *o = z * sign);
                    d.push(cb, b.rows[q], &buf);
                    q += 1;
                } else {
                    buf.iter_mut()
                        .zip(a.block(p, self.m).iter().zip(b.block(q, self.m)))
                        .for_each(|(o, (x, y))| *o = x + y * sign);
                    d.push(ca, a.rows[p], &buf);
                    p += 1;
                    q += 1;
                }
            }
            out.diagonals.insert(l, d);
        }
        Ok(out)
    }

    /// Product with blocks composed by kernel convolution. The intermediate
    /// index runs over the window, so the result equals the product of the
    /// dense sections.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let (g, m) = (self.group, self.m);
        let m2 = m * m;
        let mut pairs: BTreeMap<Label, Vec<(Label, Label)>> = BTreeMap::new();
        for b in other.diagonals.keys() {
            for a in self.diagonals.keys() {
                pairs.entry(g.label_mul(*a, *b)).or_default().push((*a, *b));
            }
        }
        let mut out = Self::zeros(g, self.window.clone());
        let mut terms: Vec<(usize, usize, usize)> = Vec::new();
        let mut buf: Vec<C64> = Vec::new();
        for (h, list) in pairs {
            terms.clear();
            buf.clear();
            for (a, b) in list {
                let (da, db) = (&self.diagonals[&a], &other.diagonals[&b]);
                for (kb, (&j, &k)) in db.cols.iter().zip(&db.rows).enumerate() {
                    let Some(ka) = da.find(k) else { continue };
                    let off = buf.len();
                    buf.resize(off + m2, ZERO);
                    kernel::conv_add(da.block(ka, m), db.block(kb, m), m, &mut buf[off..]);
                    terms.push((j, da.rows[ka], off));
                }
            }
            if terms.is_empty() {
                continue;
            }
            terms.sort_by_key(|t| t.0);
            let mut d = Diagonal::default();
            let mut acc = vec![ZERO; m2];
            let mut t = 0;
            while t < terms.len() {
                let (j, i, _) = terms[t];
                acc.iter_mut().for_each(|z| *z = ZERO);
                while t < terms.len() && terms[t].0 == j {
                    let off = terms[t].2;
                    acc.iter_mut().zip(&buf[off..off + m2]).for_each(|(o, z)| *o += z);
                    t += 1;
                }
                d.push(j, i, &acc);
            }
            out.diagonals.insert(h, d);
        }
        Ok(out)
    }

    /// Diagonal `l` becomes `l⁻¹` with adjoint blocks at transposed positions.
    pub fn adjoint(&self) -> Self {
        let m = self.m;
        let mut out = Self::zeros(self.group, self.window.clone());
        for (&l, d) in &self.diagonals {
            let mut order: Vec<usize> = (0..d.len()).collect();
            order.sort_by_key(|&k| d.rows[k]);
            let mut nd = Diagonal::default();
            for k in order {
                let blk = d.block(k, m);
                let adj: Vec<C64> = (0..m * m).map(|p| blk[(p % m) * m + p / m].conj()).collect();
                nd.push(d.rows[k], d.cols[k], &adj);
            }
            out.diagonals.insert(self.group.label_inv(l), nd);
        }
        out
    }

    /// `(Aξ)ᵢ = Σⱼ w · a_{ij} ξⱼ`.
    pub fn apply(&self, xi: &BlockVector) -> Result<BlockVector> {
        if !same_window(&self.window, &xi.window) {
            return Err(Error::WindowMismatch);
        }
        if xi.m != self.m {
            return Err(Error::GridMismatch { left: self.m, right: xi.m });
        }
        let mut out = BlockVector::zeros(self.window.clone(), self.m);
        self.apply_slice(&xi.data, &mut out.data);
        Ok(out)
    }

    /// `y += A x` on flattened block vectors.
    pub(crate) fn apply_slice(&self, x: &[C64], y: &mut [C64]) {
        let m = self.m;
        for d in self.diagonals.values() {
            for k in 0..d.len() {
                let (i, j) = (d.rows[k], d.cols[k]);
                kernel::apply_add(d.block(k, m), &x[j * m..(j + 1) * m], m, &mut y[i * m..(i + 1) * m]);
            }
        }
    }

    /// Dense section over `window × tile`, index `j·m + t`, with the Haar
    /// weight folded in so that dense mat-vec equals [`apply`](Self::apply).
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        self.to_dense_limited(DENSE_LIMIT)
    }

    pub fn to_dense_limited(&self, limit: usize) -> Result<DenseMatrix> {
        let m = self.m;
        let n = self.window.len() * m;
        if n > limit {
            return Err(Error::TooLarge { size: n, limit });
        }
        let mut out = DenseMatrix::zeros(n, n);
        let scale = m as f64;
        for d in self.diagonals.values() {
            for k in 0..d.len() {
                let (i, j) = (d.rows[k], d.cols[k]);
                let blk = d.block(k, m);
                for x in 0..m {
                    for y in 0..m {
                        out[(i * m + x, j * m + y)] = blk[x * m + y] / scale;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Reads every nonzero block of a dense section back into diagonals.
    pub fn from_dense(group: TiledGroup, window: Arc<Window>, dense: &DenseMatrix) -> Result<Self> {
        let m = group.tile_len();
        let n = window.len() * m;
        if dense.rows() != n || dense.cols() != n {
            return Err(Error::InvalidArgument(alloc::format!(
                "expected a {n}x{n} matrix, got {}x{}",
                dense.rows(),
                dense.cols()
            )));
        }
        let mut out = Self::zeros(group, window.clone());
        let scale = m as f64;
        let mut blk = vec![ZERO; m * m];
        for (j, &lj) in window.labels().iter().enumerate() {
            let lji = group.label_inv(lj);
            for (i, &li) in window.labels().iter().enumerate() {
                let mut nonzero = false;
                for x in 0..m {
                    for y in 0..m {
                        let z = dense[(i * m + x, j * m + y)] * scale;
                        nonzero |= z != ZERO;
                        blk[x * m + y] = z;
                    }
                }
                if nonzero {
                    out.diagonals.entry(group.label_mul(li, lji)).or_default().push(j, i, &blk);
                }
            }
        }
        Ok(out)
    }

    /// Section onto a smaller window (entries with row and column inside).
    pub fn restrict(&self, window: Arc<Window>) -> Self {
        let m = self.m;
        let mut out = Self::zeros(self.group, window.clone());
        let remap: Vec<Option<usize>> = self.window.labels().iter().map(|&l| window.index_of(l)).collect();
        for (&l, d) in &self.diagonals {
            let mut nd = Diagonal::default();
            let mut order: Vec<(usize, usize, usize)> = Vec::new();
            for k in 0..d.len() {
                if let (Some(j), Some(i)) = (remap[d.cols[k]], remap[d.rows[k]]) {
                    order.push((j, i, k));
                }
            }
            order.sort_by_key(|t| t.0);
            for (j, i, k) in order {
                nd.push(j, i, d.block(k, m));
            }
            if !nd.is_empty() {
                out.diagonals.insert(l, nd);
            }
        }
        out
    }

    /// Largest singular value of the section, by power iteration on `A*A`.
    pub fn op_norm_estimate(&self, tol: f64, iter_max: usize) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(alloc::format!("tolerance must be positive, got {tol}")));
        }
        let adj = self.adjoint();
        let n = self.window.len() * self.m;
        let mut tmp = vec![ZERO; n];
        let lambda = dense::power_iteration(
            n,
            |x, y| {
                tmp.iter_mut().for_each(|z| *z = ZERO);
                self.apply_slice(x, &mut tmp);
                y.iter_mut().for_each(|z| *z = ZERO);
                adj.apply_slice(&tmp, y);
            },
            tol,
            iter_max,
        )?;
        Ok(sqrt(lambda))
    }

    /// Largest entrywise deviation from `other` over the given columns.
    pub fn max_deviation(&self, other: &Self, columns: &[usize]) -> Result<f64> {
        let diff = self.sub(other)?;
        let mut keep = vec![false; self.window.len()];
        columns.iter().for_each(|&j| keep[j] = true);
        let m = self.m;
        let mut worst = 0.0f64;
        for d in diff.diagonals.values() {
            for k in 0..d.len() {
                if keep[d.cols[k]] {
                    worst = worst.max(kernel::sup_norm(d.block(k, m)));
                }
            }
        }
        Ok(worst)
    }
}

impl BlockVector {
    pub fn zeros(window: Arc<Window>, m: usize) -> Self {
        let n = window.len() * m;
        Self { window, m, data: vec![ZERO; n] }
    }

    pub fn from_vec(window: Arc<Window>, m: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != window.len() * m {
            return Err(Error::InvalidArgument(alloc::format!("{} values for {} blocks of {m}", data.len(), window.len())));
        }
        Ok(Self { window, m, data })
    }

    /// Indicator of tile point `t` of tile `j`, scaled to unit `L²` norm.
    pub fn indicator(window: Arc<Window>, m: usize, j: Label, t: usize) -> Result<Self> {
        let idx = window.index_of(j).ok_or(Error::OutsideWindow(alloc::format!("{:?}", j.0)))?;
        let mut v = Self::zeros(window, m);
        v.data[idx * m + t] = C64::new(sqrt(m as f64), 0.0);
        Ok(v)
    }

    pub fn window(&self) -> &Arc<Window> {
        &self.window
    }

    pub fn block(&self, j: usize) -> &[C64] {
        &self.data[j * self.m..(j + 1) * self.m]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    /// `(Σ w |ξ|²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        sqrt(self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.m as f64)
    }
}

impl DecayProfile {
    pub fn from_entries(entries: impl IntoIterator<Item = (Label, f64)>) -> Self {
        Self { entries: entries.into_iter().collect() }
    }

    pub fn get(&self, l: Label) -> f64 {
        self.entries.get(&l).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Label, f64)> + '_ {
        self.entries.iter().map(|(&l, &d)| (l, d))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `Σ_l d(l)` in label order.
    pub fn aggregate(&self) -> f64 {
        crate::math::sorted_sum(self.entries.values().copied())
    }
}

/// Profile of a dense section: `d(l)` is the largest block sup norm on
/// diagonal `l` among the given columns (all columns if `None`).
pub fn decay_profile(
    group: &TiledGroup,
    window: &Window,
    dense: &DenseMatrix,
    columns: Option<&[usize]>,
) -> DecayProfile {
    decay_profile_by(group, window, dense, columns, DiagonalKind::Block)
}

pub fn decay_profile_by(
    group: &TiledGroup,
    window: &Window,
    dense: &DenseMatrix,
    columns: Option<&[usize]>,
    kind: DiagonalKind,
) -> DecayProfile {
    let m = group.tile_len();
    let scale = m as f64;
    let all: Vec<usize>;
    let columns = match columns {
        Some(c) => c,
        None => {
            all = (0..window.len()).collect();
            &all
        }
    };
    let mut entries: BTreeMap<Label, f64> = BTreeMap::new();
    for &j in columns {
        let lj = window.labels()[j];
        for (i, &li) in window.labels().iter().enumerate() {
            let mut s = 0.0f64;
            for x in 0..m {
                for y in 0..m {
                    s = s.max(dense[(i * m + x, j * m + y)].norm());
                }
            }
            if s == 0.0 {
                continue;
            }
            let l = match kind {
                DiagonalKind::Block => group.label_mul(li, group.label_inv(lj)),
                DiagonalKind::Band => group.locate(group.mul(group.rep(li), group.inv(group.rep(lj)))),
            };
            let e = entries.entry(l).or_insert(0.0);
            *e = e.max(s * scale);
        }
    }
    DecayProfile { entries }
}
