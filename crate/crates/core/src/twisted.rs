//! The twisted algebra `ℒ = l¹(D, 𝒜, T)` with `𝒜 = l∞(D, kernels)`.
//!
//! An element is a finitely supported map `F: D → 𝒜`; the fiber `F(h)` is a
//! window-indexed family of blocks, stored only at columns `j` with `h·j`
//! in the window. With `(T_k f)(j) = f(k⁻¹j)`,
//!
//! ```text
//! (F ⋆ G)(h) = Σ_y T_y F(hy) · G(y⁻¹)
//! F*(h)      = T_h⁻¹ F(h⁻¹)*
//! ‖F‖        = Σ_h sup_j ‖F(h)(j)‖∞
//! ```
//!
//! and `R(δ^m_h) = λ_h ∘ M_m` puts `F(h)(j)` at row `hj`, column `j`.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::cd::{CdMatrix, Diagonal};
use crate::group::{Label, TiledGroup, Window};
use crate::kernel::{self, KernelBlock};
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct TwistedElement {
    group: TiledGroup,
    window: Arc<Window>,
    m: usize,
    fibers: BTreeMap<Label, Diagonal>,
}

impl TwistedElement {
    pub fn zeros(group: TiledGroup, window: Arc<Window>) -> Self {
        Self { group, m: group.tile_len(), window, fibers: BTreeMap::new() }
    }

    /// `δ^m_h` with `m(j) = f(j)`; `None` is the zero block.
    pub fn delta(
        group: TiledGroup,
        window: Arc<Window>,
        h: Label,
        f: impl FnMut(Label) -> Option<KernelBlock>,
    ) -> Result<Self> {
        let mut f = f;
        Self::from_fn(group, window, &[h], |_, j| f(j))
    }

    /// `δ^m_h` with the same block at every index.
    pub fn delta_const(group: TiledGroup, window: Arc<Window>, h: Label, block: &KernelBlock) -> Result<Self> {
        Self::delta(group, window, h, |_| Some(block.clone()))
    }

    /// Unit `δ^e_e`.
    pub fn unit(group: TiledGroup, window: Arc<Window>) -> Self {
        Self::delta_const(group, window, group.label_identity(), &KernelBlock::identity(group.tile_len()))
            .expect("identity block matches the tile")
    }

    /// `F(h)(j) = f(h, j)` for the listed `h`.
    pub fn from_fn(
        group: TiledGroup,
        window: Arc<Window>,
        support: &[Label],
        mut f: impl FnMut(Label, Label) -> Option<KernelBlock>,
    ) -> Result<Self> {
        let m = group.tile_len();
        let mut out = Self::zeros(group, window);
        for &h in support {
            if out.fibers.contains_key(&h) {
                return Err(Error::InvalidArgument(alloc::format!("label {} listed twice", group.format_label(h))));
            }
            let mut d = Diagonal::default();
            for (j, &lj) in out.window.labels().iter().enumerate() {
                let Some(i) = out.window.index_of(group.label_mul(h, lj)) else { continue };
                if let Some(b) = f(h, lj) {
                    if b.m() != m {
                        return Err(Error::GridMismatch { left: m, right: b.m() });
                    }
                    d.push(j, i, b.as_slice());
                }
            }
            out.fibers.insert(h, d);
        }
        Ok(out)
    }

    pub fn group(&self) -> &TiledGroup {
        &self.group
    }

    pub fn window(&self) -> &Arc<Window> {
        &self.window
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn support(&self) -> impl Iterator<Item = Label> + '_ {
        self.fibers.keys().copied()
    }

    /// `F(h)(j)` for `j` in the window.
    pub fn value(&self, h: Label, j: Label) -> Option<KernelBlock> {
        let d = self.fibers.get(&h)?;
        let k = d.find(self.window.index_of(j)?)?;
        Some(KernelBlock::from_row_major(self.m, d.block(k, self.m).to_vec()).expect("m×m"))
    }

    /// Fiber entries as `(j, block)` in window order.
    pub fn fiber(&self, h: Label) -> Vec<(Label, KernelBlock)> {
        let Some(d) = self.fibers.get(&h) else { return Vec::new() };
        let labels = self.window.labels();
        (0..d.len())
            .map(|k| {
                let b = KernelBlock::from_row_major(self.m, d.block(k, self.m).to_vec()).expect("m×m");
                (labels[d.cols()[k]], b)
            })
            .collect()
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.group != other.group {
            return Err(Error::TilingMismatch);
        }
        if !(Arc::ptr_eq(&self.window, &other.window) || self.window == other.window) {
            return Err(Error::WindowMismatch);
        }
        Ok(())
    }

    /// `Σ_h sup_j ‖F(h)(j)‖∞`.
    pub fn l1_norm(&self) -> f64 {
        crate::math::sorted_sum(self.fibers.values().map(|d| d.sup(self.m)))
    }

    /// `(F ⋆ G)(h)(j) = Σ_y F(hy)(y⁻¹j) ∗ G(y⁻¹)(j)`.
    pub fn star(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let (g, m, w) = (self.group, self.m, &self.window);
        let m2 = m * m;
        let labels = w.labels();
        // h ↦ column ↦ accumulated block
        let mut acc: BTreeMap<Label, BTreeMap<usize, Vec<C64>>> = BTreeMap::new();
        for (&yi, gd) in &other.fibers {
            for (&a, fd) in &self.fibers {
                let h = g.label_mul(a, yi);
                for k in 0..gd.len() {
                    let j = gd.cols()[k];
                    let Some(shifted) = w.index_of(g.label_mul(yi, labels[j])) else { continue };
                    let Some(kf) = fd.find(shifted) else { continue };
                    let slot = acc.entry(h).or_default().entry(j).or_insert_with(|| vec![ZERO; m2]);
                    kernel::conv_add(fd.block(kf, m), gd.block(k, m), m, slot);
                }
            }
        }
        let mut out = Self::zeros(g, w.clone());
        for (h, cols) in acc {
            let mut d = Diagonal::default();
            for (j, blk) in cols {
                let i = w.index_of(g.label_mul(h, labels[j])).expect("F(hy) is stored only inside the window");
                d.push(j, i, &blk);
            }
            out.fibers.insert(h, d);
        }
        Ok(out)
    }

    /// `F*(h)(j) = F(h⁻¹)(hj)*`.
    pub fn involution(&self) -> Self {
        let (g, m, w) = (self.group, self.m, &self.window);
        let labels = w.labels();
        let mut out = Self::zeros(g, w.clone());
        for (&hi, d) in &self.fibers {
            let h = g.label_inv(hi);
            let mut entries: Vec<(usize, usize, Vec<C64>)> = Vec::new();
            for (j, &lj) in labels.iter().enumerate() {
                let Some(hj) = w.index_of(g.label_mul(h, lj)) else { continue };
                let Some(k) = d.find(hj) else { continue };
                let blk = KernelBlock::from_row_major(m, d.block(k, m).to_vec()).expect("m×m").adjoint();
                entries.push((j, hj, blk.into_vec()));
            }
            let mut nd = Diagonal::default();
            for (j, i, blk) in entries {
                nd.push(j, i, &blk);
            }
            out.fibers.insert(h, nd);
        }
        out
    }

    /// `R(F)`: the `h`-diagonal at column `j` is `F(h)(j)`.
    pub fn represent(&self) -> CdMatrix {
        CdMatrix::from_parts(self.group, self.window.clone(), self.fibers.clone())
    }

    /// Deviation `max |S·R^ω(F) − λ^M(F)·S|` over interior rows of the
    /// truncated space `ℓ²(W × W, L²(U))`, where
    ///
    /// ```text
    /// R^ω(F)ξ(x, z) = Σ_y F(y)(y⁻¹x) ∗ ξ(y⁻¹x, z)
    /// λ^M(F)ξ(x, z) = Σ_y F(y)(y⁻¹xz) ∗ ξ(y⁻¹x, z)
    /// Sξ(x, z)      = ξ(xz, z)
    /// ```
    ///
    /// A row `(x, z)` is interior when `xz`, `y⁻¹x` and `y⁻¹xz` lie in the
    /// window for every `y` in the support.
    pub fn intertwiner_check(&self) -> Result<f64> {
        let space = DoubledSpace::new(self);
        let rows = space.interior_rows();
        if rows.is_empty() {
            return Err(Error::EmptyInterior);
        }
        let n = space.len();
        let mut basis = vec![ZERO; n];
        let mut worst = 0.0f64;
        for c in 0..n {
            basis[c] = C64::new(1.0, 0.0);
            let lhs = space.shift(&space.r_omega(&basis));
            let rhs = space.lambda_m(&space.shift(&basis));
            basis[c] = ZERO;
            for &(x, z) in &rows {
                for t in 0..self.m {
                    let p = space.at(x, z, t);
                    worst = worst.max((lhs[p] - rhs[p]).norm());
                }
            }
        }
        Ok(worst)
    }

    /// `λ^M(F)` applied to a vector on `W × W × U`, index `(x·|W| + z)·m + t`.
    pub fn apply_lambda_m(&self, xi: &[C64]) -> Vec<C64> {
        DoubledSpace::new(self).lambda_m(xi)
    }

    /// Interior rows `(x, z)` of the doubled space as window index pairs.
    pub fn doubled_interior(&self) -> Vec<(usize, usize)> {
        DoubledSpace::new(self).interior_rows()
    }
}

struct DoubledSpace<'a> {
    f: &'a TwistedElement,
    /// `inv_mul[y][x]`: index of `y⁻¹x`
    inv_mul: BTreeMap<Label, Vec<Option<usize>>>,
    /// `prod[x][z]`: index of `xz`
    prod: Vec<Vec<Option<usize>>>,
}

impl<'a> DoubledSpace<'a> {
    fn new(f: &'a TwistedElement) -> Self {
        let (g, w) = (f.group, &f.window);
        let labels = w.labels();
        let inv_mul = f
            .fibers
            .keys()
            .map(|&y| {
                let yi = g.label_inv(y);
                (y, labels.iter().map(|&x| w.index_of(g.label_mul(yi, x))).collect())
            })
            .collect();
        let prod = labels
            .iter()
            .map(|&x| labels.iter().map(|&z| w.index_of(g.label_mul(x, z))).collect())
            .collect();
        Self { f, inv_mul, prod }
    }

    fn len(&self) -> usize {
        let w = self.f.window.len();
        w * w * self.f.m
    }

    fn at(&self, x: usize, z: usize, t: usize) -> usize {
        (x * self.f.window.len() + z) * self.f.m + t
    }

    fn interior_rows(&self) -> Vec<(usize, usize)> {
        let w = self.f.window.len();
        let mut out = Vec::new();
        for x in 0..w {
            for z in 0..w {
                let Some(xz) = self.prod[x][z] else { continue };
                let ok = self.inv_mul.values().all(|row| row[x].is_some() && row[xz].is_some());
                if ok {
                    out.push((x, z));
                }
            }
        }
        out
    }

    fn shift(&self, xi: &[C64]) -> Vec<C64> {
        let (w, m) = (self.f.window.len(), self.f.m);
        let mut out = vec![ZERO; xi.len()];
        for x in 0..w {
            for z in 0..w {
                if let Some(xz) = self.prod[x][z] {
                    let (p, q) = (self.at(x, z, 0), self.at(xz, z, 0));
                    out[p..p + m].copy_from_slice(&xi[q..q + m]);
                }
            }
        }
        out
    }

    fn fiber_block(&self, y: Label, j: usize) -> Option<&[C64]> {
        let d = &self.f.fibers[&y];
        d.find(j).map(|k| d.block(k, self.f.m))
    }

    fn r_omega(&self, xi: &[C64]) -> Vec<C64> {
        let (w, m) = (self.f.window.len(), self.f.m);
        let mut out = vec![ZERO; xi.len()];
        for (&y, row) in &self.inv_mul {
            for x in 0..w {
                let Some(yx) = row[x] else { continue };
                let Some(blk) = self.fiber_block(y, yx) else { continue };
                for z in 0..w {
                    let (p, q) = (self.at(x, z, 0), self.at(yx, z, 0));
                    kernel::apply_add(blk, &xi[q..q + m], m, &mut out[p..p + m]);
                }
            }
        }
        out
    }

    fn lambda_m(&self, xi: &[C64]) -> Vec<C64> {
        let (w, m) = (self.f.window.len(), self.f.m);
        let mut out = vec![ZERO; xi.len()];
        for (&y, row) in &self.inv_mul {
            for x in 0..w {
                let Some(yx) = row[x] else { continue };
                for z in 0..w {
                    let Some(yxz) = self.prod[yx][z] else { continue };
                    let Some(blk) = self.fiber_block(y, yxz) else { continue };
                    let (p, q) = (self.at(x, z, 0), self.at(yx, z, 0));
                    kernel::apply_add(blk, &xi[q..q + m], m, &mut out[p..p + m]);
                }
            }
        }
        out
    }
}
