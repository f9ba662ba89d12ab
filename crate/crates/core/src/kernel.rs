//! Discretized kernels on `U × U`.
//!
//! A block stores `a(x, y)` at the `m` tile points of `U` (row `x`, column
//! `y`), with Haar cell weight `w = 1/m`. Convolution is the weighted matrix
//! product
//!
//! ```text
//! (a ∗ b)(x, y) = w · Σ_z a(x, z) b(z, y)
//! ```
//!
//! which is exact for finite tiles and a midpoint rule for grid tiles. The
//! identity kernel is `m·[x = y]`.

use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{self, DenseMatrix};
use crate::group::TiledGroup;
use crate::math::sqrt;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct KernelBlock {
    m: usize,
    data: Vec<C64>,
}

/// `sup`, `L²` and `K₂,∞` norms of a block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelNorms {
    pub sup: f64,
    pub l2: f64,
    pub k2inf: f64,
}

impl KernelBlock {
    pub fn zeros(m: usize) -> Self {
        Self { m, data: vec![C64::new(0.0, 0.0); m * m] }
    }

    /// Unit for [`conv`](Self::conv): `m` on the diagonal.
    pub fn identity(m: usize) -> Self {
        let mut k = Self::zeros(m);
        for i in 0..m {
            k.data[i * m + i] = C64::new(m as f64, 0.0);
        }
        k
    }

    pub fn constant(m: usize, c: C64) -> Self {
        Self { m, data: vec![c; m * m] }
    }

    pub fn from_fn(m: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(m * m);
        for x in 0..m {
            for y in 0..m {
                data.push(f(x, y));
            }
        }
        Self { m, data }
    }

    /// Samples `f(x, y)` at the real coordinates of the tile points.
    pub fn sample(group: &TiledGroup, mut f: impl FnMut(&[f64], &[f64]) -> C64) -> Self {
        let pts: Vec<Vec<f64>> = group.tile_points().into_iter().map(|p| group.position(p)).collect();
        Self::from_fn(pts.len(), |x, y| f(&pts[x], &pts[y]))
    }

    pub fn from_row_major(m: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != m * m {
            return Err(Error::InvalidArgument(alloc::format!("{} values for a {m}x{m} block", data.len())));
        }
        Ok(Self { m, data })
    }

    /// Number of tile points.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Haar weight of one tile point.
    pub fn weight(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn get(&self, x: usize, y: usize) -> C64 {
        self.data[x * self.m + y]
    }

    pub fn set(&mut self, x: usize, y: usize, v: C64) {
        self.data[x * self.m + y] = v;
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { m: self.m, data: self.data.iter().map(|z| z * c).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self { m: self.m, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self { m: self.m, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() })
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.m != other.m {
            return Err(Error::GridMismatch { left: self.m, right: other.m });
        }
        Ok(())
    }

    pub fn conv(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = Self::zeros(self.m);
        conv_add(&self.data, &other.data, self.m, &mut out.data);
        Ok(out)
    }

    /// `b*(x, y) = conj(b(y, x))`.
    pub fn adjoint(&self) -> Self {
        let m = self.m;
        Self::from_fn(m, |x, y| self.data[y * m + x].conj())
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.data)
    }

    pub fn norms(&self) -> KernelNorms {
        let m = self.m;
        let w = self.weight();
        let l2 = sqrt(self.data.iter().map(|z| z.norm_sqr()).sum::<f64>()) / m as f64;
        let mut k2inf = 0.0f64;
        for y in 0..m {
            let col: f64 = (0..m).map(|x| self.data[x * m + y].norm_sqr()).sum();
            k2inf = k2inf.max(sqrt(col * w));
        }
        KernelNorms { sup: self.sup_norm(), l2, k2inf }
    }

    /// Weighted action on a tile vector: `w · Σ_y a(x, y) v(y)`.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.m];
        apply_add(&self.data, v, self.m, &mut out);
        out
    }

    /// Operator on `L²(U)` as a dense matrix (`w·a`).
    pub fn to_operator(&self) -> DenseMatrix {
        let w = self.weight();
        DenseMatrix::from_fn(self.m, self.m, |x, y| self.get(x, y) * w)
    }

    /// Operator norm on `L²(U)`: the square root of the spectral radius of
    /// `a* ∗ a`, by power iteration.
    pub fn block_spectral_radius(&self, tol: f64, iter_max: usize) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(alloc::format!("tolerance must be positive, got {tol}")));
        }
        let gram = self.adjoint().conv(self)?.to_operator();
        let lambda = dense::power_iteration(self.m, |x, y| y.copy_from_slice(&gram.mul_vec(x).expect("square")), tol, iter_max)?;
        Ok(sqrt(lambda))
    }
}

/// `out += a ∗ b` for row-major `m × m` slices.
pub(crate) fn conv_add(a: &[C64], b: &[C64], m: usize, out: &mut [C64]) {
    let scale = m as f64;
    let mut row = vec![C64::new(0.0, 0.0); m];
    for x in 0..m {
        row.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for z in 0..m {
            let axz = a[x * m + z];
            if axz.re == 0.0 && axz.im == 0.0 {
                continue;
            }
            for (r, bzy) in row.iter_mut().zip(&b[z * m..(z + 1) * m]) {
                *r += axz * bzy;
            }
        }
        for (o, r) in out[x * m..(x + 1) * m].iter_mut().zip(&row) {
            *o += r / scale;
        }
    }
}

/// `out += w · a v`.
pub(crate) fn apply_add(a: &[C64], v: &[C64], m: usize, out: &mut [C64]) {
    let scale = m as f64;
    for (x, o) in out.iter_mut().enumerate().take(m) {
        let s: C64 = a[x * m..(x + 1) * m].iter().zip(v).map(|(p, q)| p * q).sum();
        *o += s / scale;
    }
}

pub(crate) fn sup_norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// One level of a refinement study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementStep {
    pub q: u32,
    /// Max grid deviation of the discrete convolution from the reference.
    pub error: f64,
    /// Observed order `log(e_prev / e) / log(q / q_prev)`; `None` on the
    /// coarsest level.
    pub order: Option<f64>,
}

/// Convergence of grid convolution on the one-dimensional tile
/// `[-½, ½)`: samples `a`, `b` and the exact convolution `reference` at
/// each `q` and records the sup deviation.
pub fn refinement_report(
    a: impl Fn(f64, f64) -> C64,
    b: impl Fn(f64, f64) -> C64,
    reference: impl Fn(f64, f64) -> C64,
    qs: &[u32],
) -> Result<Vec<RefinementStep>> {
    let mut out: Vec<RefinementStep> = Vec::new();
    for &q in qs {
        let g = TiledGroup::grid(1, q)?;
        let ka = KernelBlock::sample(&g, |x, y| a(x[0], y[0]));
        let kb = KernelBlock::sample(&g, |x, y| b(x[0], y[0]));
        let kr = KernelBlock::sample(&g, |x, y| reference(x[0], y[0]));
        let error = ka.conv(&kb)?.sub(&kr)?.sup_norm();
        let order = out.last().map(|p| crate::math::ln(p.error / error) / crate::math::ln(q as f64 / p.q as f64));
        out.push(RefinementStep { q, error, order });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, rng: &mut impl Rng) -> KernelBlock {
        KernelBlock::from_fn(m, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn identity_is_a_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in [1, 3, 4, 8] {
            let a = random(m, &mut rng);
            let e = KernelBlock::identity(m);
            assert_eq!(e.conv(&a).unwrap(), a);
            assert_eq!(a.conv(&e).unwrap(), a);
        }
    }

    #[test]
    fn constants() {
        let one = KernelBlock::constant(4, C64::new(1.0, 0.0));
        assert_eq!(one.conv(&one).unwrap(), one);
        let n = one.norms();
        assert_eq!((n.sup, n.l2, n.k2inf), (1.0, 1.0, 1.0));
        let z = KernelBlock::zeros(3).norms();
        assert_eq!((z.sup, z.l2, z.k2inf), (0.0, 0.0, 0.0));
    }

    #[test]
    fn conv_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, b) = (random(4, &mut rng), random(4, &mut rng));
        let c = a.conv(&b).unwrap();
        for x in 0..4 {
            for y in 0..4 {
                let mut s = C64::new(0.0, 0.0);
                for z in 0..4 {
                    s += a.get(x, z) * b.get(z, y);
                }
                assert!((c.get(x, y) - s * 0.25).norm() < 1e-15);
            }
        }
        assert_eq!(a.conv(&random(3, &mut rng)), Err(Error::GridMismatch { left: 4, right: 3 }));
    }

    #[test]
    fn adjoint_examples() {
        let sym = KernelBlock::from_fn(3, |x, y| C64::new((x + y) as f64, 0.0));
        assert_eq!(sym.adjoint(), sym);
        let i = KernelBlock::identity(4).scale(C64::new(0.0, 1.0));
        assert_eq!(i.adjoint(), KernelBlock::identity(4).scale(C64::new(0.0, -1.0)));
    }

    #[test]
    fn spectral_radius_matches_eigensolver() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((KernelBlock::identity(4).block_spectral_radius(1e-12, 100).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(KernelBlock::zeros(4).block_spectral_radius(1e-12, 100).unwrap(), 0.0);
        for _ in 0..10 {
            let a = random(4, &mut rng);
            let op = a.to_operator();
            let gram = op.adjoint().matmul(&op).unwrap();
            let top = dense::hermitian_eigenvalues(&gram).unwrap().into_iter().fold(0.0, f64::max);
            let r = a.block_spectral_radius(1e-12, 10_000).unwrap();
            assert!((r - sqrt(top)).abs() < 1e-8, "{r} vs {}", sqrt(top));
        }
    }

    #[test]
    fn midpoint_rule_is_second_order() {
        // ∫ (x + z) z y dz over [-½, ½) = y / 12
        let steps = refinement_report(
            |x, z| C64::new(x + z, 0.0),
            |z, y| C64::new(z * y, 0.0),
            |_, y| C64::new(y / 12.0, 0.0),
            &[8, 16, 32, 64],
        )
        .unwrap();
        for s in &steps[1..] {
            let p = s.order.unwrap();
            assert!((p - 2.0).abs() < 0.1, "{p}");
        }
    }

    #[test]
    fn k2inf_is_not_involution_invariant() {
        // one nonzero column: the adjoint spreads it over a row
        let a = KernelBlock::from_fn(2, |_, y| C64::new(if y == 0 { 1.0 } else { 0.0 }, 0.0));
        assert_eq!(a.norms().k2inf, 1.0);
        assert!((a.adjoint().norms().k2inf - sqrt(0.5)).abs() < 1e-15);
    }

    fn block(m: usize) -> impl Strategy<Value = KernelBlock> {
        proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), m * m)
            .prop_map(move |v| KernelBlock::from_row_major(m, v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap())
    }

    fn pair() -> impl Strategy<Value = (KernelBlock, KernelBlock, KernelBlock)> {
        prop_oneof![Just(1usize), Just(2), Just(3), Just(4)].prop_flat_map(|m| (block(m), block(m), block(m)))
    }

    // rounding allowance for bounds that can be attained exactly
    const ULP: f64 = 1e-12;

    proptest! {
        #[test]
        fn module_inequalities((g, k, h) in pair()) {
            let (ng, nk, nh) = (g.norms(), k.norms(), h.norms());
            prop_assert!(g.conv(&k).unwrap().sup_norm() <= ng.sup * nk.k2inf * (1.0 + ULP));
            prop_assert!(h.conv(&k).unwrap().norms().k2inf <= nh.l2 * nk.k2inf * (1.0 + ULP));
        }

        #[test]
        fn norm_ordering((a, _, _) in pair()) {
            let n = a.norms();
            prop_assert!(n.l2 <= n.k2inf * (1.0 + ULP));
            prop_assert!(n.k2inf <= n.sup * (1.0 + ULP));
        }

        #[test]
        fn involution_laws((a, b, c) in pair()) {
            prop_assert_eq!(a.adjoint().adjoint(), a.clone());
            let (na, ns) = (a.norms(), a.adjoint().norms());
            prop_assert_eq!(na.sup, ns.sup);
            prop_assert!((na.l2 - ns.l2).abs() <= ULP * na.l2);
            let lhs = a.conv(&b).unwrap().adjoint();
            let rhs = b.adjoint().conv(&a.adjoint()).unwrap();
            for (x, y) in lhs.as_slice().iter().zip(rhs.as_slice()) {
                prop_assert!((x - y).norm() <= 1e-12);
            }
            let l = a.conv(&b).unwrap().conv(&c).unwrap();
            let r = a.conv(&b.conv(&c).unwrap()).unwrap();
            for (x, y) in l.as_slice().iter().zip(r.as_slice()) {
                prop_assert!((x - y).norm() <= 1e-12);
            }
        }
    }
}
