#![allow(dead_code)]

use std::sync::Arc;

use convdom_core::dense::DenseMatrix;
use convdom_core::{CdMatrix, KernelBlock, Label, TiledGroup, Transversal, TwistedElement, Window, WindowShape, C64};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn shipped() -> Vec<TiledGroup> {
    vec![
        TiledGroup::lattice(1).unwrap(),
        TiledGroup::lattice(2).unwrap(),
        TiledGroup::heisenberg(),
        TiledGroup::z_x_s3(Transversal::Fixed),
        TiledGroup::z_x_s3(Transversal::Alternating),
        TiledGroup::grid(1, 3).unwrap(),
        TiledGroup::grid(2, 2).unwrap(),
    ]
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn window(g: &TiledGroup, r: usize) -> Arc<Window> {
    let shape = if g.kind() == convdom_core::GroupKind::Heisenberg { WindowShape::Ball } else { WindowShape::Box };
    Arc::new(Window::new(g, shape, r))
}

pub fn block(m: usize, rng: &mut ChaCha8Rng) -> KernelBlock {
    KernelBlock::from_fn(m, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Labels of word length at most `r`.
pub fn ball_labels(g: &TiledGroup, r: usize) -> Vec<Label> {
    Window::new(g, WindowShape::Ball, r).labels().to_vec()
}

/// Random blocks, varying by column, on up to three labels of length ≤ `r`.
pub fn matrix(g: TiledGroup, w: Arc<Window>, r: usize, rng: &mut ChaCha8Rng) -> CdMatrix {
    let pool = ball_labels(&g, r);
    let n = rng.gen_range(1..=3);
    let labels: Vec<Label> = pool.choose_multiple(rng, n).copied().collect();
    let m = g.tile_len();
    CdMatrix::from_fn(g, w, &labels, |_, _| Some(block(m, rng))).unwrap()
}

pub fn twisted(g: TiledGroup, w: Arc<Window>, r: usize, rng: &mut ChaCha8Rng) -> TwistedElement {
    let pool = ball_labels(&g, r);
    let n = rng.gen_range(1..=3);
    let labels: Vec<Label> = pool.choose_multiple(rng, n).copied().collect();
    let m = g.tile_len();
    TwistedElement::from_fn(g, w, &labels, |_, _| Some(block(m, rng))).unwrap()
}

/// Dense section placed straight from the diagonal storage: block `b` at
/// column `j` of diagonal `l` fills rows of tile `l·j`, scaled by `1/m`.
pub fn dense(a: &CdMatrix) -> DenseMatrix {
    let (g, w, m) = (a.group(), a.window(), a.m());
    let n = w.len() * m;
    let mut d = DenseMatrix::zeros(n, n);
    for (l, diag) in a.diagonals() {
        for (k, &j) in diag.cols().iter().enumerate() {
            let i = w.index_of(g.label_mul(l, w.labels()[j])).expect("row inside the window");
            let b = diag.block(k, m);
            for x in 0..m {
                for y in 0..m {
                    d[(i * m + x, j * m + y)] += b[x * m + y] / m as f64;
                }
            }
        }
    }
    d
}

/// Largest entry difference over the block columns `cols`.
pub fn column_deviation(x: &DenseMatrix, y: &DenseMatrix, cols: &[usize], m: usize) -> f64 {
    let mut dev = 0.0f64;
    for &j in cols {
        for c in j * m..(j + 1) * m {
            for r in 0..x.rows() {
                dev = dev.max((x[(r, c)] - y[(r, c)]).norm());
            }
        }
    }
    dev
}

pub fn max_abs(x: &DenseMatrix) -> f64 {
    x.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max)
}
