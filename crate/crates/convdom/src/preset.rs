//! Named operators.
//!
//! | name | group | operator |
//! |------|-------|----------|
//! | `identity` | any | `𝟙` |
//! | `geometric` | `ℤ` | `𝟙 − 0.5λ₁` |
//! | `rudin-shapiro` | `ℤ` | `𝟙 − 0.3(λ₀ + λ₁ + λ₂ − λ₃)` |
//! | `random-walk` | any | `Σ_s λ_s` over the symmetric generators |
//! | `heisenberg` | Heisenberg | `𝟙 − 0.2(λ_a + λ_a⁻¹ + λ_b + λ_b⁻¹)` |
//! | `zxs3` | `ℤ × S₃` | `𝟙 − 0.2Σ_s λ_s` over the generators of `D` |
//! | `gaussian` | `ℝᵈ` grid | `𝟙 − 0.15 Σ_{|l|∞ ≤ 2} K_l`, `K(x, y) = e^{−|x−y|²}` |
//! | `random-self-adjoint` | any | `T + T*`, `T` seeded random on the unit ball |
//!
//! All presets are translation invariant: every diagonal carries one block.

use std::sync::Arc;

use convdom_core::{CdMatrix, GroupKind, KernelBlock, Label, TiledGroup, Window, WindowShape, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{RunError, RunResult};

pub const NAMES: [&str; 8] =
    ["identity", "geometric", "rudin-shapiro", "random-walk", "heisenberg", "zxs3", "gaussian", "random-self-adjoint"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub default_group: Option<TiledGroup>,
    pub self_adjoint: bool,
}

pub fn lookup(name: &str) -> RunResult<Preset> {
    let z = TiledGroup::lattice(1).ok();
    let (name, default_group, self_adjoint) = match name {
        "identity" => ("identity", z, true),
        "geometric" => ("geometric", z, false),
        "rudin-shapiro" => ("rudin-shapiro", z, false),
        "random-walk" => ("random-walk", z, true),
        "heisenberg" => ("heisenberg", Some(TiledGroup::heisenberg()), true),
        "zxs3" => ("zxs3", Some(TiledGroup::z_x_s3(convdom_core::Transversal::Fixed)), true),
        "gaussian" => ("gaussian", TiledGroup::grid(1, 4).ok(), true),
        "random-self-adjoint" => ("random-self-adjoint", z, true),
        other => return Err(RunError::Validation(format!("unknown preset {other:?}; known: {}", NAMES.join(", ")))),
    };
    Ok(Preset { name, default_group, self_adjoint })
}

impl Preset {
    pub fn check_group(&self, group: &TiledGroup) -> RunResult<()> {
        let ok = match self.name {
            "geometric" | "rudin-shapiro" => group.kind() == GroupKind::Lattice { dim: 1 },
            "heisenberg" => group.kind() == GroupKind::Heisenberg,
            "zxs3" => matches!(group.kind(), GroupKind::ZxS3 { .. }),
            "gaussian" => matches!(group.kind(), GroupKind::Grid { .. }),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(RunError::Validation(format!("preset {} does not run on {:?}", self.name, group.kind())))
        }
    }

    /// The operator on `window`. Seeded presets draw their coefficients
    /// from `seed` alone, so every window sees the same operator.
    pub fn build(&self, group: TiledGroup, window: Arc<Window>, seed: u64) -> RunResult<CdMatrix> {
        self.check_group(&group)?;
        let m = group.tile_len();
        let e = group.label_identity();
        let real = |c: f64| C64::new(c, 0.0);
        let lam = |l: Label, c: f64| (l, KernelBlock::identity(m).scale(real(c)));
        let line = |n: i64| Label([n, 0, 0]);
        let diagonals: Vec<(Label, KernelBlock)> = match self.name {
            "identity" => vec![lam(e, 1.0)],
            "geometric" => vec![lam(e, 1.0), lam(line(1), -0.5)],
            "rudin-shapiro" => vec![
                lam(e, 1.0),
                lam(line(0), -0.3),
                lam(line(1), -0.3),
                lam(line(2), -0.3),
                lam(line(3), 0.3),
            ],
            "random-walk" => group.generators().into_iter().map(|s| lam(s, 1.0)).collect(),
            "heisenberg" | "zxs3" => {
                let mut d = vec![lam(e, 1.0)];
                d.extend(group.generators().into_iter().map(|s| lam(s, -0.2)));
                d
            }
            "gaussian" => {
                let mut d = vec![lam(e, 1.0)];
                for l in Window::new(&group, WindowShape::Box, 2).labels() {
                    let k = KernelBlock::sample(&group, |x, y| {
                        let r2: f64 = (0..x.len()).map(|i| (l.0[i] as f64 + x[i] - y[i]).powi(2)).sum();
                        real(-0.15 * (-r2).exp())
                    });
                    d.push((*l, k));
                }
                d
            }
            "random-self-adjoint" => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let labels = Window::new(&group, WindowShape::Ball, 1).labels().to_vec();
                let t: Vec<(Label, KernelBlock)> = labels
                    .into_iter()
                    .map(|l| {
                        let b = KernelBlock::from_fn(m, |_, _| C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)));
                        (l, b)
                    })
                    .collect();
                let t = CdMatrix::from_diagonals(group, window, t)?;
                return Ok(t.add(&t.adjoint())?);
            }
            _ => unreachable!("lookup only returns known presets"),
        };
        Ok(CdMatrix::from_diagonals(group, window, diagonals)?)
    }
}
