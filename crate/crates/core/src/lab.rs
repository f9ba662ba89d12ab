//! Inversion and spectral experiments on windows.
//!
//! * [`spectral_radius_cd`]: `r_n = ‖Aⁿ‖^{1/n}` in the diagonal-sup norm.
//! * [`spectral_radius_op`]: largest `|λ|` of the dense section.
//! * [`neumann_inverse`]: `(𝟙 − T)⁻¹ = Σ Tⁿ` when `‖T‖ < 1`.
//! * [`finite_section_inverse`]: inverse of the section on a window and the
//!   decay profile of its interior columns.
//! * [`inverse_closedness_report`]: profile aggregates over growing windows.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::cd::{CdMatrix, DecayProfile};
use crate::dense::{self, DenseMatrix};
use crate::group::{Label, Window};
use crate::math::{abs, powf};
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// `cd_norm` value above which powers are abandoned.
pub const OVERFLOW_GUARD: f64 = 1e300;

/// Relative increment below which a report is stable.
pub const STABILITY_THRESHOLD: f64 = 0.02;

/// Sequence `r_n` for `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct CdRadii {
    pub values: Vec<f64>,
}

impl CdRadii {
    /// `r_{n+1} ≤ r_n` for all `n`, up to `rel` relative rounding.
    pub fn is_non_increasing(&self, rel: f64) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] * (1.0 + rel))
    }

    pub fn last(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

pub fn spectral_radius_cd(a: &CdMatrix, n_max: usize) -> Result<CdRadii> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let mut values = Vec::with_capacity(n_max);
    let mut power = a.clone();
    for n in 1..=n_max {
        if n > 1 {
            power = power.mul(a)?;
        }
        let norm = power.cd_norm();
        if !(norm <= OVERFLOW_GUARD) {
            return Err(Error::Overflow { power: n });
        }
        values.push(powf(norm, 1.0 / n as f64));
    }
    Ok(CdRadii { values })
}

/// Largest `|λ|` of the dense section; Hermitian sections use the
/// symmetric solver.
pub fn spectral_radius_op(a: &CdMatrix) -> Result<f64> {
    let d = a.to_dense()?;
    spectral_radius_dense(&d)
}

pub fn spectral_radius_dense(d: &DenseMatrix) -> Result<f64> {
    if d.rows() == 0 {
        return Ok(0.0);
    }
    if d.is_hermitian(0.0) {
        let ev = dense::hermitian_eigenvalues(d)?;
        Ok(ev.into_iter().map(abs).fold(0.0, f64::max))
    } else {
        let ev = dense::eigenvalues(d)?;
        Ok(ev.into_iter().map(|z| z.norm()).fold(0.0, f64::max))
    }
}

/// `𝟙 + T + … + T^N` with `N` the least integer such that
/// `‖T‖^{N+1} / (1 − ‖T‖) ≤ tol`.
pub fn neumann_inverse(t: &CdMatrix, tol: f64, n_max: usize) -> Result<CdMatrix> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("tolerance must be positive, got {tol}")));
    }
    let q = t.cd_norm();
    if q >= 1.0 {
        return Err(Error::NotContractive(q));
    }
    let identity = CdMatrix::identity(*t.group(), t.window().clone());
    if q == 0.0 {
        return Ok(identity);
    }
    let mut terms = 0usize;
    let mut tail = q / (1.0 - q);
    while tail > tol {
        terms += 1;
        if terms > n_max {
            return Err(Error::NoConvergence { iterations: n_max, gap: tail });
        }
        tail *= q;
    }
    let mut sum = identity;
    let mut power = t.clone();
    for n in 1..=terms {
        if n > 1 {
            power = power.mul(t)?;
        }
        sum = sum.add(&power)?;
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    DenseLu,
    ConjugateGradient,
    /// Conjugate gradients on the normal equations.
    Cgnr,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionOptions {
    /// Largest accepted `κ₁` estimate for the dense path.
    pub max_condition: f64,
    /// Sections with more unknowns are solved column by column.
    pub dense_limit: usize,
    pub cg_tol: f64,
    pub cg_iter_max: usize,
    /// Interior collar width is this factor times the support radius.
    pub collar_factor: usize,
    /// Largest support radius searched.
    pub support_cap: usize,
}

impl Default for SectionOptions {
    fn default() -> Self {
        Self {
            max_condition: 1e12,
            dense_limit: 1200,
            cg_tol: 1e-14,
            cg_iter_max: 20_000,
            collar_factor: 4,
            support_cap: 16,
        }
    }
}

/// Inverse of a section, held on the interior columns (all columns on the
/// dense path).
#[derive(Debug, Clone)]
pub struct FiniteSection {
    pub window: Arc<Window>,
    /// Window indices of the interior columns.
    pub interior: Vec<usize>,
    /// Window indices of the held inverse columns.
    pub columns: Vec<usize>,
    /// `N × (columns·m)`; block column `c` belongs to `columns[c]`.
    pub inverse: DenseMatrix,
    /// Profile of the inverse over the interior columns.
    pub profile: DecayProfile,
    /// Profile aggregate of `A·A⁻¹ − 𝟙` over the interior columns.
    pub residual: f64,
    pub condition: Option<f64>,
    pub solver: Solver,
}

impl FiniteSection {
    /// Block of the inverse at rows of tile `i`, column of tile `j`.
    pub fn block(&self, i: usize, j: usize, m: usize) -> Option<Vec<C64>> {
        let c = self.columns.iter().position(|&x| x == j)?;
        let mut out = Vec::with_capacity(m * m);
        for x in 0..m {
            for y in 0..m {
                out.push(self.inverse[(i * m + x, c * m + y)] * m as f64);
            }
        }
        Some(out)
    }
}

pub fn interior_columns(a: &CdMatrix, opts: &SectionOptions) -> Result<Vec<usize>> {
    let r = a
        .support_radius(opts.support_cap)
        .ok_or_else(|| Error::InvalidArgument(alloc::format!("support radius exceeds {}", opts.support_cap)))?;
    let cols = a.window().interior(a.group(), r * opts.collar_factor);
    if cols.is_empty() {
        return Err(Error::EmptyInterior);
    }
    Ok(cols)
}

/// Inverts the section of `a` on `window` (a subset of its window).
pub fn finite_section_inverse(a: &CdMatrix, window: &Arc<Window>, opts: &SectionOptions) -> Result<FiniteSection> {
    if !window.is_subset(a.window()) {
        return Err(Error::WindowMismatch);
    }
    let a = if window.as_ref() == a.window().as_ref() { a.clone() } else { a.restrict(window.clone()) };
    let m = a.m();
    let n = window.len() * m;
    let interior = interior_columns(&a, opts)?;

    let (columns, inverse, condition, solver) = if n <= opts.dense_limit {
        let d = a.to_dense_limited(n)?;
        let (inv, cond) = d.inverse(opts.max_condition)?;
        ((0..window.len()).collect::<Vec<_>>(), inv, Some(cond), Solver::DenseLu)
    } else {
        let (inv, solver) = solve_columns(&a, &interior, opts)?;
        (interior.clone(), inv, None, solver)
    };

    let position: Vec<Option<usize>> = {
        let mut p = vec![None; window.len()];
        columns.iter().enumerate().for_each(|(c, &j)| p[j] = Some(c));
        p
    };
    let held: Vec<(usize, usize)> = interior.iter().map(|&j| (j, position[j].expect("interior columns are held"))).collect();
    let profile = column_profile(&a, &held, |i, c| inverse[(i, c)]);

    // residual A·X − 𝟙 on the held interior columns
    let mut resid = DenseMatrix::zeros(n, held.len() * m);
    let mut x = vec![ZERO; n];
    let mut y = vec![ZERO; n];
    for (k, &(j, c)) in held.iter().enumerate() {
        for t in 0..m {
            for (r, v) in x.iter_mut().enumerate() {
                *v = inverse[(r, c * m + t)];
            }
            y.iter_mut().for_each(|z| *z = ZERO);
            a.apply_slice(&x, &mut y);
            y[j * m + t] -= C64::new(1.0, 0.0);
            for (r, v) in y.iter().enumerate() {
                resid[(r, k * m + t)] = *v;
            }
        }
    }
    let seq: Vec<(usize, usize)> = held.iter().enumerate().map(|(k, &(j, _))| (j, k)).collect();
    let residual = column_profile(&a, &seq, |i, c| resid[(i, c)]).aggregate();

    Ok(FiniteSection { window: window.clone(), interior, columns, inverse, profile, residual, condition, solver })
}

/// Profile of a column-held operator: `cols` pairs a window column with its
/// block position in `get`.
fn column_profile(a: &CdMatrix, cols: &[(usize, usize)], get: impl Fn(usize, usize) -> C64) -> DecayProfile {
    let (g, w, m) = (a.group(), a.window(), a.m());
    let scale = m as f64;
    let mut entries: alloc::collections::BTreeMap<Label, f64> = alloc::collections::BTreeMap::new();
    for &(j, c) in cols {
        let lji = g.label_inv(w.labels()[j]);
        for (i, &li) in w.labels().iter().enumerate() {
            let mut s = 0.0f64;
            for x in 0..m {
                for y in 0..m {
                    s = s.max(get(i * m + x, c * m + y).norm());
                }
            }
            if s > 0.0 {
                let e = entries.entry(g.label_mul(li, lji)).or_insert(0.0);
                *e = e.max(s * scale);
            }
        }
    }
    DecayProfile::from_entries(entries)
}

fn solve_columns(a: &CdMatrix, cols: &[usize], opts: &SectionOptions) -> Result<(DenseMatrix, Solver)> {
    let m = a.m();
    let n = a.window().len() * m;
    let adj = a.adjoint();
    let hermitian = a.sub(&adj)?.cd_norm() == 0.0;
    let mut out = DenseMatrix::zeros(n, cols.len() * m);
    let mut solver = if hermitian { Solver::ConjugateGradient } else { Solver::Cgnr };
    let mut b = vec![ZERO; n];
    for (c, &j) in cols.iter().enumerate() {
        for t in 0..m {
            b.iter_mut().for_each(|z| *z = ZERO);
            b[j * m + t] = C64::new(1.0, 0.0);
            let mut x = None;
            if solver == Solver::ConjugateGradient {
                let r = dense::conjugate_gradient(
                    |p, q| {
                        q.iter_mut().for_each(|z| *z = ZERO);
                        a.apply_slice(p, q);
                    },
                    &b,
                    opts.cg_tol,
                    opts.cg_iter_max,
                );
                match r {
                    Ok(v) => x = Some(v),
                    // indefinite: fall back to the normal equations
                    Err(_) => solver = Solver::Cgnr,
                }
            }
            let x = match x {
                Some(v) => v,
                None => {
                    let mut rhs = vec![ZERO; n];
                    adj.apply_slice(&b, &mut rhs);
                    let mut tmp = vec![ZERO; n];
                    dense::conjugate_gradient(
                        |p, q| {
                            tmp.iter_mut().for_each(|z| *z = ZERO);
                            a.apply_slice(p, &mut tmp);
                            q.iter_mut().for_each(|z| *z = ZERO);
                            adj.apply_slice(&tmp, q);
                        },
                        &rhs,
                        opts.cg_tol,
                        opts.cg_iter_max,
                    )?
                }
            };
            for (r, v) in x.into_iter().enumerate() {
                out[(r, c * m + t)] = v;
            }
        }
    }
    Ok((out, solver))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    /// A window failed; records stop there.
    Incomplete,
}

#[derive(Debug, Clone)]
pub struct WindowRecord {
    pub radius: usize,
    pub size: usize,
    pub interior: usize,
    pub profile: DecayProfile,
    pub aggregate: f64,
    pub residual: f64,
    pub condition: Option<f64>,
    pub solver: Solver,
}

#[derive(Debug, Clone)]
pub struct InversionReport {
    pub records: Vec<WindowRecord>,
    /// `|agg_k − agg_{k−1}| / agg_{k−1}`.
    pub increments: Vec<f64>,
    pub verdict: Verdict,
    /// Radius and error of the first failing window.
    pub failure: Option<(usize, Error)>,
}

/// Finite-section inverses of `a` on increasing subwindows of its window.
pub fn inverse_closedness_report(
    a: &CdMatrix,
    windows: &[Arc<Window>],
    opts: &SectionOptions,
) -> Result<InversionReport> {
    if windows.len() < 3 {
        return Err(Error::InvalidArgument("at least three windows are needed".into()));
    }
    for w in windows.windows(2) {
        if !(w[0].len() < w[1].len() && w[0].is_subset(&w[1])) {
            return Err(Error::InvalidArgument("windows must be strictly increasing".into()));
        }
    }
    if !windows.iter().all(|w| w.is_subset(a.window())) {
        return Err(Error::WindowMismatch);
    }
    let mut records = Vec::new();
    let mut failure = None;
    for w in windows {
        match finite_section_inverse(a, w, opts) {
            Ok(s) => records.push(WindowRecord {
                radius: w.radius(),
                size: w.len(),
                interior: s.interior.len(),
                aggregate: s.profile.aggregate(),
                profile: s.profile,
                residual: s.residual,
                condition: s.condition,
                solver: s.solver,
            }),
            Err(e) => {
                failure = Some((w.radius(), e));
                break;
            }
        }
    }
    let increments: Vec<f64> =
        records.windows(2).map(|r| abs(r[1].aggregate - r[0].aggregate) / abs(r[0].aggregate)).collect();
    let verdict = match (&failure, increments.last()) {
        (Some(_), _) => Verdict::Incomplete,
        (None, Some(&inc)) if inc < STABILITY_THRESHOLD => Verdict::Stable,
        _ => Verdict::Unstable,
    };
    Ok(InversionReport { records, increments, verdict, failure })
}
