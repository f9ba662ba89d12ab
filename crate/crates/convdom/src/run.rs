//! Experiment runner.

use std::fs;
use std::sync::Arc;

use convdom_core::dense::DenseMatrix;
use convdom_core::group::folner_set;
use convdom_core::lab::{self, SectionOptions, Solver};
use convdom_core::{BlockVector, CdMatrix, KernelBlock, Label, TiledGroup, TwistedElement, Window, WindowShape, C64};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{BlockKind, Experiment, ExperimentConfig, GroupSpec, OperatorSpec};
use crate::error::{RunError, RunResult};
use crate::format;
use crate::preset;
use crate::report::{ProfileRow, Report};

/// Report of a run and the first failure, if any. Parse and validation
/// errors are returned before anything runs; numerical failures and
/// invariant violations still come with the records gathered so far.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub failure: Option<RunError>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.failure.as_ref().map_or(0, RunError::exit_code)
    }
}

pub fn run(cfg: &ExperimentConfig) -> RunResult<Outcome> {
    cfg.validate()?;
    let ctx = Context::new(cfg)?;
    let mut report = Report::default();
    report.record(
        "config",
        json!({
            "experiment": cfg.experiment.name(),
            "seed": cfg.seed,
            "group": GroupSpec::of(&ctx.group).to_string(),
            "window_shape": shape_name(ctx.shape),
            "radii": cfg.window.radii,
            "operator": describe(cfg.operator.as_ref()),
            "tolerances": cfg.tolerances,
        }),
    );
    report.line(format!(
        "{} on {} (seed {}, {} windows {:?})",
        cfg.experiment.name(),
        GroupSpec::of(&ctx.group),
        cfg.seed,
        shape_name(ctx.shape),
        cfg.window.radii
    ));
    let result = match cfg.experiment {
        Experiment::Norms => ctx.norms(&mut report),
        Experiment::MultiplyCheck => ctx.multiply_check(&mut report),
        Experiment::Invert => ctx.invert(&mut report),
        Experiment::Spectral => ctx.spectral(&mut report),
        Experiment::Folner => ctx.folner(&mut report),
        Experiment::Overlap => ctx.overlap(&mut report),
        Experiment::Intertwine => ctx.intertwine(&mut report),
    };
    let failure = result.err();
    match &failure {
        None => report.line("result: ok"),
        Some(e) => report.line(format!("result: {e}")),
    }
    report.record("status", json!({ "exit_code": failure.as_ref().map_or(0, RunError::exit_code) }));
    Ok(Outcome { report, failure })
}

fn shape_name(s: WindowShape) -> &'static str {
    match s {
        WindowShape::Box => "box",
        WindowShape::Ball => "ball",
    }
}

fn describe(op: Option<&OperatorSpec>) -> String {
    match op {
        None => "random".into(),
        Some(OperatorSpec { preset: Some(p), .. }) => format!("preset {p}"),
        Some(OperatorSpec { file: Some(f), .. }) => format!("file {}", f.display()),
        Some(o) => format!("{} diagonals", o.diagonals.len()),
    }
}

fn invariant(cond: bool, msg: impl FnOnce() -> String) -> RunResult<()> {
    if cond {
        Ok(())
    } else {
        Err(RunError::Invariant(msg()))
    }
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    group: TiledGroup,
    shape: WindowShape,
    windows: Vec<Arc<Window>>,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a ExperimentConfig) -> RunResult<Self> {
        let group = cfg.group()?;
        let shape = cfg.shape(&group);
        let windows = cfg.window.radii.iter().map(|&r| Arc::new(Window::new(&group, shape, r))).collect();
        Ok(Self { cfg, group, shape, windows })
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.cfg.seed)
    }

    fn largest(&self) -> &Arc<Window> {
        self.windows.last().expect("validated radii")
    }

    fn smallest(&self) -> &Arc<Window> {
        self.windows.first().expect("validated radii")
    }

    fn label_str(&self, l: Label) -> String {
        self.group.format_label(l)
    }

    fn operator(&self, window: &Arc<Window>) -> RunResult<Option<CdMatrix>> {
        let Some(spec) = &self.cfg.operator else { return Ok(None) };
        let (g, m) = (self.group, self.group.tile_len());
        if let Some(p) = &spec.preset {
            return Ok(Some(preset::lookup(p)?.build(g, window.clone(), self.cfg.seed)?));
        }
        if let Some(path) = &spec.file {
            let path = self.cfg.resolve(path);
            let text = fs::read_to_string(&path)
                .map_err(|e| RunError::Parse(format!("cannot read {}: {e}", path.display())))?;
            let a = format::read_matrix(&text)?;
            if *a.group() != g {
                return Err(RunError::Validation(format!("{} holds a matrix over another group", path.display())));
            }
            if !window.is_subset(a.window()) {
                return Err(RunError::Validation(format!("{} does not cover the radius {} window", path.display(), window.radius())));
            }
            return Ok(Some(if a.window().as_ref() == window.as_ref() { a } else { a.restrict(window.clone()) }));
        }
        let mut diagonals = Vec::new();
        for d in &spec.diagonals {
            let l = g.parse_label(&d.label)?;
            let block = match &d.file {
                Some(p) => {
                    let p = self.cfg.resolve(p);
                    let bytes = fs::read(&p).map_err(|e| RunError::Parse(format!("cannot read {}: {e}", p.display())))?;
                    format::read_block(&bytes)?
                }
                None => {
                    let c = C64::new(d.re, d.im);
                    match d.kind {
                        BlockKind::Identity => KernelBlock::identity(m).scale(c),
                        BlockKind::Constant => KernelBlock::constant(m, c),
                    }
                }
            };
            diagonals.push((l, block));
        }
        Ok(Some(CdMatrix::from_diagonals(g, window.clone(), diagonals)?))
    }

    fn required_operator(&self, window: &Arc<Window>) -> RunResult<CdMatrix> {
        self.operator(window)?.ok_or_else(|| RunError::Validation("an [operator] is required".into()))
    }

    fn section_options(&self) -> SectionOptions {
        SectionOptions { dense_limit: self.cfg.tolerances.dense_limit, ..SectionOptions::default() }
    }

    fn push_profile(&self, report: &mut Report, radius: usize, profile: &convdom_core::DecayProfile) {
        for (l, d) in profile.iter() {
            report.profile.push(ProfileRow { window: radius, label: self.label_str(l), d });
        }
    }

    // ---- experiments ------------------------------------------------------

    fn norms(&self, report: &mut Report) -> RunResult<()> {
        let t = &self.cfg.tolerances;
        for w in &self.windows {
            let a = self.required_operator(w)?;
            let cd = a.cd_norm();
            let op = a.op_norm_estimate(t.power_tol, t.power_iter)?;
            let profile = a.profile();
            let aggregate = profile.aggregate();
            report.record(
                "norms",
                json!({
                    "radius": w.radius(),
                    "size": w.len(),
                    "cd_norm": cd,
                    "op_norm": op,
                    "aggregate": aggregate,
                    "diagonals": profile.len(),
                    "nnz_blocks": a.nnz_blocks(),
                }),
            );
            report.line(format!("radius {}: cd_norm {cd} op_norm {op} aggregate {aggregate}", w.radius()));
            self.push_profile(report, w.radius(), &profile);
            invariant(op <= cd * (1.0 + t.relative), || format!("op_norm {op} exceeds cd_norm {cd}"))?;
            invariant((aggregate - cd).abs() <= t.relative * cd, || format!("aggregate {aggregate} differs from cd_norm {cd}"))?;
        }
        Ok(())
    }

    fn multiply_check(&self, report: &mut Report) -> RunResult<()> {
        let t = &self.cfg.tolerances;
        let (g, w) = (self.group, self.smallest());
        let m = g.tile_len();
        let mut rng = self.rng();
        let pool: Vec<Label> =
            Window::new(&g, WindowShape::Ball, 2).labels().iter().copied().filter(|&l| w.contains(l)).collect();
        let (mut mul_dev, mut apply_dev, mut adj_dev) = (0.0f64, 0.0f64, 0.0f64);
        let mut submult_violations = 0usize;
        let mut interior_min = usize::MAX;
        for _ in 0..t.cases {
            let a = random_matrix(g, w.clone(), &pool, &mut rng)?;
            let b = random_matrix(g, w.clone(), &pool, &mut rng)?;
            let depth = a.support_radius(8).unwrap_or(0) + b.support_radius(8).unwrap_or(0);
            let cols = w.interior(&g, depth);
            if cols.is_empty() {
                return Err(RunError::Validation(format!("radius {} leaves no interior columns at depth {depth}", w.radius())));
            }
            interior_min = interior_min.min(cols.len());
            let (ad, bd) = (a.to_dense()?, b.to_dense()?);
            let ab = a.mul(&b)?;
            mul_dev = mul_dev.max(relative_on_columns(&ab.to_dense()?, &ad.matmul(&bd)?, &cols, m));
            if ab.cd_norm() > a.cd_norm() * b.cd_norm() * (1.0 + t.relative) {
                submult_violations += 1;
            }
            let xi: Vec<C64> = (0..w.len() * m).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let got = a.apply(&BlockVector::from_vec(w.clone(), m, xi.clone())?)?;
            let want = ad.mul_vec(&xi)?;
            apply_dev = apply_dev.max(relative_vec(got.as_slice(), &want));
            let all: Vec<usize> = (0..w.len()).collect();
            adj_dev = adj_dev.max(relative_on_columns(&a.adjoint().to_dense()?, &ad.adjoint(), &all, m));
        }
        report.record(
            "multiply_check",
            json!({
                "cases": t.cases,
                "radius": w.radius(),
                "interior_columns_min": interior_min,
                "mul_relative": mul_dev,
                "apply_relative": apply_dev,
                "adjoint_relative": adj_dev,
                "submultiplicativity_violations": submult_violations,
            }),
        );
        report.line(format!(
            "{} cases: mul {mul_dev:e}, apply {apply_dev:e}, adjoint {adj_dev:e}, submultiplicativity violations {submult_violations}",
            t.cases
        ));
        let worst = mul_dev.max(apply_dev).max(adj_dev);
        invariant(worst <= t.relative, || format!("dense oracle deviation {worst:e} exceeds {:e}", t.relative))?;
        invariant(submult_violations == 0, || format!("{submult_violations} products exceed cd_norm(A)·cd_norm(B)"))
    }

    fn invert(&self, report: &mut Report) -> RunResult<()> {
        let t = &self.cfg.tolerances;
        let a = self.required_operator(self.largest())?;
        let rep = lab::inverse_closedness_report(&a, &self.windows, &self.section_options())?;
        for r in &rep.records {
            report.record(
                "window",
                json!({
                    "radius": r.radius,
                    "size": r.size,
                    "interior": r.interior,
                    "aggregate": r.aggregate,
                    "residual": r.residual,
                    "condition": r.condition,
                    "solver": solver_name(r.solver),
                }),
            );
            report.line(format!(
                "radius {}: aggregate {} residual {:e} ({}, {} interior columns)",
                r.radius,
                r.aggregate,
                r.residual,
                solver_name(r.solver),
                r.interior
            ));
            self.push_profile(report, r.radius, &r.profile);
        }
        let last = rep.increments.last().copied();
        let verdict = match (&rep.failure, last) {
            (Some(_), _) => "incomplete",
            (None, Some(inc)) if inc < t.stability => "stable",
            _ => "unstable",
        };
        report.record("verdict", json!({ "verdict": verdict, "increments": rep.increments, "threshold": t.stability }));
        report.line(format!("increments {:?}; verdict {verdict}", rep.increments));
        if let Some((radius, e)) = rep.failure {
            report.line(format!("radius {radius} failed: {e}"));
            return Err(RunError::Numerical(e));
        }
        for r in &rep.records {
            invariant(r.residual <= t.residual, || format!("radius {} residual {:e} exceeds {:e}", r.radius, r.residual, t.residual))?;
        }
        invariant(verdict == "stable", || format!("final increment {:e} is not below {}", last.unwrap_or(f64::NAN), t.stability))
    }

    fn spectral(&self, report: &mut Report) -> RunResult<()> {
        let t = &self.cfg.tolerances;
        let a = self.required_operator(self.largest())?;
        let hermitian = a.sub(&a.adjoint())?.cd_norm() == 0.0;
        let radii = lab::spectral_radius_cd(&a, t.n_max)?;
        let rho = lab::spectral_radius_op(&a)?;
        let gaps: Vec<f64> = radii.values.iter().map(|r| r - rho).collect();
        for (n, (r, gap)) in radii.values.iter().zip(&gaps).enumerate() {
            report.record("radius", json!({ "n": n + 1, "r_n": r, "gap": gap }));
        }
        let shrinking = gaps.windows(2).all(|w| w[1] <= w[0] + t.relative * rho.max(1.0));
        let terminal = *gaps.last().expect("n_max ≥ 1");
        let relative_gap = if rho > 0.0 { terminal / rho } else { terminal };
        report.record(
            "spectral",
            json!({
                "op_radius": rho,
                "self_adjoint": hermitian,
                "terminal_gap": terminal,
                "terminal_relative_gap": relative_gap,
                "gaps_shrinking": shrinking,
                "window_size": self.largest().len(),
            }),
        );
        report.line(format!(
            "op radius {rho}; r_1 {} … r_{} {}; terminal gap {terminal:e} ({:.3}%); gaps shrinking: {shrinking}",
            radii.values[0],
            t.n_max,
            radii.last(),
            100.0 * relative_gap
        ));
        let below = radii.values.iter().all(|&r| rho <= r * (1.0 + t.relative));
        invariant(below, || "the operator spectral radius exceeds some r_n".into())?;
        invariant(!hermitian || shrinking, || "gaps r_n − ρ do not shrink for a self-adjoint operator".into())
    }

    fn folner(&self, report: &mut Report) -> RunResult<()> {
        let t = &self.cfg.tolerances;
        let g = self.group;
        let k = Window::new(&g, WindowShape::Ball, 1).labels().to_vec();
        for &eps in &t.epsilon {
            let f = folner_set(&g, &k, eps, t.folner_radius)?;
            let c = &f.certificate;
            report.record(
                "folner",
                json!({
                    "epsilon": eps,
                    "shape": f.shape(),
                    "size": f.len(),
                    "radius": f.radius,
                    "cover": f.cover,
                    "d_ratio": f.d_ratio,
                    "tested": c.entries.len(),
                    "worst_ratio": c.worst_ratio(),
                    "holds": c.holds(),
                }),
            );
            report.line(format!(
                "epsilon {eps}: box {:?} ({} tiles), worst |xUE Δ UE|/|UE| = {} over {} elements",
                f.shape(),
                f.len(),
                c.worst_ratio(),
                c.entries.len()
            ));
            invariant(c.holds(), || format!("certificate fails at epsilon {eps}"))?;
        }
        Ok(())
    }

    fn overlap(&self, report: &mut Report) -> RunResult<()> {
        let t = &self.cfg.tolerances;
        let (g, w) = (self.group, self.smallest());
        let elems = w.elements(&g);
        let mut rng = self.rng();
        let mut violations = 0usize;
        let mut tight = 0usize;
        for _ in 0..t.cases {
            let z = *elems.choose(&mut rng).expect("windows are non-empty");
            let pick = |rng: &mut ChaCha8Rng| {
                let n = rng.gen_range(0..=4);
                (0..n).map(|_| *elems.choose(rng).unwrap()).collect::<Vec<_>>()
            };
            let k = pick(&mut rng);
            let l = pick(&mut rng);
            let c = g.overlap_count(z, &k, &l);
            if !c.holds() {
                violations += 1;
            }
            if c.count as u128 * c.tile_atoms as u128 == c.bound_atoms as u128 {
                tight += 1;
            }
        }
        let d = g.diagonal_overlap_constant(w);
        let mismatches: Vec<String> = d.mismatches.iter().map(|&l| self.label_str(l)).collect();
        report.record(
            "overlap",
            json!({
                "cases": t.cases,
                "violations": violations,
                "attained": tight,
                "n": d.n,
                "labels_checked": d.labels_checked,
                "mismatched_labels": mismatches,
            }),
        );
        report.line(format!(
            "{} cases: {violations} violations, bound attained {tight} times; n = {}; {} of {} diagonals mismatched",
            t.cases,
            d.n,
            mismatches.len(),
            d.labels_checked
        ));
        invariant(violations == 0, || format!("{violations} overlap counts exceed the bound"))?;
        invariant(mismatches.is_empty(), || format!("approximate block diagonals differ at {mismatches:?}"))
    }

    fn intertwine(&self, report: &mut Report) -> RunResult<()> {
        let t = &self.cfg.tolerances;
        let (g, w) = (self.group, self.smallest());
        let mut rng = self.rng();
        let pool = Window::new(&g, WindowShape::Ball, 1).labels().to_vec();
        let f = match self.operator(w)? {
            Some(a) => {
                let labels: Vec<Label> = a.labels().collect();
                TwistedElement::from_fn(g, w.clone(), &labels, |h, j| a.block(h, w.index_of(j)?))?
            }
            None => random_twisted(g, w.clone(), &pool, &mut rng)?,
        };
        let other = random_twisted(g, w.clone(), &pool, &mut rng)?;
        let rf = f.represent();
        let l1 = f.l1_norm();
        let cd = rf.cd_norm();
        let depth = rf.support_radius(16).unwrap_or(0) + other.represent().support_radius(16).unwrap_or(0);
        let cols = w.interior(&g, depth);
        let hom = if cols.is_empty() { None } else { Some(f.star(&other)?.represent().max_deviation(&rf.mul(&other.represent())?, &cols)?) };
        let inv = f.involution().represent().max_deviation(&rf.adjoint(), &(0..w.len()).collect::<Vec<_>>())?;
        let residual = f.intertwiner_check()?;
        report.record(
            "intertwine",
            json!({
                "radius": w.radius(),
                "support": f.support().count(),
                "l1_norm": l1,
                "cd_norm": cd,
                "homomorphism_deviation": hom,
                "involution_deviation": inv,
                "intertwiner_residual": residual,
                "interior_rows": f.doubled_interior().len(),
            }),
        );
        report.line(format!(
            "‖F‖ {l1} vs ‖R(F)‖ {cd}; R(F⋆G) − R(F)R(G): {}; R(F*) − R(F)*: {inv:e}; S·R^ω − λ^M·S: {residual:e}",
            hom.map_or("no interior".into(), |h| format!("{h:e}"))
        ));
        let scale = 1.0 + l1;
        invariant(l1 == cd, || format!("l1 norm {l1} differs from cd norm {cd}"))?;
        invariant(hom.is_none_or(|h| h <= t.relative * scale * scale), || "R is not multiplicative on the interior".into())?;
        invariant(inv <= t.relative * scale, || "R does not intertwine the involutions".into())?;
        invariant(residual <= t.relative * scale, || format!("intertwiner residual {residual:e}"))
    }
}

fn solver_name(s: Solver) -> &'static str {
    match s {
        Solver::DenseLu => "dense-lu",
        Solver::ConjugateGradient => "cg",
        Solver::Cgnr => "cgnr",
    }
}

/// Random blocks on one to three diagonals drawn from `pool`.
pub fn random_matrix(g: TiledGroup, w: Arc<Window>, pool: &[Label], rng: &mut ChaCha8Rng) -> RunResult<CdMatrix> {
    let n = rng.gen_range(1..=3.min(pool.len()));
    let labels: Vec<Label> = pool.choose_multiple(rng, n).copied().collect();
    let m = g.tile_len();
    Ok(CdMatrix::from_fn(g, w, &labels, |_, _| Some(random_block(m, rng)))?)
}

/// Random element supported on one to three labels of `pool`.
pub fn random_twisted(g: TiledGroup, w: Arc<Window>, pool: &[Label], rng: &mut ChaCha8Rng) -> RunResult<TwistedElement> {
    let n = rng.gen_range(1..=3.min(pool.len()));
    let labels: Vec<Label> = pool.choose_multiple(rng, n).copied().collect();
    let m = g.tile_len();
    Ok(TwistedElement::from_fn(g, w, &labels, |_, _| Some(random_block(m, rng)))?)
}

pub fn random_block(m: usize, rng: &mut ChaCha8Rng) -> KernelBlock {
    KernelBlock::from_fn(m, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// `max |x − y| / max |y|` over the block columns `cols`.
fn relative_on_columns(x: &DenseMatrix, y: &DenseMatrix, cols: &[usize], m: usize) -> f64 {
    let (mut dev, mut scale) = (0.0f64, 0.0f64);
    for &j in cols {
        for c in j * m..(j + 1) * m {
            for r in 0..y.rows() {
                dev = dev.max((x[(r, c)] - y[(r, c)]).norm());
                scale = scale.max(y[(r, c)].norm());
            }
        }
    }
    if scale > 0.0 {
        dev / scale
    } else {
        dev
    }
}

fn relative_vec(x: &[C64], y: &[C64]) -> f64 {
    let dev = x.iter().zip(y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let scale = y.iter().map(|b| b.norm()).fold(0.0, f64::max);
    if scale > 0.0 {
        dev / scale
    } else {
        dev
    }
}
