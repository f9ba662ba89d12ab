//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Oracles here are computed independently of the library paths
//! they check.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use convdom::config::{GroupSpec, OperatorSpec};
use convdom::{run, Experiment, ExperimentConfig, Report};
use convdom_core::group::folner_set;
use convdom_core::{
    CdMatrix, Elem, GroupKind, KernelBlock, Label, TiledGroup, Transversal, TwistedElement, Window, WindowShape, C64,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde_json::Value;

type Check = Result<String, String>;

/// Title, check, runtime limit in seconds.
type Criterion = (&'static str, fn() -> Check, Option<u64>);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn shipped() -> Vec<TiledGroup> {
    vec![
        TiledGroup::lattice(1).unwrap(),
        TiledGroup::lattice(2).unwrap(),
        TiledGroup::heisenberg(),
        TiledGroup::z_x_s3(Transversal::Fixed),
        TiledGroup::z_x_s3(Transversal::Alternating),
        TiledGroup::grid(1, 1).unwrap(),
        TiledGroup::grid(1, 3).unwrap(),
        TiledGroup::grid(1, 4).unwrap(),
        TiledGroup::grid(2, 3).unwrap(),
    ]
}

fn window(g: &TiledGroup, r: usize) -> Arc<Window> {
    let shape = if g.kind() == GroupKind::Heisenberg { WindowShape::Ball } else { WindowShape::Box };
    Arc::new(Window::new(g, shape, r))
}

fn block(m: usize, rng: &mut ChaCha8Rng) -> KernelBlock {
    KernelBlock::from_fn(m, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn pick_labels(pool: &[Label], rng: &mut ChaCha8Rng) -> Vec<Label> {
    let n = rng.gen_range(1..=3);
    pool.choose_multiple(rng, n).copied().collect()
}

fn unit_ball(g: &TiledGroup) -> Vec<Label> {
    Window::new(g, WindowShape::Ball, 1).labels().to_vec()
}

fn name(g: &TiledGroup) -> String {
    GroupSpec::of(g).to_string()
}

// ---- 1 --------------------------------------------------------------------

fn isometry() -> Check {
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    for g in shipped() {
        let w = window(&g, 6);
        let pool = unit_ball(&g);
        let m = g.tile_len();
        let mut rng = rng(0x1501);
        for _ in 0..500 {
            let draw = |rng: &mut ChaCha8Rng| {
                let labels = pick_labels(&pool, rng);
                TwistedElement::from_fn(g, w.clone(), &labels, |_, _| Some(block(m, rng))).unwrap()
            };
            let f = draw(&mut rng);
            let h = draw(&mut rng);
            let (rf, rh) = (f.represent(), h.represent());
            for (x, rx) in [(&f, &rf), (&h, &rh)] {
                let (l1, cd) = (x.l1_norm(), rx.cd_norm());
                ensure(l1 == cd, || format!("{}: l1 {l1} != cd {cd}", name(&g)))?;
            }
            let depth = rf.support_radius(16).unwrap() + rh.support_radius(16).unwrap();
            let cols = w.interior(&g, depth);
            ensure(!cols.is_empty(), || format!("{}: no interior at depth {depth}", name(&g)))?;
            let dev = f.star(&h).unwrap().represent().max_deviation(&rf.mul(&rh).unwrap(), &cols).unwrap();
            worst = worst.max(dev);
            ensure(dev <= 1e-12, || format!("{}: star vs mul {dev:e}", name(&g)))?;
            cases += 1;
        }
    }
    Ok(format!("{cases} pairs, l1 == cd exactly, star vs mul {worst:e}"))
}

// ---- 2 --------------------------------------------------------------------

/// Dense section placed from the stored blocks: block `b` of diagonal `l`
/// at column `j` fills the rows of tile `l·j`, divided by `m`.
fn place(a: &CdMatrix) -> Vec<Vec<C64>> {
    let (g, w, m) = (a.group(), a.window(), a.m());
    let n = w.len() * m;
    let mut d = vec![vec![C64::new(0.0, 0.0); n]; n];
    for (l, diag) in a.diagonals() {
        for (k, &j) in diag.cols().iter().enumerate() {
            let i = w.index_of(g.label_mul(l, w.labels()[j])).expect("row inside the window");
            let b = diag.block(k, m);
            for x in 0..m {
                for y in 0..m {
                    d[i * m + x][j * m + y] += b[x * m + y] / m as f64;
                }
            }
        }
    }
    d
}

fn dense_cases(g: TiledGroup, r: usize, seed: u64) -> Result<[f64; 3], String> {
    let w = window(&g, r);
    let m = g.tile_len();
    let pool: Vec<Label> = unit_ball(&g).into_iter().filter(|&l| w.contains(l)).collect();
    let mut rng = rng(seed);
    let mut worst = [0.0f64; 3];
    for _ in 0..500 {
        let draw = |rng: &mut ChaCha8Rng| {
            let labels = pick_labels(&pool, rng);
            CdMatrix::from_fn(g, w.clone(), &labels, |_, _| Some(block(m, rng))).unwrap()
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let (da, db) = (place(&a), place(&b));
        let n = da.len();
        let cols = w.interior(&g, 2);
        ensure(!cols.is_empty(), || format!("{}: radius {r} has no interior", name(&g)))?;

        let dab = place(&a.mul(&b).map_err(|e| e.to_string())?);
        let (mut dev, mut scale) = (0.0f64, 0.0f64);
        for &j in &cols {
            for c in j * m..(j + 1) * m {
                for (row, got) in da.iter().zip(&dab) {
                    let want: C64 = (0..n).map(|k| row[k] * db[k][c]).sum();
                    dev = dev.max((got[c] - want).norm());
                    scale = scale.max(want.norm());
                }
            }
        }
        worst[0] = worst[0].max(dev / scale.max(f64::MIN_POSITIVE));

        let xi: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let v = convdom_core::BlockVector::from_vec(w.clone(), m, xi.clone()).unwrap();
        let got = a.apply(&v).map_err(|e| e.to_string())?;
        let want: Vec<C64> = da.iter().map(|row| row.iter().zip(&xi).map(|(p, q)| p * q).sum()).collect();
        let dev = got.as_slice().iter().zip(&want).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        let scale = want.iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst[1] = worst[1].max(dev / scale.max(f64::MIN_POSITIVE));

        let dstar = place(&a.adjoint());
        let (mut dev, mut scale) = (0.0f64, 0.0f64);
        for r in 0..n {
            for c in 0..n {
                dev = dev.max((dstar[r][c] - da[c][r].conj()).norm());
                scale = scale.max(da[c][r].norm());
            }
        }
        worst[2] = worst[2].max(dev / scale.max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

fn dense_oracle() -> Check {
    let cases = [
        (TiledGroup::lattice(1).unwrap(), 8),
        (TiledGroup::lattice(2).unwrap(), 3),
        (TiledGroup::heisenberg(), 3),
        (TiledGroup::z_x_s3(Transversal::Fixed), 4),
        (TiledGroup::z_x_s3(Transversal::Alternating), 4),
        (TiledGroup::grid(1, 3).unwrap(), 4),
        (TiledGroup::grid(2, 2).unwrap(), 3),
    ];
    let mut all = [0.0f64; 3];
    for (i, (g, r)) in cases.into_iter().enumerate() {
        let worst = dense_cases(g, r, 0x2000 + i as u64)?;
        for k in 0..3 {
            all[k] = all[k].max(worst[k]);
        }
        let bad = worst.iter().any(|&x| x > 1e-12);
        ensure(!bad, || format!("{}: mul/apply/adjoint {:e}/{:e}/{:e}", name(&g), worst[0], worst[1], worst[2]))?;
    }
    Ok(format!("7 groups × 500: mul {:e}, apply {:e}, adjoint {:e}", all[0], all[1], all[2]))
}

// ---- 3 --------------------------------------------------------------------

fn overlap() -> Check {
    let mut checked = 0usize;
    for g in shipped() {
        let elems = Window::new(&g, WindowShape::Ball, 2).elements(&g);
        let scan = Window::new(&g, WindowShape::Ball, 10);
        let mut rng = rng(0x3000);
        for _ in 0..200 {
            let pick = |n: usize, rng: &mut ChaCha8Rng| (0..n).map(|_| *elems.choose(rng).unwrap()).collect::<Vec<Elem>>();
            let z = pick(1, &mut rng)[0];
            let nk = rng.gen_range(0..5);
            let k = pick(nk, &mut rng);
            let nl = rng.gen_range(0..5);
            let l = pick(nl, &mut rng);
            let c = g.overlap_count(z, &k, &l);
            // #{ḣ : rep(ḣ)L ∩ zK ≠ ∅} by scanning
            let zk: BTreeSet<Elem> = k.iter().map(|&a| g.mul(z, a)).collect();
            let count = scan
                .labels()
                .iter()
                .filter(|&&h| l.iter().any(|&b| zk.contains(&g.mul(g.rep(h), b))))
                .count() as u64;
            ensure(c.count == count, || format!("{}: count {} vs scan {count}", name(&g), c.count))?;
            ensure(c.holds(), || format!("{}: count {} above bound {}", name(&g), c.count, c.bound()))?;
            checked += 1;
        }
    }
    let z = TiledGroup::lattice(1).unwrap();
    let k: Vec<Elem> = (0..3).map(|n| Elem([n, 0, 0])).collect();
    let c = z.overlap_count(z.identity(), &k, &k);
    ensure((c.count, c.bound()) == (5, 5.0), || format!("line example gives ({}, {})", c.count, c.bound()))?;
    Ok(format!("{checked} triples, 0 violations; line example count 5, bound 5"))
}

// ---- 4 --------------------------------------------------------------------

fn block_band() -> Check {
    let mut labels = 0;
    for t in [Transversal::Fixed, Transversal::Alternating] {
        let g = TiledGroup::z_x_s3(t);
        let w = Window::new(&g, WindowShape::Box, 4);
        let d = g.diagonal_overlap_constant(&w);
        ensure(d.mismatches.is_empty(), || format!("{t:?}: mismatches {:?}", d.mismatches))?;
        // block diagonals from label arithmetic on ℤ × ℤ/2; approximate ones
        // by finding the tile rep(l)·U holding rep(i)rep(j)⁻¹
        let mut owner: BTreeMap<Elem, Label> = BTreeMap::new();
        for &l in Window::new(&g, WindowShape::Box, 8).labels() {
            for u in g.tile_points() {
                owner.insert(g.mul(g.rep(l), u), l);
            }
        }
        let mut approximate: BTreeMap<Label, BTreeSet<(usize, usize)>> = BTreeMap::new();
        let mut exact: BTreeMap<Label, BTreeSet<(usize, usize)>> = BTreeMap::new();
        let ls = w.labels();
        for (i, li) in ls.iter().enumerate() {
            for (j, lj) in ls.iter().enumerate() {
                let p = g.mul(g.rep(*li), g.inv(g.rep(*lj)));
                let l = *owner.get(&p).ok_or_else(|| format!("{t:?}: {p:?} outside the scanned tiles"))?;
                approximate.entry(l).or_default().insert((i, j));
                let e = Label([li.0[0] - lj.0[0], (li.0[1] + lj.0[1]) % 2, 0]);
                exact.entry(e).or_default().insert((i, j));
            }
        }
        ensure(approximate == exact, || format!("{t:?}: approximate and exact block diagonals differ"))?;
        ensure(approximate.len() == d.labels_checked, || format!("{t:?}: {} labels vs {}", approximate.len(), d.labels_checked))?;
        labels += approximate.len();
    }
    Ok(format!("{labels} labels over both transversals, all equal"))
}

// ---- experiments through the runner ----------------------------------------

fn config(experiment: Experiment, group: TiledGroup, preset: &str, radii: &[usize]) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(experiment);
    cfg.seed = 7;
    cfg.group = Some(GroupSpec::of(&group));
    cfg.window.radii = radii.to_vec();
    cfg.operator = Some(OperatorSpec { preset: Some(preset.into()), ..OperatorSpec::default() });
    cfg
}

fn execute(cfg: &ExperimentConfig) -> Result<Report, String> {
    let out = run(cfg).map_err(|e| e.to_string())?;
    match out.failure {
        None => Ok(out.report),
        Some(e) => Err(format!("{} failed: {e}", cfg.experiment.name())),
    }
}

fn f(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or(f64::NAN)
}

/// Profile rows of one window as label → d.
fn profile(report: &Report, g: &TiledGroup, radius: usize) -> BTreeMap<Label, f64> {
    report
        .profile
        .iter()
        .filter(|r| r.window == radius)
        .map(|r| (g.parse_label(&r.label).unwrap(), r.d))
        .collect()
}

fn verdict(report: &Report) -> (String, Vec<f64>) {
    let v = report.find("verdict").next().expect("verdict record");
    let inc = v["increments"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    (v["verdict"].as_str().unwrap().to_string(), inc)
}

// ---- 5 --------------------------------------------------------------------

fn geometric() -> Check {
    let z = TiledGroup::lattice(1).unwrap();
    let report = execute(&config(Experiment::Invert, z, "geometric", &[16, 32, 64]))?;
    let p = profile(&report, &z, 64);
    ensure(p.len() > 64, || format!("only {} diagonals in the profile", p.len()))?;
    let mut dev = 0.0f64;
    for (l, d) in &p {
        let k = l.0[0];
        let want = if k >= 0 { 0.5f64.powi(k as i32) } else { 0.0 };
        dev = dev.max((d - want).abs());
    }
    ensure(dev <= 1e-10, || format!("d(k) deviates from 0.5^k by {dev:e}"))?;
    let last = report.find("window").last().unwrap();
    let agg = f(last, "aggregate");
    let (_, inc) = verdict(&report);
    let fin = *inc.last().unwrap();
    ensure(fin <= 1e-6, || format!("final increment {fin:e}"))?;
    ensure((agg - 2.0).abs() <= 1e-6, || format!("aggregate {agg}"))?;
    Ok(format!("max |d(k) − 0.5^k| {dev:e}; aggregate {agg}; final increment {fin:e}"))
}

// ---- 6 --------------------------------------------------------------------

/// Fourier coefficients of `1/(1 − 0.3P(θ))`, `P(θ) = 1 + e^{iθ} + e^{2iθ} − e^{3iθ}`.
fn symbol_inverse(n: usize) -> Vec<C64> {
    let mut buf: Vec<C64> = (0..n)
        .map(|j| {
            let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64);
            let p = C64::new(1.0, 0.0) + w + w * w - w * w * w;
            (C64::new(1.0, 0.0) - p * 0.3).inv()
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.iter().map(|c| c / n as f64).collect()
}

fn rudin_shapiro() -> Check {
    let z = TiledGroup::lattice(1).unwrap();
    let radii = [64, 128, 256];
    let report = execute(&config(Experiment::Invert, z, "rudin-shapiro", &radii))?;
    let n = 1 << 14;
    let b = symbol_inverse(n);
    let coeff = |k: i64| b[k.rem_euclid(n as i64) as usize].norm();
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    for r in radii {
        for (l, d) in profile(&report, &z, r) {
            let want = coeff(l.0[0]);
            // 1e-13 absolute floor for coefficients at rounding level
            ensure((d - want).abs() <= 0.01 * want + 1e-13, || format!("radius {r} label {}: {d:e} vs {want:e}", l.0[0]))?;
            if want > 1e-10 {
                worst = worst.max((d - want).abs() / want);
            }
            compared += 1;
        }
    }
    let oracle: f64 = (0..n as i64).map(|k| coeff(if k < n as i64 / 2 { k } else { k - n as i64 })).sum();
    let agg = f(report.find("window").last().unwrap(), "aggregate");
    ensure((agg - oracle).abs() <= 0.01 * oracle, || format!("aggregate {agg} vs oracle {oracle}"))?;
    let (v, inc) = verdict(&report);
    ensure(v == "stable", || format!("verdict {v}"))?;
    Ok(format!(
        "{compared} diagonals, worst relative {worst:e}; aggregate {agg} vs oracle {oracle}; increments {inc:?}; {v}"
    ))
}

// ---- 7 --------------------------------------------------------------------

fn heisenberg() -> Check {
    let h = TiledGroup::heisenberg();
    let report = execute(&config(Experiment::Invert, h, "heisenberg", &[6, 8, 10]))?;
    let mut residual = 0.0f64;
    let mut aggs = Vec::new();
    for w in report.find("window") {
        residual = residual.max(f(w, "residual"));
        aggs.push(f(w, "aggregate"));
    }
    ensure(aggs.len() == 3, || format!("{} windows", aggs.len()))?;
    ensure(residual <= 1e-8, || format!("residual {residual:e}"))?;
    // increments recomputed from the aggregates
    let inc: Vec<f64> = aggs.windows(2).map(|w| (w[1] - w[0]).abs() / w[0]).collect();
    ensure(inc.iter().all(|&x| x <= 0.02), || format!("increments {inc:?}"))?;
    Ok(format!("aggregates {aggs:?}; increments {inc:?}; residual ≤ {residual:e}"))
}

// ---- 8 --------------------------------------------------------------------

fn spectral() -> Check {
    let z = TiledGroup::lattice(1).unwrap();
    let cases: [(&str, TiledGroup, usize); 6] = [
        ("identity", z, 32),
        ("random-walk", z, 100),
        ("random-self-adjoint", z, 100),
        ("zxs3", TiledGroup::z_x_s3(Transversal::Fixed), 16),
        ("gaussian", TiledGroup::grid(1, 4).unwrap(), 16),
        ("heisenberg", TiledGroup::heisenberg(), 6),
    ];
    let mut lines = Vec::new();
    for (preset, g, r) in cases {
        let report = execute(&config(Experiment::Spectral, g, preset, &[r]))?;
        let s = report.find("spectral").next().unwrap();
        let rho = f(s, "op_radius");
        ensure(s["self_adjoint"] == Value::Bool(true), || format!("{preset} is not self-adjoint"))?;
        let rn: Vec<f64> = report.find("radius").map(|v| f(v, "r_n")).collect();
        ensure(rn.len() == 32, || format!("{preset}: {} powers", rn.len()))?;
        ensure(rn.iter().all(|&x| rho <= x * (1.0 + 1e-12)), || format!("{preset}: op radius {rho} above some r_n"))?;
        let gaps: Vec<f64> = rn.iter().map(|x| x - rho).collect();
        let shrinking = gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12 * rho.max(1.0));
        ensure(shrinking, || format!("{preset}: gaps {gaps:?}"))?;
        let rel = if rho > 0.0 { gaps[31] / rho } else { gaps[31] };
        if g.kind() == (GroupKind::Lattice { dim: 1 }) {
            ensure(rel <= 0.10, || format!("{preset}: terminal gap {:.2}%", 100.0 * rel))?;
        }
        if preset == "random-walk" {
            let n = (2 * r + 1) as f64;
            let want = 2.0 * (std::f64::consts::PI / (n + 1.0)).cos();
            ensure((rho - want).abs() <= 1e-12, || format!("random-walk radius {rho} vs 2cos(π/(N+1)) = {want}"))?;
        }
        lines.push(format!("{preset} {:.3}%", 100.0 * rel));
    }
    Ok(format!("terminal gaps: {}", lines.join(", ")))
}

// ---- 9 --------------------------------------------------------------------

fn folner() -> Check {
    let groups = [
        TiledGroup::lattice(1).unwrap(),
        TiledGroup::lattice(2).unwrap(),
        TiledGroup::z_x_s3(Transversal::Fixed),
        TiledGroup::heisenberg(),
    ];
    let mut lines = Vec::new();
    for g in groups {
        let k = unit_ball(&g);
        let ku: BTreeSet<Elem> =
            k.iter().flat_map(|&h| g.tile_points().into_iter().map(move |u| g.mul(g.rep(h), u))).collect();
        for eps in [0.2, 0.1] {
            let fs = folner_set(&g, &k, eps, 400).map_err(|e| e.to_string())?;
            let ue: HashSet<Elem> = fs
                .labels()
                .into_iter()
                .flat_map(|h| g.tile_points().into_iter().map(move |u| g.mul(g.rep(h), u)))
                .collect();
            let tested: BTreeSet<Elem> = fs.certificate.entries.iter().map(|c| c.x).collect();
            ensure(tested == ku, || format!("{}: certificate does not cover K·U", name(&g)))?;
            for c in &fs.certificate.entries {
                // |xUE Δ UE| = 2|xUE \ UE|
                let out = ue.iter().filter(|&&a| !ue.contains(&g.mul(c.x, a))).count() as u64;
                let sd = 2 * out;
                let n = ue.len() as u64;
                ensure((c.sym_diff_atoms, c.ue_atoms) == (sd, n), || {
                    format!("{}: certificate ({}, {}) vs recount ({sd}, {n})", name(&g), c.sym_diff_atoms, c.ue_atoms)
                })?;
                ensure(sd as f64 <= 2.0 * eps * n as f64, || format!("{}: ε {eps} fails at {:?}", name(&g), c.x))?;
            }
            lines.push(format!("{} ε={eps} {:?}", name(&g), fs.shape()));
        }
    }
    Ok(lines.join("; "))
}

// ---- 10 -------------------------------------------------------------------

fn module_inequalities() -> Check {
    let mut violations = 0usize;
    for q in [2usize, 4, 8] {
        let mut rng = rng(0x1000 + q as u64);
        for _ in 0..1000 {
            let (a, k) = (block(q, &mut rng), block(q, &mut rng));
            let (na, nk) = (a.norms(), k.norms());
            let ak = a.conv(&k).map_err(|e| e.to_string())?.norms();
            if ak.sup > na.sup * nk.k2inf {
                violations += 1;
            }
            if ak.k2inf > na.l2 * nk.k2inf {
                violations += 1;
            }
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok("3000 pairs, 0 violations".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("isometry", isometry, Some(120)),
        ("dense oracle", dense_oracle, Some(120)),
        ("overlap bounds", overlap, None),
        ("block/band diagonals", block_band, None),
        ("geometric inversion", geometric, None),
        ("rudin-shapiro stress case", rudin_shapiro, Some(60)),
        ("heisenberg stability", heisenberg, None),
        ("spectral radius", spectral, None),
        ("folner certificates", folner, Some(60)),
        ("module inequalities", module_inequalities, None),
    ];
    let mut failed = 0;
    for (i, (title, check, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let mut result = check();
        let took = start.elapsed();
        if let (Ok(_), Some(s)) = (&result, limit) {
            if took > Duration::from_secs(s) {
                result = Err(format!("took {took:.1?}, limit {s} s"));
            }
        }
        match result {
            Ok(detail) => println!("PASS {:>2} {title}: {detail} [{took:.1?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {title}: {why} [{took:.1?}]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
