//! Acceptance suite on the spherical-cap crater problem. Prints one
//! PASS/FAIL line per criterion and exits nonzero if any fails.

mod common;

use std::time::Instant;

use hvf::hmatrix::{compress, compress_from_csr, load, save, CompressParams};
use hvf::mesh::{CraterMesh, Region};
use hvf::spatial::DEFAULT_MIN_LEAF;
use hvf::thermal::{
    analytic_cap_field, direct_flux, equilibrium, simulate, Albedo, EquilibriumReport, InitialTemperature, LayerGrid,
    PhysParams, SimConfig, SunSample, SunTrajectory,
};
use hvf::{viewfactor, Bvh, CompressedViewFactor, LinearOperator, SparseCsr, SpatialTree, TreeKind};

/// Edge lengths of the dyadic refinement sequence.
const REFINE: [f64; 4] = [0.171, 0.0855, 0.04275, 0.021375];
/// Edge lengths giving roughly 2.5k, 5k, 10k and 20k faces.
const SCALE: [f64; 4] = [0.06046, 0.04275, 0.03023, 0.021375];

fn params() -> PhysParams {
    PhysParams {
        albedo: Albedo::Uniform(0.3),
        emissivity: 0.99,
        solar_constant: 1000.0,
        ..Default::default()
    }
}

fn max_depth(n: usize) -> usize {
    ((n as f64 / 16.0).log(4.0).ceil() as usize + 1).clamp(3, 8)
}

fn compress_params(n: usize, tol: f64) -> CompressParams {
    CompressParams {
        tol,
        max_depth: max_depth(n),
        ..Default::default()
    }
}

fn time_matvec(f: &impl LinearOperator) -> f64 {
    let x: Vec<f64> = (0..f.ncols()).map(|i| 1.0 + (i % 7) as f64).collect();
    let mut y = vec![0.0; f.nrows()];
    let start = Instant::now();
    let mut reps = 0u32;
    while reps < 3 || start.elapsed().as_secs_f64() < 0.2 {
        f.apply_into(&x, &mut y);
        reps += 1;
    }
    start.elapsed().as_secs_f64() / reps as f64
}

/// Absolute max error (K) and relative l2 error over the shadowed faces.
#[derive(Clone, Copy, Debug)]
struct Errors {
    linf: f64,
    l2: f64,
}

struct Problem {
    crater: CraterMesh,
    bvh: Bvh,
    q_direct: Vec<f64>,
    exact: Vec<f64>,
    shadow: Vec<usize>,
}

impl Problem {
    fn new(h: f64) -> Self {
        let crater = common::crater(h);
        let bvh = Bvh::build(&crater.mesh);
        let q_direct = direct_flux(&crater.mesh, &bvh, &params(), &crater.spec.sun_dir(), 1.0);
        let exact = analytic_cap_field(&crater, &params()).expect("uniform albedo");
        let shadow = crater.faces_in(Region::CraterShadow);
        Self {
            crater,
            bvh,
            q_direct,
            exact,
            shadow,
        }
    }

    fn n(&self) -> usize {
        self.crater.mesh.num_faces()
    }

    fn solve(&self, f: &impl LinearOperator, log: &mut Vec<(usize, EquilibriumReport)>) -> (Vec<f64>, Errors) {
        let (state, report) = equilibrium(f, &params(), &self.q_direct).expect("equilibrium");
        log.push((self.n(), report));
        let (mut linf, mut e2, mut r2) = (0.0f64, 0.0, 0.0);
        for &i in &self.shadow {
            let d = state.t[i] - self.exact[i];
            linf = linf.max(d.abs());
            e2 += d * d;
            r2 += self.exact[i] * self.exact[i];
        }
        let errors = Errors {
            linf,
            l2: (e2 / r2).sqrt(),
        };
        (state.t, errors)
    }
}

#[derive(Default)]
struct Run {
    h: f64,
    n: usize,
    full_bytes: u64,
    full: Option<Errors>,
    c2: Option<Errors>,
    c1: Option<Errors>,
    c2_bytes: u64,
    c2_time: f64,
    c2_matvec: f64,
    full_time: f64,
    /// Wall time of mesh generation, full assembly and equilibrium.
    pipeline: f64,
}

struct Verdicts {
    lines: Vec<String>,
    failed: usize,
}

impl Verdicts {
    fn record(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        let line = format!("{} {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push(line);
        self.failed += !pass as usize;
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    common::rel_diff(a, b)
}

fn tree(p: &Problem) -> SpatialTree {
    SpatialTree::build(&p.crater.mesh, TreeKind::Quad, max_depth(p.n()), DEFAULT_MIN_LEAF)
}

fn main() {
    let mut v = Verdicts {
        lines: Vec::new(),
        failed: 0,
    };
    let mut solves: Vec<(usize, EquilibriumReport)> = Vec::new();
    let mut sizes: Vec<(usize, &'static str, u64, u64)> = Vec::new();
    let mut hs: Vec<f64> = REFINE.iter().chain(&SCALE).copied().collect();
    hs.sort_by(|a, b| b.total_cmp(a));
    hs.dedup();

    let mut runs = Vec::new();
    let mut mvp_checks: Vec<(f64, f64)> = Vec::new();
    let mut roundtrip = None;
    let mut reciprocity: Vec<(usize, f64)> = Vec::new();
    for &h in &hs {
        let start = Instant::now();
        let p = Problem::new(h);
        let n = p.n();
        let t0 = Instant::now();
        let full = viewfactor::assemble_full(&p.crater.mesh, &p.bvh);
        let full_time = t0.elapsed().as_secs_f64();
        let (_, full_err) = p.solve(&full, &mut solves);
        let pipeline = start.elapsed().as_secs_f64();
        let refine = REFINE.contains(&h);
        let mut run = Run {
            h,
            n,
            full_bytes: full.nbytes(),
            full: Some(full_err),
            full_time,
            pipeline,
            ..Default::default()
        };
        let tree = tree(&p);

        if n <= 2000 {
            reciprocity.push((n, reciprocity_defect(&p, &full)));
        }
        // Sweeps over tolerances reuse the assembled matrix.
        let sweep = (4000..=6000).contains(&n);
        let mut extra = Vec::new();
        if refine || sweep {
            let c1 = compress_from_csr(&full, &tree, &compress_params(n, 1e-1));
            sizes.push((n, "1e-1", c1.nbytes(), run.full_bytes));
            if refine {
                run.c1 = Some(p.solve(&c1, &mut solves).1);
            }
            extra.push((1e-1, c1));
        }
        if sweep {
            let c3 = compress_from_csr(&full, &tree, &compress_params(n, 1e-3));
            sizes.push((n, "1e-3", c3.nbytes(), run.full_bytes));
            extra.push((1e-3, c3));
        } else {
            extra.clear();
        }
        let full_for_mvp = if sweep { Some(full) } else { None };

        let t0 = Instant::now();
        let c2 = compress(&p.crater.mesh, &p.bvh, &tree, &compress_params(n, 1e-2));
        run.c2_time = t0.elapsed().as_secs_f64();
        run.c2_bytes = c2.nbytes();
        run.c2_matvec = time_matvec(&c2);
        sizes.push((n, "1e-2", c2.nbytes(), run.full_bytes));
        run.c2 = Some(p.solve(&c2, &mut solves).1);

        if let Some(full) = full_for_mvp {
            extra.push((1e-2, c2.clone()));
            for (tol, f) in &extra {
                mvp_checks.push((*tol, mvp_error(&full, f)));
            }
            roundtrip = Some(round_trip(&c2));
        }
        println!(
            "  N={n:>6} h={h:.5} full={:.1}MB ({:.1}s) eps=1e-2 {:.2}MB ({:.1}s, matvec {:.2e}s) shadow linf/l2 full {:.3}/{:.2e} compressed {:.3}/{:.2e}",
            run.full_bytes as f64 / 1e6,
            run.full_time,
            run.c2_bytes as f64 / 1e6,
            run.c2_time,
            run.c2_matvec,
            full_err.linf,
            full_err.l2,
            run.c2.unwrap().linf,
            run.c2.unwrap().l2
        );
        runs.push(run);
    }

    // 1. Analytic temperature.
    let refine: Vec<&Run> = REFINE.iter().map(|h| runs.iter().find(|r| r.h == *h).unwrap()).collect();
    let finest = refine[3];
    let full_curve: Vec<f64> = refine.iter().map(|r| r.full.unwrap().l2).collect();
    let monotone = full_curve.windows(2).all(|w| w[1] < w[0]);
    let linf = finest.full.unwrap().linf;
    v.record(
        1,
        "analytic shadow temperature",
        linf <= 5.0 && monotone && finest.pipeline <= 900.0 && (15_000..=25_000).contains(&finest.n),
        format!(
            "N={} linf={linf:.3} K (<= 5), rel l2 {} (decreasing: {monotone}), run {:.0} s (<= 900)",
            finest.n,
            fmt_curve(&full_curve),
            finest.pipeline
        ),
    );

    // 2. Compression consistency.
    let ratios: Vec<f64> = refine
        .iter()
        .map(|r| (r.c2.unwrap().l2 / r.full.unwrap().l2).max(r.c2.unwrap().linf / r.full.unwrap().linf))
        .collect();
    let coarse_curve: Vec<f64> = refine.iter().map(|r| r.c1.unwrap().l2).collect();
    v.record(
        2,
        "compressed error tracks full error",
        ratios.iter().all(|&q| q <= 2.0),
        format!(
            "eps=1e-2 error ratio to full {} (<= 2); eps=1e-1 rel l2 {}",
            fmt_curve(&ratios),
            fmt_curve(&coarse_curve)
        ),
    );

    // 3. Products against the full matrix.
    let ok3 = mvp_checks.len() == 3 && mvp_checks.iter().all(|(tol, e)| *e <= 10.0 * tol);
    v.record(
        3,
        "matvec agrees with full matrix",
        ok3,
        mvp_checks
            .iter()
            .map(|(t, e)| format!("eps={t:e}: max rel err {e:.2e} (<= {:.0e})", 10.0 * t))
            .collect::<Vec<_>>()
            .join(", "),
    );

    // 4. Scaling.
    let scale: Vec<&Run> = SCALE.iter().map(|h| runs.iter().find(|r| r.h == *h).unwrap()).collect();
    let ns: Vec<f64> = scale.iter().map(|r| r.n as f64).collect();
    let s_bytes = slope(&ns, &scale.iter().map(|r| r.c2_bytes as f64).collect::<Vec<_>>());
    let s_mvp = slope(&ns, &scale.iter().map(|r| r.c2_matvec).collect::<Vec<_>>());
    let s_full = slope(&ns, &scale.iter().map(|r| r.full_bytes as f64).collect::<Vec<_>>());
    let s_time = slope(&ns, &scale.iter().map(|r| r.c2_time).collect::<Vec<_>>());
    v.record(
        4,
        "size and time scaling",
        s_bytes < 1.5 && s_mvp < 1.5 && (1.8..=2.2).contains(&s_full) && s_time <= 2.2,
        format!(
            "N {:?}: slopes compressed bytes {s_bytes:.2} (< 1.5), matvec {s_mvp:.2} (< 1.5), full bytes {s_full:.2} (~2), assembly {s_time:.2} (<= 2.2)",
            scale.iter().map(|r| r.n).collect::<Vec<_>>()
        ),
    );

    // 5. Storage never exceeds sparse storage.
    let worst5 = sizes
        .iter()
        .map(|&(_, _, c, f)| c as f64 / f as f64)
        .fold(0.0, f64::max);
    v.record(
        5,
        "compressed size within sparse size",
        worst5 <= 1.05,
        format!("max compressed/full bytes {worst5:.4} over {} matrices (<= 1.05)", sizes.len()),
    );

    // 6. Reciprocity.
    let worst6 = reciprocity.iter().map(|r| r.1).fold(0.0, f64::max);
    v.record(
        6,
        "reciprocity",
        !reciprocity.is_empty() && worst6 <= 1e-6,
        format!(
            "max relative defect {worst6:.2e} on N {:?} (<= 1e-6)",
            reciprocity.iter().map(|r| r.0).collect::<Vec<_>>()
        ),
    );

    // 8 runs equilibrium solves too; count them under 7.
    let sim = steady_state(&mut solves);

    // 7. Fixed-point convergence.
    let max_it = solves
        .iter()
        .map(|(_, r)| r.visible.iterations.max(r.infrared.iterations))
        .max()
        .unwrap();
    let max_res = solves
        .iter()
        .map(|(_, r)| r.residual_visible.max(r.residual_infrared))
        .fold(0.0, f64::max);
    v.record(
        7,
        "fixed-point convergence",
        max_it <= 50 && max_res < 1e-6,
        format!("{} solves: max iterations {max_it} (<= 50), max residual {max_res:.2e} (< 1e-6)", solves.len()),
    );

    let (n8, d_full, d_comp, d_pair) = sim;
    v.record(
        8,
        "constant sun reaches equilibrium",
        d_full < 1.0 && d_comp < 1.0 && d_pair < 1.0,
        format!(
            "N={n8}: max |T_sim - T_eq| full {d_full:.3} K, eps=1e-2 {d_comp:.3} K, full vs eps=1e-2 runs {d_pair:.3} K (< 1)"
        ),
    );

    let (rt_ok, rt_detail) = roundtrip.unwrap_or((false, "no mesh in the 4k-6k range".into()));
    v.record(9, "serialization round trip", rt_ok, rt_detail);

    let (ok10, detail10) = small_instance();
    v.record(10, "small-instance brute force", ok10, detail10);

    println!(
        "acceptance: {} passed, {} failed",
        v.lines.len() - v.failed,
        v.failed
    );
    if v.failed > 0 {
        std::process::exit(1);
    }
}

fn fmt_curve(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn reciprocity_defect(p: &Problem, full: &SparseCsr) -> f64 {
    let a = p.crater.mesh.areas();
    let t = full.transpose();
    let mut worst: f64 = 0.0;
    for i in 0..full.nrows() {
        let (cols, vals) = full.row(i);
        for (&j, &f) in cols.iter().zip(vals) {
            let j = j as usize;
            let (x, y) = (a[i] * f as f64, a[j] * t.get(i, j) as f64);
            worst = worst.max((x - y).abs() / x.max(y));
        }
    }
    worst
}

/// Largest relative error of the compressed product over 20 random
/// nonnegative vectors.
fn mvp_error(full: &SparseCsr, f: &CompressedViewFactor) -> f64 {
    let mut rng = common::rng(20);
    (0..20)
        .map(|_| {
            let x = common::random_vec(&mut rng, full.ncols());
            relative_error(&f.hmatvec(&x).unwrap(), &full.matvec(&x).unwrap())
        })
        .fold(0.0, f64::max)
}

fn round_trip(f: &CompressedViewFactor) -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.hvfm");
    save(f, &path).unwrap();
    let g = load(&path).unwrap();
    let mut rng = common::rng(9);
    let mut identical = true;
    for _ in 0..5 {
        let x = common::random_vec(&mut rng, f.n());
        let (a, b) = (f.hmatvec(&x).unwrap(), g.hmatvec(&x).unwrap());
        identical &= a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits());
    }
    let size = std::fs::metadata(&path).unwrap().len();
    (
        identical,
        format!("N={} file {size} bytes; hmatvec bitwise identical on 5 vectors: {identical}", f.n()),
    )
}

/// Constant sun until the subsurface stops changing, with the full and the
/// compressed matrix. Returns N and the max deviations in K.
fn steady_state(solves: &mut Vec<(usize, EquilibriumReport)>) -> (usize, f64, f64, f64) {
    let p = Problem::new(REFINE[1]);
    let n = p.n();
    let mesh = &p.crater.mesh;
    let full = viewfactor::assemble_full(mesh, &p.bvh);
    let c2 = compress(mesh, &p.bvh, &tree(&p), &compress_params(n, 1e-2));
    let sun = p.crater.spec.sun_dir();
    let samples = (0..100)
        .map(|k| SunSample {
            t: k as f64 * 3600.0,
            dir: sun,
            r_au: 1.0,
        })
        .collect();
    let traj = SunTrajectory::new(samples).unwrap();
    let config = SimConfig {
        grid: LayerGrid::geometric(20, 0.05, 1.2).unwrap(),
        cycles: 100,
        initial: InitialTemperature::Uniform(110.0),
        stop_threshold: Some(1e-3),
    };
    let pars = params();
    let run = |f: &dyn LinearOperator, solves: &mut Vec<(usize, EquilibriumReport)>| {
        let (eq, _) = p.solve(&f, solves);
        let report = simulate(&f, mesh, &p.bvh, &pars, &traj, &config, |_| {}).unwrap();
        assert!(report.converged, "simulation did not settle");
        let dev = report
            .state
            .flux
            .t
            .iter()
            .zip(&eq)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        (report.state.flux.t, dev)
    };
    let (t_full, d_full) = run(&full, solves);
    let (t_comp, d_comp) = run(&c2, solves);
    let d_pair = t_full.iter().zip(&t_comp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    (n, d_full, d_comp, d_pair)
}

/// Densified compressed matrices and visibility against brute force on the
/// coarsest mesh.
fn small_instance() -> (bool, String) {
    let p = Problem::new(REFINE[0]);
    let mesh = &p.crater.mesh;
    let n = p.n();
    let oracle = common::brute_view_factors(mesh);
    let full = viewfactor::assemble_full(mesh, &p.bvh);
    let mut mismatches = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i != j && (full.get(i, j) > 0.0) != common::brute_visible(mesh, i, j) {
                mismatches += 1;
            }
        }
    }
    let norm_f = oracle.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tree = SpatialTree::build(mesh, TreeKind::Quad, 4, DEFAULT_MIN_LEAF);
    let mut ok = n <= 500 && mismatches == 0;
    let mut parts = vec![format!("N={n}, visibility mismatches {mismatches}/{}", n * (n - 1))];
    for tol in [1e-1, 1e-2, 1e-3] {
        let cp = CompressParams {
            tol,
            max_depth: 4,
            min_size: 256,
            ..Default::default()
        };
        let f = compress(mesh, &p.bvh, &tree, &cp);
        let d = f.to_dense();
        let diff = (0..n * n)
            .map(|k| (d.values()[k] as f64 - oracle[k]).powi(2))
            .sum::<f64>()
            .sqrt();
        let rel = diff / norm_f;
        let kinds: std::collections::BTreeSet<&str> = hvf::hmatrix::block_stats(&f).iter().map(|r| r.tag).collect();
        ok &= rel <= 10.0 * tol;
        parts.push(format!("eps={tol:e}: rel Frobenius {rel:.2e} (<= {:.0e}) blocks {kinds:?}", 10.0 * tol));
    }
    (ok, parts.join("; "))
}
