use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hvf(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hvf"))
        .args(args)
        .current_dir(dir)
        .env("HVF_THREADS", "1")
        .output()
        .unwrap()
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = hvf(args, dir);
    assert!(
        out.status.success(),
        "hvf {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn regions(path: &Path) -> Vec<String> {
    let mut r: Vec<String> = fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_string())
        .collect();
    r.sort();
    r.dedup();
    r
}

/// A 4 x 4 grid of squares in the plane z = 0, two triangles each.
fn flat_obj(path: &Path) {
    let mut s = String::new();
    for j in 0..5 {
        for i in 0..5 {
            s += &format!("v {i} {j} 0\n");
        }
    }
    for j in 0..4 {
        for i in 0..4 {
            let a = j * 5 + i + 1;
            s += &format!("f {a} {} {}\nf {} {} {}\n", a + 1, a + 6, a, a + 6, a + 5);
        }
    }
    fs::write(path, s).unwrap();
}

#[test]
fn crater_regions_follow_contouring() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ok(&["mkcrater", "--h", "0.2", "-o", "c.obj"], d);
    assert!(out.starts_with("faces="));
    assert_eq!(regions(&d.join("c.labels.csv")), ["crater-lit", "crater-shadow", "ground"]);
    ok(
        &["mkcrater", "--h", "0.2", "--contour-shadow", "false", "-o", "u.obj", "--labels", "u.csv"],
        d,
    );
    assert_eq!(regions(&d.join("u.csv")), ["crater", "ground"]);
    // Infeasible parameters fail with a message.
    let bad = hvf(&["mkcrater", "--beta", "95", "-o", "x.obj"], d);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("error:"));
    // A missing required flag is a usage error.
    assert_eq!(hvf(&["mkcrater"], d).status.code(), Some(2));
}

#[test]
fn assembly_is_deterministic_and_stats_total() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["mkcrater", "--h", "0.1", "-o", "c.obj"], d);
    let args = ["assemble", "--mesh", "c.obj", "--max-depth", "4", "--min-size", "512", "--tol", "1e-2"];
    ok(&[&args[..], &["-o", "a.hvfm"]].concat(), d);
    ok(&[&args[..], &["-o", "b.hvfm"]].concat(), d);
    assert_eq!(fs::read(d.join("a.hvfm")).unwrap(), fs::read(d.join("b.hvfm")).unwrap());

    ok(&["stats", "--F", "a.hvfm", "-o", "s.csv"], d);
    let text = fs::read_to_string(d.join("s.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("depth,row0,rows,col0,cols,tag,bytes,q"));
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let total = rows.last().unwrap();
    assert_eq!(total[0], "total");
    let leaf_bytes: u64 = rows[..rows.len() - 1].iter().map(|r| r[6].parse::<u64>().unwrap()).sum();
    let total_bytes: u64 = total[6].parse().unwrap();
    assert!(total_bytes >= leaf_bytes && (total_bytes - leaf_bytes) % 64 == 0);
    // The full matrix container has more bytes of payload.
    let full = ok(&["assemble", "--mesh", "c.obj", "--full", "-o", "f.hvfc"], d);
    let full_bytes: u64 = full
        .split_whitespace()
        .find_map(|w| w.strip_prefix("bytes="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(total_bytes <= full_bytes + full_bytes / 20);
}

#[test]
fn flat_plane_matrix_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    flat_obj(&d.join("p.obj"));
    let out = ok(&["assemble", "--mesh", "p.obj", "--full", "-o", "p.hvfc"], d);
    assert!(out.contains("N=32 nnz=0 "), "{out}");
    let out = ok(&["equilibrium", "--mesh", "p.obj", "--F", "p.hvfc", "--e0", "90", "-o", "eq.csv"], d);
    assert!(out.contains("N=32"));
    let text = fs::read_to_string(d.join("eq.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("face,Q_direct,Q_refl,Q_IR,Q_abs,T"));
    assert_eq!(text.lines().count(), 33);
}

#[test]
fn mismatched_inputs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    flat_obj(&d.join("p.obj"));
    ok(&["mkcrater", "--h", "0.3", "-o", "c.obj"], d);
    ok(&["assemble", "--mesh", "c.obj", "--full", "-o", "c.hvfc"], d);
    let out = hvf(&["equilibrium", "--mesh", "p.obj", "--F", "c.hvfc", "-o", "eq.csv"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("faces"));
    fs::write(d.join("junk.bin"), b"not a matrix").unwrap();
    assert!(!hvf(&["equilibrium", "--mesh", "p.obj", "--F", "junk.bin", "-o", "eq.csv"], d).status.success());

    ok(&["assemble", "--mesh", "p.obj", "--full", "-o", "p.hvfc"], d);
    fs::write(d.join("empty.csv"), "t,dx,dy,dz,r_au\n").unwrap();
    let out = hvf(&["simulate", "--mesh", "p.obj", "--F", "p.hvfc", "--traj", "empty.csv", "-o", "run"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
}

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["mkcrater", "--h", "0.25", "-o", "c.obj"], d);
    ok(&["assemble", "--mesh", "c.obj", "--max-depth", "3", "--min-size", "256", "-o", "c.hvfm"], d);
    ok(&["mktraj", "--steps", "8", "--period", "86400", "-o", "t.csv"], d);
    let out = ok(
        &[
            "simulate", "--mesh", "c.obj", "--F", "c.hvfm", "--traj", "t.csv", "--M", "12", "--depth", "0.3",
            "--cycles", "2", "--snapshot-every", "5", "-o", "run",
        ],
        d,
    );
    assert!(out.contains("steps=15 cycles=2"), "{out}");
    let mut files: Vec<String> = fs::read_dir(d.join("run"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(
        files,
        ["final.csv", "snapshot_000000.csv", "snapshot_000005.csv", "snapshot_000010.csv", "snapshot_000015.csv", "summary.csv"]
    );
    let summary = fs::read_to_string(d.join("run/summary.csv")).unwrap();
    assert_eq!(summary.lines().next(), Some("face,T_max,T_mean"));
    for line in summary.lines().skip(1) {
        let v: Vec<f64> = line.split(',').skip(1).map(|x| x.parse().unwrap()).collect();
        assert!(v[0] >= v[1] && v[1] > 0.0);
    }
}

#[test]
fn validate_cap_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ok(
        &["validate-cap", "--hs", "0.2,0.1", "--tols", "1e-1,1e-2", "--max-depth", "3", "--min-size", "256", "-o", "v"],
        d,
    );
    assert_eq!(out.lines().count(), 2);
    let errors = fs::read_to_string(d.join("v/errors.csv")).unwrap();
    let mut lines = errors.lines();
    assert_eq!(lines.next(), Some("N,eps,l1,l2,linf,bytes,t_assemble_s,t_matvec_s"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 6);
    let eps: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(eps, ["full", "1e-1", "1e-2", "full", "1e-1", "1e-2"]);
    for r in &rows {
        let l2: f64 = r[3].parse().unwrap();
        assert!(l2 > 0.0 && l2 < 0.05, "{r:?}");
    }
    assert_eq!(
        fs::read_to_string(d.join("v/sizes.csv")).unwrap().lines().next(),
        Some("N,eps,bytes")
    );
    assert_eq!(
        fs::read_to_string(d.join("v/timings.csv")).unwrap().lines().next(),
        Some("N,eps,t_assemble_s,t_matvec_s")
    );
}
