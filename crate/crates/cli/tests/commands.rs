use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sr_cli::config::RunConfig;
use sr_cli::report::{read_rows, type_summary};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn srtool(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srtool"))
        .args(args)
        .output()
        .expect("run srtool")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn analyze_charlotte_alpha_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rows.csv");
    let o = srtool(&[
        "analyze",
        config("charlotte_quadratic.ini").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_rows(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        // f' = y2
        let fp = r.point[3].abs();
        let (a1, a2) = (fp.min(1.0), fp.max(1.0));
        assert!((r.alpha[0] - a1 / (1.0 + fp)).abs() <= 1e-12, "{:?}", r);
        assert!((r.alpha[1] - a2 / (1.0 + fp)).abs() <= 1e-12, "{:?}", r);
        assert!(r.contact);
    }
    assert!(rows.iter().any(|r| r.isotropy == "U(2)" && r.point[3] == 1.0));
    let text = stdout(&o);
    assert!(text.contains("step: 2"));
    assert!(text.contains("equiregularity: equiregular"));
    assert!(text.contains("alpha_1: [0.2, 0.5]"));
    // the summary is a function of the rows alone
    assert!(text.ends_with(&type_summary(&rows)));
}

#[test]
fn analyze_heisenberg_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.csv");
    let o = srtool(&[
        "analyze",
        config("heisenberg.ini").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = read_rows(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 18);
    assert!(rows
        .iter()
        .all(|r| r.contact && r.isotropy == "U(1)" && r.alpha == [1.0]));
}

#[test]
fn malformed_theta_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("heisenberg.ini")).unwrap();
    let bad = dir.path().join("bad.ini");
    fs::write(&bad, text.replace("theta = -y/2, x/2, 1", "theta = -y/2, x/2")).unwrap();
    let o = srtool(&[
        "analyze",
        bad.to_str().unwrap(),
        "--out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[structure]"), "{}", stderr(&o));
    let o = srtool(&["classify", dir.path().join("missing.ini").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn degenerate_point_exits_3_with_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = srtool(&[
        "analyze",
        config("martinet.ini").to_str().unwrap(),
        "--out",
        dir.path().join("m.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("(0.5, 0.5, 0)"), "{}", stderr(&o));
}

#[test]
fn domain_errors_are_skipped_and_counted() {
    let dir = tempfile::tempdir().unwrap();
    let text = "\
[manifold]
dim = 3
coords = x, y, z
[structure]
theta = -log(y), 0, 1
frame = 1, 0, log(y); 0, 1, 0
[sampling]
mode = grid
lower = 0, -1, 0
upper = 1, 1, 1
counts = 1, 3, 1
";
    let cfg = dir.path().join("log.ini");
    fs::write(&cfg, text).unwrap();
    let out = dir.path().join("log.csv");
    let o = srtool(&["analyze", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("skipped (outside an expression domain): 2"));
    assert!(stderr(&o).contains("skipping"));
    assert_eq!(read_rows(fs::File::open(&out).unwrap()).unwrap().len(), 1);
}

#[test]
fn classify_cases_through_the_binary() {
    let o = srtool(&["classify", config("charlotte_exp.ini").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let t = stdout(&o);
    assert!(t.contains("case: GPRIME_EQUALS_G"));
    assert!(t.contains("admits a structure of Cartan groupoid"));
    let t = stdout(&srtool(&["classify", config("charlotte_linear.ini").to_str().unwrap()]));
    assert!(t.contains("case: TRANSITIVE"));
    let t = stdout(&srtool(&[
        "classify",
        config("charlotte_crossing.ini").to_str().unwrap(),
    ]));
    assert!(t.contains("case: UNDETERMINED, failed: single-stratum(α)"));
    let t = stdout(&srtool(&["classify", config("double_exp.ini").to_str().unwrap()]));
    assert!(t.contains("case: DISCRETE_ISOTROPY"));
    assert!(t.contains("gprime_equals_g: false (witnesses"));
    let o = srtool(&["classify", config("heisenberg.ini").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("analysis only"));
}

#[test]
fn flag_command() {
    let o = srtool(&["flag", config("martinet.ini").to_str().unwrap(), "--max-step", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let t = stdout(&o);
    assert!(t.contains("(2,2,3): 1 sample"));
    assert!(t.contains("(2,3): 2 samples"));
    assert!(t.contains("NOT equiregular (witnesses #1 (0.5, 0.5, 0))"));
    // two levels are not enough at z = 0
    let t = stdout(&srtool(&[
        "flag",
        config("martinet.ini").to_str().unwrap(),
        "--max-step",
        "2",
    ]));
    assert!(t.contains("step: undetermined"));
    assert_eq!(
        srtool(&["flag", config("martinet.ini").to_str().unwrap(), "--max-step", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn normal_form_command() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("cj");
    let o = srtool(&[
        "normal-form",
        config("charlotte_j.csv").to_str().unwrap(),
        "--out-prefix",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("m0=0 pairs=[(0.5, 1), (1, 1)]"));
    let jt = sr_cli::parse_matrix(&fs::read_to_string(dir.path().join("cj_Jtilde.csv")).unwrap()).unwrap();
    let o_m = sr_cli::parse_matrix(&fs::read_to_string(dir.path().join("cj_O.csv")).unwrap()).unwrap();
    let j = sr_cli::parse_matrix(&fs::read_to_string(config("charlotte_j.csv")).unwrap()).unwrap();
    assert!((o_m.transpose() * jt * o_m - j).amax() <= 1e-12);

    let sym = dir.path().join("sym.csv");
    fs::write(&sym, "0,1\n1,0\n").unwrap();
    let o = srtool(&[
        "normal-form",
        sym.to_str().unwrap(),
        "--out-prefix",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("matrix is not skew-symmetric"));
    let rect = dir.path().join("rect.csv");
    fs::write(&rect, "0,1,2\n-1,0,3\n").unwrap();
    let o = srtool(&[
        "normal-form",
        rect.to_str().unwrap(),
        "--out-prefix",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn csv_reread_is_idempotent() {
    let cfg = RunConfig::load(&config("charlotte_exp.ini")).unwrap();
    let a = sr_cli::analyze(&cfg, sr_core::batch::Execution::default()).unwrap();
    let mut buf = Vec::new();
    sr_cli::report::write_rows(&mut buf, 5, 2, &a.rows).unwrap();
    let back = read_rows(buf.as_slice()).unwrap();
    assert_eq!(back, a.rows);
    assert_eq!(type_summary(&back), type_summary(&a.rows));
    let mut again = Vec::new();
    sr_cli::report::write_rows(&mut again, 5, 2, &back).unwrap();
    assert_eq!(again, buf);
}

#[test]
fn sequential_flag_gives_same_output() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let cfg = config("double_exp.ini");
    let cfg = cfg.to_str().unwrap();
    let oa = srtool(&["analyze", cfg, "--out", a.to_str().unwrap()]);
    let ob = srtool(&["--sequential", "analyze", cfg, "--out", b.to_str().unwrap()]);
    assert_eq!(oa.stdout, ob.stdout);
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
    assert_eq!(
        srtool(&["classify", cfg]).stdout,
        srtool(&["classify", cfg, "--sequential"]).stdout
    );
}
