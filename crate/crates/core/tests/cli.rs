use std::path::Path;

use cayley_realize::cli::{run, Artifact};
use cayley_realize::Tolerances;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["cayley-realize"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, kind: &str, extra: &[&str]) -> std::path::PathBuf {
    let path = dir.join(format!("{kind}.json"));
    let mut args = vec!["generate", "--kind", kind, "--output", s(&path)];
    args.extend_from_slice(extra);
    let o = cli(&args);
    assert_eq!(o.code, 0, "{}", o.stderr);
    path
}

#[test]
fn eval_prints_one_matrix_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let p = generate(dir.path(), "pencil_nonhomogeneous", &["--d", "2", "--n", "2"]);
    let points = dir.path().join("points.json");
    std::fs::write(&points, "[[1, [0.5, 2]], [[2, -1], 0.25]]").unwrap();
    let o = cli(&["eval", "--input", s(&p), "--points", s(&points)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let lines: Vec<_> = o.stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    let m: Vec<Vec<[f64; 2]>> = serde_json::from_str(lines[0]).unwrap();
    assert_eq!((m.len(), m[0].len()), (2, 2));

    let o = cli(&["eval", "--input", s(&p), "--point", "[1, 1]"]);
    assert_eq!(o.code, 0);
    assert_eq!(o.stdout.lines().count(), 1);
}

#[test]
fn eval_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = generate(dir.path(), "pencil_homogeneous", &["--d", "2"]);
    // A homogeneous pencil vanishes identically at the origin.
    let o = cli(&["eval", "--input", s(&p), "--point", "[0, 0]"]);
    assert_eq!(o.code, 2, "{}", o.stderr);
    assert!(o.stderr.contains("singular"));

    let o = cli(&["eval", "--input", s(&p), "--point", "[1]"]);
    assert_eq!(o.code, 1);
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        "{\"format_version\": \"1.0\", \"kind\": \"pencil\", \"payload\": {}}",
    )
    .unwrap();
    assert_eq!(cli(&["eval", "--input", s(&bad), "--point", "[1]"]).code, 1);
    assert_eq!(
        cli(&["eval", "--input", s(&dir.path().join("missing.json")), "--point", "[1]"]).code,
        1
    );
    assert_eq!(cli(&["frobnicate"]).code, 1);
}

#[test]
fn eval_on_tuple() {
    let dir = tempfile::tempdir().unwrap();
    let p = generate(
        dir.path(),
        "pencil_nonhomogeneous",
        &["--d", "2", "--n", "1", "--m", "2"],
    );
    let t = dir.path().join("tuple.json");
    let tuple = "{\"format_version\": \"1.0\", \"kind\": \"tuple\", \"payload\": {\"d\": 2, \"size\": 2, \"commutation_tol\": 1e-12, \
        \"matrices\": [[[[1, 0], [0, 0]], [[0, 0], [2, 0]]], [[[3, 0], [0, 0]], [[0, 0], [0.5, 1]]]]}}";
    std::fs::write(&t, tuple).unwrap();
    let o = cli(&["eval", "--input", s(&p), "--points", s(&t), "--tuple"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let m: Vec<Vec<[f64; 2]>> = serde_json::from_str(o.stdout.trim()).unwrap();
    assert_eq!(m.len(), 2);

    // Diagonal tuples evaluate entrywise.
    let o1 = cli(&["eval", "--input", s(&p), "--point", "[1, 3]"]);
    let scalar: Vec<Vec<[f64; 2]>> = serde_json::from_str(o1.stdout.trim()).unwrap();
    assert!((scalar[0][0][0] - m[0][0][0]).abs() < 1e-9 && (scalar[0][0][1] - m[0][0][1]).abs() < 1e-9);
}

#[test]
fn synthesize_writes_artifact_and_report() {
    let tol = Tolerances::default();
    let dir = tempfile::tempdir().unwrap();
    let p = generate(
        dir.path(),
        "pencil_real",
        &["--d", "2", "--n", "2", "--m", "2", "--seed", "4"],
    );
    for (target, kind) in [
        ("decomposition", "decomposition"),
        ("gr", "gr_realization"),
        ("herglotz", "herglotz_realization"),
        ("pencil_roundtrip", "pencil"),
    ] {
        let out = dir.path().join(format!("{target}.json"));
        let o = cli(&["synthesize", "--input", s(&p), "--target", target, "--output", s(&out)]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        assert!(o.stdout.lines().all(|l| l.starts_with("PASS")));
        assert_eq!(Artifact::load(&out, &tol).unwrap().kind(), kind);
        let report = Artifact::load(&dir.path().join(format!("{target}.report.json")), &tol).unwrap();
        let Artifact::Report(r) = report else {
            panic!("expected a report")
        };
        assert!(r.passed());
    }
    let gr = dir.path().join("gr.json");
    let o = cli(&["verify", "--input", s(&gr)]);
    assert_eq!(o.code, 0, "{}", o.stdout);
    for check in ["unitarity", "agler", "hermitian", "difference", "real"] {
        assert!(o.stdout.contains(&format!("PASS {check}/")), "{check} missing");
    }
}

#[test]
fn synthesize_stage_failure_exits_3_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = generate(
        dir.path(),
        "pencil_nonhomogeneous",
        &["--d", "2", "--n", "1", "--m", "2", "--seed", "1"],
    );
    let out = dir.path().join("out.json");
    let report = dir.path().join("failure.json");
    // A nonhomogeneous pencil generally has no Hermitian completion.
    let o = cli(&[
        "synthesize",
        "--input",
        s(&p),
        "--hermitian",
        "--output",
        s(&out),
        "--report",
        s(&report),
    ]);
    assert_eq!(o.code, 3, "{}{}", o.stdout, o.stderr);
    assert!(!out.exists());
    let Artifact::Report(r) = Artifact::load(&report, &Tolerances::default()).unwrap() else {
        panic!()
    };
    let failure = r.failure.unwrap();
    assert_eq!(failure.stage, "lurking_isometry");
    assert_eq!(failure.kind, "HermitianInfeasible");
    assert_eq!(r.stages.len(), 2);
}

#[test]
fn verify_checks_and_failures() {
    let tol = Tolerances::default();
    let dir = tempfile::tempdir().unwrap();
    let p = generate(dir.path(), "pencil_homogeneous", &["--d", "3", "--n", "2", "--m", "1"]);
    let report = dir.path().join("report.json");
    let o = cli(&[
        "verify",
        "--input",
        s(&p),
        "--checks",
        "cayley_inner,homogeneous",
        "--output",
        s(&report),
    ]);
    assert_eq!(o.code, 0, "{}", o.stdout);
    let Artifact::Report(r) = Artifact::load(&report, &tol).unwrap() else {
        panic!()
    };
    assert_eq!(r.stages.len(), 2);

    // Tightening the tolerance past rounding makes checks fail without aborting.
    let o = cli(&[
        "--atol",
        "1e-30",
        "verify",
        "--input",
        s(&p),
        "--checks",
        "cayley_inner",
        "--output",
        s(&report),
    ]);
    assert_eq!(o.code, 4, "{}", o.stdout);
    assert!(o.stdout.starts_with("FAIL"));
    let Artifact::Report(r) = Artifact::load(&report, &tol).unwrap() else {
        panic!()
    };
    assert!(!r.passed());

    assert_eq!(cli(&["verify", "--input", s(&p), "--checks", "knese"]).code, 1);
    let t = generate(dir.path(), "commuting_contractions", &["--d", "2", "--s", "3"]);
    assert_eq!(cli(&["verify", "--input", s(&t)]).code, 0);
    let h = generate(dir.path(), "herglotz_realization", &["--d", "2", "--m", "3"]);
    assert_eq!(
        cli(&["verify", "--input", s(&h), "--checks", "xi,herglotz_positivity"]).code,
        0
    );
}

#[test]
fn generate_to_stdout_matches_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate(dir.path(), "gr_unitary", &["--seed", "12"]);
    let o = cli(&["generate", "--kind", "gr_unitary", "--seed", "12"]);
    assert_eq!(o.stdout, std::fs::read_to_string(path).unwrap());
    assert!(o.stdout.contains("\"format_version\": \"1.0\""));
    assert_eq!(cli(&["generate", "--kind", "pencil_real", "--d", "0"]).code, 1);
}
