use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qkerr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkerr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn column(text: &str, col: usize) -> Vec<f64> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn sweep_header_and_vacuum() {
    let text = stdout(&qkerr(&[
        "sweep-q",
        "--fock-n",
        "0",
        "--gamma",
        "-0.785398163397",
        "--q-min",
        "0.5",
        "--q-max",
        "1",
        "--q-steps",
        "11",
    ]));
    assert_eq!(text.lines().next(), Some("q,S_field"));
    let s = column(&text, 1);
    assert_eq!(s.len(), 11);
    assert!(s.iter().all(|&x| x == 0.0));
}

#[test]
fn evolve_columns() {
    let text = stdout(&qkerr(&[
        "evolve", "--fock-n", "3", "--chi", "0.01", "--q", "0.9", "--t-max", "2", "--steps", "4",
    ]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,gamma_t,S_field,S_atom,purity_field"));
    assert_eq!(lines.next(), Some("0,0,0,0,1"));
    assert_eq!(text.lines().count(), 6);
    assert_eq!(column(&text, 0), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
}

#[test]
fn invalid_arguments_exit_2() {
    let cases: &[&[&str]] = &[
        &["sweep-q", "--q-min", "0.03"],
        &["sweep-q", "--q-max", "1.2"],
        &["evolve", "--q", "0.05"],
        &["evolve", "--log-base", "10"],
        &["evolve", "--omega", "-1"],
        &["evolve", "--chi", "-0.1"],
        &["evolve", "--t-max", "1", "--steps", "0"],
        &[
            "evolve",
            "--initial",
            "coherent",
            "--q",
            "0.5",
            "--alpha-sq",
            "2",
        ],
        &["find-optimal-q", "--q-steps", "0"],
        &["bogus"],
        &[
            "revivals",
            "--input",
            "/nonexistent/series.csv",
            "--chi",
            "0.01",
        ],
    ];
    for args in cases {
        let out = qkerr(args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn malformed_series_exit_2() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(
        &path,
        "t,gamma_t,S_field,S_atom,purity_field\n0,0,zero,0,1\n",
    )
    .unwrap();
    let out = qkerr(&["revivals", "--input", path_str(&path), "--chi", "0.01"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qkerr(&[
        "revivals",
        "--input",
        path_str(&path),
        "--chi",
        "0.01",
        "--threshold",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exit_3() {
    // |α|² just inside the radius: the coherent tail cannot be truncated below the cap
    let out = qkerr(&[
        "evolve",
        "--initial",
        "coherent",
        "--q",
        "0.06",
        "--alpha-sq",
        "1.0035",
        "--t-max",
        "1",
        "--steps",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("q = 0.06"), "{err}");
}

#[test]
fn byte_identical_reruns() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        stdout(&qkerr(&[
            "evolve",
            "--initial",
            "coherent",
            "--alpha-sq",
            "0.5",
            "--alpha-phase",
            "0.3",
            "--chi",
            "0.01",
            "--q",
            "0.95",
            "--t-max",
            "50",
            "--steps",
            "500",
            "--out",
            path_str(p),
        ]));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn sweep_agrees_with_evolve() {
    for q in ["0.9", "0.7", "1"] {
        let sweep = stdout(&qkerr(&[
            "sweep-q",
            "--fock-n",
            "4",
            "--chi",
            "0.02",
            "--gamma",
            "0.8",
            "--t",
            "3.7",
            "--q-min",
            q,
            "--q-max",
            q,
            "--q-steps",
            "1",
        ]));
        let series = stdout(&qkerr(&[
            "evolve", "--fock-n", "4", "--chi", "0.02", "--gamma", "0.8", "--q", q, "--t-max",
            "3.7", "--steps", "1",
        ]));
        let a = column(&sweep, 1)[0];
        let b = *column(&series, 2).last().unwrap();
        assert!((a - b).abs() <= 1e-12, "q = {q}: {a} vs {b}");
    }
}

#[test]
fn find_optimal_q_prints_and_writes_scan() {
    let dir = TempDir::new().unwrap();
    let scan = dir.path().join("scan.csv");
    let text = stdout(&qkerr(&[
        "find-optimal-q",
        "--fock-n",
        "5",
        "--gamma",
        "-0.785398163397448",
        "--chi",
        "0",
        "--t",
        "1",
        "--out",
        path_str(&scan),
    ]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("q_star,S_star"));
    let vals: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((vals[0] - 0.937).abs() < 0.005);
    assert!((vals[1] - 2.243).abs() < 0.01);
    let scan = std::fs::read_to_string(scan).unwrap();
    assert_eq!(scan.lines().count(), 201);
}

#[test]
fn find_optimal_q_single_photon() {
    let text = stdout(&qkerr(&[
        "find-optimal-q",
        "--fock-n",
        "1",
        "--gamma",
        "-0.785398163397448",
        "--chi",
        "0",
        "--t",
        "1",
    ]));
    let s_star: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    // S(q = 1) is exactly one bit for the 50:50 splitter
    assert!(s_star - 1.0 < 0.01);
}

fn revival_report(q: &str, dir: &TempDir) -> String {
    let series = dir.path().join(format!("fock5_{q}.csv"));
    stdout(&qkerr(&[
        "evolve",
        "--fock-n",
        "5",
        "--chi",
        "0.01",
        "--gamma",
        "1",
        "--q",
        q,
        "--out",
        path_str(&series),
    ]));
    let full = 2.0 * PI / 0.01;
    stdout(&qkerr(&[
        "revivals",
        "--input",
        path_str(&series),
        "--chi",
        "0.01",
        "--threshold",
        "0.2",
        "--window-lo",
        &(0.9 * full).to_string(),
        "--window-hi",
        &(1.1 * full).to_string(),
    ]))
}

#[test]
fn revivals_found_for_undeformed_fock_series() {
    let dir = TempDir::new().unwrap();
    let report = revival_report("1", &dir);
    assert_eq!(report.lines().next(), Some("t,gamma_t,S,classification"));
    assert!(report.lines().skip(1).any(|l| l.ends_with(",near-revival")));
}

#[test]
fn revivals_absent_for_deformed_fock_series() {
    let dir = TempDir::new().unwrap();
    let report = revival_report("0.7", &dir);
    let hits: Vec<&str> = report
        .lines()
        .skip(1)
        .filter(|l| l.ends_with(",near-revival"))
        .collect();
    assert!(
        hits.is_empty(),
        "q = 0.7 dips flagged as near-revivals: {hits:?}"
    );
}

#[test]
fn revivals_on_constant_series_is_empty() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("flat.csv");
    let mut body = String::from("t,gamma_t,S_field,S_atom,purity_field\n");
    for i in 0..200 {
        body.push_str(&format!("{},{},1,1,0.5\n", i as f64 * 5.0, i as f64 * 5.0));
    }
    std::fs::write(&path, body).unwrap();
    let report = stdout(&qkerr(&[
        "revivals",
        "--input",
        path_str(&path),
        "--chi",
        "0.01",
    ]));
    assert_eq!(report.lines().count(), 1);
}
