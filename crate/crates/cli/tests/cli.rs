use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn plm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plm"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = plm(dir, args);
    assert!(
        out.status.success(),
        "plm {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path
}

/// Data rows as `(first field, remaining fields as floats)`.
fn data_rows(text: &str) -> Vec<(String, Vec<f64>)> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let mut fields = l.split(',');
            let id = fields.next().unwrap().to_string();
            (id, fields.map(|f| f.parse().unwrap_or(f64::NAN)).collect())
        })
        .collect()
}

const POSTERIORS: &str = "sample_id,p_0,p_1,p_2,p_3\n\
    a,0.1,0.2,0.3,0.4\n\
    b,0.7,0.1,0.1,0.1\n\
    c,0.25,0.25,0.25,0.25\n\
    d,0.01,0.02,0.03,0.94\n";

#[test]
fn every_output_starts_with_the_format_header() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "p.csv", POSTERIORS);
    let out = ok(dir.path(), &["restrict", "p.csv"]);
    assert!(out.starts_with("# plm-v1 restrict\n"));
    let version = ok(dir.path(), &["--version"]);
    assert!(version.contains("plm-v1"));
}

#[test]
fn restrict_writes_the_pair_probabilities() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "p.csv", "sample_id,p_0,p_1,p_2\nx,0.2,0.3,0.5\n");
    let rows = data_rows(&ok(dir.path(), &["restrict", "p.csv"]));
    let got: Vec<f64> = rows.iter().map(|(_, f)| f[2]).collect();
    let want = [0.4, 0.2 / 0.7, 0.375];
    assert_eq!(rows.len(), 3);
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-15);
    }
}

#[test]
fn restrict_then_couple_round_trips() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "p.csv", POSTERIORS);
    ok(dir.path(), &["restrict", "p.csv", "-o", "r.csv"]);
    let original = data_rows(POSTERIORS);
    assert_eq!(original.len(), 4);
    for method in ["wlw", "bc"] {
        let coupled = data_rows(&ok(dir.path(), &["couple", "r.csv", "--method", method]));
        assert_eq!(coupled.len(), original.len());
        for ((id_a, p), (id_b, q)) in coupled.iter().zip(&original) {
            assert_eq!(id_a, id_b);
            for (x, y) in p.iter().zip(q) {
                assert!((x - y).abs() <= 1e-7, "{method} {id_a}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn empty_data_section_gives_empty_output() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "p.csv", "sample_id,p_0,p_1\n");
    ok(dir.path(), &["restrict", "p.csv", "-o", "r.csv"]);
    assert!(data_rows(&fs::read_to_string(dir.path().join("r.csv")).unwrap()).is_empty());
    let coupled = ok(dir.path(), &["couple", "r.csv"]);
    assert_eq!(coupled, "# plm-v1 couple method=wlw\n");
}

#[test]
fn malformed_rows_report_their_line() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "p.csv", "# note\nsample_id,p_0,p_1\nx,0.5,0.5\ny,0.3,0.6\n");
    let out = plm(dir.path(), &["restrict", "p.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("p.csv:4"), "{err}");
}

#[test]
fn bc_failures_are_marked_and_strict_exits_two() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "r.csv",
        "sample_id,i,j,r_ij\nok,0,1,0.6\nok,0,2,0.5\nok,1,2,0.4\nhard,0,1,1.0\nhard,0,2,0.5\nhard,1,2,0.5\n",
    );
    let args = ["couple", "r.csv", "--method", "bc", "--stabilize", "none"];
    let out = plm(dir.path(), &args);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# failed,hard,"));
    assert_eq!(data_rows(&text).len(), 1);

    let strict = plm(dir.path(), &[&args[..], &["--strict"]].concat());
    assert_eq!(strict.status.code(), Some(2));

    let clipped = ok(dir.path(), &["couple", "r.csv", "--method", "bc", "--stabilize", "clip", "--tau", "1e-3"]);
    assert_eq!(data_rows(&clipped).len(), 2);
}

#[test]
fn distance_vanishes_on_restricted_posteriors() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "p.csv", POSTERIORS);
    ok(dir.path(), &["restrict", "p.csv", "-o", "r.csv"]);
    for method in ["wlw", "bc"] {
        for (_, f) in data_rows(&ok(dir.path(), &["distance", "r.csv", "--method", method])) {
            assert!(f[1] <= 1e-12);
        }
    }
}

#[test]
fn abstention_marks_samples_far_from_the_manifold() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "r.csv",
        "sample_id,i,j,r_ij\nnear,0,1,0.5\nnear,0,2,0.5\nnear,1,2,0.5\nfar,0,1,0.9\nfar,0,2,0.1\nfar,1,2,0.9\n",
    );
    let text = ok(dir.path(), &["couple", "r.csv", "--abstain-threshold", "1e-3"]);
    assert!(text.contains("# abstain,far,"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].0, "near");
}

#[test]
fn calibrate_takes_the_nearest_rank() {
    let dir = TempDir::new().unwrap();
    let mut csv = String::from("sample_id,method,distance\n");
    for k in 1..=10 {
        csv.push_str(&format!("s{k},wlw,{}\n", k as f64 / 10.0));
    }
    write(dir.path(), "d.csv", &csv);
    let rows = data_rows(&ok(dir.path(), &["calibrate", "d.csv", "--quantile", "0.85"]));
    assert_eq!(rows[0].1[2], 0.9);
}

#[test]
fn evaluate_perfect_predictions() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "p.csv", POSTERIORS);
    write(dir.path(), "l.csv", "sample_id,label\na,3\nb,0\nc,0\nd,3\n");
    let report = data_rows(&ok(dir.path(), &["evaluate", "--posteriors", "p.csv", "--labels", "l.csv", "--confusion", "cm.csv"]));
    assert_eq!(report[0].0, "4");
    assert_eq!(report[0].1[1], 1.0);
    let cm = fs::read_to_string(dir.path().join("cm.csv")).unwrap();
    assert!(cm.contains("\n0,2,0,0,0\n") && cm.contains("\n3,0,0,0,2\n"), "{cm}");
}

#[test]
fn correct_rejects_foreign_classes_and_missing_labels() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "p.csv", POSTERIORS);
    write(dir.path(), "l.csv", "sample_id,label\na,3\nb,0\nc,0\nd,3\n");
    write(dir.path(), "bad_patch.csv", "i,j,prob_i\n0,4,0.5\n");
    let out = plm(dir.path(), &["correct", "--posteriors", "p.csv", "--patch", "bad_patch.csv", "--labels", "l.csv"]);
    assert_eq!(out.status.code(), Some(1));
    write(dir.path(), "patch.csv", "i,j,prob_i\n0,1,0.5\n");
    write(dir.path(), "short.csv", "sample_id,label\na,3\n");
    let out = plm(dir.path(), &["correct", "--posteriors", "p.csv", "--patch", "patch.csv", "--labels", "short.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn identity_patch_leaves_accuracy_unchanged() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "p.csv", POSTERIORS);
    write(dir.path(), "l.csv", "sample_id,label\na,3\nb,1\nc,2\nd,3\n");
    ok(dir.path(), &["restrict", "p.csv", "-o", "r.csv"]);
    // the restriction of each posterior to pair (1, 2), as a per-sample patch
    let patch: String = std::iter::once("sample_id,i,j,prob_i".to_string())
        .chain(
            data_rows(&fs::read_to_string(dir.path().join("r.csv")).unwrap())
                .into_iter()
                .filter(|(_, f)| f[0] == 1.0 && f[1] == 2.0)
                .map(|(id, f)| format!("{id},1,2,{:.16e}", f[2])),
        )
        .collect::<Vec<_>>()
        .join("\n");
    write(dir.path(), "patch.csv", &patch);
    let report = data_rows(&ok(dir.path(), &["correct", "--posteriors", "p.csv", "--patch", "patch.csv", "--labels", "l.csv"]));
    for (metric, f) in &report {
        assert_eq!(f[3], f[4], "{metric}");
    }
}

#[test]
fn confused_pair_scenario_is_repaired_by_the_oracle_patch() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "synth", "--classes", "4", "--n-per-class", "250", "--separation", "2.5", "--scale", "1", "--seed", "21",
            "--confuse-pair", "0,1", "--confusion-noise", "3", "--out-dir", "s",
        ],
    );
    let report = data_rows(&ok(
        dir.path(),
        &["correct", "--posteriors", "s/posteriors.csv", "--patch", "s/oracle_patch.csv", "--labels", "s/labels.csv"],
    ));
    let multiclass: Vec<(f64, f64)> = report
        .iter()
        .filter(|(m, _)| m == "multiclass")
        .map(|(_, f)| (f[3], f[4]))
        .collect();
    assert_eq!(multiclass, [(0.707, 0.736), (0.707, 0.724)]);
}

#[test]
fn synth_and_bootstrap_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let synth = |out: &str| {
        ok(dir.path(), &["synth", "--classes", "3", "--n-per-class", "5", "--seed", "4", "--noise", "0.5", "--out-dir", out]);
    };
    synth("a");
    synth("b");
    for name in ["features.csv", "labels.csv", "posteriors.csv", "pairwise.csv"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(name)).unwrap(),
            fs::read(dir.path().join("b").join(name)).unwrap(),
            "{name}"
        );
    }
    ok(dir.path(), &["restrict", "a/posteriors.csv", "-o", "exact.csv"]);
    let run = || ok(dir.path(), &["bootstrap", "exact.csv", "a/pairwise.csv", "--n", "100", "--seed", "9", "--method", "bc"]);
    let first = run();
    assert_eq!(first, run());
    let rows = data_rows(&first);
    assert_eq!(rows.len(), 15 * 3);
    assert!(rows.iter().all(|(_, f)| f[1] == 100.0));
    assert!(rows.iter().any(|(_, f)| f[4] > 0.0));
}

#[test]
fn bootstrap_of_identical_sources_has_no_spread() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "p.csv", POSTERIORS);
    ok(dir.path(), &["restrict", "p.csv", "-o", "r.csv"]);
    ok(dir.path(), &["bootstrap", "r.csv", "r.csv", "--n", "50", "--draws", "draws.csv", "-o", "s.csv"]);
    for (_, f) in data_rows(&fs::read_to_string(dir.path().join("s.csv")).unwrap()) {
        assert_eq!(f[4], 0.0);
    }
    // draws re-parse as a posterior file
    ok(dir.path(), &["restrict", "draws.csv"]);
}

#[test]
fn bootstrap_rejects_misaligned_sources() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "p.csv", POSTERIORS);
    write(dir.path(), "q.csv", "sample_id,p_0,p_1,p_2,p_3\na,0.1,0.2,0.3,0.4\n");
    ok(dir.path(), &["restrict", "p.csv", "-o", "r.csv"]);
    ok(dir.path(), &["restrict", "q.csv", "-o", "s.csv"]);
    let out = plm(dir.path(), &["bootstrap", "r.csv", "s.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_reports_one_row_per_correction() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "synth", "--classes", "3", "--n-per-class", "40", "--seed", "2", "--confuse-pair", "1,2",
            "--confusion-noise", "2", "--correction-noise", "0,1,3", "--out-dir", "s",
        ],
    );
    let out = ok(
        dir.path(),
        &[
            "sweep", "--posteriors", "s/posteriors.csv", "--labels", "s/labels.csv", "--fit", "--corrections",
            "s/correction_0.csv", "s/correction_1.csv", "s/correction_2.csv",
        ],
    );
    assert_eq!(data_rows(&out).len(), 3);
    assert!(out.contains("# fit,wlw,") && out.contains("# fit,bc,"));
}
