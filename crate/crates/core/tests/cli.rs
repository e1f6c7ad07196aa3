use std::path::Path;
use std::process::{Command, Output};

use fdclutter::cli::{resolve, Manifest, RANK_COLUMNS};
use fdclutter::io::load_matrix;

fn fdclutter(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdclutter"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("FDCLUTTER_OUT_DIR")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("study.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL_FDA: &str = r#"
name = "small"
family = "fda"
seed = 5
[dims]
tx = 16
[[variants]]
codes = 1
assignment = "fixed"
[[variants]]
codes = 4
assignment = "random"
[sweep]
extents = [0.25, 0.5]
"#;

#[test]
fn fig3_writes_block_diagonal_gramian() {
    let dir = tempfile::tempdir().unwrap();
    let o = fdclutter(&["fig3", "--seed", "7"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = load_matrix(&dir.path().join("fig3_permuted.bin")).unwrap();
    assert_eq!(m.shape(), (512, 512));
    let table = std::fs::read_to_string(dir.path().join("fig3.csv")).unwrap();
    let sizes: Vec<usize> = table
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(sizes.len(), 4);
    assert_eq!(sizes.iter().sum::<usize>(), 512);
    let mut owner = Vec::new();
    for (b, &s) in sizes.iter().enumerate() {
        owner.extend(std::iter::repeat_n(b, s));
    }
    for i in 0..512 {
        for j in 0..512 {
            if owner[i] != owner[j] {
                assert_eq!(m[(i, j)].re, 0.0);
            }
        }
        assert!(m[(i, i)].re > 0.0);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        assert!(fdclutter(&["fig9", "--seed", "3"], dir).status.success());
        assert!(fdclutter(&["fig3", "--seed", "3", "--jobs", "1"], dir)
            .status
            .success());
    }
    for file in ["fig9.csv", "fig3.csv", "fig3_permuted.bin"] {
        assert_eq!(
            std::fs::read(a.path().join(file)).unwrap(),
            std::fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn manifest_reproduces_resolved_configs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_FDA);
    assert!(fdclutter(
        &["custom", "--config", &cfg, "--rel-tol", "0.005"],
        dir.path()
    )
    .status
    .success());
    assert!(fdclutter(&["fig8", "--seed", "9"], dir.path())
        .status
        .success());
    for name in ["small", "fig8"] {
        let m = Manifest::load(&dir.path().join(format!("{name}.manifest.json"))).unwrap();
        assert_eq!(m.study.configs().unwrap(), m.configs);
        assert_eq!(resolve(&m.spec).unwrap(), m.study);
    }
    let m = Manifest::load(&dir.path().join("small.manifest.json")).unwrap();
    match m.study {
        fdclutter::cli::Study::Rank(s) => {
            assert_eq!(s.rel_tol, 0.005);
            assert_eq!(s.seed, 5);
        }
        other => panic!("unexpected study {other:?}"),
    }
}

#[test]
fn custom_table_has_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_FDA);
    assert!(fdclutter(&["custom", "--config", &cfg], dir.path())
        .status
        .success());
    let text = std::fs::read_to_string(dir.path().join("small.csv")).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], RANK_COLUMNS.join(","));
    assert_eq!(body.len(), 1 + 4);
    assert!(body[1].starts_with("fixed-q1,fixed,1,1,0.25,16,"));
}

#[test]
fn empty_sweep_writes_manifest_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL_FDA.replace("[0.25, 0.5]", "[]"));
    let o = fdclutter(&["custom", "--config", &cfg], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("small.manifest.json").exists());
    let text = std::fs::read_to_string(dir.path().join("small.csv")).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body, vec![RANK_COLUMNS.join(",")]);
}

#[test]
fn invalid_inputs_fail_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        SMALL_FDA.replace("[0.25, 0.5]", "[0.5, 1.5]"),
        SMALL_FDA.replace("[dims]", "[radar]\nplatform_speed_mps = 10.0\n[dims]"),
        SMALL_FDA.replace("tx = 16", "tx = 16\nwidth = 3"),
    ];
    for body in &cases {
        let cfg = write_config(dir.path(), body);
        let o = fdclutter(&["custom", "--config", &cfg], dir.path());
        assert!(!o.status.success());
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));
    }
    let o = fdclutter(&["custom"], dir.path());
    assert!(!o.status.success());
    let o = fdclutter(&["fig6", "--jobs", "0"], dir.path());
    assert!(!o.status.success());
}

#[test]
fn output_directory_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env-out");
    let o = Command::new(env!("CARGO_BIN_EXE_fdclutter"))
        .arg("fig9")
        .env("FDCLUTTER_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(out.join("fig9.csv").exists());
}
