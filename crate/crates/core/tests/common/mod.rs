#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use csabench::data::{generate_synthetic_benchmark, SynthSpec};

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_csabench"))
}

pub fn csabench(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("harness binary runs")
}

pub fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

/// Synthetic benchmark with `n_splits` splits under `dir/bench`.
pub fn synth_benchmark(dir: &Path, sizes: &[usize], shifts: &[f64], n_splits: usize) -> PathBuf {
    let mut spec = SynthSpec::new(sizes.to_vec(), shifts.to_vec());
    spec.n_splits = n_splits;
    let root = dir.join("bench");
    generate_synthetic_benchmark(&spec, 7, &root).unwrap();
    root
}

/// Write an executable shell script.
pub fn script(path: &Path, body: &str) {
    fs::write(path, format!("#!/bin/sh\nset -e\n{body}\n")).unwrap();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(path, fs::Permissions::from_mode(0o755)).unwrap();
    }
}

/// Every `*_scores.json` under `dir`, keyed by path relative to `dir`.
pub fn score_files(dir: &Path) -> Vec<(PathBuf, String)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().unwrap().to_str().unwrap().ends_with("_scores.json") {
                let rel = path.strip_prefix(dir).unwrap().to_path_buf();
                out.push((rel, fs::read_to_string(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}
