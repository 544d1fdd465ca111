#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn data(name: &str) -> PathBuf {
    crate_dir().join("data").join(name)
}

pub fn golden(name: &str) -> PathBuf {
    crate_dir().join("tests").join("golden").join(name)
}

pub fn distractor() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_distractor"));
    for (key, _) in std::env::vars() {
        if key.starts_with("DISTRACTOR_") {
            cmd.env_remove(key);
        }
    }
    cmd
}

pub fn stub_adapter() -> &'static str {
    env!("CARGO_BIN_EXE_stub-adapter")
}

/// `distractor run` on the bundled toy corpus and weights.
pub fn toy_run(out: &Path, extra: &[&str]) -> Output {
    let mut cmd = distractor();
    cmd.arg("run")
        .arg("--corpus")
        .arg(data("toy_corpus.jsonl"))
        .args(["--lang", "c", "--model", "linear-bag", "--quiet"])
        .arg("--model-config")
        .arg(data("toy_weights.json"))
        .arg("--out")
        .arg(out)
        .args(extra);
    cmd.output().expect("distractor runs")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// File name → bytes for every file directly inside `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).expect("readable dir") {
        let path = entry.expect("dir entry").path();
        if path.is_file() {
            files.insert(
                path.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&path).unwrap(),
            );
        }
    }
    files
}

pub fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).expect("file exists")).expect("valid json")
}

pub fn write_jsonl(path: &Path, rows: &[(&str, &str)]) {
    let text: String = rows
        .iter()
        .map(|(id, code)| serde_json::json!({"id": id, "code": code}).to_string() + "\n")
        .collect();
    fs::write(path, text).unwrap();
}
