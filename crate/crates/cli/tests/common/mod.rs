#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", self.stdout))
    }
}

pub fn imflow<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_imflow"))
        .args(args)
        .env("IMFLOW_LOG", "error")
        .output()
        .expect("spawn imflow");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

pub fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// x uniform on 0..4, t its high bit, y = t.
pub const TOY_CSV: &str = "x,t,y\n0,0,0\n1,0,0\n2,1,1\n3,1,1\n";

/// 4-bit counter repeated, y = b0 xor b1.
pub fn xor_csv(samples: usize) -> String {
    let mut s = String::from("b0,b1,b2,b3,y\n");
    for i in 0..samples {
        let v = i % 16;
        let b: Vec<usize> = (0..4).map(|k| (v >> k) & 1).collect();
        s.push_str(&format!("{},{},{},{},{}\n", b[0], b[1], b[2], b[3], b[0] ^ b[1]));
    }
    s
}

pub fn report_schema() -> Value {
    serde_json::from_str(imflow_cli::schemas::REPORT).unwrap()
}

pub fn assert_valid(schema: &Value, doc: &Value) {
    let compiled = jsonschema::JSONSchema::compile(schema).expect("schema compiles");
    let msgs: Vec<String> = match compiled.validate(doc) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    panic!("schema violations:\n{}", msgs.join("\n"));
}

pub fn get<'a>(v: &'a Value, path: &str) -> &'a Value {
    path.split('.').fold(v, |v, k| match k.parse::<usize>() {
        Ok(i) => &v[i],
        Err(_) => &v[k],
    })
}

pub fn f(v: &Value, path: &str) -> f64 {
    get(v, path)
        .as_f64()
        .unwrap_or_else(|| panic!("{path} is not a number"))
}
