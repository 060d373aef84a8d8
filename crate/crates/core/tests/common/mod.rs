#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::Value;
use subspace_core::rng::StreamRng;

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture(name: &str) -> PathBuf {
    crate_dir().join("tests/fixtures").join(name)
}

/// Runs the CLI from the crate directory so relative paths in reports are stable.
pub fn run_cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subspace"))
        .args(args)
        .current_dir(crate_dir())
        .env("SUBSPACE_THREADS", "0")
        .output()
        .expect("spawn subspace")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

/// Compares against `tests/golden/<name>`; `UPDATE_GOLDEN=1` rewrites it.
pub fn check_golden(name: &str, actual: &str) {
    let path = crate_dir().join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).expect("write golden");
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing golden {}: {e} (rerun with UPDATE_GOLDEN=1)", path.display()));
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

pub fn gaussian_matrix(r: &mut StreamRng, m: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, r)
    })
}

/// Haar-ish orthonormal `n x c` matrix.
pub fn random_orthonormal(r: &mut StreamRng, n: usize, c: usize) -> DMatrix<f64> {
    let q = gaussian_matrix(r, n, n).qr().q();
    q.columns(0, c).into_owned()
}

pub fn uniform(r: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    r.random_range(lo..hi)
}

/// Brute-force `E|sum c_i x_i|^p` over all sign patterns.
pub fn enumerate_moment(c: &[f64], p: f64) -> f64 {
    let r = c.len();
    let mut total = 0.0;
    for mask in 0u64..(1 << r) {
        let s: f64 = c
            .iter()
            .enumerate()
            .map(|(i, v)| if mask >> i & 1 == 1 { -v } else { *v })
            .sum();
        total += s.abs().powf(p);
    }
    total / (1u64 << r) as f64
}

/// `E|Z|^p` for a standard normal by the double-factorial formula, even `p`.
pub fn gaussian_even_moment(p: u32) -> f64 {
    assert!(p.is_multiple_of(2));
    (1..p).step_by(2).map(f64::from).product()
}

pub fn load_schema() -> Value {
    let path = crate_dir().join("../../docs/report.schema.json");
    serde_json::from_str(&std::fs::read_to_string(&path).expect("schema")).expect("schema json")
}

/// Validates `value` against the subset of JSON Schema used by the shipped
/// report schema. Returns the list of violations.
pub fn schema_errors(schema: &Value, value: &Value) -> Vec<String> {
    let mut errs = Vec::new();
    validate(schema, schema, value, "$", &mut errs);
    errs
}

fn resolve<'a>(root: &'a Value, node: &'a Value) -> &'a Value {
    match node.get("$ref").and_then(Value::as_str) {
        Some(r) => {
            let mut cur = root;
            for part in r.trim_start_matches("#/").split('/') {
                cur = &cur[part];
            }
            resolve(root, cur)
        }
        None => node,
    }
}

fn type_matches(name: &str, v: &Value) -> bool {
    match name {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        "number" => v.is_number(),
        "integer" => v.is_u64() || v.is_i64(),
        _ => false,
    }
}

fn validate(root: &Value, node: &Value, v: &Value, at: &str, errs: &mut Vec<String>) {
    let node = resolve(root, node);
    if let Some(alts) = node.get("oneOf").and_then(Value::as_array) {
        let ok = alts
            .iter()
            .filter(|alt| {
                let mut e = Vec::new();
                validate(root, alt, v, at, &mut e);
                e.is_empty()
            })
            .count();
        if ok != 1 {
            errs.push(format!("{at}: matched {ok} oneOf branches"));
        }
    }
    if let Some(t) = node.get("type") {
        let ok = match t {
            Value::String(s) => type_matches(s, v),
            Value::Array(ts) => ts.iter().filter_map(Value::as_str).any(|s| type_matches(s, v)),
            _ => true,
        };
        if !ok {
            errs.push(format!("{at}: expected type {t}, got {v}"));
            return;
        }
    }
    if let Some(c) = node.get("const") {
        if c != v {
            errs.push(format!("{at}: expected {c}, got {v}"));
        }
    }
    if let Some(opts) = node.get("enum").and_then(Value::as_array) {
        if !opts.contains(v) {
            errs.push(format!("{at}: {v} not in enum"));
        }
    }
    if let (Some(min), Some(x)) = (node.get("minimum").and_then(Value::as_f64), v.as_f64()) {
        if x < min {
            errs.push(format!("{at}: {x} below minimum {min}"));
        }
    }
    if let Value::Object(map) = v {
        if let Some(req) = node.get("required").and_then(Value::as_array) {
            for key in req.iter().filter_map(Value::as_str) {
                if !map.contains_key(key) {
                    errs.push(format!("{at}: missing {key}"));
                }
            }
        }
        let props = node.get("properties").and_then(Value::as_object);
        for (key, child) in map {
            let path = format!("{at}.{key}");
            match props.and_then(|p| p.get(key)) {
                Some(s) => validate(root, s, child, &path, errs),
                None => match node.get("additionalProperties") {
                    Some(Value::Bool(false)) => errs.push(format!("{path}: unexpected property")),
                    Some(s @ Value::Object(_)) => validate(root, s, child, &path, errs),
                    _ => {}
                },
            }
        }
    }
    if let (Value::Array(items), Some(s)) = (v, node.get("items")) {
        for (i, item) in items.iter().enumerate() {
            validate(root, s, item, &format!("{at}[{i}]"), errs);
        }
    }
}

pub fn assert_valid_report(text: &str) -> Value {
    let v: Value = serde_json::from_str(text).expect("report is JSON");
    let errs = schema_errors(&load_schema(), &v);
    assert!(errs.is_empty(), "schema violations: {errs:#?}");
    v
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("read")).expect("json")
}
