//! The checked-in fuzz corpus seeds must stay parseable; this pins the file
//! formats that the fuzz targets exercise.

use std::fs;
use std::path::Path;

fn corpus(name: &str) -> Vec<String> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(name);
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        out.push(fs::read_to_string(entry.unwrap().path()).unwrap());
    }
    assert!(!out.is_empty());
    out
}

#[test]
fn config_toml_seeds_parse() {
    for text in corpus("config_toml") {
        willmore_lab::experiments::parse_config_toml(&text).unwrap();
    }
}

#[test]
fn config_json_seeds_parse() {
    for text in corpus("config_json") {
        willmore_lab::experiments::parse_config_json(&text).unwrap();
    }
}

#[test]
fn surface_json_seeds_parse() {
    for text in corpus("surface_json") {
        willmore_lab::io::parse_surface_json(&text).unwrap();
    }
}

#[test]
fn coeffs_json_seeds_parse() {
    for text in corpus("coeffs_json") {
        willmore_lab::io::parse_coeffs_json(&text).unwrap();
    }
}

#[test]
fn field_csv_seeds_parse() {
    for text in corpus("field_csv") {
        assert!(!willmore_lab::io::parse_field_csv(&text).unwrap().is_empty());
    }
}
