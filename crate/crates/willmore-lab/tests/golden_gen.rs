// Regenerates data/golden_moments.json when invoked explicitly:
//   cargo test -p willmore-lab --test golden_gen -- --ignored
use willmore_lab::io::golden_to_json;
use willmore_lab::oracles::golden_table;

#[test]
#[ignore]
fn regenerate_golden_table() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/golden_moments.json");
    std::fs::write(path, golden_to_json(&golden_table())).unwrap();
}
