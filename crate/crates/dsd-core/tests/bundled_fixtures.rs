//! The repository bundles two synthetic datasets under `fixtures/` so the
//! CLI can be exercised without external data. They are frozen outputs of
//! `generate_fixture`; these tests pin them to the generator so the files
//! cannot drift silently.

use std::path::PathBuf;

use dsd_core::ingest::{generate_fixture, load_csv, manifest_for, save_csv, DatasetManifest};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn expected(name: &str, seed: u64, m: usize) -> (String, String) {
    let mut series = generate_fixture(seed, 21, m);
    series.country = name.to_string();
    (save_csv(&series), manifest_for(&series))
}

/// Writes the bundled files. Run manually after changing the generator:
/// `cargo test -p dsd-core --test bundled_fixtures -- --ignored regenerate`
#[test]
#[ignore]
fn regenerate() {
    for (name, seed, m) in [("cn_synth", 1, 6), ("in_synth", 2, 5)] {
        let (csv, manifest) = expected(name, seed, m);
        std::fs::write(fixture_dir().join(format!("{name}.csv")), csv).unwrap();
        std::fs::write(fixture_dir().join(format!("{name}.manifest")), manifest).unwrap();
    }
}

#[test]
fn bundled_files_match_generator() {
    for (name, seed, m) in [("cn_synth", 1u64, 6usize), ("in_synth", 2, 5)] {
        let csv = std::fs::read_to_string(fixture_dir().join(format!("{name}.csv")))
            .expect("bundled fixture present");
        let manifest_text =
            std::fs::read_to_string(fixture_dir().join(format!("{name}.manifest"))).unwrap();
        let (want_csv, want_manifest) = expected(name, seed, m);
        assert_eq!(csv, want_csv, "{name}.csv drifted from the generator");
        assert_eq!(manifest_text, want_manifest, "{name}.manifest drifted");
    }
}

#[test]
fn bundled_files_load_cleanly() {
    for name in ["cn_synth", "in_synth"] {
        let manifest =
            DatasetManifest::from_file(&fixture_dir().join(format!("{name}.manifest"))).unwrap();
        let series = load_csv(&fixture_dir().join(format!("{name}.csv")), &manifest).unwrap();
        assert_eq!(series.first_year(), 2000);
        assert_eq!(series.last_year(), 2020);
        assert_eq!(series.observations.len(), 21);
    }
}
