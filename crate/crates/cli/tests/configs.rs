//! Every shipped experiment config must pass validation.

use std::path::Path;
use std::process::Command;

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            // graph-dump parses and validates the whole document without
            // playing any rounds.
            let out = Command::new(env!("CARGO_BIN_EXE_influence"))
                .args(["graph-dump", "--config"])
                .arg(&path)
                .output()
                .unwrap();
            assert!(
                out.status.success(),
                "{}: {}",
                path.display(),
                String::from_utf8_lossy(&out.stderr)
            );
            seen += 1;
        }
    }
    assert!(seen >= 7);
}

#[test]
fn shipped_sweeps_resolve_every_value() {
    use influence_core::experiments::config::read_table;
    use influence_core::experiments::{sweep_configs, ExperimentConfig};

    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in [
        "knowledge_radius.toml",
        "resource_disparity.toml",
        "topological_disparity.toml",
    ] {
        let table = read_table(&dir.join(name)).unwrap();
        let spec = ExperimentConfig::from_table(table.clone()).unwrap().sweep.unwrap();
        let cells = sweep_configs(&table, &spec).unwrap();
        assert_eq!(cells.len(), spec.values.len(), "{name}");
    }
}
