use std::fs;
use std::path::Path;

use intramix_core::dataset::{generate_sbm, load_container, make_split, save_container, SbmConfig};
use sha2::{Digest, Sha256};

const FILES: [&str; 5] = ["meta.json", "features.csv", "edges.tsv", "labels.csv", "splits.json"];

fn digest(dir: &Path) -> String {
    let mut h = Sha256::new();
    for f in FILES {
        let bytes = fs::read(dir.join(f)).unwrap();
        h.update(f.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn seed_7_container_reserializes_to_same_hash() {
    let cfg = SbmConfig { seed: 7, ..SbmConfig::default() };
    let d = generate_sbm(&cfg).unwrap();
    let split = make_split(&d.table, 5, 500, 7).unwrap();

    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("a");
    let second = tmp.path().join("b");
    save_container(&first, &d.graph, &d.table, &split).unwrap();
    let loaded = load_container(&first).unwrap();
    assert_eq!(loaded.graph, d.graph);
    assert_eq!(loaded.table, d.table);
    assert_eq!(loaded.split, split);

    save_container(&second, &loaded.graph, &loaded.table, &loaded.split).unwrap();
    assert_eq!(digest(&first), digest(&second));
}

#[test]
fn generation_is_reproducible_on_disk() {
    let cfg = SbmConfig { seed: 7, nodes_per_class: 40, ..SbmConfig::default() };
    let tmp = tempfile::tempdir().unwrap();
    let mut hashes = Vec::new();
    for name in ["x", "y"] {
        let d = generate_sbm(&cfg).unwrap();
        let split = make_split(&d.table, 5, 50, 7).unwrap();
        let dir = tmp.path().join(name);
        save_container(&dir, &d.graph, &d.table, &split).unwrap();
        hashes.push(digest(&dir));
    }
    assert_eq!(hashes[0], hashes[1]);

    let other = generate_sbm(&SbmConfig { seed: 8, ..cfg }).unwrap();
    let split = make_split(&other.table, 5, 50, 7).unwrap();
    let dir = tmp.path().join("z");
    save_container(&dir, &other.graph, &other.table, &split).unwrap();
    assert_ne!(hashes[0], digest(&dir));
}

#[test]
fn edited_container_is_rejected_with_location() {
    let d = generate_sbm(&SbmConfig { nodes_per_class: 10, seed: 1, ..SbmConfig::default() }).unwrap();
    let split = make_split(&d.table, 2, 10, 1).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    save_container(tmp.path(), &d.graph, &d.table, &split).unwrap();

    let labels = tmp.path().join("labels.csv");
    let text = fs::read_to_string(&labels).unwrap();
    fs::write(&labels, text.replacen("0,0", "0,9", 1)).unwrap();
    let err = load_container(tmp.path()).unwrap_err().to_string();
    assert!(err.contains("labels.csv"), "{err}");
}
