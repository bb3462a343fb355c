#![allow(dead_code)]

use std::path::PathBuf;

use rsvrc::codec::read_pgm;
use rsvrc::SpatialImage;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/corpus")
}

/// The desk corpus, sorted by file name.
pub fn corpus() -> Vec<(String, SpatialImage)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "pgm"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, read_pgm(&p).expect("corpus image"))
        })
        .collect()
}
