//! Synthetic manifest for the length filter: one document per body length.

use std::fs;

use narrmine_core::corpus::{ingest, CorpusManifest, IngestOptions, RejectReason};

pub const LENGTHS: [usize; 4] = [999, 1000, 8000, 8001];

/// Body of exactly `n` characters, with multi-byte characters mixed in so
/// that characters and bytes differ.
pub fn body(n: usize) -> String {
    (0..n).map(|i| if i % 7 == 0 { 'é' } else { 'a' }).collect()
}

/// Ingests one file per length and returns the accepted body lengths and
/// the rejection reasons.
pub fn run() -> (Vec<usize>, Vec<RejectReason>) {
    let dir = tempfile::tempdir().unwrap();
    let mut manifest = String::new();
    for n in LENGTHS {
        let name = format!("len-{n}.txt");
        fs::write(dir.path().join(&name), body(n)).unwrap();
        manifest.push_str(&format!(
            "{{\"path\": \"{name}\", \"viewpoint\": \"US\", \"outlet\": \"o\", \"url\": \"https://example.org/{n}\", \"title\": \"t{n}\"}}\n"
        ));
    }
    let manifest = CorpusManifest::parse(&manifest, dir.path()).unwrap();
    let report = ingest(&manifest, IngestOptions::default()).unwrap();
    let mut accepted: Vec<usize> = report.documents.iter().map(|d| d.char_count).collect();
    accepted.sort();
    (accepted, report.rejections.into_iter().map(|r| r.reason).collect())
}
