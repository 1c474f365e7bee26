//! Label embeddings, distance metrics, density clustering and cluster
//! merging.

pub mod hdbscan;
pub mod http;
pub mod merge;
pub mod metric;
pub mod table;

pub use hdbscan::{hdbscan, hdbscan_trace, ClusterResult, HdbscanParams, HdbscanTrace, MstEdge, NOISE};
pub use http::HttpEmbedder;
pub use merge::{merge_clusters, MergeOutcome, MergeStep};
pub use metric::{centroid, cosine, euclidean};
pub use table::FixtureTable;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SemanticsError {
    #[error("embedding backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("vector dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("cosine similarity undefined for a zero vector")]
    ZeroVector,
    #[error("invalid clustering parameters: {0}")]
    InvalidParams(String),
    #[error("merge threshold {0} outside [-1, 1]")]
    InvalidThreshold(f64),
    #[error("input is empty")]
    EmptyInput,
    #[error("cannot embed an empty string")]
    EmptyText,
    #[error("vector contains NaN or infinity")]
    NonFinite,
    #[error("point index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("no embedding for {0:?}")]
    UnknownText(String),
    #[error("bad embedding fixture: {0}")]
    Fixture(String),
}

/// Source of label embeddings. Implementations must return one vector of
/// length `dimension()` per input, in order.
pub trait EmbeddingBackend: Send + Sync {
    fn dimension(&self) -> usize;
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, SemanticsError>;
}

/// Embeds `texts`, checking the backend's output shape.
pub fn embed(backend: &dyn EmbeddingBackend, texts: &[&str]) -> Result<Vec<Vec<f64>>, SemanticsError> {
    if texts.is_empty() {
        return Err(SemanticsError::EmptyInput);
    }
    if texts.iter().any(|t| t.trim().is_empty()) {
        return Err(SemanticsError::EmptyText);
    }
    let vectors = backend.embed_batch(texts)?;
    if vectors.len() != texts.len() {
        return Err(SemanticsError::BackendUnavailable(format!(
            "backend returned {} vectors for {} texts",
            vectors.len(),
            texts.len()
        )));
    }
    let dim = backend.dimension();
    for v in &vectors {
        if v.len() != dim {
            return Err(SemanticsError::DimensionMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(SemanticsError::NonFinite);
        }
    }
    Ok(vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Broken;
    impl EmbeddingBackend for Broken {
        fn dimension(&self) -> usize {
            3
        }
        fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, SemanticsError> {
            Ok(texts.iter().map(|_| vec![1.0, 2.0]).collect())
        }
    }

    #[test]
    fn embed_checks_shape() {
        assert!(matches!(
            embed(&Broken, &["a"]),
            Err(SemanticsError::DimensionMismatch { expected: 3, actual: 2 })
        ));
        assert_eq!(embed(&Broken, &[""]), Err(SemanticsError::EmptyText));
        assert_eq!(embed(&Broken, &[]), Err(SemanticsError::EmptyInput));
    }

    #[test]
    fn identical_texts_identical_vectors() {
        let t = FixtureTable::from_json(r#"{"Invasion of Iraq": [0.5, 0.25]}"#).unwrap();
        let v = embed(&t, &["Invasion of Iraq", "Invasion of Iraq"]).unwrap();
        assert_eq!(v[0], v[1]);
        assert_eq!(v[0], vec![0.5, 0.25]);
    }
}
