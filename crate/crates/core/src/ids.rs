//! Short content-derived identifiers.

use sha2::{Digest, Sha256};

/// Hex SHA-256 over the parts joined with NUL bytes.
pub fn digest(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            h.update([0u8]);
        }
        h.update(p.as_bytes());
    }
    hex::encode(h.finalize())
}

/// `prefix-` followed by the first 12 hex digits of [`digest`].
pub fn short_id(prefix: &str, parts: &[&str]) -> String {
    format!("{prefix}-{}", &digest(parts)[..12])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separator_matters() {
        assert_ne!(digest(&["ab", "c"]), digest(&["a", "bc"]));
        assert_eq!(short_id("doc", &["x"]).len(), 16);
    }
}
