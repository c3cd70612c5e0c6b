//! Content hashes and run metadata shared by every artifact writer.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Canonical JSON text: object keys sorted, no insignificant whitespace.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    // serde_json's default map is ordered, so a round trip sorts keys
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string(&v)?)
}

/// Git-style object hash of the canonical JSON form: SHA-256 over
/// `"blob <len>\0<json>"`, hex encoded.
pub fn content_hash<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let body = canonical_json(value)?;
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", body.len()).as_bytes());
    h.update(body.as_bytes());
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn key_order_does_not_matter() {
        let a = json!({"b": 1, "a": [1, 2, {"z": 0, "y": 1}]});
        let b: serde_json::Value = serde_json::from_str(r#"{"a":[1,2,{"y":1,"z":0}],"b":1}"#).unwrap();
        assert_eq!(content_hash(&a).unwrap(), content_hash(&b).unwrap());
        assert_ne!(content_hash(&a).unwrap(), content_hash(&json!({"b": 2})).unwrap());
    }

    #[test]
    fn matches_reference_digest() {
        // sha256 of "blob 2\0{}"
        let h = content_hash(&json!({})).unwrap();
        assert_eq!(h.len(), 64);
        let mut s = Sha256::new();
        s.update(b"blob 2\0{}");
        let expect: String = s.finalize().iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(h, expect);
    }
}
