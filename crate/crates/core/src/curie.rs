//! Compact URIs (`PREFIX:LOCAL`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A validated compact URI such as `MONDO:0004975`.
///
/// Ordering and equality are byte-wise on the canonical `PREFIX:LOCAL` form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Curie {
    text: String,
    split: usize,
}

impl Curie {
    pub fn new(text: impl Into<String>) -> Result<Self, Error> {
        let text = text.into();
        let mut colons = text.match_indices(':');
        let split = match (colons.next(), colons.next()) {
            (Some((idx, _)), None) => idx,
            _ => return Err(Error::InvalidCurie(text)),
        };
        if split == 0 || split + 1 == text.len() || text.chars().any(char::is_whitespace) {
            return Err(Error::InvalidCurie(text));
        }
        Ok(Self { text, split })
    }

    pub fn prefix(&self) -> &str {
        &self.text[..self.split]
    }

    pub fn local_id(&self) -> &str {
        &self.text[self.split + 1..]
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

impl fmt::Display for Curie {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl fmt::Debug for Curie {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Curie({})", self.text)
    }
}

impl FromStr for Curie {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Curie::new(s)
    }
}

impl AsRef<str> for Curie {
    fn as_ref(&self) -> &str {
        &self.text
    }
}

impl Serialize for Curie {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Curie {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Curie::new(text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_prefix_and_local() {
        let c: Curie = "MONDO:0004975".parse().unwrap();
        assert_eq!(c.prefix(), "MONDO");
        assert_eq!(c.local_id(), "0004975");
        assert_eq!(c.to_string(), "MONDO:0004975");
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "MONDO", ":123", "MONDO:", "a:b:c", "A: b"] {
            assert!(Curie::new(bad).is_err(), "{bad:?} should be rejected");
        }
    }

    #[test]
    fn comparison_is_case_sensitive() {
        assert_ne!(
            Curie::new("chebi:1").unwrap(),
            Curie::new("CHEBI:1").unwrap()
        );
        assert!(Curie::new("CHEBI:27953").unwrap() < Curie::new("CHEBI:7514").unwrap());
    }
}
