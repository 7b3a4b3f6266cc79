use core::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

/// Index of a regimen under study.
///
/// Stored zero-based; rendered and serialized one-based (`T1` is `Regimen(0)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Regimen(pub usize);

impl Regimen {
    pub fn index(self) -> usize {
        self.0
    }

    /// Builds a regimen from its one-based label number.
    pub fn from_label(label: usize) -> Option<Self> {
        label.checked_sub(1).map(Regimen)
    }

    pub fn label(self) -> usize {
        self.0 + 1
    }
}

impl fmt::Display for Regimen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.0 + 1)
    }
}

impl Serialize for Regimen {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u64(self.label() as u64)
    }
}

impl<'de> Deserialize<'de> for Regimen {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let label = u64::deserialize(deserializer)?;
        Regimen::from_label(label as usize)
            .ok_or_else(|| de::Error::custom("regimen labels start at 1"))
    }
}
