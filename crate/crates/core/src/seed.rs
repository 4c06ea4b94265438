//! Stream derivation: a master seed and a path of labels map to a 64-bit seed.

use serde::{Deserialize, Serialize};

/// One component of a seed path.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Int(u64),
    Str(String),
}

impl From<u64> for Label {
    fn from(v: u64) -> Self {
        Label::Int(v)
    }
}

impl From<usize> for Label {
    fn from(v: usize) -> Self {
        Label::Int(v as u64)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::Str(s.to_owned())
    }
}

impl From<String> for Label {
    fn from(s: String) -> Self {
        Label::Str(s)
    }
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn label_word(label: &Label) -> u64 {
    match label {
        Label::Int(v) => splitmix64(*v ^ 0x1111_1111_1111_1111),
        Label::Str(s) => splitmix64(fnv1a64(s.as_bytes()) ^ 0x2222_2222_2222_2222),
    }
}

/// Seed for the stream at `labels` under `master`. Stable across platforms
/// and releases; order of labels matters.
pub fn derive_seed(master: u64, labels: &[Label]) -> u64 {
    let mut h = splitmix64(master);
    for label in labels {
        h = splitmix64(h.rotate_left(23) ^ label_word(label));
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values_are_frozen() {
        // Changing these breaks reproducibility of stored runs.
        assert_eq!(splitmix64(0), 0xe220_a839_7b1d_cdaf);
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        let a = derive_seed(42, &["facet-curve".into(), 128u64.into()]);
        assert_eq!(a, derive_seed(42, &["facet-curve".into(), 128u64.into()]));
    }

    #[test]
    fn labels_separate_streams() {
        let s = 7;
        let a = derive_seed(s, &[1u64.into(), 2u64.into()]);
        let b = derive_seed(s, &[2u64.into(), 1u64.into()]);
        assert_ne!(a, b);
        assert_ne!(derive_seed(s, &["1".into()]), derive_seed(s, &[1u64.into()]));
        assert_ne!(derive_seed(s, &[]), derive_seed(s + 1, &[]));
    }
}
