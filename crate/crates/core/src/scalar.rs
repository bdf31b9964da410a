//! Scalar abstraction shared by the incentive math, ledgers and event log.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real number type the protocol is generic over (`f32` or `f64`).
///
/// Besides arithmetic, a scalar knows its canonical byte encoding: the
/// IEEE-754 bit pattern in big-endian order. Hashing and the text event log
/// both go through the bit pattern so values survive a round trip exactly.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Width of the canonical encoding in bytes.
    const BYTES: usize;

    fn write_be(self, out: &mut Vec<u8>);

    /// Lowercase hex of the bit pattern, `2 * BYTES` characters.
    fn to_bits_hex(self) -> String;

    /// Strict inverse of [`Scalar::to_bits_hex`]: exact length, lowercase only.
    fn from_bits_hex(s: &str) -> Option<Self>;

    /// Converts a literal; panics only for values the type cannot hold.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }
}

fn strict_hex(s: &str, width: usize) -> Option<u64> {
    if s.len() != width || !s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
        return None;
    }
    u64::from_str_radix(s, 16).ok()
}

impl Scalar for f64 {
    const BYTES: usize = 8;

    fn write_be(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_bits().to_be_bytes());
    }

    fn to_bits_hex(self) -> String {
        format!("{:016x}", self.to_bits())
    }

    fn from_bits_hex(s: &str) -> Option<Self> {
        strict_hex(s, 16).map(f64::from_bits)
    }
}

impl Scalar for f32 {
    const BYTES: usize = 4;

    fn write_be(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_bits().to_be_bytes());
    }

    fn to_bits_hex(self) -> String {
        format!("{:08x}", self.to_bits())
    }

    fn from_bits_hex(s: &str) -> Option<Self> {
        strict_hex(s, 8).map(|b| f32::from_bits(b as u32))
    }
}

/// Serde adapter writing a scalar as its hex bit pattern.
pub mod hexbits {
    use super::Scalar;
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Scalar, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_bits_hex())
    }

    pub fn deserialize<'de, T: Scalar, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
        let s = String::deserialize(d)?;
        T::from_bits_hex(&s).ok_or_else(|| D::Error::custom(format!("bad real encoding {s:?}")))
    }

    pub mod option {
        use super::Scalar;
        use serde::de::Error;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<T: Scalar, S: Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => s.serialize_some(&v.to_bits_hex()),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, T: Scalar, D: Deserializer<'de>>(
            d: D,
        ) -> Result<Option<T>, D::Error> {
            match Option::<String>::deserialize(d)? {
                None => Ok(None),
                Some(s) => T::from_bits_hex(&s)
                    .map(Some)
                    .ok_or_else(|| D::Error::custom(format!("bad real encoding {s:?}"))),
            }
        }
    }
}
