//! Scalar abstraction shared by every geometric and statistical routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the library computes in: `f32` or `f64`.
///
/// Besides the arithmetic supplied by `num_traits`, a scalar knows its
/// little-endian byte encoding so that models can be persisted without
/// losing a single bit of the recorded split fractions.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Encoded width in bytes.
    const WIDTH: u8;

    fn write_le(self, out: &mut Vec<u8>);

    /// Decodes from exactly `WIDTH` bytes.
    fn read_le(bytes: &[u8]) -> Self;

    /// Lossy conversion used for hyperparameters and reports.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(Self::nan)
    }

    fn from_count(count: usize) -> Self {
        Self::from_usize(count).unwrap_or_else(Self::infinity)
    }
}

impl Scalar for f32 {
    const WIDTH: u8 = 4;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        let mut raw = [0u8; 4];
        raw.copy_from_slice(&bytes[..4]);
        f32::from_le_bytes(raw)
    }
}

impl Scalar for f64 {
    const WIDTH: u8 = 8;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        let mut raw = [0u8; 8];
        raw.copy_from_slice(&bytes[..8]);
        f64::from_le_bytes(raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_encoding_is_exact() {
        for v in [0.0f64, 1.0, 0.1, f64::MIN_POSITIVE, 0.333_333_333_333_333_3] {
            let mut buf = Vec::new();
            v.write_le(&mut buf);
            assert_eq!(buf.len(), 8);
            assert_eq!(f64::read_le(&buf).to_bits(), v.to_bits());
        }
        let mut buf = Vec::new();
        0.7f32.write_le(&mut buf);
        assert_eq!(f32::read_le(&buf).to_bits(), 0.7f32.to_bits());
    }
}
