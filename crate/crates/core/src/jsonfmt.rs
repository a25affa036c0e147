//! JSON serialization with floats at 17 significant digits.
//!
//! 17 significant decimal digits are enough to reconstruct any `f64`
//! exactly, so serializing with this formatter and parsing the result gives
//! back bit-identical values. The default shortest-representation printer
//! would also round-trip, but pinning the digit count makes the byte output
//! independent of formatting library details.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::{Error, Result};

struct SigDigits17;

impl Formatter for SigDigits17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        // One leading digit plus 16 fractional digits: 17 significant.
        write!(writer, "{value:.16e}")
    }
}

/// Serializes any value to a JSON string with exact-round-trip floats.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigits17);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(out).map_err(|e| Error::Serialization(e.to_string()))
}

/// Formats one float with the same convention used in JSON output; CSV
/// writers use this so that all emitted artifacts round-trip exactly.
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        let values = [
            0.1,
            1.0 / 3.0,
            2f64.sqrt(),
            1e-300,
            -7.25,
            0.0,
            3200f64.powf(-0.2),
        ];
        let text = to_json_string(&values.to_vec()).unwrap();
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        for (a, b) in values.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits(), "{a} did not round-trip");
        }
    }

    #[test]
    fn format_is_stable() {
        assert_eq!(format_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(format_f64(1.0 / 3.0), "3.3333333333333331e-1");
    }
}
