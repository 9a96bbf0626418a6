//! Bit-exact file formats for masks, fields and analysis products.
//!
//! * **PGM16** — binary `P5` with maxval 65535, big-endian samples, plus a
//!   `# scale <min> <max>` comment so physical values (radians, meters,
//!   normalized intensity) are recoverable from the quantized payload.
//! * **PBM** — binary `P4`, one bit per pixel, MSB first, rows padded to
//!   whole bytes. Mask value 1 maps to bit 1.
//! * **Raw complex field** — 16-byte header (8-byte magic `OAMFLD01`,
//!   little-endian u32 `nx`, u32 `ny`) followed by row-major interleaved
//!   little-endian f64 real/imag pairs. Round-trips bit-exactly.
//! * **CSV** — header row, one row per radial bin or charge.

use ndarray::Array2;
use num_complex::Complex64;

use crate::analysis::{OamSpectrum, RadialProfile};
use crate::error::{Error, Result};

/// Magic bytes of the raw complex-field format.
pub const FIELD_MAGIC: &[u8; 8] = b"OAMFLD01";

// ---------------------------------------------------------------------------
// PGM16
// ---------------------------------------------------------------------------

/// Quantize real samples to 16-bit PGM, recording the physical range in a
/// `# scale` comment. A constant array encodes as all-zero samples with
/// `min == max`.
pub fn encode_pgm16(values: &Array2<f64>, min: f64, max: f64) -> Result<Vec<u8>> {
    if !(min.is_finite() && max.is_finite()) || max < min {
        return Err(Error::InvalidParameter(format!(
            "bad scale range [{min}, {max}]"
        )));
    }
    let (ny, nx) = values.dim();
    let mut out = Vec::with_capacity(64 + 2 * nx * ny);
    out.extend_from_slice(format!("P5\n# scale {min:e} {max:e}\n{nx} {ny}\n65535\n").as_bytes());
    let span = max - min;
    for &v in values.iter() {
        let q = if span > 0.0 {
            (((v - min) / span) * 65535.0).round().clamp(0.0, 65535.0) as u16
        } else {
            0
        };
        out.extend_from_slice(&q.to_be_bytes());
    }
    Ok(out)
}

/// Decoded PGM16 payload.
pub struct Pgm16 {
    pub values: Array2<f64>,
    pub scale_min: f64,
    pub scale_max: f64,
}

/// Parse a PGM16 file produced by [`encode_pgm16`]. Values are mapped back
/// into the recorded physical range; without a scale comment the raw
/// quantized values in `[0, 1]` are returned.
pub fn parse_pgm16(bytes: &[u8]) -> Result<Pgm16> {
    let mut cursor = 0usize;
    let mut scale: Option<(f64, f64)> = None;

    let mut next_token = |cursor: &mut usize| -> Result<String> {
        // Skip whitespace and comments, capturing any scale comment.
        loop {
            while *cursor < bytes.len() && bytes[*cursor].is_ascii_whitespace() {
                *cursor += 1;
            }
            if *cursor < bytes.len() && bytes[*cursor] == b'#' {
                let start = *cursor;
                while *cursor < bytes.len() && bytes[*cursor] != b'\n' {
                    *cursor += 1;
                }
                let comment = String::from_utf8_lossy(&bytes[start..*cursor]);
                let parts: Vec<&str> = comment.trim_start_matches('#').split_whitespace().collect();
                if parts.len() == 3 && parts[0] == "scale" {
                    if let (Ok(a), Ok(b)) = (parts[1].parse(), parts[2].parse()) {
                        scale = Some((a, b));
                    }
                }
                continue;
            }
            break;
        }
        let start = *cursor;
        while *cursor < bytes.len() && !bytes[*cursor].is_ascii_whitespace() {
            *cursor += 1;
        }
        if start == *cursor {
            return Err(Error::Format("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*cursor]).into_owned())
    };

    let magic = next_token(&mut cursor)?;
    if magic != "P5" {
        return Err(Error::Format(format!(
            "expected PGM magic \"P5\", found {magic:?}"
        )));
    }
    let nx: usize = next_token(&mut cursor)?
        .parse()
        .map_err(|_| Error::Format("bad PGM width".into()))?;
    let ny: usize = next_token(&mut cursor)?
        .parse()
        .map_err(|_| Error::Format("bad PGM height".into()))?;
    let maxval: u32 = next_token(&mut cursor)?
        .parse()
        .map_err(|_| Error::Format("bad PGM maxval".into()))?;
    if maxval != 65535 {
        return Err(Error::Format(format!(
            "expected 16-bit PGM (maxval 65535), found {maxval}"
        )));
    }
    // Single whitespace byte after maxval.
    cursor += 1;
    let need = 2 * nx * ny;
    if bytes.len() < cursor + need {
        return Err(Error::Format(format!(
            "PGM payload truncated: need {need} bytes, have {}",
            bytes.len().saturating_sub(cursor)
        )));
    }
    let (min, max) = scale.unwrap_or((0.0, 1.0));
    let span = max - min;
    let mut values = Array2::zeros((ny, nx));
    for (i, v) in values.iter_mut().enumerate() {
        let hi = bytes[cursor + 2 * i] as u16;
        let lo = bytes[cursor + 2 * i + 1] as u16;
        let q = (hi << 8) | lo;
        *v = min + span * (q as f64 / 65535.0);
    }
    Ok(Pgm16 {
        values,
        scale_min: min,
        scale_max: max,
    })
}

// ---------------------------------------------------------------------------
// PBM
// ---------------------------------------------------------------------------

/// Pack a `{0, 1}` mask into binary PBM (P4).
pub fn encode_pbm(values: &Array2<u8>) -> Vec<u8> {
    let (ny, nx) = values.dim();
    let mut out = format!("P4\n{nx} {ny}\n").into_bytes();
    let row_bytes = nx.div_ceil(8);
    for row in values.rows() {
        let mut packed = vec![0u8; row_bytes];
        for (i, &v) in row.iter().enumerate() {
            if v != 0 {
                packed[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out.extend_from_slice(&packed);
    }
    out
}

/// Parse a binary PBM (P4) file into a `{0, 1}` array.
pub fn parse_pbm(bytes: &[u8]) -> Result<Array2<u8>> {
    let mut cursor = 0usize;
    let next_token = |cursor: &mut usize| -> Result<String> {
        loop {
            while *cursor < bytes.len() && bytes[*cursor].is_ascii_whitespace() {
                *cursor += 1;
            }
            if *cursor < bytes.len() && bytes[*cursor] == b'#' {
                while *cursor < bytes.len() && bytes[*cursor] != b'\n' {
                    *cursor += 1;
                }
                continue;
            }
            break;
        }
        let start = *cursor;
        while *cursor < bytes.len() && !bytes[*cursor].is_ascii_whitespace() {
            *cursor += 1;
        }
        if start == *cursor {
            return Err(Error::Format("truncated PBM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*cursor]).into_owned())
    };
    let magic = next_token(&mut cursor)?;
    if magic != "P4" {
        return Err(Error::Format(format!(
            "expected PBM magic \"P4\", found {magic:?}"
        )));
    }
    let nx: usize = next_token(&mut cursor)?
        .parse()
        .map_err(|_| Error::Format("bad PBM width".into()))?;
    let ny: usize = next_token(&mut cursor)?
        .parse()
        .map_err(|_| Error::Format("bad PBM height".into()))?;
    cursor += 1;
    let row_bytes = nx.div_ceil(8);
    if bytes.len() < cursor + row_bytes * ny {
        return Err(Error::Format("PBM payload truncated".into()));
    }
    let mut values = Array2::zeros((ny, nx));
    for iy in 0..ny {
        let row = &bytes[cursor + iy * row_bytes..cursor + (iy + 1) * row_bytes];
        for ix in 0..nx {
            let bit = (row[ix / 8] >> (7 - ix % 8)) & 1;
            values[[iy, ix]] = bit;
        }
    }
    Ok(values)
}

// ---------------------------------------------------------------------------
// Raw complex fields
// ---------------------------------------------------------------------------

/// Serialize a complex array to the raw field format.
pub fn encode_raw_field(values: &Array2<Complex64>) -> Vec<u8> {
    let (ny, nx) = values.dim();
    let mut out = Vec::with_capacity(16 + 16 * nx * ny);
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&(nx as u32).to_le_bytes());
    out.extend_from_slice(&(ny as u32).to_le_bytes());
    for v in values.iter() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

/// Parse the raw field format back into a complex array.
pub fn parse_raw_field(bytes: &[u8]) -> Result<Array2<Complex64>> {
    if bytes.len() < 16 {
        return Err(Error::Format(format!(
            "raw field header truncated; expected magic {:?}",
            String::from_utf8_lossy(FIELD_MAGIC)
        )));
    }
    if &bytes[..8] != FIELD_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&bytes[..8]),
            String::from_utf8_lossy(FIELD_MAGIC)
        )));
    }
    let nx = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let ny = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let need = 16 + 16 * nx * ny;
    if bytes.len() != need {
        return Err(Error::Format(format!(
            "raw field payload: expected {need} bytes for {nx}x{ny}, have {}",
            bytes.len()
        )));
    }
    let mut values = Array2::zeros((ny, nx));
    for (i, v) in values.iter_mut().enumerate() {
        let off = 16 + 16 * i;
        let re = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        let im = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
        *v = Complex64::new(re, im);
    }
    Ok(values)
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Radial profile as CSV: one row per bin.
pub fn profile_to_csv(profile: &RadialProfile) -> String {
    let mut s = String::from("radius_m,intensity,pixel_count\n");
    for ((r, v), c) in profile
        .bin_centers
        .iter()
        .zip(profile.values.iter())
        .zip(profile.counts.iter())
    {
        s.push_str(&format!("{r:e},{v:e},{c}\n"));
    }
    s
}

/// OAM spectrum as CSV: one row per charge.
pub fn spectrum_to_csv(spectrum: &OamSpectrum) -> String {
    let mut s = String::from("ell,power\n");
    for (i, p) in spectrum.power.iter().enumerate() {
        let ell = spectrum.ell_min + i as i32;
        s.push_str(&format!("{ell},{p:e}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm16_roundtrip_preserves_scale_and_shape() {
        let values = Array2::from_shape_fn((8, 12), |(i, j)| (i * 12 + j) as f64 * 0.5 - 3.0);
        let min = -3.0;
        let max = values.iter().copied().fold(f64::MIN, f64::max);
        let bytes = encode_pgm16(&values, min, max).unwrap();
        let parsed = parse_pgm16(&bytes).unwrap();
        assert_eq!(parsed.values.dim(), (8, 12));
        assert_eq!(parsed.scale_min, min);
        assert_eq!(parsed.scale_max, max);
        let span = max - min;
        for (a, b) in values.iter().zip(parsed.values.iter()) {
            assert!((a - b).abs() <= span / 65535.0);
        }
    }

    #[test]
    fn pgm16_binary_payload_has_two_levels() {
        let values = Array2::from_shape_fn((4, 4), |(i, _)| if i % 2 == 0 { 0.0 } else { 3.5 });
        let bytes = encode_pgm16(&values, 0.0, 3.5).unwrap();
        let parsed = parse_pgm16(&bytes).unwrap();
        let mut distinct: Vec<u64> = parsed
            .values
            .iter()
            .map(|v| (v * 1e6).round() as u64)
            .collect();
        distinct.sort_unstable();
        distinct.dedup();
        assert_eq!(distinct.len(), 2);
    }

    #[test]
    fn pgm16_rejects_truncation_and_bad_magic() {
        let values = Array2::zeros((4, 4));
        let bytes = encode_pgm16(&values, 0.0, 1.0).unwrap();
        assert!(parse_pgm16(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[1] = b'6';
        assert!(parse_pgm16(&bad).is_err());
    }

    #[test]
    fn pbm_roundtrip_bit_exact() {
        // Width deliberately not a byte multiple.
        let values = Array2::from_shape_fn((5, 13), |(i, j)| ((i * 13 + j) % 3 == 0) as u8);
        let bytes = encode_pbm(&values);
        let parsed = parse_pbm(&bytes).unwrap();
        assert_eq!(values, parsed);
    }

    #[test]
    fn raw_field_roundtrip_bit_exact() {
        let values = Array2::from_shape_fn((6, 9), |(i, j)| {
            Complex64::new(
                (i as f64 * 1.7 + j as f64).sin() * 1e-7,
                (j as f64 - 3.3 * i as f64).cos() * 12.0,
            )
        });
        let bytes = encode_raw_field(&values);
        let parsed = parse_raw_field(&bytes).unwrap();
        assert_eq!(values, parsed);
        // Bit-exact encoding: re-encoding gives identical bytes.
        assert_eq!(bytes, encode_raw_field(&parsed));
    }

    #[test]
    fn raw_field_rejects_corruption() {
        let values = Array2::from_elem((4, 4), Complex64::new(1.0, -1.0));
        let bytes = encode_raw_field(&values);
        assert!(parse_raw_field(&bytes[..10]).is_err());
        assert!(parse_raw_field(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        let err = parse_raw_field(&bad).unwrap_err();
        assert!(err.to_string().contains("OAMFLD01"));
    }
}
