use std::path::Path;

use silloc_core::BinaryMask;

use super::{read_file, write_file, DataError, Result};

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(DataError::Pgm(msg.into()))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    /// Skips whitespace and `#` comments.
    fn skip_space(&mut self) {
        while let Some(&c) = self.bytes.get(self.pos) {
            if c == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return err(format!("expected {what}"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .or_else(|_| err(format!("{what} out of range")))
    }
}

/// Decodes a P5 or P2 graymap; a pixel is set iff its value exceeds `threshold`.
pub fn read_mask(bytes: &[u8], threshold: u8) -> Result<BinaryMask> {
    let ascii = match bytes.get(..2) {
        Some(b"P5") => false,
        Some(b"P2") => true,
        _ => return err("not a PGM file (magic must be P5 or P2)"),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    if !cur.bytes.get(2).is_some_and(|c| c.is_ascii_whitespace() || *c == b'#') {
        return err("missing whitespace after magic");
    }
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return err(format!("degenerate size {width}x{height}"));
    }
    if maxval == 0 || maxval > 255 {
        return err(format!("maxval {maxval} not in 1..=255"));
    }
    let n = width as usize * height as usize;
    let values: Vec<u32> = if ascii {
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            v.push(cur.number("pixel value").map_err(|_| DataError::Pgm("truncated payload".into()))?);
        }
        cur.skip_space();
        if cur.pos != bytes.len() {
            return err("trailing data after payload");
        }
        v
    } else {
        if !bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
            return err("missing whitespace after maxval");
        }
        let payload = &bytes[cur.pos + 1..];
        if payload.len() < n {
            return err(format!("truncated payload: {} of {n} bytes", payload.len()));
        }
        if payload.len() > n {
            return err("trailing data after payload");
        }
        payload.iter().map(|&b| b as u32).collect()
    };
    if let Some(v) = values.iter().find(|&&v| v > maxval) {
        return err(format!("pixel value {v} exceeds maxval {maxval}"));
    }
    let t = threshold as u32;
    Ok(BinaryMask::from_fn(width, height, |x, y| values[y as usize * width as usize + x as usize] > t))
}

/// Encodes as binary PGM: 255 for set pixels, 0 elsewhere.
pub fn write_mask(mask: &BinaryMask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.reserve(mask.pixel_count());
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            out.push(if mask.get(x, y) { 255 } else { 0 });
        }
    }
    out
}

pub fn read_mask_file(path: &Path, threshold: u8) -> Result<BinaryMask> {
    read_mask(&read_file(path)?, threshold).map_err(|e| match e {
        DataError::Pgm(msg) => DataError::Pgm(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_mask_file(path: &Path, mask: &BinaryMask) -> Result<()> {
    write_file(path, &write_mask(mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_payload() {
        let mut m = BinaryMask::new(2, 1);
        m.set(0, 0, true);
        assert_eq!(write_mask(&m), b"P5\n2 1\n255\n\xff\x00");
        let empty = write_mask(&BinaryMask::new(3, 2));
        assert!(empty.ends_with(&[0; 6]) && empty.len() == 11 + 6);
    }

    #[test]
    fn threshold_is_strict() {
        let img = b"P5\n4 1\n255\n\x7f\x80\xff\x00";
        let m = read_mask(img, 127).unwrap();
        assert_eq!((0..4).map(|x| m.get(x, 0)).collect::<Vec<_>>(), [false, true, true, false]);
        let all = read_mask(b"P2\n2 2\n255\n255 255\n255 255\n", 127).unwrap();
        assert_eq!(all.count_ones(), 4);
    }

    #[test]
    fn ascii_with_comments() {
        let img = b"P2\n# made by hand\n3 1 # width height\n15\n0 8\n 15\n";
        let m = read_mask(img, 7).unwrap();
        assert_eq!((0..3).map(|x| m.get(x, 0)).collect::<Vec<_>>(), [false, true, true]);
    }

    #[test]
    fn malformed_inputs_rejected() {
        for bad in [
            &b"P6\n1 1\n255\n\x00"[..],
            b"P5\n2 2\n255\n\x00\x00\x00",
            b"P5\n2 2\n255\n\x00\x00\x00\x00\x00",
            b"P5\n0 2\n255\n",
            b"P5\n1 1\n256\n\x00",
            b"P5\n1 1\n100\n\xff",
            b"P5\n1\n",
            b"P2\n2 1\n255\n3\n",
            b"P2\n1 1\n255\n3 4\n",
            b"",
        ] {
            assert!(read_mask(bad, 127).is_err(), "{:?}", String::from_utf8_lossy(bad));
        }
    }

    proptest! {
        #[test]
        fn write_then_read_is_identity(w in 1u32..70, h in 1u32..20, bits in prop::collection::vec(any::<bool>(), 1400)) {
            let m = BinaryMask::from_fn(w, h, |x, y| bits[(y * w + x) as usize]);
            prop_assert_eq!(read_mask(&write_mask(&m), 127).unwrap(), m);
        }
    }
}
