//! Fixed-resolution binary images.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Row-major bit image; a set bit marks a building pixel.
///
/// Each row occupies a whole number of `u64` words. Padding bits past
/// `width` are always zero, so word-wise popcounts equal pixel counts.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    words_per_row: usize,
    words: Vec<u64>,
}

impl core::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("BinaryMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("ones", &self.count_ones())
            .finish()
    }
}

impl BinaryMask {
    /// All-zero mask. Panics on a zero dimension.
    pub fn new(width: u32, height: u32) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        let words_per_row = (width as usize).div_ceil(64);
        BinaryMask {
            width,
            height,
            words_per_row,
            words: vec![0; words_per_row * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut m = BinaryMask::new(width, height);
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    m.set(x, y, true);
                }
            }
        }
        m
    }

    /// Builds a mask from one `bool` per pixel in row-major order.
    pub fn from_pixels(width: u32, height: u32, pixels: &[bool]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("mask dimensions must be positive".into()));
        }
        if pixels.len() != width as usize * height as usize {
            return Err(Error::InvalidParameter("pixel count does not match dimensions".into()));
        }
        Ok(BinaryMask::from_fn(width, height, |x, y| {
            pixels[y as usize * width as usize + x as usize]
        }))
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn same_dims(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims()
    }

    pub(crate) fn check_dims(&self, other: &BinaryMask) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                a_width: self.width,
                a_height: self.height,
                b_width: other.width,
                b_height: other.height,
            })
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        debug_assert!(x < self.width && y < self.height);
        let w = self.words[y as usize * self.words_per_row + (x as usize >> 6)];
        (w >> (x & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        debug_assert!(x < self.width && y < self.height);
        let w = &mut self.words[y as usize * self.words_per_row + (x as usize >> 6)];
        let bit = 1u64 << (x & 63);
        if value {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    /// Sets pixels `x0..x1` of row `y`. Bounds must already be clamped.
    #[inline]
    pub(crate) fn fill_span(&mut self, y: usize, x0: usize, x1: usize) {
        if x0 >= x1 {
            return;
        }
        let row = &mut self.words[y * self.words_per_row..(y + 1) * self.words_per_row];
        let (w0, b0) = (x0 >> 6, x0 & 63);
        let (w1, b1) = ((x1 - 1) >> 6, (x1 - 1) & 63);
        let lo = !0u64 << b0;
        let hi = !0u64 >> (63 - b1);
        if w0 == w1 {
            row[w0] |= lo & hi;
        } else {
            row[w0] |= lo;
            for w in &mut row[w0 + 1..w1] {
                *w = !0;
            }
            row[w1] |= hi;
        }
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Fraction of set pixels.
    pub fn coverage(&self) -> f64 {
        self.count_ones() as f64 / self.pixel_count() as f64
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    fn zip_with(&self, other: &BinaryMask, op: impl Fn(u64, u64) -> u64) -> Result<BinaryMask> {
        self.check_dims(other)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(BinaryMask {
            words,
            ..self.clone()
        })
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn xor(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a ^ b)
    }

    /// Each output pixel is set when at least two of its 2x2 source pixels are.
    ///
    /// Requires even dimensions.
    pub fn downsample_majority(&self) -> Result<BinaryMask> {
        if !self.width.is_multiple_of(2) || !self.height.is_multiple_of(2) {
            return Err(Error::InvalidParameter(alloc::format!(
                "cannot 2x2-downsample a {}x{} mask",
                self.width,
                self.height
            )));
        }
        let (w, h) = (self.width / 2, self.height / 2);
        Ok(BinaryMask::from_fn(w, h, |x, y| {
            let n = self.get(2 * x, 2 * y) as u8
                + self.get(2 * x + 1, 2 * y) as u8
                + self.get(2 * x, 2 * y + 1) as u8
                + self.get(2 * x + 1, 2 * y + 1) as u8;
            n >= 2
        }))
    }

    /// Iterates pixels in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| self.get(x, y)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_fill_matches_per_pixel_set() {
        for (x0, x1) in [(0, 1), (3, 64), (63, 65), (0, 130), (64, 128), (127, 130), (5, 5)] {
            let mut a = BinaryMask::new(130, 2);
            a.fill_span(1, x0, x1);
            let b = BinaryMask::from_fn(130, 2, |x, y| y == 1 && (x0..x1).contains(&(x as usize)));
            assert_eq!(a, b, "span {x0}..{x1}");
        }
    }

    #[test]
    fn majority_downsample_ties_set() {
        let m = BinaryMask::from_pixels(2, 2, &[true, true, false, false]).unwrap();
        assert!(m.downsample_majority().unwrap().get(0, 0));
        let m = BinaryMask::from_pixels(2, 2, &[true, false, false, false]).unwrap();
        assert!(!m.downsample_majority().unwrap().get(0, 0));
        assert!(BinaryMask::new(3, 2).downsample_majority().is_err());
    }

    #[test]
    fn set_ops_require_equal_dims() {
        let a = BinaryMask::new(4, 4);
        let b = BinaryMask::new(4, 5);
        assert!(matches!(a.xor(&b), Err(Error::DimensionMismatch { .. })));
    }
}
