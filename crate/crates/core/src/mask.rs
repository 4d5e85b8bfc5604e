//! Binary pixel masks and their text encodings.
//!
//! RLE strings are space-separated run lengths over the row-major pixel order,
//! alternating background/foreground and always starting with a (possibly empty)
//! background run. Only that leading run may be zero.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    width: usize,
    height: usize,
    words: Vec<u64>,
    count: usize,
}

impl fmt::Debug for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mask({}x{}, {} px)", self.width, self.height, self.count)
    }
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            words: vec![0; (width * height).div_ceil(64)],
            count: 0,
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        let mut m = Mask::new(width, height);
        for i in 0..width * height {
            m.set_index(i, true);
        }
        m
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Mask::new(width, height);
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    m.set(x, y, true);
                }
            }
        }
        m
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    /// Number of foreground pixels.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.get_index(y * self.width + x)
    }

    pub fn get_index(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) out of bounds");
        self.set_index(y * self.width + x, on);
    }

    fn set_index(&mut self, i: usize, on: bool) {
        let bit = 1u64 << (i % 64);
        let word = &mut self.words[i / 64];
        let was = *word & bit != 0;
        if on && !was {
            *word |= bit;
            self.count += 1;
        } else if !on && was {
            *word &= !bit;
            self.count -= 1;
        }
    }

    fn check_dims(&self, other: &Mask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(self.dims(), other.dims()));
        }
        Ok(())
    }

    fn combine(&self, other: &Mask, op: impl Fn(u64, u64) -> u64) -> Result<Mask> {
        self.check_dims(other)?;
        let words: Vec<u64> = self.words.iter().zip(&other.words).map(|(&a, &b)| op(a, b)).collect();
        let count = words.iter().map(|w| w.count_ones() as usize).sum();
        Ok(Mask {
            width: self.width,
            height: self.height,
            words,
            count,
        })
    }

    pub fn union(&self, other: &Mask) -> Result<Mask> {
        self.combine(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Mask) -> Result<Mask> {
        self.combine(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &Mask) -> Result<Mask> {
        self.combine(other, |a, b| a & !b)
    }

    pub fn intersection_count(&self, other: &Mask) -> Result<usize> {
        self.check_dims(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(&a, &b)| (a & b).count_ones() as usize)
            .sum())
    }

    pub fn union_count(&self, other: &Mask) -> Result<usize> {
        Ok(self.count + other.count - self.intersection_count(other)?)
    }

    pub fn is_subset_of(&self, other: &Mask) -> Result<bool> {
        Ok(self.intersection_count(other)? == self.count)
    }

    pub fn complement(&self) -> Mask {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        let tail = self.len() % 64;
        if tail != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
        Mask {
            width: self.width,
            height: self.height,
            words,
            count: self.len() - self.count,
        }
    }

    /// Row-major indices of foreground pixels.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.get_index(i))
    }

    /// Tight inclusive box `(x0, y0, x1, y1)` around the foreground.
    pub fn bbox(&self) -> Option<BBox> {
        if self.count == 0 {
            return None;
        }
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for i in self.ones() {
            let (x, y) = (i % self.width, i / self.width);
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        Some(BBox { x0, y0, x1, y1 })
    }

    pub fn encode_rle(&self) -> String {
        encode_rle(self)
    }

    /// Plain-text PBM (P1) rendering for eyeballing masks.
    pub fn to_pbm(&self) -> String {
        let mut out = format!("P1\n{} {}\n", self.width, self.height);
        for y in 0..self.height {
            let row: Vec<&str> = (0..self.width)
                .map(|x| if self.get(x, y) { "1" } else { "0" })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_pbm(text: &str) -> Result<Mask> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        if tokens.next() != Some("P1") {
            return Err(Error::CorruptMask("missing P1 magic".into()));
        }
        let mut dim = || -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| Error::CorruptMask("truncated PBM header".into()))?
                .parse()
                .map_err(|_| Error::CorruptMask("bad PBM dimension".into()))
        };
        let (width, height) = (dim()?, dim()?);
        let mut mask = Mask::new(width, height);
        let mut i = 0;
        for tok in tokens {
            for ch in tok.chars() {
                if i >= width * height {
                    return Err(Error::CorruptMask("too many PBM pixels".into()));
                }
                match ch {
                    '1' => mask.set_index(i, true),
                    '0' => {}
                    _ => return Err(Error::CorruptMask(format!("bad PBM pixel `{ch}`"))),
                }
                i += 1;
            }
        }
        if i != width * height {
            return Err(Error::CorruptMask(format!(
                "expected {} PBM pixels, got {i}",
                width * height
            )));
        }
        Ok(mask)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl BBox {
    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.y0..=self.y1).contains(&y)
    }
}

pub fn encode_rle(mask: &Mask) -> String {
    let mut runs = Vec::new();
    let mut current = false;
    let mut run = 0usize;
    for i in 0..mask.len() {
        let bit = mask.get_index(i);
        if bit != current {
            runs.push(run);
            current = bit;
            run = 0;
        }
        run += 1;
    }
    runs.push(run);
    runs.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

pub fn decode_rle(text: &str, width: usize, height: usize) -> Result<Mask> {
    if width == 0 || height == 0 {
        return Err(Error::CorruptMask("mask dimensions must be positive".into()));
    }
    let total = width * height;
    let mut mask = Mask::new(width, height);
    let mut pos = 0usize;
    for (k, tok) in text.split_whitespace().enumerate() {
        let run: usize = tok
            .parse()
            .map_err(|_| Error::CorruptMask(format!("bad run length `{tok}`")))?;
        if run == 0 && k > 0 {
            return Err(Error::CorruptMask(format!("zero-length run at position {k}")));
        }
        if pos + run > total {
            return Err(Error::CorruptMask(format!("runs exceed {total} pixels")));
        }
        if k % 2 == 1 {
            for i in pos..pos + run {
                mask.set_index(i, true);
            }
        }
        pos += run;
    }
    if pos != total {
        return Err(Error::CorruptMask(format!("runs sum to {pos}, expected {total}")));
    }
    Ok(mask)
}

/// Serialized form `{ "size": [w, h], "counts": "<rle>" }`.
impl Serialize for Mask {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RleMask {
            size: (self.width, self.height),
            counts: encode_rle(self),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Mask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RleMask::deserialize(deserializer)?;
        decode_rle(&raw.counts, raw.size.0, raw.size.1).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct RleMask {
    size: (usize, usize),
    counts: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_background_is_one_run() {
        assert_eq!(encode_rle(&Mask::new(5, 3)), "15");
    }

    #[test]
    fn all_foreground_has_leading_zero() {
        assert_eq!(encode_rle(&Mask::full(2, 2)), "0 4");
    }

    #[test]
    fn checkerboard() {
        // Alternating in scan order: every run has length one.
        let m = Mask::from_fn(4, 4, |x, y| (y * 4 + x) % 2 == 0);
        let rle = encode_rle(&m);
        let runs: Vec<usize> = rle.split(' ').map(|t| t.parse().unwrap()).collect();
        assert_eq!(runs[0], 0);
        assert_eq!(&runs[1..], &[1; 16]);
        assert_eq!(decode_rle(&rle, 4, 4).unwrap(), m);

        // A 2-D checkerboard with even width repeats a value across each row break.
        let board = Mask::from_fn(4, 4, |x, y| (x + y) % 2 == 0);
        assert_eq!(encode_rle(&board), "0 1 1 1 2 1 1 2 1 1 2 1 1 1");
    }

    #[test]
    fn corrupt_run_sums() {
        assert!(matches!(decode_rle("3 4", 3, 3), Err(Error::CorruptMask(_))));
        assert!(matches!(decode_rle("3 4 9", 3, 3), Err(Error::CorruptMask(_))));
        assert!(matches!(decode_rle("3 x", 3, 3), Err(Error::CorruptMask(_))));
        assert!(matches!(decode_rle("3 0 6", 3, 3), Err(Error::CorruptMask(_))));
        assert!(decode_rle("9", 0, 9).is_err());
    }

    #[test]
    fn set_ops_and_counts() {
        let a = Mask::from_fn(4, 4, |x, _| x < 2);
        let b = Mask::from_fn(4, 4, |x, _| x >= 1 && x < 3);
        assert_eq!(a.count(), 8);
        assert_eq!(a.intersection_count(&b).unwrap(), 4);
        assert_eq!(a.union_count(&b).unwrap(), 12);
        assert_eq!(a.union(&b).unwrap().count(), 12);
        assert_eq!(a.difference(&b).unwrap().count(), 4);
        assert_eq!(a.complement().count(), 8);
        assert!(a.intersection(&b).unwrap().is_subset_of(&a).unwrap());
        assert!(a.intersection_count(&Mask::new(3, 4)).is_err());
        assert_eq!(
            a.bbox(),
            Some(BBox {
                x0: 0,
                y0: 0,
                x1: 1,
                y1: 3
            })
        );
        assert_eq!(Mask::new(3, 3).bbox(), None);
    }

    #[test]
    fn complement_of_odd_size_keeps_padding_clear() {
        let m = Mask::new(3, 3).complement();
        assert_eq!(m.count(), 9);
        assert_eq!(m, Mask::full(3, 3));
    }

    #[test]
    fn pbm_example() {
        let m = Mask::from_fn(3, 2, |x, y| x == y);
        assert_eq!(m.to_pbm(), "P1\n3 2\n1 0 0\n0 1 0\n");
        assert!(Mask::from_pbm("P2\n1 1\n0\n").is_err());
        assert!(Mask::from_pbm("P1\n2 1\n0\n").is_err());
    }

    #[test]
    fn serde_shape() {
        let m = Mask::from_fn(2, 2, |x, _| x == 1);
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v, serde_json::json!({"size": [2, 2], "counts": "1 1 1 1"}));
        let back: Mask = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);
    }

    fn arb_mask() -> impl Strategy<Value = Mask> {
        (1usize..40, 1usize..40).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<bool>(), w * h).prop_map(move |bits| {
                let mut m = Mask::new(w, h);
                for (i, b) in bits.into_iter().enumerate() {
                    m.set_index(i, b);
                }
                m
            })
        })
    }

    proptest! {
        #[test]
        fn rle_round_trip(m in arb_mask()) {
            let text = encode_rle(&m);
            let sum: usize = text.split(' ').map(|t| t.parse::<usize>().unwrap()).sum();
            prop_assert_eq!(sum, m.len());
            let back = decode_rle(&text, m.width(), m.height()).unwrap();
            prop_assert_eq!(encode_rle(&back), text);
            prop_assert_eq!(back, m);
        }

        #[test]
        fn pbm_round_trip(m in arb_mask()) {
            prop_assert_eq!(Mask::from_pbm(&m.to_pbm()).unwrap(), m);
        }
    }
}
