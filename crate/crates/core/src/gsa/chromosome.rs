//! Binary encoding of perturbation points: each coordinate becomes its 32-bit
//! single-precision pattern, most significant bit first, concatenated
//! x, y, z per point in point order.

use std::fmt;

use crate::error::{Error, Result};
use crate::pointcloud::{Point3, PointCloud};

pub const BITS_PER_COORD: usize = 32;
pub const BITS_PER_POINT: usize = 3 * BITS_PER_COORD;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    words: Vec<u32>,
}

impl Chromosome {
    pub fn from_words(words: Vec<u32>) -> Self {
        Self { words }
    }

    pub fn zeros(n0: usize) -> Self {
        Self {
            words: vec![0; 3 * n0],
        }
    }

    pub fn words(&self) -> &[u32] {
        &self.words
    }

    /// Length in bits.
    pub fn len(&self) -> usize {
        self.words.len() * BITS_PER_COORD
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        (self.words[i / 32] >> (31 - i % 32)) & 1 == 1
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.words[i / 32] ^= 1 << (31 - i % 32);
    }

    /// `self[..cut] ++ other[cut..]`.
    pub fn splice(&self, other: &Chromosome, cut: usize) -> Chromosome {
        debug_assert_eq!(self.len(), other.len());
        let (w, o) = (cut / 32, cut % 32);
        let mut words = Vec::with_capacity(self.words.len());
        words.extend_from_slice(&self.words[..w]);
        if w < self.words.len() {
            if o == 0 {
                words.extend_from_slice(&other.words[w..]);
            } else {
                let keep = !0u32 << (32 - o);
                words.push((self.words[w] & keep) | (other.words[w] & !keep));
                words.extend_from_slice(&other.words[w + 1..]);
            }
        }
        Chromosome { words }
    }

    pub fn hamming(&self, other: &Chromosome) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    /// Big-endian hex, eight digits per coordinate.
    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = self.words.iter().flat_map(|w| w.to_be_bytes()).collect();
        hex::encode(bytes)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::arg(format!("bad chromosome hex: {e}")))?;
        if bytes.len() % 4 != 0 {
            return Err(Error::arg("chromosome hex is not a whole number of words"));
        }
        Ok(Self {
            words: bytes
                .chunks_exact(4)
                .map(|c| u32::from_be_bytes(c.try_into().unwrap()))
                .collect(),
        })
    }
}

impl fmt::Debug for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Chromosome({})", self.to_hex())
    }
}

/// Encodes point coordinates; values are narrowed to `f32`.
pub fn encode(points: &PointCloud) -> Result<Chromosome> {
    let mut words = Vec::with_capacity(points.len() * 3);
    for (i, p) in points.iter().enumerate() {
        for v in [p.x, p.y, p.z] {
            let f = v as f32;
            if !f.is_finite() {
                return Err(Error::arg(format!("point {i} has a coordinate not representable as f32")));
            }
            words.push(f.to_bits());
        }
    }
    Ok(Chromosome { words })
}

/// Result of decoding; points listed in `flagged` hold NaN/Inf patterns and
/// must be repaired before use.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub cloud: PointCloud,
    pub flagged: Vec<usize>,
}

impl Decoded {
    pub fn needs_repair(&self) -> bool {
        !self.flagged.is_empty()
    }
}

pub fn decode(chromosome: &Chromosome, n0: usize) -> Result<Decoded> {
    if chromosome.len() != n0 * BITS_PER_POINT {
        return Err(Error::arg(format!(
            "chromosome has {} bits, expected {} for {n0} points",
            chromosome.len(),
            n0 * BITS_PER_POINT
        )));
    }
    let mut cloud = PointCloud::default();
    let mut flagged = Vec::new();
    for (i, w) in chromosome.words.chunks_exact(3).enumerate() {
        let [x, y, z] = [w[0], w[1], w[2]].map(f32::from_bits);
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            flagged.push(i);
        }
        cloud.points.push(Point3::new(x as f64, y as f64, z as f64));
    }
    Ok(Decoded { cloud, flagged })
}
