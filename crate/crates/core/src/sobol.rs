//! Sobol low-discrepancy sequence.
//!
//! Direction numbers are the Joe-Kuo `new-joe-kuo-6.21201` set, embedded from
//! `data/sobol_directions.txt`. Points are generated in natural index order,
//! `x_i = XOR of v_k over the set bits k of i`, starting at `i = 1`: the
//! all-zero point at `i = 0` is dropped, so the first 1-D points are
//! `0.5, 0.25, 0.75, 0.125`. Optional scrambling applies a random digital
//! shift (XOR of a random 32-bit word per coordinate).

use std::sync::OnceLock;

use rand::Rng;

use crate::error::{Error, Result};

const BITS: usize = 32;
const TABLE: &str = include_str!("../data/sobol_directions.txt");

struct Primitive {
    degree: usize,
    coeffs: u32,
    m: Vec<u32>,
}

fn table() -> &'static [Primitive] {
    static PARSED: OnceLock<Vec<Primitive>> = OnceLock::new();
    PARSED.get_or_init(|| {
        TABLE
            .lines()
            .skip(1)
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                let nums: Vec<u32> = line.split_whitespace().map(|t| t.parse().expect("numeric table")).collect();
                Primitive { degree: nums[1] as usize, coeffs: nums[2], m: nums[3..].to_vec() }
            })
            .collect()
    })
}

/// Number of dimensions supported by the embedded table.
pub fn max_dimension() -> usize {
    table().len() + 1
}

fn direction_numbers(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let p = &table()[dim - 1];
    let s = p.degree;
    for k in 0..s.min(BITS) {
        v[k] = p.m[k] << (BITS - 1 - k);
    }
    for k in s..BITS {
        let mut x = v[k - s] ^ (v[k - s] >> s);
        for j in 1..s {
            if (p.coeffs >> (s - 1 - j)) & 1 == 1 {
                x ^= v[k - j];
            }
        }
        v[k] = x;
    }
    v
}

/// Generator of points in `[0, 1)^d`.
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
    shift: Vec<u32>,
    index: u64,
}

impl Sobol {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > max_dimension() {
            return Err(Error::SobolDimension { requested: dim, available: max_dimension() });
        }
        Ok(Self { directions: (0..dim).map(direction_numbers).collect(), shift: vec![0; dim], index: 0 })
    }

    /// Sequence with a random digital shift.
    pub fn scrambled<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        let mut s = Self::new(dim)?;
        s.shift = (0..dim).map(|_| rng.random()).collect();
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    /// Point with the given natural index (index 0 is the origin before shifting).
    pub fn point(&self, index: u64) -> Vec<f64> {
        self.directions
            .iter()
            .zip(&self.shift)
            .map(|(v, &shift)| {
                let mut x = shift;
                let mut i = index;
                let mut k = 0;
                while i != 0 {
                    if i & 1 == 1 {
                        x ^= v[k];
                    }
                    i >>= 1;
                    k += 1;
                }
                f64::from(x) / 4_294_967_296.0
            })
            .collect()
    }
}

impl Iterator for Sobol {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.index >= (1u64 << BITS) - 1 {
            return None;
        }
        self.index += 1;
        Some(self.point(self.index))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn first_points_one_dimension() {
        let pts: Vec<f64> = Sobol::new(1).unwrap().take(4).map(|p| p[0]).collect();
        assert_eq!(pts, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn table_covers_twenty_dimensions() {
        assert!(max_dimension() >= 20);
        assert!(Sobol::new(max_dimension()).is_ok());
        assert!(matches!(Sobol::new(max_dimension() + 1), Err(Error::SobolDimension { .. })));
    }

    #[test]
    fn each_coordinate_is_a_permutation_of_dyadic_grid() {
        // The first 2^m points (with origin) hit every cell of width 2^-m once.
        let s = Sobol::new(max_dimension()).unwrap();
        let m = 6;
        for d in 0..s.dim() {
            let mut cells: Vec<u64> = (0..1u64 << m).map(|i| (s.point(i)[d] * 64.0) as u64).collect();
            cells.sort_unstable();
            assert_eq!(cells, (0..64).collect::<Vec<_>>(), "dim {d}");
        }
    }

    #[test]
    fn scrambled_is_seed_deterministic() {
        let a: Vec<_> = Sobol::scrambled(5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap().take(10).collect();
        let b: Vec<_> = Sobol::scrambled(5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap().take(10).collect();
        assert_eq!(a, b);
    }
}
