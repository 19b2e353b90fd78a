//! Seeded rational probe points.
//!
//! A symbol's value depends only on the seed, the point index and the
//! symbol's name, so evaluation order and threading do not change results.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::poly::Q;
use super::symbol::{Sym, SymKind};

fn fnv(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// A point of the extended coordinate space with trig pairs on the unit
/// circle.
#[derive(Clone, Debug)]
pub struct ProbePoint {
    seed: u64,
    index: u64,
    cache: HashMap<Sym, Q>,
}

impl ProbePoint {
    pub fn new(seed: u64, index: u64) -> Self {
        ProbePoint { seed, index, cache: HashMap::new() }
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    fn rng(&self, tag: &str) -> ChaCha8Rng {
        let h = fnv(tag.as_bytes()) ^ self.seed.rotate_left(17) ^ self.index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        ChaCha8Rng::seed_from_u64(h)
    }

    /// Rational in `[-10, 10]` with denominator at most 97.
    fn small_rational(rng: &mut ChaCha8Rng) -> Q {
        let d: i64 = rng.gen_range(1..=97);
        let n: i64 = rng.gen_range(-10 * d..=10 * d);
        Q::new(BigInt::from(n), BigInt::from(d))
    }

    fn circle(&self, arg: Sym) -> (Q, Q) {
        let mut rng = self.rng(&format!("circle:{}", arg.name()));
        let r = Self::small_rational(&mut rng);
        let one = Q::one();
        let r2 = &r * &r;
        let den = &one + &r2;
        let s = (Q::from_integer(2.into()) * &r) / &den;
        let c = (&one - &r2) / &den;
        (s, c)
    }

    pub fn value(&mut self, s: Sym) -> Q {
        if let Some(v) = self.cache.get(&s) {
            return v.clone();
        }
        let v = match s.kind() {
            SymKind::Sin(a) => self.circle(a).0,
            SymKind::Cos(a) => self.circle(a).1,
            SymKind::Exp(_) => {
                let mut rng = self.rng(&s.name());
                let d: i64 = rng.gen_range(1..=97);
                let n: i64 = rng.gen_range(1..=10 * d);
                Q::new(BigInt::from(n), BigInt::from(d))
            }
            _ => Self::small_rational(&mut self.rng(&s.name())),
        };
        self.cache.insert(s, v.clone());
        v
    }

    /// Pins a symbol to a given value.
    pub fn set(&mut self, s: Sym, v: Q) {
        self.cache.insert(s, v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_are_reproducible_and_on_circle() {
        let a = Sym::coord("probe_a");
        let mut p = ProbePoint::new(7, 0);
        let mut q = ProbePoint::new(7, 0);
        assert_eq!(p.value(a), q.value(a));
        let s = p.value(Sym::sin_of(a));
        let c = p.value(Sym::cos_of(a));
        assert_eq!(&s * &s + &c * &c, Q::one());
    }
}
