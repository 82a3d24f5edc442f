//! Binary extension fields GF(2^l) for l <= 64, elements packed in a `u64`.

use super::AuthError;

/// `(degree, low coefficients)`: the modulus is `x^degree + low`.
const MODULI: &[(u32, u64)] = &[
    (1, 0x0),
    (2, 0x3),
    (3, 0x3),
    (4, 0x3),
    (5, 0x5),
    (6, 0x3),
    (7, 0x3),
    (8, 0x1b),
    (16, 0x2b),
    (32, 0x8d),
    (64, 0x1b),
];

pub fn supported_degrees() -> impl Iterator<Item = u32> {
    MODULI.iter().map(|&(d, _)| d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gf2Field {
    degree: u32,
    low: u64,
}

impl Gf2Field {
    pub fn new(degree: u32) -> Result<Self, AuthError> {
        MODULI
            .iter()
            .find(|&&(d, _)| d == degree)
            .map(|&(degree, low)| Self { degree, low })
            .ok_or(AuthError::UnsupportedTagLength(degree as usize))
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// The modulus as a bit pattern, leading term included.
    pub fn modulus(&self) -> u128 {
        (1u128 << self.degree) | self.low as u128
    }

    pub fn order(&self) -> u128 {
        1u128 << self.degree
    }

    pub fn mask(&self) -> u64 {
        if self.degree == 64 {
            u64::MAX
        } else {
            (1u64 << self.degree) - 1
        }
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        a ^ b
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        let mut prod: u128 = 0;
        let (a, mut b) = (a as u128, b);
        let mut i = 0;
        while b != 0 {
            if b & 1 == 1 {
                prod ^= a << i;
            }
            b >>= 1;
            i += 1;
        }
        self.reduce(prod)
    }

    fn reduce(&self, mut p: u128) -> u64 {
        let d = self.degree;
        let m = self.modulus();
        while p >> d != 0 {
            let top = 127 - p.leading_zeros();
            p ^= m << (top - d);
        }
        p as u64
    }

    pub fn pow(&self, mut a: u64, mut e: u128) -> u64 {
        let mut acc = 1u64 & self.mask();
        if self.degree == 1 {
            acc = 1;
        }
        while e != 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via `a^(2^l - 2)`.
    pub fn inv(&self, a: u64) -> Option<u64> {
        if a == 0 {
            None
        } else {
            Some(self.pow(a, self.order() - 2))
        }
    }
}
