//! Arithmetic in prime fields GF(q).
//!
//! Symbols are stored as raw `u8` residues; [`FieldSpec`] carries the modulus
//! and does the arithmetic on them. [`FieldElement`] pairs a residue with its
//! field for call sites that want mismatches caught at runtime.

use core::fmt;

use thiserror::Error;

/// A field symbol: a residue in `[0, q)`.
pub type Symbol = u8;

/// Largest prime that fits a [`Symbol`].
pub const MAX_PRIME: u32 = 251;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("field size {0} is not prime")]
    NotPrime(u32),
    #[error("field size {0} exceeds the supported maximum {MAX_PRIME}")]
    TooLarge(u32),
    #[error("operands belong to different fields (GF({0}) and GF({1}))")]
    Mismatch(u32, u32),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("value {value} is not a residue modulo {q}")]
    OutOfRange { value: u32, q: u32 },
}

/// The prime field GF(q).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldSpec {
    q: u8,
}

pub(crate) fn is_prime(q: u32) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= q {
        if q % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl FieldSpec {
    pub fn new(q: u32) -> Result<Self, FieldError> {
        if q > MAX_PRIME {
            return Err(FieldError::TooLarge(q));
        }
        if !is_prime(q) {
            return Err(FieldError::NotPrime(q));
        }
        Ok(FieldSpec { q: q as u8 })
    }

    /// GF(2).
    pub const fn binary() -> Self {
        FieldSpec { q: 2 }
    }

    #[inline]
    pub fn q(self) -> u32 {
        self.q as u32
    }

    #[inline]
    pub fn is_binary(self) -> bool {
        self.q == 2
    }

    pub fn element(self, value: u32) -> Result<FieldElement, FieldError> {
        if value >= self.q() {
            return Err(FieldError::OutOfRange { value, q: self.q() });
        }
        Ok(FieldElement { value: value as u8, field: self })
    }

    pub fn zero(self) -> FieldElement {
        FieldElement { value: 0, field: self }
    }

    pub fn one(self) -> FieldElement {
        FieldElement { value: 1, field: self }
    }

    #[inline]
    pub fn add(self, a: Symbol, b: Symbol) -> Symbol {
        let s = a as u16 + b as u16;
        let q = self.q as u16;
        (if s >= q { s - q } else { s }) as u8
    }

    #[inline]
    pub fn sub(self, a: Symbol, b: Symbol) -> Symbol {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn neg(self, a: Symbol) -> Symbol {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(self, a: Symbol, b: Symbol) -> Symbol {
        ((a as u16 * b as u16) % self.q as u16) as u8
    }

    pub fn pow(self, a: Symbol, mut e: u32) -> Symbol {
        let mut base = a;
        let mut acc: Symbol = 1 % self.q;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(self, a: Symbol) -> Result<Symbol, FieldError> {
        if a % self.q == 0 {
            return Err(FieldError::ZeroInverse);
        }
        Ok(self.pow(a, self.q() - 2))
    }

    /// `y += s * x` over the field, elementwise.
    pub fn axpy(self, y: &mut [Symbol], s: Symbol, x: &[Symbol]) {
        debug_assert_eq!(y.len(), x.len());
        if s == 0 {
            return;
        }
        if s == 1 {
            for (yi, &xi) in y.iter_mut().zip(x) {
                *yi = self.add(*yi, xi);
            }
        } else {
            for (yi, &xi) in y.iter_mut().zip(x) {
                *yi = self.add(*yi, self.mul(s, xi));
            }
        }
    }

    /// Number of nonzero entries.
    pub fn weight(self, v: &[Symbol]) -> usize {
        v.iter().filter(|&&x| x != 0).count()
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.q)
    }
}

/// A residue tagged with its field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u8,
    field: FieldSpec,
}

impl FieldElement {
    #[inline]
    pub fn value(self) -> Symbol {
        self.value
    }

    #[inline]
    pub fn field(self) -> FieldSpec {
        self.field
    }

    fn same_field(self, other: FieldElement) -> Result<FieldSpec, FieldError> {
        if self.field != other.field {
            return Err(FieldError::Mismatch(self.field.q(), other.field.q()));
        }
        Ok(self.field)
    }

    pub fn add(self, other: FieldElement) -> Result<FieldElement, FieldError> {
        let f = self.same_field(other)?;
        Ok(FieldElement { value: f.add(self.value, other.value), field: f })
    }

    pub fn sub(self, other: FieldElement) -> Result<FieldElement, FieldError> {
        let f = self.same_field(other)?;
        Ok(FieldElement { value: f.sub(self.value, other.value), field: f })
    }

    pub fn mul(self, other: FieldElement) -> Result<FieldElement, FieldError> {
        let f = self.same_field(other)?;
        Ok(FieldElement { value: f.mul(self.value, other.value), field: f })
    }

    pub fn neg(self) -> FieldElement {
        FieldElement { value: self.field.neg(self.value), field: self.field }
    }

    pub fn inv(self) -> Result<FieldElement, FieldError> {
        Ok(FieldElement { value: self.field.inv(self.value)?, field: self.field })
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(q: u32, v: u32) -> FieldElement {
        FieldSpec::new(q).unwrap().element(v).unwrap()
    }

    #[test]
    fn construction_checks_primality() {
        assert!(FieldSpec::new(2).is_ok());
        assert!(FieldSpec::new(13).is_ok());
        assert_eq!(FieldSpec::new(1), Err(FieldError::NotPrime(1)));
        assert_eq!(FieldSpec::new(4), Err(FieldError::NotPrime(4)));
        assert_eq!(FieldSpec::new(9), Err(FieldError::NotPrime(9)));
        assert_eq!(FieldSpec::new(257), Err(FieldError::TooLarge(257)));
        assert!(FieldSpec::new(251).is_ok());
        assert!(FieldSpec::new(5).unwrap().element(5).is_err());
    }

    #[test]
    fn small_examples() {
        assert_eq!(el(2, 1).add(el(2, 1)).unwrap().value(), 0);
        assert_eq!(el(5, 3).add(el(5, 4)).unwrap().value(), 2);
        assert_eq!(el(3, 0).add(el(3, 2)).unwrap().value(), 2);
        assert_eq!(el(5, 2).inv().unwrap().value(), 3);
        assert_eq!(el(7, 3).mul(el(7, 5)).unwrap().value(), 1);
        assert_eq!(el(3, 1).neg().value(), 2);
    }

    #[test]
    fn errors() {
        assert_eq!(el(3, 1).add(el(5, 1)), Err(FieldError::Mismatch(3, 5)));
        assert_eq!(el(7, 0).inv(), Err(FieldError::ZeroInverse));
    }

    #[test]
    fn field_axioms_exhaustive() {
        for q in [2u32, 3, 5, 7, 11, 13] {
            let f = FieldSpec::new(q).unwrap();
            for a in 0..q as u8 {
                assert_eq!(f.add(a, f.neg(a)), 0);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
                for b in 0..q as u8 {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    assert_eq!(f.sub(f.add(a, b), b), a);
                    for c in 0..q as u8 {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
    }
}
