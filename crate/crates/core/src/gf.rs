//! Arithmetic over GF(q) for prime-power `q`.
//!
//! Elements are encoded as integers in `[0, q)`. For an extension field
//! GF(p^m) the base-`p` digits of the integer are the polynomial coefficients
//! (least significant digit = constant term). Multiplication goes through
//! log/antilog tables built once per field; addition is digit-wise mod `p`.
//!
//! The reduction polynomial is the smallest monic irreducible of degree `m`
//! when its lower coefficients are read as a base-`p` integer, so the same
//! `q` always yields the same field.

use crate::error::{Error, Result};

/// Largest field order for which tables are built.
pub const MAX_ORDER: u32 = 1 << 16;

/// Canonical integer representative of a field element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldElement(pub u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    pub fn repr(self) -> u32 {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct FieldSpec {
    q: u32,
    p: u32,
    m: u32,
    /// Monic reduction polynomial, coefficients low to high (length m+1).
    /// `[0, 1]` (i.e. `x`) for prime fields, where it is unused.
    modulus: Vec<u32>,
    exp: Vec<u32>,
    log: Vec<u32>,
}

impl FieldSpec {
    /// Builds GF(q). Fails with [`Error::NotPrimePower`] unless `q = p^m`.
    pub fn new(q: u32) -> Result<Self> {
        if !(2..=MAX_ORDER).contains(&q) {
            return Err(Error::NotPrimePower(q));
        }
        let (p, m) = prime_power(q).ok_or(Error::NotPrimePower(q))?;
        let modulus = if m == 1 {
            vec![0, 1]
        } else {
            smallest_irreducible(p, m)
        };
        let mut field = FieldSpec {
            q,
            p,
            m,
            modulus,
            exp: Vec::new(),
            log: Vec::new(),
        };
        field.build_tables();
        Ok(field)
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    /// Reduction polynomial coefficients, constant term first.
    pub fn reduction(&self) -> &[u32] {
        &self.modulus
    }

    /// The `i`-th element in canonical order.
    pub fn element(&self, i: u32) -> FieldElement {
        debug_assert!(i < self.q);
        FieldElement(i)
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.q).map(FieldElement)
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.m == 1 {
            return FieldElement((a.0 + b.0) % self.p);
        }
        if self.p == 2 {
            return FieldElement(a.0 ^ b.0);
        }
        let (mut x, mut y, mut out, mut place) = (a.0, b.0, 0, 1);
        while x > 0 || y > 0 {
            out += ((x % self.p + y % self.p) % self.p) * place;
            x /= self.p;
            y /= self.p;
            place *= self.p;
        }
        FieldElement(out)
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        if self.m == 1 {
            return FieldElement((self.p - a.0) % self.p);
        }
        if self.p == 2 {
            return a;
        }
        let (mut x, mut out, mut place) = (a.0, 0, 1);
        while x > 0 {
            out += ((self.p - x % self.p) % self.p) * place;
            x /= self.p;
            place *= self.p;
        }
        FieldElement(out)
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 == 0 || b.0 == 0 {
            return FieldElement::ZERO;
        }
        let n = self.q - 1;
        let e = (self.log[a.0 as usize] + self.log[b.0 as usize]) % n;
        FieldElement(self.exp[e as usize])
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a.0 == 0 {
            return Err(Error::DivisionByZero);
        }
        let n = self.q - 1;
        let e = (n - self.log[a.0 as usize]) % n;
        Ok(FieldElement(self.exp[e as usize]))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Horner evaluation of `coeffs[0] + coeffs[1] x + ...`.
    pub fn poly_eval(&self, coeffs: &[FieldElement], x: FieldElement) -> FieldElement {
        coeffs
            .iter()
            .rev()
            .fold(FieldElement::ZERO, |acc, &c| self.add(self.mul(acc, x), c))
    }

    fn build_tables(&mut self) {
        let q = self.q as usize;
        let generator = (2..self.q.max(3))
            .map(FieldElement)
            .chain(std::iter::once(FieldElement(1)))
            .find(|&g| self.slow_order(g) == self.q - 1)
            .expect("multiplicative group of a finite field is cyclic");
        self.exp = vec![0; q - 1];
        self.log = vec![0; q];
        let mut x = FieldElement::ONE;
        for i in 0..q - 1 {
            self.exp[i] = x.0;
            self.log[x.0 as usize] = i as u32;
            x = self.slow_mul(x, generator);
        }
    }

    fn slow_order(&self, g: FieldElement) -> u32 {
        if g.0 == 0 || g.0 >= self.q {
            return 0;
        }
        let mut x = g;
        let mut k = 1;
        while x != FieldElement::ONE {
            x = self.slow_mul(x, g);
            k += 1;
            if k > self.q {
                return 0;
            }
        }
        k
    }

    /// Schoolbook multiplication followed by reduction; table-free.
    fn slow_mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.m == 1 {
            return FieldElement(((a.0 as u64 * b.0 as u64) % self.p as u64) as u32);
        }
        let pa = digits(a.0, self.p, self.m as usize);
        let pb = digits(b.0, self.p, self.m as usize);
        let prod = poly_mul(&pa, &pb, self.p);
        let rem = poly_rem(&prod, &self.modulus, self.p);
        FieldElement(undigits(&rem, self.p))
    }
}

/// Returns `(p, m)` with `q = p^m`, or `None` if `q` is not a prime power.
pub fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let mut rest = q;
    let mut m = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        m += 1;
    }
    (rest == 1).then_some((p, m))
}

pub fn is_prime_power(q: u32) -> bool {
    prime_power(q).is_some()
}

fn digits(mut x: u32, p: u32, len: usize) -> Vec<u32> {
    let mut out = vec![0; len];
    for d in out.iter_mut() {
        *d = x % p;
        x /= p;
    }
    out
}

fn undigits(d: &[u32], p: u32) -> u32 {
    d.iter().rev().fold(0, |acc, &c| acc * p + c)
}

fn trim(mut a: Vec<u32>) -> Vec<u32> {
    while a.len() > 1 && *a.last().unwrap() == 0 {
        a.pop();
    }
    a
}

fn poly_mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    trim(out)
}

/// Remainder of `a` modulo the monic polynomial `m`, padded to `deg(m)` coefficients.
fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let dm = m.len() - 1;
    let mut r = a.to_vec();
    while r.len() > dm {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dm;
        if lead != 0 {
            for (i, &c) in m.iter().enumerate() {
                r[shift + i] = (r[shift + i] + p - (lead * c) % p) % p;
            }
        }
        r.pop();
    }
    r.resize(dm, 0);
    r
}

fn is_irreducible(f: &[u32], p: u32) -> bool {
    let deg = f.len() - 1;
    for d in 1..=deg / 2 {
        for low in 0..p.pow(d as u32) {
            let mut g = digits(low, p, d);
            g.push(1);
            if poly_rem(f, &g, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

fn smallest_irreducible(p: u32, m: u32) -> Vec<u32> {
    (0..p.pow(m))
        .map(|low| {
            let mut f = digits(low, p, m as usize);
            f.push(1);
            f
        })
        .find(|f| is_irreducible(f, p))
        .expect("irreducible polynomials exist in every degree")
}
