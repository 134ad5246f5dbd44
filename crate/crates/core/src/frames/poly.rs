//! Sparse multivariate polynomials with real coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// Exponent multi-index of a monomial.
pub type Exponent = Vec<u32>;

/// A polynomial in `dim` variables stored as a map from exponent to coefficient.
///
/// Zero coefficients are never stored, so structural equality is polynomial equality.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    dim: usize,
    terms: BTreeMap<Exponent, f64>,
}

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Poly { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Poly::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    /// The coordinate function `x_k` (0-based).
    pub fn var(dim: usize, k: usize) -> Self {
        assert!(k < dim, "variable index {k} out of range for dim {dim}");
        let mut e = vec![0; dim];
        e[k] = 1;
        Poly::monomial(e, 1.0)
    }

    pub fn monomial(exponent: Exponent, coeff: f64) -> Self {
        let mut p = Poly::zero(exponent.len());
        p.add_term(exponent, coeff);
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Exponent, f64)>>(dim: usize, terms: I) -> Self {
        let mut p = Poly::zero(dim);
        for (e, c) in terms {
            assert_eq!(e.len(), dim, "exponent length must equal dim");
            p.add_term(e, c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> + '_ {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn coeff(&self, exponent: &[u32]) -> f64 {
        self.terms.get(exponent).copied().unwrap_or(0.0)
    }

    /// Total degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// Largest exponent of each variable.
    pub fn max_exponents(&self) -> Vec<u32> {
        let mut m = vec![0; self.dim];
        for e in self.terms.keys() {
            for (mk, &ek) in m.iter_mut().zip(e) {
                *mk = (*mk).max(ek);
            }
        }
        m
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&k| k == 0))
    }

    /// Adds `c x^e`, dropping the entry if it cancels to zero.
    pub fn add_term(&mut self, exponent: Exponent, c: f64) {
        debug_assert_eq!(exponent.len(), self.dim);
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(exponent);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn scale(&self, c: f64) -> Poly {
        if c == 0.0 {
            return Poly::zero(self.dim);
        }
        Poly {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, &v)| (e.clone(), v * c)).filter(|(_, v)| *v != 0.0).collect(),
        }
    }

    /// Partial derivative with respect to `x_k`.
    pub fn derivative(&self, k: usize) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (e, &c) in &self.terms {
            if e[k] > 0 {
                let mut d = e.clone();
                d[k] -= 1;
                out.add_term(d, c * e[k] as f64);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.terms
            .iter()
            .map(|(e, &c)| {
                e.iter().zip(x).fold(c, |acc, (&p, &xi)| if p == 0 { acc } else { acc * xi.powi(p as i32) })
            })
            .sum()
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut out = Poly::constant(self.dim, 1.0);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// The polynomial `x -> p(x + shift)`.
    pub fn translate(&self, shift: &[f64]) -> Poly {
        assert_eq!(shift.len(), self.dim);
        let mut out = Poly::zero(self.dim);
        for (e, &c) in &self.terms {
            let mut prod = Poly::constant(self.dim, c);
            for (k, &p) in e.iter().enumerate() {
                if p > 0 {
                    let lin = &Poly::var(self.dim, k) + &Poly::constant(self.dim, shift[k]);
                    prod = &prod * &lin.pow(p);
                }
            }
            out += &prod;
        }
        out
    }

    /// Keeps the terms for which `keep` returns true.
    pub fn filter_terms<F: Fn(&[u32], f64) -> bool>(&self, keep: F) -> Poly {
        Poly {
            dim: self.dim,
            terms: self.terms.iter().filter(|(e, &c)| keep(e, c)).map(|(e, &c)| (e.clone(), c)).collect(),
        }
    }

    /// Applies `f` to every coefficient; terms mapped to zero are dropped.
    pub fn map_coeffs<F: Fn(&[u32], f64) -> f64>(&self, f: F) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (e, &c) in &self.terms {
            out.add_term(e.clone(), f(e, c));
        }
        out
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn display_order(&self) -> Vec<(&Exponent, f64)> {
        let mut v: Vec<_> = self.terms.iter().map(|(e, &c)| (e, c)).collect();
        v.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            da.cmp(&db).then_with(|| b.0.cmp(a.0))
        });
        v
    }
}

fn write_monomial(f: &mut fmt::Formatter<'_>, e: &[u32]) -> fmt::Result {
    let mut first = true;
    for (k, &p) in e.iter().enumerate() {
        if p == 0 {
            continue;
        }
        if !first {
            write!(f, "*")?;
        }
        first = false;
        if p == 1 {
            write!(f, "x{}", k + 1)?;
        } else {
            write!(f, "x{}^{}", k + 1, p)?;
        }
    }
    Ok(())
}

impl fmt::Display for Poly {
    /// Prints in the `+ - * ^` text form accepted by [`crate::frames::parse_poly`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.display_order().into_iter().enumerate() {
            let constant = e.iter().all(|&p| p == 0);
            let mag = c.abs();
            if i == 0 {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else if c < 0.0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if constant {
                write!(f, "{mag}")?;
            } else {
                if mag != 1.0 {
                    write!(f, "{mag}*")?;
                }
                write_monomial(f, e)?;
            }
        }
        Ok(())
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl AddAssign<&Poly> for Poly {
    fn add_assign(&mut self, rhs: &Poly) {
        assert_eq!(self.dim, rhs.dim, "polynomial dimension mismatch");
        for (e, &c) in &rhs.terms {
            self.add_term(e.clone(), c);
        }
    }
}

impl SubAssign<&Poly> for Poly {
    fn sub_assign(&mut self, rhs: &Poly) {
        assert_eq!(self.dim, rhs.dim, "polynomial dimension mismatch");
        for (e, &c) in &rhs.terms {
            self.add_term(e.clone(), -c);
        }
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        assert_eq!(self.dim, rhs.dim, "polynomial dimension mismatch");
        let mut out = Poly::zero(self.dim);
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &rhs.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Poly> for Poly {
            type Output = Poly;
            fn $m(self, rhs: &Poly) -> Poly {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// A set of polynomials compiled for repeated joint evaluation at the same point.
#[derive(Clone, Debug)]
pub struct PolyBank {
    dim: usize,
    n_out: usize,
    max_pow: Vec<u32>,
    // (coefficient, output slot, range into `factors`)
    terms: Vec<(f64, usize, usize, usize)>,
    factors: Vec<(usize, u32)>,
}

impl PolyBank {
    pub fn new(dim: usize, polys: &[&Poly]) -> Self {
        let mut max_pow = vec![0u32; dim];
        let mut terms = Vec::new();
        let mut factors = Vec::new();
        for (slot, p) in polys.iter().enumerate() {
            assert_eq!(p.dim(), dim);
            for (e, c) in p.terms() {
                let start = factors.len();
                for (k, &pw) in e.iter().enumerate() {
                    if pw > 0 {
                        factors.push((k, pw));
                        max_pow[k] = max_pow[k].max(pw);
                    }
                }
                terms.push((c, slot, start, factors.len()));
            }
        }
        PolyBank { dim, n_out: polys.len(), max_pow, terms, factors }
    }

    pub fn len(&self) -> usize {
        self.n_out
    }

    pub fn is_empty(&self) -> bool {
        self.n_out == 0
    }

    /// Evaluates every polynomial at `x` into `out` (length `len()`).
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.n_out);
        const MAXP: usize = 8;
        let stride = MAXP + 1;
        let mut table = [0.0f64; 8 * 9];
        let small = self.dim <= 8 && self.max_pow.iter().all(|&p| p as usize <= MAXP);
        out.iter_mut().for_each(|o| *o = 0.0);
        if small {
            for k in 0..self.dim {
                let mut v = 1.0;
                table[k * stride] = 1.0;
                for p in 1..=self.max_pow[k] as usize {
                    v *= x[k];
                    table[k * stride + p] = v;
                }
            }
            for &(c, slot, a, b) in &self.terms {
                let mut v = c;
                for &(k, p) in &self.factors[a..b] {
                    v *= table[k * stride + p as usize];
                }
                out[slot] += v;
            }
        } else {
            for &(c, slot, a, b) in &self.terms {
                let mut v = c;
                for &(k, p) in &self.factors[a..b] {
                    v *= x[k].powi(p as i32);
                }
                out[slot] += v;
            }
        }
    }
}
