//! Field-generic polynomials and linear algebra for the sequence fitters.
//!
//! The fit path instantiates everything over [`Rational`]; the `f64`
//! instance exists for numeric cross-checks. Root location is numeric
//! (companion matrix eigenvalues) with exact rational confirmation.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Scalar type the algebra is generic over.
pub trait Field: Clone + fmt::Debug + PartialEq + Num + Neg<Output = Self> {
    fn from_i64(v: i64) -> Self;
    fn from_bigint(v: &BigInt) -> Self;
    fn to_f64(&self) -> f64;
}

impl Field for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_bigint(v: &BigInt) -> Self {
        BigRational::from_integer(v.clone())
    }

    fn to_f64(&self) -> f64 {
        ratio_to_f64(self)
    }
}

impl Field for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_bigint(v: &BigInt) -> Self {
        v.to_f64().unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

/// Converts a big rational without overflowing on huge numerators and
/// denominators of similar size.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() {
            return n / d;
        }
    }
    let shift = r.numer().bits().max(r.denom().bits()) as i64 - 900;
    let n = shift_down(r.numer(), shift);
    let d = shift_down(r.denom(), shift);
    n / d
}

fn shift_down(v: &BigInt, shift: i64) -> f64 {
    if shift <= 0 {
        v.to_f64().unwrap_or(f64::INFINITY)
    } else {
        (v >> shift as usize).to_f64().unwrap_or(f64::INFINITY)
    }
}

/// Natural log of a positive big integer.
pub fn ln_bigint(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits < 1000 {
        return v.to_f64().unwrap_or(f64::NAN).ln();
    }
    let shift = bits - 900;
    (v >> shift as usize).to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Polynomial with coefficients in ascending order of degree and no
/// trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Polynomial<F> {
    coeffs: Vec<F>,
}

impl<F: Field> fmt::Debug for Polynomial<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial{:?}", self.coeffs)
    }
}

impl<F: Field> Polynomial<F> {
    pub fn new(mut coeffs: Vec<F>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: F) -> Self {
        Self::new(vec![c])
    }

    /// `c·x^k`.
    pub fn monomial(c: F, k: usize) -> Self {
        let mut coeffs = vec![F::zero(); k];
        coeffs.push(c);
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[F] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&F> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &F) -> F {
        self.coeffs
            .iter()
            .rev()
            .fold(F::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn scale(&self, c: &F) -> Self {
        Self::new(self.coeffs.iter().map(|a| a.clone() * c.clone()).collect())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c.clone() * F::from_i64(i as i64))
                .collect(),
        )
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            Some(l) => {
                let inv = F::one() / l.clone();
                self.scale(&inv)
            }
            None => Self::zero(),
        }
    }

    /// Euclidean division. Panics on a zero divisor.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.leading().unwrap().clone();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![F::zero(); self.coeffs.len().saturating_sub(dd)];
        while rem.len() > dd && !rem.is_empty() {
            let k = rem.len() - 1 - dd;
            let c = rem.last().unwrap().clone() / lead.clone();
            for (i, di) in d.coeffs.iter().enumerate() {
                rem[k + i] = rem[k + i].clone() - c.clone() * di.clone();
            }
            quot[k] = c;
            rem.pop();
            while rem.last().is_some_and(|c| c.is_zero()) {
                rem.pop();
            }
        }
        (Self::new(quot), Self::new(rem))
    }

    /// Monic greatest common divisor.
    pub fn gcd(a: &Self, b: &Self) -> Self {
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// `p(a + b·x)`.
    pub fn compose_linear(&self, a: &F, b: &F) -> Self {
        let lin = Self::new(vec![a.clone(), b.clone()]);
        self.coeffs.iter().rev().fold(Self::zero(), |acc, c| {
            &(&acc * &lin) + &Self::constant(c.clone())
        })
    }

    /// Newton interpolation through `(xs[i], ys[i])`; the `xs` must be
    /// distinct.
    pub fn interpolate(xs: &[F], ys: &[F]) -> Self {
        let table = divided_differences(xs, ys);
        let mut result = Self::zero();
        let mut basis = Self::constant(F::one());
        for (k, level) in table.iter().enumerate() {
            result = &result + &basis.scale(&level[0]);
            basis = &basis * &Self::new(vec![-xs[k].clone(), F::one()]);
        }
        result
    }
}

impl<F: Field> Add for &Polynomial<F> {
    type Output = Polynomial<F>;

    fn add(self, rhs: Self) -> Polynomial<F> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new(
            (0..n)
                .map(|i| {
                    let a = self.coeffs.get(i).cloned().unwrap_or_else(F::zero);
                    let b = rhs.coeffs.get(i).cloned().unwrap_or_else(F::zero);
                    a + b
                })
                .collect(),
        )
    }
}

impl<F: Field> Sub for &Polynomial<F> {
    type Output = Polynomial<F>;

    fn sub(self, rhs: Self) -> Polynomial<F> {
        self + &rhs.scale(&-F::one())
    }
}

impl<F: Field> Mul for &Polynomial<F> {
    type Output = Polynomial<F>;

    fn mul(self, rhs: Self) -> Polynomial<F> {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![F::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Polynomial::new(out)
    }
}

/// Divided difference table: level `k` holds `len - k` entries.
pub fn divided_differences<F: Field>(xs: &[F], ys: &[F]) -> Vec<Vec<F>> {
    assert_eq!(xs.len(), ys.len());
    let mut table = vec![ys.to_vec()];
    for k in 1..xs.len() {
        let prev = &table[k - 1];
        let level = (0..prev.len() - 1)
            .map(|i| (prev[i + 1].clone() - prev[i].clone()) / (xs[i + k].clone() - xs[i].clone()))
            .collect();
        table.push(level);
    }
    table
}

/// Solves an over- or well-determined system `rows · v = rhs` exactly.
/// Returns a particular solution (free variables set to zero) or `None`
/// when the system is inconsistent.
pub fn solve<F: Field>(mut rows: Vec<Vec<F>>, mut rhs: Vec<F>) -> Option<Vec<F>> {
    let cols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        rhs.swap(r, p);
        let inv = F::one() / rows[r][c].clone();
        for v in rows[r].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        rhs[r] = rhs[r].clone() * inv;
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for j in 0..cols {
                    let sub = f.clone() * rows[r][j].clone();
                    rows[i][j] = rows[i][j].clone() - sub;
                }
                rhs[i] = rhs[i].clone() - f * rhs[r].clone();
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    if rhs[r..].iter().any(|v| !v.is_zero()) {
        return None;
    }
    let mut x = vec![F::zero(); cols];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = rhs[i].clone();
    }
    Some(x)
}

/// Numeric complex roots of a rational polynomial of degree ≥ 1.
pub fn complex_roots(p: &Polynomial<Rational>) -> Vec<Complex64> {
    let Some(deg) = p.degree() else {
        return Vec::new();
    };
    if deg == 0 {
        return Vec::new();
    }
    let monic = p.monic();
    let c: Vec<f64> = monic.coeffs().iter().map(ratio_to_f64).collect();
    let mut m = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -c[i];
    }
    m.complex_eigenvalues().iter().copied().collect()
}

/// Rational exactly equal to a root of `p` close to `approx`, searched among
/// continued fraction convergents with bounded denominators.
pub fn rational_root_near(p: &Polynomial<Rational>, approx: f64) -> Option<Rational> {
    if !approx.is_finite() {
        return None;
    }
    let mut candidates = Vec::new();
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut x = approx;
    for _ in 0..24 {
        let a = x.floor();
        let ai = BigInt::from(a as i64);
        let h2 = &ai * &h1 + &h0;
        let k2 = &ai * &k1 + &k0;
        if k2.bits() > 40 {
            break;
        }
        candidates.push(BigRational::new(h2.clone(), k2.clone()));
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
        let frac = x - a;
        if frac.abs() < 1e-12 {
            break;
        }
        x = 1.0 / frac;
    }
    let tol = 1e-6 * approx.abs().max(1.0);
    candidates
        .into_iter()
        .filter(|r| (ratio_to_f64(r) - approx).abs() <= tol)
        .find(|r| p.eval(r).is_zero())
}

/// Closed rational interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: Rational,
    pub hi: Rational,
}

impl Enclosure {
    pub fn point(v: Rational) -> Self {
        Self {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint_f64(&self) -> f64 {
        (ratio_to_f64(&self.lo) + ratio_to_f64(&self.hi)) / 2.0
    }

    pub fn contains(&self, v: &Rational) -> bool {
        &self.lo <= v && v <= &self.hi
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "[{},{}]", self.lo, self.hi)
        }
    }
}

/// Dyadic rational closest to `v` with `bits` fractional bits.
pub fn dyadic(v: f64, bits: u32) -> Rational {
    let scale = (1u64 << bits) as f64;
    BigRational::new(BigInt::from((v * scale).round() as i64), BigInt::from(1u64 << bits))
}

/// Certified enclosure of a simple real root of `p` near `approx`: finds
/// rational endpoints with a sign change and bisects to width below `tol`.
pub fn enclose_real_root(p: &Polynomial<Rational>, approx: f64, tol: &Rational) -> Option<Enclosure> {
    let sign = |x: &Rational| p.eval(x).signum();
    let mut d = 1e-9 * approx.abs().max(1.0);
    let (mut lo, mut hi);
    let mut tries = 0;
    loop {
        lo = dyadic(approx - d, 48);
        hi = dyadic(approx + d, 48);
        let (a, b) = (sign(&lo), sign(&hi));
        if a.is_zero() {
            return Some(Enclosure::point(lo));
        }
        if b.is_zero() {
            return Some(Enclosure::point(hi));
        }
        if a != b {
            break;
        }
        tries += 1;
        if tries > 8 {
            return None;
        }
        d *= 16.0;
    }
    let two = Rational::from_i64(2);
    let lo_sign = sign(&lo);
    while &(&hi - &lo) > tol {
        let mid = (&lo + &hi) / &two;
        let s = sign(&mid);
        if s.is_zero() {
            return Some(Enclosure::point(mid));
        }
        if s == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(Enclosure { lo, hi })
}
