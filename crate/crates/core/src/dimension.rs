//! Growth classes, box dimension, the space-time bound, the black-cell ratio
//! and the per-machine findings checks.
//!
//! Every sequence model is reduced to one growth class per residue branch.
//! Branches of the `t`, `s` and `N` models are aligned on the least common
//! multiple of their periods; a liminf over the whole input range is the
//! least of the branch limits.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::{dyadic, ratio_to_f64, Enclosure, Field, Polynomial, Rational};
use crate::seq::{pow, tail_band, CFinite, Root, SequenceModel, Term};

/// Width bound of a certified enclosure of an irrational limit.
pub const ENCLOSURE_TOL: f64 = 1e-6;

/// Exponential rate per unit of `x`: `Σ coef·ln(base)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rate {
    terms: Vec<(Root, Rational)>,
}

fn same_root(a: &Root, b: &Root) -> bool {
    match (a, b) {
        (Root::Rational(x), Root::Rational(y)) => x == y,
        (
            Root::Algebraic {
                poly: p,
                enclosure: e,
            },
            Root::Algebraic {
                poly: q,
                enclosure: f,
            },
        ) => p == q && e.lo <= f.hi && f.lo <= e.hi,
        _ => false,
    }
}

/// `r = g^k` with `k` maximal, for rational `r > 0`.
pub fn primitive_power(r: &Rational) -> (Rational, u32) {
    let (p, q) = (r.numer().clone(), r.denom().clone());
    if r == &Rational::one() {
        return (r.clone(), 1);
    }
    let max_k = p.bits().max(q.bits()) as u32;
    for k in (2..=max_k).rev() {
        let (pr, qr) = (p.nth_root(k), q.nth_root(k));
        if pr.pow(k) == p && qr.pow(k) == q {
            return (Rational::new(pr, qr), k);
        }
    }
    (r.clone(), 1)
}

impl Rate {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    /// `coef·ln(root)`, with rational roots reduced to primitive bases.
    pub fn single(root: Root, coef: Rational) -> Self {
        let mut r = Self::zero();
        match root {
            Root::Rational(b) => {
                let (g, k) = primitive_power(&b);
                r.add_term(Root::Rational(g), coef * Rational::from_i64(k as i64));
            }
            other => r.add_term(other, coef),
        }
        r
    }

    fn add_term(&mut self, root: Root, coef: Rational) {
        if let Root::Rational(g) = &root {
            if g == &Rational::one() {
                return;
            }
        }
        match self.terms.iter_mut().find(|(r, _)| same_root(r, &root)) {
            Some((_, c)) => *c += coef,
            None => self.terms.push((root, coef)),
        }
        self.terms.retain(|(_, c)| !c.is_zero());
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut r = self.clone();
        for (root, c) in &other.terms {
            r.add_term(root.clone(), c.clone());
        }
        r
    }

    pub fn minus(&self, other: &Self) -> Self {
        let mut r = self.clone();
        for (root, c) in &other.terms {
            r.add_term(root.clone(), -c.clone());
        }
        r
    }

    /// Enclosure of the rate's numeric value.
    pub fn value(&self) -> (f64, f64) {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for (root, c) in &self.terms {
            let (a, b) = match root {
                Root::Rational(g) => {
                    let v = ratio_to_f64(g).ln();
                    (v, v)
                }
                Root::Algebraic { enclosure, .. } => {
                    (ratio_to_f64(&enclosure.lo).ln(), ratio_to_f64(&enclosure.hi).ln())
                }
            };
            let pad = 1e-12 * a.abs().max(b.abs()).max(1e-3);
            let c = ratio_to_f64(c);
            let (x, y) = if c >= 0.0 { (c * a, c * b) } else { (c * b, c * a) };
            lo += x - pad * c.abs();
            hi += y + pad * c.abs();
        }
        (lo, hi)
    }

    /// Exact ratio when both rates are multiples of one common base.
    pub fn exact_ratio(&self, den: &Self) -> Option<Rational> {
        match (self.terms.as_slice(), den.terms.as_slice()) {
            ([], [_]) => Some(Rational::zero()),
            ([(a, c)], [(b, d)]) if same_root(a, b) => Some(c / d),
            _ => None,
        }
    }

    fn sign(&self) -> Ordering {
        if self.is_zero() {
            return Ordering::Equal;
        }
        let (lo, hi) = self.value();
        if lo > 0.0 {
            Ordering::Greater
        } else if hi < 0.0 {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (root, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            match root {
                Root::Rational(g) => write!(f, "{c}*ln({g})")?,
                Root::Algebraic { enclosure, .. } => write!(f, "{c}*ln({enclosure})")?,
            }
        }
        Ok(())
    }
}

/// Asymptotic class of one branch of a sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GrowthClass {
    /// Eventually constant.
    Constant(Rational),
    Poly { degree: u32 },
    /// `exp(rate·x)·x^cofactor_degree` up to a constant.
    Exp { rate: Rate, cofactor_degree: u32 },
    Unknown,
}

impl GrowthClass {
    fn rank(&self) -> Option<(Rate, u32, u8)> {
        match self {
            GrowthClass::Constant(_) => Some((Rate::zero(), 0, 0)),
            GrowthClass::Poly { degree } => Some((Rate::zero(), *degree, 1)),
            GrowthClass::Exp {
                rate,
                cofactor_degree,
            } => Some((rate.clone(), *cofactor_degree, 2)),
            GrowthClass::Unknown => None,
        }
    }

    /// Class of a product of two sequences.
    pub fn times(&self, other: &Self) -> Self {
        use GrowthClass::*;
        match (self, other) {
            (Unknown, _) | (_, Unknown) => Unknown,
            (Constant(a), Constant(b)) => Constant(a * b),
            (Constant(_), x) | (x, Constant(_)) => x.clone(),
            (Poly { degree: a }, Poly { degree: b }) => Poly { degree: a + b },
            (Poly { degree }, Exp { rate, cofactor_degree }) | (Exp { rate, cofactor_degree }, Poly { degree }) => Exp {
                rate: rate.clone(),
                cofactor_degree: cofactor_degree + degree,
            },
            (
                Exp {
                    rate: r1,
                    cofactor_degree: d1,
                },
                Exp {
                    rate: r2,
                    cofactor_degree: d2,
                },
            ) => Exp {
                rate: r1.plus(r2),
                cofactor_degree: d1 + d2,
            },
        }
    }

    /// Asymptotic comparison; `None` when unknown or not decidable.
    pub fn compare(&self, other: &Self) -> Option<Ordering> {
        let (r1, d1, k1) = self.rank()?;
        let (r2, d2, k2) = other.rank()?;
        if k1 == 0 && k2 == 0 {
            return Some(Ordering::Equal);
        }
        match r1.minus(&r2).sign() {
            Ordering::Equal if r1.minus(&r2).is_zero() => {
                Some(d1.cmp(&d2).then(k1.min(1).cmp(&k2.min(1))))
            }
            Ordering::Equal => None,
            o => Some(o),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, GrowthClass::Constant(_))
    }

    /// Polynomially bounded with the given maximal degree.
    pub fn poly_degree(&self) -> Option<u32> {
        match self {
            GrowthClass::Constant(_) => Some(0),
            GrowthClass::Poly { degree } => Some(*degree),
            _ => None,
        }
    }

    pub fn is_exp(&self) -> bool {
        matches!(self, GrowthClass::Exp { .. })
    }
}

impl fmt::Display for GrowthClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthClass::Constant(c) => write!(f, "const({c})"),
            GrowthClass::Poly { degree } => write!(f, "poly({degree})"),
            GrowthClass::Exp {
                rate,
                cofactor_degree,
            } => write!(f, "exp({rate};{cofactor_degree})"),
            GrowthClass::Unknown => write!(f, "unknown"),
        }
    }
}

/// One class per residue of `x` modulo `period`; `None` marks a class
/// without halting inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchClasses {
    pub period: u64,
    pub classes: Vec<Option<GrowthClass>>,
}

impl BranchClasses {
    pub fn single(class: GrowthClass) -> Self {
        Self {
            period: 1,
            classes: vec![Some(class)],
        }
    }

    pub fn unknown() -> Self {
        Self::single(GrowthClass::Unknown)
    }

    /// Branch class for residue `r` modulo a multiple of the period.
    pub fn at(&self, r: u64) -> Option<&GrowthClass> {
        self.classes[(r % self.period) as usize].as_ref()
    }

    pub fn is_unknown(&self) -> bool {
        self.classes
            .iter()
            .flatten()
            .any(|c| matches!(c, GrowthClass::Unknown))
    }

    /// Fastest-growing branch.
    pub fn max(&self) -> GrowthClass {
        let mut best: Option<GrowthClass> = None;
        for c in self.classes.iter().flatten() {
            best = Some(match best {
                None => c.clone(),
                Some(b) => match c.compare(&b) {
                    Some(Ordering::Greater) => c.clone(),
                    Some(_) => b,
                    None => return GrowthClass::Unknown,
                },
            });
        }
        best.unwrap_or(GrowthClass::Unknown)
    }

    pub fn all_constant(&self) -> bool {
        self.classes.iter().flatten().all(GrowthClass::is_constant)
            && self.classes.iter().any(Option::is_some)
    }

    /// Classes of `s + 1` given those of `s`.
    pub fn cells(&self) -> Self {
        let classes = self
            .classes
            .iter()
            .map(|c| {
                c.as_ref().map(|c| match c {
                    GrowthClass::Constant(v) => GrowthClass::Constant(v + Rational::one()),
                    other => other.clone(),
                })
            })
            .collect();
        Self {
            period: self.period,
            classes,
        }
    }

    /// Branch-wise product.
    pub fn times(&self, other: &Self) -> Self {
        let period = crate::seq::lcm(self.period, other.period);
        let classes = (0..period)
            .map(|r| match (self.at(r), other.at(r)) {
                (Some(a), Some(b)) => Some(a.times(b)),
                _ => None,
            })
            .collect();
        Self { period, classes }
    }
}

impl fmt::Display for BranchClasses {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.period == 1 {
            return match &self.classes[0] {
                Some(c) => write!(f, "{c}"),
                None => write!(f, "nil"),
            };
        }
        write!(f, "[")?;
        for (i, c) in self.classes.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            match c {
                Some(c) => write!(f, "{c}")?,
                None => write!(f, "nil")?,
            }
        }
        write!(f, "]")
    }
}

fn cfinite_class(c: &CFinite) -> GrowthClass {
    let Some(dom) = c.dominant() else {
        return GrowthClass::Unknown;
    };
    let m = dom.multiplicity as u32;
    match &dom.root {
        Root::Rational(b) if b.is_one() => {
            if m == 1 {
                GrowthClass::Constant(c.initial[0].clone())
            } else {
                GrowthClass::Poly { degree: m - 1 }
            }
        }
        Root::Rational(b) if b < &Rational::one() => GrowthClass::Unknown,
        root => {
            if root.approx() <= 1.0 {
                return GrowthClass::Unknown;
            }
            GrowthClass::Exp {
                rate: Rate::single(root.clone(), Rational::new(BigInt::one(), BigInt::from(c.step))),
                cofactor_degree: m - 1,
            }
        }
    }
}

fn poly_class(p: &Polynomial<Rational>) -> GrowthClass {
    match p.degree() {
        None => GrowthClass::Constant(Rational::zero()),
        Some(0) => GrowthClass::Constant(p.coeffs()[0].clone()),
        Some(d) => GrowthClass::Poly { degree: d as u32 },
    }
}

fn unsplit_class(model: &SequenceModel) -> GrowthClass {
    match model {
        SequenceModel::Polynomial { poly, .. } => poly_class(poly),
        SequenceModel::ExpPoly(e) => {
            if e.cofactor.is_zero() {
                poly_class(&e.additive)
            } else {
                cfinite_class(&e.recurrence)
            }
        }
        SequenceModel::CFinite(c) => cfinite_class(c),
        _ => GrowthClass::Unknown,
    }
}

/// Growth class per residue branch. Ratio bands carry no class of their own.
pub fn growth_class(model: &SequenceModel) -> BranchClasses {
    match model {
        SequenceModel::PeriodicSplit { period, branches } => BranchClasses {
            period: *period,
            classes: branches.iter().map(|b| b.as_ref().map(unsplit_class)).collect(),
        },
        SequenceModel::RatioFallback { .. } => BranchClasses::unknown(),
        m => BranchClasses::single(unsplit_class(m)),
    }
}

/// Value of a limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LimitValue {
    Exact(Rational),
    /// Certified enclosure of an irrational (or unresolved) value.
    Approx(Enclosure),
    Infinite,
    Unknown,
}

impl LimitValue {
    pub fn exact(&self) -> Option<&Rational> {
        match self {
            LimitValue::Exact(r) => Some(r),
            _ => None,
        }
    }

    fn bounds(&self) -> Option<(f64, f64)> {
        match self {
            LimitValue::Exact(r) => {
                let v = ratio_to_f64(r);
                Some((v, v))
            }
            LimitValue::Approx(e) => Some((ratio_to_f64(&e.lo), ratio_to_f64(&e.hi))),
            LimitValue::Infinite => Some((f64::INFINITY, f64::INFINITY)),
            LimitValue::Unknown => None,
        }
    }

    /// Whether the value is certainly equal to `v`, `None` if undecidable.
    pub fn equals(&self, v: &Rational) -> Option<bool> {
        match self {
            LimitValue::Exact(r) => Some(r == v),
            LimitValue::Approx(e) => (!e.contains(v)).then_some(false),
            LimitValue::Infinite => Some(false),
            LimitValue::Unknown => None,
        }
    }

    /// `self ≤ other` when decidable.
    pub fn le(&self, other: &Self) -> Option<bool> {
        if let (LimitValue::Exact(a), LimitValue::Exact(b)) = (self, other) {
            return Some(a <= b);
        }
        let (a_lo, a_hi) = self.bounds()?;
        let (b_lo, b_hi) = other.bounds()?;
        if a_hi <= b_lo {
            Some(true)
        } else if a_lo > b_hi {
            Some(false)
        } else {
            // Overlapping enclosures: accept within the enclosure width.
            Some(a_lo <= b_hi)
        }
    }

    /// Whether the two values agree (exactly, or by overlapping enclosures).
    pub fn agrees(&self, other: &Self) -> Option<bool> {
        if let (LimitValue::Exact(a), LimitValue::Exact(b)) = (self, other) {
            return Some(a == b);
        }
        let (a_lo, a_hi) = self.bounds()?;
        let (b_lo, b_hi) = other.bounds()?;
        Some(a_lo <= b_hi && b_lo <= a_hi)
    }

    fn min(self, other: Self) -> Self {
        match (&self, &other) {
            (LimitValue::Unknown, _) | (_, LimitValue::Unknown) => LimitValue::Unknown,
            _ => {
                let (a, _) = self.bounds().unwrap();
                let (b, _) = other.bounds().unwrap();
                if b < a {
                    other
                } else {
                    self
                }
            }
        }
    }

    pub fn plus_one(&self) -> Self {
        match self {
            LimitValue::Exact(r) => LimitValue::Exact(r + Rational::one()),
            LimitValue::Approx(e) => LimitValue::Approx(Enclosure {
                lo: &e.lo + Rational::one(),
                hi: &e.hi + Rational::one(),
            }),
            other => other.clone(),
        }
    }

    fn cap(&self, c: &Rational) -> Self {
        match self {
            LimitValue::Infinite => LimitValue::Exact(c.clone()),
            LimitValue::Exact(r) if r > c => LimitValue::Exact(c.clone()),
            LimitValue::Approx(e) if &e.lo > c => LimitValue::Exact(c.clone()),
            other => other.clone(),
        }
    }

    pub fn approx(&self) -> Option<f64> {
        self.bounds().map(|(a, b)| (a + b) / 2.0)
    }
}

impl fmt::Display for LimitValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitValue::Exact(r) => write!(f, "{r}"),
            LimitValue::Approx(e) => write!(f, "{e}"),
            LimitValue::Infinite => write!(f, "inf"),
            LimitValue::Unknown => write!(f, "unknown"),
        }
    }
}

fn enclose(lo: f64, hi: f64) -> Enclosure {
    let pad = 1e-9 * lo.abs().max(hi.abs()).max(1.0);
    Enclosure {
        lo: dyadic(lo - pad, 40),
        hi: dyadic(hi + pad, 40),
    }
}

fn rate_ratio(num: &Rate, den: &Rate) -> LimitValue {
    if let Some(r) = num.exact_ratio(den) {
        return LimitValue::Exact(r);
    }
    let (a, b) = num.value();
    let (c, d) = den.value();
    if c <= 0.0 {
        return LimitValue::Unknown;
    }
    let lo = (a / d).min(a / c);
    let hi = (b / c).max(b / d);
    LimitValue::Approx(enclose(lo, hi))
}

fn ln_enclosure(c: &Rational) -> (f64, f64) {
    let v = ratio_to_f64(c).ln();
    (v - 1e-12, v + 1e-12)
}

/// Limit of `log num / log den` on one branch.
pub fn branch_log_limit(num: &GrowthClass, den: &GrowthClass) -> LimitValue {
    use GrowthClass::*;
    match (num, den) {
        (Unknown, _) | (_, Unknown) => LimitValue::Unknown,
        (Constant(a), Constant(b)) => {
            if a == b && b > &Rational::one() {
                return LimitValue::Exact(Rational::one());
            }
            if b <= &Rational::one() || !a.is_positive() {
                return LimitValue::Unknown;
            }
            let (x, y) = ln_enclosure(a);
            let (u, v) = ln_enclosure(b);
            LimitValue::Approx(enclose((x / v).min(x / u), (y / u).max(y / v)))
        }
        (_, Constant(_)) => LimitValue::Infinite,
        (Constant(_), _) => LimitValue::Exact(Rational::zero()),
        (Poly { degree: a }, Poly { degree: b }) => {
            LimitValue::Exact(Rational::new(BigInt::from(*a), BigInt::from(*b)))
        }
        (Poly { .. }, Exp { .. }) => LimitValue::Exact(Rational::zero()),
        (Exp { .. }, Poly { .. }) => LimitValue::Infinite,
        (Exp { rate: r1, .. }, Exp { rate: r2, .. }) => rate_ratio(r1, r2),
    }
}

/// Liminf of `log num / log den`: the least limit over aligned branches.
pub fn log_limit(num: &BranchClasses, den: &BranchClasses) -> LimitValue {
    let period = crate::seq::lcm(num.period, den.period);
    let mut best: Option<LimitValue> = None;
    for r in 0..period {
        let (Some(a), Some(b)) = (num.at(r), den.at(r)) else {
            continue;
        };
        let v = branch_log_limit(a, b);
        best = Some(match best {
            None => v,
            Some(cur) => cur.min(v),
        });
    }
    best.unwrap_or(LimitValue::Unknown)
}

/// Box dimension from the classes of `N` and `t`; `2` for constant time.
pub fn dimension(n: &BranchClasses, t: &BranchClasses) -> LimitValue {
    if t.all_constant() {
        return LimitValue::Exact(Rational::from_i64(2));
    }
    let d = log_limit(n, t);
    debug_assert!(!matches!(d, LimitValue::Infinite), "N outgrowing s·t");
    d
}

/// `1 + liminf log s / log t`, capped at 2; `2` for constant time.
pub fn upper_bound(s: &BranchClasses, t: &BranchClasses) -> LimitValue {
    let two = Rational::from_i64(2);
    if t.all_constant() {
        return LimitValue::Exact(two);
    }
    log_limit(s, t).plus_one().cap(&two)
}

/// Leading term `coef·∏ g^e · exp(rate·x)·x^degree` of a branch, with the
/// base powers `g^e` kept symbolic so they can cancel in ratios.
#[derive(Debug, Clone)]
struct Lead {
    coef: Rational,
    powers: Vec<(Rational, Rational)>,
    rate: Rate,
    degree: i64,
}

impl Lead {
    fn mul(&self, o: &Lead, sign: i64) -> Lead {
        let mut powers = self.powers.clone();
        for (g, e) in &o.powers {
            let e = e * Rational::from_i64(sign);
            match powers.iter_mut().find(|(h, _)| h == g) {
                Some((_, f)) => *f += e,
                None => powers.push((g.clone(), e)),
            }
        }
        powers.retain(|(_, e)| !e.is_zero());
        Lead {
            coef: if sign > 0 {
                &self.coef * &o.coef
            } else {
                &self.coef / &o.coef
            },
            powers,
            rate: if sign > 0 {
                self.rate.plus(&o.rate)
            } else {
                self.rate.minus(&o.rate)
            },
            degree: self.degree + sign * o.degree,
        }
    }
}

/// The zero polynomial leads with coefficient zero in degree zero.
fn poly_lead(p: &Polynomial<Rational>) -> Option<Lead> {
    Some(Lead {
        coef: p.leading().cloned().unwrap_or_else(Rational::zero),
        powers: Vec::new(),
        rate: Rate::zero(),
        degree: p.degree().unwrap_or(0) as i64,
    })
}

fn cfinite_lead(c: &CFinite) -> Option<Lead> {
    let (b, e, coef) = c.leading_term()?;
    if b.is_one() {
        // c·j^e with j = (x − start)/step
        let step = Rational::from_i64(c.step as i64);
        return Some(Lead {
            coef: coef / pow(&step, e as u64),
            powers: Vec::new(),
            rate: Rate::zero(),
            degree: e as i64,
        });
    }
    if b < Rational::one() {
        return None;
    }
    // c·b^j·j^e = c·step^(−e)·g^(−k·start/step)·exp(x·k/step·ln g)·x^e
    let (g, k) = primitive_power(&b);
    let step = Rational::from_i64(c.step as i64);
    let kq = Rational::from_i64(k as i64);
    Some(Lead {
        coef: coef / pow(&step, e as u64),
        powers: vec![(g.clone(), -(&kq * Rational::from_i64(c.start as i64)) / &step)],
        rate: Rate::single(Root::Rational(g), kq / step),
        degree: e as i64,
    })
}

fn unsplit_lead(model: &SequenceModel) -> Option<Lead> {
    match model {
        SequenceModel::Polynomial { poly, .. } => poly_lead(poly),
        SequenceModel::ExpPoly(e) => {
            if e.cofactor.is_zero() {
                poly_lead(&e.additive)
            } else {
                cfinite_lead(&e.recurrence)
            }
        }
        SequenceModel::CFinite(c) => cfinite_lead(c),
        _ => None,
    }
}

fn branch_model(model: &SequenceModel, r: u64) -> Option<&SequenceModel> {
    match model {
        SequenceModel::PeriodicSplit { period, branches } => branches[(r % period) as usize].as_ref(),
        SequenceModel::RatioFallback { .. } => None,
        m => Some(m),
    }
}

/// Exact limit of `N/(s·t)` on the residue branch `r`, when the leading
/// terms resolve it.
fn exact_branch_ratio(n: &SequenceModel, s: &SequenceModel, t: &SequenceModel, r: u64) -> Option<Rational> {
    let ln = unsplit_lead(branch_model(n, r)?)?;
    let mut ls = unsplit_lead(branch_model(s, r)?)?;
    if ls.degree == 0 && ls.rate.is_zero() {
        // Constant space: the `+1` of the cell count is not negligible.
        ls.coef += Rational::one();
    }
    let lt = unsplit_lead(branch_model(t, r)?)?;
    if lt.coef.is_zero() || ls.coef.is_zero() {
        return None;
    }
    let q = ln.mul(&ls, -1).mul(&lt, -1);
    if !q.rate.is_zero() {
        return match q.rate.sign() {
            Ordering::Less => Some(Rational::zero()),
            _ => None,
        };
    }
    match q.degree.cmp(&0) {
        Ordering::Less => return Some(Rational::zero()),
        Ordering::Greater => return None,
        Ordering::Equal => {}
    }
    let mut c = q.coef;
    for (g, e) in &q.powers {
        if !e.is_integer() {
            return None;
        }
        let k = e.to_integer().to_i64()?;
        let p = pow(g, k.unsigned_abs());
        c = if k >= 0 { c * p } else { c / p };
    }
    Some(c)
}

/// Limit of `N/(s·t)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RatioValue {
    Exact(Rational),
    /// Spread of the last terms of the branch.
    Empirical(Enclosure),
    Undefined,
}

impl fmt::Display for RatioValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RatioValue::Exact(r) => write!(f, "{r}"),
            RatioValue::Empirical(e) => write!(f, "~{e}"),
            RatioValue::Undefined => write!(f, "undefined"),
        }
    }
}

impl RatioValue {
    fn low(&self) -> Option<f64> {
        match self {
            RatioValue::Exact(r) => Some(ratio_to_f64(r)),
            RatioValue::Empirical(e) => Some(ratio_to_f64(&e.lo)),
            RatioValue::Undefined => None,
        }
    }
}

/// Branch-wise `c_τ` and its liminf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioLimit {
    pub period: u64,
    pub branches: Vec<Option<RatioValue>>,
    pub liminf: RatioValue,
    /// Fewer than [`MIN_RATIO_POINTS`] halted inputs.
    pub insufficient: bool,
}

/// Halted inputs needed for a ratio estimate.
pub const MIN_RATIO_POINTS: usize = 10;
/// Terms in the empirical band.
pub const BAND_TERMS: usize = 5;

/// Raw measured `(t, s, N)` per halted input.
#[derive(Debug, Clone, Default)]
pub struct RawSeries {
    pub t: Vec<Term>,
    pub s: Vec<Term>,
    pub n: Vec<Term>,
}

impl RawSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `N/((s+1)·t)` per input: `s` is an index, so `s + 1` cells are in
    /// use and the ratio is the black fraction of the diagram.
    pub fn ratios(&self) -> Vec<(u64, Rational)> {
        self.t
            .iter()
            .zip(&self.s)
            .zip(&self.n)
            .filter(|(((_, t), _), _)| !t.is_zero())
            .map(|(((x, t), (_, s)), (_, n))| (*x, Rational::new(n.clone(), (s + BigInt::one()) * t)))
            .collect()
    }
}

/// Smallest period whose residue classes give tight empirical bands.
fn empirical_period(ratios: &[(u64, Rational)], min_period: u64) -> u64 {
    let spread = |p: u64| -> f64 {
        (0..p)
            .filter_map(|r| {
                let v: Vec<Rational> = ratios.iter().filter(|(x, _)| x % p == r).map(|(_, q)| q.clone()).collect();
                tail_band(&v, BAND_TERMS).map(|e| ratio_to_f64(&e.width()))
            })
            .fold(0.0, f64::max)
    };
    let mut best = (min_period, spread(min_period));
    for p in [2u64, 3, 6] {
        if p % min_period != 0 || p <= min_period {
            continue;
        }
        let sp = spread(p);
        if sp < best.1 / 4.0 {
            best = (p, sp);
        }
    }
    best.0
}

/// `c_τ = lim N/(s·t)` branch by branch: exact from the models when every
/// leading term is rational, otherwise the spread of the branch's last five
/// ratios.
pub fn ratio_limit(
    raw: &RawSeries,
    n: Option<&SequenceModel>,
    s: Option<&SequenceModel>,
    t: Option<&SequenceModel>,
) -> RatioLimit {
    let ratios = raw.ratios();
    if raw.len() < MIN_RATIO_POINTS {
        return RatioLimit {
            period: 1,
            branches: vec![None],
            liminf: RatioValue::Undefined,
            insufficient: true,
        };
    }
    let models: Vec<&SequenceModel> = [n, s, t].into_iter().flatten().collect();
    let model_period = models.iter().map(|m| m.period()).fold(1, crate::seq::lcm);
    let all = models.len() == 3 && n.is_some_and(|m| !matches!(m, SequenceModel::RatioFallback { .. }));
    let period = if all {
        model_period
    } else {
        empirical_period(&ratios, model_period)
    };
    let mut branches = Vec::new();
    for r in 0..period {
        let class: Vec<Rational> = ratios.iter().filter(|(x, _)| x % period == r).map(|(_, q)| q.clone()).collect();
        if class.is_empty() {
            branches.push(None);
            continue;
        }
        let exact = if all {
            exact_branch_ratio(n.unwrap(), s.unwrap(), t.unwrap(), r)
        } else {
            None
        };
        branches.push(Some(match exact {
            Some(c) => RatioValue::Exact(c),
            None => match tail_band(&class, BAND_TERMS) {
                Some(b) => RatioValue::Empirical(crate::seq::round_band(&b, 24)),
                None => RatioValue::Undefined,
            },
        }));
    }
    let liminf = branches
        .iter()
        .flatten()
        .filter(|v| v.low().is_some())
        .min_by(|a, b| a.low().unwrap().total_cmp(&b.low().unwrap()))
        .cloned()
        .unwrap_or(RatioValue::Undefined);
    RatioLimit {
        period,
        branches,
        liminf,
        insufficient: false,
    }
}

/// Complexity buckets of the census tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bucket {
    #[serde(rename = "constant")]
    Constant,
    #[serde(rename = "linear")]
    Linear,
    #[serde(rename = "O(n^2)+O(n) space")]
    Quadratic,
    #[serde(rename = "O(n^3)+O(n) space")]
    Cubic,
    /// Polynomial time not covered by the rows above.
    #[serde(rename = "other polynomial")]
    OtherPolynomial,
    #[serde(rename = "EXP-time+linear-space")]
    ExpLinear,
    #[serde(rename = "EXP-time+EXP-space")]
    ExpExp,
    #[serde(rename = "other super-polynomial")]
    OtherSuperPolynomial,
    #[serde(rename = "unclassified")]
    Unclassified,
}

impl Bucket {
    pub const ALL: [Bucket; 9] = [
        Bucket::Constant,
        Bucket::Linear,
        Bucket::Quadratic,
        Bucket::Cubic,
        Bucket::OtherPolynomial,
        Bucket::ExpLinear,
        Bucket::ExpExp,
        Bucket::OtherSuperPolynomial,
        Bucket::Unclassified,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Bucket::Constant => "constant",
            Bucket::Linear => "linear",
            Bucket::Quadratic => "O(n^2)+O(n) space",
            Bucket::Cubic => "O(n^3)+O(n) space",
            Bucket::OtherPolynomial => "other polynomial",
            Bucket::ExpLinear => "EXP-time+linear-space",
            Bucket::ExpExp => "EXP-time+EXP-space",
            Bucket::OtherSuperPolynomial => "other super-polynomial",
            Bucket::Unclassified => "unclassified",
        }
    }

    pub fn is_super_polynomial(&self) -> bool {
        matches!(self, Bucket::ExpLinear | Bucket::ExpExp | Bucket::OtherSuperPolynomial)
    }
}

/// Bucket from the fastest-growing branches of `t` and `s`.
pub fn classify_bucket(t: &BranchClasses, s: &BranchClasses) -> Bucket {
    let (tm, sm) = (t.max(), s.max());
    let s_deg = sm.poly_degree();
    match (&tm, tm.poly_degree()) {
        (GrowthClass::Unknown, _) => Bucket::Unclassified,
        (_, Some(0)) => Bucket::Constant,
        (_, Some(1)) => Bucket::Linear,
        (_, Some(2)) if s_deg.is_some_and(|d| d <= 1) => Bucket::Quadratic,
        (_, Some(3)) if s_deg.is_some_and(|d| d <= 1) => Bucket::Cubic,
        (_, Some(_)) => Bucket::OtherPolynomial,
        (GrowthClass::Exp { .. }, None) => match (&sm, s_deg) {
            (_, Some(d)) if d <= 1 => Bucket::ExpLinear,
            (GrowthClass::Exp { .. }, _) => Bucket::ExpExp,
            (GrowthClass::Unknown, _) => Bucket::Unclassified,
            _ => Bucket::OtherSuperPolynomial,
        },
        _ => Bucket::Unclassified,
    }
}

/// Outcome of a boolean check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    True,
    False,
    /// Inputs unknown or the comparison is undecidable at the recorded
    /// precision.
    Indeterminate,
    /// The premise does not apply to this machine.
    Na,
}

impl Flag {
    fn from_opt(v: Option<bool>) -> Self {
        match v {
            Some(true) => Flag::True,
            Some(false) => Flag::False,
            None => Flag::Indeterminate,
        }
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Flag::False)
    }
}

/// Membership of `c_τ` in the list of observed limit values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatioMembership {
    /// Exact and in the list.
    Listed,
    /// Exact, in `(0, 1]`, but not in the list.
    Novel,
    /// Only an empirical band is known, inside `(0, 1]`.
    Band,
    /// Outside `(0, 1]`.
    OutOfRange,
    Undefined,
}

/// The limit values of `N/(s·t)` observed in (3,2).
pub fn finding3_list() -> Vec<Rational> {
    [
        (1, 9),
        (1, 6),
        (7, 30),
        (1, 4),
        (5, 18),
        (5, 16),
        (1, 3),
        (3, 8),
        (8, 21),
        (7, 18),
        (5, 12),
        (3, 7),
        (4, 9),
        (7, 15),
        (1, 2),
        (5, 9),
        (9, 16),
        (2, 3),
        (3, 4),
        (7, 9),
        (1, 1),
    ]
    .into_iter()
    .map(|(p, q)| Rational::new(BigInt::from(p), BigInt::from(q)))
    .collect()
}

/// Per-machine findings flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Findings {
    /// Super-linear machines: `s/t → 0` and `d ≥ 1`.
    pub f0: Flag,
    /// `d` equals the space-time bound.
    pub f1: Flag,
    /// `liminf log N / log(s·t) = 1`.
    pub f2: Flag,
    /// `c_τ ∈ (0, 1]`.
    pub f3: Flag,
    pub f3_membership: RatioMembership,
    /// `d = 1` iff super-polynomial time and polynomial space.
    pub f4: Flag,
    /// `d = 2` iff at most linear time.
    pub f5: Flag,
    /// `d ≤` bound.
    pub bound_holds: Flag,
}

/// Full analysis of one machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionReport {
    pub t: BranchClasses,
    pub s: BranchClasses,
    pub n: BranchClasses,
    /// `None` when the machine halts on too few inputs.
    pub d: LimitValue,
    pub upper_bound: LimitValue,
    pub c_tau: RatioLimit,
    pub bucket: Bucket,
    pub findings: Findings,
    /// `log N / log(s·t)` liminf.
    pub log_n_over_st: LimitValue,
}

fn at_most_linear(t: &BranchClasses) -> Option<bool> {
    let m = t.max();
    match m {
        GrowthClass::Unknown => None,
        _ => Some(m.poly_degree().is_some_and(|d| d <= 1)),
    }
}

fn super_poly_time_poly_space(t: &BranchClasses, s: &BranchClasses) -> Option<bool> {
    let (tm, sm) = (t.max(), s.max());
    if matches!(tm, GrowthClass::Unknown) || matches!(sm, GrowthClass::Unknown) {
        return None;
    }
    Some(tm.is_exp() && sm.poly_degree().is_some())
}

fn iff(a: Option<bool>, b: Option<bool>) -> Flag {
    match (a, b) {
        (Some(a), Some(b)) => Flag::from_opt(Some(a == b)),
        _ => Flag::Indeterminate,
    }
}

/// Checks the findings on one analysed machine.
pub fn check_findings(
    t: &BranchClasses,
    s: &BranchClasses,
    d: &LimitValue,
    bound: &LimitValue,
    log_n_st: &LimitValue,
    c_tau: &RatioLimit,
) -> Findings {
    let one = Rational::one();
    let two = Rational::from_i64(2);
    let linear = at_most_linear(t);
    let f0 = match linear {
        None => Flag::Indeterminate,
        Some(true) => Flag::Na,
        Some(false) => match s.max().compare(&t.max()) {
            Some(o) => {
                let d_ge_1 = LimitValue::Exact(one.clone()).le(d);
                Flag::from_opt(d_ge_1.map(|g| g && o == Ordering::Less))
            }
            None => Flag::Indeterminate,
        },
    };
    let f1 = Flag::from_opt(d.agrees(bound));
    // An asymptotic statement; constant time is degenerate as for `d`.
    let f2 = if t.all_constant() {
        Flag::Na
    } else {
        Flag::from_opt(log_n_st.agrees(&LimitValue::Exact(one.clone())))
    };
    let (f3, f3_membership) = match &c_tau.liminf {
        RatioValue::Exact(c) => {
            if c.is_positive() && c <= &one {
                let listed = finding3_list().contains(c);
                (Flag::True, if listed { RatioMembership::Listed } else { RatioMembership::Novel })
            } else {
                (Flag::False, RatioMembership::OutOfRange)
            }
        }
        RatioValue::Empirical(b) => {
            if b.lo.is_positive() && b.hi <= one {
                (Flag::True, RatioMembership::Band)
            } else if b.hi.is_positive() && b.lo <= one {
                (Flag::Indeterminate, RatioMembership::Band)
            } else {
                (Flag::False, RatioMembership::OutOfRange)
            }
        }
        RatioValue::Undefined => (Flag::Indeterminate, RatioMembership::Undefined),
    };
    let f4 = iff(d.equals(&one), super_poly_time_poly_space(t, s));
    let f5 = iff(d.equals(&two), linear);
    let bound_holds = Flag::from_opt(d.le(bound));
    Findings {
        f0,
        f1,
        f2,
        f3,
        f3_membership,
        f4,
        f5,
        bound_holds,
    }
}

/// Models of the three sequences of a machine. A missing `N` model may be
/// replaced by a ratio band, inheriting the class of `s·t`.
#[derive(Debug, Clone, Default)]
pub struct MachineModels {
    pub t: Option<SequenceModel>,
    pub s: Option<SequenceModel>,
    pub n: Option<SequenceModel>,
}

fn classes_of(m: Option<&SequenceModel>) -> BranchClasses {
    m.map(growth_class).unwrap_or_else(BranchClasses::unknown)
}

/// Ratio band for `N` when it has no exact model but `s` and `t` do.
pub fn ratio_fallback(raw: &RawSeries, s: &SequenceModel, t: &SequenceModel) -> Option<SequenceModel> {
    let ratios = raw.ratios();
    if raw.len() < MIN_RATIO_POINTS {
        return None;
    }
    let period = empirical_period(&ratios, crate::seq::lcm(s.period(), t.period()));
    let bands: Vec<Option<Enclosure>> = (0..period)
        .map(|r| {
            let v: Vec<Rational> = ratios.iter().filter(|(x, _)| x % period == r).map(|(_, q)| q.clone()).collect();
            tail_band(&v, BAND_TERMS).map(|b| crate::seq::round_band(&b, 24))
        })
        .collect();
    Some(SequenceModel::RatioFallback { period, bands })
}

/// Runs the dimension analysis on fitted models and raw data.
pub fn analyze(models: &MachineModels, raw: &RawSeries) -> DimensionReport {
    let t = classes_of(models.t.as_ref());
    let s = classes_of(models.s.as_ref());
    let n = match &models.n {
        Some(SequenceModel::RatioFallback { bands, .. }) => {
            let positive = bands.iter().flatten().all(|b| b.lo.is_positive());
            if positive {
                s.cells().times(&t)
            } else {
                BranchClasses::unknown()
            }
        }
        other => classes_of(other.as_ref()),
    };
    let d = dimension(&n, &t);
    let bound = upper_bound(&s, &t);
    let log_n_st = log_limit(&n, &s.cells().times(&t));
    let c_tau = ratio_limit(raw, models.n.as_ref(), models.s.as_ref(), models.t.as_ref());
    let bucket = classify_bucket(&t, &s);
    let findings = check_findings(&t, &s, &d, &bound, &log_n_st, &c_tau);
    DimensionReport {
        t,
        s,
        n,
        d,
        upper_bound: bound,
        c_tau,
        bucket,
        findings,
        log_n_over_st: log_n_st,
    }
}

/// `log f(x) / log g(x)` for positive rationals.
pub fn log_ratio(f: &Rational, g: &Rational) -> Option<f64> {
    if !f.is_positive() || !g.is_positive() {
        return None;
    }
    let ln = |r: &Rational| crate::algebra::ln_bigint(r.numer()) - crate::algebra::ln_bigint(r.denom());
    Some(ln(f) / ln(g))
}
