//! Exact model recovery for measured integer sequences.
//!
//! A sequence is a list of `(x, value)` terms sorted by `x`. The fitters try,
//! in order, an interpolating polynomial (constant divided differences), a
//! linear recurrence with constant rational coefficients, and a split into
//! residue classes modulo a small period with one model per class. All
//! arithmetic on the fit path is exact.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::{
    complex_roots, dyadic, enclose_real_root, rational_root_near, ratio_to_f64, solve, Enclosure,
    Field, Polynomial, Rational,
};
use crate::error::{Error, Result};

/// One measured term.
pub type Term = (u64, BigInt);

/// Terms `start, start + 1, ...` with the given values.
pub fn terms_from<V: Into<BigInt>>(start: u64, values: impl IntoIterator<Item = V>) -> Vec<Term> {
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| (start + i as u64, v.into()))
        .collect()
}

/// Period candidates: divisors of `n·k` for the (3,2) space.
pub const PERIODS: [u64; 4] = [1, 2, 3, 6];

/// Smallest class size a periodic branch is fitted on.
pub const MIN_CLASS_TERMS: usize = 4;

/// Linear recurrence `a(j) = c₁·a(j−1) + … + c_r·a(j−r)` over the
/// progression `x = start + step·j`, seeded with `a(0..r)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CFinite {
    pub start: u64,
    pub step: u64,
    pub coeffs: Vec<Rational>,
    pub initial: Vec<Rational>,
}

/// `a(j) = base^j·cofactor(j) + additive(j)` over `x = start + step·j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpPoly {
    pub start: u64,
    pub step: u64,
    pub base: Rational,
    pub cofactor: Polynomial<Rational>,
    pub additive: Polynomial<Rational>,
    /// The recurrence the closed form was derived from.
    pub recurrence: CFinite,
}

/// Fitted description of a sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SequenceModel {
    /// Polynomial in `x`, valid for every `x ≥ start`.
    Polynomial { start: u64, poly: Polynomial<Rational> },
    ExpPoly(ExpPoly),
    CFinite(CFinite),
    /// Branch `r` describes the terms with `x ≡ r (mod period)`; `None`
    /// marks a class without terms.
    PeriodicSplit {
        period: u64,
        branches: Vec<Option<SequenceModel>>,
    },
    /// No exact model: `N/(s·t)` is only known to lie in a band per residue
    /// class modulo `period`.
    RatioFallback {
        period: u64,
        bands: Vec<Option<Enclosure>>,
    },
}

/// Root of largest modulus of a recurrence's characteristic polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Root {
    Rational(Rational),
    /// Simple root of `poly` (square-free, rational coefficients) inside
    /// `enclosure`.
    Algebraic {
        poly: Polynomial<Rational>,
        enclosure: Enclosure,
    },
}

impl Root {
    pub fn approx(&self) -> f64 {
        match self {
            Root::Rational(r) => ratio_to_f64(r),
            Root::Algebraic { enclosure, .. } => enclosure.midpoint_f64(),
        }
    }
}

/// Dominant root and its multiplicity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dominant {
    pub root: Root,
    pub multiplicity: usize,
}

/// Relative distance under which numeric roots are taken to coincide.
const CLUSTER_TOL: f64 = 1e-3;
/// Relative modulus gap a non-dominant root must keep.
const MODULUS_GAP: f64 = 1e-7;

impl CFinite {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// `z^r − c₁ z^{r−1} − … − c_r`.
    pub fn char_poly(&self) -> Polynomial<Rational> {
        let r = self.order();
        let mut c = vec![Rational::zero(); r + 1];
        c[r] = Rational::one();
        for (i, ci) in self.coeffs.iter().enumerate() {
            c[r - 1 - i] = -ci.clone();
        }
        Polynomial::new(c)
    }

    /// Terms `a(0..len)`.
    pub fn terms(&self, len: usize) -> Vec<Rational> {
        let mut out: Vec<Rational> = self.initial.iter().take(len).cloned().collect();
        while out.len() < len {
            let j = out.len();
            let v = self
                .coeffs
                .iter()
                .enumerate()
                .fold(Rational::zero(), |acc, (i, c)| acc + c * &out[j - 1 - i]);
            out.push(v);
        }
        out
    }

    fn index(&self, x: u64) -> Option<usize> {
        (x >= self.start && (x - self.start).is_multiple_of(self.step))
            .then(|| ((x - self.start) / self.step) as usize)
    }

    /// The dominant root when it is unique, real and positive (with its
    /// multiplicity); `None` when another root shares its modulus.
    pub fn dominant(&self) -> Option<Dominant> {
        let p = self.char_poly();
        if self.order() == 0 {
            return None;
        }
        // Roots of the square-free part are simple, so their numeric values
        // are reliable; multiplicities are recovered exactly from `p`.
        let sqfree = square_free(&p);
        let roots = complex_roots(&sqfree);
        let m = roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if m < 1e-12 {
            return Some(Dominant {
                root: Root::Rational(Rational::zero()),
                multiplicity: self.order(),
            });
        }
        let mut cluster = 0;
        for z in &roots {
            let near = ((z.re - m).powi(2) + z.im.powi(2)).sqrt() <= CLUSTER_TOL * m;
            if near {
                cluster += 1;
            } else if z.norm() >= m * (1.0 - MODULUS_GAP) {
                return None;
            }
        }
        if cluster != 1 {
            return None;
        }
        if let Some(r) = rational_root_near(&sqfree, m) {
            if r.is_positive() {
                let multiplicity = root_multiplicity(&p, &r);
                return Some(Dominant {
                    root: Root::Rational(r),
                    multiplicity,
                });
            }
        }
        let enclosure = enclose_real_root(&sqfree, m, &dyadic(1e-12, 50))?;
        let multiplicity = algebraic_multiplicity(&p, m);
        Some(Dominant {
            root: Root::Algebraic {
                poly: sqfree,
                enclosure,
            },
            multiplicity,
        })
    }

    /// Leading behavior `a(j) ~ c·b^j·j^e` for a rational dominant root `b`,
    /// as `(b, e, c)`.
    ///
    /// Writing the characteristic polynomial as `(z − b)^m·Q(z)`, the
    /// sequence `Q(E)a` is `b^j` times a polynomial of degree `m − 1` whose
    /// leading coefficient is `c·Q(b)`.
    pub fn leading_term(&self) -> Option<(Rational, usize, Rational)> {
        let dom = self.dominant()?;
        let Root::Rational(b) = dom.root else {
            return None;
        };
        if b.is_zero() {
            return None;
        }
        let m = dom.multiplicity;
        let mut q = self.char_poly();
        let lin = Polynomial::new(vec![-b.clone(), Rational::one()]);
        for _ in 0..m {
            q = q.div_rem(&lin).0;
        }
        let qd = q.degree().unwrap_or(0);
        let a = self.terms(qd + m + 1);
        // u(j) = (Q(E)a)(j) / b^j for j = 0..m
        let u: Vec<Rational> = (0..m)
            .map(|j| {
                let v = q
                    .coeffs()
                    .iter()
                    .enumerate()
                    .fold(Rational::zero(), |acc, (i, c)| acc + c * &a[j + i]);
                v / pow(&b, j as u64)
            })
            .collect();
        let xs: Vec<Rational> = (0..m).map(|j| Rational::from_i64(j as i64)).collect();
        let lead_u = Polynomial::interpolate(&xs, &u)
            .coeffs()
            .get(m - 1)
            .cloned()
            .unwrap_or_else(Rational::zero);
        let c = lead_u / q.eval(&b);
        Some((b, m - 1, c))
    }

    /// Closed form when all roots are rational and among `{b, 1}` with
    /// `b > 1`.
    pub fn closed_form(&self) -> Option<ExpPoly> {
        let p = self.char_poly();
        let dom = self.dominant()?;
        let Root::Rational(b) = dom.root else {
            return None;
        };
        if b <= Rational::one() {
            return None;
        }
        let m1 = dom.multiplicity;
        let m0 = root_multiplicity(&p, &Rational::one());
        if m1 + m0 != self.order() {
            return None;
        }
        let r = self.order();
        let a = self.terms(r);
        let rows: Vec<Vec<Rational>> = (0..r)
            .map(|j| {
                let jq = Rational::from_i64(j as i64);
                let bj = pow(&b, j as u64);
                let mut row: Vec<Rational> = (0..m1).map(|k| &bj * pow(&jq, k as u64)).collect();
                row.extend((0..m0).map(|k| pow(&jq, k as u64)));
                row
            })
            .collect();
        let sol = solve(rows, a)?;
        Some(ExpPoly {
            start: self.start,
            step: self.step,
            base: b,
            cofactor: Polynomial::new(sol[..m1].to_vec()),
            additive: Polynomial::new(sol[m1..].to_vec()),
            recurrence: self.clone(),
        })
    }
}

impl ExpPoly {
    pub fn eval_index(&self, j: u64) -> Rational {
        let jq = Rational::from_i64(j as i64);
        pow(&self.base, j) * self.cofactor.eval(&jq) + self.additive.eval(&jq)
    }
}

pub(crate) fn pow(b: &Rational, e: u64) -> Rational {
    num_traits::pow::pow(b.clone(), e as usize)
}

fn root_multiplicity(p: &Polynomial<Rational>, r: &Rational) -> usize {
    let lin = Polynomial::new(vec![-r.clone(), Rational::one()]);
    let mut q = p.clone();
    let mut m = 0;
    while q.degree().unwrap_or(0) > 0 {
        let (quot, rem) = q.div_rem(&lin);
        if !rem.is_zero() {
            break;
        }
        q = quot;
        m += 1;
    }
    m
}

/// Multiplicity in `p` of its simple real root near `approx`: the depth of
/// the chain `p, gcd(p, p'), …` whose square-free parts keep that root.
fn algebraic_multiplicity(p: &Polynomial<Rational>, approx: f64) -> usize {
    let mut g = p.clone();
    let mut m = 0;
    while g.degree().unwrap_or(0) > 0 {
        let near = complex_roots(&square_free(&g))
            .iter()
            .any(|z| ((z.re - approx).powi(2) + z.im.powi(2)).sqrt() <= CLUSTER_TOL * approx);
        if !near {
            break;
        }
        m += 1;
        g = Polynomial::gcd(&g, &g.derivative());
    }
    m
}

fn square_free(p: &Polynomial<Rational>) -> Polynomial<Rational> {
    let g = Polynomial::gcd(p, &p.derivative());
    p.div_rem(&g).0.monic()
}

impl SequenceModel {
    /// Model value at `x`, or `None` outside its domain.
    pub fn value(&self, x: u64) -> Option<Rational> {
        match self {
            SequenceModel::Polynomial { start, poly } => {
                (x >= *start).then(|| poly.eval(&Rational::from_i64(x as i64)))
            }
            SequenceModel::CFinite(c) => {
                let j = c.index(x)?;
                c.terms(j + 1).pop()
            }
            SequenceModel::ExpPoly(e) => {
                let j = e.recurrence.index(x)?;
                Some(e.eval_index(j as u64))
            }
            SequenceModel::PeriodicSplit { period, branches } => {
                branches[(x % period) as usize].as_ref()?.value(x)
            }
            SequenceModel::RatioFallback { .. } => None,
        }
    }

    /// First `x` the model applies to.
    pub fn start(&self) -> u64 {
        match self {
            SequenceModel::Polynomial { start, .. } => *start,
            SequenceModel::CFinite(c) => c.start,
            SequenceModel::ExpPoly(e) => e.start,
            SequenceModel::PeriodicSplit { branches, .. } => branches
                .iter()
                .flatten()
                .map(SequenceModel::start)
                .min()
                .unwrap_or(0),
            SequenceModel::RatioFallback { .. } => 0,
        }
    }

    /// Whether the model reproduces every term at or beyond its start.
    pub fn matches(&self, terms: &[Term]) -> bool {
        terms
            .iter()
            .filter(|(x, _)| *x >= self.start())
            .all(|(x, v)| self.value(*x) == Some(Rational::from_bigint(v)))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SequenceModel::Polynomial { .. } => "polynomial",
            SequenceModel::ExpPoly(_) => "exppoly",
            SequenceModel::CFinite(_) => "cfinite",
            SequenceModel::PeriodicSplit { .. } => "periodic",
            SequenceModel::RatioFallback { .. } => "ratio",
        }
    }

    /// Period of the residue split, `1` for unsplit models.
    pub fn period(&self) -> u64 {
        match self {
            SequenceModel::PeriodicSplit { period, .. } | SequenceModel::RatioFallback { period, .. } => {
                *period
            }
            _ => 1,
        }
    }
}

fn write_rationals(f: &mut fmt::Formatter<'_>, tag: &str, v: &[Rational]) -> fmt::Result {
    write!(f, "({tag}")?;
    for c in v {
        write!(f, " {c}")?;
    }
    write!(f, ")")
}

/// Canonical prefix notation, see the README for the grammar.
impl fmt::Display for SequenceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceModel::Polynomial { start, poly } => {
                write!(f, "(poly from={start} ")?;
                write_rationals(f, "coef", poly.coeffs())?;
                write!(f, ")")
            }
            SequenceModel::CFinite(c) => {
                write!(f, "(cfinite from={} step={} ", c.start, c.step)?;
                write_rationals(f, "rec", &c.coeffs)?;
                write!(f, " ")?;
                write_rationals(f, "init", &c.initial)?;
                write!(f, ")")
            }
            SequenceModel::ExpPoly(e) => {
                write!(f, "(exppoly from={} step={} base={} ", e.start, e.step, e.base)?;
                write_rationals(f, "cof", e.cofactor.coeffs())?;
                write!(f, " ")?;
                write_rationals(f, "add", e.additive.coeffs())?;
                write!(f, ")")
            }
            SequenceModel::PeriodicSplit { period, branches } => {
                write!(f, "(periodic p={period}")?;
                for b in branches {
                    match b {
                        Some(m) => write!(f, " {m}")?,
                        None => write!(f, " nil")?,
                    }
                }
                write!(f, ")")
            }
            SequenceModel::RatioFallback { period, bands } => {
                write!(f, "(ratio p={period}")?;
                for b in bands {
                    match b {
                        Some(e) => write!(f, " {e}")?,
                        None => write!(f, " nil")?,
                    }
                }
                write!(f, ")")
            }
        }
    }
}

fn rationals(terms: &[Term]) -> (Vec<Rational>, Vec<Rational>) {
    terms
        .iter()
        .map(|(x, v)| (Rational::from_i64(*x as i64), Rational::from_bigint(v)))
        .unzip()
}

/// Common step of the `x` values, if they form an arithmetic progression.
fn progression(terms: &[Term]) -> Option<u64> {
    let step = terms.get(1)?.0.checked_sub(terms[0].0)?;
    (step > 0 && terms.windows(2).all(|w| w[1].0 == w[0].0 + step)).then_some(step)
}

/// Interpolating polynomial of least degree `k` whose `k`-th divided
/// differences are constant, provided `k < len − 2` so at least three
/// differences confirm it.
pub fn fit_polynomial(terms: &[Term]) -> Option<SequenceModel> {
    if terms.len() < 4 {
        return None;
    }
    let (xs, ys) = rationals(terms);
    let table = crate::algebra::divided_differences(&xs, &ys);
    let len = terms.len();
    let k = (0..len - 2).find(|&k| table[k].windows(2).all(|w| w[0] == w[1]))?;
    let poly = Polynomial::interpolate(&xs[..=k], &ys[..=k]);
    Some(SequenceModel::Polynomial {
        start: terms[0].0,
        poly,
    })
}

/// Recurrence of least order `r ≤ (len − 2)/2` fitting every term exactly.
/// The terms must be equally spaced in `x`. A vanishing last coefficient
/// would only encode irregular leading terms and is not accepted; the
/// protocol drops those terms instead.
pub fn fit_cfinite(terms: &[Term]) -> Option<CFinite> {
    let step = progression(terms)?;
    let (_, ys) = rationals(terms);
    let len = ys.len();
    if len < 4 {
        return None;
    }
    for r in 1..=(len - 2) / 2 {
        let rows: Vec<Vec<Rational>> = (r..len).map(|j| (1..=r).map(|i| ys[j - i].clone()).collect()).collect();
        let rhs: Vec<Rational> = ys[r..].to_vec();
        if let Some(coeffs) = solve(rows, rhs).filter(|c| !c[r - 1].is_zero()) {
            return Some(CFinite {
                start: terms[0].0,
                step,
                coeffs,
                initial: ys[..r].to_vec(),
            });
        }
    }
    None
}

/// Polynomial, else a recurrence whose dominant root is unique, real and
/// positive (preferring its closed form).
fn fit_direct(terms: &[Term]) -> Option<SequenceModel> {
    if let Some(p) = fit_polynomial(terms) {
        return Some(p);
    }
    let c = fit_cfinite(terms)?;
    c.dominant()?;
    Some(match c.closed_form() {
        Some(e) => SequenceModel::ExpPoly(e),
        None => SequenceModel::CFinite(c),
    })
}

/// Smallest period in `periods` for which every nonempty residue class of
/// `x` has at least [`MIN_CLASS_TERMS`] equally spaced terms admitting a
/// direct fit.
pub fn fit_periodic(terms: &[Term], periods: &[u64]) -> Option<SequenceModel> {
    let mut periods = periods.to_vec();
    periods.sort_unstable();
    'period: for &p in &periods {
        if p == 0 {
            continue;
        }
        let mut branches = Vec::with_capacity(p as usize);
        for r in 0..p {
            let class: Vec<Term> = terms.iter().filter(|(x, _)| x % p == r).cloned().collect();
            if class.is_empty() {
                branches.push(None);
                continue;
            }
            if class.len() < MIN_CLASS_TERMS || (class.len() > 1 && progression(&class) != Some(p)) {
                continue 'period;
            }
            match fit_direct(&class) {
                Some(m) => branches.push(Some(m)),
                None => continue 'period,
            }
        }
        if branches.iter().any(Option::is_some) {
            return Some(SequenceModel::PeriodicSplit { period: p, branches });
        }
    }
    None
}

/// Cascade on one window: polynomial, recurrence, periodic split.
fn fit_window(terms: &[Term]) -> (Option<SequenceModel>, &'static str) {
    if let Some(m) = fit_polynomial(terms) {
        return (Some(m), "polynomial");
    }
    if let Some(c) = fit_cfinite(terms) {
        if c.dominant().is_some() {
            let m = match c.closed_form() {
                Some(e) => SequenceModel::ExpPoly(e),
                None => SequenceModel::CFinite(c),
            };
            return (Some(m), "cfinite");
        }
    }
    match fit_periodic(terms, &PERIODS[1..]) {
        Some(m) => (Some(m), "periodic"),
        None => (None, "none"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Exact,
    Failed,
}

/// Outcome of the fitting protocol for one sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FitReport {
    pub model: Option<SequenceModel>,
    /// Leading terms left out of the fit.
    pub dropped: usize,
    /// Terms in the fitted window.
    pub fitted: usize,
    /// `x` values the model was validated on.
    pub holdout: Vec<u64>,
    pub verdict: Verdict,
    /// Whether the longer prefix was needed.
    pub refit: bool,
    /// Every attempt in order, e.g. `"15-0:none"`: prefix length, dropped
    /// terms, outcome.
    pub chain: Vec<String>,
}

impl FitReport {
    pub fn is_exact(&self) -> bool {
        self.verdict == Verdict::Exact
    }

}

/// Protocol prefix and refit prefix for 21 terms.
pub const PREFIX: usize = 15;
pub const REFIT_PREFIX: usize = 18;
pub const PROTOCOL_TERMS: usize = 21;
/// Leading terms that may be dropped.
pub const MAX_DROP: usize = 3;
/// Shortest sequence the protocol accepts.
pub const MIN_TERMS: usize = 7;

/// Fits on a prefix and validates on the remaining terms, dropping up to
/// three leading terms and retrying with a longer prefix before giving up.
/// With other than 21 terms both prefixes scale proportionally.
pub fn fit_sequence(terms: &[Term]) -> Result<FitReport> {
    let len = terms.len();
    if len < MIN_TERMS {
        return Err(Error::TooShort {
            needed: MIN_TERMS,
            got: len,
        });
    }
    let scaled = |p: usize| (len * p + PROTOCOL_TERMS / 2) / PROTOCOL_TERMS;
    let mut prefixes = vec![scaled(PREFIX)];
    let refit = scaled(REFIT_PREFIX).min(len - 1);
    if refit > prefixes[0] {
        prefixes.push(refit);
    }
    let mut chain = Vec::new();
    for (stage, &prefix) in prefixes.iter().enumerate() {
        for drop in 0..=MAX_DROP {
            if prefix < drop + 4 {
                break;
            }
            let window = &terms[drop..prefix];
            let (model, label) = fit_window(window);
            let holdout = &terms[prefix..];
            let ok = model.as_ref().is_some_and(|m| m.matches(holdout));
            chain.push(format!("{prefix}-{drop}:{label}{}", if model.is_some() && !ok { "!" } else { "" }));
            if ok {
                return Ok(FitReport {
                    model,
                    dropped: drop,
                    fitted: prefix - drop,
                    holdout: holdout.iter().map(|(x, _)| *x).collect(),
                    verdict: Verdict::Exact,
                    refit: stage > 0,
                    chain,
                });
            }
        }
    }
    let last = *prefixes.last().unwrap();
    Ok(FitReport {
        model: None,
        dropped: 0,
        fitted: last,
        holdout: terms[last..].iter().map(|(x, _)| *x).collect(),
        verdict: Verdict::Failed,
        refit: false,
        chain,
    })
}

/// Linear recurrence with a bounded additive correction:
/// `a(p) = Σ coeffs[i]·a(p−1−i) + scale·g`, `g ∈ corrections`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuasiTemplate {
    pub coeffs: Vec<Rational>,
    pub scale: Rational,
    pub corrections: Vec<BigInt>,
}

impl QuasiTemplate {
    /// `s(p) = (5·s(p−1) − 3·s(p−2) + g)/2` with `g ∈ {−1, 0, 1}`.
    pub fn busy_beaver_space() -> Self {
        let half = |n: i64| Rational::new(BigInt::from(n), BigInt::from(2));
        Self {
            coeffs: vec![half(5), half(-3)],
            scale: half(1),
            corrections: [-1, 0, 1].map(BigInt::from).to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuasiVerdict {
    pub holds: bool,
    /// `(x, g)` for every checked term up to the first violation.
    pub corrections: Vec<(u64, BigInt)>,
    /// First `x` whose correction is outside the set or not integral.
    pub violation: Option<u64>,
}

/// Checks every term from the `order`-th on against the template. Terms must
/// be consecutive in `x`.
pub fn check_quasi_recurrence(terms: &[Term], template: &QuasiTemplate) -> QuasiVerdict {
    let r = template.coeffs.len();
    let mut corrections = Vec::new();
    for j in r..terms.len() {
        let (x, v) = &terms[j];
        let consecutive = (1..=r).all(|i| terms[j - i].0 + i as u64 == *x);
        let predicted = template
            .coeffs
            .iter()
            .enumerate()
            .fold(Rational::zero(), |acc, (i, c)| acc + c * Rational::from_bigint(&terms[j - 1 - i].1));
        let g = (Rational::from_bigint(v) - predicted) / &template.scale;
        let ok = consecutive && g.is_integer() && template.corrections.contains(&g.to_integer());
        if !ok {
            return QuasiVerdict {
                holds: false,
                corrections,
                violation: Some(*x),
            };
        }
        corrections.push((*x, g.to_integer()));
    }
    QuasiVerdict {
        holds: true,
        corrections,
        violation: None,
    }
}

/// Empirical band of `values` over its last `k` entries.
pub fn tail_band(values: &[Rational], k: usize) -> Option<Enclosure> {
    if values.is_empty() {
        return None;
    }
    let tail = &values[values.len().saturating_sub(k)..];
    let lo = tail.iter().min()?.clone();
    let hi = tail.iter().max()?.clone();
    Some(Enclosure { lo, hi })
}

/// Rounds a band outward to `bits` fractional bits so it prints compactly.
pub fn round_band(e: &Enclosure, bits: u32) -> Enclosure {
    let scale = BigInt::from(1u8) << bits as usize;
    let lo = (&e.lo * Rational::from_bigint(&scale)).floor();
    let hi = (&e.hi * Rational::from_bigint(&scale)).ceil();
    Enclosure {
        lo: lo / Rational::from_bigint(&scale),
        hi: hi / Rational::from_bigint(&scale),
    }
}

/// Values of the sequence as `f64`, mostly for diagnostics.
pub fn approx_values(terms: &[Term]) -> Vec<f64> {
    terms.iter().map(|(_, v)| v.to_f64().unwrap_or(f64::INFINITY)).collect()
}

/// Least common multiple of two periods.
pub fn lcm(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rational {
        Rational::from_i64(n)
    }

    fn gen(f: impl Fn(u64) -> i128, xs: std::ops::RangeInclusive<u64>) -> Vec<Term> {
        xs.map(|x| (x, BigInt::from(f(x)))).collect()
    }

    #[test]
    fn constant_and_linear_polynomials() {
        let m = fit_polynomial(&terms_from(1, [5, 5, 5, 5, 5])).unwrap();
        assert_eq!(m.to_string(), "(poly from=1 (coef 5))");
        let m = fit_polynomial(&terms_from(1, [5, 8, 11, 14, 17])).unwrap();
        let SequenceModel::Polynomial { poly, .. } = &m else { panic!() };
        assert_eq!(poly.coeffs(), &[q(2), q(3)]);
        let m = fit_polynomial(&terms_from(1, [1, 4, 9, 16, 25, 36])).unwrap();
        assert_eq!(m.value(7), Some(q(49)));
    }

    #[test]
    fn polynomial_needs_confirmation() {
        // Four terms only determine a cubic with a single check.
        assert!(fit_polynomial(&terms_from(1, [1, 2, 4, 8])).is_none());
        assert!(fit_polynomial(&terms_from(1, [1, 2, 3])).is_none());
    }

    #[test]
    fn doubling_recurrence() {
        let c = fit_cfinite(&terms_from(1, [2, 4, 8, 16, 32, 64])).unwrap();
        assert_eq!(c.coeffs, vec![q(2)]);
        let d = c.dominant().unwrap();
        assert_eq!(d.root, Root::Rational(q(2)));
        assert_eq!(d.multiplicity, 1);
    }

    #[test]
    fn minimal_order_is_returned() {
        // 2^j + j has characteristic polynomial (z-2)(z-1)^2.
        let terms = gen(|x| (1i128 << x) + x as i128, 1..=12);
        let c = fit_cfinite(&terms).unwrap();
        assert_eq!(c.order(), 3);
        let e = c.closed_form().unwrap();
        assert_eq!(e.base, q(2));
        let m = SequenceModel::ExpPoly(e);
        assert!(m.matches(&gen(|x| (1i128 << x) + x as i128, 1..=40)));
    }

    #[test]
    fn odd_branch_of_the_alternator() {
        // 4j + 3·2^(j+1) + 5 at x = 2j + 1
        let f = |x: u64| {
            let j = (x - 1) / 2;
            4 * j as i128 + 3 * (1i128 << (j + 1)) + 5
        };
        let terms: Vec<Term> = (0..8).map(|j| 2 * j + 1).map(|x| (x, BigInt::from(f(x)))).collect();
        assert_eq!(terms[0].1, BigInt::from(11));
        let c = fit_cfinite(&terms).unwrap();
        assert_eq!(c.order(), 3);
        assert_eq!(c.step, 2);
    }

    #[test]
    fn alternating_split() {
        let f = |x: u64| if x.is_multiple_of(2) { 1i128 << (x / 2) } else { 3 * (x as i128 / 2) + 1 };
        let terms = gen(f, 1..=21);
        let r = fit_sequence(&terms).unwrap();
        let m = r.model.unwrap();
        assert_eq!(m.period(), 2);
        assert!(m.matches(&gen(f, 1..=40)));
    }

    #[test]
    fn periodic_with_unit_period() {
        let m = fit_periodic(&terms_from(1, [3, 3, 3, 3, 3, 3]), &PERIODS).unwrap();
        assert_eq!(m.period(), 1);
    }

    #[test]
    fn protocol_on_generated_sequences() {
        let r = fit_sequence(&gen(|x| (x * x + 3) as i128, 1..=21)).unwrap();
        assert!(r.is_exact());
        assert_eq!(r.model.as_ref().unwrap().kind(), "polynomial");
        assert_eq!(r.holdout, (16..=21).collect::<Vec<_>>());

        let r = fit_sequence(&gen(|x| 7 * (1i128 << x), 1..=21)).unwrap();
        assert!(r.is_exact());
        let m = r.model.unwrap();
        assert!(matches!(m, SequenceModel::ExpPoly(ref e) if e.recurrence.order() == 1));
    }

    #[test]
    fn leading_prefix_is_dropped_and_reported() {
        let f = |x: u64| if x == 1 { 100 } else { 3 * x as i128 };
        let r = fit_sequence(&gen(f, 1..=21)).unwrap();
        assert!(r.is_exact());
        assert_eq!(r.dropped, 1);
        assert_eq!(r.model.unwrap().start(), 2);
    }

    #[test]
    fn too_short() {
        assert!(matches!(fit_sequence(&terms_from(1, [1, 2, 3])), Err(Error::TooShort { .. })));
    }

    #[test]
    fn quasi_recurrence_on_busy_beaver_space() {
        let s = terms_from(1, [3, 7, 13, 22, 36, 57, 88, 135, 205, 310]);
        let v = check_quasi_recurrence(&s, &QuasiTemplate::busy_beaver_space());
        assert!(v.holds);
        let nonzero: Vec<u64> = v.corrections.iter().filter(|(_, g)| !g.is_zero()).map(|(x, _)| *x).collect();
        assert_eq!(nonzero, vec![5, 7, 8, 9]);
        assert!(fit_sequence(&s).map(|r| !r.is_exact()).unwrap_or(true));
    }

    #[test]
    fn quasi_recurrence_reports_violation() {
        let exact = QuasiTemplate {
            coeffs: vec![q(2)],
            scale: q(1),
            corrections: vec![BigInt::zero()],
        };
        assert!(check_quasi_recurrence(&terms_from(1, [1, 2, 4, 8, 16]), &exact).holds);
        let v = check_quasi_recurrence(&terms_from(1, [1, 2, 4, 10, 20]), &exact);
        assert!(!v.holds);
        assert_eq!(v.violation, Some(4));
    }

    #[test]
    fn equal_modulus_roots_are_not_regular() {
        // 1, 2, 1, 2, ... satisfies a(j) = a(j-2)
        let c = fit_cfinite(&terms_from(1, [1, 2, 1, 2, 1, 2, 1, 2])).unwrap();
        assert!(c.dominant().is_none());
    }

    #[test]
    fn leading_term_via_operator() {
        // 3·2^j + 5j + 1
        let terms = gen(|x| 3 * (1i128 << (x - 1)) + 5 * (x as i128 - 1) + 1, 1..=12);
        let c = fit_cfinite(&terms).unwrap();
        let (b, e, lead) = c.leading_term().unwrap();
        assert_eq!((b, e, lead), (q(2), 0, q(3)));
    }

    #[test]
    fn golden_ratio_enclosure() {
        let c = fit_cfinite(&terms_from(1, [1, 1, 2, 3, 5, 8, 13, 21])).unwrap();
        let d = c.dominant().unwrap();
        let Root::Algebraic { enclosure, .. } = d.root else { panic!() };
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((enclosure.midpoint_f64() - phi).abs() < 1e-10);
        assert!(c.closed_form().is_none());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn eval(c: &[i64], x: u64) -> BigInt {
        c.iter().rev().fold(BigInt::zero(), |acc, &k| acc * BigInt::from(x) + BigInt::from(k))
    }

    proptest! {
        #[test]
        fn polynomials_fit_with_their_degree(
            mut c in prop::collection::vec(-50i64..=50, 1..=5),
            top in prop_oneof![-50i64..=-1, 1i64..=50],
            start in 1u64..5,
        ) {
            *c.last_mut().unwrap() = top;
            let terms: Vec<Term> = (start..start + 21).map(|x| (x, eval(&c, x))).collect();
            let report = fit_sequence(&terms).unwrap();
            let Some(SequenceModel::Polynomial { poly, .. }) = &report.model else {
                return Err(TestCaseError::fail(format!("{:?}", report.chain)));
            };
            prop_assert_eq!(poly.degree(), Some(c.len() - 1));
            prop_assert_eq!(report.dropped, 0);
            for x in start + 21..start + 40 {
                prop_assert_eq!(report.model.as_ref().unwrap().value(x), Some(Rational::from_bigint(&eval(&c, x))));
            }
        }

        #[test]
        fn geometric_sums_have_minimal_order(
            a in 1i64..=9, b in prop_oneof![-9i64..=-1, 1i64..=9], r in 2i64..=6, s in -1i64..=1,
        ) {
            prop_assume!(s != 0);
            let terms: Vec<Term> = (1..=15u32)
                .map(|x| (x as u64, BigInt::from(a) * BigInt::from(r).pow(x) + BigInt::from(b) * BigInt::from(s).pow(x)))
                .collect();
            let c = fit_cfinite(&terms).unwrap();
            prop_assert_eq!(c.order(), 2);
            prop_assert_eq!(c.dominant().unwrap().root, Root::Rational(Rational::from_i64(r)));
        }
    }
}
