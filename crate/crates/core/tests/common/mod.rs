//! Independent sequence generators used as oracles for the fitter.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;

/// A generated sequence with an exact closed form.
#[derive(Debug, Clone)]
pub enum Generator {
    /// `Σ c_k · C(x, k)`: integer valued for integer `c_k`.
    Binomial(Vec<i64>),
    /// `Σ (c_i + e_i·x) · r_i^x`.
    Geometric(Vec<(i64, i64, i64)>),
    /// Branch `x mod 2`.
    Alternating(Box<Generator>, Box<Generator>),
}

fn binomial(x: u64, k: usize) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k as u64 {
        if x < i {
            return BigInt::zero();
        }
        num *= BigInt::from(x - i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

impl Generator {
    pub fn value(&self, x: u64) -> BigInt {
        match self {
            Generator::Binomial(c) => c.iter().enumerate().map(|(k, &ck)| BigInt::from(ck) * binomial(x, k)).sum(),
            Generator::Geometric(terms) => terms
                .iter()
                .map(|&(c, e, r)| (BigInt::from(c) + BigInt::from(e) * BigInt::from(x)) * BigInt::from(r).pow(x as u32))
                .sum(),
            Generator::Alternating(even, odd) => {
                if x.is_multiple_of(2) {
                    even.value(x)
                } else {
                    odd.value(x)
                }
            }
        }
    }

    pub fn terms(&self, xs: std::ops::RangeInclusive<u64>) -> Vec<(u64, BigInt)> {
        xs.map(|x| (x, self.value(x))).collect()
    }

    /// Order of the least recurrence the sequence satisfies.
    pub fn recurrence_order(&self) -> Option<usize> {
        match self {
            Generator::Geometric(t) => Some(t.iter().map(|&(_, e, _)| if e == 0 { 1 } else { 2 }).sum()),
            _ => None,
        }
    }
}

fn nonzero(rng: &mut impl Rng, bound: i64) -> i64 {
    loop {
        let v = rng.gen_range(-bound..=bound);
        if v != 0 {
            return v;
        }
    }
}

/// Polynomial of degree at most `max_degree` with a nonzero top coefficient.
pub fn random_polynomial(rng: &mut impl Rng, max_degree: usize) -> Generator {
    let d = rng.gen_range(0..=max_degree);
    let mut c: Vec<i64> = (0..d).map(|_| rng.gen_range(-20..=20)).collect();
    c.push(nonzero(rng, 20));
    Generator::Binomial(c)
}

/// Recurrence of order at most 3 with a unique, positive dominant root.
pub fn random_cfinite(rng: &mut impl Rng) -> Generator {
    let dominant = rng.gen_range(2..=5i64);
    let order = rng.gen_range(1..=3usize);
    let mut terms = Vec::new();
    let doubled = order >= 2 && rng.gen_bool(0.25);
    terms.push((nonzero(rng, 9), if doubled { nonzero(rng, 5) } else { 0 }, dominant));
    let mut used = vec![dominant];
    let rest = order - if doubled { 2 } else { 1 };
    while terms.len() < rest + 1 {
        let r = nonzero(rng, dominant - 1);
        if !used.contains(&r) {
            used.push(r);
            terms.push((nonzero(rng, 9), 0, r));
        }
    }
    Generator::Geometric(terms)
}

/// Two branches by parity, each polynomial of degree at most 2.
pub fn random_alternating(rng: &mut impl Rng) -> Generator {
    loop {
        let (a, b) = (random_polynomial(rng, 2), random_polynomial(rng, 2));
        if (1..=21).any(|x| a.value(x) != b.value(x)) {
            return Generator::Alternating(Box::new(a), Box::new(b));
        }
    }
}

/// One of the three families, chosen uniformly.
pub fn random_model(rng: &mut impl Rng) -> Generator {
    match rng.gen_range(0..3) {
        0 => random_polynomial(rng, 4),
        1 => random_cfinite(rng),
        _ => random_alternating(rng),
    }
}
