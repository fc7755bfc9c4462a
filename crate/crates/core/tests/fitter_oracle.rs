mod common;

use common::{random_cfinite, random_model, Generator};
use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tmdim::seq::{fit_cfinite, fit_sequence};
use tmdim::Rational;

fn predicts(g: &Generator, seed: u64) -> Result<(), String> {
    let report = fit_sequence(&g.terms(1..=21)).map_err(|e| e.to_string())?;
    let model = report.model.ok_or_else(|| format!("seed {seed}: no model for {g:?}: {:?}", report.chain))?;
    for x in 22..=40 {
        let want = Rational::from_integer(g.value(x));
        if model.value(x).as_ref() != Some(&want) {
            return Err(format!("seed {seed}: {g:?} mispredicted at {x} by {model}"));
        }
    }
    Ok(())
}

#[test]
fn random_models_are_recovered_and_extrapolate() {
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_model(&mut rng);
        predicts(&g, seed).unwrap();
    }
}

#[test]
fn recurrence_order_is_minimal() {
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let g = random_cfinite(&mut rng);
        let c = fit_cfinite(&g.terms(1..=15)).expect("a recurrence of order at most 3 fits");
        assert_eq!(Some(c.order()), g.recurrence_order(), "{g:?}");
    }
}

#[test]
fn exact_models_reproduce_every_fitted_term() {
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + seed);
        let g = random_model(&mut rng);
        let terms = g.terms(1..=21);
        let report = fit_sequence(&terms).unwrap();
        let model = report.model.unwrap();
        for (x, v) in &terms[report.dropped..] {
            assert_eq!(model.value(*x), Some(Rational::from_integer(v.clone())), "{g:?} at {x}");
        }
    }
}

#[test]
fn irregular_prefix_is_dropped_and_reported() {
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + seed);
        let g = random_model(&mut rng);
        let mut terms = g.terms(1..=21);
        let k = (seed % 3 + 1) as usize;
        for (i, t) in terms.iter_mut().take(k).enumerate() {
            t.1 += BigInt::from(1_000_003 + 7 * i as i64);
        }
        let report = fit_sequence(&terms).unwrap();
        assert!(report.is_exact(), "{g:?}: {:?}", report.chain);
        assert!(report.dropped >= k, "{g:?}: dropped {} of {k}", report.dropped);
        assert_eq!(report.fitted + report.dropped + report.holdout.len(), terms.len());
    }
}
