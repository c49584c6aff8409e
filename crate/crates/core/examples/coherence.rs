//! Coherence axioms, comonotonic additivity and level-set convexity probes.

use elicit::elicit_check::{
    coherence_check, comonotone_check, es_counterexample, level_set_probe, var_counterexample, PairedSample,
};
use elicit::{Distribution, FunctionalSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};

fn main() -> elicit::Result<()> {
    let (x1, x2) = var_counterexample(2.0)?;
    let product = PairedSample::product(&x1, &x2)?;
    let r = coherence_check(&FunctionalSpec::VaR(0.05), &[product], &[], &[])?;
    for v in &r.violations {
        println!("VaR_0.05 violates {:?}: {} > {}", v.axiom, v.lhs, v.rhs);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let samples: Vec<PairedSample> = (0..30)
        .map(|_| {
            let x: Vec<f64> = (0..40).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let y: Vec<f64> = (0..40).map(|_| StandardNormal.sample(&mut rng)).collect();
            PairedSample::new(x, y)
        })
        .collect::<elicit::Result<_>>()?;
    for rho in [FunctionalSpec::ES(0.1), FunctionalSpec::EVaR(0.2), FunctionalSpec::VaR(0.1)] {
        let r = coherence_check(&rho, &samples, &[0.5, 3.0], &[-1.0, 2.0])?;
        println!("{rho:?}: {} violations over {} paired samples", r.total_violations(), samples.len());
    }

    let driver: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    for rho in [FunctionalSpec::ES(0.3), FunctionalSpec::EVaR(0.3)] {
        let c = comonotone_check(&rho, &driver, &|u| u, &|u| u.exp())?;
        println!("{rho:?} on (N, exp N): rho(X+Y) - rho(X) - rho(Y) = {:.3e}", c.difference);
    }

    let lambdas: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
    let (f1, f2) = es_counterexample(0.5)?;
    println!("ES_0.5 level-set deviation: {:.6}", level_set_probe(&FunctionalSpec::ES(0.5), &f1, &f2, &lambdas)?);
    let a = Distribution::uniform_atoms(&[-1.0, 1.0])?;
    let b = Distribution::uniform_atoms(&[-3.0, 0.0, 3.0])?;
    println!("mean level-set deviation: {:.3e}", level_set_probe(&FunctionalSpec::Mean, &a, &b, &lambdas)?);
    Ok(())
}
