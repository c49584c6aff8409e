//! Brute-force check that scoring functions are minimised in expectation at
//! the functional they target.

use elicit::elicit_check::{brute_force_argmin, check_consistency, has_unique_quantile, random_discrete, Grid};
use elicit::{ConvexSpec, Distribution, FunctionalSpec, ScoreSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> elicit::Result<()> {
    let f = Distribution::discrete(vec![-3.0, -1.0, 0.5, 2.0], vec![0.05, 0.2, 0.5, 0.25])?;
    let s = ScoreSpec::build_var_es(0.1, ConvexSpec::identity(), ConvexSpec::exp())?;
    let am = brute_force_argmin(&s, &f, &Grid::cube(-4.0, 4.0, 81, 2)?)?;
    let target = s.functional().expect("var_es targets (VaR, ES)").evaluate(&f)?;
    println!("(VaR, ES) argmin {:?}, exact {:?}, margin {:.3e}", am.x, target, am.margin);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut dists = Vec::new();
    while dists.len() < 10 {
        let d = random_discrete(&mut rng, 6, -5.0, 5.0);
        if has_unique_quantile(&d, 0.2, 1e-3) {
            dists.push(d);
        }
    }
    let grid = Grid::cube(-6.0, 6.0, 401, 1)?;
    for (name, s, t) in [
        ("pinball_0.2", ScoreSpec::pinball(0.2)?, FunctionalSpec::Quantile(0.2)),
        ("expectile_0.2", ScoreSpec::expectile(0.2, ConvexSpec::square())?, FunctionalSpec::Expectile(0.2)),
        ("bregman_exp", ScoreSpec::bregman(ConvexSpec::exp()), FunctionalSpec::Mean),
    ] {
        let r = check_consistency(&s, &t, &dists, &grid, 1e-3)?;
        let worst = r.cases.iter().map(|c| c.error).fold(0.0, f64::max);
        println!("{name:<14} passed {}/{}, worst error {worst:.2e}", r.passed, r.cases.len());
    }

    let gap = Distribution::mixture(vec![Distribution::uniform(-0.5, 0.0)?, Distribution::uniform(0.5, 1.0)?], vec![0.5, 0.5])?;
    let r = check_consistency(&ScoreSpec::pinball(0.5)?, &FunctionalSpec::Quantile(0.5), &[gap], &Grid::cube(-1.5, 2.0, 141, 1)?, 1e-3)?;
    println!("median with a density gap: margin {:.2e}, passes {}", r.cases[0].margin, r.all_pass());
    Ok(())
}
