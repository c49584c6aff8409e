//! Comparative backtest of two VaR/ES forecasters with the three-zone
//! Diebold-Mariano test.

use elicit::backtest::{dm_test, ForecastSeries};
use elicit::{norm_inv, norm_pdf, ConvexSpec, ScoreSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};

fn main() -> elicit::Result<()> {
    let alpha = 0.025;
    let s = ScoreSpec::build_var_es(alpha, ConvexSpec::identity(), ConvexSpec::exp())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 750;
    let (mut y, mut x, mut z) = (Vec::new(), Vec::new(), Vec::new());
    let q = norm_inv(alpha);
    for t in 0..n {
        let sigma = 1.0 + 0.5 * (t as f64 / 50.0).sin().abs();
        y.push(Normal::new(0.0, sigma).unwrap().sample(&mut rng));
        // Internal model tracks the volatility; the standard model uses a constant.
        x.push(vec![-sigma * q, sigma * norm_pdf(q) / alpha]);
        z.push(vec![-1.25 * q, 1.25 * norm_pdf(q) / alpha]);
    }
    let fs = ForecastSeries::new(y, x, z)?;
    for (label, series) in [("internal vs standard", fs.clone()), ("standard vs internal", fs.swapped())] {
        let r = dm_test(&s, &series, 0.05, None)?;
        println!(
            "{label}: K_n {:+.5}, sigma2 {:.5}, T_n {:+.3}, zone {:?} (C1 {:.3}, C2 {:.3}, bandwidth {})",
            r.k_n, r.sigma2_hat, r.t_n, r.zone, r.c1, r.c2, r.bandwidth
        );
    }
    Ok(())
}
