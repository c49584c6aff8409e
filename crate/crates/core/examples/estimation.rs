//! M- and Z-estimation, Huber's K-estimator, and quantile/expectile regression.

use elicit::estimate::{fit_linear, huber_k, m_estimate, z_estimate, RegressionData};
use elicit::ident::IdentSpec;
use elicit::{ConvexSpec, ScoreSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> elicit::Result<()> {
    let y = [3.1, -0.4, 2.2, 8.9, 1.0, 0.7, -2.5, 4.4, 1.9];
    let m = m_estimate(&ScoreSpec::pinball(0.5)?, &y, (-10.0, 10.0))?;
    let z = z_estimate(&IdentSpec::Quantile(0.5), &y)?;
    println!("median: m-estimate {:.9}, z-estimate {:.9}", m.theta[0], z.theta[0]);
    for k in [1e-6, 1.0, 1e6] {
        println!("Huber K = {k:e}: {:.9}", huber_k(&y, k)?.theta[0]);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rows: Vec<Vec<f64>> = (0..300).map(|_| vec![1.0, rng.gen_range(0.0..10.0)]).collect();
    let resp: Vec<f64> = rows.iter().map(|r| 2.0 + 0.5 * r[1] + (1.0 + 0.2 * r[1]) * rng.gen_range(-1.0..1.0)).collect();
    let data = RegressionData::new(&rows, &resp)?;
    for (name, s) in [
        ("least squares", ScoreSpec::squared_error()),
        ("quantile 0.1", ScoreSpec::pinball(0.1)?),
        ("quantile 0.9", ScoreSpec::pinball(0.9)?),
        ("expectile 0.9", ScoreSpec::expectile(0.9, ConvexSpec::square())?),
    ] {
        let fit = fit_linear(&s, &data)?;
        println!("{name:<14} intercept {:>8.4}, slope {:>7.4}, objective {:.6}", fit.theta[0], fit.theta[1], fit.objective);
    }
    Ok(())
}
