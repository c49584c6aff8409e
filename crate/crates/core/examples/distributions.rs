//! Building distributions and querying quantiles, expectiles and moments.

use elicit::{mix, Distribution, Integrand};

fn main() -> elicit::Result<()> {
    let d = Distribution::discrete(vec![-2.0, 0.0, 1.5, 4.0], vec![0.1, 0.4, 0.3, 0.2])?;
    println!("discrete law: mean {:.4}, F(0) = {}", d.mean(), d.cdf(0.0));
    for a in [0.05, 0.1, 0.5, 0.9] {
        println!(
            "  alpha {a:>4}: lower quantile {:>5}, upper quantile {:>5}, expectile {:.6}",
            d.lower_quantile(a)?,
            d.upper_quantile(a)?,
            d.expectile(a)?
        );
    }

    let n = Distribution::normal(1.0, 2.0)?;
    println!("N(1, 4): q_0.975 = {:.6}, E[Y^2] = {:.6}", n.lower_quantile(0.975)?, n.expect(&|y| y * y)?);

    let m = mix(&[Distribution::uniform(0.0, 1.0)?, Distribution::point_mass(3.0)], &[0.75, 0.25])?;
    let cube = Integrand::power(3);
    println!("0.75 U[0,1] + 0.25 delta_3: median {:.6}, E[Y^3] = {:.6}", m.lower_quantile(0.5)?, m.expect(&|y| cube.eval(y))?);

    let sample = Distribution::empirical(&[2.3, -0.7, 1.1, 0.4, -1.9, 3.2, 0.0])?;
    println!("empirical sample: 0.3-quantile {}, 0.3-expectile {:.6}", sample.lower_quantile(0.3)?, sample.expectile(0.3)?);
    let shifted = sample.affine(2.0, 1.0)?;
    println!("2Y + 1:           0.3-quantile {}, 0.3-expectile {:.6}", shifted.lower_quantile(0.3)?, shifted.expectile(0.3)?);
    Ok(())
}
