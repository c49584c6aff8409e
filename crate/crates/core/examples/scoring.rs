//! Scoring functions: the built-in families, their key-value text form, and
//! score transforms.

use elicit::scoring::VecConvex;
use elicit::{ConvexSpec, Distribution, ScoreSpec, Transform};

fn main() -> elicit::Result<()> {
    let pinball = ScoreSpec::pinball(0.1)?;
    println!("pinball_0.1(x = 1, y = 3) = {}", pinball.score(&[1.0], 3.0)?);
    println!("pinball_0.1(x = 1, y = -1) = {}", pinball.score(&[1.0], -1.0)?);

    let var_es = ScoreSpec::from_kv("family=var_es; alpha=0.05")?;
    println!("var_es text form: {}", var_es.to_kv()?);
    println!("var_es score at (VaR, ES) = (1.6, 2.1), y = -2.5: {:.6}", var_es.score(&[1.6, 2.1], -2.5)?);
    match var_es.score(&[2.5, 2.0], 0.0) {
        Err(e) => println!("VaR above ES is rejected: {e}"),
        Ok(v) => println!("unexpected score {v}"),
    }

    let f = Distribution::normal(0.0, 1.0)?;
    let mse = ScoreSpec::squared_error();
    for x in [-0.5, 0.0, 0.5] {
        println!("expected squared error at x = {x:>4}: {:.6}", mse.mean_score(&[x], &f)?);
    }

    let scaled = pinball.apply_transform(Transform::Scale(4.0))?;
    let normalized = ScoreSpec::bregman(ConvexSpec::square()).apply_transform(Transform::Normalize)?;
    println!("scaled pinball {:.3}, normalized Bregman at y = x: {}", scaled.score(&[1.0], 3.0)?, normalized.score(&[2.0], 2.0)?);

    let spectral = ScoreSpec::build_spectral_joint_discrete(vec![(0.6, 0.05), (0.4, 0.1)], ConvexSpec::bounded_quad(1.0), 1.0)?;
    println!("joint spectral score: dimension {}, strict {}", spectral.dim(), spectral.is_strict());

    let mean_var = ScoreSpec::build_funcplusmin(
        vec![ScoreSpec::squared_error()],
        VecConvex::Separable(vec![ConvexSpec::bounded_quad(1.0)]),
        vec![1.0],
    )?;
    println!("mean-variance score at (0, 1), y = 0.3: {:.6}", mean_var.score(&[0.0, 1.0], 0.3)?);
    Ok(())
}
