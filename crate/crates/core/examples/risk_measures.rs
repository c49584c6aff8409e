//! VaR, ES, EVaR and spectral risk measures, including the ES mixture
//! counterexample to elicitability.

use elicit::elicit_check::es_counterexample;
use elicit::{mix, norm_inv, norm_pdf, Distribution, FunctionalSpec};

fn one(t: &FunctionalSpec, f: &Distribution) -> elicit::Result<f64> {
    Ok(t.evaluate(f)?[0])
}

fn main() -> elicit::Result<()> {
    let (mu, sigma, alpha) = (0.5, 2.0, 0.025);
    let n = Distribution::normal(mu, sigma)?;
    let z = norm_inv(alpha);
    println!("N({mu}, {sigma}^2) at alpha = {alpha}");
    println!("  VaR {:.10}  closed form {:.10}", one(&FunctionalSpec::VaR(alpha), &n)?, -mu - sigma * z);
    println!("  ES  {:.10}  closed form {:.10}", one(&FunctionalSpec::ES(alpha), &n)?, -mu + sigma * norm_pdf(z) / alpha);
    println!("  EVaR_0.1 {:.10}", one(&FunctionalSpec::EVaR(0.1), &n)?);
    let spec = FunctionalSpec::spectral(vec![(0.5, 0.01), (0.5, 0.05)])?;
    println!("  spectral value (0.5 ES_0.01 + 0.5 ES_0.05, negated) {:.10}", one(&spec, &n)?);

    let losses = [-4.1, -2.7, -0.3, 0.2, 0.9, 1.4, 1.8, 2.2, 3.0, 5.5];
    let e = Distribution::empirical(&losses)?;
    println!("sample of {}: VaR_0.2 {}, ES_0.2 {:.4}", losses.len(), one(&FunctionalSpec::VaR(0.2), &e)?, one(&FunctionalSpec::ES(0.2), &e)?);

    let (f1, f2) = es_counterexample(0.5)?;
    let es = FunctionalSpec::ES(0.5);
    let m = mix(&[f1.clone(), f2.clone()], &[0.5, 0.5])?;
    println!(
        "ES_0.5: F1 {:.3e}, F2 {:.3e}, (F1 + F2)/2 {:.12} (3/16 = {})",
        one(&es, &f1)?,
        one(&es, &f2)?,
        one(&es, &m)?,
        3.0 / 16.0
    );
    Ok(())
}
