//! Functionals `T: F -> R^k` and their evaluation.
//!
//! Sign convention for risk measures: positions with losses are negative,
//! a larger risk number means more risk. `VaR = -F^{<-}(alpha)`,
//! `ES = -(1/alpha) int_0^alpha F^{<-}(u) du`, `EVaR = -e_tau`. The spectral
//! functional is `-sum p_i ES_{q_i}` (a sign-flipped spectral risk measure).

use crate::dist::{Distribution, Integrand};
use crate::error::{invalid, Result};
use crate::scoring::ScoreSpec;

#[derive(Clone, Debug)]
pub enum FunctionalSpec {
    Mean,
    Moment(u32),
    RatioOfExpectations { h: Vec<Integrand>, q: Integrand },
    Quantile(f64),
    Expectile(f64),
    Variance,
    VaR(f64),
    ES(f64),
    EVaR(f64),
    Spectral(Vec<(f64, f64)>),
    Entropic(f64),
    VectorOf(Vec<FunctionalSpec>),
    MeanScore { base: Box<FunctionalSpec>, scores: Vec<ScoreSpec> },
}

/// Checks spectral pairs `(p_i, q_i)`: `p` a simplex, `q_i` in `(0,1]` and
/// pairwise distinct.
pub fn validate_pairs(pairs: &[(f64, f64)]) -> Result<()> {
    if pairs.is_empty() {
        return invalid("spectral: no (p, q) pairs");
    }
    if pairs.iter().any(|&(p, _)| !(p > 0.0)) {
        return invalid("spectral: weights p_i must be positive");
    }
    let s: f64 = pairs.iter().map(|p| p.0).sum();
    if (s - 1.0).abs() > 1e-12 {
        return invalid(format!("spectral: weights sum to {s}, not 1"));
    }
    if pairs.iter().any(|&(_, q)| !(q > 0.0 && q <= 1.0)) {
        return invalid("spectral: levels q_i must lie in (0, 1]");
    }
    for (i, a) in pairs.iter().enumerate() {
        if pairs[i + 1..].iter().any(|b| b.1 == a.1) {
            return invalid("spectral: levels q_i must be pairwise distinct");
        }
    }
    Ok(())
}

impl FunctionalSpec {
    pub fn spectral(pairs: Vec<(f64, f64)>) -> Result<Self> {
        validate_pairs(&pairs)?;
        Ok(FunctionalSpec::Spectral(pairs))
    }

    pub fn ratio(h: Vec<Integrand>, q: Integrand) -> Result<Self> {
        if h.is_empty() {
            return invalid("ratio: empty numerator vector");
        }
        Ok(FunctionalSpec::RatioOfExpectations { h, q })
    }

    /// `(T_1(F), S_1bar(T_1(F), F), ...)`. The base must be elicitable.
    pub fn mean_score(base: FunctionalSpec, scores: Vec<ScoreSpec>) -> Result<Self> {
        if !base.is_elicitable_family() {
            return invalid("mean-score: base functional must be elicitable (not variance, ES, spectral or entropic)");
        }
        if scores.is_empty() {
            return invalid("mean-score: no scores");
        }
        let k = base.dim();
        if let Some(s) = scores.iter().find(|s| s.dim() != k) {
            return invalid(format!("mean-score: score dimension {} does not match base dimension {k}", s.dim()));
        }
        Ok(FunctionalSpec::MeanScore { base: Box::new(base), scores })
    }

    fn is_elicitable_family(&self) -> bool {
        match self {
            FunctionalSpec::Mean
            | FunctionalSpec::Moment(_)
            | FunctionalSpec::RatioOfExpectations { .. }
            | FunctionalSpec::Quantile(_)
            | FunctionalSpec::Expectile(_)
            | FunctionalSpec::VaR(_)
            | FunctionalSpec::EVaR(_)
            | FunctionalSpec::MeanScore { .. } => true,
            FunctionalSpec::VectorOf(v) => v.iter().all(|t| t.is_elicitable_family()),
            _ => false,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FunctionalSpec::RatioOfExpectations { h, .. } => h.len(),
            FunctionalSpec::VectorOf(v) => v.iter().map(|t| t.dim()).sum(),
            FunctionalSpec::MeanScore { base, scores } => base.dim() + scores.len(),
            _ => 1,
        }
    }

    pub fn evaluate(&self, f: &Distribution) -> Result<Vec<f64>> {
        Ok(match self {
            FunctionalSpec::VectorOf(v) => {
                let mut out = Vec::with_capacity(self.dim());
                for t in v {
                    out.extend(t.evaluate(f)?);
                }
                out
            }
            FunctionalSpec::RatioOfExpectations { h, q } => {
                let den = f.expect(&|y| q.eval(y))?;
                if !(den > 0.0) {
                    return invalid("ratio: E q(Y) must be positive");
                }
                h.iter().map(|hi| Ok(f.expect(&|y| hi.eval(y))? / den)).collect::<Result<_>>()?
            }
            FunctionalSpec::MeanScore { base, scores } => {
                let t = base.evaluate(f)?;
                let mut out = t.clone();
                for s in scores {
                    out.push(s.mean_score(&t, f)?);
                }
                out
            }
            _ => vec![self.scalar(f)?],
        })
    }

    fn scalar(&self, f: &Distribution) -> Result<f64> {
        match self {
            FunctionalSpec::Mean => Ok(f.mean()),
            FunctionalSpec::Moment(k) => {
                if *k == 0 {
                    return invalid("moment: order must be positive");
                }
                let k = *k as i32;
                f.expect(&|y| y.powi(k))
            }
            FunctionalSpec::Quantile(a) => f.lower_quantile(*a),
            FunctionalSpec::Expectile(t) => f.expectile(*t),
            FunctionalSpec::Variance => {
                let m = f.mean();
                f.expect(&|y| (y - m) * (y - m))
            }
            FunctionalSpec::VaR(a) => Ok(-f.lower_quantile(*a)?),
            FunctionalSpec::ES(a) => expected_shortfall(f, *a),
            FunctionalSpec::EVaR(t) => Ok(-f.expectile(*t)?),
            FunctionalSpec::Spectral(pairs) => {
                validate_pairs(pairs)?;
                let mut acc = 0.0;
                for &(p, q) in pairs {
                    acc += p * expected_shortfall(f, q)?;
                }
                Ok(-acc)
            }
            FunctionalSpec::Entropic(a) => entropic(f, *a),
            _ => unreachable!("vector-valued functional"),
        }
    }
}

/// `ES_alpha = -(1/alpha)(E[Y 1{Y <= q}] + q(alpha - F(q)))` with `q` the lower
/// alpha-quantile; `ES_1 = -E Y`.
pub fn expected_shortfall(f: &Distribution, alpha: f64) -> Result<f64> {
    if alpha == 1.0 {
        return Ok(-f.mean());
    }
    let q = f.lower_quantile(alpha)?;
    let below = match f.atoms() {
        Some(d) => d
            .points()
            .iter()
            .zip(d.weights())
            .take_while(|(p, _)| **p <= q)
            .map(|(p, w)| p * w)
            .sum(),
        None => f.expect_below(&|y| y, q)?,
    };
    Ok(-(below + q * (alpha - f.cdf(q))) / alpha)
}

fn entropic(f: &Distribution, a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return invalid("entropic: alpha must be positive");
    }
    match f {
        Distribution::Normal { mu, sigma } => Ok(-mu + 0.5 * a * sigma * sigma),
        _ => {
            if let Some(d) = f.atoms() {
                let m = d.points().iter().map(|y| -a * y).fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = d.points().iter().zip(d.weights()).map(|(y, w)| w * (-a * y - m).exp()).sum();
                return Ok((m + s.ln()) / a);
            }
            let e = f.expect(&|y| (-a * y).exp())?;
            Ok(e.ln() / a)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::mix;
    use crate::special::{norm_inv, norm_pdf};

    fn one(t: &FunctionalSpec, f: &Distribution) -> f64 {
        t.evaluate(f).unwrap()[0]
    }

    // Oracle: integrate the step quantile function over (0, alpha) piece by
    // piece; the atom at p_i occupies levels (c_{i-1}, c_i].
    fn es_quantile_integral(points: &[f64], weights: &[f64], alpha: f64) -> f64 {
        let mut lo = 0.0;
        let mut acc = 0.0;
        for (p, w) in points.iter().zip(weights) {
            let hi = lo + w;
            let len = hi.min(alpha) - lo;
            if len > 0.0 {
                acc += p * len;
            }
            lo = hi;
        }
        -acc / alpha
    }

    #[test]
    fn normal_closed_forms() {
        let (mu, sigma, a) = (0.3, 1.7, 0.025);
        let n = Distribution::normal(mu, sigma).unwrap();
        let z = norm_inv(a);
        assert!((one(&FunctionalSpec::VaR(a), &n) - (-mu - sigma * z)).abs() < 1e-12);
        assert!((one(&FunctionalSpec::ES(a), &n) - (-mu + sigma * norm_pdf(z) / a)).abs() < 1e-8);
        assert!((one(&FunctionalSpec::Entropic(0.5), &n) - (-mu + 0.25 * sigma * sigma)).abs() < 1e-12);
    }

    #[test]
    fn es_atom_identity_matches_quantile_integral() {
        let pts = [-4.0, -1.5, 0.0, 2.0, 7.0];
        let ws = [0.03, 0.1, 0.37, 0.3, 0.2];
        let d = Distribution::discrete(pts.to_vec(), ws.to_vec()).unwrap();
        for &a in &[0.01, 0.05, 0.1, 0.13, 0.5, 0.9] {
            let es = one(&FunctionalSpec::ES(a), &d);
            let o = es_quantile_integral(&pts, &ws, a);
            assert!((es - o).abs() < 1e-12, "alpha {a}: {es} vs {o}");
            assert!(es >= one(&FunctionalSpec::VaR(a), &d) - 1e-10);
        }
    }

    #[test]
    fn variance_on_mixture() {
        let f0 = Distribution::uniform_atoms(&[0.0, 2.0]).unwrap();
        let f1 = Distribution::uniform_atoms(&[10.0, 12.0]).unwrap();
        let m = mix(&[f0, f1], &[0.5, 0.5]).unwrap();
        // 0.5*1 + 0.5*1 + 0.25*100
        assert!((one(&FunctionalSpec::Variance, &m) - 26.0).abs() < 1e-12);
    }

    #[test]
    fn evar_half_is_minus_mean() {
        let d = Distribution::uniform_atoms(&[-2.0, 0.5, 3.0, 9.0]).unwrap();
        assert!((one(&FunctionalSpec::EVaR(0.5), &d) + d.mean()).abs() < 1e-12);
    }

    #[test]
    fn spectral_single_pair_and_full_level() {
        let d = Distribution::uniform_atoms(&[-2.0, 0.5, 3.0, 9.0]).unwrap();
        let s = FunctionalSpec::spectral(vec![(1.0, 0.3)]).unwrap();
        assert_eq!(one(&s, &d), -one(&FunctionalSpec::ES(0.3), &d));
        let s1 = FunctionalSpec::spectral(vec![(0.5, 1.0), (0.5, 0.25)]).unwrap();
        let expect = -(0.5 * -d.mean() + 0.5 * one(&FunctionalSpec::ES(0.25), &d));
        assert!((one(&s1, &d) - expect).abs() < 1e-15);
        assert!(FunctionalSpec::spectral(vec![(0.5, 0.2), (0.5, 0.2)]).is_err());
        assert!(FunctionalSpec::spectral(vec![(0.5, 0.2), (0.4, 0.3)]).is_err());
    }

    #[test]
    fn mean_score_rejects_non_elicitable_base() {
        let s = crate::scoring::ScoreSpec::bregman(crate::scoring::ConvexSpec::square());
        assert!(FunctionalSpec::mean_score(FunctionalSpec::Variance, vec![s.clone()]).is_err());
        assert!(FunctionalSpec::mean_score(FunctionalSpec::ES(0.1), vec![s.clone()]).is_err());
        assert!(FunctionalSpec::mean_score(FunctionalSpec::Mean, vec![s]).is_ok());
    }

    #[test]
    fn entropic_bernoulli() {
        let b = Distribution::uniform_atoms(&[0.0, 1.0]).unwrap();
        let want = (0.5 * (1.0 + (-1.0f64).exp())).ln();
        assert!((one(&FunctionalSpec::Entropic(1.0), &b) - want).abs() < 1e-15);
    }
}
