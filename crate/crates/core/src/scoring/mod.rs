//! Scoring functions: the consistent families, the transform algebra and
//! expected scores `S̄(x, F) = E S(x, Y)`.
//!
//! Every family takes the forecast first and the realisation second. Each
//! spec carries a strictness flag derived from the hypotheses of the
//! theorem that produced it; nothing is assumed strict by default.
//!
//! Joint risk-measure scores ([`ScoreSpec::VarEs`], the spectral families)
//! use the same sign convention as [`crate::functionals`]: they are
//! minimised at `(VaR, ES)` resp. at `(quantiles..., -sum p_i ES_{q_i})`.

mod convex;
mod text;

pub use convex::{ConvexSpec, Monotone, VecConvex};
pub use text::{parse_pairs, ScoreParams};

use crate::dist::{Distribution, Integrand};
use crate::error::{invalid, Error, Result};
use crate::functionals::{validate_pairs, FunctionalSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::sync::Arc;

/// Map `R^k -> R^k` used by the revelation principle.
pub type VecMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Box on which hypotheses such as monotonicity of `H_{i,u}` are sampled.
pub const VALIDATION_BOX: (f64, f64) = (-10.0, 10.0);
const VALIDATION_STEPS: usize = 401;

/// A bijective reparametrisation `g` with its inverse.
#[derive(Clone)]
pub struct Reparam {
    pub name: String,
    pub g: VecMap,
    pub g_inv: VecMap,
}

impl fmt::Debug for Reparam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Reparam({})", self.name)
    }
}

#[derive(Clone, Debug)]
pub enum ScoreSpec {
    /// `-f(x) - f'(x)(y - x)`; consistent for the mean.
    Bregman { f: ConvexSpec },
    /// `-f(x)q(y) - grad f(x)·(h(y) - q(y)x)`; consistent for `E h / E q`.
    RatioBregman { f: VecConvex, h: Vec<Integrand>, q: Integrand },
    /// `(1{y <= x} - alpha)(g(x) - g(y))` with `g` increasing.
    Quantile { alpha: f64, g: ConvexSpec },
    /// `|1{y <= x} - tau| (f(y) - f(x) - f'(x)(y - x))`.
    Expectile { tau: f64, f: ConvexSpec },
    /// Joint score for `(F^{<-}(q_1), ..., -sum p_i ES_{q_i})`, continuous F.
    SpectralJoint { pairs: Vec<(f64, f64)>, gs: Vec<ConvexSpec>, gk: ConvexSpec, strict: bool },
    /// Joint score for the same functional valid for general F.
    SpectralJointDiscrete { pairs: Vec<(f64, f64)>, f: ConvexSpec, c: f64, strict: bool },
    /// Joint score for `(VaR_alpha, ES_alpha)` on `x1 <= x2`; `g2` is `G2`.
    VarEs { alpha: f64, g1: ConvexSpec, g2: ConvexSpec },
    /// Score for `(T_1, S̄_1(T_1, F), ..., S̄_n(T_1, F))`.
    FuncPlusMin { base: Vec<ScoreSpec>, f: VecConvex, c: Vec<f64>, strict: bool },
    /// Sum of scores acting on consecutive blocks of the forecast.
    Separable(Vec<ScoreSpec>),
    Scale { lambda: f64, inner: Box<ScoreSpec> },
    AddOffset { h: Integrand, inner: Box<ScoreSpec> },
    /// `S(x, y) - S(T(δ_y), y)`.
    Normalize(Box<ScoreSpec>),
    /// Positive combination of scores for the same functional.
    MixtureOf(Vec<(ScoreSpec, f64)>),
    /// `S(g^{-1}(x), y)`, a score for `g ∘ T`.
    Reveal { map: Reparam, inner: Box<ScoreSpec> },
}

/// Transforms accepted by [`ScoreSpec::apply_transform`].
#[derive(Clone, Debug)]
pub enum Transform {
    Scale(f64),
    AddOffset(Integrand),
    Normalize,
    Reveal(Reparam),
}

#[inline]
fn ind(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn grid_box() -> impl Iterator<Item = f64> {
    let (lo, hi) = VALIDATION_BOX;
    (0..VALIDATION_STEPS).map(move |i| lo + (hi - lo) * i as f64 / (VALIDATION_STEPS - 1) as f64)
}

fn check_level(name: &str, a: f64) -> Result<()> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        invalid(format!("{name} must lie in (0,1), got {a}"))
    }
}

fn joint_pairs(pairs: &[(f64, f64)]) -> Result<()> {
    validate_pairs(pairs)?;
    if pairs.iter().any(|p| p.1 >= 1.0) {
        return invalid("spectral joint score: levels q_i must be < 1 (fold q = 1 into the mean)");
    }
    Ok(())
}

impl ScoreSpec {
    pub fn bregman(f: ConvexSpec) -> Self {
        ScoreSpec::Bregman { f }
    }

    /// Squared error `(x - y)^2`, the normalised Bregman score of `x^2`.
    pub fn squared_error() -> Self {
        ScoreSpec::Normalize(Box::new(ScoreSpec::bregman(ConvexSpec::square())))
    }

    pub fn ratio_bregman(f: VecConvex, h: Vec<Integrand>, q: Integrand) -> Result<Self> {
        if h.is_empty() || f.dim() != h.len() {
            return invalid("ratio score: dimension of f must equal the number of numerators");
        }
        Ok(ScoreSpec::RatioBregman { f, h, q })
    }

    pub fn quantile(alpha: f64, g: ConvexSpec) -> Result<Self> {
        check_level("quantile level alpha", alpha)?;
        if !g.is_increasing() {
            return invalid("quantile score: g must be increasing");
        }
        Ok(ScoreSpec::Quantile { alpha, g })
    }

    /// The pinball loss `(1{y <= x} - alpha)(x - y)`.
    pub fn pinball(alpha: f64) -> Result<Self> {
        Self::quantile(alpha, ConvexSpec::identity())
    }

    pub fn expectile(tau: f64, f: ConvexSpec) -> Result<Self> {
        check_level("expectile level tau", tau)?;
        Ok(ScoreSpec::Expectile { tau, f })
    }

    /// Joint score for continuous F. Requires `G_k` convex and each
    /// `H_{i,u}(v) = v (p_i/q_i) g_k(u) + g_i(v)` increasing, checked on a grid.
    pub fn build_spectral_joint(pairs: Vec<(f64, f64)>, gs: Vec<ConvexSpec>, gk: ConvexSpec) -> Result<Self> {
        joint_pairs(&pairs)?;
        if gs.len() != pairs.len() {
            return invalid("spectral joint score: need one g_i per (p_i, q_i) pair");
        }
        let mut strict = gk.strictly_convex();
        let vs: Vec<f64> = grid_box().collect();
        for (i, (&(p, q), g)) in pairs.iter().zip(&gs).enumerate() {
            for u in grid_box().step_by(10) {
                let r = p / q * gk.df(u);
                let h: Vec<f64> = vs.iter().map(|&v| v * r + g.f(v)).collect();
                for w in h.windows(2) {
                    let d = w[1] - w[0];
                    if d < 0.0 {
                        return invalid(format!("spectral joint score: H_{{{},u}} is not increasing at u = {u}", i + 1));
                    }
                    if d == 0.0 {
                        strict = false;
                    }
                }
            }
        }
        Ok(ScoreSpec::SpectralJoint { pairs, gs, gk, strict })
    }

    /// Joint score valid for general F. Requires `-f' <= c` (strict: `<`
    /// and `f` strictly convex), checked on a grid.
    pub fn build_spectral_joint_discrete(pairs: Vec<(f64, f64)>, f: ConvexSpec, c: f64) -> Result<Self> {
        joint_pairs(&pairs)?;
        let mut strict = f.strictly_convex();
        for v in grid_box() {
            let m = -f.df(v);
            if m > c {
                return invalid(format!("spectral joint score: -f'({v}) = {m} exceeds c = {c}"));
            }
            if m == c {
                strict = false;
            }
        }
        Ok(ScoreSpec::SpectralJointDiscrete { pairs, f, c, strict })
    }

    /// Joint `(VaR, ES)` score. Requires `g1` increasing and `G2` convex and
    /// increasing; strict when `g1` is strictly increasing and `G2` strictly
    /// convex and strictly increasing.
    pub fn build_var_es(alpha: f64, g1: ConvexSpec, g2: ConvexSpec) -> Result<Self> {
        check_level("VaR/ES level alpha", alpha)?;
        if !g1.is_increasing() {
            return invalid("VaR/ES score: g1 must be increasing");
        }
        if !g2.is_increasing() {
            return invalid("VaR/ES score: G2 must be increasing");
        }
        Ok(ScoreSpec::VarEs { alpha, g1, g2 })
    }

    /// Score for the mean-score functional. All base scores act on the same
    /// forecast block; the first must be strictly consistent for `T_1`.
    /// Requires `∂_i f <= c_i` on the validation box.
    pub fn build_funcplusmin(base: Vec<ScoreSpec>, f: VecConvex, c: Vec<f64>) -> Result<Self> {
        if base.is_empty() {
            return invalid("func-plus-min score: no base scores");
        }
        let m = base[0].dim();
        if base.iter().any(|s| s.dim() != m) {
            return invalid("func-plus-min score: base scores must share the forecast dimension");
        }
        let n = base.len();
        if f.dim() != n || c.len() != n {
            return invalid("func-plus-min score: f and c must have one entry per base score");
        }
        let mut strict = f.strictly_convex() && base[0].is_strict();
        let mut check = |z: &[f64]| -> Result<()> {
            let g = f.grad(z);
            for i in 0..n {
                if g[i] > c[i] {
                    return invalid(format!("func-plus-min score: ∂_{} f = {} exceeds c = {}", i + 1, g[i], c[i]));
                }
                if g[i] == c[i] {
                    strict = false;
                }
            }
            Ok(())
        };
        match &f {
            VecConvex::Separable(parts) => {
                for i in 0..parts.len() {
                    for v in grid_box() {
                        let mut z = vec![0.0; n];
                        z[i] = v;
                        check(&z)?;
                    }
                }
            }
            VecConvex::Custom { .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(0xE11C17);
                let (lo, hi) = VALIDATION_BOX;
                for _ in 0..2000 {
                    let z: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
                    check(&z)?;
                }
            }
        }
        Ok(ScoreSpec::FuncPlusMin { base, f, c, strict })
    }

    pub fn separable(parts: Vec<ScoreSpec>) -> Result<Self> {
        if parts.is_empty() {
            return invalid("separable score: no parts");
        }
        Ok(ScoreSpec::Separable(parts))
    }

    /// Positive combination of scores sharing one target functional, at
    /// least one of them strict.
    pub fn mixture_of(members: Vec<(ScoreSpec, f64)>) -> Result<Self> {
        if members.is_empty() {
            return invalid("score mixture: no members");
        }
        if members.iter().any(|m| !(m.1 > 0.0)) {
            return invalid("score mixture: weights must be positive");
        }
        let key = members[0].0.target_key();
        if members.iter().any(|m| m.0.target_key() != key) {
            return invalid("score mixture: members target different functionals");
        }
        if !members.iter().any(|m| m.0.is_strict()) {
            return invalid("score mixture: no strictly consistent member");
        }
        Ok(ScoreSpec::MixtureOf(members))
    }

    pub fn apply_transform(&self, t: Transform) -> Result<Self> {
        match t {
            Transform::Scale(lambda) => {
                if !(lambda > 0.0) || !lambda.is_finite() {
                    return invalid("scale: lambda must be positive");
                }
                Ok(ScoreSpec::Scale { lambda, inner: Box::new(self.clone()) })
            }
            Transform::AddOffset(h) => Ok(ScoreSpec::AddOffset { h, inner: Box::new(self.clone()) }),
            Transform::Normalize => {
                if self.point_value(0.0).is_none() {
                    return Err(Error::Unsupported(
                        "normalize: the functional has no computable value at point masses for this family".into(),
                    ));
                }
                Ok(ScoreSpec::Normalize(Box::new(self.clone())))
            }
            Transform::Reveal(map) => self.reveal(map),
        }
    }

    /// Score for `g ∘ T`: `S_g(x, y) = S(g^{-1}(x), y)`. Checks `g(g^{-1}(x)) = x`
    /// on 100 sampled points.
    pub fn reveal(&self, map: Reparam) -> Result<Self> {
        let k = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0xE11C17);
        for _ in 0..100 {
            let x: Vec<f64> = (0..k).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let back = (map.g)(&(map.g_inv)(&x));
            if back.len() != k {
                return invalid("reveal: g changes the dimension");
            }
            for (a, b) in x.iter().zip(&back) {
                if (a - b).abs() > 1e-9 * a.abs().max(1.0) || !b.is_finite() {
                    return invalid(format!("reveal: g(g_inv(x)) != x at {x:?}"));
                }
            }
        }
        Ok(ScoreSpec::Reveal { map, inner: Box::new(self.clone()) })
    }

    /// Forecast dimension `k`.
    pub fn dim(&self) -> usize {
        match self {
            ScoreSpec::Bregman { .. } | ScoreSpec::Quantile { .. } | ScoreSpec::Expectile { .. } => 1,
            ScoreSpec::RatioBregman { h, .. } => h.len(),
            ScoreSpec::SpectralJoint { pairs, .. } | ScoreSpec::SpectralJointDiscrete { pairs, .. } => pairs.len() + 1,
            ScoreSpec::VarEs { .. } => 2,
            ScoreSpec::FuncPlusMin { base, .. } => base[0].dim() + base.len(),
            ScoreSpec::Separable(v) => v.iter().map(|s| s.dim()).sum(),
            ScoreSpec::Scale { inner, .. }
            | ScoreSpec::AddOffset { inner, .. }
            | ScoreSpec::Normalize(inner)
            | ScoreSpec::Reveal { inner, .. } => inner.dim(),
            ScoreSpec::MixtureOf(v) => v[0].0.dim(),
        }
    }

    /// Strict consistency as implied by the construction's hypotheses.
    pub fn is_strict(&self) -> bool {
        match self {
            ScoreSpec::Bregman { f } | ScoreSpec::Expectile { f, .. } => f.strictly_convex(),
            ScoreSpec::RatioBregman { f, .. } => f.strictly_convex(),
            ScoreSpec::Quantile { g, .. } => g.strictly_increasing(),
            ScoreSpec::SpectralJoint { strict, .. }
            | ScoreSpec::SpectralJointDiscrete { strict, .. }
            | ScoreSpec::FuncPlusMin { strict, .. } => *strict,
            ScoreSpec::VarEs { g1, g2, .. } => {
                g1.strictly_increasing() && g2.strictly_convex() && g2.strictly_increasing()
            }
            ScoreSpec::Separable(v) => v.iter().all(|s| s.is_strict()),
            ScoreSpec::Scale { inner, .. }
            | ScoreSpec::AddOffset { inner, .. }
            | ScoreSpec::Normalize(inner)
            | ScoreSpec::Reveal { inner, .. } => inner.is_strict(),
            ScoreSpec::MixtureOf(v) => v.iter().any(|m| m.0.is_strict()),
        }
    }

    /// A descriptor of the target functional, used to refuse mixtures of
    /// scores for different functionals.
    pub fn target_key(&self) -> String {
        match self {
            ScoreSpec::Bregman { .. } => "mean".into(),
            ScoreSpec::RatioBregman { h, q, .. } => {
                let hs: Vec<&str> = h.iter().map(|i| i.name()).collect();
                format!("ratio({};{})", hs.join(","), q.name())
            }
            ScoreSpec::Quantile { alpha, .. } => format!("quantile({alpha})"),
            ScoreSpec::Expectile { tau, .. } => format!("expectile({tau})"),
            ScoreSpec::SpectralJoint { pairs, .. } | ScoreSpec::SpectralJointDiscrete { pairs, .. } => {
                format!("spectral({pairs:?})")
            }
            ScoreSpec::VarEs { alpha, .. } => format!("var_es({alpha})"),
            ScoreSpec::FuncPlusMin { base, .. } => {
                let parts: Vec<String> = base.iter().map(|s| format!("{s:?}")).collect();
                format!("mean_score({};{})", base[0].target_key(), parts.join(","))
            }
            ScoreSpec::Separable(v) => {
                let parts: Vec<String> = v.iter().map(|s| s.target_key()).collect();
                format!("[{}]", parts.join(","))
            }
            ScoreSpec::Scale { inner, .. } | ScoreSpec::AddOffset { inner, .. } | ScoreSpec::Normalize(inner) => {
                inner.target_key()
            }
            ScoreSpec::MixtureOf(v) => v[0].0.target_key(),
            ScoreSpec::Reveal { map, inner } => format!("{}∘{}", map.name, inner.target_key()),
        }
    }

    /// The functional this score is consistent for, when it can be named.
    pub fn functional(&self) -> Option<FunctionalSpec> {
        Some(match self {
            ScoreSpec::Bregman { .. } => FunctionalSpec::Mean,
            ScoreSpec::RatioBregman { h, q, .. } => FunctionalSpec::RatioOfExpectations { h: h.clone(), q: q.clone() },
            ScoreSpec::Quantile { alpha, .. } => FunctionalSpec::Quantile(*alpha),
            ScoreSpec::Expectile { tau, .. } => FunctionalSpec::Expectile(*tau),
            ScoreSpec::SpectralJoint { pairs, .. } | ScoreSpec::SpectralJointDiscrete { pairs, .. } => {
                let mut v: Vec<FunctionalSpec> = pairs.iter().map(|p| FunctionalSpec::Quantile(p.1)).collect();
                v.push(FunctionalSpec::Spectral(pairs.clone()));
                FunctionalSpec::VectorOf(v)
            }
            ScoreSpec::VarEs { alpha, .. } => {
                FunctionalSpec::VectorOf(vec![FunctionalSpec::VaR(*alpha), FunctionalSpec::ES(*alpha)])
            }
            ScoreSpec::FuncPlusMin { base, .. } => FunctionalSpec::MeanScore {
                base: Box::new(base[0].functional()?),
                scores: base.clone(),
            },
            ScoreSpec::Separable(v) => FunctionalSpec::VectorOf(v.iter().map(|s| s.functional()).collect::<Option<_>>()?),
            ScoreSpec::Scale { inner, .. } | ScoreSpec::AddOffset { inner, .. } | ScoreSpec::Normalize(inner) => {
                inner.functional()?
            }
            ScoreSpec::MixtureOf(v) => v[0].0.functional()?,
            ScoreSpec::Reveal { .. } => return None,
        })
    }

    /// `T(δ_y)`, when the family defines it.
    pub fn point_value(&self, y: f64) -> Option<Vec<f64>> {
        match self {
            ScoreSpec::Bregman { .. } | ScoreSpec::Quantile { .. } | ScoreSpec::Expectile { .. } => Some(vec![y]),
            ScoreSpec::RatioBregman { h, q, .. } => {
                let qy = q.eval(y);
                Some(h.iter().map(|hi| hi.eval(y) / qy).collect())
            }
            ScoreSpec::SpectralJoint { .. } => None,
            ScoreSpec::SpectralJointDiscrete { pairs, .. } => Some(vec![y; pairs.len() + 1]),
            ScoreSpec::VarEs { .. } => Some(vec![-y, -y]),
            ScoreSpec::FuncPlusMin { base, .. } => {
                let mut t = base[0].point_value(y)?;
                let vals: Vec<f64> = base.iter().map(|s| s.eval(&t, y)).collect();
                t.extend(vals);
                Some(t)
            }
            ScoreSpec::Separable(v) => {
                let mut out = Vec::new();
                for s in v {
                    out.extend(s.point_value(y)?);
                }
                Some(out)
            }
            ScoreSpec::Scale { inner, .. } | ScoreSpec::AddOffset { inner, .. } | ScoreSpec::Normalize(inner) => {
                inner.point_value(y)
            }
            ScoreSpec::MixtureOf(v) => v[0].0.point_value(y),
            ScoreSpec::Reveal { map, inner } => Some((map.g)(&inner.point_value(y)?)),
        }
    }

    /// Verifies the forecast dimension and the family's domain.
    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return invalid(format!("forecast has dimension {}, score expects {}", x.len(), self.dim()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite forecast");
        }
        match self {
            ScoreSpec::VarEs { .. } if x[0] > x[1] => {
                Err(Error::Domain(format!("VaR/ES score needs x1 <= x2, got x1 = {} > x2 = {}", x[0], x[1])))
            }
            ScoreSpec::FuncPlusMin { base, .. } => base[0].check(&x[..base[0].dim()]),
            ScoreSpec::Separable(v) => {
                let mut o = 0;
                for s in v {
                    s.check(&x[o..o + s.dim()])?;
                    o += s.dim();
                }
                Ok(())
            }
            ScoreSpec::Scale { inner, .. } | ScoreSpec::AddOffset { inner, .. } | ScoreSpec::Normalize(inner) => {
                inner.check(x)
            }
            ScoreSpec::MixtureOf(v) => v.iter().try_for_each(|m| m.0.check(x)),
            ScoreSpec::Reveal { map, inner } => inner.check(&(map.g_inv)(x)),
            _ => Ok(()),
        }
    }

    /// `S(x, y)`.
    pub fn score(&self, x: &[f64], y: f64) -> Result<f64> {
        self.check(x)?;
        let v = self.eval(x, y);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation(format!("non-finite score at x = {x:?}, y = {y}")))
        }
    }

    /// `S̄(x, F)`.
    pub fn mean_score(&self, x: &[f64], f: &Distribution) -> Result<f64> {
        self.check(x)?;
        f.expect_with_knots(&|y| self.eval(x, y), &self.knots(x))
    }

    /// Mean score over a sample, without building a distribution.
    pub fn sample_mean_score(&self, x: &[f64], ys: &[f64]) -> Result<f64> {
        self.check(x)?;
        if ys.is_empty() {
            return invalid("empty sample");
        }
        let s: f64 = ys.iter().map(|&y| self.eval(x, y)).sum();
        let m = s / ys.len() as f64;
        if m.is_finite() {
            Ok(m)
        } else {
            Err(Error::Evaluation("non-finite mean score".into()))
        }
    }

    // Points in y where the score jumps or kinks, given x.
    fn knots(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ScoreSpec::Quantile { .. } | ScoreSpec::Expectile { .. } => vec![x[0]],
            ScoreSpec::SpectralJoint { pairs, .. } | ScoreSpec::SpectralJointDiscrete { pairs, .. } => {
                x[..pairs.len()].to_vec()
            }
            ScoreSpec::VarEs { .. } => vec![-x[0]],
            ScoreSpec::FuncPlusMin { base, .. } => {
                let xb = &x[..base[0].dim()];
                base.iter().flat_map(|s| s.knots(xb)).collect()
            }
            ScoreSpec::Separable(v) => {
                let mut o = 0;
                let mut out = Vec::new();
                for s in v {
                    out.extend(s.knots(&x[o..o + s.dim()]));
                    o += s.dim();
                }
                out
            }
            ScoreSpec::Scale { inner, .. } | ScoreSpec::AddOffset { inner, .. } => inner.knots(x),
            ScoreSpec::Normalize(inner) => inner.knots(x),
            ScoreSpec::MixtureOf(v) => v.iter().flat_map(|m| m.0.knots(x)).collect(),
            ScoreSpec::Reveal { map, inner } => inner.knots(&(map.g_inv)(x)),
            ScoreSpec::Bregman { .. } | ScoreSpec::RatioBregman { .. } => Vec::new(),
        }
    }

    // Unchecked evaluation; callers run `check` first.
    pub(crate) fn eval(&self, x: &[f64], y: f64) -> f64 {
        match self {
            ScoreSpec::Bregman { f } => -f.f(x[0]) - f.df(x[0]) * (y - x[0]),
            ScoreSpec::RatioBregman { f, h, q } => {
                let qy = q.eval(y);
                let g = f.grad(x);
                let lin: f64 = g.iter().zip(h).zip(x).map(|((gi, hi), xi)| gi * (hi.eval(y) - qy * xi)).sum();
                -f.f(x) * qy - lin
            }
            ScoreSpec::Quantile { alpha, g } => (ind(y <= x[0]) - alpha) * (g.f(x[0]) - g.f(y)),
            ScoreSpec::Expectile { tau, f } => {
                (ind(y <= x[0]) - tau).abs() * (f.f(y) - f.f(x[0]) - f.df(x[0]) * (y - x[0]))
            }
            ScoreSpec::SpectralJoint { pairs, gs, gk, .. } => {
                let k = pairs.len();
                let xk = x[k];
                let mut s = 0.0;
                let mut inner = xk;
                for (i, &(p, q)) in pairs.iter().enumerate() {
                    let xi = x[i];
                    let b = ind(y <= xi);
                    s += (b - q) * gs[i].f(xi) - b * gs[i].f(y);
                    inner += p / q * (b * (xi - y) - q * xi);
                }
                s + gk.df(xk) * inner - gk.f(xk)
            }
            ScoreSpec::SpectralJointDiscrete { pairs, f, c, .. } => {
                let k = pairs.len();
                let xk = x[k];
                let a: f64 = pairs
                    .iter()
                    .zip(x)
                    .map(|(&(p, q), &xi)| {
                        let b = ind(y <= xi);
                        p / q * ((b - q) * xi - b * y)
                    })
                    .sum();
                -f.f(xk) + f.df(xk) * (xk + a) + c * a
            }
            ScoreSpec::VarEs { alpha, g1, g2 } => {
                let (u, v) = (-x[0], -x[1]);
                let b = ind(y <= u);
                (b - alpha) * g1.f(u) - b * g1.f(y) + g2.df(v) * (x[0] - x[1] + b * (u - y) / alpha) - g2.f(v)
            }
            ScoreSpec::FuncPlusMin { base, f, c, .. } => {
                let m = base[0].dim();
                let (xb, z) = x.split_at(m);
                let grad = f.grad(z);
                let mut acc = -f.f(z);
                for (i, s) in base.iter().enumerate() {
                    let si = s.eval(xb, y);
                    acc += -grad[i] * (si - z[i]) + c[i] * si;
                }
                acc
            }
            ScoreSpec::Separable(v) => {
                let mut o = 0;
                let mut acc = 0.0;
                for s in v {
                    acc += s.eval(&x[o..o + s.dim()], y);
                    o += s.dim();
                }
                acc
            }
            ScoreSpec::Scale { lambda, inner } => lambda * inner.eval(x, y),
            ScoreSpec::AddOffset { h, inner } => inner.eval(x, y) + h.eval(y),
            ScoreSpec::Normalize(inner) => {
                let t = inner.point_value(y).expect("normalize validated at construction");
                inner.eval(x, y) - inner.eval(&t, y)
            }
            ScoreSpec::MixtureOf(v) => v.iter().map(|(s, w)| w * s.eval(x, y)).sum(),
            ScoreSpec::Reveal { map, inner } => inner.eval(&(map.g_inv)(x), y),
        }
    }
}

/// The (mean, variance) reparametrisation `g(x1, x2) = (x1, x2 - x1^2)`.
pub fn mean_variance_reparam() -> Reparam {
    Reparam {
        name: "mean_variance".into(),
        g: Arc::new(|x: &[f64]| vec![x[0], x[1] - x[0] * x[0]]),
        g_inv: Arc::new(|x: &[f64]| vec![x[0], x[1] + x[0] * x[0]]),
    }
}
