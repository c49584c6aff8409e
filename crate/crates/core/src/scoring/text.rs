//! Flat key-value text form of score specs, e.g.
//! `family=quantile; alpha=0.05; convex=identity`.
//!
//! Entries are separated by `;` or newlines. Recognised families:
//! `bregman`, `pinball`, `quantile`, `expectile`, `var_es`, `spectral`,
//! `mean_variance`. Optional `scale=` wraps the result in a positive scale.

use super::{ConvexSpec, ScoreSpec, Transform, VecConvex};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreParams {
    pub family: String,
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
    pub convex: Option<String>,
    pub g1: Option<String>,
    pub c: Option<f64>,
    pub pairs: Option<Vec<(f64, f64)>>,
    pub scale: Option<f64>,
}

fn num(key: &str, v: &str) -> Result<f64> {
    v.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("{key}: not a number: {v:?}")))
}

/// Parses `p1:q1,p2:q2,...`.
pub fn parse_pairs(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|item| {
            let (p, q) = item
                .split_once(':')
                .ok_or_else(|| Error::InvalidInput(format!("pairs: expected p:q, got {item:?}")))?;
            Ok((num("pairs", p)?, num("pairs", q)?))
        })
        .collect()
}

fn convex(name: &str, c: f64) -> Result<ConvexSpec> {
    ConvexSpec::by_name(name, c).ok_or_else(|| Error::InvalidInput(format!("unknown convex function {name:?}")))
}

impl ScoreParams {
    pub fn parse(text: &str) -> Result<Self> {
        let mut p = ScoreParams::default();
        for entry in text.split([';', '\n']).map(str::trim).filter(|e| !e.is_empty()) {
            let (k, v) = entry
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("expected key=value, got {entry:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "family" => p.family = v.to_string(),
                "alpha" => p.alpha = Some(num(k, v)?),
                "tau" => p.tau = Some(num(k, v)?),
                "convex" => p.convex = Some(v.to_string()),
                "g1" => p.g1 = Some(v.to_string()),
                "c" => p.c = Some(num(k, v)?),
                "pairs" => p.pairs = Some(parse_pairs(v)?),
                "scale" => p.scale = Some(num(k, v)?),
                _ => return invalid(format!("unknown key {k:?}")),
            }
        }
        if p.family.is_empty() {
            return invalid("missing family");
        }
        Ok(p)
    }

    /// Canonical text form; fields absent from the params are omitted.
    pub fn to_text(&self) -> String {
        let mut out = vec![format!("family={}", self.family)];
        if let Some(a) = self.alpha {
            out.push(format!("alpha={a}"));
        }
        if let Some(t) = self.tau {
            out.push(format!("tau={t}"));
        }
        if let Some(c) = &self.convex {
            out.push(format!("convex={c}"));
        }
        if let Some(g) = &self.g1 {
            out.push(format!("g1={g}"));
        }
        if let Some(c) = self.c {
            out.push(format!("c={c}"));
        }
        if let Some(ps) = &self.pairs {
            let items: Vec<String> = ps.iter().map(|(p, q)| format!("{p}:{q}")).collect();
            out.push(format!("pairs={}", items.join(",")));
        }
        if let Some(s) = self.scale {
            out.push(format!("scale={s}"));
        }
        out.join(";")
    }

    pub fn build(&self) -> Result<ScoreSpec> {
        let c = self.c.unwrap_or(1.0);
        let cv = |default: &str| convex(self.convex.as_deref().unwrap_or(default), c);
        let alpha = || self.alpha.ok_or_else(|| Error::InvalidInput(format!("{}: alpha is required", self.family)));
        let spec = match self.family.as_str() {
            "bregman" => ScoreSpec::bregman(cv("square")?),
            "pinball" => ScoreSpec::pinball(alpha()?)?,
            "quantile" => ScoreSpec::quantile(alpha()?, cv("identity")?)?,
            "expectile" => {
                let tau = self.tau.ok_or_else(|| Error::InvalidInput("expectile: tau is required".into()))?;
                ScoreSpec::expectile(tau, cv("square")?)?
            }
            "var_es" => {
                let g1 = convex(self.g1.as_deref().unwrap_or("identity"), c)?;
                ScoreSpec::build_var_es(alpha()?, g1, cv("exp")?)?
            }
            "spectral" => {
                let pairs = self.pairs.clone().ok_or_else(|| Error::InvalidInput("spectral: pairs are required".into()))?;
                ScoreSpec::build_spectral_joint_discrete(pairs, cv("boundedquad")?, c)?
            }
            "mean_variance" => ScoreSpec::build_funcplusmin(
                vec![ScoreSpec::squared_error()],
                VecConvex::Separable(vec![cv("boundedquad")?]),
                vec![c],
            )?,
            other => return invalid(format!("unknown score family {other:?}")),
        };
        match self.scale {
            Some(l) => spec.apply_transform(Transform::Scale(l)),
            None => Ok(spec),
        }
    }
}

impl ScoreSpec {
    /// Parses and builds a spec from the key-value text form.
    pub fn from_kv(text: &str) -> Result<Self> {
        ScoreParams::parse(text)?.build()
    }

    /// Key-value text form, for families built from built-in convex functions.
    pub fn to_kv(&self) -> Result<String> {
        let unsupported = || Error::Unsupported("score has no key-value form".into());
        let builtin = |c: &ConvexSpec| if c.is_builtin() { Ok(c.name()) } else { Err(unsupported()) };
        let mut p = ScoreParams::default();
        let mut spec = self;
        if let ScoreSpec::Scale { lambda, inner } = spec {
            p.scale = Some(*lambda);
            spec = inner;
        }
        let bq_c = |c: &ConvexSpec| c.param();
        match spec {
            ScoreSpec::Bregman { f } => {
                p.family = "bregman".into();
                p.convex = Some(builtin(f)?);
                p.c = bq_c(f);
            }
            ScoreSpec::Quantile { alpha, g } => {
                p.family = "quantile".into();
                p.alpha = Some(*alpha);
                p.convex = Some(builtin(g)?);
                p.c = bq_c(g);
            }
            ScoreSpec::Expectile { tau, f } => {
                p.family = "expectile".into();
                p.tau = Some(*tau);
                p.convex = Some(builtin(f)?);
                p.c = bq_c(f);
            }
            ScoreSpec::VarEs { alpha, g1, g2 } => {
                p.family = "var_es".into();
                p.alpha = Some(*alpha);
                p.convex = Some(builtin(g2)?);
                p.g1 = Some(builtin(g1)?);
                if bq_c(g1).is_some() || bq_c(g2).is_some() {
                    return Err(unsupported());
                }
            }
            ScoreSpec::SpectralJointDiscrete { pairs, f, c, .. } => {
                if bq_c(f).is_some_and(|fc| (fc - c).abs() > 1e-15 * c.abs().max(1.0)) {
                    return Err(unsupported());
                }
                p.family = "spectral".into();
                p.pairs = Some(pairs.clone());
                p.convex = Some(builtin(f)?);
                p.c = Some(*c);
            }
            _ => return Err(unsupported()),
        }
        Ok(p.to_text())
    }
}
