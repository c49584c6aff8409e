//! Identification functions `V(x, y)` with `V̄(T(F), F) = 0`, and a probe for
//! orientation: `v·V̄(T(F) + s v, F) > 0  <=>  s > 0`.

use crate::dist::{Distribution, Integrand};
use crate::error::{invalid, Result};
use crate::functionals::FunctionalSpec;
use crate::scoring::{Reparam, ScoreSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::Serialize;

/// Offsets probed by [`check_orientation`].
pub const ORIENTATION_OFFSETS: [f64; 4] = [1e-3, 1e-2, 1e-1, 1.0];
/// Sign-test tolerance of [`check_orientation`].
pub const ORIENTATION_TOL: f64 = 1e-10;
/// Tolerance for `V̄(T(F), F) = 0`.
pub const ZERO_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub enum IdentSpec {
    /// `x - y`.
    Mean,
    /// `q(y) x_i - h_i(y)`.
    Ratio { h: Vec<Integrand>, q: Integrand },
    /// `1{y <= x} - alpha`.
    Quantile(f64),
    /// `|1{y <= x} - tau| (x - y)`.
    Expectile(f64),
    /// `clamp(x - y, -K, K)`, Huber's psi with the sign of `x - y`.
    Huber(f64),
    Stacked(Vec<IdentSpec>),
    /// `(V_1(x_{1..k-1}, y), S_1(x_{1..k-1}, y) - x_k)`.
    CondJoint { base: Box<IdentSpec>, score: ScoreSpec },
    /// `V(g^{-1}(x), y)`, identifies `g ∘ T`.
    Reveal { map: Reparam, inner: Box<IdentSpec> },
}

impl IdentSpec {
    pub fn cond_joint(base: IdentSpec, score: ScoreSpec) -> Result<Self> {
        if score.dim() != base.dim() {
            return invalid("conditional identification: score dimension must match the base block");
        }
        Ok(IdentSpec::CondJoint { base: Box::new(base), score })
    }

    pub fn huber(k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return invalid("huber: K must be positive");
        }
        Ok(IdentSpec::Huber(k))
    }

    pub fn dim(&self) -> usize {
        match self {
            IdentSpec::Ratio { h, .. } => h.len(),
            IdentSpec::Stacked(v) => v.iter().map(|i| i.dim()).sum(),
            IdentSpec::CondJoint { base, .. } => base.dim() + 1,
            IdentSpec::Reveal { inner, .. } => inner.dim(),
            _ => 1,
        }
    }

    pub fn ident(&self, x: &[f64], y: f64) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return invalid(format!("forecast has dimension {}, identification expects {}", x.len(), self.dim()));
        }
        let mut out = Vec::with_capacity(x.len());
        self.eval(x, y, &mut out);
        Ok(out)
    }

    /// `V̄(x, F)`, componentwise.
    pub fn mean_ident(&self, x: &[f64], f: &Distribution) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return invalid(format!("forecast has dimension {}, identification expects {}", x.len(), self.dim()));
        }
        let knots = self.knots(x);
        (0..self.dim())
            .map(|i| {
                f.expect_with_knots(
                    &|y| {
                        let mut b = Vec::with_capacity(x.len());
                        self.eval(x, y, &mut b);
                        b[i]
                    },
                    &knots,
                )
            })
            .collect()
    }

    fn knots(&self, x: &[f64]) -> Vec<f64> {
        match self {
            IdentSpec::Quantile(_) | IdentSpec::Expectile(_) => vec![x[0]],
            IdentSpec::Huber(k) => vec![x[0] - k, x[0] + k],
            IdentSpec::Stacked(v) => {
                let mut o = 0;
                let mut out = Vec::new();
                for s in v {
                    out.extend(s.knots(&x[o..o + s.dim()]));
                    o += s.dim();
                }
                out
            }
            IdentSpec::CondJoint { base, .. } => {
                // The score's own kinks sit at forecast coordinates too.
                let xb = &x[..base.dim()];
                let mut k = base.knots(xb);
                k.extend_from_slice(xb);
                k.extend(xb.iter().map(|v| -v));
                k
            }
            IdentSpec::Reveal { map, inner } => inner.knots(&(map.g_inv)(x)),
            _ => Vec::new(),
        }
    }

    fn eval(&self, x: &[f64], y: f64, out: &mut Vec<f64>) {
        match self {
            IdentSpec::Mean => out.push(x[0] - y),
            IdentSpec::Ratio { h, q } => {
                let qy = q.eval(y);
                out.extend(h.iter().zip(x).map(|(hi, xi)| qy * xi - hi.eval(y)));
            }
            IdentSpec::Quantile(a) => out.push(if y <= x[0] { 1.0 - a } else { -a }),
            IdentSpec::Expectile(t) => {
                let w = if y <= x[0] { 1.0 - t } else { *t };
                out.push(w * (x[0] - y));
            }
            IdentSpec::Huber(k) => out.push((x[0] - y).clamp(-k, *k)),
            IdentSpec::Stacked(v) => {
                let mut o = 0;
                for s in v {
                    s.eval(&x[o..o + s.dim()], y, out);
                    o += s.dim();
                }
            }
            IdentSpec::CondJoint { base, score } => {
                let m = base.dim();
                base.eval(&x[..m], y, out);
                out.push(score.eval(&x[..m], y) - x[m]);
            }
            IdentSpec::Reveal { map, inner } => inner.eval(&(map.g_inv)(x), y, out),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `V̄(T(F), F)` is not zero.
    NonzeroAtTarget,
    /// The sign of `v·V̄(T(F) + s v, F)` disagrees with the sign of `s`.
    SignMismatch,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrientationViolation {
    pub dist_index: usize,
    pub kind: ViolationKind,
    pub direction: Vec<f64>,
    pub offset: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct OrientationReport {
    pub probes_checked: usize,
    pub violations: Vec<OrientationViolation>,
}

impl OrientationReport {
    pub fn is_oriented(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Probes orientation of `V` for `T` on each distribution, along coordinate
/// axes and `probes` random unit directions (seeded), at the offsets
/// `±ORIENTATION_OFFSETS`.
pub fn check_orientation(
    v: &IdentSpec,
    t: &FunctionalSpec,
    fs: &[Distribution],
    probes: usize,
) -> Result<OrientationReport> {
    if probes == 0 {
        return invalid("orientation: probes must be positive");
    }
    let k = v.dim();
    if t.dim() != k {
        return invalid("orientation: functional and identification dimensions differ");
    }
    let mut dirs: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut e = vec![0.0; k];
            e[i] = 1.0;
            e
        })
        .collect();
    if k > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xE11C17);
        for _ in 0..probes {
            let mut d: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = d.iter().map(|a| a * a).sum::<f64>().sqrt();
            d.iter_mut().for_each(|a| *a /= n);
            dirs.push(d);
        }
    }
    let mut report = OrientationReport::default();
    for (fi, f) in fs.iter().enumerate() {
        let target = t.evaluate(f)?;
        let at = v.mean_ident(&target, f)?;
        report.probes_checked += 1;
        if let Some(&bad) = at.iter().find(|a| a.abs() > ZERO_TOL) {
            report.violations.push(OrientationViolation {
                dist_index: fi,
                kind: ViolationKind::NonzeroAtTarget,
                direction: vec![0.0; k],
                offset: 0.0,
                value: bad,
            });
        }
        for d in &dirs {
            for &m in &ORIENTATION_OFFSETS {
                for s in [-m, m] {
                    let x: Vec<f64> = target.iter().zip(d).map(|(a, b)| a + s * b).collect();
                    let vb = v.mean_ident(&x, f)?;
                    let dot: f64 = d.iter().zip(&vb).map(|(a, b)| a * b).sum();
                    report.probes_checked += 1;
                    if (dot > ORIENTATION_TOL) != (s > 0.0) {
                        report.violations.push(OrientationViolation {
                            dist_index: fi,
                            kind: ViolationKind::SignMismatch,
                            direction: d.clone(),
                            offset: s,
                            value: dot,
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::mix;

    #[test]
    fn pointwise_examples() {
        assert_eq!(IdentSpec::Mean.ident(&[2.0], 5.0).unwrap(), vec![-3.0]);
        assert!((IdentSpec::Quantile(0.1).ident(&[0.0], -1.0).unwrap()[0] - 0.9).abs() < 1e-15);
        assert_eq!(IdentSpec::Expectile(0.3).ident(&[1.5], 1.5).unwrap(), vec![0.0]);
        assert!(IdentSpec::Mean.ident(&[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn vanishes_at_target() {
        let f = Distribution::normal(0.5, 2.0).unwrap();
        let m = IdentSpec::Mean.mean_ident(&[0.5], &f).unwrap()[0];
        assert!(m.abs() < 1e-9);
        let q = f.lower_quantile(0.2).unwrap();
        assert!(IdentSpec::Quantile(0.2).mean_ident(&[q], &f).unwrap()[0].abs() < 1e-9);
        let d = Distribution::uniform_atoms(&[-1.0, 0.0, 3.0, 7.5]).unwrap();
        let e = d.expectile(0.8).unwrap();
        assert!(IdentSpec::Expectile(0.8).mean_ident(&[e], &d).unwrap()[0].abs() < 1e-9);
    }

    #[test]
    fn orientation_mean_and_expectile() {
        let fs = vec![
            Distribution::uniform_atoms(&[-1.0, 0.0, 3.0, 7.5]).unwrap(),
            Distribution::normal(1.0, 0.5).unwrap(),
        ];
        let r = check_orientation(&IdentSpec::Mean, &FunctionalSpec::Mean, &fs, 4).unwrap();
        assert!(r.is_oriented());
        let r = check_orientation(&IdentSpec::Expectile(0.2), &FunctionalSpec::Expectile(0.2), &fs, 4).unwrap();
        assert!(r.is_oriented(), "{:?}", r.violations);
    }

    #[test]
    fn quantile_on_atom_mixture_is_flagged() {
        // F continuous mixed with an atom at its alpha-quantile: F jumps over
        // alpha, so no root of V̄ exists.
        let c = Distribution::uniform(0.0, 1.0).unwrap();
        let f = mix(&[c, Distribution::point_mass(0.5)], &[0.5, 0.5]).unwrap();
        let r = check_orientation(&IdentSpec::Quantile(0.5), &FunctionalSpec::Quantile(0.5), &[f], 1).unwrap();
        assert!(r.violations.iter().any(|v| v.kind == ViolationKind::NonzeroAtTarget));
    }

    #[test]
    fn cond_joint_vanishes_at_mean_score() {
        let s = ScoreSpec::squared_error();
        let v = IdentSpec::cond_joint(IdentSpec::Mean, s.clone()).unwrap();
        let f = Distribution::uniform_atoms(&[-1.0, 0.0, 3.0, 7.5]).unwrap();
        let t = FunctionalSpec::mean_score(FunctionalSpec::Mean, vec![s]).unwrap().evaluate(&f).unwrap();
        for c in v.mean_ident(&t, &f).unwrap() {
            assert!(c.abs() < 1e-12);
        }
    }
}
