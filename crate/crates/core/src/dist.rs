//! Univariate distributions: CDF, lower/upper quantile functions,
//! expectations of arbitrary integrands, finite mixtures and expectiles.
//!
//! Atoms are handled exactly (weighted sums). Continuous parts use adaptive
//! Gauss-Legendre quadrature, split at caller-supplied knots so that
//! integrands with jumps (indicators in scores) are integrated piecewise.

use crate::error::{invalid, Error, Result};
use crate::special::{integrate, norm_cdf, norm_inv, norm_pdf};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

const WEIGHT_TOL: f64 = 1e-12;
const QUAD_TOL: f64 = 1e-11;
const NORMAL_SPAN: f64 = 12.0;
const EXPECTILE_TOL: f64 = 1e-12;
const MAX_DOUBLINGS: usize = 64;

/// A real function integrated against a distribution, e.g. `h` or `q` in a
/// ratio of expectations.
#[derive(Clone)]
pub struct Integrand {
    name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Integrand {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Integrand { name: name.into(), f: Arc::new(f) }
    }

    pub fn identity() -> Self {
        Integrand::new("id", |y| y)
    }

    pub fn constant(c: f64) -> Self {
        Integrand::new(format!("const({c})"), move |_| c)
    }

    pub fn power(k: i32) -> Self {
        Integrand::new(format!("pow({k})"), move |y| y.powi(k))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        (self.f)(y)
    }
}

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Integrand({})", self.name)
    }
}

/// Finitely many atoms with strictly increasing locations.
#[derive(Clone, Debug, PartialEq)]
pub struct Discrete {
    points: Vec<f64>,
    weights: Vec<f64>,
    cum: Vec<f64>,
}

impl Discrete {
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn cdf(&self, x: f64) -> f64 {
        let i = self.points.partition_point(|&p| p <= x);
        if i == 0 {
            0.0
        } else {
            self.cum[i - 1]
        }
    }

    fn lower_quantile(&self, alpha: f64) -> f64 {
        let i = self.cum.partition_point(|&c| c < alpha);
        self.points[i.min(self.points.len() - 1)]
    }

    fn upper_quantile(&self, alpha: f64) -> f64 {
        let i = self.cum.partition_point(|&c| c <= alpha);
        self.points[i.min(self.points.len() - 1)]
    }

    fn sum(&self, h: &dyn Fn(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * h(p)).sum()
    }
}

/// Equally weighted sample; duplicates are merged into a [`Discrete`] view.
#[derive(Clone, Debug, PartialEq)]
pub struct Empirical {
    samples: Vec<f64>,
    atoms: Discrete,
}

impl Empirical {
    /// The sorted samples.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn atoms(&self) -> &Discrete {
        &self.atoms
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Distribution {
    Discrete(Discrete),
    Empirical(Empirical),
    Normal { mu: f64, sigma: f64 },
    Uniform { a: f64, b: f64 },
    Mixture { components: Vec<Distribution>, lambdas: Vec<f64> },
}

fn check_simplex(w: &[f64], what: &str) -> Result<()> {
    if w.is_empty() {
        return invalid(format!("{what}: empty weight vector"));
    }
    if w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return invalid(format!("{what}: weights must be strictly positive"));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > WEIGHT_TOL {
        return invalid(format!("{what}: weights sum to {s}, not 1"));
    }
    Ok(())
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cum: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    if let Some(last) = cum.last_mut() {
        *last = 1.0;
    }
    cum
}

impl Distribution {
    /// Discrete law with strictly increasing `points`.
    pub fn discrete(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return invalid("discrete: points and weights differ in length");
        }
        check_simplex(&weights, "discrete")?;
        if points.iter().any(|p| !p.is_finite()) {
            return invalid("discrete: non-finite atom");
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("discrete: points must be strictly increasing");
        }
        let cum = cumulative(&weights);
        Ok(Distribution::Discrete(Discrete { points, weights, cum }))
    }

    /// Discrete law from atoms in any order; duplicate locations are merged.
    pub fn from_atoms(points: &[f64], weights: &[f64]) -> Result<Self> {
        if points.len() != weights.len() {
            return invalid("discrete: points and weights differ in length");
        }
        check_simplex(weights, "discrete")?;
        let mut pairs: Vec<(f64, f64)> = points.iter().copied().zip(weights.iter().copied()).collect();
        if pairs.iter().any(|(p, _)| !p.is_finite()) {
            return invalid("discrete: non-finite atom");
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut pts: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut ws: Vec<f64> = Vec::with_capacity(pairs.len());
        for (p, w) in pairs {
            match pts.last() {
                Some(&last) if last == p => *ws.last_mut().unwrap() += w,
                _ => {
                    pts.push(p);
                    ws.push(w);
                }
            }
        }
        let cum = cumulative(&ws);
        Ok(Distribution::Discrete(Discrete { points: pts, weights: ws, cum }))
    }

    /// Uniform weights on the given atoms.
    pub fn uniform_atoms(points: &[f64]) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return invalid("discrete: no atoms");
        }
        Self::from_atoms(points, &vec![1.0 / n as f64; n])
    }

    pub fn point_mass(y: f64) -> Self {
        Distribution::Discrete(Discrete { points: vec![y], weights: vec![1.0], cum: vec![1.0] })
    }

    pub fn empirical(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return invalid("empirical: no samples");
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return invalid("empirical: non-finite sample");
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut points = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for &s in &sorted {
            match points.last() {
                Some(&last) if last == s => *counts.last_mut().unwrap() += 1,
                _ => {
                    points.push(s);
                    counts.push(1);
                }
            }
        }
        let weights = counts.iter().map(|&c| c as f64 / n).collect();
        let mut seen = 0usize;
        let cum = counts
            .iter()
            .map(|&c| {
                seen += c;
                seen as f64 / n
            })
            .collect();
        Ok(Distribution::Empirical(Empirical {
            samples: sorted,
            atoms: Discrete { points, weights, cum },
        }))
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !(sigma > 0.0) || !sigma.is_finite() {
            return invalid(format!("normal: need finite mu and sigma > 0, got ({mu}, {sigma})"));
        }
        Ok(Distribution::Normal { mu, sigma })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return invalid(format!("uniform: need a < b, got ({a}, {b})"));
        }
        Ok(Distribution::Uniform { a, b })
    }

    /// Finite mixture kept as a mixture (see [`mix`] for the flattening form).
    pub fn mixture(components: Vec<Distribution>, lambdas: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return invalid("mixture: no components");
        }
        if components.len() != lambdas.len() {
            return invalid("mixture: components and weights differ in length");
        }
        check_simplex(&lambdas, "mixture")?;
        Ok(Distribution::Mixture { components, lambdas })
    }

    /// Loads an empirical law from a one-column CSV file.
    pub fn empirical_from_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.as_ref().display())))?;
        Self::empirical_from_reader(file, has_header)
    }

    pub fn empirical_from_reader(rdr: impl std::io::Read, has_header: bool) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(has_header).from_reader(rdr);
        let mut samples = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::InvalidInput(format!("csv row {}: {e}", i + 1)))?;
            if rec.len() != 1 {
                return invalid(format!("csv row {}: expected one column, found {}", i + 1, rec.len()));
            }
            let v: f64 = rec[0]
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("csv row {}: not a number: {:?}", i + 1, &rec[0])))?;
            if !v.is_finite() {
                return invalid(format!("csv row {}: non-finite value", i + 1));
            }
            samples.push(v);
        }
        Self::empirical(&samples)
    }

    /// Atom view for finitely supported laws.
    pub fn atoms(&self) -> Option<&Discrete> {
        match self {
            Distribution::Discrete(d) => Some(d),
            Distribution::Empirical(e) => Some(&e.atoms),
            _ => None,
        }
    }

    /// Interval carrying all mass (up to far below double precision for normals).
    pub fn support(&self) -> (f64, f64) {
        match self {
            Distribution::Discrete(_) | Distribution::Empirical(_) => {
                let d = self.atoms().unwrap();
                (d.points[0], *d.points.last().unwrap())
            }
            Distribution::Normal { mu, sigma } => (mu - 40.0 * sigma, mu + 40.0 * sigma),
            Distribution::Uniform { a, b } => (*a, *b),
            Distribution::Mixture { components, .. } => components.iter().map(|c| c.support()).fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), (a, b)| (lo.min(a), hi.max(b)),
            ),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Distribution::Discrete(_) | Distribution::Empirical(_) => self.atoms().unwrap().cdf(x),
            Distribution::Normal { mu, sigma } => norm_cdf((x - mu) / sigma),
            Distribution::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Distribution::Mixture { components, lambdas } => {
                components.iter().zip(lambdas).map(|(c, l)| l * c.cdf(x)).sum::<f64>().min(1.0)
            }
        }
    }

    /// `inf{x : F(x) >= alpha}`.
    pub fn lower_quantile(&self, alpha: f64) -> Result<f64> {
        check_level(alpha)?;
        Ok(match self {
            Distribution::Discrete(_) | Distribution::Empirical(_) => self.atoms().unwrap().lower_quantile(alpha),
            Distribution::Normal { mu, sigma } => mu + sigma * norm_inv(alpha),
            Distribution::Uniform { a, b } => a + alpha * (b - a),
            Distribution::Mixture { .. } => self.bisect_quantile(|f| f >= alpha),
        })
    }

    /// `inf{x : F(x) > alpha}`.
    pub fn upper_quantile(&self, alpha: f64) -> Result<f64> {
        check_level(alpha)?;
        Ok(match self {
            Distribution::Discrete(_) | Distribution::Empirical(_) => self.atoms().unwrap().upper_quantile(alpha),
            Distribution::Normal { .. } | Distribution::Uniform { .. } => self.lower_quantile(alpha)?,
            Distribution::Mixture { .. } => self.bisect_quantile(|f| f > alpha),
        })
    }

    // Smallest x (to double resolution) with pred(F(x)); pred must be monotone.
    fn bisect_quantile(&self, pred: impl Fn(f64) -> bool) -> f64 {
        let (s_lo, s_hi) = self.support();
        let mut lo = s_lo - 1.0;
        let mut hi = s_hi;
        if pred(self.cdf(s_lo)) {
            return s_lo;
        }
        for _ in 0..2000 {
            let mid = lo + 0.5 * (hi - lo);
            if mid <= lo || mid >= hi {
                break;
            }
            if pred(self.cdf(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    pub fn mean(&self) -> f64 {
        match self {
            Distribution::Discrete(_) | Distribution::Empirical(_) => self.atoms().unwrap().sum(&|y| y),
            Distribution::Normal { mu, .. } => *mu,
            Distribution::Uniform { a, b } => 0.5 * (a + b),
            Distribution::Mixture { components, lambdas } => {
                components.iter().zip(lambdas).map(|(c, l)| l * c.mean()).sum()
            }
        }
    }

    /// `E h(Y)`.
    pub fn expect(&self, h: &dyn Fn(f64) -> f64) -> Result<f64> {
        self.expect_with_knots(h, &[])
    }

    /// `E h(Y)` where `h` may jump at the given knots.
    pub fn expect_with_knots(&self, h: &dyn Fn(f64) -> f64, knots: &[f64]) -> Result<f64> {
        let v = self.expect_raw(h, knots);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation("non-finite expectation".into()))
        }
    }

    /// `E[h(Y) 1{Y <= q}]`.
    pub fn expect_below(&self, h: &dyn Fn(f64) -> f64, q: f64) -> Result<f64> {
        self.expect_with_knots(&|y| if y <= q { h(y) } else { 0.0 }, &[q])
    }

    fn expect_raw(&self, h: &dyn Fn(f64) -> f64, knots: &[f64]) -> f64 {
        match self {
            Distribution::Discrete(_) | Distribution::Empirical(_) => {
                let d = self.atoms().unwrap();
                let mut acc = 0.0;
                for (&p, &w) in d.points.iter().zip(&d.weights) {
                    let v = h(p);
                    if !v.is_finite() {
                        return f64::NAN;
                    }
                    acc += w * v;
                }
                acc
            }
            Distribution::Normal { mu, sigma } => {
                let (mu, sigma) = (*mu, *sigma);
                let g = |y: f64| h(y) * norm_pdf((y - mu) / sigma) / sigma;
                piecewise(&g, mu - NORMAL_SPAN * sigma, mu + NORMAL_SPAN * sigma, knots, 24)
            }
            Distribution::Uniform { a, b } => {
                let w = 1.0 / (b - a);
                piecewise(&|y| h(y) * w, *a, *b, knots, 4)
            }
            Distribution::Mixture { components, lambdas } => {
                components.iter().zip(lambdas).map(|(c, l)| l * c.expect_raw(h, knots)).sum()
            }
        }
    }

    /// `E (Y - x)^+`.
    pub fn upper_partial_moment(&self, x: f64) -> f64 {
        match self {
            Distribution::Discrete(_) | Distribution::Empirical(_) => {
                self.atoms().unwrap().sum(&|y| (y - x).max(0.0))
            }
            Distribution::Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                sigma * norm_pdf(z) + (mu - x) * norm_cdf(-z)
            }
            Distribution::Uniform { a, b } => {
                if x <= *a {
                    0.5 * (a + b) - x
                } else if x >= *b {
                    0.0
                } else {
                    (b - x) * (b - x) / (2.0 * (b - a))
                }
            }
            Distribution::Mixture { components, lambdas } => {
                components.iter().zip(lambdas).map(|(c, l)| l * c.upper_partial_moment(x)).sum()
            }
        }
    }

    /// `E (x - Y)^+`.
    pub fn lower_partial_moment(&self, x: f64) -> f64 {
        match self {
            Distribution::Discrete(_) | Distribution::Empirical(_) => {
                self.atoms().unwrap().sum(&|y| (x - y).max(0.0))
            }
            Distribution::Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                sigma * norm_pdf(z) + (x - mu) * norm_cdf(z)
            }
            Distribution::Uniform { a, b } => {
                if x >= *b {
                    x - 0.5 * (a + b)
                } else if x <= *a {
                    0.0
                } else {
                    (x - a) * (x - a) / (2.0 * (b - a))
                }
            }
            Distribution::Mixture { components, lambdas } => {
                components.iter().zip(lambdas).map(|(c, l)| l * c.lower_partial_moment(x)).sum()
            }
        }
    }

    /// The tau-expectile: root of `tau E(Y-x)^+ = (1-tau) E(x-Y)^+`.
    pub fn expectile(&self, tau: f64) -> Result<f64> {
        check_level(tau)?;
        let phi = |x: f64| tau * self.upper_partial_moment(x) - (1.0 - tau) * self.lower_partial_moment(x);
        let m = self.mean();
        if !m.is_finite() {
            return invalid("expectile: first moment is not finite");
        }
        let p0 = phi(m);
        if p0 == 0.0 {
            return Ok(m);
        }
        // phi is decreasing; walk away from the mean until the sign flips.
        let dir = if p0 > 0.0 { 1.0 } else { -1.0 };
        let mut step = 1.0;
        let mut far = m + dir * step;
        let mut flipped = false;
        for _ in 0..MAX_DOUBLINGS {
            let v = phi(far);
            if !v.is_finite() {
                return invalid("expectile: partial moments diverge");
            }
            if v * dir <= 0.0 {
                flipped = true;
                break;
            }
            step *= 2.0;
            far = m + dir * step;
        }
        if !flipped {
            return invalid("expectile: bracket expansion exceeded 64 doublings");
        }
        let (mut lo, mut hi) = if dir > 0.0 { (m, far) } else { (far, m) };
        while hi - lo > EXPECTILE_TOL {
            let mid = lo + 0.5 * (hi - lo);
            if mid <= lo || mid >= hi {
                break;
            }
            let v = phi(mid);
            if v == 0.0 {
                return Ok(mid);
            }
            if v > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo + 0.5 * (hi - lo))
    }

    /// Law of `s*Y + t` for `s != 0`.
    pub fn affine(&self, s: f64, t: f64) -> Result<Self> {
        if s == 0.0 || !s.is_finite() || !t.is_finite() {
            return invalid("affine: need finite s != 0 and finite t");
        }
        match self {
            Distribution::Discrete(d) => {
                let pts: Vec<f64> = d.points.iter().map(|p| s * p + t).collect();
                Self::from_atoms(&pts, &d.weights)
            }
            Distribution::Empirical(e) => {
                Self::empirical(&e.samples.iter().map(|p| s * p + t).collect::<Vec<_>>())
            }
            Distribution::Normal { mu, sigma } => Self::normal(s * mu + t, s.abs() * sigma),
            Distribution::Uniform { a, b } => {
                let (x, y) = (s * a + t, s * b + t);
                Self::uniform(x.min(y), x.max(y))
            }
            Distribution::Mixture { components, lambdas } => Self::mixture(
                components.iter().map(|c| c.affine(s, t)).collect::<Result<_>>()?,
                lambdas.clone(),
            ),
        }
    }
}

/// Convex combination of distributions. Finitely supported inputs collapse
/// to a single [`Discrete`]; a single component with weight one is returned
/// as is.
pub fn mix(ds: &[Distribution], lambdas: &[f64]) -> Result<Distribution> {
    if ds.len() != lambdas.len() {
        return invalid("mix: components and weights differ in length");
    }
    check_simplex(lambdas, "mix")?;
    if ds.len() == 1 {
        return Ok(ds[0].clone());
    }
    if ds.iter().all(|d| d.atoms().is_some()) {
        let mut pts = Vec::new();
        let mut ws = Vec::new();
        for (d, l) in ds.iter().zip(lambdas) {
            let a = d.atoms().unwrap();
            pts.extend_from_slice(&a.points);
            ws.extend(a.weights.iter().map(|w| w * l));
        }
        let s: f64 = ws.iter().sum();
        ws.iter_mut().for_each(|w| *w /= s);
        return Distribution::from_atoms(&pts, &ws);
    }
    Distribution::mixture(ds.to_vec(), lambdas.to_vec())
}

fn check_level(a: f64) -> Result<()> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        invalid(format!("level must lie in (0,1), got {a}"))
    }
}

// Integrates over [lo, hi], splitting at knots; panels spread by length.
fn piecewise(g: &dyn Fn(f64) -> f64, lo: f64, hi: f64, knots: &[f64], panels: usize) -> f64 {
    let mut cuts: Vec<f64> = knots.iter().copied().filter(|k| *k > lo && *k < hi).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend(cuts);
    edges.push(hi);
    let span = hi - lo;
    edges
        .windows(2)
        .map(|w| {
            let n = ((w[1] - w[0]) / span * panels as f64).ceil() as usize;
            integrate(g, w[0], w[1], QUAD_TOL * (w[1] - w[0]) / span, n.max(1))
        })
        .sum()
}
