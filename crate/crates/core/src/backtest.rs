//! Diebold-Mariano comparison of two forecast sequences and the three-zone
//! comparative backtest.
//!
//! With `D_t = S(x̂_t, Y_t) - S(ẑ_t, Y_t)` and `K_n` its mean, the statistic is
//! `T_n = K_n sqrt(n / σ̂²)`. Procedure A (`x̂`) is the internal model, B (`ẑ`)
//! the standard one. Green means A is significantly better (`T_n <= C1`),
//! red significantly worse (`T_n >= C2`).

use crate::dist::Distribution;
use crate::error::{invalid, Error, Result};
use crate::scoring::ScoreSpec;
use crate::special::norm_inv;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

/// Floor of the long-run variance estimate.
pub const VARIANCE_FLOOR: f64 = 1e-12;
const MIN_N: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct ForecastSeries {
    pub y: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
}

impl ForecastSeries {
    pub fn new(y: Vec<f64>, x: Vec<Vec<f64>>, z: Vec<Vec<f64>>) -> Result<Self> {
        let n = y.len();
        if x.len() != n || z.len() != n {
            return invalid("forecast series: realisations and forecasts differ in length");
        }
        if n < MIN_N {
            return invalid(format!("forecast series: need n >= {MIN_N}, got {n}"));
        }
        let k = x[0].len();
        if k == 0 || x.iter().chain(&z).any(|r| r.len() != k) {
            return invalid("forecast series: forecast vectors must share a positive dimension");
        }
        if y.iter().chain(x.iter().flatten()).chain(z.iter().flatten()).any(|v| !v.is_finite()) {
            return invalid("forecast series: non-finite value");
        }
        Ok(ForecastSeries { y, x, z })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    /// Swaps procedures A and B.
    pub fn swapped(&self) -> Self {
        ForecastSeries { y: self.y.clone(), x: self.z.clone(), z: self.x.clone() }
    }

    /// CSV with header `t,y,x1..xk,z1..zk`.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_reader(file)
    }

    pub fn from_reader(rdr: impl std::io::Read) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(rdr);
        let width = reader.headers().map_err(|e| Error::InvalidInput(format!("csv header: {e}")))?.len();
        if width < 4 || (width - 2) % 2 != 0 {
            return invalid("csv header: expected t,y,x1..xk,z1..zk");
        }
        let k = (width - 2) / 2;
        let (mut y, mut x, mut z) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::InvalidInput(format!("csv row {}: {e}", i + 1)))?;
            if rec.len() != width {
                return invalid(format!("csv row {}: expected {width} fields, got {}", i + 1, rec.len()));
            }
            let vals = parse_fields(rec.iter().skip(1), i + 1)?;
            y.push(vals[0]);
            x.push(vals[1..1 + k].to_vec());
            z.push(vals[1 + k..].to_vec());
        }
        Self::new(y, x, z)
    }
}

/// Parses numeric CSV fields; `row` is the 1-based data row for messages.
pub(crate) fn parse_fields<'a>(fields: impl Iterator<Item = &'a str>, row: usize) -> Result<Vec<f64>> {
    fields
        .map(|f| {
            let v: f64 = f.trim().parse().map_err(|_| Error::InvalidInput(format!("csv row {row}: not a number: {f:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                invalid(format!("csv row {row}: non-finite value"))
            }
        })
        .collect()
}

/// `D_t = S(x̂_t, y_t) - S(ẑ_t, y_t)`.
pub fn score_diffs(s: &ScoreSpec, fs: &ForecastSeries) -> Result<Vec<f64>> {
    if fs.dim() != s.dim() {
        return invalid(format!("forecasts have dimension {}, score expects {}", fs.dim(), s.dim()));
    }
    (0..fs.len())
        .map(|t| {
            let a = s.score(&fs.x[t], fs.y[t]).map_err(|e| at_row(e, t))?;
            let b = s.score(&fs.z[t], fs.y[t]).map_err(|e| at_row(e, t))?;
            Ok(a - b)
        })
        .collect()
}

fn at_row(e: Error, t: usize) -> Error {
    match e {
        Error::Domain(m) => Error::Domain(format!("row {}: {m}", t + 1)),
        Error::Evaluation(m) => Error::Evaluation(format!("row {}: {m}", t + 1)),
        other => other,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LongRunVariance {
    pub sigma2: f64,
    pub bandwidth: usize,
    pub degenerate: bool,
}

/// `⌊n^{1/3}⌋`, exact for perfect cubes.
pub fn default_bandwidth(n: usize) -> usize {
    let mut b = (n as f64).cbrt().floor() as usize;
    while (b + 1).pow(3) <= n {
        b += 1;
    }
    while b > 0 && b.pow(3) > n {
        b -= 1;
    }
    b
}

/// Bartlett-kernel estimate `γ0 + 2 Σ_{k<=B} (1 - k/(B+1)) γ_k` from demeaned
/// autocovariances. Floored at 1e-12; flagged degenerate when `γ0 < 1e-12`.
pub fn long_run_variance(d: &[f64], bandwidth: Option<usize>) -> Result<LongRunVariance> {
    let n = d.len();
    if n < MIN_N {
        return invalid(format!("long-run variance: need n >= {MIN_N}, got {n}"));
    }
    let b = bandwidth.unwrap_or_else(|| default_bandwidth(n)).min(n - 1);
    let m = d.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = d.iter().map(|v| v - m).collect();
    let gamma = |k: usize| c[k..].iter().zip(&c[..n - k]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let g0 = gamma(0);
    if g0 < VARIANCE_FLOOR {
        return Ok(LongRunVariance { sigma2: VARIANCE_FLOOR, bandwidth: b, degenerate: true });
    }
    let mut s = g0;
    for k in 1..=b {
        s += 2.0 * (1.0 - k as f64 / (b as f64 + 1.0)) * gamma(k);
    }
    Ok(LongRunVariance { sigma2: s.max(VARIANCE_FLOOR), bandwidth: b, degenerate: false })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Zone {
    Green,
    Yellow,
    Red,
}

impl Zone {
    /// CLI exit code: 0 green, 10 yellow, 20 red.
    pub fn exit_code(self) -> i32 {
        match self {
            Zone::Green => 0,
            Zone::Yellow => 10,
            Zone::Red => 20,
        }
    }
}

/// Three-zone classification with `C1 = Φ^{-1}(η)`, `C2 = Φ^{-1}(1-η)`.
pub fn zone(t_n: f64, eta: f64) -> Zone {
    if t_n <= norm_inv(eta) {
        Zone::Green
    } else if t_n >= norm_inv(1.0 - eta) {
        Zone::Red
    } else {
        Zone::Yellow
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DMReport {
    pub k_n: f64,
    pub sigma2_hat: f64,
    pub t_n: f64,
    pub c1: f64,
    pub c2: f64,
    pub zone: Zone,
    pub bandwidth: usize,
    pub eta: f64,
    pub degenerate: bool,
    pub n: usize,
}

/// Diebold-Mariano test with the three-zone decision. A degenerate variance
/// estimate always yields the yellow zone.
pub fn dm_test(s: &ScoreSpec, fs: &ForecastSeries, eta: f64, bandwidth: Option<usize>) -> Result<DMReport> {
    if !(eta > 0.0 && eta < 0.5) {
        return invalid(format!("eta must lie in (0, 1/2), got {eta}"));
    }
    let d = score_diffs(s, fs)?;
    dm_from_diffs(&d, eta, bandwidth)
}

/// As [`dm_test`] for a precomputed difference series.
pub fn dm_from_diffs(d: &[f64], eta: f64, bandwidth: Option<usize>) -> Result<DMReport> {
    if !(eta > 0.0 && eta < 0.5) {
        return invalid(format!("eta must lie in (0, 1/2), got {eta}"));
    }
    let lrv = long_run_variance(d, bandwidth)?;
    let n = d.len();
    let k_n = d.iter().sum::<f64>() / n as f64;
    let t_n = k_n * (n as f64 / lrv.sigma2).sqrt();
    let z = if lrv.degenerate { Zone::Yellow } else { zone(t_n, eta) };
    Ok(DMReport {
        k_n,
        sigma2_hat: lrv.sigma2,
        t_n,
        c1: norm_inv(eta),
        c2: norm_inv(1.0 - eta),
        zone: z,
        bandwidth: lrv.bandwidth,
        eta,
        degenerate: lrv.degenerate,
        n,
    })
}

fn rep_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Synthetic series with `Y_t ~ N(0,1)` i.i.d., procedure A issuing the
/// true functional value and B the same shifted by `bias` in every
/// coordinate.
pub fn demo_series(s: &ScoreSpec, n: usize, bias: f64, seed: u64) -> Result<ForecastSeries> {
    let t = s
        .functional()
        .ok_or_else(|| Error::Unsupported("demo: the score's functional cannot be evaluated".into()))?;
    let truth = t.evaluate(&Distribution::normal(0.0, 1.0)?)?;
    let shifted: Vec<f64> = truth.iter().map(|v| v + bias).collect();
    let mut rng = rep_rng(seed, 0);
    let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    ForecastSeries::new(y, vec![truth; n], vec![shifted; n])
}

/// Green rate of the DM test under an equal-skill null: `Y_t`, `x̂_t`, `ẑ_t`
/// independent standard normals scored by squared error. Replications run in
/// parallel with per-replication streams of the master seed.
pub fn null_green_rate(n: usize, reps: usize, eta: f64, seed: u64) -> Result<f64> {
    let s = ScoreSpec::squared_error();
    let greens: Vec<bool> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rep_rng(seed, r);
            let d: Vec<f64> = (0..n)
                .map(|_| {
                    let y: f64 = StandardNormal.sample(&mut rng);
                    let a: f64 = StandardNormal.sample(&mut rng);
                    let b: f64 = StandardNormal.sample(&mut rng);
                    s.eval(&[a], y) - s.eval(&[b], y)
                })
                .collect();
            Ok(dm_from_diffs(&d, eta, None)?.zone == Zone::Green)
        })
        .collect::<Result<_>>()?;
    Ok(greens.iter().filter(|g| **g).count() as f64 / reps as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn zones() {
        assert_eq!(zone(-2.0, 0.05), Zone::Green);
        assert_eq!(zone(0.0, 0.05), Zone::Yellow);
        assert_eq!(zone(3.0, 0.05), Zone::Red);
        assert_eq!(zone(norm_inv(0.05), 0.05), Zone::Green);
        assert_eq!(zone(norm_inv(0.95), 0.05), Zone::Red);
        assert!((norm_inv(0.05) + 1.6448536269514722).abs() < 1e-14);
    }

    #[test]
    fn bandwidth_default() {
        assert_eq!(default_bandwidth(512), 8);
        assert_eq!(default_bandwidth(511), 7);
        assert_eq!(default_bandwidth(100_000), 46);
        assert_eq!(default_bandwidth(8), 2);
    }

    #[test]
    fn lrv_matches_hand_computation() {
        let d = [1.0, -1.0, 2.0, 0.0, 1.0, -2.0, 0.5, 0.5];
        let m = d.iter().sum::<f64>() / 8.0;
        let c: Vec<f64> = d.iter().map(|v| v - m).collect();
        let g = |k: usize| (k..8).map(|t| c[t] * c[t - k]).sum::<f64>() / 8.0;
        let want = g(0) + 2.0 * (2.0 / 3.0 * g(1) + 1.0 / 3.0 * g(2));
        let got = long_run_variance(&d, None).unwrap();
        assert_eq!(got.bandwidth, 2);
        assert!((got.sigma2 - want).abs() < 1e-15);
        assert!(long_run_variance(&d[..7], None).is_err());
    }

    #[test]
    fn degenerate_constant_series() {
        let r = long_run_variance(&[3.0; 20], None).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.sigma2, VARIANCE_FLOOR);
        assert_eq!(dm_from_diffs(&[0.0; 20], 0.05, None).unwrap().zone, Zone::Yellow);
    }

    #[test]
    fn perfect_pinball_dominates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y: Vec<f64> = (0..50).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let x = y.iter().map(|v| vec![*v]).collect();
        let z = y.iter().map(|v| vec![v + 1.0]).collect();
        let fs = ForecastSeries::new(y, x, z).unwrap();
        let d = score_diffs(&ScoreSpec::pinball(0.5).unwrap(), &fs).unwrap();
        assert!(d.iter().all(|v| *v <= 0.0));
    }

    #[test]
    fn antisymmetry_and_scale_invariance() {
        let s = ScoreSpec::pinball(0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200;
        let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let x = (0..n).map(|_| vec![-1.28 + rng.gen_range(-0.3..0.3)]).collect();
        let z = (0..n).map(|_| vec![-1.0 + rng.gen_range(-0.3..0.3)]).collect();
        let fs = ForecastSeries::new(y, x, z).unwrap();
        let a = dm_test(&s, &fs, 0.05, None).unwrap();
        let b = dm_test(&s, &fs.swapped(), 0.05, None).unwrap();
        assert_eq!(a.k_n, -b.k_n);
        assert_eq!(a.t_n, -b.t_n);
        let scaled = s.apply_transform(crate::scoring::Transform::Scale(3.5)).unwrap();
        let c = dm_test(&scaled, &fs, 0.05, None).unwrap();
        assert!((c.t_n - a.t_n).abs() < 1e-9);
    }

    #[test]
    fn var_es_row_matches_hand_formula() {
        let s = ScoreSpec::build_var_es(0.1, crate::ConvexSpec::identity(), crate::ConvexSpec::exp()).unwrap();
        let y = vec![-3.0, 0.5, 1.0, -0.2, 0.0, 2.0, -1.0, 0.3];
        let x = vec![vec![1.0, 2.0]; 8];
        let z = vec![vec![1.5, 1.5]; 8];
        let fs = ForecastSeries::new(y, x, z).unwrap();
        let d = score_diffs(&s, &fs).unwrap();
        assert!(d.iter().all(|v| v.is_finite()));
        let sa = 0.9 * -1.0 + 3.0 + (-2.0f64).exp() * 19.0 - (-2.0f64).exp();
        let sb = 0.9 * -1.5 + 3.0 + (-1.5f64).exp() * (0.0 + 15.0) - (-1.5f64).exp();
        assert!((d[0] - (sa - sb)).abs() < 1e-13);
    }

    #[test]
    fn csv_reader() {
        let text = "t,y,x1,z1\n".to_string() + &(1..=8).map(|i| format!("{i},{i},0,1\n")).collect::<String>();
        let fs = ForecastSeries::from_reader(text.as_bytes()).unwrap();
        assert_eq!(fs.len(), 8);
        assert!(ForecastSeries::from_reader("t,y,x1\n1,2,3\n".as_bytes()).is_err());
    }

    #[test]
    fn demo_is_green() {
        let s = ScoreSpec::pinball(0.05).unwrap();
        let fs = demo_series(&s, 500, 0.5, 1).unwrap();
        assert_eq!(dm_test(&s, &fs, 0.05, None).unwrap().zone, Zone::Green);
    }
}
