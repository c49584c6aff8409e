//! M- and Z-estimation of a location parameter, Huber's K-estimators and
//! linear quantile / expectile / least-squares regression.

use crate::error::{invalid, Error, Result};
use crate::ident::IdentSpec;
use crate::scoring::ScoreSpec;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::path::Path;

const M_GRID: usize = 1001;
const GOLDEN_TOL: f64 = 1e-10;
const Z_TOL: f64 = 1e-12;
const IRLS_TOL: f64 = 1e-9;
const IRLS_MAX_ITER: usize = 500;
const VERTEX_MAX_ITER: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateResult {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub tolerance: f64,
}

/// Minimises `(1/n) Σ S(θ, y_i)` over `bracket`: a 1001-point grid, then
/// golden-section search around the best grid point.
pub fn m_estimate(s: &ScoreSpec, samples: &[f64], bracket: (f64, f64)) -> Result<EstimateResult> {
    if s.dim() != 1 {
        return invalid("m-estimation needs a one-dimensional score");
    }
    if samples.is_empty() {
        return invalid("m-estimation: no samples");
    }
    let (lo, hi) = bracket;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return invalid("m-estimation: bracket must be a finite interval lo < hi");
    }
    let obj = |t: f64| -> Result<f64> {
        match s.sample_mean_score(&[t], samples) {
            Err(Error::Domain(_)) => Ok(f64::INFINITY),
            r => r,
        }
    };
    let h = (hi - lo) / (M_GRID - 1) as f64;
    let mut best = (lo, obj(lo)?);
    for i in 1..M_GRID {
        let t = if i + 1 == M_GRID { hi } else { lo + h * i as f64 };
        let v = obj(t)?;
        if v < best.1 {
            best = (t, v);
        }
    }
    let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (obj(c)?, obj(d)?);
    let mut iterations = 0;
    while b - a > GOLDEN_TOL && iterations < 500 {
        iterations += 1;
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = obj(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = obj(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    let fm = obj(mid)?;
    let (theta, objective) = [(mid, fm), (c, fc), (d, fd), best]
        .into_iter()
        .fold((f64::NAN, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc });
    Ok(EstimateResult { theta: vec![theta], objective, iterations, converged: b - a <= GOLDEN_TOL, tolerance: b - a })
}

/// Root of `Z_n(θ) = (1/n) Σ V(θ, y_i)` by sign-change bisection. On a jump
/// the midpoint of the final sign-change cell is returned.
pub fn z_estimate(v: &IdentSpec, samples: &[f64]) -> Result<EstimateResult> {
    if v.dim() != 1 {
        return invalid("z-estimation needs a one-dimensional identification function");
    }
    if samples.is_empty() {
        return invalid("z-estimation: no samples");
    }
    let n = samples.len() as f64;
    let z = |t: f64| -> Result<f64> {
        let mut acc = 0.0;
        for &y in samples {
            acc += v.ident(&[t], y)?[0];
        }
        Ok(acc / n)
    };
    let (mut lo, mut hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    let mut width = (hi - lo).max(1.0);
    let (mut zl, mut zh) = (z(lo)?, z(hi)?);
    let mut expansions = 0;
    while zl.signum() * zh.signum() > 0.0 {
        if expansions == 64 {
            return Err(Error::NoRoot("z-estimation: no sign change in the expanded bracket".into()));
        }
        lo -= width;
        hi += width;
        width *= 2.0;
        zl = z(lo)?;
        zh = z(hi)?;
        expansions += 1;
    }
    let result = |t: f64, it: usize, tol: f64, zt: f64| EstimateResult {
        theta: vec![t],
        objective: zt.abs(),
        iterations: it,
        converged: true,
        tolerance: tol,
    };
    if zl == 0.0 {
        return Ok(result(lo, 0, 0.0, 0.0));
    }
    if zh == 0.0 {
        return Ok(result(hi, 0, 0.0, 0.0));
    }
    let mut it = 0;
    while hi - lo > Z_TOL {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        it += 1;
        let zm = z(mid)?;
        if zm == 0.0 {
            return Ok(result(mid, it, hi - lo, 0.0));
        }
        if zm.signum() == zl.signum() {
            lo = mid;
            zl = zm;
        } else {
            hi = mid;
            zh = zm;
        }
    }
    // Where Z_n is linear across the cell, the secant point is the exact root.
    let sec = lo - zl * (hi - lo) / (zh - zl);
    if sec >= lo && sec <= hi {
        let zs = z(sec)?;
        if zs.abs() < zl.abs().min(zh.abs()) {
            return Ok(result(sec, it, hi - lo, zs));
        }
    }
    let mid = lo + 0.5 * (hi - lo);
    Ok(result(mid, it, hi - lo, z(mid)?))
}

/// Huber's K-estimator of location: the root of `Σ φ_K(y_i - θ)`.
///
/// The bracketed root is finished by solving the linear equation on the
/// active set `|y_i - θ| <= K`, kept when the active set is unchanged at the
/// solution.
pub fn huber_k(samples: &[f64], k: f64) -> Result<EstimateResult> {
    let v = IdentSpec::huber(k)?;
    let mut r = z_estimate(&v, samples)?;
    let classify = |t: f64| -> Vec<i8> {
        samples.iter().map(|&y| if y < t - k { -1 } else if y > t + k { 1 } else { 0 }).collect()
    };
    let t0 = r.theta[0];
    let active = classify(t0);
    let n_inner = active.iter().filter(|&&c| c == 0).count();
    if n_inner > 0 {
        let inner: f64 = samples.iter().zip(&active).filter(|(_, &c)| c == 0).map(|(y, _)| *y).sum();
        let tilt: i64 = active.iter().map(|&c| c as i64).sum();
        let t1 = (inner + k * tilt as f64) / n_inner as f64;
        if classify(t1) == active {
            let z: f64 = samples.iter().map(|&y| v.ident(&[t1], y).map(|w| w[0])).sum::<Result<f64>>()?;
            r.theta[0] = t1;
            r.objective = (z / samples.len() as f64).abs();
        }
    }
    Ok(r)
}

/// Design matrix (rows are observations) and response.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionData {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl RegressionData {
    pub fn new(rows: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        let n = y.len();
        if rows.len() != n {
            return invalid("regression: design and response lengths differ");
        }
        let p = rows.first().map_or(0, |r| r.len());
        if p == 0 || rows.iter().any(|r| r.len() != p) {
            return invalid("regression: design rows must share a positive length");
        }
        if n < p {
            return invalid(format!("regression: need n >= p, got n = {n}, p = {p}"));
        }
        if y.iter().chain(rows.iter().flatten()).any(|v| !v.is_finite()) {
            return invalid("regression: non-finite entry");
        }
        Ok(RegressionData { x: DMatrix::from_fn(n, p, |i, j| rows[i][j]), y: DVector::from_column_slice(y) })
    }

    /// Intercept-only design for a sample.
    pub fn intercept(y: &[f64]) -> Result<Self> {
        Self::new(&vec![vec![1.0]; y.len()], y)
    }

    /// CSV with the response in the first column and regressors after it.
    pub fn from_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_reader(file, has_header)
    }

    pub fn from_reader(rdr: impl std::io::Read, has_header: bool) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(has_header).from_reader(rdr);
        let (mut rows, mut y) = (Vec::new(), Vec::new());
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::InvalidInput(format!("csv row {}: {e}", i + 1)))?;
            let vals = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|_| Error::InvalidInput(format!("csv row {}: non-numeric field", i + 1)))?;
            if vals.len() < 2 {
                return invalid(format!("csv row {}: need y and at least one regressor", i + 1));
            }
            y.push(vals[0]);
            rows.push(vals[1..].to_vec());
        }
        Self::new(&rows, &y)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

#[derive(Clone, Copy, Debug)]
enum Family {
    Square,
    Expectile(f64),
    Pinball(f64),
}

fn family(s: &ScoreSpec) -> Result<Family> {
    let unsupported = || Error::Unsupported("linear fits support pinball, square-expectile and square-Bregman scores".into());
    match s {
        ScoreSpec::Bregman { f } if f.name() == "square" => Ok(Family::Square),
        ScoreSpec::Normalize(inner) => family(inner),
        ScoreSpec::Expectile { tau, f } if f.name() == "square" => Ok(Family::Expectile(*tau)),
        ScoreSpec::Quantile { alpha, g } if g.name() == "identity" => Ok(Family::Pinball(*alpha)),
        _ => Err(unsupported()),
    }
}

fn weighted_ls(x: &DMatrix<f64>, y: &DVector<f64>, w: &[f64], extra: Option<&DVector<f64>>) -> Result<DVector<f64>> {
    let p = x.ncols();
    let mut a = DMatrix::zeros(p, p);
    let mut b = DVector::zeros(p);
    for (i, &wi) in w.iter().enumerate() {
        let row = x.row(i);
        for j in 0..p {
            b[j] += wi * row[j] * y[i];
            for k in 0..p {
                a[(j, k)] += wi * row[j] * row[k];
            }
        }
    }
    if let Some(e) = extra {
        b += e;
    }
    let chol = a.cholesky().ok_or_else(|| Error::DegenerateDesign("normal equations are not positive definite".into()))?;
    Ok(chol.solve(&b))
}

fn check_rank(x: &DMatrix<f64>) -> Result<()> {
    let sv = x.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&s| s > 1e-10 * max.max(f64::MIN_POSITIVE)).count();
    if rank < x.ncols() {
        return Err(Error::DegenerateDesign(format!("design has rank {rank} < {} columns", x.ncols())));
    }
    Ok(())
}

fn max_abs_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

/// Fits `y ≈ Xβ` by minimising `Σ S(x_i^T β, y_i)` for the pinball loss, the
/// square-expectile score or squared error.
///
/// Squared error is solved by the normal equations and the expectile score
/// by iteratively reweighted least squares. The pinball loss is minimised on
/// a sequence of Huber-smoothed objectives (width halved from 1e-1 to 1e-8)
/// by majorise-minimise steps, followed by a basic-solution polish; the
/// reported objective is the exact pinball objective.
pub fn fit_linear(s: &ScoreSpec, data: &RegressionData) -> Result<EstimateResult> {
    let fam = family(s)?;
    check_rank(&data.x)?;
    let (x, y, n) = (&data.x, &data.y, data.n());
    let objective = |beta: &DVector<f64>| -> f64 {
        let fit = x * beta;
        fit.iter().zip(y.iter()).map(|(&f, &yi)| s.eval(&[f], yi)).sum::<f64>() / n as f64
    };
    let ones = vec![1.0; n];
    let mut beta = weighted_ls(x, y, &ones, None)?;
    match fam {
        Family::Square => {
            let obj = objective(&beta);
            Ok(EstimateResult { theta: beta.iter().copied().collect(), objective: obj, iterations: 1, converged: true, tolerance: 0.0 })
        }
        Family::Expectile(tau) => {
            let mut obj = objective(&beta);
            let mut delta = f64::INFINITY;
            let mut it = 0;
            while it < IRLS_MAX_ITER && delta >= IRLS_TOL {
                it += 1;
                let r = y - x * &beta;
                let w: Vec<f64> = r.iter().map(|&ri| if ri <= 0.0 { 1.0 - tau } else { tau }).collect();
                let next = weighted_ls(x, y, &w, None)?;
                let next_obj = objective(&next);
                if next_obj > obj + 1e-12 * obj.abs().max(1.0) {
                    return Err(Error::Evaluation(format!("IRLS objective increased at iteration {it}: {obj} -> {next_obj}")));
                }
                delta = max_abs_diff(&next, &beta);
                beta = next;
                obj = next_obj;
            }
            Ok(EstimateResult {
                theta: beta.iter().copied().collect(),
                objective: obj,
                iterations: it,
                converged: delta < IRLS_TOL,
                tolerance: delta,
            })
        }
        Family::Pinball(alpha) => {
            let mut eps = 0.1;
            let mut it = 0;
            let mut last_delta = f64::INFINITY;
            let lin: DVector<f64> = x.transpose() * DVector::from_element(n, 0.5 * (alpha - 0.5));
            while eps >= 1e-8 * 0.999 {
                for _ in 0..200 {
                    it += 1;
                    let r = y - x * &beta;
                    let w: Vec<f64> = r.iter().map(|ri| 1.0 / (4.0 * ri.abs().max(eps))).collect();
                    let next = weighted_ls(x, y, &w, Some(&lin))?;
                    last_delta = max_abs_diff(&next, &beta);
                    beta = next;
                    if last_delta < 1e-3 * eps {
                        break;
                    }
                }
                eps *= 0.5;
            }
            let mut obj = objective(&beta);
            if let Some((v, steps)) = basis_rows(x, y, &beta).and_then(|rows| vertex_descent(x, y, alpha, rows)) {
                it += steps;
                let ov = objective(&v);
                if ov <= obj {
                    beta = v;
                    obj = ov;
                }
            }
            Ok(EstimateResult {
                theta: beta.iter().copied().collect(),
                objective: obj,
                iterations: it,
                converged: true,
                tolerance: last_delta,
            })
        }
    }
}

// The p observations with the smallest residuals, skipping rows that would
// make the subsystem singular.
fn basis_rows(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> Option<Vec<usize>> {
    let p = x.ncols();
    let r = y - x * beta;
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| r[a].abs().total_cmp(&r[b].abs()).then(a.cmp(&b)));
    let mut rows: Vec<usize> = Vec::with_capacity(p);
    for &i in &order {
        rows.push(i);
        let sub = DMatrix::from_fn(rows.len(), p, |a, b| x[(rows[a], b)]);
        let sv = sub.svd(false, false).singular_values;
        let max = sv.iter().cloned().fold(0.0, f64::max);
        if sv.iter().filter(|&&s| s > 1e-10 * max).count() < rows.len() {
            rows.pop();
        }
        if rows.len() == p {
            break;
        }
    }
    (rows.len() == p).then_some(rows)
}

fn pinball(alpha: f64, u: f64) -> f64 {
    if u < 0.0 {
        (alpha - 1.0) * u
    } else {
        alpha * u
    }
}

// Exact descent over vertices of the pinball objective: from the fit
// interpolating `rows`, move along the steepest descending edge (one basis
// observation released) to the minimising breakpoint, until no edge descends.
fn vertex_descent(x: &DMatrix<f64>, y: &DVector<f64>, alpha: f64, mut rows: Vec<usize>) -> Option<(DVector<f64>, usize)> {
    let (n, p) = (x.nrows(), x.ncols());
    let ytol = 1e-12 * (1.0 + y.amax());
    for it in 0..VERTEX_MAX_ITER {
        let a = DMatrix::from_fn(p, p, |i, j| x[(rows[i], j)]);
        let inv = a.try_inverse()?;
        let beta = &inv * DVector::from_fn(p, |i, _| y[rows[i]]);
        let r = y - x * &beta;
        let mut best: Option<(f64, DVector<f64>, usize)> = None;
        for k in 0..p {
            for sign in [1.0, -1.0] {
                let d: DVector<f64> = inv.column(k) * sign;
                let sd = x * &d;
                let g: f64 = (0..n)
                    .map(|j| {
                        if r[j].abs() <= ytol {
                            pinball(alpha, -sd[j])
                        } else {
                            -sd[j] * if r[j] < 0.0 { alpha - 1.0 } else { alpha }
                        }
                    })
                    .sum();
                if best.as_ref().is_none_or(|b| g < b.0) {
                    best = Some((g, d, k));
                }
            }
        }
        let (g, d, k) = best?;
        if g >= -1e-12 * n as f64 {
            return Some((beta, it));
        }
        let sd = x * &d;
        let mut breaks: Vec<(f64, usize)> = (0..n)
            .filter(|&j| r[j].abs() > ytol && sd[j] != 0.0)
            .map(|j| (r[j] / sd[j], j))
            .filter(|&(t, _)| t > 0.0)
            .collect();
        breaks.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut slope = g;
        let mut entering = None;
        for (_, j) in breaks {
            slope += sd[j].abs();
            if slope >= 0.0 {
                entering = Some(j);
                break;
            }
        }
        rows[k] = entering?;
    }
    None
}
