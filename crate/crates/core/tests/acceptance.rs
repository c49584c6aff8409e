#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always appear in the output.

use elicit::backtest::{default_bandwidth, long_run_variance, null_green_rate, ForecastSeries};
use elicit::elicit_check::{
    check_consistency, coherence_check, comonotone_check,
    es_counterexample, has_unique_quantile, random_discrete, var_counterexample, Axis, Grid, PairedSample,
};
use elicit::estimate::{fit_linear, huber_k, m_estimate, z_estimate, RegressionData};
use elicit::ident::IdentSpec;
use elicit::scoring::{mean_variance_reparam, VecConvex};
use elicit::{mix, ConvexSpec, Distribution, FunctionalSpec, Integrand, ScoreSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn one(t: &FunctionalSpec, f: &Distribution) -> Result<f64, String> {
    Ok(ok(t.evaluate(f))?[0])
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let e = start.elapsed();
    if e < limit {
        Ok(e)
    } else {
        Err(format!("runtime {e:?} exceeds {limit:?}"))
    }
}

fn c1_closed_forms() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let std = Normal::new(0.0, 1.0).unwrap();
    let (mut dv, mut de) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let mu = rng.gen_range(-5.0..5.0);
        let sigma = rng.gen_range(0.1..4.0);
        let alpha = rng.gen_range(0.005..0.5);
        let f = ok(Distribution::normal(mu, sigma))?;
        let z = std.inverse_cdf(alpha);
        dv = dv.max((one(&FunctionalSpec::VaR(alpha), &f)? - (-mu - sigma * z)).abs());
        de = de.max((one(&FunctionalSpec::ES(alpha), &f)? - (-mu + sigma * std.pdf(z) / alpha)).abs());
    }
    ensure!(dv <= 1e-9, "max VaR error {dv:e}");
    ensure!(de <= 1e-7, "max ES error {de:e}");
    let t = within(start, Duration::from_secs(5))?;
    Ok(format!("max |dVaR| = {dv:.2e}, max |dES| = {de:.2e}, {t:.2?}"))
}

fn c2_es_counterexample() -> Outcome {
    let (f1, f2) = ok(es_counterexample(0.5))?;
    let es = FunctionalSpec::ES(0.5);
    let (a, b) = (one(&es, &f1)?, one(&es, &f2)?);
    let m = one(&es, &ok(mix(&[f1, f2], &[0.5, 0.5]))?)?;
    ensure!(a.abs() <= 1e-9 && b.abs() <= 1e-9, "ES(F1) = {a:e}, ES(F2) = {b:e}");
    ensure!((m - 3.0 / 16.0).abs() <= 1e-9, "ES(mixture) = {m}");
    Ok(format!("ES(F1) = {a:.1e}, ES(F2) = {b:.1e}, ES(mix) = {m:.12}"))
}

fn c3_var_nonconvexity() -> Outcome {
    let (x1, x2) = ok(var_counterexample(2.0))?;
    let ps = ok(PairedSample::product(&x1, &x2))?;
    let var = FunctionalSpec::VaR(0.05);
    let sum: Vec<f64> = ps.x.iter().zip(&ps.y).map(|(a, b)| a + b).collect();
    let v_sum = one(&var, &ok(Distribution::empirical(&sum))?)?;
    let v1 = one(&var, &ok(Distribution::empirical(&x1))?)?;
    ensure!(v_sum == -1.0, "VaR(X1+X2) = {v_sum}");
    ensure!(v1 == -2.0, "VaR(X1) = {v1}");
    let r = ok(coherence_check(&var, &[ps], &[], &[]))?;
    ensure!(r.subadditivity.violated == 1, "subadditivity violations: {}", r.subadditivity.violated);
    ensure!(r.monotonicity.violated == 0, "monotonicity violations: {}", r.monotonicity.violated);
    let v = r.violations.iter().find(|v| matches!(v.axiom, elicit::elicit_check::Axiom::Subadditivity)).unwrap();
    ensure!(v.lhs == -1.0 && v.rhs == -4.0, "violation lhs {} rhs {}", v.lhs, v.rhs);
    Ok(format!(
        "VaR(X1+X2) = -1 > VaR(X1) + VaR(X2) = -4; subadditivity violations 1 (convexity {})",
        r.convexity.violated
    ))
}

fn unique_dists(rng: &mut ChaCha8Rng, n: usize, levels: &[f64]) -> Vec<Distribution> {
    let mut out = Vec::new();
    while out.len() < n {
        let d = random_discrete(rng, 6, -5.0, 5.0);
        if levels.iter().all(|&a| has_unique_quantile(&d, a, 1e-3)) {
            out.push(d);
        }
    }
    out
}

fn c4_consistency() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let pairs = vec![(0.2, 0.05), (0.3, 0.1), (0.5, 0.25)];
    let levels = [0.05, 0.1, 0.25];
    let dists = unique_dists(&mut rng, 50, &levels);
    let sq = ConvexSpec::square();
    let q = Integrand::new("1+y^2", |y| 1.0 + y * y);
    let ratio = ok(ScoreSpec::ratio_bregman(VecConvex::Separable(vec![sq.clone()]), vec![Integrand::identity()], q.clone()))?;
    let mv = ok(ScoreSpec::build_funcplusmin(
        vec![ScoreSpec::squared_error()],
        VecConvex::Separable(vec![ConvexSpec::bounded_quad(1.0)]),
        vec![1.0],
    ))?;
    let cases: Vec<(&str, ScoreSpec, FunctionalSpec, Grid)> = vec![
        ("bregman", ScoreSpec::bregman(sq.clone()), FunctionalSpec::Mean, ok(Grid::cube(-6.0, 6.0, 401, 1))?),
        (
            "ratio_bregman",
            ratio,
            FunctionalSpec::RatioOfExpectations { h: vec![Integrand::identity()], q },
            ok(Grid::cube(-2.0, 2.0, 401, 1))?,
        ),
        ("pinball", ok(ScoreSpec::pinball(0.1))?, FunctionalSpec::Quantile(0.1), ok(Grid::cube(-6.0, 6.0, 401, 1))?),
        ("expectile", ok(ScoreSpec::expectile(0.3, sq))?, FunctionalSpec::Expectile(0.3), ok(Grid::cube(-6.0, 6.0, 401, 1))?),
        (
            "var_es",
            ok(ScoreSpec::build_var_es(0.1, ConvexSpec::identity(), ConvexSpec::exp()))?,
            FunctionalSpec::VectorOf(vec![FunctionalSpec::VaR(0.1), FunctionalSpec::ES(0.1)]),
            ok(Grid::cube(-6.0, 6.0, 121, 2))?,
        ),
        (
            "spectral_k3",
            ok(ScoreSpec::build_spectral_joint_discrete(pairs, ConvexSpec::bounded_quad(1.0), 1.0))?,
            FunctionalSpec::Mean,
            ok(Grid::cube(-6.0, 6.0, 25, 4))?,
        ),
        (
            "funcplusmin_mean_variance",
            mv,
            FunctionalSpec::Mean,
            ok(Grid::new(vec![ok(Axis::new(-6.0, 6.0, 121))?, ok(Axis::new(-1.0, 27.0, 141))?]))?,
        ),
    ];
    let mut summary = Vec::new();
    for (name, s, t, grid) in cases {
        let t = match t {
            FunctionalSpec::Mean if s.dim() > 1 => s.functional().ok_or(format!("{name}: no functional"))?,
            other => other,
        };
        ensure!(s.is_strict(), "{name}: expected a strict score");
        let r = ok(check_consistency(&s, &t, &dists, &grid, 1e-3))?;
        let worst = r.cases.iter().map(|c| c.error).fold(0.0, f64::max);
        let margin = r.cases.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
        ensure!(r.all_pass(), "{name}: {} of 50 failed, worst error {worst:e}, min margin {margin:e}", r.failed);
        summary.push(format!("{name} {worst:.1e}"));
    }
    let t = within(start, Duration::from_secs(180))?;
    Ok(format!("worst errors: {}; {t:.2?}", summary.join(", ")))
}

fn c5_mean_variance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let dists = unique_dists(&mut rng, 20, &[]);
    let sq = ConvexSpec::square();
    let base = ok(ScoreSpec::ratio_bregman(
        VecConvex::Separable(vec![sq.clone(), sq]),
        vec![Integrand::identity(), Integrand::power(2)],
        Integrand::constant(1.0),
    ))?;
    let revealed = ok(base.reveal(mean_variance_reparam()))?;
    let fpm = ok(ScoreSpec::build_funcplusmin(
        vec![ScoreSpec::squared_error()],
        VecConvex::Separable(vec![ConvexSpec::bounded_quad(1.0)]),
        vec![1.0],
    ))?;
    let target = FunctionalSpec::VectorOf(vec![FunctionalSpec::Mean, FunctionalSpec::Variance]);
    let grid = ok(Grid::new(vec![ok(Axis::new(-6.0, 6.0, 121))?, ok(Axis::new(-1.0, 27.0, 141))?]))?;
    let a = ok(check_consistency(&revealed, &target, &dists, &grid, 1e-3))?;
    let b = ok(check_consistency(&fpm, &target, &dists, &grid, 1e-3))?;
    ensure!(a.all_pass(), "revelation route: {} failed: {:?}", a.failed, a.cases.iter().filter(|c| !c.pass).collect::<Vec<_>>());
    ensure!(b.all_pass(), "func-plus-min route: {} failed", b.failed);
    let mut agree = 0.0f64;
    for (x, y) in a.cases.iter().zip(&b.cases) {
        for (u, v) in x.argmin.iter().zip(&y.argmin) {
            agree = agree.max((u - v).abs());
        }
    }
    ensure!(agree <= 1e-3, "routes disagree by {agree:e}");
    let worst = a.cases.iter().chain(&b.cases).map(|c| c.error).fold(0.0, f64::max);
    Ok(format!("20 laws, worst error {worst:.1e}, route disagreement {agree:.1e}"))
}

fn c6_expectiles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let taus = [0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95];
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = random_discrete(&mut rng, 7, -5.0, 5.0);
        let s = rng.gen_range(0.2..5.0);
        let t = rng.gen_range(-3.0..3.0);
        let da = ok(d.affine(s, t))?;
        let dn = ok(d.affine(-1.0, 0.0))?;
        let mut prev = f64::NEG_INFINITY;
        for &tau in &taus {
            let e = ok(d.expectile(tau))?;
            let ea = ok(da.expectile(tau))?;
            let en = ok(dn.expectile(tau))?;
            let mirror = ok(d.expectile(1.0 - tau))?;
            worst = worst.max((ea - (s * e + t)).abs()).max((en + mirror).abs());
            ensure!(e >= prev - 1e-10, "expectile not monotone in tau at {tau}");
            prev = e;
        }
    }
    ensure!(worst <= 1e-10, "max algebra error {worst:e}");
    let b = ok(Distribution::uniform_atoms(&[0.0, 1.0]))?;
    let mut wb = 0.0f64;
    for i in 1..100 {
        let tau = i as f64 / 100.0;
        wb = wb.max((ok(b.expectile(tau))? - tau).abs());
    }
    ensure!(wb <= 1e-12, "Bernoulli expectile error {wb:e}");
    Ok(format!("max algebra error {worst:.1e}, Bernoulli error {wb:.1e}"))
}

fn c7_es_coherence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut samples = Vec::new();
    for _ in 0..40 {
        let n = rng.gen_range(10..60);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        samples.push(ok(PairedSample::new(x, y))?);
    }
    let mut violations = 0;
    let mut comono = 0.0f64;
    for alpha in [0.01, 0.05, 0.1, 0.25, 0.5] {
        let es = FunctionalSpec::ES(alpha);
        let r = ok(coherence_check(&es, &samples, &[0.5, 2.0, 7.5], &[-3.0, 0.5, 10.0]))?;
        violations += r.total_violations();
        for p in &samples {
            let c = ok(comonotone_check(&es, &p.x, &|u| u, &|u| u.powi(3) + 2.0 * u))?;
            comono = comono.max(c.difference.abs());
        }
    }
    ensure!(violations == 0, "{violations} ES axiom violations");
    ensure!(comono <= 1e-9, "ES comonotone difference {comono:e}");
    let mut nrng = ChaCha8Rng::seed_from_u64(7);
    let driver: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut nrng)).collect();
    let ev = ok(comonotone_check(&FunctionalSpec::EVaR(0.3), &driver, &|u| u, &|u| u.exp()))?;
    ensure!(ev.gap > 1e-3, "EVaR comonotone gap {}", ev.gap);
    Ok(format!("ES violations 0, comonotone |diff| {comono:.1e}; EVaR gap {:.4e}", ev.gap))
}

fn c8_dm_size() -> Outcome {
    let start = Instant::now();
    let rate = ok(null_green_rate(512, 2000, 0.05, 0xD1E8))?;
    ensure!((0.035..=0.065).contains(&rate), "green rate {rate}");
    let n = 100_000;
    let phi = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut d = Vec::with_capacity(n);
    let mut prev = 0.0;
    for _ in 0..n {
        let e: f64 = StandardNormal.sample(&mut rng);
        prev = phi * prev + e;
        d.push(prev);
    }
    let analytic = 1.0 / ((1.0 - phi) * (1.0 - phi));
    let lrv = ok(long_run_variance(&d, None))?;
    let rel = (lrv.sigma2 - analytic).abs() / analytic;
    ensure!(rel <= 0.1, "LRV {} vs analytic {analytic}", lrv.sigma2);
    ensure!(lrv.bandwidth == default_bandwidth(n), "bandwidth {}", lrv.bandwidth);
    let t = within(start, Duration::from_secs(120))?;
    Ok(format!("green rate {rate:.4}, AR(1) LRV {:.4} vs {analytic} ({:.1}%), {t:.2?}", lrv.sigma2, rel * 100.0))
}

fn c9_estimation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut worst = 0.0f64;
    for _ in 0..30 {
        let n = 37;
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-4.0..6.0)).collect();
        let data = ok(RegressionData::intercept(&y))?;
        let sq = ConvexSpec::square();
        let fams: [(ScoreSpec, IdentSpec); 3] = [
            (ScoreSpec::squared_error(), IdentSpec::Mean),
            (ok(ScoreSpec::pinball(0.2))?, IdentSpec::Quantile(0.2)),
            (ok(ScoreSpec::expectile(0.3, sq))?, IdentSpec::Expectile(0.3)),
        ];
        for (s, v) in &fams {
            let m = ok(m_estimate(s, &y, (-5.0, 7.0)))?.theta[0];
            let z = ok(z_estimate(v, &y))?.theta[0];
            let l = ok(fit_linear(s, &data))?.theta[0];
            worst = worst.max((m - z).abs()).max((m - l).abs()).max((z - l).abs());
        }
    }
    ensure!(worst <= 1e-6, "max disagreement {worst:e}");
    // Distinct values: with ties at the median the K-estimator sits O(K) away.
    let mut ints: Vec<f64> = (-40..40).map(|v| v as f64).collect();
    for i in (1..ints.len()).rev() {
        ints.swap(i, rng.gen_range(0..=i));
    }
    ints.truncate(31);
    let mean = ints.iter().sum::<f64>() / ints.len() as f64;
    let mut sorted = ints.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[15];
    let hm = ok(huber_k(&ints, 1e6))?.theta[0];
    let hd = ok(huber_k(&ints, 1e-6))?.theta[0];
    ensure!(hm == mean, "Huber K = 1e6 gives {hm}, mean {mean}");
    ensure!(hd == median, "Huber K = 1e-6 gives {hd}, median {median}");
    Ok(format!("max m/z/linear disagreement {worst:.1e}; Huber limits exact"))
}

fn c10_determinism() -> Outcome {
    let dir = ok(tempfile::tempdir())?;
    let run = |args: &[&str], out: &str| -> Result<(i32, Vec<u8>), String> {
        let path = dir.path().join(out);
        let mut full = vec!["elicit"];
        full.extend_from_slice(args);
        let p = path.to_str().unwrap().to_string();
        full.extend_from_slice(&["--output", &p]);
        let code = elicit::cli::main_with_args(full);
        Ok((code, ok(std::fs::read(&path))?))
    };
    let csv = dir.path().join("bt.csv");
    let mut text = String::from("t,y,x1,z1\n");
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for t in 0..300 {
        let y: f64 = StandardNormal.sample(&mut rng);
        text += &format!("{t},{y},{},{}\n", -1.2 + 0.1 * rng.gen::<f64>(), -1.0 + 0.1 * rng.gen::<f64>());
    }
    ok(std::fs::write(&csv, text))?;
    ok(ForecastSeries::from_csv(&csv))?;
    let csv = csv.to_str().unwrap().to_string();
    let bt = ["backtest", "--input", &csv, "--family", "pinball", "--alpha", "0.1", "--seed", "42"];
    let v = ["verify", "--seed", "12345"];
    let (c1, a1) = run(&v, "v1.json")?;
    let (c2, a2) = run(&v, "v2.json")?;
    let (c3, b1) = run(&bt, "b1.json")?;
    let (c4, b2) = run(&bt, "b2.json")?;
    ensure!(c1 == 0 && c2 == 0, "verify exit codes {c1}, {c2}");
    ensure!(c3 == c4, "backtest exit codes {c3}, {c4}");
    ensure!(a1 == a2, "verify output differs");
    ensure!(b1 == b2, "backtest output differs");
    let (c5, d1) = run(&["backtest", "--demo", "--alpha", "0.05"], "d1.json")?;
    let (_, d2) = run(&["backtest", "--demo", "--alpha", "0.05"], "d2.json")?;
    ensure!(c5 == 0 && d1 == d2, "demo backtest exit {c5} or output differs");
    Ok(format!("verify {} bytes, backtest {} bytes, byte-identical", a1.len(), b1.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("closed-form VaR/ES for normals", c1_closed_forms),
        ("ES non-elicitability counterexample", c2_es_counterexample),
        ("VaR non-convexity", c3_var_nonconvexity),
        ("consistency oracle", c4_consistency),
        ("mean-variance joint elicitability", c5_mean_variance),
        ("expectile algebra", c6_expectiles),
        ("ES coherence, EVaR comonotone gap", c7_es_coherence),
        ("DM size and long-run variance", c8_dm_size),
        ("estimation cross-checks", c9_estimation),
        ("determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match r {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
