//! Identification functions and the orientation check.

use elicit::ident::{check_orientation, IdentSpec};
use elicit::{Distribution, FunctionalSpec};

fn main() -> elicit::Result<()> {
    let fs = vec![
        Distribution::uniform_atoms(&[-1.0, 0.0, 4.0])?,
        Distribution::normal(0.3, 1.5)?,
        Distribution::discrete(vec![0.0, 1.0], vec![0.3, 0.7])?,
    ];
    for (name, v, t) in [
        ("mean", IdentSpec::Mean, FunctionalSpec::Mean),
        ("expectile 0.2", IdentSpec::Expectile(0.2), FunctionalSpec::Expectile(0.2)),
        ("mean vs expectile", IdentSpec::Mean, FunctionalSpec::Expectile(0.2)),
    ] {
        let r = check_orientation(&v, &t, &fs, 1)?;
        println!("{name:<18} probes {:>3}, violations {:>2}, oriented {}", r.probes_checked, r.violations.len(), r.is_oriented());
    }
    let v = IdentSpec::Quantile(0.3);
    let f = &fs[0];
    for x in [-1.5, -1.0, 0.0, 4.0] {
        println!("E V_q0.3(x = {x:>4}, Y) = {:+.3}", v.mean_ident(&[x], f)?[0]);
    }
    Ok(())
}
