//! Calibration-consistency sets for backcast years: a well-behaved network
//! gives intervals, one whose proxies disagree gives empty sets.

use proxyskill::consistency::{backcast_consistency_profile, fit_calibration, ConsistencyOptions, CovarianceMode, SetKind};
use proxyskill::synthetic::calibration_sim;

fn main() -> proxyskill::Result<()> {
    let opts = ConsistencyOptions::default();
    for adversarial in [false, true] {
        let sim = calibration_sim(5, 100, 2000, adversarial, 9)?;
        let fit = fit_calibration(&sim.network, &sim.target, &sim.calib_years, CovarianceMode::Diagonal)?;
        let profile = backcast_consistency_profile(&fit, &sim.network, &sim.backcast_years, &opts)?;
        let covered = profile
            .sets
            .iter()
            .filter(|s| s.set_kind == SetKind::Interval)
            .filter(|s| {
                let t = sim.truth[(s.year - 1) as usize];
                s.lo.unwrap() <= t && t <= s.hi.unwrap()
            })
            .count();
        let t = profile.totals;
        println!(
            "{}: interval {} empty {} unbounded {}; truth covered in {:.1}% of years",
            if adversarial { "adversarial" } else { "consistent " },
            t.interval,
            t.empty,
            t.unbounded,
            100.0 * covered as f64 / t.total() as f64
        );
    }
    Ok(())
}
