//! Benchmarks a lasso reconstruction against white, AR1(0.25) and
//! empirical-AR1 pseudoproxy networks.
//!
//!     cargo run --release --example null_benchmark -- [TRIALS]

use proxyskill::noise::NullModelSpec;
use proxyskill::nullbench::{compare_null_families, Aggregation};
use proxyskill::reconstruct::{select_lambda_cv, LambdaChoice, MethodSpec};
use proxyskill::synthetic::{mw_like, MwLikeConfig};

fn main() -> proxyskill::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(99);
    let s = mw_like(&MwLikeConfig::default(), 2)?;
    let lambda = select_lambda_cv(&s.network, &s.target, &s.target.axis().years())?.lambda;
    let method = MethodSpec::Lasso { lambda: LambdaChoice::Fixed(lambda) };
    let specs = [NullModelSpec::White, NullModelSpec::ar1_fixed(0.25)?, NullModelSpec::Ar1Empirical];
    let cmp = compare_null_families(&s.network, &s.target, method, &specs, trials, 30, 2024, Aggregation::MeanOverSplits)?;

    println!("{}: mean RE over windows {:+.4}", cmp.method, cmp.re_proxy);
    for f in &cmp.families {
        let b = &f.boxplot;
        println!(
            "{:>16}: median {:+.3} IQR [{:+.3}, {:+.3}]  p95 {:+.3} p99 {:+.3}  significant95 {}",
            f.ensemble.spec.to_string(),
            b.median,
            b.q1,
            b.q3,
            f.verdict.benchmark95,
            f.verdict.benchmark99,
            f.verdict.significant95
        );
    }
    Ok(())
}
