//! Lasso with a cross-validated penalty, then RE over every 30-year holdout
//! window, summarized by window position.

use proxyskill::reconstruct::{fit_lasso, select_lambda_cv, LambdaChoice, MethodSpec};
use proxyskill::skill::{holdout_sweep, summarize_by_position};
use proxyskill::synthetic::{mw_like, MwLikeConfig};

fn main() -> proxyskill::Result<()> {
    let s = mw_like(&MwLikeConfig::default(), 11)?;
    let calib = s.target.axis().years();
    let sel = select_lambda_cv(&s.network, &s.target, &calib)?;
    let model = fit_lasso(&s.network, &s.target, &calib, sel.lambda)?;
    let nonzero = model.coefficients().iter().filter(|b| **b != 0.0).count();
    println!("lambda {:.4} keeps {nonzero} of {} proxies", sel.lambda, s.network.n_columns());

    let method = MethodSpec::Lasso { lambda: LambdaChoice::Fixed(sel.lambda) };
    let results = holdout_sweep(&s.network, &s.target, method, 30)?;
    for r in results.iter().step_by(30) {
        println!(
            "{}..{} {:>8}: rmse {:.4} vs {:.4}, RE {:+.3}",
            r.split.holdout_start,
            r.split.holdout_end(),
            r.split.position.as_str(),
            r.rmse_model,
            r.rmse_intercept,
            r.re.unwrap_or(f64::NAN)
        );
    }
    let summary = summarize_by_position(&results)?;
    for (name, class) in [("endpoint", &summary.endpoint), ("interior", &summary.interior)] {
        if let Some(c) = class {
            println!("{name}: n {} median RE {:+.3} mean RE {:+.3}", c.re.n, c.re.median, c.re.mean);
        }
    }
    Ok(())
}
