//! Principal-components backcasts with 1, 5, 10 and 20 components: the
//! reconstructions can differ a lot while their holdout RMSEs barely move.
//! Also prints how much of the weight lands on a correlated block.

use proxyskill::data::YearAxis;
use proxyskill::reconstruct::{fit_pcr, pc_weight_profile, predict, predictable_years, MethodSpec};
use proxyskill::skill::holdout_sweep;
use proxyskill::synthetic::{block_network, mw_like, MwLikeConfig};

fn main() -> proxyskill::Result<()> {
    let s = mw_like(&MwLikeConfig::default(), 3)?;
    let calib = s.target.axis().years();
    let mut backcasts = Vec::new();
    for k in [1, 5, 10, 20] {
        let model = fit_pcr(&s.network, &s.target, &calib, k)?;
        let years = predictable_years(&model, &s.network);
        let sweep = holdout_sweep(&s.network, &s.target, MethodSpec::Pcr { k }, 30)?;
        let cv = sweep.iter().map(|r| r.rmse_model).sum::<f64>() / sweep.len() as f64;
        println!("k = {k:>2}: mean holdout RMSE {cv:.4}");
        backcasts.push(predict(&model, &s.network, &years)?);
    }
    let pre = |b: &proxyskill::reconstruct::Backcast| -> Vec<f64> {
        b.years.iter().zip(&b.values).filter(|(y, _)| **y < 1850).map(|(_, v)| *v).collect()
    };
    let base = pre(&backcasts[0]);
    for b in &backcasts[1..] {
        let other = pre(b);
        let rms = (base.iter().zip(&other).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / base.len() as f64).sqrt();
        println!("{} vs {}: pre-1850 RMS difference {rms:.4}", backcasts[0].method, b.method);
    }

    let blk = block_network(19, 71, YearAxis::new(1400, 599)?, 149, 5)?;
    let ids: Vec<&str> = blk.block_ids.iter().map(String::as_str).collect();
    for k in [1, 5, 10, 20] {
        let model = fit_pcr(&blk.network, &blk.target, &blk.target.axis().years(), k)?;
        println!("k = {k:>2}: block L1 weight share {:.3}", pc_weight_profile(&model)?.share_of(&ids));
    }
    Ok(())
}
