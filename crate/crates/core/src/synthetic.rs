//! Seeded synthetic targets and proxy networks for experiments, examples
//! and tests. Every generator is a pure function of its config and seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::data::{ProxyNetwork, ProxySeries, TargetSeries, YearAxis};
use crate::error::{Error, Result};
use crate::noise::{ar1_raw, Ar1Params};

fn rng(seed: u64, tag: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    key[16..24].copy_from_slice(b"syntheti");
    ChaCha20Rng::from_seed(key)
}

/// Unit-variance stationary AR1 path.
fn unit_ar1<R: Rng>(phi: f64, len: usize, rng: &mut R) -> Result<Vec<f64>> {
    let params = Ar1Params::new(phi, (1.0 - phi * phi).sqrt())?;
    Ok(ar1_raw(params, len, rng))
}

fn normals<R: Rng>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Instrumental-era-like setup: a target of trend plus AR1 noise over the
/// last `instrumental_len` years, and a network of weak-signal proxies with
/// AR1 noise whose coefficients are right-skewed on `[0, max_phi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MwLikeConfig {
    pub first_year: i32,
    pub last_year: i32,
    pub instrumental_len: usize,
    pub n_proxies: usize,
    /// Signal-to-noise amplitude of each proxy's temperature component.
    pub signal: f64,
    /// Total warming over the instrumental period, °C.
    pub trend: f64,
    pub target_phi: f64,
    pub target_sd: f64,
    pub max_phi: f64,
}

impl Default for MwLikeConfig {
    fn default() -> Self {
        MwLikeConfig {
            first_year: 1000,
            last_year: 1998,
            instrumental_len: 149,
            n_proxies: 90,
            signal: 0.25,
            trend: 0.8,
            target_phi: 0.4,
            target_sd: 0.2,
            max_phi: 0.95,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MwLike {
    pub target: TargetSeries,
    pub network: ProxyNetwork,
    /// Latent temperature over the whole network axis.
    pub latent: Vec<f64>,
    /// Noise AR1 coefficient used for each proxy.
    pub phis: Vec<f64>,
}

pub fn mw_like(cfg: &MwLikeConfig, seed: u64) -> Result<MwLike> {
    let axis = YearAxis::spanning(cfg.first_year, cfg.last_year)?;
    let n = axis.len();
    if cfg.instrumental_len < 3 || cfg.instrumental_len > n {
        return Err(Error::Config(format!(
            "instrumental length {} does not fit a {n}-year axis",
            cfg.instrumental_len
        )));
    }
    let inst_start = n - cfg.instrumental_len;
    let mut r = rng(seed, 0);
    let noise = unit_ar1(cfg.target_phi, n, &mut r)?;
    let latent: Vec<f64> = (0..n)
        .map(|i| {
            let t = if i >= inst_start {
                cfg.trend * (i - inst_start) as f64 / (cfg.instrumental_len - 1) as f64
            } else {
                0.0
            };
            t + cfg.target_sd * noise[i]
        })
        .collect();
    let target = TargetSeries::new(
        YearAxis::new(axis.year_at(inst_start), cfg.instrumental_len)?,
        latent[inst_start..].to_vec(),
    )?;
    let lat_mean = crate::stats::mean(&latent);
    let lat_sd = crate::stats::sample_sd(&latent);
    // right-skewed coefficients: Beta(1.2, 3) scaled to [0, max_phi]
    let beta = Beta::new(1.2, 3.0).map_err(|e| Error::Numeric(e.to_string()))?;
    let mut phis = Vec::with_capacity(cfg.n_proxies);
    let mut series = Vec::with_capacity(cfg.n_proxies);
    for j in 0..cfg.n_proxies {
        let mut cr = rng(seed, 1 + j as u64);
        let phi = cfg.max_phi * beta.sample(&mut cr);
        let noise = unit_ar1(phi, n, &mut cr)?;
        let values = latent
            .iter()
            .zip(&noise)
            .map(|(l, e)| cfg.signal * (l - lat_mean) / lat_sd + e)
            .collect();
        phis.push(phi);
        series.push(ProxySeries::complete(format!("px{:03}", j + 1), values));
    }
    Ok(MwLike {
        target,
        network: ProxyNetwork::new(axis, series)?,
        latent,
        phis,
    })
}

/// A network whose first `block` columns share one strong common factor
/// (the "block"), followed by `others` independent columns. The target
/// tracks the block factor.
#[derive(Debug, Clone)]
pub struct BlockNetwork {
    pub target: TargetSeries,
    pub network: ProxyNetwork,
    pub block_ids: Vec<String>,
}

pub fn block_network(
    block: usize,
    others: usize,
    axis: YearAxis,
    instrumental_len: usize,
    seed: u64,
) -> Result<BlockNetwork> {
    let n = axis.len();
    if instrumental_len < 3 || instrumental_len > n {
        return Err(Error::Config("instrumental length does not fit the axis".into()));
    }
    let mut r = rng(seed, 100);
    let factor = unit_ar1(0.5, n, &mut r)?;
    let mut series = Vec::with_capacity(block + others);
    let mut block_ids = Vec::with_capacity(block);
    for j in 0..block {
        let mut cr = rng(seed, 101 + j as u64);
        let e = normals(n, &mut cr);
        let id = format!("blk{:02}", j + 1);
        block_ids.push(id.clone());
        series.push(ProxySeries::complete(
            id,
            factor.iter().zip(&e).map(|(f, e)| f + 0.3 * e).collect(),
        ));
    }
    for j in 0..others {
        let mut cr = rng(seed, 1000 + j as u64);
        series.push(ProxySeries::complete(format!("ind{:02}", j + 1), normals(n, &mut cr)));
    }
    let start = n - instrumental_len;
    let mut tr = rng(seed, 99);
    let target: Vec<f64> = (start..n)
        .map(|i| 0.5 * factor[i] + 0.5 * tr.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(BlockNetwork {
        target: TargetSeries::new(YearAxis::new(axis.year_at(start), instrumental_len)?, target)?,
        network: ProxyNetwork::new(axis, series)?,
        block_ids,
    })
}

/// `columns` proxies that are linear combinations of `rank` latent factors,
/// so the standardized calibration matrix has exactly that rank.
pub fn low_rank_network(
    rank: usize,
    columns: usize,
    axis: YearAxis,
    instrumental_len: usize,
    seed: u64,
) -> Result<(TargetSeries, ProxyNetwork)> {
    let n = axis.len();
    if rank == 0 || rank > columns || instrumental_len > n {
        return Err(Error::Config("invalid low-rank network shape".into()));
    }
    let mut r = rng(seed, 200);
    let factors: Vec<Vec<f64>> = (0..rank).map(|_| normals(n, &mut r)).collect();
    let series = (0..columns)
        .map(|j| {
            let w: Vec<f64> = (0..rank).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
            let values = (0..n)
                .map(|i| (0..rank).map(|f| w[f] * factors[f][i]).sum())
                .collect();
            ProxySeries::complete(format!("lr{:02}", j + 1), values)
        })
        .collect();
    let start = n - instrumental_len;
    let target = (start..n)
        .map(|i| factors[0][i] + 0.3 * r.sample::<f64, _>(StandardNormal))
        .collect();
    Ok((
        TargetSeries::new(YearAxis::new(axis.year_at(start), instrumental_len)?, target)?,
        ProxyNetwork::new(axis, series)?,
    ))
}

/// Linear-response proxies for calibration-consistency experiments.
#[derive(Debug, Clone)]
pub struct CalibrationSim {
    pub target: TargetSeries,
    pub network: ProxyNetwork,
    /// Latent target over the whole axis, including backcast years.
    pub truth: Vec<f64>,
    pub calib_years: Vec<i32>,
    pub backcast_years: Vec<i32>,
}

/// `q` proxies `y_j = a_j + b_j * xi + e_j` with unit-variance noise over
/// `backcast_len` backcast years followed by `calib_len` calibration years.
/// With `adversarial`, the second half of the proxies respond with the
/// opposite sign during the backcast period only.
pub fn calibration_sim(q: usize, calib_len: usize, backcast_len: usize, adversarial: bool, seed: u64) -> Result<CalibrationSim> {
    let n = calib_len + backcast_len;
    let axis = YearAxis::new(1, n)?;
    let mut r = rng(seed, 300);
    let truth: Vec<f64> = normals(n, &mut r);
    let mut series = Vec::with_capacity(q);
    for j in 0..q {
        let a = r.gen_range(-1.0..1.0);
        let b = r.gen_range(2.0..3.0);
        let mut cr = rng(seed, 301 + j as u64);
        let values = (0..n)
            .map(|i| {
                let flip = adversarial && j >= q / 2 && i < backcast_len;
                let slope = if flip { -b } else { b };
                a + slope * truth[i] + cr.sample::<f64, _>(StandardNormal)
            })
            .collect();
        series.push(ProxySeries::complete(format!("c{:02}", j + 1), values));
    }
    let years = axis.years();
    Ok(CalibrationSim {
        target: TargetSeries::new(YearAxis::new(axis.year_at(backcast_len), calib_len)?, truth[backcast_len..].to_vec())?,
        network: ProxyNetwork::new(axis, series)?,
        truth,
        calib_years: years[backcast_len..].to_vec(),
        backcast_years: years[..backcast_len].to_vec(),
    })
}

/// White-noise proxies of shape `(years, p)` alongside an AR1 target on the
/// same years; the setting where the white-noise null is exactly true.
pub fn white_null_setup(p: usize, n: usize, seed: u64) -> Result<(TargetSeries, ProxyNetwork)> {
    let axis = YearAxis::new(1, n)?;
    let mut r = rng(seed, 400);
    let target = TargetSeries::new(axis, unit_ar1(0.3, n, &mut r)?)?;
    let series = (0..p)
        .map(|j| ProxySeries::complete(format!("w{:02}", j + 1), normals(n, &mut rng(seed, 401 + j as u64))))
        .collect();
    Ok((target, ProxyNetwork::new(axis, series)?))
}
