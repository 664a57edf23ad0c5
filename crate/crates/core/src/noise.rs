//! AR(1) fitting and pseudoproxy generation.
//!
//! # Random streams
//!
//! Every random draw comes from a ChaCha20 generator whose 256-bit key is
//! the concatenation, little-endian, of `seed`, `trial_index`,
//! `column_index` (each as `u64`) and the ASCII tag `pseudopx`. Distinct
//! `(seed, trial_index, column_index)` triples therefore key distinct
//! streams, and a trial can be regenerated in isolation. Normal deviates use
//! `rand_distr::StandardNormal` (ziggurat); outputs are bit-identical for a
//! fixed build and dependency lock.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{ProxyNetwork, ProxySeries};
use crate::error::{Error, Result};

/// Largest |phi| a fitted or requested AR1 coefficient may take.
pub const PHI_CLAMP: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1Params {
    phi: f64,
    sigma: f64,
}

impl Ar1Params {
    pub fn new(phi: f64, sigma: f64) -> Result<Self> {
        if !(phi.abs() < 1.0) {
            return Err(Error::InvalidAr1(format!("phi {phi} outside (-1, 1)")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidAr1(format!("sigma {sigma} must be positive")));
        }
        Ok(Ar1Params { phi, sigma })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn stationary_variance(&self) -> f64 {
        self.sigma * self.sigma / (1.0 - self.phi * self.phi)
    }
}

/// Pseudoproxy family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NullModelSpec {
    White,
    Ar1Fixed { fixed_phi: f64 },
    Ar1Empirical,
}

impl NullModelSpec {
    pub fn ar1_fixed(phi: f64) -> Result<Self> {
        if !(phi.abs() < 1.0) {
            return Err(Error::InvalidAr1(format!("fixed phi {phi} outside (-1, 1)")));
        }
        Ok(NullModelSpec::Ar1Fixed { fixed_phi: phi })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            NullModelSpec::White => "white",
            NullModelSpec::Ar1Fixed { .. } => "ar1_fixed",
            NullModelSpec::Ar1Empirical => "ar1_empirical",
        }
    }
}

impl fmt::Display for NullModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NullModelSpec::Ar1Fixed { fixed_phi } => write!(f, "ar1_fixed({fixed_phi})"),
            other => f.write_str(other.kind()),
        }
    }
}

impl FromStr for NullModelSpec {
    type Err = Error;

    /// Accepts `white`, `ar1_empirical`, `ar1_fixed` (phi supplied
    /// separately, defaults to 0) and `ar1_fixed(0.25)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "white" => Ok(NullModelSpec::White),
            "ar1_empirical" => Ok(NullModelSpec::Ar1Empirical),
            "ar1_fixed" => NullModelSpec::ar1_fixed(0.0),
            _ => {
                let phi = s
                    .strip_prefix("ar1_fixed(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown null family `{s}`")))?;
                NullModelSpec::ar1_fixed(phi)
            }
        }
    }
}

/// Identifies one Monte-Carlo trial's random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub trial_index: u64,
}

impl RngSeed {
    pub fn new(seed: u64, trial_index: u64) -> Self {
        RngSeed { seed, trial_index }
    }

    /// Independent stream for one column of this trial.
    pub fn stream(&self, column_index: u64) -> ChaCha20Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.trial_index.to_le_bytes());
        key[16..24].copy_from_slice(&column_index.to_le_bytes());
        key[24..].copy_from_slice(b"pseudopx");
        ChaCha20Rng::from_seed(key)
    }
}

/// Lag-1 autocorrelation fit. `phi` is the centered lag-1 sample
/// autocorrelation (denominator over all `n` terms) clamped to
/// `[-0.99, 0.99]`; `sigma` is the sample sd of `c[t] - phi * c[t-1]` on the
/// centered series.
pub fn fit_ar1(series: &[f64]) -> Result<Ar1Params> {
    let n = series.len();
    if n < 3 {
        return Err(Error::SeriesTooShort {
            length: n,
            required: 3,
        });
    }
    let m = crate::stats::mean(series);
    let c: Vec<f64> = series.iter().map(|x| x - m).collect();
    let denom: f64 = c.iter().map(|v| v * v).sum();
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::ZeroVarianceSeries);
    }
    let num: f64 = c.windows(2).map(|w| w[1] * w[0]).sum();
    let phi = (num / denom).clamp(-PHI_CLAMP, PHI_CLAMP);
    let resid: Vec<f64> = c.windows(2).map(|w| w[1] - phi * w[0]).collect();
    let sigma = crate::stats::sample_sd(&resid);
    Ar1Params::new(phi, sigma)
}

/// Fits on the longest contiguous run of available values (first run on ties).
pub fn fit_ar1_masked(values: &[f64], available: &[bool]) -> Result<Ar1Params> {
    let (mut best_start, mut best_len) = (0, 0);
    let mut run_start = 0;
    for i in 0..=available.len() {
        let open = i < available.len() && available[i];
        if !open {
            if i - run_start > best_len {
                best_start = run_start;
                best_len = i - run_start;
            }
            run_start = i + 1;
        }
    }
    fit_ar1(&values[best_start..best_start + best_len])
}

/// Stationary AR1 path without post-standardization; `x[0]` is drawn from
/// the stationary distribution.
pub fn ar1_raw<R: Rng>(params: Ar1Params, length: usize, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(length);
    if length == 0 {
        return out;
    }
    let z0: f64 = rng.sample(StandardNormal);
    let mut x = z0 * params.stationary_variance().sqrt();
    out.push(x);
    for _ in 1..length {
        let z: f64 = rng.sample(StandardNormal);
        x = params.phi * x + params.sigma * z;
        out.push(x);
    }
    out
}

/// Rescales to sample mean 0 and sd 1 (a single value is only centered).
fn standardize_in_place(values: &mut [f64]) {
    let m = crate::stats::mean(values);
    values.iter_mut().for_each(|v| *v -= m);
    if values.len() > 1 {
        let sd = crate::stats::sample_sd(values);
        if sd > 0.0 {
            values.iter_mut().for_each(|v| *v /= sd);
        }
    }
}

fn generate<R: Rng>(spec: &NullModelSpec, params: Option<Ar1Params>, length: usize, rng: &mut R) -> Result<Vec<f64>> {
    let mut out = match spec {
        NullModelSpec::White => (0..length).map(|_| rng.sample(StandardNormal)).collect(),
        NullModelSpec::Ar1Fixed { fixed_phi } => {
            let sigma = params.map_or(1.0, |p| p.sigma);
            ar1_raw(Ar1Params::new(*fixed_phi, sigma)?, length, rng)
        }
        NullModelSpec::Ar1Empirical => {
            let p = params.ok_or(Error::MissingAr1Params("ar1_empirical"))?;
            ar1_raw(p, length, rng)
        }
    };
    standardize_in_place(&mut out);
    Ok(out)
}

/// One standardized pseudoproxy drawn from column stream 0 of `seed`.
///
/// `ar1_fixed` takes its coefficient from the null model (and `sigma` from
/// `params` when given); `ar1_empirical` requires `params`.
pub fn gen_pseudoproxy(
    spec: &NullModelSpec,
    params: Option<Ar1Params>,
    length: usize,
    seed: RngSeed,
) -> Result<Vec<f64>> {
    if length == 0 {
        return Err(Error::SeriesTooShort {
            length,
            required: 1,
        });
    }
    generate(spec, params, length, &mut seed.stream(0))
}

/// Reusable pseudo-network generator: per-column AR1 fits are done once.
#[derive(Debug, Clone)]
pub struct PseudoNetworkGenerator {
    template: ProxyNetwork,
    spec: NullModelSpec,
    params: Vec<Option<Ar1Params>>,
}

impl PseudoNetworkGenerator {
    pub fn new(net: &ProxyNetwork, spec: NullModelSpec) -> Result<Self> {
        let params = match spec {
            NullModelSpec::Ar1Empirical => net
                .series()
                .iter()
                .map(|s| {
                    fit_ar1_masked(&s.values, &s.available)
                        .map(Some)
                        .map_err(|e| e.at_column(s.id.clone()))
                })
                .collect::<Result<Vec<_>>>()?,
            _ => vec![None; net.n_columns()],
        };
        Ok(PseudoNetworkGenerator {
            template: net.clone(),
            spec,
            params,
        })
    }

    pub fn spec(&self) -> NullModelSpec {
        self.spec
    }

    /// Fitted per-column parameters (`None` for families that do not fit).
    pub fn params(&self) -> &[Option<Ar1Params>] {
        &self.params
    }

    pub fn generate(&self, seed: RngSeed) -> Result<ProxyNetwork> {
        let len = self.template.axis().len();
        let series = self
            .template
            .series()
            .iter()
            .zip(&self.params)
            .enumerate()
            .map(|(c, (s, p))| {
                let mut values = generate(&self.spec, *p, len, &mut seed.stream(c as u64))?;
                for (v, &a) in values.iter_mut().zip(&s.available) {
                    if !a {
                        *v = 0.0;
                    }
                }
                Ok(ProxySeries {
                    id: s.id.clone(),
                    values,
                    available: s.available.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ProxyNetwork::new(self.template.axis(), series)
    }
}

/// Pseudoproxy network with the same shape and mask as `net`.
pub fn gen_pseudo_network(net: &ProxyNetwork, spec: NullModelSpec, seed: RngSeed) -> Result<ProxyNetwork> {
    PseudoNetworkGenerator::new(net, spec)?.generate(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::YearAxis;

    #[test]
    fn alternating_sequence_phi() {
        let x: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let p = fit_ar1(&x).unwrap();
        assert!((p.phi() + 0.9).abs() < 1e-15);
    }

    #[test]
    fn constant_and_short_series_rejected() {
        assert!(matches!(fit_ar1(&[2.0; 8]), Err(Error::ZeroVarianceSeries)));
        assert!(matches!(fit_ar1(&[1.0, 2.0]), Err(Error::SeriesTooShort { .. })));
    }

    #[test]
    fn phi_is_clamped() {
        let x: Vec<f64> = (0..5000).map(|i| i as f64).collect();
        let p = fit_ar1(&x).unwrap();
        assert_eq!(p.phi(), PHI_CLAMP);
    }

    #[test]
    fn masked_fit_uses_longest_run() {
        let values = [5.0, -5.0, 0.0, 1.0, -1.0, 1.0, -1.0, 1.0, 0.0, 9.0];
        let available = [true, true, false, true, true, true, true, true, false, true];
        let p = fit_ar1_masked(&values, &available).unwrap();
        let direct = fit_ar1(&values[3..8]).unwrap();
        assert_eq!(p, direct);
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("white".parse::<NullModelSpec>().unwrap(), NullModelSpec::White);
        assert_eq!(
            "ar1_fixed(0.25)".parse::<NullModelSpec>().unwrap(),
            NullModelSpec::Ar1Fixed { fixed_phi: 0.25 }
        );
        assert!("ar1_fixed(1.5)".parse::<NullModelSpec>().is_err());
        assert!("pink".parse::<NullModelSpec>().is_err());
        let json = serde_json::to_string(&NullModelSpec::Ar1Fixed { fixed_phi: 0.25 }).unwrap();
        assert_eq!(json, r#"{"kind":"ar1_fixed","fixed_phi":0.25}"#);
    }

    #[test]
    fn empirical_needs_params() {
        let e = gen_pseudoproxy(&NullModelSpec::Ar1Empirical, None, 10, RngSeed::new(1, 0)).unwrap_err();
        assert!(matches!(e, Error::MissingAr1Params(_)));
    }

    #[test]
    fn output_is_standardized() {
        for spec in [
            NullModelSpec::White,
            NullModelSpec::Ar1Fixed { fixed_phi: 0.7 },
        ] {
            let x = gen_pseudoproxy(&spec, None, 257, RngSeed::new(3, 9)).unwrap();
            assert!(crate::stats::mean(&x).abs() < 1e-10);
            assert!((crate::stats::sample_sd(&x) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn streams_differ_by_every_key_part() {
        let base = RngSeed::new(5, 2);
        let a: u64 = base.stream(0).gen();
        assert_ne!(a, RngSeed::new(6, 2).stream(0).gen::<u64>());
        assert_ne!(a, RngSeed::new(5, 3).stream(0).gen::<u64>());
        assert_ne!(a, base.stream(1).gen::<u64>());
        assert_eq!(a, base.stream(0).gen::<u64>());
    }

    #[test]
    fn network_keeps_mask_and_is_deterministic() {
        let axis = YearAxis::new(1000, 40).unwrap();
        let mut avail = vec![true; 40];
        avail[0] = false;
        avail[1] = false;
        let series = vec![
            ProxySeries {
                id: "a".into(),
                values: (0..40).map(|i| ((i * 7) % 11) as f64).collect(),
                available: avail,
            },
            ProxySeries::complete("b", (0..40).map(|i| ((i * 5) % 13) as f64).collect()),
        ];
        let net = ProxyNetwork::new(axis, series).unwrap();
        let g1 = gen_pseudo_network(&net, NullModelSpec::Ar1Empirical, RngSeed::new(11, 4)).unwrap();
        let g2 = gen_pseudo_network(&net, NullModelSpec::Ar1Empirical, RngSeed::new(11, 4)).unwrap();
        assert_eq!(g1, g2);
        for (a, b) in g1.series().iter().zip(net.series()) {
            assert_eq!(a.available, b.available);
            assert_eq!(a.id, b.id);
        }
        let g3 = gen_pseudo_network(&net, NullModelSpec::Ar1Empirical, RngSeed::new(11, 5)).unwrap();
        assert_ne!(g1, g3);
    }
}
