//! Year-indexed target and proxy data: loading, validation, duplicate-column
//! removal, standardization and holdout split enumeration.
//!
//! Missing proxy cells are carried by an explicit availability mask. The value
//! stored under a masked cell is meaningless and is never read by the
//! estimators.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A run of consecutive calendar years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct YearAxis {
    start: i32,
    len: usize,
}

impl YearAxis {
    pub fn new(start: i32, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::InvalidData(format!(
                "year axis needs at least 2 years, got {len}"
            )));
        }
        Ok(YearAxis { start, len })
    }

    /// Axis covering `first..=last`.
    pub fn spanning(first: i32, last: i32) -> Result<Self> {
        if last < first {
            return Err(Error::InvalidData(format!("empty year range {first}..={last}")));
        }
        Self::new(first, (last - first) as usize + 1)
    }

    pub fn start(&self) -> i32 {
        self.start
    }

    /// Last year, inclusive.
    pub fn end(&self) -> i32 {
        self.start + self.len as i32 - 1
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, year: i32) -> bool {
        year >= self.start && year <= self.end()
    }

    pub fn index_of(&self, year: i32) -> Option<usize> {
        self.contains(year).then(|| (year - self.start) as usize)
    }

    pub fn year_at(&self, index: usize) -> i32 {
        self.start + index as i32
    }

    pub fn years(&self) -> Vec<i32> {
        (self.start..=self.end()).collect()
    }

    /// Common years of two axes, if there are at least two.
    pub fn intersect(&self, other: &YearAxis) -> Option<YearAxis> {
        let first = self.start.max(other.start);
        let last = self.end().min(other.end());
        YearAxis::spanning(first, last).ok()
    }
}

/// Instrumental target series, complete on its axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSeries {
    axis: YearAxis,
    values: Vec<f64>,
}

impl TargetSeries {
    pub fn new(axis: YearAxis, values: Vec<f64>) -> Result<Self> {
        if values.len() != axis.len() {
            return Err(Error::LengthMismatch(values.len(), axis.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                year: axis.year_at(i),
            });
        }
        Ok(TargetSeries { axis, values })
    }

    pub fn axis(&self) -> YearAxis {
        self.axis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, year: i32) -> Option<f64> {
        self.axis.index_of(year).map(|i| self.values[i])
    }

    pub fn values_for(&self, years: &[i32]) -> Result<Vec<f64>> {
        years
            .iter()
            .map(|&y| self.value(y).ok_or(Error::YearOutOfRange(y)))
            .collect()
    }

    /// Same axis, values transformed element-wise.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        TargetSeries::new(self.axis, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(csv_error)?.clone();
        if headers.len() != 2 || &headers[0] != "year" || &headers[1] != "value" {
            return Err(Error::Parse {
                line: 1,
                message: "expected header `year,value`".into(),
            });
        }
        let mut rows: Vec<(i32, f64, u64)> = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(csv_error)?;
            let line = record.position().map_or(0, |p| p.line());
            let year = parse_year(&record[0], line)?;
            let value = parse_value(&record[1], line)?.ok_or_else(|| Error::Parse {
                line,
                message: "missing target value".into(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFinite { year });
            }
            rows.push((year, value, line));
        }
        rows.sort_by_key(|r| r.0);
        check_consecutive(rows.iter().map(|r| r.0))?;
        let axis = YearAxis::new(rows.first().map_or(0, |r| r.0), rows.len())?;
        TargetSeries::new(axis, rows.into_iter().map(|r| r.1).collect())
    }

    pub fn to_csv_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["year", "value"]).map_err(csv_error)?;
        for (i, v) in self.values.iter().enumerate() {
            wtr.write_record([self.axis.year_at(i).to_string(), v.to_string()])
                .map_err(csv_error)?;
        }
        wtr.flush().map_err(|e| Error::InvalidData(e.to_string()))
    }
}

/// Loads a `year,value` CSV target series.
pub fn load_target(path: impl AsRef<Path>) -> Result<TargetSeries> {
    let path = path.as_ref();
    TargetSeries::from_csv_reader(open(path)?)
}

pub fn write_target(series: &TargetSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    series.to_csv_writer(create(path)?)
}

/// One proxy record with its availability mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxySeries {
    pub id: String,
    pub values: Vec<f64>,
    pub available: Vec<bool>,
}

impl ProxySeries {
    /// Fully available series.
    pub fn complete(id: impl Into<String>, values: Vec<f64>) -> Self {
        let available = vec![true; values.len()];
        ProxySeries {
            id: id.into(),
            values,
            available,
        }
    }

    pub fn available_count(&self) -> usize {
        self.available.iter().filter(|&&a| a).count()
    }
}

/// Year-indexed matrix of proxy series sharing one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyNetwork {
    axis: YearAxis,
    series: Vec<ProxySeries>,
}

impl ProxyNetwork {
    pub fn new(axis: YearAxis, series: Vec<ProxySeries>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &series {
            if s.id.is_empty() || !seen.insert(s.id.as_str()) {
                return Err(Error::BadProxyId(s.id.clone()));
            }
            if s.values.len() != axis.len() {
                return Err(Error::LengthMismatch(s.values.len(), axis.len()));
            }
            if s.available.len() != axis.len() {
                return Err(Error::LengthMismatch(s.available.len(), axis.len()));
            }
            if s.available_count() == 0 {
                return Err(Error::AllMissingColumn(s.id.clone()));
            }
            for (i, (&v, &a)) in s.values.iter().zip(&s.available).enumerate() {
                if a && !v.is_finite() {
                    return Err(Error::NonFinite {
                        year: axis.year_at(i),
                    }
                    .at_column(s.id.clone()));
                }
            }
        }
        Ok(ProxyNetwork { axis, series })
    }

    pub fn axis(&self) -> YearAxis {
        self.axis
    }

    pub fn series(&self) -> &[ProxySeries] {
        &self.series
    }

    pub fn n_columns(&self) -> usize {
        self.series.len()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.series.iter().map(|s| s.id.as_str()).collect()
    }

    /// Value of column `col` in `year`, `None` when masked or outside the axis.
    pub fn get(&self, col: usize, year: i32) -> Option<f64> {
        let i = self.axis.index_of(year)?;
        let s = &self.series[col];
        s.available[i].then(|| s.values[i])
    }

    /// Number of masked cells across the whole matrix.
    pub fn missing_count(&self) -> usize {
        self.series
            .iter()
            .map(|s| s.available.len() - s.available_count())
            .sum()
    }

    /// Indices of columns available in every one of `years`.
    pub fn complete_columns(&self, years: &[i32]) -> Vec<usize> {
        (0..self.series.len())
            .filter(|&c| years.iter().all(|&y| self.get(c, y).is_some()))
            .collect()
    }

    /// Sub-network of the given column indices, in that order.
    pub fn select(&self, columns: &[usize]) -> Result<Self> {
        ProxyNetwork::new(
            self.axis,
            columns.iter().map(|&c| self.series[c].clone()).collect(),
        )
    }

    /// Drops the named columns; unknown ids are ignored.
    pub fn without_ids(&self, ids: &[String]) -> Result<Self> {
        let keep: Vec<usize> = (0..self.series.len())
            .filter(|&c| !ids.iter().any(|id| *id == self.series[c].id))
            .collect();
        self.select(&keep)
    }

    /// Row-major `years.len() x columns.len()` matrix; every cell must be available.
    pub fn matrix(&self, columns: &[usize], years: &[i32]) -> Result<Vec<Vec<f64>>> {
        years
            .iter()
            .map(|&y| {
                if !self.axis.contains(y) {
                    return Err(Error::YearOutOfRange(y));
                }
                columns
                    .iter()
                    .map(|&c| {
                        self.get(c, y).ok_or_else(|| Error::MissingPredictor {
                            id: self.series[c].id.clone(),
                            year: y,
                        })
                    })
                    .collect()
            })
            .collect()
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(csv_error)?.clone();
        if headers.is_empty() || &headers[0] != "year" {
            return Err(Error::Parse {
                line: 1,
                message: "first header column must be `year`".into(),
            });
        }
        let ids: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
        let mut rows: Vec<(i32, Vec<Option<f64>>)> = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(csv_error)?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != headers.len() {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, found {}", headers.len(), record.len()),
                });
            }
            let year = parse_year(&record[0], line)?;
            let mut cells = Vec::with_capacity(ids.len());
            for field in record.iter().skip(1) {
                let cell = parse_value(field, line)?;
                if matches!(cell, Some(v) if !v.is_finite()) {
                    return Err(Error::NonFinite { year });
                }
                cells.push(cell);
            }
            rows.push((year, cells));
        }
        rows.sort_by_key(|r| r.0);
        check_consecutive(rows.iter().map(|r| r.0))?;
        let axis = YearAxis::new(rows.first().map_or(0, |r| r.0), rows.len())?;
        let series = ids
            .into_iter()
            .enumerate()
            .map(|(c, id)| ProxySeries {
                id,
                values: rows.iter().map(|r| r.1[c].unwrap_or(0.0)).collect(),
                available: rows.iter().map(|r| r.1[c].is_some()).collect(),
            })
            .collect();
        ProxyNetwork::new(axis, series)
    }

    pub fn to_csv_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["year".to_owned()];
        header.extend(self.series.iter().map(|s| s.id.clone()));
        wtr.write_record(&header).map_err(csv_error)?;
        for i in 0..self.axis.len() {
            let mut row = vec![self.axis.year_at(i).to_string()];
            row.extend(self.series.iter().map(|s| {
                if s.available[i] {
                    s.values[i].to_string()
                } else {
                    String::new()
                }
            }));
            wtr.write_record(&row).map_err(csv_error)?;
        }
        wtr.flush().map_err(|e| Error::InvalidData(e.to_string()))
    }
}

/// Loads a `year,<id1>,<id2>,...` CSV proxy network. Empty cells are missing.
pub fn load_network(path: impl AsRef<Path>) -> Result<ProxyNetwork> {
    let path = path.as_ref();
    ProxyNetwork::from_csv_reader(open(path)?)
}

pub fn write_network(net: &ProxyNetwork, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    net.to_csv_writer(create(path)?)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

fn parse_year(field: &str, line: u64) -> Result<i32> {
    field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid year `{field}`"),
    })
}

fn parse_value(field: &str, line: u64) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| Error::Parse {
        line,
        message: format!("invalid number `{field}`"),
    })
}

fn check_consecutive(years: impl Iterator<Item = i32>) -> Result<()> {
    let mut prev: Option<i32> = None;
    for y in years {
        if let Some(p) = prev {
            if y == p {
                return Err(Error::DuplicateYear(y));
            }
            if y != p + 1 {
                return Err(Error::YearGap { after: p, next: y });
            }
        }
        prev = Some(y);
    }
    Ok(())
}

/// Tolerance on `1 - |r|` for two columns to count as exact duplicates.
pub const DUPLICATE_TOLERANCE: f64 = 1e-12;

/// Removes columns that are exactly affinely dependent (|r| = 1) on an
/// earlier column over the overlap years. Returns the reduced network and the
/// removed ids in column order.
pub fn dedup_columns(net: &ProxyNetwork, overlap: &YearAxis) -> Result<(ProxyNetwork, Vec<String>)> {
    if net.axis.intersect(overlap) != Some(*overlap) {
        return Err(Error::InvalidData(format!(
            "overlap {}..={} is not inside the network axis",
            overlap.start(),
            overlap.end()
        )));
    }
    let years = overlap.years();
    let mut kept: Vec<usize> = Vec::new();
    let mut removed = Vec::new();
    for c in 0..net.n_columns() {
        let duplicate = kept.iter().any(|&k| {
            paired_correlation(net, k, c, &years)
                .is_some_and(|r| 1.0 - r.abs() <= DUPLICATE_TOLERANCE)
        });
        if duplicate {
            removed.push(net.series[c].id.clone());
        } else {
            kept.push(c);
        }
    }
    Ok((net.select(&kept)?, removed))
}

/// Pearson correlation over years where both columns are available; `None`
/// when fewer than two pairs exist or either side is constant.
fn paired_correlation(net: &ProxyNetwork, a: usize, b: usize, years: &[i32]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = years
        .iter()
        .filter_map(|&y| Some((net.get(a, y)?, net.get(b, y)?)))
        .collect();
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
        sab += (x - ma) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa.sqrt() * sbb.sqrt()))
}

/// Per-column location and scale used to standardize a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub ids: Vec<String>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardization {
    /// Mean and sample sd of each listed column over the calibration years,
    /// using only available cells.
    pub fn fit(net: &ProxyNetwork, columns: &[usize], calib: &[i32]) -> Result<Self> {
        let mut out = Standardization {
            ids: Vec::with_capacity(columns.len()),
            means: Vec::with_capacity(columns.len()),
            sds: Vec::with_capacity(columns.len()),
        };
        for &c in columns {
            let id = &net.series[c].id;
            let vals: Vec<f64> = calib.iter().filter_map(|&y| net.get(c, y)).collect();
            if vals.len() < 2 {
                return Err(Error::TooFewObservations {
                    id: id.clone(),
                    available: vals.len(),
                });
            }
            let m = crate::stats::mean(&vals);
            let sd = crate::stats::sample_sd(&vals);
            if sd == 0.0 || !sd.is_finite() {
                return Err(Error::ZeroVariance { id: id.clone() });
            }
            out.ids.push(id.clone());
            out.means.push(m);
            out.sds.push(sd);
        }
        Ok(out)
    }

    pub fn apply(&self, j: usize, x: f64) -> f64 {
        (x - self.means[j]) / self.sds[j]
    }

    pub fn invert(&self, j: usize, z: f64) -> f64 {
        z * self.sds[j] + self.means[j]
    }

    /// Maps a standardized network (same column order) back to original units.
    pub fn inverse_transform(&self, net: &ProxyNetwork) -> Result<ProxyNetwork> {
        self.map_network(net, |j, v| self.invert(j, v))
    }

    fn map_network(&self, net: &ProxyNetwork, f: impl Fn(usize, f64) -> f64) -> Result<ProxyNetwork> {
        if net.n_columns() != self.means.len() {
            return Err(Error::LengthMismatch(net.n_columns(), self.means.len()));
        }
        let series = net
            .series
            .iter()
            .enumerate()
            .map(|(j, s)| ProxySeries {
                id: s.id.clone(),
                values: s
                    .values
                    .iter()
                    .zip(&s.available)
                    .map(|(&v, &a)| if a { f(j, v) } else { 0.0 })
                    .collect(),
                available: s.available.clone(),
            })
            .collect();
        ProxyNetwork::new(net.axis, series)
    }
}

/// Standardizes every column to mean 0 and sample sd 1 over its available
/// calibration years. The whole axis is transformed with those parameters.
pub fn standardize(net: &ProxyNetwork, calib: &[i32]) -> Result<(ProxyNetwork, Standardization)> {
    let columns: Vec<usize> = (0..net.n_columns()).collect();
    let params = Standardization::fit(net, &columns, calib)?;
    let out = params.map_network(net, |j, v| params.apply(j, v))?;
    Ok((out, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Position {
    Endpoint,
    Interior,
}

impl Position {
    pub fn as_str(self) -> &'static str {
        match self {
            Position::Endpoint => "endpoint",
            Position::Interior => "interior",
        }
    }
}

/// A contiguous holdout window; the calibration set is its complement on the
/// axis it was enumerated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub holdout_start: i32,
    pub holdout_length: usize,
    pub position: Position,
}

impl SplitSpec {
    pub fn holdout_end(&self) -> i32 {
        self.holdout_start + self.holdout_length as i32 - 1
    }

    pub fn holdout_years(&self) -> Vec<i32> {
        (self.holdout_start..=self.holdout_end()).collect()
    }

    pub fn calibration_years(&self, axis: &YearAxis) -> Vec<i32> {
        axis.years()
            .into_iter()
            .filter(|&y| y < self.holdout_start || y > self.holdout_end())
            .collect()
    }
}

/// Every contiguous holdout window of `holdout_length` years on the axis,
/// ordered by start year.
pub fn enumerate_splits(axis: &YearAxis, holdout_length: usize) -> Result<Vec<SplitSpec>> {
    if holdout_length == 0 || holdout_length >= axis.len() {
        return Err(Error::HoldoutTooLong {
            holdout: holdout_length,
            length: axis.len(),
        });
    }
    let count = axis.len() - holdout_length + 1;
    Ok((0..count)
        .map(|i| SplitSpec {
            holdout_start: axis.year_at(i),
            holdout_length,
            position: if i == 0 || i == count - 1 {
                Position::Endpoint
            } else {
                Position::Interior
            },
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn target_from(text: &str) -> Result<TargetSeries> {
        TargetSeries::from_csv_reader(text.as_bytes())
    }

    #[test]
    fn load_three_row_target() {
        let t = target_from("year,value\n1850,0.1\n1851,0.2\n1852,0.3\n").unwrap();
        assert_eq!(t.axis().start(), 1850);
        assert_eq!(t.axis().len(), 3);
        assert_eq!(t.values(), &[0.1, 0.2, 0.3]);
    }

    #[test]
    fn target_rows_are_sorted() {
        let t = target_from("year,value\n1851,0.2\n1850,0.1\n").unwrap();
        assert_eq!(t.values(), &[0.1, 0.2]);
    }

    #[test]
    fn target_duplicate_year() {
        let e = target_from("year,value\n1850,0.1\n1850,0.2\n1851,0.3\n").unwrap_err();
        assert!(matches!(e, Error::DuplicateYear(1850)), "{e}");
    }

    #[test]
    fn target_gap() {
        let e = target_from("year,value\n1850,0.1\n1852,0.2\n").unwrap_err();
        assert!(matches!(e, Error::YearGap { after: 1850, next: 1852 }), "{e}");
    }

    #[test]
    fn target_non_finite_and_malformed() {
        assert!(matches!(
            target_from("year,value\n1850,NaN\n1851,0.2\n").unwrap_err(),
            Error::NonFinite { year: 1850 }
        ));
        assert!(matches!(
            target_from("year,value\n1850,abc\n1851,0.2\n").unwrap_err(),
            Error::Parse { .. }
        ));
        assert!(matches!(
            target_from("year,temp\n1850,0.1\n1851,0.2\n").unwrap_err(),
            Error::Parse { .. }
        ));
    }

    #[test]
    fn network_mask_from_empty_cells() {
        let net = ProxyNetwork::from_csv_reader("year,a,b\n1900,1.0,2.0\n1901,,3.0\n1902,1.5,4.0\n".as_bytes())
            .unwrap();
        assert_eq!(net.n_columns(), 2);
        assert_eq!(net.missing_count(), 1);
        assert_eq!(net.get(0, 1901), None);
        assert_eq!(net.get(1, 1901), Some(3.0));
        assert_eq!(net.ids(), vec!["a", "b"]);
    }

    #[test]
    fn network_all_missing_column() {
        let e = ProxyNetwork::from_csv_reader("year,a,b\n1900,1.0,\n1901,2.0,\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::AllMissingColumn(ref id) if id == "b"), "{e}");
    }

    #[test]
    fn network_duplicate_ids_rejected() {
        let e = ProxyNetwork::from_csv_reader("year,a,a\n1900,1,2\n1901,2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::BadProxyId(_)));
    }

    fn net_from_columns(cols: &[(&str, Vec<f64>)]) -> ProxyNetwork {
        let axis = YearAxis::new(1900, cols[0].1.len()).unwrap();
        ProxyNetwork::new(
            axis,
            cols.iter()
                .map(|(id, v)| ProxySeries::complete(*id, v.clone()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn dedup_affine_dependence() {
        let a = vec![0.3, 1.2, -0.7, 2.2, 0.1];
        let b: Vec<f64> = a.iter().map(|x| 2.0 * x + 1.0).collect();
        let c = vec![1.0, 0.0, 0.5, -1.0, 0.2];
        let net = net_from_columns(&[("a", a), ("b", b), ("c", c)]);
        let (out, removed) = dedup_columns(&net, &net.axis()).unwrap();
        assert_eq!(removed, vec!["b".to_owned()]);
        assert_eq!(out.ids(), vec!["a", "c"]);
    }

    #[test]
    fn dedup_three_identical_keeps_first() {
        let a = vec![0.3, 1.2, -0.7, 2.2, 0.1];
        let net = net_from_columns(&[
            ("tilj1", a.clone()),
            ("x", vec![1.0, 3.0, 0.5, -1.0, 0.2]),
            ("tilj2", a.clone()),
            ("tilj3", a),
        ]);
        let (out, removed) = dedup_columns(&net, &net.axis()).unwrap();
        assert_eq!(removed, vec!["tilj2".to_owned(), "tilj3".to_owned()]);
        assert_eq!(out.ids(), vec!["tilj1", "x"]);
    }

    #[test]
    fn dedup_random_columns_untouched() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let cols: Vec<(String, Vec<f64>)> = (0..8)
            .map(|c| (format!("p{c}"), (0..50).map(|_| rng.gen::<f64>()).collect()))
            .collect();
        let axis = YearAxis::new(1900, 50).unwrap();
        let net = ProxyNetwork::new(
            axis,
            cols.iter()
                .map(|(id, v)| ProxySeries::complete(id.clone(), v.clone()))
                .collect(),
        )
        .unwrap();
        let years = axis.years();
        for a in 0..8 {
            for b in (a + 1)..8 {
                let r = paired_correlation(&net, a, b, &years).unwrap();
                assert!(r.abs() < 1.0 - DUPLICATE_TOLERANCE);
            }
        }
        let (out, removed) = dedup_columns(&net, &axis).unwrap();
        assert!(removed.is_empty());
        assert_eq!(out.n_columns(), 8);
    }

    #[test]
    fn standardize_one_two_three() {
        let net = net_from_columns(&[("a", vec![1.0, 2.0, 3.0])]);
        let (z, params) = standardize(&net, &[1900, 1901, 1902]).unwrap();
        // divisor n - 1: mean 2, sd sqrt(2 / 2) = 1
        assert_eq!(z.series()[0].values, vec![-1.0, 0.0, 1.0]);
        assert_eq!(params.means[0], 2.0);
        assert_eq!(params.sds[0], 1.0);
    }

    #[test]
    fn standardize_constant_column_errors() {
        let net = net_from_columns(&[("a", vec![4.0, 4.0, 4.0])]);
        let e = standardize(&net, &[1900, 1901, 1902]).unwrap_err();
        assert!(matches!(e, Error::ZeroVariance { .. }));
    }

    #[test]
    fn standardize_is_idempotent() {
        let raw = vec![0.2, -1.3, 0.8, 2.5, -0.4, 1.1];
        let net = net_from_columns(&[("a", raw)]);
        let years = net.axis().years();
        let (z1, _) = standardize(&net, &years).unwrap();
        let (z2, _) = standardize(&z1, &years).unwrap();
        for (a, b) in z1.series()[0].values.iter().zip(&z2.series()[0].values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn splits_count_and_positions() {
        let axis = YearAxis::new(1850, 149).unwrap();
        let splits = enumerate_splits(&axis, 30).unwrap();
        assert_eq!(splits.len(), 120);
        assert_eq!(
            splits.iter().filter(|s| s.position == Position::Endpoint).count(),
            2
        );
        assert_eq!(splits[0].holdout_start, 1850);
        assert_eq!(splits[119].holdout_end(), 1998);

        let short = YearAxis::new(1850, 31).unwrap();
        let s = enumerate_splits(&short, 30).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|s| s.position == Position::Endpoint));

        let exact = YearAxis::new(1850, 30).unwrap();
        assert!(matches!(
            enumerate_splits(&exact, 30),
            Err(Error::HoldoutTooLong { .. })
        ));
    }

    #[test]
    fn calibration_complements_holdout() {
        let axis = YearAxis::new(2000, 10).unwrap();
        let s = enumerate_splits(&axis, 3).unwrap()[2];
        assert_eq!(s.holdout_years(), vec![2002, 2003, 2004]);
        assert_eq!(s.calibration_years(&axis), vec![2000, 2001, 2005, 2006, 2007, 2008, 2009]);
    }
}
