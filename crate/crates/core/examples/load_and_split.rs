//! Parse a proxy network and target, drop exact duplicate columns, then
//! enumerate every 30-year holdout window over the overlap.

use proxyskill::data::{dedup_columns, enumerate_splits, standardize, Position, ProxyNetwork, TargetSeries};

const PROXIES: &str = "\
year,a,b,c,d
1900,0.1,1.2,,0.5
1901,0.4,1.8,0.2,0.1
1902,-0.3,0.4,0.9,0.7
1903,0.8,2.6,0.1,-0.2
1904,0.2,1.4,0.6,0.3
";

fn main() -> proxyskill::Result<()> {
    let net = ProxyNetwork::from_csv_reader(PROXIES.as_bytes())?;
    println!("{} columns, {} missing cells", net.n_columns(), net.missing_count());

    // b = 2a + 1 exactly, so it goes
    let (net, removed) = dedup_columns(&net, &net.axis())?;
    println!("removed duplicates: {removed:?}");

    let years: Vec<i32> = net.axis().years();
    let complete = net.select(&net.complete_columns(&years))?;
    let (z, params) = standardize(&complete, &years)?;
    println!("standardized {:?}: means {:?}", z.ids(), params.means);

    let target_csv: String = std::iter::once("year,value".to_string())
        .chain((1850..1999).map(|y| format!("{y},{:.3}", 0.005 * f64::from(y - 1850))))
        .collect::<Vec<_>>()
        .join("\n");
    let target = TargetSeries::from_csv_reader(target_csv.as_bytes())?;
    let splits = enumerate_splits(&target.axis(), 30)?;
    let endpoints = splits.iter().filter(|s| s.position == Position::Endpoint).count();
    println!("{} windows of 30 years, {endpoints} at the endpoints", splits.len());
    let first = &splits[0];
    println!(
        "first window {}..{}, calibration {} years",
        first.holdout_start,
        first.holdout_end(),
        first.calibration_years(&target.axis()).len()
    );
    Ok(())
}
