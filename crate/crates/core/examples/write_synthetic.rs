//! Writes an instrumental-era-like synthetic target and proxy network as
//! CSV, ready for the command-line driver.
//!
//!     cargo run --example write_synthetic -- OUT_DIR [SEED]

use std::path::PathBuf;

use proxyskill::data::{write_network, write_target};
use proxyskill::synthetic::{mw_like, MwLikeConfig};

fn main() -> proxyskill::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "synthetic".into()));
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    std::fs::create_dir_all(&dir).map_err(|source| proxyskill::Error::Io { path: dir.clone(), source })?;

    let s = mw_like(&MwLikeConfig::default(), seed)?;
    write_target(&s.target, dir.join("target.csv"))?;
    write_network(&s.network, dir.join("proxies.csv"))?;
    println!(
        "target {}..{}, {} proxies over {}..{} -> {}",
        s.target.axis().start(),
        s.target.axis().end(),
        s.network.n_columns(),
        s.network.axis().start(),
        s.network.axis().end(),
        dir.display()
    );
    Ok(())
}
