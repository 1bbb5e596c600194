//! Writes the bundled synthetic fixture CSVs.
//!
//! Usage: cargo run -p mfv-core --example gen_fixtures [-- OUT_DIR]

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use mfv_core::synthetic::{SyntheticStudy, DEFAULT_SEED};

fn main() -> mfv_core::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"));
    std::fs::create_dir_all(&out).map_err(|e| mfv_core::Error::Io {
        path: out.clone(),
        source: e,
    })?;
    let study = SyntheticStudy::generate(DEFAULT_SEED)?;
    for (name, forecasts) in [("forecasts.csv", true), ("truth.csv", false)] {
        let path = out.join(name);
        let file = File::create(&path).map_err(|e| mfv_core::Error::Io {
            path: path.clone(),
            source: e,
        })?;
        let w = BufWriter::new(file);
        if forecasts {
            study.write_forecast_csv(w)?;
        } else {
            study.write_truth_csv(w)?;
        }
        println!("wrote {}", path.display());
    }
    Ok(())
}
