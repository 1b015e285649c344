//! CSV writers for embeddings and sonograms.

use std::io::Write;

use super::mapping::Mapping;
use crate::analysis::fmt_f64;
use crate::error::{Error, Result};
use crate::features::Sonogram;

fn finish<W: Write>(mut w: csv::Writer<W>, what: &str) -> Result<()> {
    w.flush().map_err(|e| Error::Run(format!("writing {what} CSV: {e}")))
}

/// Header `event_id[,view],lambda_1..lambda_d`, then a `#eigenvalues`
/// metadata row, then one row per event (per event and view for multiview,
/// view-major).
pub fn write_embedding_csv<W: Write>(out: W, m: &Mapping) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let blocks: Vec<(Option<String>, &nalgebra::DMatrix<f64>)> = match &m.per_view {
        Some(views) => views.iter().map(|(c, b)| (Some(c.to_string()), b)).collect(),
        None => vec![(None, &m.coords)],
    };
    let multi = m.per_view.is_some();
    let d = blocks[0].1.ncols();

    let mut header = vec!["event_id".to_string()];
    if multi {
        header.push("view".into());
    }
    header.extend((1..=d).map(|j| format!("lambda_{j}")));
    w.write_record(&header)?;

    let mut meta = vec!["#eigenvalues".to_string()];
    if multi {
        meta.push(String::new());
    }
    meta.extend(m.eigenvalues.iter().take(d).map(|&v| fmt_f64(v)));
    w.write_record(&meta)?;

    for (view, block) in &blocks {
        for (i, id) in m.event_ids.iter().enumerate() {
            let mut row = vec![id.clone()];
            if let Some(v) = view {
                row.push(v.clone());
            }
            row.extend(block.row(i).iter().map(|&v| fmt_f64(v)));
            w.write_record(&row)?;
        }
    }
    finish(w, "embedding")
}

/// One row per band (numbered from 1), one column per time bin.
pub fn write_sonogram_csv<W: Write>(out: W, s: &Sonogram) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let t = s.num_time_bins();
    let mut header = vec!["band".to_string()];
    header.extend((1..=t).map(|j| format!("t_{j}")));
    w.write_record(&header)?;
    for (b, row) in s.values.row_iter().enumerate() {
        let mut rec = vec![(b + 1).to_string()];
        rec.extend(row.iter().map(|&v| fmt_f64(v)));
        w.write_record(&rec)?;
    }
    finish(w, "sonogram")
}
