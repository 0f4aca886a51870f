//! Trace and reset-log CSV files.
//!
//! The trace has one row per slot with columns `slot`, `lambda.<u>-<v>` per
//! channel, `flow.<i>-<j>.<k>` per path (`k` counts from 1 within the pair),
//! `q.<i>-<j>` per pair, `net.<u>-<v>` per channel, `resets` (channel names
//! joined by `;`) and `dual_value`. Reals are written with 17 significant
//! digits so they read back bit-exact.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use debt_core::network::{ChannelId, Model};
use debt_core::sim::SimTrace;

use crate::error::{CliError, Result};

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn pair_name(model: &Model, k: usize) -> String {
    let p = &model.demand().pairs()[k];
    let t = model.topology();
    format!("{}-{}", t.node_name(p.source), t.node_name(p.destination))
}

/// `i-j.k` for every path in global order.
pub fn path_names(model: &Model) -> Vec<String> {
    (0..model.num_pairs())
        .flat_map(|k| {
            let pair = pair_name(model, k);
            (1..=model.paths().range(k).len()).map(move |i| format!("{pair}.{i}"))
        })
        .collect()
}

pub fn channel_names(model: &Model) -> Vec<String> {
    (0..model.num_channels())
        .map(|e| model.topology().channel_name(ChannelId(e)))
        .collect()
}

pub fn trace_header(model: &Model) -> Vec<String> {
    let channels = channel_names(model);
    let mut h = vec!["slot".to_string()];
    h.extend(channels.iter().map(|c| format!("lambda.{c}")));
    h.extend(path_names(model).iter().map(|p| format!("flow.{p}")));
    h.extend((0..model.num_pairs()).map(|k| format!("q.{}", pair_name(model, k))));
    h.extend(channels.iter().map(|c| format!("net.{c}")));
    h.push("resets".into());
    h.push("dual_value".into());
    h
}

pub fn write_trace<W: Write>(out: W, model: &Model, trace: &SimTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace_header(model))?;
    let channels = channel_names(model);
    for r in &trace.records {
        let mut row = vec![r.slot.to_string()];
        row.extend(r.prices.iter().map(|x| real(*x)));
        row.extend(r.flows.iter().map(|x| real(*x)));
        row.extend(r.totals.iter().map(|x| real(*x)));
        row.extend(r.net_flow.iter().map(|x| real(*x)));
        let resets: Vec<&str> = r.resets.iter().map(|e| channels[e.channel.0].as_str()).collect();
        row.push(resets.join(";"));
        row.push(real(r.dual_value));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io("trace", e))?;
    Ok(())
}

pub fn write_resets<W: Write>(out: W, model: &Model, trace: &SimTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "channel", "pre_balance"])?;
    for e in trace.resets() {
        w.write_record([
            e.slot.to_string(),
            model.topology().channel_name(e.channel),
            real(e.pre_balance),
        ])?;
    }
    w.flush().map_err(|e| CliError::io("resets", e))?;
    Ok(())
}

/// Writes `<name>.trace.csv` and `<name>.resets.csv` under `dir`.
pub fn write_run(dir: &Path, name: &str, model: &Model, trace: &SimTrace) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let trace_path = dir.join(format!("{name}.trace.csv"));
    let resets_path = dir.join(format!("{name}.resets.csv"));
    let open = |p: &Path| -> Result<BufWriter<File>> {
        File::create(p).map(BufWriter::new).map_err(|e| CliError::io(p, e))
    };
    write_trace(open(&trace_path)?, model, trace).map_err(|e| relabel(e, &trace_path))?;
    write_resets(open(&resets_path)?, model, trace).map_err(|e| relabel(e, &resets_path))?;
    Ok((trace_path, resets_path))
}

fn relabel(e: CliError, path: &Path) -> CliError {
    match e {
        CliError::Io { source, .. } => CliError::io(path, source),
        CliError::Csv(c) => CliError::io(path, c.into()),
        other => other,
    }
}
