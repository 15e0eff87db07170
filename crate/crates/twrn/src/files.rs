//! Result files: CSV tables and JSON documents.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use twrn_core::allocator::DualTrace;
use twrn_core::engine::{mean_and_stderr, EpisodeMetrics, SweepRow};
use twrn_core::fading::LinkGainTable;

use crate::error::CliError;
use crate::format::sig9;

/// Version tag written into every manifest.
pub const SCHEMA_VERSION: &str = "twrn-run/1";

fn writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    let file = fs::File::create(path).map_err(CliError::io(path))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn write_table<I, R>(path: &Path, header: &[String], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(CliError::csv(path))?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(CliError::csv(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// `slot,relay,g_sr,g_rd`, 0-based indices, one row per (slot, relay).
pub fn write_gains(path: &Path, table: &LinkGainTable) -> Result<(), CliError> {
    let rows = (0..table.slots()).flat_map(|n| {
        (0..table.relays()).map(move |k| {
            let g = table.gain(n, k);
            vec![n.to_string(), k.to_string(), g.sr.to_string(), g.rd.to_string()]
        })
    });
    // gains keep full precision so that an imported table reproduces a run
    write_table(path, &header(&["slot", "relay", "g_sr", "g_rd"]), rows)
}

pub fn read_gains(path: &Path) -> Result<LinkGainTable, CliError> {
    let bad = |message: String| CliError::Format { path: path.to_path_buf(), message };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(CliError::csv(path))?;
    let head = reader.headers().map_err(CliError::csv(path))?.clone();
    if head.iter().collect::<Vec<_>>() != ["slot", "relay", "g_sr", "g_rd"] {
        return Err(bad("header must be slot,relay,g_sr,g_rd".into()));
    }
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(CliError::csv(path))?;
        let line = i + 2;
        let field = |j: usize| record.get(j).unwrap_or("");
        let index = |j: usize| field(j).parse::<usize>().map_err(|_| bad(format!("line {line}: bad index `{}`", field(j))));
        let gain = |j: usize| field(j).parse::<f64>().map_err(|_| bad(format!("line {line}: bad gain `{}`", field(j))));
        entries.push((index(0)?, index(1)?, gain(2)?, gain(3)?));
    }
    let slots = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
    let relays = entries.iter().map(|e| e.1 + 1).max().unwrap_or(0);
    if entries.len() != slots * relays {
        return Err(bad(format!("expected {} rows for {slots} slots x {relays} relays, found {}", slots * relays, entries.len())));
    }
    let mut sr = vec![f64::NAN; slots * relays];
    let mut rd = vec![f64::NAN; slots * relays];
    for (n, k, g_sr, g_rd) in entries {
        let at = n * relays + k;
        if !sr[at].is_nan() {
            return Err(bad(format!("duplicate entry for slot {n}, relay {k}")));
        }
        sr[at] = g_sr;
        rd[at] = g_rd;
    }
    LinkGainTable::from_parts(0, slots, relays, sr, rd).map_err(|e| bad(e.to_string()))
}

/// One row per slot; relay is 1-based and the state columns are the
/// selected relay's levels after the slot.
pub fn write_trajectory(path: &Path, m: &EpisodeMetrics) -> Result<(), CliError> {
    let head = header(&[
        "slot", "relay", "alpha", "p_s", "p_d", "p_r", "arr_ab", "arr_ba", "del_ab", "del_ba", "Q_a", "Q_b", "E",
    ]);
    let rows = m.slots.iter().map(|r| {
        let o = &r.outcome;
        let mut row = vec![(r.slot + 1).to_string(), (o.relay + 1).to_string()];
        row.extend(
            [
                o.alpha,
                o.powers.p_s,
                o.powers.p_d,
                o.powers.p_r,
                o.admitted.r_ab,
                o.admitted.r_ba,
                o.departed.r_ab,
                o.departed.r_ba,
                o.after.buf_a.level(),
                o.after.buf_b.level(),
                o.after.battery.level(),
            ]
            .map(sig9),
        );
        row
    });
    write_table(path, &head, rows)
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let head = header(&["param", "value", "mean_throughput", "stderr", "episodes"]);
    let body = rows.iter().map(|r| {
        vec![r.param.name().to_string(), sig9(r.value), sig9(r.mean), sig9(r.stderr), r.episodes.to_string()]
    });
    write_table(path, &head, body)
}

/// `iter,objective,delta,<multipliers...>,status`; the last row carries the
/// final status, earlier rows are `running`.
pub fn write_trace(path: &Path, trace: &DualTrace) -> Result<(), CliError> {
    let mut head = header(&["iter", "objective", "delta"]);
    head.extend(trace.multiplier_names.iter().cloned());
    head.push("status".into());
    let last = trace.rows.len();
    let body = trace.rows.iter().enumerate().map(|(i, r)| {
        let mut row = vec![r.iter.to_string(), sig9(r.objective), sig9(r.change)];
        row.extend(r.multipliers.iter().map(|&x| sig9(x)));
        let status = match (i + 1 == last, trace.converged) {
            (false, _) => "running",
            (true, true) => "converged",
            (true, false) => "not_converged",
        };
        row.push(status.into());
        row
    });
    write_table(path, &head, body)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub instance: usize,
    pub seed: u64,
    pub relay: usize,
    pub solver: f64,
    pub oracle: f64,
    /// `(solver - oracle) / oracle`, zero when both are zero.
    pub gap: f64,
}

pub fn write_oracle_report(path: &Path, rows: &[OracleRow], tolerance: f64) -> Result<(), CliError> {
    let head = header(&["instance", "seed", "relay", "solver_objective", "oracle_objective", "relative_gap", "status"]);
    let body = rows.iter().map(|r| {
        vec![
            r.instance.to_string(),
            r.seed.to_string(),
            (r.relay + 1).to_string(),
            sig9(r.solver),
            sig9(r.oracle),
            sig9(r.gap),
            if r.gap >= -tolerance { "pass" } else { "fail" }.to_string(),
        ]
    });
    write_table(path, &head, body)
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))
}

/// Per-episode totals plus the across-episode mean and standard error.
pub fn metrics_json(episodes: &[EpisodeMetrics]) -> Value {
    let totals: Vec<f64> = episodes.iter().map(|m| m.sum_throughput).collect();
    let (mean, stderr) = if totals.is_empty() { (0.0, 0.0) } else { mean_and_stderr(&totals) };
    let per_episode: Vec<Value> = episodes
        .iter()
        .map(|m| {
            json!({
                "seed": m.seed,
                "sum_throughput": m.sum_throughput,
                "delivered_ab": m.delivered.r_ab,
                "delivered_ba": m.delivered.r_ba,
                "offered_bits": m.offered.sum(),
                "admitted_bits": m.admitted.sum(),
                "dropped_bits": m.dropped_bits,
                "harvested_joules": m.harvested,
                "stored_joules": m.stored,
                "spilled_joules": m.spilled_joules,
                "drawn_joules": m.drawn,
                "clamp_events": m.clamp_events,
                "selected_relays": m.slots.iter().map(|s| s.outcome.relay + 1).collect::<Vec<_>>(),
                "solver_iterations": m.solver_iterations().collect::<Vec<_>>(),
                "all_converged": m.all_converged,
            })
        })
        .collect();
    json!({
        "episodes": episodes.len(),
        "mean_sum_throughput": mean,
        "stderr_sum_throughput": stderr,
        "all_converged": episodes.iter().all(|m| m.all_converged),
        "per_episode": per_episode,
    })
}

/// Everything needed to rerun a command: the resolved config, the command
/// and its own arguments.
pub fn manifest_json(command: &str, config: Value, seed: u64, arguments: Value, outputs: &[&str]) -> Value {
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": seed,
        "timestamp_unix": timestamp,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "arguments": arguments,
        "outputs": outputs,
    })
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    Ok(dir.to_path_buf())
}
