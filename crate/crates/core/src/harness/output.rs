use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::experiment::{CellResult, EpisodeMetrics};
use super::metrics::mean_std;

pub const EPISODES_FILE: &str = "episodes.csv";
pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryGroup {
    pub scenario: String,
    pub scenario_hash: String,
    pub controller: String,
    pub noise_kind: String,
    pub noise_scale: f64,
    pub seeds: usize,
    pub att_mean: f64,
    pub att_std: f64,
    pub throughput_mean: f64,
    pub stops_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub groups: Vec<SummaryGroup>,
}

/// Groups cells by (scenario, controller, noise) in first-seen order; the
/// spread is over per-seed means.
pub fn summarise(cells: &[CellResult]) -> Summary {
    let mut groups: Vec<(Vec<&CellResult>, SummaryGroup)> = Vec::new();
    for c in cells {
        let same = |g: &SummaryGroup| {
            g.scenario_hash == c.scenario_hash
                && g.controller == c.controller
                && g.noise_kind == c.noise_kind
                && g.noise_scale.to_bits() == c.noise_scale.to_bits()
        };
        match groups.iter_mut().find(|(_, g)| same(g)) {
            Some((members, _)) => members.push(c),
            None => groups.push((
                vec![c],
                SummaryGroup {
                    scenario: c.scenario.clone(),
                    scenario_hash: c.scenario_hash.clone(),
                    controller: c.controller.clone(),
                    noise_kind: c.noise_kind.clone(),
                    noise_scale: c.noise_scale,
                    seeds: 0,
                    att_mean: 0.0,
                    att_std: 0.0,
                    throughput_mean: 0.0,
                    stops_mean: 0.0,
                },
            )),
        }
    }
    Summary {
        groups: groups
            .into_iter()
            .map(|(members, mut g)| {
                let atts: Vec<f64> = members.iter().map(|c| c.att_mean).collect();
                let (m, s) = mean_std(&atts).expect("groups are non-empty");
                let n = members.len() as f64;
                g.seeds = members.len();
                g.att_mean = m;
                g.att_std = s;
                g.throughput_mean = members.iter().map(|c| c.throughput_mean).sum::<f64>() / n;
                g.stops_mean = members.iter().map(|c| c.stops_mean).sum::<f64>() / n;
                g
            })
            .collect(),
    }
}

fn header_of<T: Serialize + Default>() -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.serialize(T::default())?;
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    let text = String::from_utf8(bytes).expect("csv writes utf-8");
    Ok(text.lines().next().unwrap_or_default().to_string())
}

/// Appends `rows` to a CSV file, writing the header only for a new file and
/// refusing to mix layouts.
pub fn append_csv<T: Serialize + Default>(path: &Path, rows: &[T]) -> Result<()> {
    let expected = header_of::<T>()?;
    let exists = path.exists();
    if exists {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut first = String::new();
        BufReader::new(f).read_line(&mut first).map_err(|e| Error::io(path, e))?;
        if !first.is_empty() && first.trim_end() != expected {
            return Err(Error::InvalidInput(format!(
                "{} has a different column layout; refusing to append",
                path.display()
            )));
        }
    }
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(!exists).from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<CellResult>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Writes (or extends) `episodes.csv` and `results.csv` under `dir`, then
/// rewrites `summary.json` from the full results file.
pub fn emit_results(dir: &Path, cells: &[CellResult], episodes: &[EpisodeMetrics]) -> Result<Summary> {
    if cells.is_empty() {
        return Err(Error::InvalidInput("no results to write".into()));
    }
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        ));
    }
    append_csv(&dir.join(EPISODES_FILE), episodes)?;
    let results = dir.join(RESULTS_FILE);
    append_csv(&results, cells)?;
    let summary = summarise(&read_results(&results)?);
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
