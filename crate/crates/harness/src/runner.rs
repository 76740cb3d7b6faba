//! Experiment orchestration over a bounded worker pool.
//!
//! Every (network, sampler) task evaluates all requested predictors and
//! hands its rows to a single writer thread, which appends them to a
//! partial shard next to the output. When every task is done the shard is
//! sorted into the final results file and removed. A run interrupted midway
//! leaves a schema-valid shard that `resume` picks up, skipping every cell
//! that is already complete.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::Arc;

use missbench_core::evalpipe::{
    read_records, run_sampler_cells, sort_records, write_records, write_row, AucRecord, CellResult, Network,
    RESULT_COLUMNS,
};
use missbench_core::graph::load_edge_list;
use missbench_core::predictors::PredictorKind;
use missbench_core::SamplerKind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::manifest::ManifestEntry;
use crate::HarnessError;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellFailure {
    pub network: String,
    pub sampler: String,
    pub predictor: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedNetwork {
    pub name: String,
    pub reason: String,
}

/// Contents of the `<results>.meta.json` sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub toolkit: String,
    pub config_sha256: String,
    pub seed: u64,
    pub networks: usize,
    pub rows: usize,
    pub cells: usize,
    pub failed_cells: usize,
    pub skipped_networks: Vec<SkippedNetwork>,
    pub failures: Vec<CellFailure>,
}

impl RunMetadata {
    pub fn has_failures(&self) -> bool {
        self.failed_cells > 0 || !self.skipped_networks.is_empty()
    }
}

pub fn partial_path(out: &Path) -> PathBuf {
    suffixed(out, ".partial")
}

pub fn meta_path(out: &Path) -> PathBuf {
    suffixed(out, ".meta.json")
}

fn partial_fingerprint_path(out: &Path) -> PathBuf {
    suffixed(out, ".partial.sha256")
}

fn suffixed(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Data(format!("{}: {e}", path.display()))
}

type CellId = (String, String, String);

fn cell_id(r: &AucRecord) -> CellId {
    (r.network.clone(), r.sampler.clone(), r.predictor.clone())
}

/// Rows of the partial shard grouped by cell, keeping only complete cells.
fn completed_cells(records: Vec<AucRecord>, expected_rows: usize) -> BTreeMap<CellId, Vec<AucRecord>> {
    let mut cells: BTreeMap<CellId, Vec<AucRecord>> = BTreeMap::new();
    for r in records {
        cells.entry(cell_id(&r)).or_default().push(r);
    }
    cells.retain(|_, rows| {
        let distinct: BTreeSet<(usize, usize)> = rows.iter().map(|r| (r.repeat, r.fold)).collect();
        rows.len() == expected_rows && distinct.len() == expected_rows
    });
    cells
}

struct Task {
    network: usize,
    sampler: SamplerKind,
    predictors: Vec<PredictorKind>,
}

/// Runs every (network x sampler x predictor) cell and writes the sorted
/// results CSV plus its metadata sidecar.
pub fn run(config: &RunConfig, manifest: &[ManifestEntry], out: &Path, resume: bool) -> Result<RunMetadata, HarnessError> {
    config.validate()?;
    let workers = config.resolved_workers()?;
    let fingerprint = config.fingerprint();
    let expected_rows = config.protocol.repeats * config.protocol.folds;

    let mut networks = Vec::new();
    let mut skipped = Vec::new();
    for entry in manifest {
        match load_edge_list(&entry.path) {
            Ok(g) => networks.push(Network {
                name: entry.name.clone(),
                domain: entry.domain.clone(),
                graph: Arc::new(g),
            }),
            Err(e) => {
                eprintln!("skipping network {}: {e}", entry.name);
                skipped.push(SkippedNetwork {
                    name: entry.name.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }

    let partial = partial_path(out);
    let stamp = partial_fingerprint_path(out);
    let mut done: BTreeMap<CellId, Vec<AucRecord>> = BTreeMap::new();
    if resume && partial.exists() {
        let previous = std::fs::read_to_string(&stamp).unwrap_or_default();
        if previous.trim() != fingerprint {
            return Err(HarnessError::Config(format!(
                "{} was written with a different configuration; remove it or rerun without resume",
                partial.display()
            )));
        }
        let mut text = std::fs::read_to_string(&partial).map_err(|e| io_err(&partial, e))?;
        // a row cut short by the interruption is dropped
        if !text.ends_with('\n') {
            text.truncate(text.rfind('\n').map_or(0, |i| i + 1));
        }
        let rows = read_records(text.as_bytes(), true).map_err(|e| io_err(&partial, e))?;
        done = completed_cells(rows, expected_rows);
        eprintln!("resuming: {} complete cells found in {}", done.len(), partial.display());
    }

    // restart the shard from the complete cells only
    std::fs::write(&stamp, &fingerprint).map_err(|e| io_err(&stamp, e))?;
    let file = File::create(&partial).map_err(|e| io_err(&partial, e))?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
    writer.write_record(RESULT_COLUMNS).map_err(|e| io_err(&partial, e))?;
    for rows in done.values() {
        for r in rows {
            write_row(&mut writer, r).map_err(|e| io_err(&partial, e))?;
        }
    }
    writer.flush().map_err(|e| io_err(&partial, e))?;

    let mut tasks = Vec::new();
    for (ni, net) in networks.iter().enumerate() {
        for &sampler in &config.samplers {
            let predictors: Vec<PredictorKind> = config
                .predictors
                .iter()
                .copied()
                .filter(|p| !done.contains_key(&(net.name.clone(), sampler.name().to_string(), p.name().to_string())))
                .collect();
            if !predictors.is_empty() {
                tasks.push(Task {
                    network: ni,
                    sampler,
                    predictors,
                });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
    let (tx, rx) = mpsc::channel::<Vec<CellResult>>();
    let mut failures: Vec<CellFailure> = Vec::new();
    let write_result = std::thread::scope(|scope| {
        let sink = scope.spawn(move || -> Result<Vec<CellFailure>, HarnessError> {
            let mut failures = Vec::new();
            for cells in rx {
                for cell in cells {
                    for r in &cell.records {
                        write_row(&mut writer, r).map_err(|e| io_err(&partial, e))?;
                    }
                    if let (Some(reason), Some(first)) = (cell.failure, cell.records.first()) {
                        failures.push(CellFailure {
                            network: first.network.clone(),
                            sampler: first.sampler.clone(),
                            predictor: first.predictor.clone(),
                            reason,
                        });
                    }
                }
                writer.flush().map_err(|e| io_err(&partial, e))?;
            }
            Ok(failures)
        });
        pool.install(|| {
            tasks.par_iter().for_each_with(tx, |tx, task| {
                let net = &networks[task.network];
                let cells = run_sampler_cells(
                    net,
                    &config.spec(task.sampler),
                    &task.predictors,
                    &config.protocol,
                    &config.predictor_config,
                    config.seed,
                );
                // send fails only after a writer error, reported below
                let _ = tx.send(cells);
            });
        });
        sink.join().expect("writer thread panicked")
    });
    failures.extend(write_result?);

    let partial = partial_path(out);
    let file = File::open(&partial).map_err(|e| io_err(&partial, e))?;
    let mut records = read_records(file, true).map_err(|e| io_err(&partial, e))?;
    sort_records(&mut records);

    let mut failed_cells = BTreeSet::new();
    for r in records.iter().filter(|r| !r.is_ok()) {
        failed_cells.insert(cell_id(r));
    }
    let reported: BTreeSet<CellId> = failures
        .iter()
        .map(|f| (f.network.clone(), f.sampler.clone(), f.predictor.clone()))
        .collect();
    for (network, sampler, predictor) in failed_cells.iter().filter(|c| !reported.contains(*c)) {
        failures.push(CellFailure {
            network: network.clone(),
            sampler: sampler.clone(),
            predictor: predictor.clone(),
            reason: "failed in an earlier, interrupted run".into(),
        });
    }
    failures.sort();
    let cells: BTreeSet<CellId> = records.iter().map(cell_id).collect();

    let tmp = suffixed(out, ".tmp");
    {
        let file = File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
        let mut w = BufWriter::new(file);
        write_records(&mut w, &records).map_err(|e| io_err(&tmp, e))?;
        w.flush().map_err(|e| io_err(&tmp, e))?;
    }
    std::fs::rename(&tmp, out).map_err(|e| io_err(out, e))?;

    let meta = RunMetadata {
        toolkit: format!("missbench {}", env!("CARGO_PKG_VERSION")),
        config_sha256: fingerprint,
        seed: config.seed,
        networks: networks.len(),
        rows: records.len(),
        cells: cells.len(),
        failed_cells: failed_cells.len(),
        skipped_networks: skipped,
        failures,
    };
    let meta_file = meta_path(out);
    let mut f = OpenOptions::new()
        .write(true)
        .create(true)
        .truncate(true)
        .open(&meta_file)
        .map_err(|e| io_err(&meta_file, e))?;
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    writeln!(f, "{json}").map_err(|e| io_err(&meta_file, e))?;
    std::fs::remove_file(&partial).map_err(|e| io_err(&partial, e))?;
    std::fs::remove_file(&stamp).map_err(|e| io_err(&stamp, e))?;
    Ok(meta)
}
