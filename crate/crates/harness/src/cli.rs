//! Command-line interface.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use missbench_core::analysis::{self, AggregateTable, Pca};
use missbench_core::evalpipe::{read_records, AucRecord};
use missbench_core::graph::{load_edge_list, Graph};
use missbench_core::missingness::{Category, SampleOutcome};
use missbench_core::predictors::PredictorKind;
use missbench_core::{draw_sample, SamplerKind, SamplerSpec};

use crate::config::{Overrides, RunConfig};
use crate::manifest::load_manifest;
use crate::runner;
use crate::HarnessError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "missbench", version, about = "Link prediction benchmarks under structured edge missingness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate every network x sampler x predictor cell of a manifest.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        retention: Option<f64>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        folds: Option<usize>,
        /// Comma-separated sampler names.
        #[arg(long, value_delimiter = ',')]
        samplers: Option<Vec<SamplerKind>>,
        /// Comma-separated predictor names.
        #[arg(long, value_delimiter = ',')]
        predictors: Option<Vec<PredictorKind>>,
        /// Continue from the partial shard of an interrupted run.
        #[arg(long)]
        resume: bool,
    },
    /// Draw one sample and write its retained edges.
    Sample {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        sampler: SamplerKind,
        #[arg(long, default_value_t = 0.8)]
        retention: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Sampler parameters are read from this run configuration.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write one mean-AUC table per domain.
    Aggregate {
        #[arg(long)]
        results: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Also write per-cell support counts into this directory.
        #[arg(long)]
        support_dir: Option<PathBuf>,
    },
    /// Principal component scores of AUC feature vectors.
    Pca {
        #[arg(long)]
        results: Vec<PathBuf>,
        #[arg(long, value_enum)]
        mode: PcaMode,
        /// Required with `--mode samplers`.
        #[arg(long)]
        domain: Option<String>,
        /// Restricts `--mode samplers` to one predictor panel.
        #[arg(long)]
        predictor: Option<PredictorKind>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print sampler names and categories.
    ListSamplers,
    /// Print predictor names and families.
    ListPredictors,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PcaMode {
    Networks,
    Samplers,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<i32, HarnessError> {
    match command {
        Command::Run {
            manifest,
            config,
            out,
            seed,
            workers,
            retention,
            repeats,
            folds,
            samplers,
            predictors,
            resume,
        } => {
            let mut cfg = match config {
                Some(p) => RunConfig::load(&p)?,
                None => RunConfig::default(),
            };
            cfg.apply(&Overrides {
                seed,
                workers,
                retention,
                repeats,
                folds,
                samplers,
                predictors,
            });
            cfg.validate()?;
            let entries = load_manifest(&manifest)?;
            let meta = runner::run(&cfg, &entries, &out, resume)?;
            eprintln!(
                "{} rows, {} cells ({} failed), {} networks skipped -> {}",
                meta.rows,
                meta.cells,
                meta.failed_cells,
                meta.skipped_networks.len(),
                out.display()
            );
            for f in &meta.failures {
                eprintln!("failed {}/{}/{}: {}", f.network, f.sampler, f.predictor, f.reason);
            }
            Ok(if meta.has_failures() { EXIT_PARTIAL } else { EXIT_OK })
        }
        Command::Sample {
            graph,
            sampler,
            retention,
            seed,
            out,
            config,
        } => {
            let params = match config {
                Some(p) => RunConfig::load(&p)?.sampler_params,
                None => Default::default(),
            };
            if !(retention > 0.0 && retention <= 1.0) {
                return Err(HarnessError::Config(format!("retention {retention} outside (0, 1]")));
            }
            let g = load_edge_list(&graph).map_err(|e| HarnessError::Data(e.to_string()))?;
            let spec = SamplerSpec::with_params(sampler, params);
            spec.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
            let outcome = draw_sample(&g, &spec, retention, seed).map_err(|e| HarnessError::Data(e.to_string()))?;
            write_sample(&g, &outcome, &out)?;
            let report = diagnose(&g, &outcome);
            println!(
                "{}: retained {} of {} edges (achieved retention {:.6}), {} nodes touched",
                sampler,
                outcome.retained.len(),
                g.edge_count(),
                outcome.achieved_retention,
                outcome.touched.len()
            );
            for line in &report.lines {
                println!("{line}");
            }
            if report.ok {
                Ok(EXIT_OK)
            } else {
                Err(HarnessError::Data(format!("{sampler} sample failed its structural check")))
            }
        }
        Command::Aggregate {
            results,
            out_dir,
            support_dir,
        } => {
            let records = read_all(&results)?;
            let tables = aggregate_tables(&records)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| data_io(&out_dir, e))?;
            for t in &tables {
                let path = out_dir.join(format!("{}.csv", t.domain));
                write_atomically(&path, |w| t.write_csv(w))?;
            }
            if let Some(dir) = support_dir {
                std::fs::create_dir_all(&dir).map_err(|e| data_io(&dir, e))?;
                for t in &tables {
                    let path = dir.join(format!("{}.csv", t.domain));
                    write_atomically(&path, |w| t.write_support_csv(w))?;
                }
            }
            eprintln!("{} domain tables -> {}", tables.len(), out_dir.display());
            Ok(EXIT_OK)
        }
        Command::Pca {
            results,
            mode,
            domain,
            predictor,
            out,
        } => {
            let records = read_all(&results)?;
            let panels = pca_panels(&records, mode, domain.as_deref(), predictor)?;
            for p in &panels {
                for x in &p.excluded {
                    eprintln!("excluded {}: {}", x.entity, x.reason);
                }
            }
            write_atomically(&out, |w| analysis::write_pca_csv(w, &panels))?;
            Ok(EXIT_OK)
        }
        Command::ListSamplers => {
            println!("sampler,category");
            for s in SamplerKind::ALL {
                println!("{},{}", s.name(), s.category().name());
            }
            Ok(EXIT_OK)
        }
        Command::ListPredictors => {
            println!("predictor,family,supervised");
            for p in PredictorKind::ALL {
                println!("{},{},{}", p.name(), p.family(), p.is_supervised());
            }
            Ok(EXIT_OK)
        }
    }
}

fn data_io(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Data(format!("{}: {e}", path.display()))
}

/// Reads and concatenates result files; an empty result set is an error.
pub fn read_all(paths: &[PathBuf]) -> Result<Vec<AucRecord>, HarnessError> {
    if paths.is_empty() {
        return Err(HarnessError::Config("no results files given".into()));
    }
    let mut all = Vec::new();
    for p in paths {
        let file = File::open(p).map_err(|e| data_io(p, e))?;
        all.extend(read_records(file, true).map_err(|e| data_io(p, e))?);
    }
    if all.is_empty() {
        return Err(HarnessError::Data("results hold no rows".into()));
    }
    Ok(all)
}

pub fn aggregate_tables(records: &[AucRecord]) -> Result<Vec<AggregateTable>, HarnessError> {
    analysis::domains(records)
        .iter()
        .map(|d| analysis::aggregate(records, d).map_err(|e| HarnessError::Data(e.to_string())))
        .collect()
}

pub fn pca_panels(
    records: &[AucRecord],
    mode: PcaMode,
    domain: Option<&str>,
    predictor: Option<PredictorKind>,
) -> Result<Vec<Pca>, HarnessError> {
    let data = |e: analysis::AnalysisError| HarnessError::Data(e.to_string());
    match mode {
        PcaMode::Networks => Ok(vec![analysis::pca_networks(records).map_err(data)?]),
        PcaMode::Samplers => {
            let domain = domain.ok_or_else(|| HarnessError::Config("--mode samplers needs --domain".into()))?;
            let present: Vec<PredictorKind> = PredictorKind::ALL
                .into_iter()
                .filter(|p| records.iter().any(|r| r.domain == domain && r.predictor == p.name()))
                .filter(|p| predictor.is_none_or(|q| q == *p))
                .collect();
            if present.is_empty() {
                return Err(HarnessError::Data(format!("no records for domain {domain:?}")));
            }
            present
                .into_iter()
                .map(|p| analysis::pca_samplers(records, domain, p).map_err(data))
                .collect()
        }
    }
}

/// Writes through a temporary file so that failures leave no partial output.
fn write_atomically<F>(path: &Path, body: F) -> Result<(), HarnessError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), analysis::AnalysisError>,
{
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let file = File::create(&tmp).map_err(|e| data_io(&tmp, e))?;
    let mut w = BufWriter::new(file);
    let written = body(&mut w)
        .map_err(|e| data_io(path, e))
        .and_then(|_| w.flush().map_err(|e| data_io(path, e)));
    drop(w);
    if let Err(e) = written {
        let _ = std::fs::remove_file(&tmp);
        return Err(e);
    }
    std::fs::rename(&tmp, path).map_err(|e| data_io(path, e))
}

fn write_sample(g: &Graph, outcome: &SampleOutcome, out: &Path) -> Result<(), HarnessError> {
    let file = File::create(out).map_err(|e| data_io(out, e))?;
    let mut w = BufWriter::new(file);
    for p in outcome.retained.iter() {
        writeln!(w, "{} {}", g.label(p.u()), g.label(p.v())).map_err(|e| data_io(out, e))?;
    }
    w.flush().map_err(|e| data_io(out, e))
}

pub struct Diagnostics {
    pub ok: bool,
    pub lines: Vec<String>,
}

/// Structural checks matching the sampler's category.
pub fn diagnose(g: &Graph, outcome: &SampleOutcome) -> Diagnostics {
    let mut lines = Vec::new();
    let mut ok = outcome.retained.iter().all(|p| g.contains_pair(p));
    lines.push(format!("subset of input edges: {}", yes_no(ok)));
    let kind = outcome.spec.kind;
    if kind.category() == Category::NeighborBased {
        let connected = Graph::is_connected_sample(&outcome.touched, &outcome.retained);
        lines.push(format!("connected: {}", yes_no(connected)));
        ok &= connected;
    }
    if kind == SamplerKind::LoopErasedRandomWalk {
        let acyclic = is_acyclic(g.node_count(), &outcome.retained.to_vec());
        let tree_size = outcome.retained.len() + 1 == outcome.touched.len();
        lines.push(format!("acyclic: {}", yes_no(acyclic)));
        lines.push(format!("edges = touched nodes - 1: {}", yes_no(tree_size)));
        ok &= acyclic && tree_size;
    }
    Diagnostics { ok, lines }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn is_acyclic(n: usize, edges: &[missbench_core::NodePair]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for p in edges {
        let (a, b) = (find(&mut parent, p.u()), find(&mut parent, p.v()));
        if a == b {
            return false;
        }
        parent[a] = b;
    }
    true
}
