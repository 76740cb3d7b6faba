use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use missbench::config::RunConfig;
use missbench_core::evalpipe::{read_records, RESULT_COLUMNS};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.txt"))
}

fn missbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_missbench"))
        .args(args)
        .env_remove("MISSBENCH_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL_CONFIG: &str = r#"
seed = 17
samplers = ["random-edge", "random-node"]
predictors = ["adamic-adar", "jaccard"]

[protocol]
balance_size = 2000
"#;

struct Corpus {
    dir: tempfile::TempDir,
}

impl Corpus {
    fn new(networks: &[(&str, &str)]) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut manifest = String::from("name,path,domain\n");
        for (name, domain) in networks {
            let path = if name.starts_with("missing") {
                dir.path().join("nowhere.txt")
            } else {
                fixture(name)
            };
            manifest.push_str(&format!("{name},{},{domain}\n", path.display()));
        }
        std::fs::write(dir.path().join("manifest.csv"), manifest).unwrap();
        std::fs::write(dir.path().join("config.toml"), SMALL_CONFIG).unwrap();
        Corpus { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, out: &str, extra: &[&str]) -> Output {
        let manifest = self.path("manifest.csv");
        let config = self.path("config.toml");
        let out = self.path(out);
        let mut args = vec!["run", "--manifest", s(&manifest), "--config", s(&config), "--out", s(&out)];
        args.extend_from_slice(extra);
        missbench(&args)
    }
}

#[test]
fn small_sweep_has_the_expected_rows_and_reruns_identically() {
    let corpus = Corpus::new(&[("karate", "social"), ("florentine", "social")]);
    let first = corpus.run("a.csv", &["--workers", "2"]);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let text = std::fs::read_to_string(corpus.path("a.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), RESULT_COLUMNS.join(","));
    let records = read_records(text.as_bytes(), false).unwrap();
    // networks x samplers x predictors x repeats x folds
    assert_eq!(records.len(), 2 * 2 * 2 * 5 * 5);
    let keys: Vec<_> = records
        .iter()
        .map(|r| (r.network.clone(), r.domain.clone(), r.sampler.clone(), r.predictor.clone(), r.repeat, r.fold))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(records.iter().all(|r| r.is_ok()));
    assert!(corpus.path("a.csv.meta.json").exists());
    assert!(!corpus.path("a.csv.partial").exists());

    let second = corpus.run("b.csv", &["--workers", "2"]);
    assert_eq!(code(&second), 0);
    assert_eq!(std::fs::read(corpus.path("a.csv")).unwrap(), std::fs::read(corpus.path("b.csv")).unwrap());
}

#[test]
fn worker_count_does_not_change_output() {
    let corpus = Corpus::new(&[("karate", "social"), ("florentine", "economic"), ("lesmis", "informational")]);
    assert_eq!(code(&corpus.run("one.csv", &["--workers", "1"])), 0);
    assert_eq!(code(&corpus.run("eight.csv", &["--workers", "8"])), 0);
    assert_eq!(std::fs::read(corpus.path("one.csv")).unwrap(), std::fs::read(corpus.path("eight.csv")).unwrap());
    assert_eq!(
        std::fs::read(corpus.path("one.csv.meta.json")).unwrap(),
        std::fs::read(corpus.path("eight.csv.meta.json")).unwrap()
    );
}

#[test]
fn overrides_win_over_the_config_file() {
    let corpus = Corpus::new(&[("florentine", "economic")]);
    let out = corpus.run("o.csv", &["--repeats", "1", "--folds", "2", "--predictors", "preferential-attachment"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let records = read_records(std::fs::File::open(corpus.path("o.csv")).unwrap(), false).unwrap();
    assert_eq!(records.len(), 2 * 2);
    assert!(records.iter().all(|r| r.predictor == "preferential-attachment" && r.seed != 0));
}

#[test]
fn aggregation_writes_one_table_per_domain_and_merges_shards() {
    let both = Corpus::new(&[("karate", "social"), ("florentine", "social")]);
    assert_eq!(code(&both.run("all.csv", &[])), 0);
    let out_dir = both.path("tables");
    let support = both.path("support");
    let all = both.path("all.csv");
    let out = missbench(&["aggregate", "--results", s(&all), "--out-dir", s(&out_dir), "--support-dir", s(&support)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let files: Vec<_> = std::fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files, vec![std::ffi::OsString::from("social.csv")]);
    let table = std::fs::read_to_string(out_dir.join("social.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "category,sampler,adamic-adar,jaccard,best");
    assert_eq!(table.lines().count(), 3);
    let counts = std::fs::read_to_string(support.join("social.csv")).unwrap();
    assert!(counts.lines().nth(1).unwrap().contains(",50,50,"), "{counts}");

    // the same corpus run as two shards
    let karate = Corpus::new(&[("karate", "social")]);
    let florentine = Corpus::new(&[("florentine", "social")]);
    assert_eq!(code(&karate.run("k.csv", &[])), 0);
    assert_eq!(code(&florentine.run("f.csv", &[])), 0);
    let merged = both.path("merged");
    let (k, f) = (karate.path("k.csv"), florentine.path("f.csv"));
    let out = missbench(&["aggregate", "--results", s(&k), "--results", s(&f), "--out-dir", s(&merged)]);
    assert_eq!(code(&out), 0);
    assert_eq!(std::fs::read_to_string(merged.join("social.csv")).unwrap(), table);
}

#[test]
fn empty_results_are_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, format!("{}\n", RESULT_COLUMNS.join(","))).unwrap();
    let out_dir = dir.path().join("t");
    let out = missbench(&["aggregate", "--results", s(&empty), "--out-dir", s(&out_dir)]);
    assert_eq!(code(&out), 2);
    let pca_out = dir.path().join("p.csv");
    let out = missbench(&["pca", "--results", s(&empty), "--mode", "networks", "--out", s(&pca_out)]);
    assert_eq!(code(&out), 2);
    assert!(!pca_out.exists());
}

#[test]
fn network_pca_from_a_small_sweep() {
    let corpus = Corpus::new(&[("karate", "social"), ("florentine", "economic"), ("lesmis", "informational")]);
    assert_eq!(code(&corpus.run("r.csv", &[])), 0);
    let (results, out) = (corpus.path("r.csv"), corpus.path("pca.csv"));
    let run = missbench(&["pca", "--results", s(&results), "--mode", "networks", "--out", s(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "entity,domain_or_predictor,pc1,pc2,explained_variance_1,explained_variance_2");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    let entities: BTreeSet<&str> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(entities, BTreeSet::from(["florentine", "karate", "lesmis"]));
    for r in &rows {
        assert!(r[2..].iter().all(|x| x.parse::<f64>().unwrap().is_finite()));
    }
    // sampler panels need every sampler
    let run = missbench(&["pca", "--results", s(&results), "--mode", "samplers", "--domain", "social", "--out", s(&out)]);
    assert_eq!(code(&run), 2);
    let run = missbench(&["pca", "--results", s(&results), "--mode", "samplers", "--out", s(&out)]);
    assert_eq!(code(&run), 1);
}

fn sample(graph: &str, sampler: &str, retention: &str, seed: &str, out: &Path) -> Output {
    missbench(&["sample", "--graph", s(&fixture(graph)), "--sampler", sampler, "--retention", retention, "--seed", seed, "--out", s(out)])
}

fn edge_lines(path: &Path) -> BTreeSet<(String, String)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let mut t = l.split_whitespace().map(str::to_string);
            let (a, b) = (t.next().unwrap(), t.next().unwrap());
            if a < b {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect()
}

#[test]
fn sample_command_writes_retained_edges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.txt");

    let run = sample("karate", "random-edge", "1", "0", &out);
    assert_eq!(code(&run), 0);
    assert_eq!(edge_lines(&out), edge_lines(&fixture("karate")));

    let run = sample("karate", "random-edge", "0.8", "4", &out);
    assert_eq!(code(&run), 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 62);
    assert!(edge_lines(&out).is_subset(&edge_lines(&fixture("karate"))));

    let run = sample("karate", "loop-erased-random-walk", "0.4", "2", &out);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8(run.stdout).unwrap();
    let first = stdout.lines().next().unwrap();
    let touched: usize = first
        .strip_suffix(" nodes touched")
        .and_then(|head| head.rsplit(' ').next())
        .and_then(|n| n.parse().ok())
        .expect("touched count printed");
    let lines = std::fs::read_to_string(&out).unwrap().lines().count();
    assert_eq!(lines, touched - 1);
    assert!(stdout.contains("acyclic: yes"));

    let run = sample("karate", "forest-fire", "0.8", "1", &out);
    assert_eq!(code(&run), 0);
    assert!(String::from_utf8(run.stdout).unwrap().contains("connected: yes"));

    // a spanning tree cannot hold 80% of karate's edges
    let run = sample("karate", "loop-erased-random-walk", "0.8", "1", &out);
    assert_eq!(code(&run), 2);
    let run = sample("karate", "random-edge", "1.5", "1", &out);
    assert_eq!(code(&run), 1);
}

#[test]
fn interrupted_run_resumes_to_the_same_bytes() {
    let corpus = Corpus::new(&[("karate", "social"), ("florentine", "social")]);
    assert_eq!(code(&corpus.run("full.csv", &[])), 0);
    let full = std::fs::read_to_string(corpus.path("full.csv")).unwrap();

    // a shard holding one complete cell, one half-written cell and a torn trailing row
    let lines: Vec<&str> = full.lines().collect();
    let mut shard = String::from(lines[0]);
    shard.push('\n');
    for l in lines[1..=25].iter().chain(&lines[26..40]) {
        shard.push_str(l);
        shard.push('\n');
    }
    shard.push_str(&lines[40][..lines[40].len() / 2]);
    let partial = corpus.path("resumed.csv.partial");
    std::fs::write(&partial, &shard).unwrap();
    let config = RunConfig::load(&corpus.path("config.toml")).unwrap();
    std::fs::write(corpus.path("resumed.csv.partial.sha256"), config.fingerprint()).unwrap();

    let run = corpus.run("resumed.csv", &["--resume"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stderr).contains("1 complete cells"));
    assert_eq!(std::fs::read_to_string(corpus.path("resumed.csv")).unwrap(), full);
    assert!(!partial.exists());

    // a shard from another configuration is refused
    std::fs::write(&partial, &shard).unwrap();
    std::fs::write(corpus.path("resumed.csv.partial.sha256"), "0000").unwrap();
    assert_eq!(code(&corpus.run("resumed.csv", &["--resume"])), 1);
}

#[test]
fn failures_and_unreadable_networks_exit_with_three() {
    let corpus = Corpus::new(&[("florentine", "economic"), ("missing-net", "social")]);
    let run = corpus.run("r.csv", &["--samplers", "random-edge,loop-erased-random-walk"]);
    assert_eq!(code(&run), 3, "{}", String::from_utf8_lossy(&run.stderr));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(corpus.path("r.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["skipped_networks"][0]["name"], "missing-net");
    // florentine has 20 edges on 15 nodes: a tree holds at most 14 < 16
    assert_eq!(meta["failed_cells"], 2);
    let records = read_records(std::fs::File::open(corpus.path("r.csv")).unwrap(), false).unwrap();
    assert_eq!(records.len(), 2 * 2 * 25);
    assert_eq!(records.iter().filter(|r| !r.is_ok()).count(), 50);
    assert!(records.iter().filter(|r| !r.is_ok()).all(|r| r.sampler == "loop-erased-random-walk" && r.auc.is_none()));
}

#[test]
fn usage_and_data_errors_have_distinct_codes() {
    let corpus = Corpus::new(&[("florentine", "economic")]);
    let nowhere = corpus.path("nowhere.csv");
    let out = corpus.path("x.csv");
    assert_eq!(code(&missbench(&["run", "--manifest", s(&nowhere), "--out", s(&out)])), 2);
    std::fs::write(corpus.path("bad.toml"), "[protocol]\nfolds = 1\n").unwrap();
    let (manifest, bad) = (corpus.path("manifest.csv"), corpus.path("bad.toml"));
    assert_eq!(code(&missbench(&["run", "--manifest", s(&manifest), "--config", s(&bad), "--out", s(&out)])), 1);
    std::fs::write(corpus.path("typo.toml"), "sedd = 3\n").unwrap();
    let typo = corpus.path("typo.toml");
    assert_eq!(code(&missbench(&["run", "--manifest", s(&manifest), "--config", s(&typo), "--out", s(&out)])), 1);
    assert_eq!(code(&missbench(&["run", "--manifest", s(&manifest), "--predictors", "katz", "--out", s(&out)])), 1);

    let bad_env = Command::new(env!("CARGO_BIN_EXE_missbench"))
        .args(["run", "--manifest", s(&manifest), "--config", s(&corpus.path("config.toml")), "--out", s(&out)])
        .env("MISSBENCH_WORKERS", "lots")
        .output()
        .unwrap();
    assert_eq!(code(&bad_env), 1);
    assert_eq!(code(&missbench(&["--help"])), 0);
}

#[test]
fn listings_name_every_method() {
    let out = missbench(&["list-samplers"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 21);
    assert!(text.contains("depth-first-search,dfs"), "{text}");
    let out = missbench(&["list-predictors"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.contains("top-stacking,stacking,true"));
}
