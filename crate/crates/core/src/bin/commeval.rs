// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! `commeval` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 input or parse error, 3 resource
//! cap or timeout.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use commeval::baselines::{self, CpmParams, LpParams};
use commeval::caa::{self, CaaParams};
use commeval::clique::DEFAULT_CLIQUE_CAP;
use commeval::community::{read_cover, write_cover};
use commeval::graph::{self, load_graph, write_edge_list};
use commeval::hashtags;
use commeval::metrics::{self, MetricsReport, SizeBands};
use commeval::sweep::{self, OVERLAP_SWEEP_MIN_CLIQUE};
use commeval::{Community, Cover, Error, Graph};

#[derive(Debug, Parser, Serialize)]
#[command(name = "commeval", version, about = "Clique augmentation community detection and size-aware evaluation")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Give up after this many seconds and exit with status 3.
    #[arg(long, global = true)]
    timeout_secs: Option<u64>,
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SweepKind {
    Growing,
    Overlapping,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Keep reciprocated edges of a directed edge list and drop isolated nodes.
    Mutualize { input: PathBuf },
    /// Sample a planted-partition graph.
    Generate {
        #[arg(long)]
        blocks: usize,
        #[arg(long)]
        block_size: usize,
        #[arg(long)]
        p_in: f64,
        #[arg(long)]
        p_out: f64,
    },
    /// Clique augmentation.
    Caa {
        graph: PathBuf,
        #[arg(long, default_value_t = 3)]
        min_clique_size: usize,
        #[arg(long, default_value_t = 0.0)]
        overlapping_threshold: f64,
        #[arg(long, default_value_t = 0.7)]
        growing_threshold: f64,
        #[arg(long)]
        max_rounds: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_CLIQUE_CAP)]
        clique_cap: usize,
    },
    /// Asynchronous label propagation.
    Lp {
        graph: PathBuf,
        #[arg(long, default_value_t = 100)]
        max_iterations: usize,
    },
    /// Clique percolation.
    Cpm {
        graph: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = baselines::DEFAULT_KCLIQUE_CAP)]
        kclique_cap: usize,
        #[arg(long, default_value_t = DEFAULT_CLIQUE_CAP)]
        clique_cap: usize,
    },
    /// Evaluate one or more cover files against a graph.
    Metrics {
        graph: PathBuf,
        #[arg(required = true)]
        covers: Vec<PathBuf>,
        /// Comma-separated labels, one per cover (default: file stems).
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<String>>,
        #[arg(long, default_value = "1-3,4-9,10-150,151+")]
        bands: String,
    },
    /// Threshold sweep.
    Sweep {
        graph: PathBuf,
        #[arg(long, value_enum)]
        kind: SweepKind,
        /// Comma-separated threshold values.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        /// Default: 3 for growing sweeps, 15 for overlapping sweeps.
        #[arg(long)]
        min_clique_size: Option<usize>,
        #[arg(long, default_value = "1-3,4-9,10-150,151+")]
        bands: String,
        #[arg(long, default_value_t = DEFAULT_CLIQUE_CAP)]
        clique_cap: usize,
    },
    /// Hashtag themes for a sample of communities.
    HashtagReport {
        graph: PathBuf,
        cover: PathBuf,
        hashtags: PathBuf,
        #[arg(long, default_value_t = 10)]
        size_lo: usize,
        #[arg(long, default_value_t = 150)]
        size_hi: usize,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 10)]
        user_k: usize,
        #[arg(long, default_value_t = 20)]
        community_k: usize,
        #[arg(long)]
        preserve_case: bool,
        /// Members listed per community in the text digest.
        #[arg(long, default_value_t = 3)]
        digest_users: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Mutualize { .. } => "mutualize",
            Command::Generate { .. } => "generate",
            Command::Caa { .. } => "caa",
            Command::Lp { .. } => "lp",
            Command::Cpm { .. } => "cpm",
            Command::Metrics { .. } => "metrics",
            Command::Sweep { .. } => "sweep",
            Command::HashtagReport { .. } => "hashtag-report",
        }
    }

    fn inputs(&self) -> Vec<PathBuf> {
        match self {
            Command::Generate { .. } => vec![],
            Command::Mutualize { input } => vec![input.clone()],
            Command::Caa { graph, .. }
            | Command::Lp { graph, .. }
            | Command::Cpm { graph, .. }
            | Command::Sweep { graph, .. } => vec![graph.clone()],
            Command::Metrics { graph, covers, .. } => {
                std::iter::once(graph.clone()).chain(covers.iter().cloned()).collect()
            }
            Command::HashtagReport { graph, cover, hashtags, .. } => {
                vec![graph.clone(), cover.clone(), hashtags.clone()]
            }
        }
    }
}

/// What a finished subcommand produced.
#[derive(Default)]
struct Outcome {
    outputs: Vec<PathBuf>,
    summary: Value,
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Timeout(u64),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Lib(Error::InvalidParameter(_)) => 1,
            Failure::Lib(Error::ResourceCap { .. }) | Failure::Timeout(_) => 3,
            Failure::Lib(_) => 2,
        }
    }

    fn status(&self) -> &'static str {
        match self.exit_code() {
            3 => "dnf",
            _ => "error",
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Timeout(s) => write!(f, "did not finish within {s} s"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("global pool is configured once");
    }
    if let Err(e) = fs::create_dir_all(&cli.output_dir) {
        eprintln!("error: {}: {e}", cli.output_dir.display());
        return ExitCode::from(2);
    }

    let started = Instant::now();
    let result = run_with_timeout(&cli);
    let elapsed = started.elapsed();

    let manifest_path = cli.output_dir.join(format!("{}.manifest.json", cli.command.name()));
    let (status, outcome, error) = match &result {
        Ok(o) => ("ok", Some(o), None),
        Err(f) => (f.status(), None, Some(f.to_string())),
    };
    let manifest = json!({
        "subcommand": cli.command.name(),
        "status": status,
        "parameters": &cli,
        "inputs": cli.command.inputs().iter().map(|p| json!({
            "path": p,
            "sha256": file_digest(p),
        })).collect::<Vec<_>>(),
        "wall_clock_secs": elapsed.as_secs_f64(),
        "peak_memory_bytes": peak_memory_bytes(),
        "outputs": outcome.map(|o| o.outputs.clone()).unwrap_or_default(),
        "summary": outcome.map(|o| o.summary.clone()).unwrap_or(Value::Null),
        "error": error,
    });
    if let Err(e) = write_json(&manifest_path, &manifest) {
        eprintln!("error: {e}");
    }

    match result {
        Ok(outcome) => {
            eprintln!(
                "{}: done in {:.2} s; wrote {}",
                cli.command.name(),
                elapsed.as_secs_f64(),
                outcome
                    .outputs
                    .iter()
                    .map(|p| p.display().to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}

fn run_with_timeout(cli: &Cli) -> Result<Outcome, Failure> {
    let Some(secs) = cli.timeout_secs else {
        return run(cli);
    };
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        scope.spawn(move || {
            let _ = tx.send(run(cli));
        });
        match rx.recv_timeout(Duration::from_secs(secs)) {
            Ok(result) => result,
            Err(_) => {
                // The worker cannot be cancelled; report and leave.
                let f = Failure::Timeout(secs);
                let manifest = json!({
                    "subcommand": cli.command.name(),
                    "status": "dnf",
                    "parameters": cli,
                    "wall_clock_secs": secs as f64,
                    "error": f.to_string(),
                });
                let path = cli.output_dir.join(format!("{}.manifest.json", cli.command.name()));
                let _ = write_json(&path, &manifest);
                eprintln!("error: {f}");
                std::process::exit(f.exit_code() as i32);
            }
        }
    })
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let out = |name: &str| cli.output_dir.join(name);
    match &cli.command {
        Command::Mutualize { input } => {
            let directed = graph::load_directed(input)?;
            let self_loops = directed.edges().filter(|(s, t)| s == t).count();
            let g = graph::mutualize(&directed);
            let path = out("mutual.tsv");
            write_edge_list(&g, &path)?;
            let summary = json!({
                "records": directed.records(),
                "directed_edges": directed.len(),
                "duplicates_dropped": directed.duplicates(),
                "self_loops_dropped": self_loops,
                "input_nodes": directed.id_count(),
                "isolated_nodes_dropped": directed.id_count() - g.node_count(),
                "nodes": g.node_count(),
                "edges": g.edge_count(),
            });
            eprintln!("mutualize: {summary}");
            Ok(Outcome { outputs: vec![path], summary })
        }
        Command::Generate { blocks, block_size, p_in, p_out } => {
            let planted = graph::planted_partition(*blocks, *block_size, *p_in, *p_out, cli.seed)?;
            let g = &planted.graph;
            let graph_path = out("graph.tsv");
            write_edge_list(g, &graph_path)?;
            // The edge list cannot carry isolated nodes, so the block file
            // leaves them out as well.
            let blocks_cover: Cover = planted
                .block_cover()
                .iter()
                .map(|c| Community::from_sorted(c.members().iter().copied().filter(|&v| g.degree(v) > 0).collect()))
                .filter(|c| !c.is_empty())
                .collect();
            let blocks_path = out("blocks.cover");
            write_cover(g, &blocks_cover, &blocks_path)?;
            let isolated = (0..g.node_count() as u32).filter(|&v| g.degree(v) == 0).count();
            let summary = json!({
                "nodes": g.node_count(),
                "edges": g.edge_count(),
                "isolated_nodes_not_written": isolated,
            });
            Ok(Outcome { outputs: vec![graph_path, blocks_path], summary })
        }
        Command::Caa {
            graph,
            min_clique_size,
            overlapping_threshold,
            growing_threshold,
            max_rounds,
            clique_cap,
        } => {
            let g = read_graph(graph)?;
            let params = CaaParams {
                min_clique_size: *min_clique_size,
                overlapping_threshold: *overlapping_threshold,
                growing_threshold: *growing_threshold,
                max_rounds: *max_rounds,
                clique_cap: *clique_cap,
            };
            let started = Instant::now();
            let run = caa::run_caa_detailed(&g, &params)?;
            let path = out("caa.cover");
            write_cover(&g, &run.cover, &path)?;
            let summary = json!({
                "maximal_cliques": run.maximal_cliques,
                "seeds": run.seeds.len(),
                "communities": run.cover.len(),
                "rounds_histogram": run.rounds_histogram,
                "detection_secs": started.elapsed().as_secs_f64(),
            });
            Ok(Outcome { outputs: vec![path], summary })
        }
        Command::Lp { graph, max_iterations } => {
            let g = read_graph(graph)?;
            let params = LpParams { seed: cli.seed, max_iterations: *max_iterations };
            let cover = baselines::label_propagation(&g, &params)?;
            let path = out("lp.cover");
            write_cover(&g, &cover, &path)?;
            Ok(Outcome { outputs: vec![path], summary: json!({ "communities": cover.len() }) })
        }
        Command::Cpm { graph, k, kclique_cap, clique_cap } => {
            let g = read_graph(graph)?;
            let params = CpmParams { k: *k, kclique_cap: *kclique_cap, clique_cap: *clique_cap };
            let cover = baselines::clique_percolation(&g, &params)?;
            let path = out("cpm.cover");
            write_cover(&g, &cover, &path)?;
            Ok(Outcome { outputs: vec![path], summary: json!({ "communities": cover.len() }) })
        }
        Command::Metrics { graph, covers, labels, bands } => {
            let bands: SizeBands = bands.parse()?;
            let g = read_graph(graph)?;
            let labels = match labels {
                Some(l) if l.len() != covers.len() => {
                    return Err(Error::InvalidParameter(format!(
                        "{} labels given for {} covers",
                        l.len(),
                        covers.len()
                    ))
                    .into())
                }
                Some(l) => l.clone(),
                None => covers
                    .iter()
                    .map(|p| p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned()))
                    .collect(),
            };
            let mut reports = Vec::new();
            for (label, path) in labels.iter().zip(covers) {
                let cover = read_cover(&g, path)?;
                reports.push((label.clone(), metrics::evaluate(&g, &cover, &bands)?));
            }
            let json_path = out("metrics.json");
            write_json(
                &json_path,
                &json!({
                    "bands": bands.bands().iter().map(|b| b.to_string()).collect::<Vec<_>>(),
                    "reports": reports.iter().map(|(l, r)| json!({ "label": l, "report": r })).collect::<Vec<_>>(),
                }),
            )?;
            let csv_path = out("metrics.csv");
            write_metrics_csv(&csv_path, &reports)?;
            let txt_path = out("metrics.txt");
            write_text(&txt_path, &render_metrics(&reports))?;
            print!("{}", render_metrics(&reports));
            Ok(Outcome {
                outputs: vec![json_path, csv_path, txt_path],
                summary: json!({ "covers": reports.len() }),
            })
        }
        Command::Sweep { graph, kind, grid, min_clique_size, bands, clique_cap } => {
            let bands: SizeBands = bands.parse()?;
            let g = read_graph(graph)?;
            match kind {
                SweepKind::Growing => {
                    let floor = min_clique_size.unwrap_or(3);
                    let points = sweep::growing_sweep(&g, grid, floor, &bands, *clique_cap)?;
                    let path = out("sweep_growing.csv");
                    let mut w = csv_writer(&path)?;
                    let mut rows = Vec::new();
                    for p in &points {
                        for ((band, count), pct) in p.histogram.bands.iter().zip(&p.histogram.counts).zip(&p.histogram.percentages) {
                            rows.push(GrowingRow {
                                growing_threshold: p.growing_threshold,
                                band: band.to_string(),
                                count: *count,
                                percentage: *pct,
                                communities: p.communities,
                                mean_size: p.mean_size,
                                seeds: p.seeds,
                                mean_seed_size: p.mean_seed_size,
                            });
                        }
                    }
                    for r in rows {
                        w.serialize(r).map_err(|e| csv_error(&path, e))?;
                    }
                    w.flush().map_err(|e| io_error(&path, e))?;
                    Ok(Outcome { outputs: vec![path], summary: json!({ "points": points.len() }) })
                }
                SweepKind::Overlapping => {
                    let floor = min_clique_size.unwrap_or(OVERLAP_SWEEP_MIN_CLIQUE);
                    let points = sweep::overlapping_sweep(&g, grid, floor, *clique_cap)?;
                    let path = out("sweep_overlapping.csv");
                    let mut w = csv_writer(&path)?;
                    for p in &points {
                        w.serialize(p).map_err(|e| csv_error(&path, e))?;
                    }
                    w.flush().map_err(|e| io_error(&path, e))?;
                    Ok(Outcome { outputs: vec![path], summary: json!({ "points": points.len() }) })
                }
            }
        }
        Command::HashtagReport {
            graph,
            cover,
            hashtags: tags_path,
            size_lo,
            size_hi,
            count,
            user_k,
            community_k,
            preserve_case,
            digest_users,
        } => {
            if *count == 0 || *user_k == 0 || *community_k == 0 {
                return Err(Error::InvalidParameter("count, user-k and community-k must be at least 1".into()).into());
            }
            let g = read_graph(graph)?;
            let cover = read_cover(&g, cover)?;
            let table = hashtags::load_hashtags(tags_path, *preserve_case)?;
            let sample = hashtags::sample_communities(&cover, *size_lo, *size_hi, *count, cli.seed);
            let report = hashtags::theme_report(&g, &sample, &table, *user_k, *community_k);
            let json_path = out("hashtags.json");
            write_json(&json_path, &report)?;
            let txt_path = out("hashtags.txt");
            write_text(&txt_path, &hashtags::render_digest(&report, &table, *digest_users))?;
            Ok(Outcome {
                outputs: vec![json_path, txt_path],
                summary: json!({ "sampled": sample.len(), "users_with_hashtags": table.user_count() }),
            })
        }
    }
}

fn read_graph(path: &Path) -> Result<Graph, Error> {
    let (g, stats) = load_graph(path)?;
    if stats.self_loops + stats.duplicates > 0 {
        eprintln!(
            "{}: dropped {} self-loops and {} duplicate edges",
            path.display(),
            stats.self_loops,
            stats.duplicates
        );
    }
    Ok(g)
}

#[derive(Serialize)]
struct GrowingRow {
    growing_threshold: f64,
    band: String,
    count: usize,
    percentage: f64,
    communities: usize,
    mean_size: f64,
    seeds: usize,
    mean_seed_size: f64,
}

#[derive(Serialize)]
struct BandRow<'a> {
    algorithm_label: &'a str,
    band: String,
    count: usize,
    percentage: f64,
    eq_contribution: f64,
    tpr_mean: Option<f64>,
    tpr_micro: Option<f64>,
}

fn write_metrics_csv(path: &Path, reports: &[(String, MetricsReport)]) -> Result<(), Error> {
    let mut w = csv_writer(path)?;
    for (label, report) in reports {
        for b in &report.bands {
            w.serialize(BandRow {
                algorithm_label: label,
                band: b.band.to_string(),
                count: b.count,
                percentage: b.percentage,
                eq_contribution: b.eq_contribution,
                tpr_mean: b.tpr_mean,
                tpr_micro: b.tpr_micro,
            })
            .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| io_error(path, e))
}

fn render_metrics(reports: &[(String, MetricsReport)]) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "{:<16} {:>12} {:>10} {:>10} {:>10} {:>10}\n",
        "algorithm", "communities", "largest", "coverage", "EQ", "mean TPR"
    ));
    for (label, r) in reports {
        s.push_str(&format!(
            "{:<16} {:>12} {:>10} {:>10.4} {:>10.4} {:>10}\n",
            label,
            r.community_count,
            r.largest_community_size,
            r.coverage,
            r.eq_total,
            r.mean_tpr().map_or("-".to_string(), |t| format!("{t:.4}"))
        ));
    }
    s.push('\n');
    s.push_str(&format!(
        "{:<16} {:>8} {:>8} {:>8} {:>12} {:>10} {:>10}\n",
        "algorithm", "band", "count", "pct", "EQ part", "TPR mean", "TPR micro"
    ));
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |t| format!("{t:.4}"));
    for (label, r) in reports {
        for b in &r.bands {
            s.push_str(&format!(
                "{:<16} {:>8} {:>8} {:>8.2} {:>12.6} {:>10} {:>10}\n",
                label,
                b.band.to_string(),
                b.count,
                b.percentage,
                b.eq_contribution,
                opt(b.tpr_mean),
                opt(b.tpr_micro)
            ));
        }
    }
    s
}

/// High-water resident set size, where the platform reports one.
fn peak_memory_bytes() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn file_digest(path: &Path) -> Option<String> {
    let bytes = fs::read(path).ok()?;
    Some(hex::encode(Sha256::digest(&bytes)))
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io { path: path.to_owned(), source: e }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    io_error(path, std::io::Error::other(e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, Error> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_error(path, e.into()))?;
    text.push('\n');
    write_text(path, &text)
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    let mut f = fs::File::create(path).map_err(|e| io_error(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_error(path, e))
}
