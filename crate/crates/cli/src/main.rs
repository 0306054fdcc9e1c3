use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use relgraph_core::encoder::{train, EntityMessage, Model, ModelConfig};
use relgraph_core::eval::{evaluate, with_inverse_queries, EvalOptions, FilterSet, ModelScorer, Setting};
use relgraph_core::kg::{load_triples, TripleFormat};
use relgraph_core::matcher::{mine, write_occurrences_tsv, MatchOptions};
use relgraph_core::relation_graph::{GraphFormat, RelationGraph};
use relgraph_core::verify::{run_suite, Suite, SuiteReport};
use relgraph_core::vocabulary::builtin_pattern;
use relgraph_core::{builtin_vocabulary, KnowledgeGraph, MatchMode, Triple, Vocabulary};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Graphlet mining, relation graphs and zero-shot link prediction.
#[derive(Parser, Debug, Serialize)]
#[command(name = "relgraph", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Serialize)]
struct Global {
    /// Seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Force single-threaded execution.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Directory receiving the run's artifacts; not part of the config hash.
    #[arg(long, global = true, default_value = "out")]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Print entity, relation and triple counts.
    Stats(GraphArgs),
    /// Dump weighted occurrence classes as TSV.
    Mine(MineArgs),
    /// Build and export a relation graph.
    Relgraph(RelgraphArgs),
    /// Train a model and write a checkpoint.
    Train(TrainArgs),
    /// Rank test triples with a checkpoint on an inference graph.
    Eval(EvalArgs),
    /// Run property suites; exits with status 2 on any violation.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Serialize)]
struct GraphArgs {
    /// Triple file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Tsv)]
    format: InputFormat,
    /// Use the graph as is instead of adding inverse relations.
    #[arg(long)]
    no_inverse: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum InputFormat {
    Tsv,
    Nt,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Mode {
    Existence,
    Count,
}

#[derive(Args, Debug, Serialize)]
struct VocabArgs {
    /// v2-, u2, v2, v2+, v3-, v3, v3+, m3, m4' or custom:FILE.
    #[arg(long, default_value = "v2")]
    vocab: String,
    #[arg(long, value_enum, default_value_t = Mode::Count)]
    mode: Mode,
    /// Allow the two anchored relations to coincide.
    #[arg(long)]
    permissive: bool,
}

#[derive(Args, Debug, Serialize)]
struct MineArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    vocab: VocabArgs,
}

#[derive(Args, Debug, Serialize)]
struct RelgraphArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    vocab: VocabArgs,
    /// Minimum class weight for an edge.
    #[arg(long, default_value_t = 1)]
    epsilon: u64,
    #[arg(long, value_enum, default_value_t = ExportFormat::Json)]
    export: ExportFormat,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ExportFormat {
    Json,
    Tsv,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    vocab: VocabArgs,
    #[arg(long, default_value_t = 1)]
    epsilon: u64,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 6)]
    relation_layers: usize,
    #[arg(long, default_value_t = 6)]
    entity_layers: usize,
    #[arg(long, default_value_t = 32)]
    negatives: usize,
    #[arg(long, default_value_t = 8)]
    batch_size: usize,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long, default_value_t = 5e-4)]
    lr: f64,
    #[arg(long, default_value_t = 0.0)]
    weight_decay: f64,
    #[arg(long)]
    self_adversarial: bool,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    /// Feed the query row instead of each edge's relation row to the entity
    /// message transform.
    #[arg(long)]
    query_row_messages: bool,
}

#[derive(Args, Debug, Serialize)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    graph: GraphArgs,
    /// Test triples, named with the inference graph's entities and relations.
    #[arg(long)]
    test: PathBuf,
    /// Needed when the checkpoint was trained with a custom vocabulary.
    #[arg(long)]
    vocab: Option<String>,
    #[arg(long, default_value_t = 1)]
    epsilon: u64,
    #[arg(long, default_value = "transductive")]
    setting: String,
    /// Rank against every entity, known true tails included.
    #[arg(long)]
    raw: bool,
    /// Skip the inverse (head-prediction) queries.
    #[arg(long)]
    tail_only: bool,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    /// oracle, theorem1, theorem2, spmm, expressiveness, gradients,
    /// isomorphism or all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Random cases per suite (suite default when omitted).
    #[arg(long)]
    cases: Option<usize>,
}

/// Everything that determines a run's outputs.
#[derive(Serialize)]
struct RunConfig<'a> {
    version: &'static str,
    cli: &'a Cli,
    inputs: Vec<(String, String)>,
}

struct Run {
    out: PathBuf,
    hash: String,
}

impl Run {
    fn new(cli: &Cli, inputs: &[&Path]) -> Result<Run> {
        let mut digests = Vec::new();
        for p in inputs {
            let bytes = fs::read(p).with_context(|| format!("cannot read {}", p.display()))?;
            digests.push((p.display().to_string(), format!("{:x}", Sha256::digest(&bytes))));
        }
        let config = RunConfig {
            version: env!("CARGO_PKG_VERSION"),
            cli,
            inputs: digests,
        };
        let json = serde_json::to_string_pretty(&config)?;
        let hash = format!("{:x}", Sha256::digest(json.as_bytes()))[..16].to_owned();
        let out = cli.global.out.clone();
        fs::create_dir_all(&out).with_context(|| format!("cannot create output directory {}", out.display()))?;
        let run = Run { out, hash };
        run.write(
            "run_config.json",
            format!("{{\"config_hash\":\"{}\",\"config\":{json}}}\n", run.hash),
        )?;
        Ok(run)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

fn load_graph(a: &GraphArgs) -> Result<KnowledgeGraph> {
    let format = match a.format {
        InputFormat::Tsv => TripleFormat::Tsv,
        InputFormat::Nt => TripleFormat::NTriples,
    };
    let g = load_triples(&a.input, format)?;
    info!("{}: {} triples", a.input.display(), g.num_triples());
    if a.no_inverse {
        Ok(g)
    } else {
        Ok(g.augment_inverses()?)
    }
}

fn load_vocabulary(spec: &str) -> Result<Vocabulary> {
    if let Some(file) = spec.strip_prefix("custom:") {
        let text = fs::read_to_string(file).with_context(|| format!("cannot read vocabulary file {file}"))?;
        if text.trim_start().starts_with('[') {
            return Ok(Vocabulary::from_json(&text)?);
        }
        let names: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        return Ok(Vocabulary::from_pattern_names(&names)?);
    }
    builtin_vocabulary(spec).context("use one of v2-, u2, v2, v2+, v3-, v3, v3+, m3, m4' or custom:FILE")
}

fn vocabulary(a: &VocabArgs) -> Result<(Vocabulary, MatchOptions)> {
    let mode = match a.mode {
        Mode::Existence => MatchMode::Existence,
        Mode::Count => MatchMode::Count,
    };
    let opts = if a.permissive {
        MatchOptions::permissive()
    } else {
        MatchOptions::default()
    };
    Ok((load_vocabulary(&a.vocab)?.with_mode(mode), opts))
}

fn cmd_stats(a: &GraphArgs) -> Result<()> {
    let g = load_graph(a)?;
    println!("{}", serde_json::to_string(&g.stats())?);
    Ok(())
}

fn cmd_mine(run: &Run, a: &MineArgs) -> Result<()> {
    let g = load_graph(&a.graph)?;
    let (v, opts) = vocabulary(&a.vocab)?;
    let classes = mine(&g, &v, opts)?;
    let path = run.path("occurrences.tsv");
    let file = fs::File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# config_hash: {}", run.hash)?;
    write_occurrences_tsv(&g, &classes, &mut w)?;
    w.flush()?;
    println!("{} classes -> {}", classes.len(), path.display());
    Ok(())
}

fn build_relation_graph(
    g: &KnowledgeGraph,
    a: &VocabArgs,
    epsilon: u64,
    hash: &str,
) -> Result<(Vocabulary, RelationGraph)> {
    let (v, opts) = vocabulary(a)?;
    let mut rg = RelationGraph::build(g, &v, epsilon, opts)?;
    rg.set_config_hash(hash);
    Ok((v, rg))
}

fn cmd_relgraph(run: &Run, a: &RelgraphArgs) -> Result<()> {
    let g = load_graph(&a.graph)?;
    let (_, rg) = build_relation_graph(&g, &a.vocab, a.epsilon, &run.hash)?;
    let (name, format) = match a.export {
        ExportFormat::Json => ("relation_graph.json", GraphFormat::Json),
        ExportFormat::Tsv => ("relation_graph.tsv", GraphFormat::Tsv),
    };
    let path = run.path(name);
    rg.export(&path, format)?;
    println!(
        "{} nodes, {} edges -> {}",
        rg.num_nodes(),
        rg.num_edges(),
        path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct MetricsLine<'a> {
    config_hash: &'a str,
    step: usize,
    loss: f64,
}

fn cmd_train(run: &Run, a: &TrainArgs, seed: u64) -> Result<()> {
    let g = load_graph(&a.graph)?;
    let (v, rg) = build_relation_graph(&g, &a.vocab, a.epsilon, &run.hash)?;
    let cfg = ModelConfig {
        dim: a.dim,
        relation_layers: a.relation_layers,
        entity_layers: a.entity_layers,
        negatives: a.negatives,
        batch_size: a.batch_size,
        steps: a.steps,
        learning_rate: a.lr,
        weight_decay: a.weight_decay,
        self_adversarial: a.self_adversarial,
        adversarial_temperature: a.temperature,
        seed,
        entity_message: if a.query_row_messages {
            EntityMessage::QueryRow
        } else {
            EntityMessage::PerRelationRow
        },
        ..ModelConfig::default()
    };
    let metrics_path = run.path("metrics.jsonl");
    let file = fs::File::create(&metrics_path).with_context(|| format!("cannot write {}", metrics_path.display()))?;
    let mut metrics = BufWriter::new(file);
    let mut io_error = None;
    let model = train(&g, &rg, &v, &cfg, |m| {
        info!("step {} loss {:.6}", m.step, m.loss);
        let line = MetricsLine {
            config_hash: &run.hash,
            step: m.step,
            loss: m.loss,
        };
        let written = serde_json::to_string(&line)
            .map_err(std::io::Error::from)
            .and_then(|s| writeln!(metrics, "{s}"));
        if let Err(e) = written {
            io_error.get_or_insert(e);
        }
    })?;
    if let Some(e) = io_error {
        return Err(e).with_context(|| format!("cannot write {}", metrics_path.display()));
    }
    metrics.flush()?;
    let path = run.path("model.json");
    model.save(&path, Some(&run.hash))?;
    println!("trained {} steps -> {}", cfg.steps, path.display());
    Ok(())
}

fn checkpoint_vocabulary(model: &Model, spec: Option<&str>) -> Result<Vocabulary> {
    if let Some(s) = spec {
        return load_vocabulary(s);
    }
    if let Ok(v) = builtin_vocabulary(&model.vocabulary) {
        if v.pattern_names() == model.patterns {
            return Ok(v);
        }
    }
    let patterns = model
        .patterns
        .iter()
        .map(|n| builtin_pattern(n))
        .collect::<relgraph_core::Result<Vec<_>>>()
        .context("checkpoint uses custom patterns; pass --vocab custom:FILE")?;
    Ok(Vocabulary::new(model.vocabulary.clone(), patterns, MatchMode::Count)?)
}

fn cmd_eval(run: &Run, a: &EvalArgs) -> Result<()> {
    let (model, _) = Model::load(&a.checkpoint)?;
    let v = checkpoint_vocabulary(&model, a.vocab.as_deref())?;
    model.check_vocabulary(&v)?;
    let setting: Setting = a.setting.parse()?;
    let g = load_graph(&a.graph)?;
    let rg = RelationGraph::build(&g, &v, a.epsilon, MatchOptions::default())?;
    let named = load_triples(&a.test, TripleFormat::Tsv)?;
    let mut test = Vec::with_capacity(named.num_triples());
    for t in named.triples() {
        let (h, r, e) = (
            named.entity_name(t.head),
            named.relation_name(t.relation),
            named.entity_name(t.tail),
        );
        let missing = |kind: &str, name: &str| {
            anyhow::anyhow!("test triple ({h}, {r}, {e}): {kind} `{name}` is not in the inference graph")
        };
        test.push(Triple::new(
            g.entity_id(h).ok_or_else(|| missing("entity", h))?,
            g.relation_id(r).ok_or_else(|| missing("relation", r))?,
            g.entity_id(e).ok_or_else(|| missing("entity", e))?,
        ));
    }
    if !a.tail_only {
        if !g.inverse_augmented() {
            bail!("head queries need inverse relations; drop --no-inverse or pass --tail-only");
        }
        test = with_inverse_queries(&g, &test)?;
    }
    let mut filter = FilterSet::from_triples(g.triples());
    filter.extend(&test);
    let scorer = ModelScorer {
        model: &model,
        graph: &g,
        relation_graph: &rg,
    };
    let opts = EvalOptions {
        setting,
        filtered: !a.raw,
        ..EvalOptions::default()
    };
    let mut report = evaluate(&scorer, &test, &filter, &opts)?;
    report.config_hash = Some(run.hash.clone());
    let path = run.write("report.json", serde_json::to_string_pretty(&report)? + "\n")?;
    println!(
        "MRR {:.4} over {} queries -> {}",
        report.mrr,
        report.num_queries,
        path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    config_hash: &'a str,
    passed: bool,
    suites: Vec<SuiteReport>,
}

/// Returns whether every suite passed.
fn cmd_verify(run: &Run, a: &VerifyArgs, seed: u64) -> Result<bool> {
    let suites: Vec<Suite> = if a.suite.eq_ignore_ascii_case("all") {
        Suite::ALL.to_vec()
    } else {
        a.suite
            .split(',')
            .map(|s| s.trim().parse::<Suite>())
            .collect::<relgraph_core::Result<_>>()?
    };
    let mut reports = Vec::new();
    for s in suites {
        let r = run_suite(s, a.cases, seed)?;
        println!("{r}");
        for f in &r.failures {
            println!("  {f}");
        }
        reports.push(r);
    }
    let passed = reports.iter().all(|r| r.passed);
    let out = VerifyOutput {
        config_hash: &run.hash,
        passed,
        suites: reports,
    };
    run.write("verify.json", serde_json::to_string_pretty(&out)? + "\n")?;
    Ok(passed)
}

fn execute(cli: &Cli) -> Result<bool> {
    let threads = if cli.global.deterministic {
        Some(1)
    } else {
        cli.global.threads
    };
    if let Some(n) = threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    let seed = cli.global.seed;
    match &cli.command {
        Command::Stats(a) => cmd_stats(a)?,
        Command::Mine(a) => cmd_mine(&Run::new(cli, &[&a.graph.input])?, a)?,
        Command::Relgraph(a) => cmd_relgraph(&Run::new(cli, &[&a.graph.input])?, a)?,
        Command::Train(a) => cmd_train(&Run::new(cli, &[&a.graph.input])?, a, seed)?,
        Command::Eval(a) => cmd_eval(&Run::new(cli, &[&a.checkpoint, &a.graph.input, &a.test])?, a)?,
        Command::Verify(a) => return cmd_verify(&Run::new(cli, &[])?, a, seed),
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("relgraph").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn builtin_and_custom_vocabularies() {
        assert_eq!(load_vocabulary("v3+").unwrap().len(), 32);
        assert_eq!(load_vocabulary("u2").unwrap().len(), 4);
        assert!(load_vocabulary("v4").is_err());
        let dir = tempfile::tempdir().unwrap();
        let list = dir.path().join("names.txt");
        fs::write(&list, "# two paths\nffo\n\nrrc\n").unwrap();
        let v = load_vocabulary(&format!("custom:{}", list.display())).unwrap();
        assert_eq!(v.pattern_names(), ["ffo", "rrc"]);
        let as_json = dir.path().join("v.json");
        v.save(&as_json).unwrap();
        let back = load_vocabulary(&format!("custom:{}", as_json.display())).unwrap();
        assert_eq!(back.pattern_names(), v.pattern_names());
    }

    #[test]
    fn hash_ignores_output_directory_only() {
        let dir = tempfile::tempdir().unwrap();
        let hash = |args: &[&str]| {
            let mut cli = parse(args);
            cli.global.out = dir.path().join(args.join("_"));
            Run::new(&cli, &[]).unwrap().hash
        };
        let base = hash(&["verify", "--suite", "spmm"]);
        assert_eq!(base, hash(&["--out", "elsewhere", "verify", "--suite", "spmm"]));
        assert_ne!(base, hash(&["--seed", "1", "verify", "--suite", "spmm"]));
        assert_ne!(base, hash(&["verify", "--suite", "oracle"]));
    }

    #[test]
    fn global_flags_follow_subcommands() {
        let cli = parse(&["verify", "--deterministic", "--seed", "9"]);
        assert!(cli.global.deterministic);
        assert_eq!(cli.global.seed, 9);
    }
}
