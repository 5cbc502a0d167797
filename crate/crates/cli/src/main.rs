//! `char2vec` command line: vocabulary building, two-stage training,
//! segmentation, evaluation and vector export.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use char2vec::corpus::{Corpus, Vocab};
use char2vec::embedder::persist::{checksum_hex, write_text_vectors};
use char2vec::embedder::{
    load_model, save_model, train, Model, ModelKind, Progress, Stage, TrainConfig,
};
use char2vec::evaluation::{
    eval_analogy, eval_similarity, load_analogies, load_sidecar, load_similarity,
    nearest_neighbors, SimilarityReport,
};
use char2vec::morphology::{
    baseline_map, boundary_weights, load_gold, map_score, porter_ranker, random_ranker,
    BASELINE_SEEDS,
};
use char2vec::numerics::AdamConfig;
use char2vec::{Error, ErrorClass, Result};

/// Environment variable naming a directory searched for relative input paths
/// that do not exist under the working directory.
const DATA_DIR_ENV: &str = "CHAR2VEC_DATA_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "char2vec",
    version,
    about = "Character-level word embeddings with split-point attention"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count corpus words and write `word<TAB>count` lines.
    BuildVocab(BuildVocabArgs),
    /// Train a model (word-level stage, then the character stage).
    Train(TrainArgs),
    /// Rank morpheme boundaries by attention and score them against gold data.
    Segment(SegmentArgs),
    /// Spearman correlation on word-similarity datasets.
    EvalSim(EvalSimArgs),
    /// Accuracy on analogy questions.
    EvalAnalogy(EvalAnalogyArgs),
    /// Nearest neighbours by cosine similarity.
    Nn(NnArgs),
    /// Write vocabulary vectors in the `<count> <dim>` text format.
    ExportVectors(ExportArgs),
}

#[derive(Args, Debug)]
struct Output {
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Align report columns for reading instead of emitting TSV.
    #[arg(long)]
    pretty: bool,
}

#[derive(Args, Debug)]
struct BuildVocabArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Keep words seen at least this many times.
    #[arg(long, default_value_t = 6)]
    min_count: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    /// Loss trace TSV [default: <out>.trace.tsv]
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Model dump written if training diverges [default: <out>.diverged]
    #[arg(long)]
    nan_dump: Option<PathBuf>,
    /// sgns, c2v-no-att, char2vec or ppmi-svd.
    #[arg(long, default_value = "char2vec")]
    model: ModelKind,
    #[arg(long, default_value_t = 3)]
    window: usize,
    #[arg(long, default_value_t = 11)]
    negatives: usize,
    #[arg(long, default_value_t = 3)]
    epochs: usize,
    #[arg(long, default_value_t = 6)]
    min_count: u64,
    #[arg(long, default_value_t = 0.75)]
    noise_exponent: f64,
    #[arg(long, default_value_t = 64)]
    char_dim: usize,
    #[arg(long, default_value_t = 256)]
    lstm_dim: usize,
    #[arg(long, default_value_t = 256)]
    word_dim: usize,
    /// Attention inner size [default: word-dim]
    #[arg(long)]
    attn_dim: Option<usize>,
    /// Adam step size for the character stage.
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    adam_eps: f64,
    /// Initial SGD step of the word-level stage.
    #[arg(long, default_value_t = 0.025)]
    sgns_lr: f64,
    /// Target positions per Adam step.
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Keep updating the pretrained context table in the character stage.
    #[arg(long)]
    trainable_context: bool,
    /// Pairs per loss-trace row.
    #[arg(long, default_value_t = 100_000)]
    trace_every: u64,
}

#[derive(Args, Debug)]
struct SegmentArgs {
    #[arg(long)]
    model: PathBuf,
    /// Words to segment.
    #[arg(long = "word")]
    words: Vec<String>,
    /// File with one word per line.
    #[arg(long)]
    word_list: Option<PathBuf>,
    /// Gold segmentations (`word<TAB>morph|morph`); adds MAP rows.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Seeds averaged for the random and Porter baselines.
    #[arg(long, default_value_t = BASELINE_SEEDS)]
    seeds: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct EvalSimArgs {
    #[arg(long)]
    model: PathBuf,
    /// Similarity datasets (`word1<TAB>word2<TAB>score`).
    #[arg(long = "dataset", required = true)]
    datasets: Vec<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct EvalAnalogyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Section map (`section<TAB>semantic|syntactic`) [default: gram* sections are syntactic]
    #[arg(long)]
    sections: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct NnArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "word", required = true)]
    words: Vec<String>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Only neighbours seen at least this many times.
    #[arg(long)]
    min_freq: Option<u64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Config => 1,
                ErrorClass::Data => 2,
                ErrorClass::Numerical => 3,
            })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::BuildVocab(a) => build_vocab(a),
        Command::Train(a) => cmd_train(a),
        Command::Segment(a) => with_workers(a.workers, || segment(a)),
        Command::EvalSim(a) => with_workers(a.workers, || eval_sim(a)),
        Command::EvalAnalogy(a) => with_workers(a.workers, || eval_analogy_cmd(a)),
        Command::Nn(a) => with_workers(a.workers, || nn(a)),
        Command::ExportVectors(a) => export(a),
    }
}

/// Runs `f` on a thread pool of `workers` threads.
fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if workers == 0 {
        return Err(Error::Config("--workers must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?
        .install(f)
}

/// `path` itself when it exists, else the same relative path under the data
/// directory when that exists.
fn resolve(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
        let candidate = Path::new(&dir).join(path);
        if candidate.exists() {
            return candidate;
        }
    }
    path.to_path_buf()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn io_err(path: Option<&Path>) -> impl Fn(io::Error) -> Error + '_ {
    move |e| Error::io(path.unwrap_or(Path::new("<stdout>")), e)
}

/// Writes TSV rows to the chosen destination, aligned when `pretty`.
fn emit(output: &Output, rows: &[Vec<String>]) -> Result<()> {
    let text = if output.pretty {
        align(rows)
    } else {
        rows.iter().map(|r| r.join("\t") + "\n").collect()
    };
    match &output.out {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(text.as_bytes()).map_err(io_err(Some(path)))?;
            w.flush().map_err(io_err(Some(path)))
        }
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(io_err(None)),
    }
}

fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:<width$}", width = widths[c]))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn split_row(line: &str) -> Vec<String> {
    line.split('\t').map(str::to_string).collect()
}

fn build_vocab(a: BuildVocabArgs) -> Result<()> {
    if a.min_count < 1 {
        return Err(Error::Config("--min-count must be >= 1".into()));
    }
    let corpus = Corpus::read(&resolve(&a.corpus))?;
    let vocab = Vocab::build(corpus.tokens(), a.min_count)?;
    match &a.out {
        Some(path) => {
            let mut w = create(path)?;
            vocab.write_tsv(&mut w).map_err(io_err(Some(path)))?;
            w.flush().map_err(io_err(Some(path)))
        }
        None => vocab.write_tsv(io::stdout().lock()).map_err(io_err(None)),
    }
}

/// Staged progress on standard error.
struct StderrProgress {
    epochs: usize,
}

impl Progress for StderrProgress {
    fn stage_started(&mut self, stage: Stage, pairs_per_epoch: u64) {
        let label = match stage {
            Stage::Sgns => "stage 1: word-level skip-gram",
            Stage::Char => "stage 2: character encoder",
        };
        eprintln!("{label} ({pairs_per_epoch} pairs per epoch)");
    }

    fn epoch_finished(&mut self, stage: Stage, epoch: usize, mean_loss: f64) {
        eprintln!(
            "  {} epoch {}/{}: mean loss {mean_loss:.4}",
            stage.name(),
            epoch + 1,
            self.epochs
        );
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let config = TrainConfig {
        kind: a.model,
        window: a.window,
        negatives: a.negatives,
        epochs: a.epochs,
        min_count: a.min_count,
        noise_exponent: a.noise_exponent,
        char_dim: a.char_dim,
        lstm_dim: a.lstm_dim,
        word_dim: a.word_dim,
        attn_dim: a.attn_dim,
        adam: AdamConfig {
            lr: a.lr,
            beta1: a.beta1,
            beta2: a.beta2,
            eps: a.adam_eps,
        },
        sgns_lr: a.sgns_lr,
        batch_size: a.batch_size,
        seed: a.seed,
        workers: a.workers,
        freeze_context: !a.trainable_context,
        trace_every: a.trace_every,
        nan_dump: Some(
            a.nan_dump
                .clone()
                .unwrap_or_else(|| with_suffix(&a.out, ".diverged")),
        ),
    };
    config.validate()?;
    let corpus = Corpus::read(&resolve(&a.corpus))?;
    let mut progress = StderrProgress {
        epochs: config.epochs,
    };
    let out = train(&config, &corpus, &mut progress)?;

    save_model(&out.model, &a.out)?;
    let trace_path = a.trace.unwrap_or_else(|| with_suffix(&a.out, ".trace.tsv"));
    let mut w = create(&trace_path)?;
    out.trace
        .write_tsv(&mut w)
        .map_err(io_err(Some(&trace_path)))?;
    w.flush().map_err(io_err(Some(&trace_path)))?;
    println!("model\t{}", a.out.display());
    println!("trace\t{}", trace_path.display());
    println!("sha256\t{}", checksum_hex(&out.model)?);
    Ok(())
}

fn require_attention(model: &Model) -> Result<()> {
    if model.kind() == ModelKind::Char2vec {
        Ok(())
    } else {
        Err(Error::Unsupported {
            what: "segmentation",
            detail: format!(
                "only char2vec models rank boundaries by attention; this model is {}",
                model.kind()
            ),
        })
    }
}

fn read_word_list(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

fn segment(a: SegmentArgs) -> Result<()> {
    let model = load_model(&resolve(&a.model))?;
    require_attention(&model)?;
    let mut words = a.words.clone();
    if let Some(path) = &a.word_list {
        words.extend(read_word_list(&resolve(path))?);
    }
    let gold = a
        .gold
        .as_ref()
        .map(|p| load_gold(&resolve(p)))
        .transpose()?;
    if words.is_empty() && gold.is_none() {
        return Err(Error::Config("give --word, --word-list or --gold".into()));
    }

    let mut rows = Vec::new();
    if !words.is_empty() {
        rows.push(split_row("word\tsplit\tboundary_mass\tranking"));
    }
    for word in &words {
        if word.chars().count() < 2 {
            rows.push(vec![
                word.clone(),
                "-".into(),
                "0".into(),
                "unsegmentable".into(),
            ]);
            continue;
        }
        let ranking = boundary_weights(&model, word)?;
        let mass: f64 = ranking.entries.iter().map(|e| e.1).sum();
        let ranked: Vec<String> = ranking
            .entries
            .iter()
            .map(|(p, w)| format!("{p}:{w:.4}"))
            .collect();
        rows.push(vec![
            word.clone(),
            ranking.top_split(),
            format!("{mass:.4}"),
            ranked.join(","),
        ]);
    }

    if let Some(lexicon) = &gold {
        if !words.is_empty() {
            rows.push(Vec::new());
        }
        rows.push(split_row("method\tscope\tmap\tstd\tn_words"));
        let learned = map_score(|w| boundary_weights(&model, w), lexicon)?;
        let random = baseline_map(random_ranker, lexicon, a.seeds)?;
        let porter = baseline_map(porter_ranker, lexicon, a.seeds)?;
        let fmt_row = |method: &str, scope: &str, map: f64, std: Option<f64>, n: usize| {
            vec![
                method.to_string(),
                scope.to_string(),
                format!("{map:.6}"),
                std.map_or_else(|| "NA".to_string(), |s| format!("{s:.6}")),
                n.to_string(),
            ]
        };
        rows.push(fmt_row(
            "char2vec",
            "all",
            learned.all.map,
            None,
            learned.all.n_words,
        ));
        if let Some(r) = learned.rich {
            rows.push(fmt_row("char2vec", "rich", r.map, None, r.n_words));
        }
        for (name, rep) in [("random", random), ("porter", porter)] {
            rows.push(fmt_row(
                name,
                "all",
                rep.all.mean,
                Some(rep.all.std),
                rep.all.n_words,
            ));
            if let Some(r) = rep.rich {
                rows.push(fmt_row(name, "rich", r.mean, Some(r.std), r.n_words));
            }
        }
    }
    emit(&a.output, &rows)
}

fn eval_sim(a: EvalSimArgs) -> Result<()> {
    let model = load_model(&resolve(&a.model))?;
    let mut rows = vec![split_row(SimilarityReport::TSV_HEADER)];
    for path in &a.datasets {
        let dataset = load_similarity(&resolve(path))?;
        rows.push(split_row(&eval_similarity(&model, &dataset)?.tsv_row()));
    }
    emit(&a.output, &rows)
}

fn eval_analogy_cmd(a: EvalAnalogyArgs) -> Result<()> {
    let model = load_model(&resolve(&a.model))?;
    let kinds = a
        .sections
        .as_ref()
        .map(|p| load_sidecar(&resolve(p)))
        .transpose()?;
    let dataset = load_analogies(&resolve(&a.dataset), kinds.as_ref())?;
    let report = eval_analogy(&model, &dataset)?;
    let mut buf = Vec::new();
    report.write_tsv(&mut buf).expect("writing to memory");
    let rows: Vec<Vec<String>> = String::from_utf8(buf)
        .expect("utf-8 report")
        .lines()
        .map(split_row)
        .collect();
    emit(&a.output, &rows)
}

fn nn(a: NnArgs) -> Result<()> {
    let model = load_model(&resolve(&a.model))?;
    let mut rows = vec![split_row("query\trank\tneighbor\tcosine\tcount")];
    for word in &a.words {
        for (rank, n) in nearest_neighbors(&model, word, a.k, a.min_freq)?
            .iter()
            .enumerate()
        {
            rows.push(vec![
                word.clone(),
                (rank + 1).to_string(),
                n.word.clone(),
                format!("{:.6}", n.cosine),
                n.count.to_string(),
            ]);
        }
    }
    emit(&a.output, &rows)
}

fn export(a: ExportArgs) -> Result<()> {
    let model = load_model(&resolve(&a.model))?;
    let mut w = create(&a.out)?;
    write_text_vectors(&model, &mut w).map_err(io_err(Some(&a.out)))?;
    w.flush().map_err(io_err(Some(&a.out)))
}
