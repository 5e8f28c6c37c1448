mod config;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use metron::corpus::{
    generate_synthetic, generate_word_stress, load_corpus, save_corpus, Corpus, Foot, Language, MeterSpec,
    StressPattern, WordStressSpec,
};
use metron::encoding::encode;
use metron::eval::{
    aggregate, cross_validate, histogram_csv, score_line, syllable_length_stats, welch_t_test, EvalReport,
};
use metron::neural::activations_csv;
use metron::phonology::syllabify;
use metron::system::{load_model, save_model, train_system, Family, SystemConfig};
use serde::Serialize;

use config::{apply_overrides, resolve_seed, ModelArgs};

#[derive(Parser)]
#[command(
    name = "metron",
    version,
    about = "Stress scansion of English and Spanish verse"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on an annotated corpus and write a model file.
    Train {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Annotate a corpus with predicted stress (adds a "pred" field).
    Predict {
        #[arg(long)]
        model_file: PathBuf,
        /// Fail unless the model file holds this family.
        #[arg(long = "model")]
        family: Option<Family>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Score a trained model against a gold corpus.
    Evaluate {
        #[arg(long)]
        model_file: PathBuf,
        /// Fail unless the model file holds this family.
        #[arg(long = "model")]
        family: Option<Family>,
        #[arg(long)]
        input: PathBuf,
    },
    /// K-fold cross-validation, optionally against a second configuration.
    Cv {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// Second configuration as key=value pairs, e.g. `model=crf,features=basic10`.
        #[arg(long)]
        compare: Option<String>,
        /// Also write the report JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write per-fold accuracies as CSV.
        #[arg(long)]
        fold_csv: Option<PathBuf>,
    },
    /// Split words read from standard input (one per line) into syllables.
    Syllabify {
        #[arg(long, default_value = "en")]
        lang: Language,
    },
    /// Histogram of syllables per word as CSV.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Welch's two-sample t-test on comma-separated numbers or files of numbers.
    Ttest {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Write the BiLSTM-CRF output-layer scores for one line as CSV.
    DumpActivations {
        #[arg(long)]
        model_file: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Line id; defaults to the first line.
        #[arg(long)]
        line: Option<String>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Generate a synthetic corpus.
    Generate {
        /// meter (English metrical lines) or word-stress (Spanish-like words).
        #[arg(long, default_value = "meter")]
        kind: String,
        #[arg(long, default_value = "iamb")]
        foot: Foot,
        #[arg(long, default_value_t = 5)]
        feet: usize,
        /// Drop this many leading syllables of the pattern.
        #[arg(long, default_value_t = 0)]
        headless: usize,
        #[arg(long, default_value_t = 500)]
        lines: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, short)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ERROR: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

#[derive(Serialize)]
struct TrainReport<'a> {
    config: &'a SystemConfig,
    seed: u64,
    family: &'a str,
    epochs: usize,
    objective: Option<f64>,
    last_epoch_errors: Option<usize>,
    lines: usize,
    wall_seconds: f64,
}

fn cmd_train(args: &ModelArgs, corpus: &Path, output: &Path) -> Result<()> {
    let config = args.to_config()?;
    let seed = resolve_seed(args.seed)?;
    let corpus = load_corpus(corpus)?;
    let start = Instant::now();
    let (model, summary) = train_system(&config, &corpus.lines, seed)?;
    save_model(&model, output)?;
    print_json(&TrainReport {
        config: &config,
        seed,
        family: &summary.family,
        epochs: summary.epochs,
        objective: summary.objective,
        last_epoch_errors: summary.last_epoch_errors,
        lines: corpus.len(),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn cmd_predict(model_file: &Path, family: Option<Family>, input: &Path, output: &Path) -> Result<()> {
    let model = load_model(model_file, family)?;
    let corpus = load_corpus(input)?;
    if corpus.language != model.language {
        eprintln!(
            "WARNING: model was trained on {} but the corpus is {}",
            model.language.code(),
            corpus.language.code()
        );
    }
    let mut out = String::new();
    for line in &corpus.lines {
        let pred = model.predict(line)?;
        let mut record = line.to_record();
        record.pred = Some(StressPattern(pred).to_string());
        out.push_str(&serde_json::to_string(&record)?);
        out.push('\n');
    }
    write_file(output, &out)
}

fn cmd_evaluate(model_file: &Path, family: Option<Family>, input: &Path) -> Result<()> {
    let model = load_model(model_file, family)?;
    let corpus = load_corpus(input)?;
    let scores = corpus
        .lines
        .iter()
        .map(|line| score_line(&line.id, &model.predict(line)?, &line.gold))
        .collect::<metron::Result<Vec<_>>>()?;
    print_json(&aggregate(&scores)?)
}

#[derive(Serialize)]
struct Comparison {
    a: Labeled,
    b: Labeled,
    /// Absent when both samples have zero variance.
    ttest: Option<metron::eval::WelchResult>,
}

#[derive(Serialize)]
struct Labeled {
    system: String,
    report: EvalReport,
}

fn fold_rows(label: &str, report: &EvalReport, out: &mut String) {
    for f in &report.per_fold {
        out.push_str(&format!(
            "{label},{},{},{},{}\n",
            f.fold, f.lines, f.per_syllable_accuracy, f.per_line_accuracy
        ));
    }
}

fn cmd_cv(
    args: &ModelArgs,
    corpus: &Path,
    folds: usize,
    compare: Option<&str>,
    report_path: Option<&Path>,
    fold_csv: Option<&Path>,
) -> Result<()> {
    let config = args.to_config()?;
    let other = compare.map(|spec| apply_overrides(&config, spec)).transpose()?;
    let seed = resolve_seed(args.seed)?;
    let corpus = load_corpus(corpus)?;
    let report = cross_validate(&corpus, &config, folds, seed)?;
    let mut csv = String::from("system,fold,lines,per_syllable,per_line\n");
    fold_rows(&config.describe(), &report, &mut csv);
    let json = match other {
        None => serde_json::to_string_pretty(&report)?,
        Some(other) => {
            let second = cross_validate(&corpus, &other, folds, seed)?;
            fold_rows(&other.describe(), &second, &mut csv);
            let sample = |r: &EvalReport| {
                r.per_fold
                    .iter()
                    .map(|f| f.per_syllable_accuracy)
                    .collect::<Vec<_>>()
            };
            let ttest = match welch_t_test(&sample(&report), &sample(&second)) {
                Ok(t) => {
                    eprintln!(
                        "t-test ({} vs {}): t = {:.4}, df = {:.2}, p = {:.4}",
                        config.describe(),
                        other.describe(),
                        t.t,
                        t.df,
                        t.p
                    );
                    Some(t)
                }
                Err(e) => {
                    eprintln!("WARNING: t-test undefined: {e}");
                    None
                }
            };
            serde_json::to_string_pretty(&Comparison {
                a: Labeled {
                    system: config.describe(),
                    report,
                },
                b: Labeled {
                    system: other.describe(),
                    report: second,
                },
                ttest,
            })?
        }
    };
    println!("{json}");
    if let Some(path) = report_path {
        write_file(path, &format!("{json}\n"))?;
    }
    if let Some(path) = fold_csv {
        write_file(path, &csv)?;
    }
    Ok(())
}

fn cmd_syllabify(lang: Language) -> Result<()> {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for line in stdin.lock().lines() {
        let line = line?;
        let word = line.trim();
        if word.is_empty() {
            writeln!(out)?;
            continue;
        }
        writeln!(out, "{}", syllabify(word, lang)?.join("·"))?;
    }
    Ok(())
}

fn cmd_stats(corpus: &Path, output: Option<&Path>) -> Result<()> {
    let corpus = load_corpus(corpus)?;
    let csv = histogram_csv(&syllable_length_stats(&corpus));
    match output {
        Some(path) => write_file(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn parse_sample(spec: &str) -> Result<Vec<f64>> {
    let text = if Path::new(spec).is_file() {
        std::fs::read_to_string(spec).with_context(|| format!("cannot read {spec}"))?
    } else {
        spec.to_string()
    };
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("not a number: {s:?}")))
        .collect()
}

fn cmd_dump(model_file: &Path, input: &Path, line_id: Option<&str>, output: &Path) -> Result<()> {
    let model = load_model(model_file, Some(Family::BilstmCrf))?;
    let metron::system::TrainedModel::BilstmCrf(network) = &model.model else {
        bail!("model file does not hold a bilstm-crf model");
    };
    let corpus = load_corpus(input)?;
    let line = match line_id {
        Some(id) => corpus
            .lines
            .iter()
            .find(|l| l.id == id)
            .with_context(|| format!("no line with id {id:?}"))?,
        None => corpus.lines.first().context("corpus is empty")?,
    };
    let seq = encode(line, model.mode, 0)?;
    write_file(output, &activations_csv(network, &seq.observations)?)
}

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    kind: &str,
    foot: Foot,
    feet: usize,
    headless: usize,
    lines: usize,
    noise: f64,
    seed: Option<u64>,
    output: &Path,
) -> Result<()> {
    let seed = resolve_seed(seed)?;
    let corpus: Corpus = match kind {
        "meter" => {
            let meter = MeterSpec {
                headless,
                ..MeterSpec::new(foot, feet)
            };
            generate_synthetic(meter, lines, noise, seed)?
        }
        "word-stress" => generate_word_stress(WordStressSpec {
            n_lines: lines,
            noise,
            seed,
            ..WordStressSpec::default()
        })?,
        other => bail!("unknown corpus kind `{other}` (expected meter or word-stress)"),
    };
    save_corpus(&corpus, output)?;
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train {
            model,
            corpus,
            output,
        } => cmd_train(&model, &corpus, &output),
        Command::Predict {
            model_file,
            family,
            input,
            output,
        } => cmd_predict(&model_file, family, &input, &output),
        Command::Evaluate {
            model_file,
            family,
            input,
        } => cmd_evaluate(&model_file, family, &input),
        Command::Cv {
            model,
            corpus,
            folds,
            compare,
            report,
            fold_csv,
        } => cmd_cv(
            &model,
            &corpus,
            folds,
            compare.as_deref(),
            report.as_deref(),
            fold_csv.as_deref(),
        ),
        Command::Syllabify { lang } => cmd_syllabify(lang),
        Command::Stats { corpus, output } => cmd_stats(&corpus, output.as_deref()),
        Command::Ttest { a, b } => {
            let r = welch_t_test(&parse_sample(&a)?, &parse_sample(&b)?)?;
            let summary: BTreeMap<&str, f64> = [("t", r.t), ("df", r.df), ("p", r.p)].into_iter().collect();
            print_json(&summary)
        }
        Command::DumpActivations {
            model_file,
            input,
            line,
            output,
        } => cmd_dump(&model_file, &input, line.as_deref(), &output),
        Command::Generate {
            kind,
            foot,
            feet,
            headless,
            lines,
            noise,
            seed,
            output,
        } => cmd_generate(&kind, foot, feet, headless, lines, noise, seed, &output),
    }
}
