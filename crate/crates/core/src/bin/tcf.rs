use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tcf_core::analysis::{correlations, value_distributions, write_distributions, LanguageFilter};
use tcf_core::baselines::{Distance, FreqModel, KnnModel};
use tcf_core::binarize::binarize;
use tcf_core::config::Settings;
use tcf_core::embeddings::{
    lm_grad_check, train_char_lm, CharLmConfig, Corpus, GradCheckConfig, LanguageEmbeddingTable,
};
use tcf_core::eval::{predict_pairs, score, write_confusion, EvalReport};
use tcf_core::harness::{read_records, run_plan, summarize, write_records, write_summary};
use tcf_core::kb::{
    filter_kb, load_long, load_wals_wide, save_long, FeatureAreas, FilterThresholds, TypologicalKb,
};
use tcf_core::model::{self, load_model, save_model};
use tcf_core::split::{make_branch_split, validate_split, Pair, SplitResult, SplitSpec};
use tcf_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "tcf",
    version,
    about = "Typological feature prediction by logistic matrix factorization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

macro_rules! settings_args {
    ($($key:ident),* $(,)?) => {
        /// Model and experiment settings. Flags override the config file.
        #[derive(Args, Debug, Default)]
        struct SettingsArgs {
            /// File of `key = value` settings
            #[arg(long)]
            config: Option<PathBuf>,
            $(
                #[arg(long = stringify!($key), value_name = "VALUE", hide_short_help = true)]
                $key: Option<String>,
            )*
        }

        impl SettingsArgs {
            fn resolve(&self) -> Result<Settings> {
                let mut s = Settings::default();
                if let Some(p) = &self.config {
                    s.apply_file(p)?;
                }
                $(
                    if let Some(v) = &self.$key {
                        s.set(stringify!($key), v)?;
                    }
                )*
                Ok(s)
            }
        }
    };
}

settings_args!(
    epochs,
    batch_size,
    l2_weight,
    learning_rate,
    adam_beta1,
    adam_beta2,
    adam_epsilon,
    dim,
    mode,
    regularize,
    bias,
    init_std,
    prior_center,
    seed,
    branches,
    fractions,
    repeats,
    systems,
    eval_fraction,
    threads,
    knn_k,
    knn_distance,
    semisup_mode,
);

#[derive(Clone, Copy, ValueEnum)]
enum BaselineKind {
    Freq,
    Knn,
}

#[derive(Clone, Copy, ValueEnum)]
enum GradTarget {
    Mf,
    Lm,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a WALS wide export (language.csv) to the long KB format
    Ingest {
        #[arg(long)]
        languages: PathBuf,
        /// `feature_id<TAB>area` lines
        #[arg(long)]
        areas: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Drop rare values, sparse languages and small genera
    Filter {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        min_value_count: usize,
        #[arg(long, default_value_t = 10)]
        min_features_per_language: usize,
        #[arg(long, default_value_t = 4)]
        min_branch_size: usize,
    },
    /// Write the binarized matrix as a debug table
    Binarize {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a held-out-branch split
    Split {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        branch: String,
        #[arg(long, default_value_t = 0.0)]
        fraction: f64,
        #[arg(long, default_value_t = 0.8)]
        eval_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on a split's training cells
    Train {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        split: PathBuf,
        /// Language embedding table for the external modes
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch `epoch<TAB>loss` file
        #[arg(long)]
        loss_trace: Option<PathBuf>,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Decode predictions for a split's evaluation cells, or every unobserved cell
    Predict {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions on a split's evaluation cells
    Evaluate {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Debug confusion counts
        #[arg(long)]
        confusion: Option<PathBuf>,
    },
    /// Run the branch x fraction x repeat grid
    Experiment {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Append wall-clock seconds to every record
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Aggregate run records into mean, sd and 95% intervals
    Summarize {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict a split's evaluation cells with a baseline
    Baseline {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long, value_enum)]
        system: BaselineKind,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value = "cosine")]
        distance: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train language embeddings with the character language model
    EmbedTrain {
        /// Directory of `<language_id>.txt` files
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Dev perplexity per epoch
        #[arg(long)]
        dev_trace: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        char_dim: usize,
        #[arg(long, default_value_t = 8)]
        lang_dim: usize,
        #[arg(long, default_value_t = 32)]
        hidden: usize,
        #[arg(long, default_value_t = 2)]
        layers: usize,
        #[arg(long, default_value_t = 0.005)]
        learning_rate: f64,
        #[arg(long, default_value_t = 30)]
        max_epochs: usize,
        #[arg(long, default_value_t = 3)]
        patience: usize,
        #[arg(long, default_value_t = 64)]
        bptt: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Validate an embedding table and rewrite it in canonical form
    EmbedImport {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pairwise-complete correlations between binary columns
    ExportCorrelations {
        #[arg(long)]
        kb: PathBuf,
        /// Comma-separated column labels such as `81A:2,85A:1`; all columns if omitted
        #[arg(long)]
        columns: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Value counts and shares within a genus or family
    ExportDistributions {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long, conflicts_with = "family")]
        genus: Option<String>,
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check analytic gradients against finite differences
    Gradcheck {
        #[arg(long, value_enum, default_value = "both")]
        target: GradTarget,
        #[arg(long, default_value_t = 10)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn read_kb(path: &Path) -> Result<TypologicalKb> {
    load_long(open(path)?)
}

fn read_table(path: &Path) -> Result<LanguageEmbeddingTable> {
    LanguageEmbeddingTable::import(open(path)?)
}

fn read_split(path: &Path) -> Result<SplitResult> {
    SplitResult::read(open(path)?)
}

fn write_predictions(preds: &std::collections::BTreeMap<Pair, u32>, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "language\tfeature\tvalue")?;
    for ((l, f), v) in preds {
        writeln!(out, "{l}\t{f}\t{v}")?;
    }
    out.flush()?;
    Ok(())
}

fn read_predictions(path: &Path) -> Result<std::collections::BTreeMap<Pair, u32>> {
    let mut preds = std::collections::BTreeMap::new();
    for (n, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if n == 0 && line.starts_with("language\t") || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(Error::parse(
                Some(n + 1),
                None,
                "expected language<TAB>feature<TAB>value",
            ));
        }
        let v = f[2].parse().map_err(|_| {
            Error::parse(
                Some(n + 1),
                Some("value"),
                format!("'{}' is not a value id", f[2]),
            )
        })?;
        preds.insert((f[0].to_owned(), f[1].to_owned()), v);
    }
    Ok(preds)
}

fn check_split(kb: &TypologicalKb, split: &SplitResult) -> Result<()> {
    let violations = validate_split(kb, &binarize(kb), split);
    match violations.first() {
        None => Ok(()),
        Some(v) => Err(Error::Integrity(format!("split does not match KB: {v}"))),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest {
            languages,
            areas,
            out,
        } => {
            let areas = match areas {
                Some(p) => FeatureAreas::parse(open(&p)?)?,
                None => FeatureAreas::default(),
            };
            let kb = load_wals_wide(open(&languages)?, &areas)?;
            let mut w = create(&out)?;
            save_long(&kb, &mut w)?;
            w.flush()?;
            eprintln!(
                "{} languages, {} features, {} cells",
                kb.languages().len(),
                kb.features().len(),
                kb.n_cells()
            );
        }
        Command::Filter {
            kb,
            out,
            min_value_count,
            min_features_per_language,
            min_branch_size,
        } => {
            let kb = read_kb(&kb)?;
            let t = FilterThresholds {
                min_value_count,
                min_features_per_language,
                min_branch_size,
            };
            let f = filter_kb(&kb, t);
            let mut w = create(&out)?;
            save_long(&f, &mut w)?;
            w.flush()?;
            eprintln!(
                "kept {} of {} languages, {} of {} features, {} genera",
                f.languages().len(),
                kb.languages().len(),
                f.features().len(),
                kb.features().len(),
                f.genera().len()
            );
        }
        Command::Binarize { kb, out } => {
            let m = binarize(&read_kb(&kb)?);
            let mut w = create(&out)?;
            m.write_debug(&mut w)?;
            w.flush()?;
        }
        Command::Split {
            kb,
            branch,
            fraction,
            eval_fraction,
            seed,
            out,
        } => {
            let kb = read_kb(&kb)?;
            let mut spec = SplitSpec::new(branch, fraction, seed);
            spec.eval_fraction = eval_fraction;
            let split = make_branch_split(&kb, &spec)?;
            check_split(&kb, &split)?;
            let mut w = create(&out)?;
            split.write(&mut w)?;
            w.flush()?;
            eprintln!(
                "{} train pairs, {} eval pairs",
                split.train.len(),
                split.eval.len()
            );
        }
        Command::Train {
            kb,
            split,
            embeddings,
            out,
            loss_trace,
            settings,
        } => {
            let cfg = settings.resolve()?.systems.train;
            let kb = read_kb(&kb)?;
            let split = read_split(&split)?;
            check_split(&kb, &split)?;
            let table = embeddings.as_deref().map(read_table).transpose()?;
            let m = binarize(&kb);
            let trained = model::train(&m, &split, &cfg, table.as_ref())?;
            let mut w = create(&out)?;
            save_model(&trained.params, &mut w)?;
            w.flush()?;
            if let Some(p) = loss_trace {
                let mut w = create(&p)?;
                trained.write_loss_trace(&mut w)?;
                w.flush()?;
            }
        }
        Command::Predict {
            kb,
            model,
            split,
            out,
        } => {
            let kb = read_kb(&kb)?;
            let m = binarize(&kb);
            let params = load_model(open(&model)?)?;
            params.check_compatible(&m)?;
            let pairs: BTreeSet<Pair> = match split {
                Some(p) => read_split(&p)?.eval,
                None => {
                    let mut all = BTreeSet::new();
                    for l in kb.languages() {
                        for f in kb.features() {
                            if kb.value(&l.id, &f.id).is_none() {
                                all.insert((l.id.clone(), f.id.clone()));
                            }
                        }
                    }
                    all
                }
            };
            write_predictions(&predict_pairs(&params, &m, &pairs)?, &out)?;
        }
        Command::Evaluate {
            kb,
            predictions,
            split,
            out,
            confusion,
        } => {
            let kb = read_kb(&kb)?;
            let split = read_split(&split)?;
            let preds = read_predictions(&predictions)?;
            let report = score(&preds, &split.eval, &kb)?;
            let text = format!("{}\n{}\n", EvalReport::TSV_HEADER, report.tsv_row());
            match out {
                Some(p) => {
                    let mut w = create(&p)?;
                    w.write_all(text.as_bytes())?;
                    w.flush()?;
                }
                None => print!("{text}"),
            }
            if let Some(p) = confusion {
                let mut w = create(&p)?;
                write_confusion(&preds, &split.eval, &kb, &mut w)?;
                w.flush()?;
            }
        }
        Command::Experiment {
            kb,
            embeddings,
            out,
            timing,
            settings,
        } => {
            let s = settings.resolve()?;
            let kb = read_kb(&kb)?;
            let table = embeddings.as_deref().map(read_table).transpose()?;
            let records = run_plan(&kb, &s.plan, &s.systems, table.as_ref())?;
            let mut w = create(&out)?;
            write_records(&records, timing, &mut w)?;
            w.flush()?;
            let failed = records.iter().filter(|r| r.outcome.is_err()).count();
            eprintln!("{} runs, {failed} failed", records.len());
        }
        Command::Summarize { records, out } => {
            let rows = read_records(open(&records)?)?;
            let summary = summarize(&rows);
            match out {
                Some(p) => {
                    let mut w = create(&p)?;
                    write_summary(&summary, &mut w)?;
                    w.flush()?;
                }
                None => write_summary(&summary, io::stdout().lock())?,
            }
        }
        Command::Baseline {
            kb,
            split,
            system,
            embeddings,
            k,
            distance,
            out,
        } => {
            let kb = read_kb(&kb)?;
            let split = read_split(&split)?;
            check_split(&kb, &split)?;
            let train = split.train.iter().map(|(l, f)| (l.as_str(), f.as_str()));
            let preds = match system {
                BaselineKind::Freq => {
                    let m = FreqModel::fit(&kb, train)?;
                    split
                        .eval
                        .iter()
                        .filter_map(|p| m.predict(&p.0, &p.1).ok().map(|v| (p.clone(), v)))
                        .collect()
                }
                BaselineKind::Knn => {
                    let path = embeddings.ok_or_else(|| {
                        Error::InvalidArgument("the knn baseline needs --embeddings".into())
                    })?;
                    let distance: Distance = distance.parse()?;
                    let m = KnnModel::fit(read_table(&path)?, &kb, train, k, distance)?;
                    split
                        .eval
                        .iter()
                        .filter_map(|p| m.predict(&p.0, &p.1).ok().map(|v| (p.clone(), v)))
                        .collect()
                }
            };
            write_predictions(&preds, &out)?;
        }
        Command::EmbedTrain {
            corpus,
            out,
            dev_trace,
            char_dim,
            lang_dim,
            hidden,
            layers,
            learning_rate,
            max_epochs,
            patience,
            bptt,
            seed,
        } => {
            let cfg = CharLmConfig {
                char_emb_dim: char_dim,
                lang_emb_dim: lang_dim,
                hidden_dim: hidden,
                layers,
                learning_rate,
                max_epochs,
                patience,
                bptt,
                seed,
                ..CharLmConfig::default()
            };
            let run = train_char_lm(&Corpus::from_dir(&corpus)?, &cfg)?;
            let mut w = create(&out)?;
            run.table.export(&mut w)?;
            w.flush()?;
            if let Some(p) = dev_trace {
                let mut w = create(&p)?;
                writeln!(w, "epoch\tdev_perplexity")?;
                for (e, ppl) in run.dev_perplexity.iter().enumerate() {
                    writeln!(w, "{e}\t{ppl:.6}")?;
                }
                w.flush()?;
            }
            eprintln!("best epoch {}", run.best_epoch);
        }
        Command::EmbedImport { input, out } => {
            let t = read_table(&input)?;
            let mut w = create(&out)?;
            t.export(&mut w)?;
            w.flush()?;
            eprintln!("{} languages, dimension {}", t.len(), t.dim());
        }
        Command::ExportCorrelations { kb, columns, out } => {
            let m = binarize(&read_kb(&kb)?);
            let labels: Vec<String> = match columns {
                Some(c) => c
                    .split(',')
                    .map(|s| s.trim().to_owned())
                    .filter(|s| !s.is_empty())
                    .collect(),
                None => m.column_labels(),
            };
            let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
            let c = correlations(&m, &refs)?;
            let mut w = create(&out)?;
            c.write_tsv(&mut w)?;
            w.flush()?;
        }
        Command::ExportDistributions {
            kb,
            genus,
            family,
            out,
        } => {
            let filter = match (genus, family) {
                (Some(g), None) => LanguageFilter::Genus(g),
                (None, Some(f)) => LanguageFilter::Family(f),
                _ => {
                    return Err(Error::InvalidArgument(
                        "give exactly one of --genus or --family".into(),
                    ))
                }
            };
            let rows = value_distributions(&read_kb(&kb)?, &filter)?;
            let mut w = create(&out)?;
            write_distributions(&rows, &mut w)?;
            w.flush()?;
        }
        Command::Gradcheck {
            target,
            instances,
            seed,
        } => {
            if matches!(target, GradTarget::Mf | GradTarget::Both) {
                let worst = (0..instances as u64)
                    .map(|i| model::mf_grad_check(seed.wrapping_add(i)))
                    .fold(0.0, f64::max);
                println!("mf\tinstances={instances}\tmax_relative_error={worst:e}");
            }
            if matches!(target, GradTarget::Lm | GradTarget::Both) {
                let worst = lm_grad_check(&GradCheckConfig {
                    seed,
                    ..GradCheckConfig::default()
                })?;
                println!("lm\tmax_relative_error={worst:e}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace(['\t', '\n'], " ");
            eprintln!("error\t{}\t{msg}", e.kind());
            ExitCode::FAILURE
        }
    }
}
