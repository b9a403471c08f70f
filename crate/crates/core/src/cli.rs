//! Command-line front end. Every subcommand writes its report to the given
//! writer; files are written atomically so a failing command leaves no
//! partial output behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::autodiff::{grad_check, GradCheck};
use crate::baseline::{classical_param_count, cosine_similarity};
use crate::encoding::{encode, fidelity, log_fidelity, EncoderConfig, DEFAULT_EPS};
use crate::error::{Error, Result};
use crate::eval::{evaluate, RelevanceJudgments, DEFAULT_K};
use crate::head::{param_count, HeadConfig};
use crate::model::{Embedded, HeadKind, Model, ModelShape, DEFAULT_TAU, DEFAULT_TEMPERATURE};
use crate::oracle::oracle_check;
use crate::persist::{load_model, save_model};
use crate::store::{write_string_atomic, EmbeddingStore};
use crate::synth::{gen_synth, SynthConfig};
use crate::training::{history_jsonl, load_samples, save_samples, train, BatchObjective, TrainConfig};

/// Tolerance used by `oraclecheck`.
pub const ORACLE_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "qproj", version, about = "Quantum-inspired embedding projection heads")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HeadArg {
    Quantum,
    Classical,
    None,
}

impl From<HeadArg> for HeadKind {
    fn from(h: HeadArg) -> Self {
        match h {
            HeadArg::Quantum => HeadKind::Quantum,
            HeadArg::Classical => HeadKind::Classical,
            HeadArg::None => HeadKind::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Binary,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump the polar angles of every encoded vector as JSONL.
    Encode {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fidelity, log-fidelity and cosine similarity of two stored vectors.
    Similarity {
        #[arg(long)]
        store: PathBuf,
        a: String,
        b: String,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
    },
    /// Apply a trained head to every vector of a store.
    Compress {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a head; writes model-<seed>.json and history-<seed>.jsonl per run.
    Train(TrainArgs),
    /// NDCG@k of a model on judged queries.
    Evaluate {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        /// Also write the ranked run as TSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare reverse-mode gradients with central differences on a
    /// synthetic ranking batch.
    Gradcheck {
        /// Check this model's parameters instead of a fresh initialisation.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = HeadArg::Quantum)]
        head: HeadArg,
        #[arg(long, num_args = 2, value_names = ["D_IN", "D_OUT"], default_values_t = [4, 2])]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1e-5)]
        h: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Maximum deviation between the separable path and the dense simulation.
    Oraclecheck {
        n: usize,
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Generate a synthetic dataset: store, train.jsonl, val.jsonl, qrels.tsv.
    Gensynth {
        #[arg(long, default_value_t = 8)]
        latent: usize,
        #[arg(long, default_value_t = 32)]
        embed: usize,
        #[arg(long, default_value_t = 200)]
        queries: usize,
        #[arg(long, default_value_t = 6)]
        pool: usize,
        #[arg(long, default_value_t = SynthConfig::default().noise_sigma)]
        sigma: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = FormatArg::Binary)]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parameter counts of the quantum and classical heads.
    Paramcount { d_in: usize, d_out: usize },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub val: PathBuf,
    #[arg(long, value_enum, default_value_t = HeadArg::Quantum)]
    pub head: HeadArg,
    /// Input and output width; the input width must match the store.
    #[arg(long, num_args = 2, value_names = ["D_IN", "D_OUT"])]
    pub dims: Option<Vec<usize>>,
    #[arg(long, default_value_t = TrainConfig::default().lr)]
    pub lr: f64,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    pub batch: usize,
    #[arg(long, default_value_t = TrainConfig::default().max_epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = DEFAULT_TEMPERATURE)]
    pub temperature: f64,
    /// First seed of the sweep.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Number of consecutive seeds to train.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// Use only the first N training samples.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Evaluate every run on these judgments.
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("writing output", e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))
}

fn dims_pair(dims: &[usize]) -> Result<(usize, usize)> {
    match dims {
        [a, b] => Ok((*a, *b)),
        _ => Err(Error::Config(format!("--dims takes two values, got {}", dims.len()))),
    }
}

/// Gradient check of the batch ranking loss at `model`'s parameters, on a
/// small synthetic set whose embeddings have the model's input width.
pub fn model_gradcheck(model: &Model, seed: u64, h: f64, tol: f64) -> Result<GradCheck> {
    let d_in = model.shape.d_in;
    let data = gen_synth(&SynthConfig {
        latent_dim: d_in.min(8),
        embed_dim: d_in,
        n_queries: 10,
        n_passages_per_query: 6,
        noise_sigma: 0.3,
        seed,
    })?;
    let objective = BatchObjective {
        shape: model.shape,
        store: &data.store,
        samples: &data.train,
        eps: model.eps,
    };
    grad_check(&objective, &model.params, h, tol)
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Encode { store, tau, out: path } => {
            let store = EmbeddingStore::load(&store)?;
            let cfg = EncoderConfig::new(tau, DEFAULT_EPS)?;
            let mut text = String::new();
            for (id, v) in store.iter() {
                let theta = encode(v, &cfg)?.polar_angles();
                text.push_str(&serde_json::to_string(
                    &serde_json::json!({ "id": id, "theta": theta }),
                )?);
                text.push('\n');
            }
            match path {
                Some(p) => write_string_atomic(&p, &text),
                None => emit(out, &text),
            }
        }
        Command::Similarity { store, a, b, tau } => {
            let store = EmbeddingStore::load(&store)?;
            let cfg = EncoderConfig::new(tau, DEFAULT_EPS)?;
            let (u, v) = (store.require(&a)?, store.require(&b)?);
            let (su, sv) = (encode(u, &cfg)?, encode(v, &cfg)?);
            emit(
                out,
                &format!(
                    "fidelity\t{}\nlog_fidelity\t{}\ncosine\t{}\n",
                    fidelity(&su, &sv)?,
                    log_fidelity(&su, &sv, cfg.eps)?,
                    cosine_similarity(u, v)?
                ),
            )
        }
        Command::Compress {
            store,
            model,
            out: path,
        } => {
            let store = EmbeddingStore::load(&store)?;
            let model = load_model(&model)?;
            let view = model.view()?;
            let mut compressed = EmbeddingStore::new(model.shape.d_out);
            for (id, v) in store.iter() {
                let row = match view.embed(v)? {
                    Embedded::State(s) => s.polar_angles(),
                    Embedded::Vector(x) => x,
                };
                compressed.insert(id, row)?;
            }
            compressed.save(&path)?;
            emit(
                out,
                &format!(
                    "compressed {} vectors to width {}\n",
                    compressed.len(),
                    compressed.dim()
                ),
            )
        }
        Command::Train(args) => run_train(args, out),
        Command::Evaluate {
            store,
            model,
            qrels,
            k,
            out: path,
        } => {
            let store = EmbeddingStore::load(&store)?;
            let model = load_model(&model)?;
            let qrels = RelevanceJudgments::load(&qrels)?;
            let report = evaluate(&model, &store, &qrels, k)?;
            if let Some(p) = path {
                report.save_run(&p)?;
            }
            let mut text = String::new();
            for q in &report.per_query {
                text.push_str(&format!("{}\t{:.6}\n", q.query, q.ndcg));
            }
            for (q, ids) in &report.missing {
                eprintln!("skipped {q}: missing embeddings for {}", ids.join(", "));
            }
            for q in &report.undefined {
                eprintln!("skipped {q}: no relevant passages");
            }
            text.push_str(&format!("ndcg@{k}\t{:.6}\n", report.mean_ndcg));
            emit(out, &text)
        }
        Command::Gradcheck {
            model,
            head,
            dims,
            seed,
            h,
            tol,
        } => {
            let model = match model {
                Some(p) => load_model(&p)?,
                None => {
                    let (d_in, d_out) = dims_pair(&dims)?;
                    let kind = HeadKind::from(head);
                    let d_out = if kind == HeadKind::None { d_in } else { d_out };
                    Model::init(ModelShape::new(kind, d_in, d_out)?, seed, DEFAULT_TEMPERATURE)?
                }
            };
            let check = model_gradcheck(&model, seed, h, tol)?;
            emit(
                out,
                &format!(
                    "params\t{}\nloss\t{}\nmax_rel_err\t{:e}\nworst\t{}\n{}\n",
                    model.params.len(),
                    check.report.value,
                    check.max_rel_err,
                    check.worst.map_or("-".to_string(), |i| i.to_string()),
                    if check.passed { "PASS" } else { "FAIL" }
                ),
            )?;
            if check.passed {
                Ok(())
            } else {
                Err(Error::CheckFailed(format!(
                    "gradient relative error {:e} exceeds {tol:e}",
                    check.max_rel_err
                )))
            }
        }
        Command::Oraclecheck { n, trials, seed } => {
            let r = oracle_check(n, trials, seed)?;
            let dev = r.max_deviation();
            emit(
                out,
                &format!(
                    "fidelity_dev\t{:e}\nmarginal_dev\t{:e}\nmax_deviation\t{:e}\n",
                    r.fidelity_dev, r.marginal_dev, dev
                ),
            )?;
            if dev <= ORACLE_TOL {
                Ok(())
            } else {
                Err(Error::CheckFailed(format!(
                    "oracle deviation {dev:e} exceeds {ORACLE_TOL:e}"
                )))
            }
        }
        Command::Gensynth {
            latent,
            embed,
            queries,
            pool,
            sigma,
            seed,
            format,
            out: dir,
        } => {
            let data = gen_synth(&SynthConfig {
                latent_dim: latent,
                embed_dim: embed,
                n_queries: queries,
                n_passages_per_query: pool,
                noise_sigma: sigma,
                seed,
            })?;
            ensure_dir(&dir)?;
            let store_path = dir.join(match format {
                FormatArg::Jsonl => "store.jsonl",
                FormatArg::Binary => "store.bin",
            });
            match format {
                FormatArg::Jsonl => data.store.save_jsonl(&store_path)?,
                FormatArg::Binary => data.store.save_binary(&store_path)?,
            }
            save_samples(&dir.join("train.jsonl"), &data.train)?;
            save_samples(&dir.join("val.jsonl"), &data.val)?;
            data.qrels.save(&dir.join("qrels.tsv"))?;
            emit(
                out,
                &format!(
                    "vectors\t{}\ntrain\t{}\nval\t{}\ntest_queries\t{}\n",
                    data.store.len(),
                    data.train.len(),
                    data.val.len(),
                    data.qrels.len()
                ),
            )
        }
        Command::Paramcount { d_in, d_out } => {
            let cfg = HeadConfig::new(d_in, d_out)?;
            let q = param_count(&cfg)?;
            let c = classical_param_count(d_in, d_out);
            emit(
                out,
                &format!(
                    "layers\t{}\nquantum\t{q}\nclassical\t{c}\nratio\t{:.2}\n",
                    cfg.num_layers(),
                    c as f64 / q as f64
                ),
            )
        }
    }
}

fn run_train(args: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let store = EmbeddingStore::load(&args.store)?;
    let mut train_samples = load_samples(&args.train)?;
    let val_samples = load_samples(&args.val)?;
    if let Some(n) = args.limit {
        if n == 0 {
            return Err(Error::Config("--limit must be at least 1".into()));
        }
        train_samples.truncate(n);
    }
    if args.runs == 0 {
        return Err(Error::Config("--runs must be at least 1".into()));
    }
    let kind = HeadKind::from(args.head);
    let d_out = match &args.dims {
        Some(d) => {
            let (d_in, d_out) = dims_pair(d)?;
            if d_in != store.dim() {
                return Err(Error::Dimension {
                    expected: store.dim(),
                    got: d_in,
                });
            }
            d_out
        }
        None => TrainConfig::default().d_out,
    };
    let qrels = args.qrels.as_deref().map(RelevanceJudgments::load).transpose()?;
    ensure_dir(&args.out)?;

    let mut ndcgs = Vec::new();
    for run in 0..args.runs {
        let seed = args.seed + run as u64;
        let cfg = TrainConfig {
            lr: args.lr,
            batch_size: args.batch,
            max_epochs: args.epochs,
            seed,
            temperature: args.temperature,
            head_kind: kind,
            d_out,
        };
        let outcome = train(&store, &train_samples, &val_samples, &cfg)?;
        save_model(&outcome.model, &args.out.join(format!("model-{seed}.json")))?;
        write_string_atomic(
            &args.out.join(format!("history-{seed}.jsonl")),
            &history_jsonl(&outcome.history)?,
        )?;
        let best_acc = outcome
            .best_epoch
            .map(|e| outcome.history[e - 1].val_acc)
            .unwrap_or(f64::NAN);
        let mut line = format!(
            "seed={seed}\tbest_epoch={}\tval_acc={best_acc:.4}",
            outcome.best_epoch.unwrap_or(0)
        );
        if let Some(q) = &qrels {
            let n = evaluate(&outcome.model, &store, q, DEFAULT_K)?.mean_ndcg;
            ndcgs.push(n);
            line.push_str(&format!("\tndcg@{DEFAULT_K}={n:.6}"));
        }
        line.push('\n');
        emit(out, &line)?;
    }
    if ndcgs.len() > 1 {
        let mean = ndcgs.iter().sum::<f64>() / ndcgs.len() as f64;
        emit(out, &format!("mean_ndcg@{DEFAULT_K}={mean:.6}\n"))?;
    }
    Ok(())
}
