use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use dsmc::bundle::{write_atomic, ModelBundle};
use dsmc::corpus::{load_corpus, load_with_policy, write_corpus, Corpus, LabelPolicy, SparseDoc};
use dsmc::depgraph::{self, build_graph, canonical_cover};
use dsmc::evaluation::{bound_constants, evaluate as eval_report, BoundConstants};
use dsmc::features::FeatureSpace;
use dsmc::predictor::{predict_batch, PredictionConfig};
use dsmc::reduction::{
    compute_pi, double_sample, empirical_risk_binary, transform_full, DyadicPair, SamplingConfig,
};
use dsmc::synth::{generate, holdout_split, SynthConfig};
use dsmc::textfmt::format_g;
use dsmc::trainer::{train_with_report, Loss, TrainConfig};
use dsmc::ClassId;
use serde_json::json;

use crate::{CoverArgs, DumpArgs, DumpFormat, EvaluateArgs, LossArg, PredictArgs, SamplingArgs, SynthArgs, TrainArgs};

const DEFAULT_KAPPA: u64 = 10;

/// A flag combination rejected before any work is done.
#[derive(Debug)]
pub struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    use dsmc::Error as E;
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<E>() {
        Some(E::InvalidConfig(_) | E::EmptySample | E::LengthMismatch { .. }) => 2,
        Some(E::NonFinite { .. } | E::Diverged { .. } | E::DegenerateClass(_)) => 4,
        Some(_) => 3,
        None => {
            if err.downcast_ref::<std::io::Error>().is_some() {
                3
            } else {
                1
            }
        }
    }
}

fn g12(x: f64) -> String {
    format_g(x, 12)
}

/// Shortest text that parses back to `x`.
fn exact(x: f64) -> String {
    format!("{x}")
}

/// Stdout writes that treat a closed pipe as a normal end of output.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("--{name} must be a positive number, got {x}")))
    }
}

fn resolve_kappa(sampling: &SamplingArgs, num_classes: ClassId) -> Result<usize> {
    let max = num_classes.saturating_sub(1) as u64;
    match sampling.kappa {
        Some(k) if k > max => Err(usage(format!("--kappa {k} exceeds K-1 = {max}"))),
        Some(k) => Ok(k as usize),
        None => Ok(DEFAULT_KAPPA.min(max).max(1) as usize),
    }
}

fn load_training(path: &Path) -> Result<(Corpus, FeatureSpace)> {
    let corpus = load_corpus(path).with_context(|| format!("loading {}", path.display()))?;
    if corpus.num_classes < 2 {
        return Err(usage(format!("{} has fewer than 2 classes", path.display())));
    }
    let space = FeatureSpace::fit(&corpus.docs)?;
    Ok((corpus, space))
}

pub fn train(args: TrainArgs) -> Result<ExitCode> {
    check_positive("avg-per-class", args.sampling.avg_per_class)?;
    check_positive("lr", args.lr)?;
    if !(args.lambda >= 0.0 && args.lambda.is_finite()) {
        return Err(usage(format!("--lambda must be >= 0, got {}", args.lambda)));
    }
    let (corpus, space) = load_training(&args.train)?;
    let kappa = resolve_kappa(&args.sampling, corpus.num_classes)?;
    let sampling = SamplingConfig {
        avg_per_class: args.sampling.avg_per_class,
        kappa,
        seed: args.sampling.seed,
    };
    let pi = compute_pi(&space.profiles, sampling.avg_per_class)?;
    let sample = double_sample(&corpus.docs, &space, &sampling)?;
    let config = TrainConfig {
        loss: match args.loss {
            LossArg::Hinge => Loss::Hinge,
            LossArg::Logistic => Loss::Logistic,
        },
        lambda: args.lambda,
        lr0: args.lr,
        epochs: args.epochs as usize,
        seed: args.sampling.seed,
        scale: !args.no_scale,
    };
    let (model, report) = train_with_report(&sample.pairs, &config)?;
    let risk = empirical_risk_binary(|v| model.score(v), &sample.pairs)?;
    let bounds = bound_constants(&space.profiles, &pi)?;

    let bundle = ModelBundle {
        model,
        space,
        bounds: Some(bounds),
    };
    bundle
        .save(&args.model_dir)
        .with_context(|| format!("writing bundle to {}", args.model_dir.display()))?;

    let mut log = String::new();
    let _ = writeln!(log, "command=train");
    let _ = writeln!(log, "train={}", args.train.display());
    let _ = writeln!(log, "model_dir={}", args.model_dir.display());
    let _ = writeln!(log, "kappa={kappa}");
    let _ = writeln!(log, "avg_per_class={}", exact(sampling.avg_per_class));
    let _ = writeln!(log, "seed={}", sampling.seed);
    let _ = writeln!(log, "loss={}", config.loss);
    let _ = writeln!(log, "lambda={}", exact(config.lambda));
    let _ = writeln!(log, "lr={}", exact(config.lr0));
    let _ = writeln!(log, "epochs={}", config.epochs);
    let _ = writeln!(log, "scale={}", config.scale);
    let _ = writeln!(log, "m={}", corpus.docs.len());
    let _ = writeln!(log, "K={}", corpus.num_classes);
    let _ = writeln!(log, "dropped_empty={}", corpus.dropped_empty);
    let _ = writeln!(log, "retained={}", sample.retained.len());
    let _ = writeln!(log, "pairs={}", sample.pairs.len());
    let _ = writeln!(log, "initial_objective={}", exact(report.initial_objective));
    let _ = writeln!(
        log,
        "final_objective={}",
        exact(*report.epoch_objectives.last().expect("epochs >= 1"))
    );
    let _ = writeln!(log, "empirical_risk={}", exact(risk));
    let _ = writeln!(log, "alpha={}", exact(bounds.alpha));
    let _ = writeln!(log, "beta={}", exact(bounds.beta));
    write_atomic(&args.model_dir.join("run.log"), log.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

pub fn predict(args: PredictArgs) -> Result<ExitCode> {
    let bundle = ModelBundle::load(&args.model_dir)?;
    let k = bundle.space.num_classes() as u64;
    let q = if args.q > k {
        eprintln!("warning: --q {} exceeds K = {k}; using q = {k}", args.q);
        k
    } else {
        args.q
    };
    let test = load_with_policy(&args.test, LabelPolicy::Optional)
        .with_context(|| format!("loading {}", args.test.display()))?;
    let predictions = predict_batch(
        &test.docs,
        &bundle.model,
        &bundle.space,
        &PredictionConfig { q: q as usize },
    )?;
    let text: String = predictions.iter().map(|c| format!("{c}\n")).collect();
    write_atomic(&args.out, text.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

/// First column of every data line, parsed as a class id.
fn read_label_column(path: &Path) -> Result<Vec<ClassId>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("");
        let Some(tok) = content.split_whitespace().next() else {
            continue;
        };
        let label: ClassId = tok.parse().map_err(|_| dsmc::Error::Parse {
            line: i + 1,
            msg: format!("{}: bad class id {tok:?}", path.display()),
        })?;
        labels.push(label);
    }
    Ok(labels)
}

pub fn evaluate(args: EvaluateArgs) -> Result<ExitCode> {
    let truth = read_label_column(&args.test)?;
    let predicted = read_label_column(&args.pred)?;
    if truth.len() != predicted.len() {
        return Err(dsmc::Error::LengthMismatch {
            left: truth.len(),
            right: predicted.len(),
        }
        .into());
    }
    let bundle = args.model_dir.as_deref().map(ModelBundle::load).transpose()?;
    let num_classes = match (&bundle, args.classes) {
        (Some(b), _) => b.space.num_classes(),
        (None, Some(k)) => k,
        (None, None) => truth.iter().chain(&predicted).copied().max().unwrap_or(0),
    };
    let report = eval_report(&truth, &predicted, num_classes)?;
    let bounds: Option<BoundConstants> = bundle.and_then(|b| b.bounds);

    if args.json {
        let per_class: Vec<_> = report
            .per_class
            .iter()
            .map(|c| {
                json!({
                    "class": c.class,
                    "precision": c.precision,
                    "recall": c.recall,
                    "f1": c.f1,
                    "support": c.support,
                })
            })
            .collect();
        let doc = json!({
            "accuracy": report.accuracy,
            "maf1": report.maf1,
            "alpha": bounds.map(|b| b.alpha),
            "beta": bounds.map(|b| b.beta),
            "macro_precision": report.macro_precision,
            "macro_recall": report.macro_recall,
            "mean_class_f1": report.mean_class_f1,
            "n": report.n,
            "num_classes": num_classes,
            "per_class": per_class,
        });
        emit(&(serde_json::to_string_pretty(&doc)? + "\n"))?;
    } else {
        let na = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), g12);
        let mut text = format!(
            "accuracy={} maf1={} alpha={} beta={}\n",
            g12(report.accuracy),
            g12(report.maf1),
            na(bounds.map(|b| b.alpha)),
            na(bounds.map(|b| b.beta))
        );
        let _ = writeln!(
            text,
            "macro_precision={} macro_recall={} mean_class_f1={} n={} classes={}",
            g12(report.macro_precision),
            g12(report.macro_recall),
            g12(report.mean_class_f1),
            report.n,
            num_classes
        );
        for c in &report.per_class {
            let _ = writeln!(
                text,
                "class={} precision={} recall={} f1={} support={}",
                c.class,
                g12(c.precision),
                g12(c.recall),
                g12(c.f1),
                c.support
            );
        }
        emit(&text)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn sampled_or_full(
    sample: bool,
    sampling: &SamplingArgs,
    corpus: &Corpus,
    space: &FeatureSpace,
) -> Result<Vec<DyadicPair>> {
    if sample {
        check_positive("avg-per-class", sampling.avg_per_class)?;
        let config = SamplingConfig {
            avg_per_class: sampling.avg_per_class,
            kappa: resolve_kappa(sampling, corpus.num_classes)?,
            seed: sampling.seed,
        };
        Ok(double_sample(&corpus.docs, space, &config)?.pairs)
    } else {
        Ok(transform_full(&corpus.docs, space)?)
    }
}

pub fn transform_dump(args: DumpArgs) -> Result<ExitCode> {
    let (corpus, space) = load_training(&args.train)?;
    let mut out = String::new();
    match args.format {
        DumpFormat::Pairs => {
            for p in sampled_or_full(args.sample, &args.sampling, &corpus, &space)? {
                let _ = write!(out, "{}\t{}\t{}", p.source_doc, p.adversarial_class, p.label);
                for v in p.first.values().iter().chain(p.second.values()) {
                    let _ = write!(out, "\t{}", g12(*v));
                }
                out.push('\n');
            }
        }
        DumpFormat::Joint => {
            let test;
            let docs: &[SparseDoc] = match &args.test {
                Some(path) => {
                    test = load_with_policy(path, LabelPolicy::Optional)
                        .with_context(|| format!("loading {}", path.display()))?;
                    &test.docs
                }
                None => &corpus.docs,
            };
            for doc in docs {
                let prepared = space.prepare(doc);
                for class in 1..=space.num_classes() {
                    let v = space.phi_prepared(&prepared, class)?;
                    let _ = write!(out, "{}\t{class}", doc.id);
                    for x in v.values() {
                        let _ = write!(out, "\t{}", g12(*x));
                    }
                    out.push('\n');
                }
            }
        }
    }
    write_atomic(&args.out, out.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

pub fn verify_cover(args: CoverArgs) -> Result<ExitCode> {
    let (corpus, space) = load_training(&args.train)?;
    let pairs = sampled_or_full(args.sample, &args.sampling, &corpus, &space)?;
    let graph = build_graph(&pairs);
    let cover = canonical_cover(&pairs);
    let check = verify_cover_report(&graph, &cover);
    let status = if check.0 { "valid" } else { "invalid" };
    if args.json {
        let doc = json!({
            "valid": check.0,
            "weight": cover.weight(),
            "vertices": graph.num_vertices(),
            "edges": graph.num_edges(),
            "violations": check.1,
        });
        emit(&(serde_json::to_string_pretty(&doc)? + "\n"))?;
    } else {
        let mut text = format!(
            "{status} weight={} vertices={} edges={}\n",
            g12(cover.weight()),
            graph.num_vertices(),
            graph.num_edges()
        );
        for v in &check.1 {
            let _ = writeln!(text, "violation {v}");
        }
        emit(&text)?;
    }
    Ok(if check.0 { ExitCode::SUCCESS } else { ExitCode::from(4) })
}

fn verify_cover_report(
    graph: &dsmc::depgraph::DependencyGraph,
    cover: &dsmc::depgraph::FractionalCover,
) -> (bool, Vec<String>) {
    let check = depgraph::verify_cover(graph, cover);
    (
        check.is_valid(),
        check.violations.iter().map(|v| format!("{v:?}")).collect(),
    )
}

pub fn synth_gen(args: SynthArgs) -> Result<ExitCode> {
    let config = SynthConfig {
        num_classes: args.classes,
        num_docs: args.docs,
        vocab_size: args.vocab,
        zipf_exponent: args.zipf,
        min_terms: args.min_terms,
        max_terms: args.max_terms,
        class_signal: args.signal,
        seed: args.seed,
        ..SynthConfig::default()
    };
    let docs = generate(&config)?;
    let write = |path: &Path, docs: &[SparseDoc]| -> Result<()> {
        let mut buf = Vec::new();
        write_corpus(&mut buf, docs)?;
        write_atomic(path, &buf)?;
        Ok(())
    };
    match (args.holdout, &args.test_out) {
        (Some(n), Some(test_out)) => {
            let (train, test) = holdout_split(&docs, n, args.seed)?;
            write(&args.out, &train)?;
            write(test_out, &test)?;
        }
        _ => write(&args.out, &docs)?,
    }
    Ok(ExitCode::SUCCESS)
}
