use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cryptopred::augment::{
    balance, BalanceConfig, BalanceOutcome, HttpClient, OfflineParaphraser, RemoteParaphraser,
};
use cryptopred::corpus::{
    distribution, jsonl_with_meta, load_dataset, DataFormat, Dataset, LabelDistribution, Source,
    Task,
};
use cryptopred::emotion::{aggregate, load_lexicon};
use cryptopred::eval::{
    classification_report_json, classification_report_markdown, cohen_kappa, confusion_markdown,
    cross_validate, results_table_markdown, Aggregation, ClassificationReport, CvConfig, CvReport,
    ResultsRow,
};
use cryptopred::features::fit_tfidf;
use cryptopred::models::{train, ModelFile, ModelKind};
use cryptopred::preprocess::preprocess;
use serde::Serialize;
use serde_json::json;

use crate::config::{ProviderKind, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{latest_dir, read_artifact, Meta, RunDir};

fn load(cfg: &RunConfig) -> Result<(Dataset, PathBuf)> {
    let path = cfg.dataset_path()?.to_path_buf();
    let ds = load_dataset(&path, DataFormat::from_path(&path))?;
    Ok((ds, path))
}

fn run_dir(command: &str, cfg: &RunConfig, dataset: Option<&Path>) -> Result<RunDir> {
    RunDir::create(cfg, Meta::new(command, cfg, dataset)?)
}

fn distribution_rows(out: &mut String, dist: &LabelDistribution) {
    let task = dist.task;
    for (&code, &n) in &dist.counts {
        let _ = writeln!(
            out,
            "| Task {} | {} | {n} |",
            task.number(),
            task.label_name(code)
        );
    }
    let _ = writeln!(out, "| Task {} | Total | {} |", task.number(), dist.total);
}

fn distribution_table(d1: &LabelDistribution, d2: &LabelDistribution) -> String {
    let mut out = String::from("| Task | Label | Count |\n|---|---|---|\n");
    distribution_rows(&mut out, d1);
    distribution_rows(&mut out, d2);
    out
}

#[derive(Serialize)]
struct Stats {
    documents: usize,
    original: usize,
    synthetic: usize,
    task1: LabelDistribution,
    task2: LabelDistribution,
}

pub fn stats(cfg: &RunConfig) -> Result<()> {
    let (ds, path) = load(cfg)?;
    let synthetic = ds
        .documents()
        .iter()
        .filter(|d| d.source == Source::Synthetic)
        .count();
    let stats = Stats {
        documents: ds.len(),
        original: ds.len() - synthetic,
        synthetic,
        task1: distribution(&ds, Task::Task1),
        task2: distribution(&ds, Task::Task2),
    };
    let table = distribution_table(&stats.task1, &stats.task2);
    let dir = run_dir("stats", cfg, Some(&path))?;
    dir.write_json("stats.json", &stats)?;
    dir.write_markdown("stats.md", &table)?;
    print!("{table}");
    println!(
        "{} documents ({} original, {} synthetic)",
        stats.documents, stats.original, synthetic
    );
    Ok(())
}

pub fn preprocess_cmd(cfg: &RunConfig) -> Result<()> {
    let (ds, path) = load(cfg)?;
    let dir = run_dir("preprocess", cfg, Some(&path))?;
    let mut text = serde_json::to_string(&json!({ "_meta": dir.meta() })).expect("meta serializes");
    text.push('\n');
    let mut empty = 0;
    for d in ds.documents() {
        let tokens = preprocess(&d.text, &cfg.clean);
        if tokens.is_empty() {
            empty += 1;
        }
        let row = json!({ "id": d.id, "tokens": tokens });
        text.push_str(&serde_json::to_string(&row).expect("row serializes"));
        text.push('\n');
    }
    let out = dir.write_raw("tokens.jsonl", &text)?;
    println!(
        "cleaned {} documents ({empty} empty) -> {}",
        ds.len(),
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct BalanceSummary {
    task: u8,
    provider: ProviderKind,
    before: LabelDistribution,
    after: LabelDistribution,
    target: usize,
    needed: BTreeMap<u8, usize>,
    generated: BTreeMap<u8, usize>,
    shortfall: BTreeMap<u8, usize>,
    warning: bool,
}

pub fn balance_cmd(cfg: &RunConfig) -> Result<()> {
    let (ds, path) = load(cfg)?;
    let task = cfg.task()?;
    let provider = cfg.provider_kind();
    let remote_cfg = cfg.remote.clone().unwrap_or_default();
    let bcfg = BalanceConfig {
        seed: cfg.seed,
        max_retries: cfg.balance.max_retries.unwrap_or(remote_cfg.max_retries),
    };
    let outcome: BalanceOutcome = match provider {
        ProviderKind::Offline => balance(&ds, task, &mut OfflineParaphraser, &bcfg)?,
        ProviderKind::Remote => {
            let mut p = RemoteParaphraser::new(HttpClient::new(remote_cfg)?);
            balance(&ds, task, &mut p, &bcfg)?
        }
    };
    let summary = BalanceSummary {
        task: task.number(),
        provider,
        before: distribution(&ds, task),
        after: distribution(&outcome.dataset, task),
        target: outcome.plan.target,
        needed: outcome.plan.needed.clone(),
        generated: outcome.generated.clone(),
        shortfall: outcome.shortfall.clone(),
        warning: outcome.warning(),
    };
    let dir = run_dir("balance", cfg, Some(&path))?;
    let meta = serde_json::to_value(dir.meta()).expect("meta serializes");
    let saved = dir.write_raw(
        "balanced.jsonl",
        &jsonl_with_meta(&outcome.dataset, Some(meta)),
    )?;
    dir.write_json("balance.json", &summary)?;

    let mut table = String::from("| Label | Before | Added | After |\n|---|---|---|---|\n");
    for (&code, &n) in &summary.before.counts {
        let _ = writeln!(
            table,
            "| {} | {n} | {} | {} |",
            task.label_name(code),
            summary.generated.get(&code).copied().unwrap_or(0),
            summary.after.count(code)
        );
    }
    let _ = writeln!(
        table,
        "| Total | {} | | {} |",
        summary.before.total, summary.after.total
    );
    dir.write_markdown("balance.md", &table)?;
    print!("{table}");
    println!("saved {}", saved.display());
    if summary.warning {
        eprintln!(
            "warning: target not reached, missing per label: {:?}",
            summary.shortfall
        );
    }
    Ok(())
}

fn labeled_tokens(
    ds: &Dataset,
    cfg: &RunConfig,
    task: Task,
) -> (Vec<cryptopred::TokenList>, Vec<u8>) {
    ds.labeled(task)
        .map(|(d, l)| (preprocess(&d.text, &cfg.clean), l))
        .unzip()
}

pub fn train_cmd(cfg: &RunConfig) -> Result<()> {
    let (ds, path) = load(cfg)?;
    let task = cfg.task()?;
    let kinds = cfg.model_kinds()?;
    let (docs, y) = labeled_tokens(&ds, cfg, task);
    let tfidf = fit_tfidf::<f64>(&docs, &cfg.tfidf)?;
    let x = tfidf.transform_all(&docs);
    let dir = run_dir("train", cfg, Some(&path))?;
    dir.write_json("tfidf.json", &tfidf)?;
    for kind in kinds {
        let model = train(kind, &x, &y, &cfg.train)?;
        let pred = model.predict_all(&x)?;
        let correct = pred.iter().zip(&y).filter(|(p, g)| p == g).count();
        let file = ModelFile::new(model, &cfg.train);
        let out = dir.write_json(&format!("model-{kind}.json"), &file)?;
        println!(
            "{}: {} documents, {} features, training accuracy {:.4} -> {}",
            kind.display_name(),
            y.len(),
            tfidf.dim(),
            correct as f64 / y.len() as f64,
            out.display()
        );
    }
    Ok(())
}

fn results_markdown(task: Task, reports: &[CvReport<f64>]) -> String {
    let pooled: Vec<ResultsRow<f64>> = reports
        .iter()
        .map(|r| ResultsRow {
            model: r.config.model,
            summary: r.pooled.summary(),
        })
        .collect();
    let mean: Vec<ResultsRow<f64>> = reports
        .iter()
        .map(|r| ResultsRow {
            model: r.config.model,
            summary: r.fold_mean.clone(),
        })
        .collect();
    let mut out = format!("## Task {}\n\n", task.number());
    out.push_str(&results_table_markdown(&pooled, Aggregation::Pooled));
    out.push('\n');
    out.push_str(&results_table_markdown(&mean, Aggregation::FoldMean));
    out
}

fn per_model_markdown(task: Task, reports: &[CvReport<f64>]) -> String {
    let mut out = String::new();
    for r in reports {
        let _ = writeln!(
            out,
            "## {} (pooled over {} folds)\n",
            r.config.model.display_name(),
            r.config.k
        );
        out.push_str(&classification_report_markdown(task, &r.pooled));
        out.push('\n');
        out.push_str(&confusion_markdown(task, &r.pooled.confusion));
        out.push('\n');
    }
    out
}

pub fn cv_cmd(cfg: &RunConfig) -> Result<()> {
    let (ds, path) = load(cfg)?;
    let task = cfg.task()?;
    let dir = run_dir("cv", cfg, Some(&path))?;
    let mut reports = Vec::new();
    for kind in cfg.model_kinds()? {
        let cv = CvConfig {
            task,
            model: kind,
            k: cfg.k,
            seed: cfg.seed,
            train: cfg.train.clone(),
            clean: cfg.clean.clone(),
            tfidf: cfg.tfidf.clone(),
        };
        let report: CvReport<f64> = cross_validate(&ds, &cv)?;
        dir.write_json(&format!("cv-{kind}.json"), &report)?;
        reports.push(report);
    }
    let table = results_markdown(task, &reports);
    dir.write_markdown(
        "results.md",
        &format!("{table}\n{}", per_model_markdown(task, &reports)),
    )?;
    let rows: Vec<_> = reports
        .iter()
        .map(|r| json!({ "model": r.config.model, "pooled": r.pooled.summary(), "fold_mean": r.fold_mean }))
        .collect();
    dir.write_json("results.json", &rows)?;
    print!("{table}");
    println!("\nwritten to {}", dir.path.display());
    Ok(())
}

pub fn report_cmd(cfg: &RunConfig, input: Option<&Path>) -> Result<()> {
    let source = match input {
        Some(p) => p.to_path_buf(),
        None => latest_dir(&cfg.out, "cv")?,
    };
    let files: Vec<PathBuf> = if source.is_dir() {
        ModelKind::ALL
            .iter()
            .map(|k| source.join(format!("cv-{k}.json")))
            .filter(|p| p.exists())
            .collect()
    } else {
        vec![source.clone()]
    };
    if files.is_empty() {
        return Err(CliError::Data(format!(
            "no cv-*.json files in {}",
            source.display()
        )));
    }
    let mut reports = Vec::new();
    for f in &files {
        reports.push(read_artifact::<CvReport<f64>>(f)?.result);
    }
    let task = reports[0].config.task;
    if reports.iter().any(|r| r.config.task != task) {
        return Err(CliError::Data(
            "cross-validation reports cover different tasks".into(),
        ));
    }
    let json_reports: Vec<(ModelKind, ClassificationReport)> = reports
        .iter()
        .map(|r| (r.config.model, classification_report_json(task, &r.pooled)))
        .collect();
    let body = format!(
        "{}\n{}",
        results_markdown(task, &reports),
        per_model_markdown(task, &reports)
    );
    let dir = run_dir("report", cfg, None)?;
    dir.write_json("report.json", &json_reports)?;
    dir.write_markdown("report.md", &body)?;
    print!("{body}");
    Ok(())
}

pub fn emotion_cmd(cfg: &RunConfig, lexicon: Option<&Path>, threshold: Option<f64>) -> Result<()> {
    let lexicon = lexicon
        .map(Path::to_path_buf)
        .or_else(|| cfg.emotion.lexicon.clone())
        .ok_or_else(|| {
            CliError::Usage("no lexicon given (use --lexicon or [emotion] lexicon)".into())
        })?;
    let threshold = threshold.unwrap_or(cfg.emotion.threshold);
    if !(0.0..1.0).contains(&threshold) {
        return Err(CliError::Usage(format!(
            "threshold must lie in [0, 1), got {threshold}"
        )));
    }
    let (ds, path) = load(cfg)?;
    let lex = load_lexicon(&lexicon)?;
    let report = aggregate(&ds, &lex, threshold);
    let md = report.to_markdown();
    let dir = run_dir("emotion", cfg, Some(&path))?;
    dir.write_json("emotion.json", &report)?;
    dir.write_markdown("emotion.md", &md)?;
    print!("{md}");
    if report.cells.is_empty() {
        println!("no documents with both a coin and a task 2 label");
    }
    Ok(())
}

/// Label pairs from two datasets joined on document id.
fn paired_files(a: &Path, b: &Path, task: Task) -> Result<Vec<(u8, u8)>> {
    let da = load_dataset(a, DataFormat::from_path(a))?;
    let db = load_dataset(b, DataFormat::from_path(b))?;
    let other: BTreeMap<&str, u8> = db.labeled(task).map(|(d, l)| (d.id.as_str(), l)).collect();
    Ok(da
        .labeled(task)
        .filter_map(|(d, l)| other.get(d.id.as_str()).map(|&m| (l, m)))
        .collect())
}

/// Label pairs from two annotators within one dataset.
fn paired_annotators(ds: &Dataset, names: &[String], task: Task) -> Vec<(u8, u8)> {
    let label_of = |d: &cryptopred::Document, who: &str| {
        d.annotations
            .iter()
            .find(|a| a.annotator == who && a.task == task.number())
            .map(|a| a.label)
    };
    ds.documents()
        .iter()
        .filter_map(|d| Some((label_of(d, &names[0])?, label_of(d, &names[1])?)))
        .collect()
}

pub fn kappa_cmd(
    cfg: &RunConfig,
    a: Option<&Path>,
    b: Option<&Path>,
    annotators: &[String],
) -> Result<()> {
    let task = cfg.task()?;
    let a = a.map(Path::to_path_buf).or_else(|| cfg.kappa.a.clone());
    let b = b.map(Path::to_path_buf).or_else(|| cfg.kappa.b.clone());
    let names = if annotators.is_empty() {
        &cfg.kappa.annotators[..]
    } else {
        annotators
    };
    let (pairs, mode, dataset) = match (a, b) {
        (Some(a), Some(b)) => (paired_files(&a, &b, task)?, "files", None),
        (None, None) if names.len() == 2 => {
            let (ds, path) = load(cfg)?;
            (
                paired_annotators(&ds, names, task),
                "annotators",
                Some(path),
            )
        }
        _ => {
            return Err(CliError::Usage(
                "kappa needs --a and --b, or --annotators NAME,NAME with --dataset".into(),
            ))
        }
    };
    if pairs.is_empty() {
        return Err(CliError::Data("no items labeled by both sides".into()));
    }
    let (la, lb): (Vec<u8>, Vec<u8>) = pairs.iter().copied().unzip();
    let kappa: f64 = cohen_kappa(&la, &lb)?;
    let agree = pairs.iter().filter(|(x, y)| x == y).count();
    let dir = run_dir("kappa", cfg, dataset.as_deref())?;
    dir.write_json(
        "kappa.json",
        &json!({ "task": task.number(), "mode": mode, "items": pairs.len(), "agreement": agree as f64 / pairs.len() as f64, "kappa": kappa }),
    )?;
    println!(
        "Cohen's kappa (task {}, {} items): {:.4}",
        task.number(),
        pairs.len(),
        kappa
    );
    Ok(())
}
