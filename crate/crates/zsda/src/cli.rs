//! The `zsda` command line.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use zsda_core::eval::evaluate;
use zsda_core::kv;
use zsda_core::model::Head;
use zsda_core::pipeline::TrainConfig;
use zsda_core::synth::ScenarioConfig;

use crate::analysis::{bt_ctc_triplet, cca_between, pca_points, source_recognizer, token_tables};
use crate::dataset::{stats_table, DataDir, SCENARIO_FILE};
use crate::error::{Error, Result};
use crate::format::{read_text, write_file, Checkpoint};
use crate::recipe::{ordering_checks, run_group, summarize, Recipe, RunResult};
use crate::report::{
    append_csv, write_csv, BtCtcRow, CcaRow, EvalRow, PcaRow, SummaryRow, TokenRow,
};
use crate::runner::{logged_skips, run_name, train, Layout, OUT_ENV};

#[derive(Debug, Parser)]
#[command(name = "zsda", version, about = "Transliterated zero-shot domain adaptation on synthetic speech")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Args)]
pub struct Root {
    /// Output root holding `data/`, `ckpt/` and `reports/`.
    #[arg(long, env = OUT_ENV, default_value = "zsda-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DataArg {
    /// Corpus directory; defaults to `<out>/data`.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Generate a synthetic corpus. Trailing `--key value` pairs set scenario keys.
    GenData {
        /// Corpus directory; defaults to `$ZSDA_OUT/data`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Scenario file applied before flags.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
        overrides: Vec<String>,
    },
    /// Train one mode. Trailing `--key value` pairs set training keys.
    Train {
        #[command(flatten)]
        root: Root,
        #[command(flatten)]
        data: DataArg,
        /// Training config file applied before flags.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Unlabeled-corpus transcripts; only supervised ZSDA modes may use them.
        #[arg(long)]
        sidecar: Option<PathBuf>,
        /// Suppress progress lines.
        #[arg(long)]
        quiet: bool,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
        overrides: Vec<String>,
    },
    /// Greedy-decode a manifest.
    Decode {
        #[command(flatten)]
        root: Root,
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        ckpt: PathBuf,
        /// Split name or manifest path.
        #[arg(long, default_value = "test")]
        manifest: String,
        #[arg(long, default_value = "target")]
        head: String,
    },
    /// Error rate of a checkpoint on a labeled manifest.
    Evaluate {
        #[command(flatten)]
        root: Root,
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value = "test")]
        manifest: String,
        #[arg(long, default_value = "target")]
        head: String,
    },
    /// Back-transliteration score of a checkpoint with topline and baseline.
    BtCtc {
        #[command(flatten)]
        root: Root,
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        ckpt: PathBuf,
        /// Source-language recognizer; trained and saved under `ckpt/` when absent.
        #[arg(long)]
        recognizer: Option<PathBuf>,
        /// Unlabeled-corpus transcripts; defaults to the corpus sidecar.
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Representation and token-distribution analyses.
    Analyze {
        #[command(flatten)]
        root: Root,
        #[command(flatten)]
        data: DataArg,
        /// Per-layer CCA between `--ckpt-a` and `--ckpt-b`.
        #[arg(long)]
        cca: bool,
        /// Last-layer PCA points of `--ckpt`.
        #[arg(long)]
        pca: bool,
        /// Token distributions of transcripts and of `--ckpt`'s transliterations.
        #[arg(long)]
        tokens: bool,
        #[arg(long)]
        ckpt: Option<PathBuf>,
        #[arg(long)]
        ckpt_a: Option<PathBuf>,
        #[arg(long)]
        ckpt_b: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        manifest: String,
    },
    /// Run every (mode, seed) of a recipe and summarize.
    Reproduce {
        #[command(flatten)]
        root: Root,
        /// Recipe file; the standard five-mode, three-seed recipe when absent.
        #[arg(long)]
        recipe: Option<PathBuf>,
        /// Parallel training processes.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
}

/// `--key value`, `--key=value` and bare `--flag` (meaning `true`).
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < args.len() {
        let Some(key) = args[i].strip_prefix("--") else {
            return Err(Error::usage(format!("expected `--key`, found `{}`", args[i])));
        };
        if let Some((k, v)) = key.split_once('=') {
            out.push((kv::normalize_key(k), v.to_string()));
            i += 1;
        } else if i + 1 < args.len() && !args[i + 1].starts_with("--") {
            out.push((kv::normalize_key(key), args[i + 1].clone()));
            i += 2;
        } else {
            out.push((kv::normalize_key(key), "true".to_string()));
            i += 1;
        }
    }
    Ok(out)
}

/// Removes `key` from `pairs`, returning its last value.
fn take(pairs: &mut Vec<(String, String)>, key: &str) -> Option<String> {
    let mut found = None;
    pairs.retain(|(k, v)| {
        if k == key {
            found = Some(v.clone());
            false
        } else {
            true
        }
    });
    found
}

fn data_dir(root: &Root, data: &DataArg) -> DataDir {
    DataDir::new(data.data.clone().unwrap_or_else(|| Layout::new(&root.out).data()))
}

fn display_rel(path: &Path, root: &Path) -> String {
    path.strip_prefix(root).unwrap_or(path).to_string_lossy().into_owned()
}

fn ckpt_hash(ckpt: &Checkpoint) -> String {
    ckpt.meta_value("config_hash").unwrap_or_else(|| "-".into())
}

pub fn scenario_from(config: Option<&Path>, overrides: &[(String, String)]) -> Result<ScenarioConfig> {
    let mut cfg = match config {
        Some(p) => ScenarioConfig::from_kv_text(&read_text(p)?)?,
        None => ScenarioConfig::default(),
    };
    if let Some((_, v)) = overrides.iter().find(|(k, _)| k == "scenario") {
        cfg.set("scenario", v)?;
    }
    for (k, v) in overrides.iter().filter(|(k, _)| k != "scenario") {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn train_config_from(config: Option<&Path>, overrides: &[(String, String)]) -> Result<TrainConfig> {
    let mut cfg = match config {
        Some(p) => TrainConfig::from_kv_text(&read_text(p)?)?,
        None => TrainConfig::default(),
    };
    if let Some((_, v)) = overrides.iter().find(|(k, _)| k == "mode") {
        cfg.set("mode", v)?;
    }
    for (k, v) in overrides.iter().filter(|(k, _)| k != "mode") {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_head(s: &str) -> Result<Head> {
    Ok(Head::parse(s)?)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::GenData { out, config, overrides } => {
            let mut pairs = parse_overrides(&overrides)?;
            let out = take(&mut pairs, "out").map(PathBuf::from).or(out);
            let config = take(&mut pairs, "config").map(PathBuf::from).or(config);
            let cfg = scenario_from(config.as_deref(), &pairs)?;
            let dir = out.unwrap_or_else(|| {
                let root = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| "zsda-out".into());
                Layout::new(root).data()
            });
            let stats = DataDir::new(&dir).generate(&cfg)?;
            println!("scenario={} seed={} out={}", cfg.name, cfg.seed, dir.display());
            print!("{}", stats_table(&stats));
        }
        Cmd::Train {
            mut root,
            mut data,
            config,
            sidecar,
            quiet,
            overrides,
        } => {
            let mut pairs = parse_overrides(&overrides)?;
            if let Some(v) = take(&mut pairs, "out") {
                root.out = v.into();
            }
            if let Some(v) = take(&mut pairs, "data") {
                data.data = Some(v.into());
            }
            let config = take(&mut pairs, "config").map(PathBuf::from).or(config);
            let sidecar = take(&mut pairs, "sidecar").map(PathBuf::from).or(sidecar);
            let quiet = match take(&mut pairs, "quiet") {
                Some(v) => kv::flag("quiet", &v)?,
                None => quiet,
            };
            let cfg = train_config_from(config.as_deref(), &pairs)?;
            let layout = Layout::new(&root.out);
            let outcome = train(&layout, &data_dir(&root, &data), &cfg, sidecar.as_deref(), !quiet)?;
            for p in &outcome.checkpoints {
                println!("checkpoint={}", p.display());
            }
            println!(
                "run={} config_hash={} skipped={}",
                outcome.run,
                outcome.config_hash,
                outcome.output.skipped()
            );
        }
        Cmd::Decode {
            root,
            data,
            ckpt,
            manifest,
            head,
        } => {
            let dir = data_dir(&root, &data);
            let world = dir.world()?;
            let utts = dir.load_manifest(&dir.resolve(&manifest), &world)?;
            let model = Checkpoint::load(&ckpt)?;
            let head = parse_head(&head)?;
            let language = if head == Head::Source && model.params.head_source.output_dim() == world.source.vocab_size() {
                &world.source
            } else {
                &world.target
            };
            let mut text = String::new();
            for u in &utts {
                let hyp = zsda_core::model::transcribe(&model.params, &u.frames, head)?;
                text.push_str(&format!("{}\t{}\n", u.id, language.render(hyp.tokens())));
            }
            let stem = ckpt.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let name = Path::new(&manifest).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            write_file(&Layout::new(&root.out).reports().join(format!("decode.{stem}.{name}.tsv")), text.as_bytes())?;
            print!("{text}");
        }
        Cmd::Evaluate {
            root,
            data,
            ckpt,
            manifest,
            head,
        } => {
            let dir = data_dir(&root, &data);
            let world = dir.world()?;
            let utts = dir.load_manifest(&dir.resolve(&manifest), &world)?;
            let model = Checkpoint::load(&ckpt)?;
            let report = evaluate(&model.params, &utts, parse_head(&head)?, &manifest)?;
            let row = EvalRow {
                config_hash: ckpt_hash(&model),
                checkpoint: display_rel(&ckpt, &root.out),
                corpus: report.corpus.clone(),
                head,
                utterances: report.utterances,
                error_rate: report.error_rate,
                substitutions: report.substitutions,
                deletions: report.deletions,
                insertions: report.insertions,
                ref_len: report.ref_len,
            };
            append_csv(&Layout::new(&root.out).reports().join("eval.csv"), std::slice::from_ref(&row))?;
            println!(
                "corpus={} utterances={} error_rate={:.4} substitutions={} deletions={} insertions={} config_hash={}",
                row.corpus, row.utterances, row.error_rate, row.substitutions, row.deletions, row.insertions, row.config_hash
            );
        }
        Cmd::BtCtc {
            root,
            data,
            ckpt,
            recognizer,
            sidecar,
        } => {
            let layout = Layout::new(&root.out);
            let dir = data_dir(&root, &data);
            let world = dir.world()?;
            let unlabeled = dir.load_split("unlabeled", &world)?;
            let side = sidecar.unwrap_or_else(|| dir.sidecar_path());
            if !side.exists() {
                return Err(Error::usage(format!(
                    "back-transliteration scoring needs the transcripts sidecar ({} missing)",
                    side.display()
                )));
            }
            let truth = dir.load_sidecar(&side, &unlabeled, &world)?;
            let rec_path = recognizer.unwrap_or_else(|| layout.ckpt().join("recognizer.ckpt"));
            let rec = if rec_path.exists() {
                Checkpoint::load(&rec_path)?.params
            } else {
                let cfg = TrainConfig::default();
                let params = source_recognizer(&world, &unlabeled, &truth, &cfg)?;
                let mut c = Checkpoint::new(params.clone());
                c.meta = format!("role = recognizer\n{}", cfg.to_kv_text());
                c.save(&rec_path)?;
                params
            };
            let model = Checkpoint::load(&ckpt)?;
            let seed = model.meta_value("seed").and_then(|s| s.parse().ok()).unwrap_or(1);
            let t = bt_ctc_triplet(&model.params, &world, &unlabeled, &truth, &rec, seed)?;
            let hash = ckpt_hash(&model);
            let name = display_rel(&ckpt, &root.out);
            let rows: Vec<BtCtcRow> = [("model", &t.model), ("topline", &t.topline), ("baseline", &t.baseline)]
                .into_iter()
                .map(|(kind, r)| BtCtcRow {
                    config_hash: hash.clone(),
                    checkpoint: name.clone(),
                    kind: kind.into(),
                    mean_loss: r.mean_loss,
                    scored: r.scored,
                    infeasible: r.infeasible,
                    utterances: r.utterances,
                })
                .collect();
            append_csv(&layout.reports().join("bt_ctc.csv"), &rows)?;
            for r in &rows {
                let loss = r.mean_loss.map_or("-".into(), |l| format!("{l:.4}"));
                println!("kind={} mean_loss={loss} scored={} infeasible={}", r.kind, r.scored, r.infeasible);
            }
        }
        Cmd::Analyze {
            root,
            data,
            cca,
            pca,
            tokens,
            ckpt,
            ckpt_a,
            ckpt_b,
            manifest,
        } => {
            if !(cca || pca || tokens) {
                return Err(Error::usage("analyze needs --cca, --pca or --tokens"));
            }
            let layout = Layout::new(&root.out);
            let dir = data_dir(&root, &data);
            let world = dir.world()?;
            let utts = dir.load_manifest(&dir.resolve(&manifest), &world)?;
            if cca {
                let (Some(pa), Some(pb)) = (&ckpt_a, &ckpt_b) else {
                    return Err(Error::usage("--cca needs --ckpt-a and --ckpt-b"));
                };
                let (a, b) = (Checkpoint::load(pa)?, Checkpoint::load(pb)?);
                let report = cca_between(&a.params, &b.params, &utts, 0)?;
                let rows: Vec<CcaRow> = (0..report.labels.len())
                    .map(|i| CcaRow {
                        config_hash: ckpt_hash(&b),
                        checkpoint_a: display_rel(pa, &root.out),
                        checkpoint_b: display_rel(pb, &root.out),
                        corpus: manifest.clone(),
                        layer: report.labels[i].clone(),
                        similarity: report.similarity[i],
                        samples: report.samples,
                        epsilon_a: report.epsilon[i].0,
                        epsilon_b: report.epsilon[i].1,
                    })
                    .collect();
                append_csv(&layout.reports().join("cca.csv"), &rows)?;
                for r in &rows {
                    let s = r.similarity.map_or("-".into(), |s| format!("{s:.6}"));
                    println!("layer={} similarity={s} samples={}", r.layer, r.samples);
                }
            }
            if pca || tokens {
                let path = ckpt.as_ref().ok_or_else(|| Error::usage("--pca and --tokens need --ckpt"))?;
                let model = Checkpoint::load(path)?;
                let hash = ckpt_hash(&model);
                if pca {
                    let (proj, points) = pca_points(&model.params, &utts)?;
                    let rows: Vec<PcaRow> = points
                        .into_iter()
                        .map(|p| PcaRow {
                            x: p.x,
                            y: p.y,
                            token: p.token,
                            domain: p.domain,
                            config_hash: hash.clone(),
                        })
                        .collect();
                    write_csv(&layout.reports().join("pca.csv"), &rows)?;
                    println!("points={} retained_variance={:.6}", rows.len(), proj.retained());
                }
                if tokens {
                    let labeled = dir.load_split("labeled", &world)?;
                    let unlabeled = dir.load_split("unlabeled", &world)?;
                    let t = token_tables(&model.params, &world, &labeled, &unlabeled)?;
                    let mut rows = Vec::new();
                    for (source, dist) in [("transcripts", &t.transcripts), ("transliterations", &t.transliterations)] {
                        for (token, &frequency) in dist.iter().enumerate().skip(1) {
                            rows.push(TokenRow {
                                config_hash: hash.clone(),
                                source: source.into(),
                                token,
                                symbol: world.target.symbol(token).to_string(),
                                frequency,
                            });
                        }
                    }
                    write_csv(&layout.reports().join("tokens.csv"), &rows)?;
                    println!("total_variation={:.6}", t.total_variation);
                }
            }
        }
        Cmd::Reproduce { root, recipe, threads } => {
            let recipe = match &recipe {
                Some(p) => Recipe::parse(&read_text(p)?, p.parent().unwrap_or(Path::new(".")))?,
                None => Recipe::standard(),
            };
            reproduce(&Layout::new(&root.out), &recipe, threads.max(1))?;
        }
    }
    Ok(())
}

fn train_args(cfg: &TrainConfig) -> Result<Vec<String>> {
    let mut args = Vec::new();
    for (k, v) in kv::parse(&cfg.to_kv_text())? {
        args.push(format!("--{k}={v}"));
    }
    Ok(args)
}

/// Trains every run of `recipe` in child processes, then evaluates and
/// writes `eval.csv` and `summary.csv`. A failed run stops new runs from
/// starting; finished runs are still summarized.
pub fn reproduce(layout: &Layout, recipe: &Recipe, threads: usize) -> Result<()> {
    let data = DataDir::new(layout.data());
    let scenario_text = recipe.scenario.to_kv_text();
    let current = read_text(&data.root.join(SCENARIO_FILE)).ok();
    if current.as_deref() != Some(scenario_text.as_str()) || !data.sidecar_path().exists() {
        let stats = data.generate(&recipe.scenario)?;
        print!("{}", stats_table(&stats));
    }
    let exe = std::env::current_exe().map_err(|e| Error::io("current executable", e))?;
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let done: Mutex<Vec<(usize, bool)>> = Mutex::new(Vec::new());
    let failures: Mutex<Vec<String>> = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..threads.min(recipe.runs.len()) {
            s.spawn(|| loop {
                if abort.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(cfg) = recipe.runs.get(i) else { break };
                let name = run_name(cfg);
                let result = train_args(cfg).and_then(|args| {
                    let mut cmd = Command::new(&exe);
                    cmd.arg("train").arg("--out").arg(&layout.root).arg("--quiet");
                    if cfg.mode.needs_unlabeled_truth() {
                        cmd.arg("--sidecar").arg(data.sidecar_path());
                    }
                    cmd.env_remove(OUT_ENV).args(&args);
                    cmd.output().map_err(|e| Error::io(&exe, e))
                });
                let ok = match result {
                    Ok(out) if out.status.success() => true,
                    Ok(out) => {
                        let msg = String::from_utf8_lossy(&out.stderr).trim().to_string();
                        failures.lock().unwrap().push(format!("{name}: {msg}"));
                        false
                    }
                    Err(e) => {
                        failures.lock().unwrap().push(format!("{name}: {e}"));
                        false
                    }
                };
                if !ok {
                    abort.store(true, Ordering::SeqCst);
                }
                eprintln!("run={name} status={}", if ok { "ok" } else { "failed" });
                done.lock().unwrap().push((i, ok));
            });
        }
    });
    let mut done = done.into_inner().unwrap();
    done.sort_unstable();

    let world = data.world()?;
    let test = data.load_split("test", &world)?;
    let dev = data.load_split("dev", &world)?;
    let mut eval_rows = Vec::new();
    let mut results = Vec::new();
    for &(i, ok) in &done {
        if !ok {
            continue;
        }
        let cfg = &recipe.runs[i];
        let name = run_name(cfg);
        let path = layout.final_ckpt(&name, cfg);
        let ckpt = Checkpoint::load(&path)?;
        let hash = ckpt_hash(&ckpt);
        for (corpus, utts) in [("dev", &dev), ("test", &test)] {
            let r = evaluate(&ckpt.params, utts, Head::Target, corpus)?;
            if corpus == "test" {
                results.push(RunResult {
                    group: run_group(cfg),
                    seed: cfg.seed,
                    error_rate: r.error_rate,
                    skipped: logged_skips(&layout.log(&name))?,
                    config_hash: hash.clone(),
                });
            }
            eval_rows.push(EvalRow {
                config_hash: hash.clone(),
                checkpoint: display_rel(&path, &layout.root),
                corpus: corpus.into(),
                head: "target".into(),
                utterances: r.utterances,
                error_rate: r.error_rate,
                substitutions: r.substitutions,
                deletions: r.deletions,
                insertions: r.insertions,
                ref_len: r.ref_len,
            });
        }
    }
    let groups = summarize(&results);
    let summary: Vec<SummaryRow> = groups
        .iter()
        .map(|g| SummaryRow {
            mode: g.group.clone(),
            runs: g.results.len(),
            mean_error_rate: g.mean(),
            error_rates: g
                .results
                .iter()
                .map(|r| format!("{}:{:.4}", r.seed, r.error_rate))
                .collect::<Vec<_>>()
                .join(" "),
            skipped: g.skipped(),
            config_hashes: g.results.iter().map(|r| r.config_hash.as_str()).collect::<Vec<_>>().join(" "),
        })
        .collect();
    let reports = layout.reports();
    write_csv(&reports.join("eval.csv"), &eval_rows)?;
    write_csv(&reports.join("summary.csv"), &summary)?;

    println!("{:<40} {:>5} {:>10} {:>8}", "mode", "runs", "mean CER", "skipped");
    for row in &summary {
        println!("{:<40} {:>5} {:>10.2} {:>8}", row.mode, row.runs, row.mean_error_rate, row.skipped);
    }
    for (label, pass) in ordering_checks(&groups) {
        println!("{} {label}", if pass { "PASS" } else { "FAIL" });
    }

    let failures = failures.into_inner().unwrap();
    if !failures.is_empty() {
        return Err(Error::Run(failures.join("\n")));
    }
    Ok(())
}

