//! Acceptance criteria 1 to 10, one PASS/FAIL line each.
//!
//! Criteria 1-5 and 10 are exact contracts and fail the test when violated.
//! Criteria 6-9 are empirical orderings from full-size training runs; their
//! outcome is printed with the measured numbers but does not fail the suite.
//! Set `ZSDA_ACCEPTANCE_EXACT_ONLY` to skip them during development.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::Mutex;
use std::time::Instant;

use zsda::analysis::{bt_ctc_triplet, cca_between, source_recognizer};
use zsda_core::ctc::{argmax, brute_force_ctc, ctc_loss, greedy_decode, levenshtein, required_frames, BLANK};
use zsda_core::eval::{evaluate, score};
use zsda_core::model::{
    ctc_accumulate, ema_update, mask_augment, ssl_loss, EmaShadow, Head, MaskSpec, ModelConfig, ModelParams,
};
use zsda_core::numerics::{
    ce_layer_grads, ce_layer_loss, check_indices, finite_diff_check, log_softmax_in_place, softmax_ce_grad, Matrix,
    Rng, DEFAULT_FLOOR,
};
use zsda_core::pipeline::{run, Mode, RunOutput, Stage, TrainConfig, TrainData};
use zsda_core::synth::{gen_corpus, Corpus, ScenarioConfig, World};

/// Writes past libtest's output capture so the lines always reach the log.
fn line(text: &str) {
    let mut err = std::io::stderr();
    let _ = writeln!(err, "{text}");
}

fn verdict(n: usize, pass: bool, detail: &str) -> bool {
    line(&format!("criterion {n}: {} | {detail}", if pass { "PASS" } else { "FAIL" }));
    pass
}

fn random_logits(rng: &mut Rng, t: usize, v: usize, scale: f64) -> Matrix {
    Matrix::from_fn(t, v, |_, _| scale * rng.normal())
}

fn random_target(rng: &mut Rng, v: usize, max_len: usize, t: usize) -> Vec<usize> {
    loop {
        let len = rng.below(max_len + 1);
        let y: Vec<usize> = (0..len).map(|_| 1 + rng.below(v - 1)).collect();
        if required_frames(&y) <= t {
            return y;
        }
    }
}

fn criterion_1() -> bool {
    let start = Instant::now();
    let mut rng = Rng::new(1);
    let (mut worst, mut n) = (0.0f64, 0);
    while n < 500 {
        let t = 1 + rng.below(6);
        let v = 2 + rng.below(3);
        let x = random_logits(&mut rng, t, v, 2.0);
        let y = random_target(&mut rng, v, 3, t);
        let fast = ctc_loss(&x, &y).unwrap().loss;
        let slow = brute_force_ctc(&x, &y).unwrap();
        worst = worst.max((fast - slow).abs());
        n += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = n >= 200 && worst <= 1e-9 && secs < 60.0;
    verdict(1, pass, &format!("{n} instances, max |ctc - brute| = {worst:.2e} (tol 1e-9), {secs:.2}s"))
}

fn small_model() -> ModelConfig {
    ModelConfig {
        feature_dim: 3,
        context_radius: 1,
        hidden: vec![5, 4],
        target_vocab: 4,
        source_vocab: 3,
        ssl_clusters: 3,
    }
}

/// Central differences over every parameter, skipping coordinates whose
/// probes cross a ReLU kink.
fn model_grad_err(p: &ModelParams, analytic: &ModelParams, mut loss: impl FnMut(&ModelParams) -> (f64, u64)) -> (f64, bool) {
    let flat = p.flatten();
    let mut probe = p.clone();
    let report = check_indices(
        |q| {
            probe.unflatten(q).unwrap();
            loss(&probe)
        },
        &flat,
        &analytic.flatten(),
        1e-4,
        1e-4,
        DEFAULT_FLOOR,
        0..flat.len(),
    );
    (report.max_rel_err, report.passed())
}

fn criterion_2() -> bool {
    let mut rng = Rng::new(2);
    let (mut ctc_worst, mut ctc_ok) = (0.0f64, true);
    for _ in 0..20 {
        let t = 3 + rng.below(6);
        let v = 3 + rng.below(3);
        let x = random_logits(&mut rng, t, v, 1.0);
        let y = random_target(&mut rng, v, 3, t);
        let out = ctc_loss(&x, &y).unwrap();
        let r = finite_diff_check(
            |d| ctc_loss(&Matrix::from_vec(t, v, d.to_vec()).unwrap(), &y).unwrap().loss,
            x.data(),
            out.grad.data(),
            1e-4,
            1e-4,
        );
        ctc_worst = ctc_worst.max(r.max_rel_err);
        ctc_ok &= r.passed();
    }

    let spec = MaskSpec {
        time_mask_prob: 0.4,
        ..MaskSpec::default()
    };
    let (mut ssl_worst, mut ssl_ok) = (0.0f64, true);
    for i in 0..20 {
        let mut rng = Rng::new(300 + i);
        let p = ModelParams::init(&small_model(), &mut rng).unwrap();
        let frames = random_logits(&mut rng, 8, 3, 1.0);
        let targets: Vec<usize> = (0..8).map(|_| rng.below(3)).collect();
        let mask_rng = rng.split(1);
        let (_, grads) = ssl_loss(&p, &frames, &targets, &spec, &mut mask_rng.clone()).unwrap();
        let (err, ok) = model_grad_err(&p, &grads, |q| {
            let masked = mask_augment(&frames, &spec, &mut mask_rng.clone());
            let sig = ModelParams::activation_signature(&q.encode(&masked.frames).unwrap());
            (ssl_loss(q, &frames, &targets, &spec, &mut mask_rng.clone()).unwrap().0.loss, sig)
        });
        ssl_worst = ssl_worst.max(err);
        ssl_ok &= ok;
    }

    let (mut sup_worst, mut sup_ok) = (0.0f64, true);
    for i in 0..20 {
        let mut rng = Rng::new(400 + i);
        let p = ModelParams::init(&small_model(), &mut rng).unwrap();
        let frames = random_logits(&mut rng, 7, 3, 1.0);
        let target = random_target(&mut rng, 4, 3, 7);
        let mut grads = p.zeros_like();
        ctc_accumulate(&p, &frames, &target, Head::Target, &mut grads, 1.0, false).unwrap();
        let (err, ok) = model_grad_err(&p, &grads, |q| {
            let sig = ModelParams::activation_signature(&q.encode(&frames).unwrap());
            let mut scratch = q.zeros_like();
            (ctc_accumulate(q, &frames, &target, Head::Target, &mut scratch, 1.0, false).unwrap(), sig)
        });
        sup_worst = sup_worst.max(err);
        sup_ok &= ok;
    }
    verdict(
        2,
        ctc_ok && ssl_ok && sup_ok,
        &format!(
            "max rel err (tol 1e-4, h 1e-4, 20 instances each): ctc {ctc_worst:.2e}, ssl {ssl_worst:.2e}, model {sup_worst:.2e}"
        ),
    )
}

fn one_hot(n: usize, k: usize) -> Matrix {
    Matrix::from_fn(n, 1, |r, _| if r == k { 1.0 } else { 0.0 })
}

#[allow(clippy::needless_range_loop)]
fn criterion_3() -> bool {
    let mut rng = Rng::new(3);
    let (mut ce_worst, mut layer_worst, mut exact_worst) = (0.0f64, 0.0f64, 0.0f64);
    for trial in 0..20 {
        let (n, e, c) = (4, 3, 5);
        let k = trial % c;
        let y = one_hot(c, k);

        let v = random_logits(&mut rng, c, 1, 1.0);
        let g = softmax_ce_grad(&v, &y).unwrap();
        let r = finite_diff_check(
            |p| {
                let mut l = p.to_vec();
                log_softmax_in_place(&mut l);
                -l[k]
            },
            v.data(),
            g.data(),
            1e-5,
            1e-6,
        );
        ce_worst = ce_worst.max(r.max_rel_err);

        let o = random_logits(&mut rng, n, 1, 1.0);
        let w_e = random_logits(&mut rng, e, n, 0.5);
        let w_c = random_logits(&mut rng, c, e, 0.5);
        let (d_wc, d_we) = ce_layer_grads(&o, &y, &w_e, &w_c).unwrap();
        let r_c = finite_diff_check(
            |p| ce_layer_loss(&o, &y, &w_e, &Matrix::from_vec(c, e, p.to_vec()).unwrap()).unwrap(),
            w_c.data(),
            d_wc.data(),
            1e-5,
            1e-6,
        );
        let r_e = finite_diff_check(
            |p| ce_layer_loss(&o, &y, &Matrix::from_vec(e, n, p.to_vec()).unwrap(), &w_c).unwrap(),
            w_e.data(),
            d_we.data(),
            1e-5,
            1e-6,
        );
        layer_worst = layer_worst.max(r_c.max_rel_err).max(r_e.max_rel_err);

        // (softmax(W_c z) − y) zᵀ with plain loops
        let z: Vec<f64> = (0..e).map(|i| (0..n).map(|j| w_e.get(i, j) * o.get(j, 0)).sum()).collect();
        let logits: Vec<f64> = (0..c).map(|i| (0..e).map(|j| w_c.get(i, j) * z[j]).sum()).collect();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
        let total: f64 = exps.iter().sum();
        for i in 0..c {
            for j in 0..e {
                let expect = (exps[i] / total - y.get(i, 0)) * z[j];
                exact_worst = exact_worst.max((d_wc.get(i, j) - expect).abs());
            }
        }
    }
    let pass = ce_worst < 1e-6 && layer_worst < 1e-6 && exact_worst <= 1e-12;
    verdict(
        3,
        pass,
        &format!(
            "softmax_ce_grad rel err {ce_worst:.2e}, ce_layer_grads rel err {layer_worst:.2e} (tol 1e-6), dW_c vs independent {exact_worst:.2e} (tol 1e-12)"
        ),
    )
}

fn criterion_4() -> bool {
    let one_hot_path = |path: &[usize], v: usize| Matrix::from_fn(path.len(), v, |t, k| if path[t] == k { 1.0 } else { 0.0 });
    let (a, b) = (1, 2);
    let decode_cases: [(&[usize], &[usize]); 3] = [
        (&[a, a, BLANK, a], &[a, a]),
        (&[BLANK, BLANK, BLANK], &[]),
        (&[BLANK, b, b, BLANK, b, a], &[b, b, a]),
    ];
    let mut hand_ok = decode_cases
        .iter()
        .all(|(path, expect)| greedy_decode(&one_hot_path(path, 3)).tokens() == *expect);
    hand_ok &= greedy_decode(&Matrix::zeros(4, 5)).is_empty();
    // (ref, hyp, (S, D, I), error rate)
    type EditCase = (&'static [u8], &'static [u8], (usize, usize, usize), f64);
    let edit_cases: [EditCase; 3] = [
        (b"abc", b"abc", (0, 0, 0), 0.0),
        (b"abc", b"axc", (1, 0, 0), 100.0 / 3.0),
        (b"ab", b"a", (0, 1, 0), 50.0),
    ];
    for (r, h, (s, d, i), rate) in edit_cases {
        let e = levenshtein(r, h);
        let refs = [r.iter().map(|&x| x as usize).collect::<Vec<_>>()];
        let hyps = [h.iter().map(|&x| x as usize).collect::<Vec<_>>()];
        let report = score("hand", &refs, &hyps).unwrap();
        hand_ok &= (e.substitutions, e.deletions, e.insertions) == (s, d, i);
        hand_ok &= (report.error_rate - rate).abs() < 1e-9;
    }
    hand_ok &= score("hand", &[Vec::<usize>::new()], &[Vec::new()]).unwrap().error_rate == 0.0;

    let mut rng = Rng::new(4);
    let (mut blank_free, mut collapsed, mut runs_distinct, mut repeated_outputs) = (true, true, true, 0);
    for _ in 0..1000 {
        let t = 1 + rng.below(40);
        let v = 2 + rng.below(5);
        let x = random_logits(&mut rng, t, v, 2.0);
        let path: Vec<usize> = (0..t).map(|r| argmax(x.row(r))).collect();
        let out = greedy_decode(&x);
        let toks = out.tokens();
        blank_free &= !toks.contains(&BLANK);
        let mut expect = Vec::new();
        for (i, &k) in path.iter().enumerate() {
            if k != BLANK && (i == 0 || path[i - 1] != k) {
                expect.push(k);
            }
        }
        collapsed &= toks == expect.as_slice();
        let runs: Vec<usize> = path.iter().enumerate().filter(|&(i, &k)| i == 0 || path[i - 1] != k).map(|(_, &k)| k).collect();
        runs_distinct &= runs.windows(2).all(|w| w[0] != w[1]);
        repeated_outputs += toks.windows(2).any(|w| w[0] == w[1]) as usize;
    }
    let pass = hand_ok && blank_free && collapsed && runs_distinct;
    verdict(
        4,
        pass,
        &format!(
            "hand cases {hand_ok}; 1000 random decodes: blank-free {blank_free}, equal to collapsed argmax path {collapsed}, \
             no adjacent repeats before blank removal {runs_distinct} ({repeated_outputs} outputs repeat a token across a blank)"
        ),
    )
}

fn small_corpus() -> (World, Corpus) {
    let sc = ScenarioConfig {
        n_labeled: 48,
        n_unlabeled: 48,
        n_dev: 8,
        n_test: 8,
        ..ScenarioConfig::default()
    };
    gen_corpus(&sc).unwrap()
}

fn criterion_5() -> bool {
    let cfg = small_model();
    let mut xi = ModelParams::zeros(&cfg).unwrap();
    let mut theta = ModelParams::zeros(&cfg).unwrap();
    xi.fill(2.0);
    theta.fill(4.0);
    let half = ema_update(&EmaShadow::new(&xi, 0.5).unwrap(), &theta).unwrap();
    let scalar_exact = half.params.flatten().iter().all(|&x| x == 3.0);

    let (world, corpus) = small_corpus();
    let train = TrainConfig {
        curriculum_updates: 10,
        seed_updates: 10,
        pseudo_label_updates: 40,
        finetune_updates: 10,
        batch_size: 4,
        ema_check_every: 1,
        ssl_clusters: 8,
        ..TrainConfig::for_mode(Mode::TranslitZsda, 5)
    };
    let out = run(&train, &train_data(&world, &corpus, None), &mut ()).unwrap();
    let pl = out.reports.iter().find(|r| r.stage == Stage::PseudoLabel).unwrap();
    let dev = pl.ema_max_deviation.unwrap_or(f64::INFINITY);
    let pass = scalar_exact && pl.ema_checks == pl.updates && pl.updates > 0 && dev < 1e-12;
    verdict(
        5,
        pass,
        &format!(
            "alpha 0.5 scalar exact {scalar_exact}; {} of {} pseudo-label updates checked, max |teacher - (a xi + (1-a) theta)| = {dev:.2e} (tol 1e-12)",
            pl.ema_checks, pl.updates
        ),
    )
}

fn train_data<'a>(w: &World, c: &'a Corpus, truth: Option<&'a [Vec<usize>]>) -> TrainData<'a> {
    TrainData {
        labeled: &c.labeled,
        unlabeled: &c.unlabeled,
        unlabeled_truth: truth,
        target_vocab: w.target.vocab_size(),
        source_vocab: w.source.vocab_size(),
    }
}

/// A named scenario's world, corpus and unlabeled truth.
type Scenario = (&'static str, World, Corpus, Vec<Vec<usize>>);

/// One full-size training run and what the empirical criteria need from it.
struct Trained {
    label: String,
    seed: u64,
    test_cer: f64,
    out: RunOutput,
}

struct Job {
    label: &'static str,
    scenario: &'static str,
    cfg: TrainConfig,
}

fn job(label: &'static str, scenario: &'static str, mode: Mode, seed: u64, tweak: impl Fn(&mut TrainConfig)) -> Job {
    let mut cfg = TrainConfig::for_mode(mode, seed);
    tweak(&mut cfg);
    Job { label, scenario, cfg }
}

fn empirical_jobs() -> Vec<Job> {
    let mut jobs = Vec::new();
    for seed in 1..=3 {
        jobs.push(job("scratch", "default", Mode::Scratch, seed, |_| {}));
        jobs.push(job("ssl-zsda", "default", Mode::SslZsda, seed, |_| {}));
        jobs.push(job("translit-zsda", "default", Mode::TranslitZsda, seed, |_| {}));
        jobs.push(job("sup-zsda-curriculum", "default", Mode::SupZsdaCurriculum, seed, |_| {}));
        jobs.push(job("no-curriculum", "default", Mode::TranslitZsda, seed, |c| c.no_curriculum = true));
        jobs.push(job("no-continuous-pl", "default", Mode::TranslitZsda, seed, |c| c.no_continuous_pl = true));
        jobs.push(job("shared-head", "default", Mode::TranslitZsda, seed, |c| c.shared_head = true));
        jobs.push(job("distant", "distant", Mode::TranslitZsda, seed, |_| {}));
        jobs.push(job("cross-domain", "cross-domain", Mode::TranslitZsda, seed, |_| {}));
    }
    jobs
}

fn run_jobs(jobs: Vec<Job>, corpora: &[Scenario]) -> Vec<Trained> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.len());
    let queue = Mutex::new(jobs.into_iter().enumerate().collect::<Vec<_>>());
    let results = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let Some((i, job)) = queue.lock().unwrap().pop() else { break };
                let (_, world, corpus, truth) = corpora.iter().find(|c| c.0 == job.scenario).unwrap();
                let truth = job.cfg.mode.needs_unlabeled_truth().then_some(truth.as_slice());
                let start = Instant::now();
                let out = run(&job.cfg, &train_data(world, corpus, truth), &mut ()).unwrap();
                let test_cer = evaluate(&out.params, &corpus.test, Head::Target, "test").unwrap().error_rate;
                line(&format!(
                    "  run {} seed {}: test CER {test_cer:.2} ({:.0}s)",
                    job.label,
                    job.cfg.seed,
                    start.elapsed().as_secs_f64()
                ));
                let trained = Trained {
                    label: job.label.to_string(),
                    seed: job.cfg.seed,
                    test_cer,
                    out,
                };
                results.lock().unwrap().push((i, trained));
            });
        }
    });
    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|(i, _)| *i);
    results.into_iter().map(|(_, t)| t).collect()
}

fn runs<'a>(all: &'a [Trained], label: &str) -> Vec<&'a Trained> {
    let mut v: Vec<&Trained> = all.iter().filter(|t| t.label == label).collect();
    v.sort_by_key(|t| t.seed);
    v
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn mean_cer(all: &[Trained], label: &str) -> f64 {
    mean(runs(all, label).iter().map(|t| t.test_cer))
}

fn fmt_cers(all: &[Trained], label: &str) -> String {
    let per: Vec<String> = runs(all, label).iter().map(|t| format!("{:.2}", t.test_cer)).collect();
    format!("{label} {:.2} [{}]", mean_cer(all, label), per.join(" "))
}

fn criterion_6(all: &[Trained]) -> bool {
    let (tr, ssl, sc, sup) = (
        mean_cer(all, "translit-zsda"),
        mean_cer(all, "ssl-zsda"),
        mean_cer(all, "scratch"),
        mean_cer(all, "sup-zsda-curriculum"),
    );
    let order = ssl - tr > 1.0 && sc - ssl > 1.0;
    let close = (sup - tr).abs() <= 2.0;
    verdict(
        6,
        order && close,
        &format!(
            "mean test CER over seeds 1-3: {}; {}; {}; {}; translit < ssl < scratch with gaps > 1: {order}; sup-zsda-curriculum within 2 of translit: {close}",
            fmt_cers(all, "translit-zsda"),
            fmt_cers(all, "ssl-zsda"),
            fmt_cers(all, "scratch"),
            fmt_cers(all, "sup-zsda-curriculum"),
        ),
    )
}

fn criterion_7(all: &[Trained], corpus: &Scenario) -> bool {
    let (_, world, c, truth) = corpus;
    let recognizer = source_recognizer(world, &c.unlabeled, truth, &TrainConfig::default()).unwrap();
    let score = |t: &Trained| bt_ctc_triplet(&t.out.pretrained, world, &c.unlabeled, truth, &recognizer, t.seed).unwrap();
    let loss = |r: &zsda_core::eval::BtCtcReport| r.mean_loss.unwrap_or(f64::INFINITY);
    let mut strict = true;
    let mut parts = Vec::new();
    let mut translit = Vec::new();
    for t in runs(all, "translit-zsda") {
        let s = score(t);
        let (top, model, base) = (loss(&s.topline), loss(&s.model), loss(&s.baseline));
        strict &= top < model && model < base;
        translit.push(model);
        parts.push(format!("seed {}: {top:.2} < {model:.2} < {base:.2}", t.seed));
    }
    let ablation: Vec<f64> = runs(all, "no-curriculum").iter().map(|t| loss(&score(t).model)).collect();
    let (m_tr, m_ab) = (mean(translit), mean(ablation));
    let curriculum = m_tr < m_ab;
    verdict(
        7,
        strict && curriculum,
        &format!(
            "BT-CTC topline < translit-zsda < shuffled per seed: {strict} ({}); translit-zsda {m_tr:.2} < no-curriculum {m_ab:.2}: {curriculum}",
            parts.join("; ")
        ),
    )
}

fn criterion_8(all: &[Trained], test: &Corpus) -> bool {
    let sim = |label: &str| -> Vec<f64> {
        runs(all, label)
            .iter()
            .map(|t| {
                let r = cca_between(&t.out.pretrained, &t.out.params, &test.test, t.seed).unwrap();
                r.last().unwrap_or(f64::NAN)
            })
            .collect()
    };
    let (tr, ssl) = (sim("translit-zsda"), sim("ssl-zsda"));
    let (m_tr, m_ssl) = (mean(tr.iter().copied()), mean(ssl.iter().copied()));
    verdict(
        8,
        m_tr > m_ssl,
        &format!("mean last-layer CCA pretrained vs fine-tuned: translit-zsda {m_tr:.4} {tr:.4?} vs ssl-zsda {m_ssl:.4} {ssl:.4?}"),
    )
}

fn criterion_9(all: &[Trained]) -> bool {
    let base = mean_cer(all, "translit-zsda");
    let mut pass = true;
    let mut parts = vec![format!("translit-zsda {base:.2}")];
    for label in ["no-curriculum", "no-continuous-pl", "distant", "cross-domain", "shared-head"] {
        let m = mean_cer(all, label);
        pass &= m > base;
        parts.push(format!("{label} {m:.2} ({})", if m > base { "worse" } else { "not worse" }));
    }
    verdict(9, pass, &format!("mean test CER: {}", parts.join(", ")))
}

fn zsda(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zsda"))
        .args(args)
        .env("ZSDA_OUT", out)
        .output()
        .unwrap()
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

const TINY: [&str; 12] = [
    "--curriculum-updates",
    "20",
    "--seed-updates",
    "20",
    "--pseudo-label-updates",
    "20",
    "--finetune-updates",
    "20",
    "--batch-size",
    "4",
    "--ssl-clusters",
    "8",
];

fn criterion_10() -> bool {
    let recipe = "scenario = default\nscenario.n_labeled = 40\nscenario.n_unlabeled = 40\nscenario.n_dev = 10\nscenario.n_test = 10\n\
                  train.curriculum_updates = 20\ntrain.seed_updates = 20\ntrain.pseudo_label_updates = 20\ntrain.finetune_updates = 20\n\
                  train.batch_size = 4\ntrain.ssl_clusters = 8\nmodes = scratch ssl-zsda translit-zsda sup-zsda sup-zsda-curriculum\nseeds = 1 2\n";
    let mut trees = Vec::new();
    let mut dirs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("recipe.cfg");
        std::fs::write(&path, recipe).unwrap();
        let root = dir.path().join("out");
        let o = zsda(&root, &["reproduce", "--recipe", path.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        trees.push(tree(&root));
        dirs.push(dir);
    }
    let files = trees[0].len();
    let ckpts = trees[0].iter().filter(|(p, _)| p.ends_with(".ckpt")).count();
    let identical = trees[0] == trees[1];

    let root = dirs[0].path().join("out");
    std::fs::remove_file(root.join("data/unlabeled.truth.tsv")).unwrap();
    let mut functional = Vec::new();
    for mode in ["scratch", "ssl-zsda", "translit-zsda"] {
        let mut args = vec!["train", "--quiet", "--mode", mode, "--seed", "9"];
        args.extend_from_slice(&TINY);
        let trained = zsda(&root, &args).status.success();
        let ckpt = root.join(format!("ckpt/{mode}-s9/{mode}.finetune.ckpt"));
        let evaluated = zsda(&root, &["evaluate", "--ckpt", ckpt.to_str().unwrap(), "--manifest", "test"])
            .status
            .success();
        functional.push(trained && evaluated);
    }
    let mut codes = Vec::new();
    for mode in ["sup-zsda", "sup-zsda-curriculum"] {
        let mut args = vec!["train", "--quiet", "--mode", mode, "--seed", "9"];
        args.extend_from_slice(&TINY);
        codes.push(zsda(&root, &args).status.code());
    }
    let contract = codes.iter().all(|c| *c == Some(i32::from(zsda::error::EXIT_CONTRACT)));
    let pass = identical && functional.iter().all(|&f| f) && contract;
    verdict(
        10,
        pass,
        &format!(
            "two reproduce runs byte-identical over {files} files ({ckpts} checkpoints): {identical}; without sidecar scratch/ssl-zsda/translit-zsda train+evaluate {functional:?}; sup modes exit {codes:?} (contract code {})",
            zsda::error::EXIT_CONTRACT
        ),
    )
}

#[test]
fn acceptance_criteria() {
    line("acceptance: exact criteria");
    let exact = [criterion_1(), criterion_2(), criterion_3(), criterion_4(), criterion_5(), criterion_10()];

    if std::env::var_os("ZSDA_ACCEPTANCE_EXACT_ONLY").is_some() {
        line("acceptance: empirical criteria 6-9 skipped (ZSDA_ACCEPTANCE_EXACT_ONLY set)");
        assert!(exact.iter().all(|&p| p), "an exact acceptance criterion failed; see the lines above");
        return;
    }
    line("acceptance: empirical criteria (27 full-size runs)");
    let start = Instant::now();
    let corpora: Vec<Scenario> = ["default", "distant", "cross-domain"]
        .into_iter()
        .map(|name| {
            let (w, c) = gen_corpus(&ScenarioConfig::preset(name).unwrap()).unwrap();
            let truth = c.unlabeled_truth.iter().map(|(_, t)| t.clone()).collect();
            (name, w, c, truth)
        })
        .collect();
    let all = run_jobs(empirical_jobs(), &corpora);
    let empirical = [
        criterion_6(&all),
        criterion_7(&all, &corpora[0]),
        criterion_8(&all, &corpora[0].2),
        criterion_9(&all),
    ];
    line(&format!(
        "acceptance: exact {}/6 pass, empirical {}/4 pass, empirical wall time {:.0}s",
        exact.iter().filter(|&&p| p).count(),
        empirical.iter().filter(|&&p| p).count(),
        start.elapsed().as_secs_f64()
    ));
    assert!(exact.iter().all(|&p| p), "an exact acceptance criterion failed; see the lines above");
}
