//! Acceptance suite: every criterion prints one PASS/FAIL line, and the test
//! fails if any criterion fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use impzombie::analytics::{
    account_age_days, activity_heatmap, ff_ratios, fleiss_kappa, mean, posts_per_day, welch_t_test,
};
use impzombie::classifier::{
    analyze_errors, build_features, evaluate, mlp_train, predict, softmax2, train_classifier, train_tfidf_logreg,
    BaselineConfig, MlpConfig, MlpModel,
};
use impzombie::contrastive::{mnr_loss_grad, similarity_margin, train_encoder, MnrConfig};
use impzombie::corpus::{split_pairs, synth_generate, AccountRecord, Label, ReplyPair, SynthConfig};
use impzombie::derive_seed;
use impzombie::logreg::{fit_logreg, LogRegConfig};
use impzombie::textenc::{EncoderConfig, EncoderModel};

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

/// `||a - n|| / max(||a||, ||n||)`, the relative error of a whole gradient.
fn rel_err(a: &[f64], n: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(n).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(n.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn central_diff(x: &mut [f64], i: usize, h: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = x[i];
    x[i] = orig + h;
    let up = f(x);
    x[i] = orig - h;
    let down = f(x);
    x[i] = orig;
    (up - down) / (2.0 * h)
}

fn criterion_1_gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_mnr: f64 = 0.0;
    for _ in 0..50 {
        let b = rng.random_range(2..=6);
        let d = rng.random_range(2..=10);
        let scale = rng.random_range(1.0..20.0);
        let rows = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
            (0..b).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
        };
        let (a, p) = (rows(&mut rng), rows(&mut rng));
        let (_, ga, gp) = mnr_loss_grad(&a, &p, scale).map_err(|e| e.to_string())?;
        let analytic: Vec<f64> = ga.concat().into_iter().chain(gp.concat()).collect();
        let mut flat: Vec<f64> = a.concat().into_iter().chain(p.concat()).collect();
        let loss_at = |x: &[f64]| {
            let split = |s: &[f64]| s.chunks(d).map(<[f64]>::to_vec).collect::<Vec<_>>();
            mnr_loss_grad(&split(&x[..b * d]), &split(&x[b * d..]), scale).unwrap().0.loss
        };
        let numeric: Vec<f64> = (0..flat.len()).map(|i| central_diff(&mut flat, i, 1e-5, loss_at)).collect();
        worst_mnr = worst_mnr.max(rel_err(&analytic, &numeric));
    }

    let mut worst_mlp: f64 = 0.0;
    for case in 0..50u64 {
        let input = rng.random_range(1..=10);
        let hidden = rng.random_range(1..=8);
        let mut m = MlpModel::new(input, hidden, case).map_err(|e| e.to_string())?;
        for b in m.b1.iter_mut().chain(m.b2.iter_mut()) {
            *b = rng.random_range(-0.5..0.5);
        }
        let n = rng.random_range(1..=5);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..input).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let ys: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let (_, g) = m.loss_and_grad(&refs, &ys).map_err(|e| e.to_string())?;
        let mut theta = m.params_flat();
        let mut probe = m.clone();
        let numeric: Vec<f64> = (0..theta.len())
            .map(|i| {
                central_diff(&mut theta, i, 1e-6, |t| {
                    probe.set_params_flat(t);
                    probe.loss_and_grad(&refs, &ys).unwrap().0
                })
            })
            .collect();
        worst_mlp = worst_mlp.max(rel_err(&g.flat(), &numeric));
    }
    let msg = format!("50 MNR configs worst rel err {worst_mnr:.2e}; 50 MLP configs worst rel err {worst_mlp:.2e} (limit 1e-4)");
    check(worst_mnr <= 1e-4 && worst_mlp <= 1e-4, msg.clone(), msg)
}

/// Two-sided tail `P(|T| >= |t|)` by Simpson's rule on the t density.
fn t_tail_by_quadrature(t: f64, df: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let ln_c = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    let f = |x: f64| (ln_c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp();
    let n = 20_000;
    let b = t.abs();
    let h = b / n as f64;
    let mut s = f(0.0) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    1.0 - 2.0 * s * h / 3.0
}

fn criterion_2_closed_forms() -> Outcome {
    let k = fleiss_kappa(&[vec![2, 2], vec![2, 2]], 4).map_err(|e| e.to_string())?;
    let kappa = k.kappa.ok_or("kappa undefined")?;
    let kappa_ok = (kappa + 1.0 / 3.0).abs() <= 1e-9;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_p: f64 = 0.0;
    for _ in 0..100 {
        let nx = rng.random_range(2..30);
        let ny = rng.random_range(2..30);
        let shift = rng.random_range(-3.0..3.0);
        let x: Vec<f64> = (0..nx).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..ny).map(|_| rng.random_range(-5.0..5.0) * 2.0 + shift).collect();
        let r = welch_t_test(&x, &y).map_err(|e| e.to_string())?;
        worst_p = worst_p.max((r.p_value - t_tail_by_quadrature(r.t_statistic, r.degrees_of_freedom)).abs());
    }

    let mut worst_or: f64 = 0.0;
    for (a, b, c, d) in [(30usize, 10usize, 20usize, 40usize), (5, 7, 11, 3), (14, 6, 5, 25)] {
        let mut rows = Vec::new();
        let mut ys = Vec::new();
        for (n, x, y) in [(a, true, true), (b, true, false), (c, false, true), (d, false, false)] {
            for _ in 0..n {
                rows.push(if x { vec![(0, 1.0)] } else { vec![] });
                ys.push(y);
            }
        }
        let cfg = LogRegConfig { l2: 0.0, tol: 1e-10, ..Default::default() };
        let m = fit_logreg(&rows, &ys, 1, &cfg).map_err(|e| e.to_string())?;
        let or = (a * d) as f64 / (b * c) as f64;
        worst_or = worst_or.max(((m.weights[0].exp() - or) / or).abs());
    }
    let msg = format!(
        "kappa {kappa:.12} (target -1/3); worst |p - quadrature| {worst_p:.2e} over 100 cases; worst odds-ratio rel err {worst_or:.2e}"
    );
    check(kappa_ok && worst_p <= 1e-6 && worst_or <= 1e-3, msg.clone(), msg)
}

fn default_corpus(seed: u64) -> impzombie::corpus::SynthCorpus {
    synth_generate(&SynthConfig { seed, ..Default::default() }).expect("default synth config is valid")
}

fn base_encoder(seed: u64) -> EncoderModel {
    EncoderModel::new_random(EncoderConfig::default(), derive_seed(seed, "encoder/init")).expect("valid encoder config")
}

fn fine_tune(corpus: &impzombie::corpus::SynthCorpus, base: &EncoderModel, seed: u64) -> EncoderModel {
    let cfg = MnrConfig { seed: derive_seed(seed, "contrastive"), ..Default::default() };
    train_encoder(&corpus.clean_pairs, base, &cfg).expect("training succeeds").0
}

fn per_seed<T: Send>(seeds: std::ops::Range<u64>, f: impl Fn(u64) -> T + Sync) -> Vec<T> {
    std::thread::scope(|s| {
        let handles: Vec<_> = seeds.map(|seed| s.spawn({ let f = &f; move || f(seed) })).collect();
        handles.into_iter().map(|h| h.join().expect("worker")).collect()
    })
}

fn criterion_3_contrastive() -> Outcome {
    let gains = per_seed(0..5, |seed| {
        let corpus = default_corpus(seed);
        let base = base_encoder(seed);
        let tuned = fine_tune(&corpus, &base, seed);
        let before = similarity_margin(&base, &corpus.pairs).unwrap();
        let after = similarity_margin(&tuned, &corpus.pairs).unwrap();
        (corpus.pairs.iter().filter(|p| p.label == Label::Zombie).count(), after - before)
    });
    let min_class = gains.iter().map(|g| g.0).min().unwrap_or(0);
    let mean_gain = gains.iter().map(|g| g.1).sum::<f64>() / gains.len() as f64;
    let per: Vec<String> = gains.iter().map(|g| format!("{:.3}", g.1)).collect();
    let msg = format!("margin gain mean {mean_gain:.4} over 5 seeds [{}] (need >= 0.10; >= {min_class} pairs/class)", per.join(", "));
    check(mean_gain >= 0.10 && min_class >= 2000, msg.clone(), msg)
}

fn accuracy(preds: &[Label], test: &[&ReplyPair]) -> f64 {
    let gold: Vec<Label> = test.iter().map(|p| p.label).collect();
    evaluate(preds, &gold).expect("aligned").accuracy
}

/// (proposed accuracy, TF-IDF accuracy) on one seeded 80/20 split.
fn end_to_end(seed: u64, vocab_overlap: f64) -> (f64, f64) {
    let corpus = synth_generate(&SynthConfig { seed, zombie_vocab_overlap: vocab_overlap, ..Default::default() }).unwrap();
    let base = base_encoder(seed);
    let enc = fine_tune(&corpus, &base, seed);
    let split = split_pairs(&corpus.pairs, 0.8, derive_seed(seed, "split"), false).unwrap();
    let (train, test) = split.apply(&corpus.pairs);
    let cfg = MlpConfig { seed: derive_seed(seed, "classifier"), ..Default::default() };
    let (mlp, _) = train_classifier(&train, &enc, &cfg).unwrap();
    let preds: Vec<Label> = test.iter().map(|p| predict(&mlp, &enc, &p.parent_text, &p.reply_text).0).collect();
    let tfidf = train_tfidf_logreg(&train, &BaselineConfig::default()).unwrap();
    let bpreds: Vec<Label> = test.iter().map(|p| tfidf.predict(&p.parent_text, &p.reply_text).0).collect();
    (accuracy(&preds, &test), accuracy(&bpreds, &test))
}

fn criterion_4_end_to_end() -> Outcome {
    let default = per_seed(0..5, |s| end_to_end(s, SynthConfig::default().zombie_vocab_overlap));
    let overlap = per_seed(0..5, |s| end_to_end(s, 0.5));
    let mean = |v: &[(f64, f64)], i: usize| v.iter().map(|r| if i == 0 { r.0 } else { r.1 }).sum::<f64>() / v.len() as f64;
    let acc = mean(&default, 0);
    let (prop_half, tfidf_half) = (mean(&overlap, 0), mean(&overlap, 1));
    let msg = format!(
        "proposed accuracy {acc:.4} (need >= 0.90, 5 seeds); at overlap 0.5 proposed {prop_half:.4} vs TF-IDF {tfidf_half:.4}"
    );
    check(acc >= 0.90 && prop_half > tfidf_half, msg.clone(), msg)
}

fn class_metrics(accounts: &[AccountRecord], label: Label, reference: chrono::DateTime<chrono::Utc>) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let of: Vec<AccountRecord> = accounts.iter().filter(|a| a.label == label).cloned().collect();
    let ppd = of.iter().map(|a| posts_per_day(a, reference).unwrap()).collect();
    let young = of
        .iter()
        .map(|a| if account_age_days(a, reference).unwrap() < 500.0 { 1.0 } else { 0.0 })
        .collect();
    (ppd, ff_ratios(&of).0, young)
}

fn criterion_5_characterization() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for seed in 0..5 {
        let cfg = SynthConfig { seed, ..Default::default() };
        let corpus = synth_generate(&cfg).unwrap();
        let (g_ppd, g_ff, g_young) = class_metrics(&corpus.accounts, Label::General, cfg.reference_time);
        let (z_ppd, z_ff, z_young) = class_metrics(&corpus.accounts, Label::Zombie, cfg.reference_time);
        let t_ppd = welch_t_test(&z_ppd, &g_ppd).map_err(|e| e.to_string())?;
        let t_ff = welch_t_test(&z_ff, &g_ff).map_err(|e| e.to_string())?;
        let t_young = welch_t_test(&z_young, &g_young).map_err(|e| e.to_string())?;
        let (mz, mg) = (mean(&z_ppd).unwrap(), mean(&g_ppd).unwrap());
        let (fz, fg) = (mean(&z_ff).unwrap(), mean(&g_ff).unwrap());
        let (yz, yg) = (mean(&z_young).unwrap(), mean(&g_young).unwrap());
        let pass = mz > 2.0 * mg
            && t_ppd.p_value < 0.01
            && fz < fg
            && t_ff.p_value < 0.01
            && yz > yg
            && t_young.p_value < 0.01;
        ok &= pass;
        if seed == 0 || !pass {
            lines.push(format!(
                "seed {seed}: posts/day {mz:.2} vs {mg:.2} (p={:.1e}), follow ratio {fz:.2} vs {fg:.2} (p={:.1e}), <500d share {yz:.3} vs {yg:.3} (p={:.1e})",
                t_ppd.p_value, t_ff.p_value, t_young.p_value
            ));
        }
    }
    let msg = format!("{} [5 seeds, zombie vs general]", lines.join("; "));
    check(ok, msg.clone(), msg)
}

fn criterion_6_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = Vec::new();

    // heatmap z-cells
    for _ in 0..20 {
        let n = rng.random_range(2..500);
        let ts: Vec<_> = (0..n)
            .map(|_| chrono::DateTime::from_timestamp(rng.random_range(1.6e9 as i64..1.75e9 as i64), 0).unwrap())
            .collect();
        let h = activity_heatmap(&ts, 540).map_err(|e| e.to_string())?;
        let cells: Vec<f64> = h.cells.iter().flatten().copied().collect();
        let m = cells.iter().sum::<f64>() / 168.0;
        let sd = (cells.iter().map(|z| (z - m).powi(2)).sum::<f64>() / 168.0).sqrt();
        let uniform = cells.iter().all(|&z| z == 0.0);
        if m.abs() > 1e-9 || (!uniform && (sd - 1.0).abs() > 1e-9) {
            failures.push(format!("heatmap mean {m} sd {sd}"));
        }
    }
    // feature blocks
    for _ in 0..50 {
        let d = rng.random_range(1..=64);
        let u: Vec<f64> = (0..d).map(|_| rng.random_range(-10.0..10.0)).collect();
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-10.0..10.0)).collect();
        let f = build_features(&u, &v).map_err(|e| e.to_string())?;
        let [a, b, diff, prod] = f.blocks();
        let ok = f.as_slice().len() == 4 * d
            && (0..d).all(|i| diff[i] == a[i] - b[i] && prod[i] == a[i] * b[i] && a[i] == u[i] && b[i] == v[i]);
        if !ok {
            failures.push(format!("feature blocks d={d}"));
        }
    }
    // softmax
    for _ in 0..100 {
        let z = [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)];
        let c = rng.random_range(-100.0..100.0);
        let (p, q) = (softmax2(z), softmax2([z[0] + c, z[1] + c]));
        if (p[0] + p[1] - 1.0).abs() > 1e-9 || (p[0] - q[0]).abs() > 1e-12 || (p[1] - q[1]).abs() > 1e-12 {
            failures.push(format!("softmax {z:?} + {c}"));
        }
    }
    // split partition and determinism
    let corpus = synth_generate(&SynthConfig {
        n_general_accounts: 50,
        n_zombie_accounts: 50,
        n_general_pairs: 150,
        n_zombie_pairs: 120,
        n_clean_pairs: 200,
        seed: 6,
        ..Default::default()
    })
    .unwrap();
    for stratified in [false, true] {
        let s = split_pairs(&corpus.pairs, 0.8, 3, stratified).unwrap();
        let all: std::collections::BTreeSet<String> = corpus.pairs.iter().map(|p| p.pair_id.clone()).collect();
        let union: std::collections::BTreeSet<String> = s.train_ids.union(&s.test_ids).cloned().collect();
        if s.train_ids.intersection(&s.test_ids).next().is_some() || union != all {
            failures.push(format!("split partition (stratified={stratified})"));
        }
        if s != split_pairs(&corpus.pairs, 0.8, 3, stratified).unwrap() {
            failures.push("split determinism".into());
        }
    }
    // byte-identical reruns of every seeded operation
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |tag: &str| -> Result<Vec<Vec<u8>>, String> {
        let c = synth_generate(&SynthConfig {
            n_general_accounts: 40,
            n_zombie_accounts: 40,
            n_general_pairs: 100,
            n_zombie_pairs: 100,
            n_clean_pairs: 200,
            seed: 9,
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
        let mut out = vec![
            serde_json::to_vec(&c.accounts).unwrap(),
            serde_json::to_vec(&c.pairs).unwrap(),
            serde_json::to_vec(&c.clean_pairs).unwrap(),
        ];
        let split = split_pairs(&c.pairs, 0.8, 4, false).map_err(|e| e.to_string())?;
        out.push(serde_json::to_vec(&split).unwrap());
        let enc_cfg = EncoderConfig { hash_dim: 2048, embed_dim: 16, ..Default::default() };
        let base = EncoderModel::new_random(enc_cfg, 5).map_err(|e| e.to_string())?;
        let (tuned, log) = train_encoder(&c.clean_pairs, &base, &MnrConfig { seed: 5, epochs: 2, ..Default::default() })
            .map_err(|e| e.to_string())?;
        let p = dir.path().join(format!("enc_{tag}.bin"));
        tuned.save(&p).map_err(|e| e.to_string())?;
        out.push(std::fs::read(&p).unwrap());
        out.push(log.to_jsonl().into_bytes());
        let (train, _) = split.apply(&c.pairs);
        let (mlp, _) = train_classifier(&train, &tuned, &MlpConfig { hidden: 8, epochs: 3, seed: 5, ..Default::default() })
            .map_err(|e| e.to_string())?;
        out.push(serde_json::to_vec(&mlp).unwrap());
        let xs: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 40.0, 1.0 - i as f64 / 40.0]).collect();
        let ys: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();
        out.push(serde_json::to_vec(&mlp_train(&xs, &ys, &MlpConfig { hidden: 4, epochs: 3, seed: 1, ..Default::default() }).map_err(|e| e.to_string())?.0).unwrap());
        let tfidf = train_tfidf_logreg(&train, &BaselineConfig::default()).map_err(|e| e.to_string())?;
        out.push(serde_json::to_vec(&tfidf).unwrap());
        Ok(out)
    };
    let (first, second) = (run("a")?, run("b")?);
    let names = ["accounts", "pairs", "clean pairs", "split", "encoder", "encoder log", "classifier", "mlp", "tfidf"];
    for (i, name) in names.iter().enumerate() {
        if first[i] != second[i] {
            failures.push(format!("{name} not byte-identical"));
        }
    }
    check(
        failures.is_empty(),
        "heatmap z mean 0/std 1, feature blocks, softmax normalization + shift invariance, split partition, byte-identical reruns of synth/split/encoder/MLP/TF-IDF".into(),
        failures.join("; "),
    )
}

fn criterion_7_error_slices() -> Outcome {
    let seed = 0;
    let corpus = synth_generate(&SynthConfig { seed, zombie_duplicate_rate: 0.3, ..Default::default() }).unwrap();
    let base = base_encoder(seed);
    let enc = fine_tune(&corpus, &base, seed);
    let split = split_pairs(&corpus.pairs, 0.8, derive_seed(seed, "split"), false).unwrap();
    let (train, test) = split.apply(&corpus.pairs);
    let (mlp, _) = train_classifier(&train, &enc, &MlpConfig { seed: derive_seed(seed, "classifier"), ..Default::default() }).unwrap();
    let preds: Vec<Label> = test.iter().map(|p| predict(&mlp, &enc, &p.parent_text, &p.reply_text).0).collect();
    let gold: Vec<Label> = test.iter().map(|p| p.label).collect();
    let report = analyze_errors(&preds, &gold, &test).map_err(|e| e.to_string())?;

    // brute force: character scan with runs of whitespace collapsed by hand
    fn squash(s: &str) -> String {
        let mut out = String::new();
        let mut pending_space = false;
        for ch in s.chars() {
            if ch.is_whitespace() {
                pending_space = !out.is_empty();
            } else {
                if pending_space {
                    out.push(' ');
                    pending_space = false;
                }
                out.push(ch);
            }
        }
        out
    }
    let mut fn_count = 0;
    let mut dup_ids = Vec::new();
    for ((p, pred), g) in test.iter().zip(&preds).zip(&gold) {
        if *g == Label::Zombie && *pred != Label::Zombie {
            fn_count += 1;
            if squash(&p.parent_text) == squash(&p.reply_text) {
                dup_ids.push(p.pair_id.clone());
            }
        }
    }
    let reported_ids: Vec<String> =
        report.false_negatives.rows.iter().filter(|r| r.exact_duplicate).map(|r| r.pair_id.clone()).collect();
    let msg = format!(
        "{} false negatives, {} exact duplicates among them (brute force {}, {} FN total)",
        report.false_negatives.count,
        report.false_negatives.exact_duplicates,
        dup_ids.len(),
        fn_count
    );
    check(
        report.false_negatives.count == fn_count
            && report.false_negatives.exact_duplicates == dup_ids.len()
            && reported_ids == dup_ids
            && !dup_ids.is_empty(),
        msg.clone(),
        msg,
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 gradient correctness", criterion_1_gradients),
        ("2 closed-form oracles", criterion_2_closed_forms),
        ("3 contrastive effect", criterion_3_contrastive),
        ("4 end-to-end detection", criterion_4_end_to_end),
        ("5 characterization", criterion_5_characterization),
        ("6 structural invariants", criterion_6_invariants),
        ("7 error-slice fidelity", criterion_7_error_slices),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                println!("FAIL criterion {name}: {detail} ({secs:.1}s)");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
