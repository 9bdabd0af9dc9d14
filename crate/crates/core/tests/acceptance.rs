//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nc_embed::compose::{read_model_file, Params};
use nc_embed::eval::{lexical_split, score, Averaging, UNAVAILABLE};
use nc_embed::fixtures::{
    additive_fixture, clustered_paraphrase_fixture, fulladd_fixture, planted_relation_task, street_level_fixture,
};
use nc_embed::linalg::cosine;
use nc_embed::neighbors::{neighbor_report, CandidatePool, CategoryResources, Cohort, Taxonomy};
use nc_embed::paraphrase::{
    backtranslate, filter_paraphrases, paraphrase_stats, MockBackend, ParaphraseSet, ParaphraseSource,
    VocabularyRatio, DEFAULT_PIVOTS,
};
use nc_embed::pipeline::{run_grid, DsmGridSpec};
use nc_embed::train::{
    gradient_check, paraphrase_separation, split_compounds, train_compositional, train_paraphrase, Batch,
    CompositionalExample, Distance, ParaphraseTriple, SplitRatios, TrainConfig,
};
use nc_embed::{init_model, ModelKind, NounCompound};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(limit: Duration, start: Instant) -> Outcome {
    let took = start.elapsed();
    if took > limit {
        Err(format!("took {took:.1?}, limit {limit:?}"))
    } else {
        Ok(format!("{took:.1?}"))
    }
}

fn uniform(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn gradients() -> Outcome {
    let start = Instant::now();
    const D: usize = 8;
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for kind in ModelKind::ALL {
        for distance in [Distance::Mse, Distance::Cosine] {
            let cfg = TrainConfig {
                distance,
                ..TrainConfig::compositional()
            };
            for b in 0..20u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 * b + kind as u64);
                let model = init_model(kind, D, b).map_err(|e| e.to_string())?;
                let batch = Batch::Compositional(
                    (0..4)
                        .map(|_| CompositionalExample {
                            v1: uniform(&mut rng, D),
                            v2: uniform(&mut rng, D),
                            observed: uniform(&mut rng, D),
                        })
                        .collect(),
                );
                let err = gradient_check(&model, &batch, &cfg, 1e-5).map_err(|e| e.to_string())?;
                ensure!(err < 1e-4, "{kind} {distance:?} batch {b}: relative error {err:e}");
                worst = worst.max(err);
                checks += 1;
            }
        }
    }
    let cfg = TrainConfig::paraphrase();
    ensure!(cfg.margin == 0.6, "margin default is {}", cfg.margin);
    for b in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(77 + b);
        let model = init_model(ModelKind::Lstm, D, b).map_err(|e| e.to_string())?;
        let mut seq = |n: usize| (0..n).map(|_| uniform(&mut rng, D)).collect::<Vec<_>>();
        let triples = (0..4)
            .map(|i| ParaphraseTriple {
                compound: seq(2),
                positive: seq(3 + i % 3),
                negative: seq(3 + (i + 1) % 3),
            })
            .collect();
        let err = gradient_check(&model, &Batch::Paraphrase(triples), &cfg, 1e-5).map_err(|e| e.to_string())?;
        ensure!(err < 1e-4, "lstm margin batch {b}: relative error {err:e}");
        worst = worst.max(err);
        checks += 1;
    }
    let t = within(Duration::from_secs(30), start)?;
    Ok(format!("{checks} batches, worst relative error {worst:.2e}, {t}"))
}

fn fulladd_recovery() -> Outcome {
    let start = Instant::now();
    let (fx, _, _) = fulladd_fixture(7, 200, 500, 10).map_err(|e| e.to_string())?;
    let (train, val, test) = split_compounds(&fx.compounds, SplitRatios::DEFAULT, 3).map_err(|e| e.to_string())?;
    let cfg = TrainConfig {
        epochs: 50,
        ..TrainConfig::compositional()
    };
    let out = train_compositional(&fx.space, &train, &val, ModelKind::FullAdd, &cfg).map_err(|e| e.to_string())?;
    let mean_cos = test
        .iter()
        .map(|nc| {
            let p = out
                .model
                .compose(fx.space.lookup(nc.w1()).unwrap(), fx.space.lookup(nc.w2()).unwrap())
                .unwrap();
            cosine(&p, fx.space.lookup(nc.surface()).unwrap()).unwrap()
        })
        .sum::<f64>()
        / test.len() as f64;
    ensure!(mean_cos >= 0.99, "FullAdd held-out cosine {mean_cos:.4}");

    let fx = additive_fixture(2, 100, 400, 10).map_err(|e| e.to_string())?;
    let (train, val, _) = split_compounds(&fx.compounds, SplitRatios::DEFAULT, 3).map_err(|e| e.to_string())?;
    let out = train_compositional(&fx.space, &train, &val, ModelKind::Add, &cfg).map_err(|e| e.to_string())?;
    let Params::Add(p) = out.model.params() else {
        return Err("Add model has non-Add parameters".into());
    };
    ensure!(
        (p.alpha - 1.0).abs() <= 0.05 && (p.beta - 1.0).abs() <= 0.05,
        "Add recovered alpha {:.4}, beta {:.4}",
        p.alpha,
        p.beta
    );
    let t = within(Duration::from_secs(60), start)?;
    Ok(format!(
        "held-out cosine {mean_cos:.4}, alpha {:.4} beta {:.4}, {t}",
        p.alpha, p.beta
    ))
}

fn margin_separation() -> Outcome {
    let start = Instant::now();
    let fx = clustered_paraphrase_fixture(11, 50, 8).map_err(|e| e.to_string())?;
    let cfg = TrainConfig::paraphrase();
    let out = train_paraphrase(&fx.space, &fx.pairs, &[], &cfg).map_err(|e| e.to_string())?;
    let sep = paraphrase_separation(&out.model, &fx.space, &fx.pairs, &cfg, 99).map_err(|e| e.to_string())?;
    ensure!(sep.ordered_fraction >= 0.9, "ordered fraction {:.3}", sep.ordered_fraction);
    ensure!(sep.mean_loss < 0.06, "mean training loss {:.4}", sep.mean_loss);
    let t = within(Duration::from_secs(60), start)?;
    Ok(format!(
        "{:.1}% of {} triples ordered, loss {:.4}, {t}",
        100.0 * sep.ordered_fraction,
        sep.triples,
        sep.mean_loss
    ))
}

/// Random DAG: node 0 is the root, every other node has one to three
/// parents among earlier nodes.
fn random_taxonomy(rng: &mut ChaCha8Rng) -> (Vec<Vec<usize>>, Vec<(String, Vec<usize>)>) {
    let n = rng.gen_range(2..=200);
    let mut parents = vec![Vec::new(); n];
    for (i, ps) in parents.iter_mut().enumerate().skip(1) {
        let k = if rng.gen_bool(0.25) { rng.gen_range(2..=3) } else { 1 };
        for _ in 0..k {
            let p = rng.gen_range(0..i);
            if !ps.contains(&p) {
                ps.push(p);
            }
        }
    }
    let terms = (0..rng.gen_range(2..=30))
        .map(|t| {
            let k = rng.gen_range(1..=3);
            let mut s: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n)).collect();
            s.dedup();
            (format!("term{t}"), s)
        })
        .collect();
    (parents, terms)
}

/// Every upward path from `node` to the root, as node lists.
fn paths_to_root(parents: &[Vec<usize>], node: usize) -> Vec<Vec<usize>> {
    if parents[node].is_empty() {
        return vec![vec![node]];
    }
    let mut out = Vec::new();
    for &p in &parents[node] {
        for mut path in paths_to_root(parents, p) {
            path.insert(0, node);
            out.push(path);
        }
    }
    out
}

/// Depth (longest root path, root = 1) and ancestor set of every node, from
/// explicit path enumeration.
fn enumerate(parents: &[Vec<usize>]) -> (Vec<usize>, Vec<BTreeSet<usize>>) {
    (0..parents.len())
        .map(|n| {
            let paths = paths_to_root(parents, n);
            (paths.iter().map(Vec::len).max().unwrap(), paths.into_iter().flatten().collect())
        })
        .unzip()
}

fn oracle_similarity(depth: &[usize], ancestors: &[BTreeSet<usize>], a: usize, b: usize) -> f64 {
    let lcs_depth = ancestors[a].intersection(&ancestors[b]).map(|&c| depth[c]).max().unwrap();
    2.0 * lcs_depth as f64 / (depth[a] + depth[b]) as f64
}

fn wu_palmer_oracle() -> Outcome {
    let edge = |c: &str, p: Option<&str>| (c.to_string(), p.map(str::to_string));
    let hand = Taxonomy::new(
        &[edge("root", None), edge("A", Some("root")), edge("B", Some("A")), edge("C", Some("A"))],
        &[("B".into(), "B".into()), ("C".into(), "C".into())],
    )
    .map_err(|e| e.to_string())?;
    let h = hand.wu_palmer("B", "C");
    ensure!(h == Some(2.0 / 3.0), "hand case gave {h:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut compared = 0;
    for _ in 0..100 {
        let (parents, terms) = random_taxonomy(&mut rng);
        let name = |i: usize| format!("s{i}");
        let edges: Vec<(String, Option<String>)> = parents
            .iter()
            .enumerate()
            .flat_map(|(i, ps)| {
                if ps.is_empty() {
                    vec![(name(i), None)]
                } else {
                    ps.iter().map(|&p| (name(i), Some(name(p)))).collect()
                }
            })
            .collect();
        let lex: Vec<(String, String)> =
            terms.iter().flat_map(|(t, ss)| ss.iter().map(move |&s| (t.clone(), name(s)))).collect();
        let tax = Taxonomy::new(&edges, &lex).map_err(|e| e.to_string())?;
        let (depth, ancestors) = enumerate(&parents);
        for (ta, sa) in &terms {
            for (tb, sb) in &terms {
                let want = sa
                    .iter()
                    .flat_map(|&a| sb.iter().map(move |&b| (a, b)))
                    .map(|(a, b)| oracle_similarity(&depth, &ancestors, a, b))
                    .fold(f64::NEG_INFINITY, f64::max);
                let got = tax.wu_palmer(ta, tb);
                ensure!(got == Some(want), "{ta} vs {tb}: got {got:?}, oracle {want}");
                compared += 1;
            }
        }
        ensure!(tax.wu_palmer("term0", "absent").is_none(), "absent term scored");
    }
    Ok(format!("hand case 2/3, {compared} term pairs over 100 taxonomies"))
}

fn street_level() -> Outcome {
    let fx = street_level_fixture().map_err(|e| e.to_string())?;
    let mut res = CategoryResources::new(fx.space.frequencies());
    res.backtranslation = Some(&fx.backtranslation);
    res.taxonomy = Some(&fx.taxonomy);
    let target = (fx.target.clone(), fx.space.lookup("street_level").unwrap().to_vec());
    let report = neighbor_report(&[target], &CandidatePool::from_space(&fx.space), fx.expected.len(), &res, Cohort::All)
        .map_err(|e| e.to_string())?;
    let got: Vec<(String, _)> = report.entries[0]
        .1
        .iter()
        .map(|e| (e.token.clone(), e.category.expect("categorized")))
        .collect();
    ensure!(got == fx.expected, "categories {got:?}");
    let sum: f64 = report.distribution.values().sum();
    ensure!((sum - 100.0).abs() < 1e-9, "percentages sum to {sum}");
    Ok(format!("{} neighbors categorized as expected, percentages sum to {sum}", got.len()))
}

fn oracle_macro_f1(gold: &[String], pred: &[String]) -> (f64, f64, f64) {
    let classes: BTreeSet<&String> = gold.iter().chain(pred).filter(|c| c.as_str() != UNAVAILABLE).collect();
    let index: HashMap<&String, usize> = classes.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let k = classes.len();
    // confusion[g][p], with column k for unavailable predictions
    let mut confusion = vec![vec![0usize; k + 1]; k];
    for (g, p) in gold.iter().zip(pred) {
        confusion[index[g]][index.get(p).copied().unwrap_or(k)] += 1;
    }
    let (mut ps, mut rs, mut fs) = (0.0, 0.0, 0.0);
    for c in 0..k {
        let tp = confusion[c][c];
        let predicted: usize = (0..k).map(|g| confusion[g][c]).sum();
        let support: usize = confusion[c].iter().sum();
        let p = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
        let r = if support == 0 { 0.0 } else { tp as f64 / support as f64 };
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        ps += p;
        rs += r;
        fs += f;
    }
    (ps / k as f64, rs / k as f64, fs / k as f64)
}

fn metrics_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..1000 {
        let k = rng.gen_range(2..=10);
        let n = rng.gen_range(1..=60);
        let label = |rng: &mut ChaCha8Rng| format!("c{}", rng.gen_range(0..k));
        let gold: Vec<String> = (0..n).map(|_| label(&mut rng)).collect();
        let pred: Vec<String> = (0..n)
            .map(|i| match rng.gen_range(0..10) {
                0 => UNAVAILABLE.to_string(),
                1..=4 => gold[i].clone(),
                _ => label(&mut rng),
            })
            .collect();
        let m = score(&gold, &pred, &Averaging::Macro).map_err(|e| e.to_string())?;
        let want = oracle_macro_f1(&gold, &pred);
        ensure!(
            (m.precision, m.recall, m.f1) == want,
            "trial {trial}: got {:?}, oracle {want:?}",
            (m.precision, m.recall, m.f1)
        );
    }
    let gold: Vec<&str> = ["no"; 7].into_iter().chain(["yes"; 3]).collect();
    let pred = vec!["no"; 10];
    let m = score(&gold, &pred, &Averaging::BinaryPositive("yes".into())).map_err(|e| e.to_string())?;
    ensure!(m.f1 == 0.0, "all-negative positive-class F1 is {}", m.f1);
    Ok("1000 random trials exact, all-negative F1 = 0".into())
}

fn lexical_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut discarded = 0;
    for d in 0..100 {
        let n_words = rng.gen_range(60..200);
        let n = rng.gen_range(20..=n_words / 2);
        let words: Vec<String> = (0..n_words).map(|i| format!("w{i}")).collect();
        let items = nc_embed::fixtures::random_compounds(&mut rng, &words, n);
        let split = lexical_split(&items, |c| c, SplitRatios::DEFAULT, d, 20).map_err(|e| format!("dataset {d}: {e}"))?;
        let vocab = |fold: &[NounCompound]| -> HashSet<String> {
            fold.iter().flat_map(|c| [c.w1().to_string(), c.w2().to_string()]).collect()
        };
        let folds = [vocab(&split.train), vocab(&split.validation), vocab(&split.test)];
        for i in 0..3 {
            for j in i + 1..3 {
                let shared: Vec<&String> = folds[i].iter().filter(|w| folds[j].contains(*w)).collect();
                ensure!(shared.is_empty(), "dataset {d}: folds {i} and {j} share {shared:?}");
            }
        }
        discarded += split.discarded;
    }
    let degenerate: Vec<NounCompound> =
        (0..30).map(|i| NounCompound::new(format!("tour{i}"), "guide").unwrap()).collect();
    match lexical_split(&degenerate, |c| c, SplitRatios::DEFAULT, 0, 20) {
        Err(nc_embed::Error::SplitFailed(_)) => {}
        other => return Err(format!("shared-head dataset gave {:?}", other.map(|s| s.train.len()))),
    }
    Ok(format!("100 datasets disjoint ({discarded} compounds discarded), shared head fails"))
}

fn grid_spec(files: &nc_embed::fixtures::PlantedFiles, out: &str) -> String {
    format!(
        r#"
output_dir = "{out}"
seeds = [0]
tasks = ["relation"]
compounds = "{}"
relations = "{}"
save_models = true

[[embeddings]]
path = "{}"
algorithm = "planted"
window = 1
dimension = 8

[[representations]]
kind = "add"

[[representations]]
kind = "fulladd"

[[representations]]
kind = "random"

[[representations]]
kind = "distributional"
"#,
        files.compounds.display(),
        files.relations.display(),
        files.embeddings.display(),
    )
}

struct GridRuns {
    dir: tempfile::TempDir,
}

fn planted_grid(runs: &mut Option<GridRuns>) -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let task = planted_relation_task(5, 150, 800, 400, 4, 8).map_err(|e| e.to_string())?;
    let files = task.write_inputs(dir.path()).map_err(|e| e.to_string())?;
    let spec = DsmGridSpec::from_toml_str(&grid_spec(&files, "run1"), dir.path()).map_err(|e| e.to_string())?;
    let outcome = run_grid(&spec).map_err(|e| e.to_string())?;
    let task_name = "relation:random:coarse";
    let f1 = |rep: &str| outcome.report.row(rep, task_name).map(|r| r.mean);
    let (add, fulladd, random, dist) = (f1("add"), f1("fulladd"), f1("random"), f1("distributional"));
    ensure!(add.is_some_and(|v| v >= 0.9), "add macro F1 {add:?}");
    ensure!(fulladd.is_some_and(|v| v >= 0.9), "fulladd macro F1 {fulladd:?}");
    ensure!(random.is_some_and(|v| v <= 0.4), "random macro F1 {random:?}");
    ensure!(dist == Some(0.0), "distributional macro F1 {dist:?}");
    let t = within(Duration::from_secs(300), start)?;
    *runs = Some(GridRuns { dir });
    Ok(format!(
        "add {:.3}, fulladd {:.3}, random {:.3}, distributional {:.3}, {t}",
        add.unwrap(),
        fulladd.unwrap(),
        random.unwrap(),
        dist.unwrap()
    ))
}

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = walk(dir)
        .into_iter()
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy();
            name.ends_with(".tsv") || name.ends_with(".nccm")
        })
        .map(|p| (p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

fn cli(args: &[&str]) -> Result<(), String> {
    let code = nc_embed::cli::main_from(std::iter::once("nc-embed").chain(args.iter().copied()));
    if code == std::process::ExitCode::SUCCESS {
        Ok(())
    } else {
        Err(format!("nc-embed {} failed", args.join(" ")))
    }
}

fn determinism(runs: &Option<GridRuns>) -> Outcome {
    let owned;
    let dir = match runs {
        Some(r) => r.dir.path(),
        None => {
            owned = tempfile::tempdir().map_err(|e| e.to_string())?;
            let task = planted_relation_task(5, 150, 800, 400, 4, 8).map_err(|e| e.to_string())?;
            let files = task.write_inputs(owned.path()).map_err(|e| e.to_string())?;
            let spec =
                DsmGridSpec::from_toml_str(&grid_spec(&files, "run1"), owned.path()).map_err(|e| e.to_string())?;
            run_grid(&spec).map_err(|e| e.to_string())?;
            owned.path()
        }
    };
    let files = nc_embed::fixtures::PlantedFiles {
        embeddings: dir.join("planted.vec"),
        compounds: dir.join("compounds.tsv"),
        relations: dir.join("relations.tsv"),
    };
    let spec = DsmGridSpec::from_toml_str(&grid_spec(&files, "run2"), dir).map_err(|e| e.to_string())?;
    run_grid(&spec).map_err(|e| e.to_string())?;
    let (a, b) = (files_in(&dir.join("run1")), files_in(&dir.join("run2")));
    ensure!(!a.is_empty() && a == b, "grid outputs differ between runs");
    let models = a.iter().filter(|(n, _)| n.ends_with(".nccm")).count();

    for run in ["train1", "train2"] {
        let out = dir.join(run);
        cli(&[
            "--seed", "3", "--out", out.to_str().unwrap(), "train", "--kind", "fulladd", "--embeddings",
            files.embeddings.to_str().unwrap(), "--compounds", files.compounds.to_str().unwrap(), "--epochs", "5",
        ])?;
        cli(&[
            "--seed", "3", "--out", out.to_str().unwrap(), "eval-relation", "--embeddings",
            files.embeddings.to_str().unwrap(), "--relations", files.relations.to_str().unwrap(), "--model",
            out.join("model.nccm").to_str().unwrap(),
        ])?;
    }
    let (a, b) = (files_in(&dir.join("train1")), files_in(&dir.join("train2")));
    ensure!(a.len() >= 4 && a == b, "CLI outputs differ between runs");
    read_model_file(&dir.join("train1/model.nccm"), Some(ModelKind::FullAdd)).map_err(|e| e.to_string())?;
    Ok(format!("grid ({models} models) and CLI train/eval outputs byte-identical across runs"))
}

fn paraphrase_contract() -> Outcome {
    let mut backend = MockBackend::new();
    backend
        .insert("en", "fr", "baby oil", &["huile pour bébé"])
        .insert("fr", "en", "huile pour bébé", &["oil for baby", "baby oil"]);
    let nc = NounCompound::new("baby", "oil").unwrap();
    let raw = backtranslate(&nc, &backend, &DEFAULT_PIVOTS).map_err(|e| e.to_string())?;
    let texts: Vec<&str> = raw.iter().map(|c| c.text.as_str()).collect();
    ensure!(texts == ["oil for baby", "baby oil"], "raw candidates {texts:?}");
    let english = VocabularyRatio::new(["oil", "for", "baby"]);
    let set = filter_paraphrases(&nc, &texts, &english);
    ensure!(
        set.paraphrases == vec![vec!["oil".to_string(), "for".into(), "baby".into()]],
        "surviving set {:?}",
        set.paraphrases
    );

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for trial in 0..100 {
        let sets: Vec<ParaphraseSet> = (0..rng.gen_range(1..30))
            .map(|i| {
                let len = rng.gen_range(0..8);
                ParaphraseSet {
                    compound: NounCompound::new(format!("a{i}"), "b").unwrap(),
                    paraphrases: (0..len).map(|j| vec![format!("p{j}"), "of".into(), "b".into()]).collect(),
                    source: *[ParaphraseSource::Backtranslation, ParaphraseSource::Cooccurrence]
                        .choose(&mut rng)
                        .unwrap(),
                    raw_count: len + rng.gen_range(0..5),
                }
            })
            .collect();
        let total: usize = sets.iter().map(|s| s.paraphrases.len()).sum();
        let raw: usize = sets.iter().map(|s| s.raw_count).sum();
        let mean = total as f64 / sets.len() as f64;
        let filtered = if raw == 0 { 0.0 } else { 1.0 - total as f64 / raw as f64 };
        let stats = paraphrase_stats(&sets).map_err(|e| e.to_string())?;
        ensure!(
            stats.total == total && stats.mean_per_compound == mean && stats.filtered_fraction == filtered,
            "trial {trial}: {stats:?} vs total {total}, mean {mean}, filtered {filtered}"
        );
    }
    Ok("baby oil -> {\"oil for baby\"}, stats match on 100 collections".into())
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    match outcome {
        Ok(detail) => {
            println!("PASS  {name}: {detail}");
            true
        }
        Err(why) => {
            println!("FAIL  {name}: {why}");
            false
        }
    }
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut grid_runs = None;
    let results = [
        run("1 gradient correctness", gradients),
        run("2 FullAdd and Add recovery", fulladd_recovery),
        run("3 margin-objective separation", margin_separation),
        run("4 Wu-Palmer oracle equivalence", wu_palmer_oracle),
        run("5 neighbor categorization fixture", street_level),
        run("6 metrics oracle equivalence", metrics_oracle),
        run("7 lexical split soundness", lexical_soundness),
        run("8 planted-signal grid", || planted_grid(&mut grid_runs)),
        run("9 determinism", || determinism(&grid_runs)),
        run("10 paraphrase filter contract", paraphrase_contract),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
