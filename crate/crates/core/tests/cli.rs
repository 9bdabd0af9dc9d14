use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nc_embed::compose::read_model_file;
use nc_embed::fixtures::{additive_fixture, planted_relation_task};
use nc_embed::embeddings::{frequency_sidecar, write_embeddings, write_frequencies};
use nc_embed::ModelKind;

fn nc_embed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nc-embed")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn additive_inputs(dir: &Path) -> (String, String) {
    let fx = additive_fixture(3, 40, 120, 5).unwrap();
    let emb = dir.join("space.vec");
    write_embeddings(&fx.space, fs::File::create(&emb).unwrap()).unwrap();
    write_frequencies(&fx.space, fs::File::create(frequency_sidecar(&emb)).unwrap()).unwrap();
    let compounds = dir.join("compounds.tsv");
    let text: String = fx.compounds.iter().map(|nc| format!("{}\t{}\n", nc.w1(), nc.w2())).collect();
    fs::write(&compounds, text).unwrap();
    (emb.display().to_string(), compounds.display().to_string())
}

#[test]
fn missing_embedding_file_exits_3_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.vec");
    let out = dir.path().join("out");
    let o = nc_embed(&[
        "--out", out.to_str().unwrap(), "train", "--kind", "add", "--embeddings", missing.to_str().unwrap(),
        "--compounds", "x.tsv",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.starts_with("error[missing-resource]"), "{err}");
    assert!(err.contains("nope.vec"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = nc_embed(&["--out", out.to_str().unwrap(), "--set", "train.bogus=1", "train"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error[config]"));
    let o = nc_embed(&["--out", out.to_str().unwrap(), "train", "--kind", "cubic"]);
    assert_eq!(o.status.code(), Some(2));
    let o = nc_embed(&["train", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_add_then_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let (emb, compounds) = additive_inputs(dir.path());
    let out = dir.path().join("out");
    let o = nc_embed(&[
        "--seed", "1", "--out", out.to_str().unwrap(), "--set", "train.learning_rate=0.3", "train", "--kind", "add",
        "--embeddings", &emb, "--compounds", &compounds, "--epochs", "20",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let model = read_model_file(&out.join("model.nccm"), Some(ModelKind::Add)).unwrap();
    let p = model.flat_params();
    assert!((p[0] - 1.0).abs() < 0.05 && (p[1] - 1.0).abs() < 0.05, "{p:?}");
    let history = fs::read_to_string(out.join("history.tsv")).unwrap();
    assert_eq!(history.lines().count(), 21);
    let resolved = fs::read_to_string(out.join("resolved_config.toml")).unwrap();
    assert!(resolved.contains("learning_rate = 0.3"), "{resolved}");
    assert!(resolved.contains("epochs = 20"));
    assert!(resolved.contains("seed = 1"));

    let o = nc_embed(&["inspect", out.join("model.nccm").to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("kind\tadd") && text.contains("dim\t5") && text.contains("parameters\t2"), "{text}");

    let o = nc_embed(&["inspect", out.join("history.tsv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let (emb, compounds) = additive_inputs(dir.path());
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!("kind = \"matrix\"\nembeddings = \"{emb}\"\ncompounds = \"{compounds}\"\n[train]\nepochs = 2\n"),
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = nc_embed(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "train", "--kind", "fulladd"]);
    assert!(o.status.success(), "{}", stderr(&o));
    read_model_file(&out.join("model.nccm"), Some(ModelKind::FullAdd)).unwrap();
    assert_eq!(fs::read_to_string(out.join("history.tsv")).unwrap().lines().count(), 3);
}

#[test]
fn paraphrase_objective_requires_lstm() {
    let dir = tempfile::tempdir().unwrap();
    let (emb, _) = additive_inputs(dir.path());
    let p = dir.path().join("p.tsv");
    fs::write(&p, "w1\tw2\tthe w1 of w2\n").unwrap();
    let out = dir.path().join("out");
    let o = nc_embed(&[
        "--out", out.to_str().unwrap(), "train", "--objective", "paraphrase", "--kind", "add", "--embeddings", &emb,
        "--paraphrases", p.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn backtranslate_with_mock_backend() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("compounds.tsv"), "baby\toil\nolive\toil\n").unwrap();
    fs::write(
        d.join("mock.tsv"),
        "en\tfr\tbaby oil\thuile pour bébé\nfr\ten\thuile pour bébé\toil for baby\nfr\ten\thuile pour bébé\tbaby oil\n",
    )
    .unwrap();
    fs::write(d.join("english.txt"), "oil\nfor\nbaby\n").unwrap();
    let out = d.join("out");
    let run = |extra: &[&str]| {
        let mut args = vec![
            "--out",
            out.to_str().unwrap(),
            "paraphrase",
            "backtranslate",
            "--compounds",
            "compounds.tsv",
            "--mock-table",
            "mock.tsv",
            "--english-vocab",
            "english.txt",
        ];
        args.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_nc-embed")).current_dir(d).args(&args).output().unwrap()
    };
    let o = run(&[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sets = fs::read_to_string(out.join("paraphrases.tsv")).unwrap();
    assert_eq!(sets, "baby\toil\tbacktranslation\toil for baby\n");
    let cache = fs::read_to_string(out.join("backtranslation_cache.tsv")).unwrap();
    assert_eq!(cache.lines().count(), 2);

    // a cached run never touches the (now failing) backend
    fs::copy(out.join("backtranslation_cache.tsv"), d.join("cache.tsv")).unwrap();
    fs::write(d.join("compounds.tsv"), "baby\toil\n").unwrap();
    fs::write(d.join("mock.tsv"), "garbage\n").unwrap();
    let o = run(&["--cache", "cache.tsv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out.join("paraphrases.tsv")).unwrap(), sets);
}

#[test]
fn eval_relation_and_neighbors_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let task = planted_relation_task(2, 60, 200, 100, 3, 6).unwrap();
    let files = task.write_inputs(dir.path()).unwrap();
    let out = dir.path().join("out");
    let o = nc_embed(&[
        "--out", out.to_str().unwrap(), "eval-relation", "--embeddings", files.embeddings.to_str().unwrap(),
        "--relations", files.relations.to_str().unwrap(), "--split", "lexical",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(out.join("relation_report.tsv")).unwrap();
    assert!(report.starts_with("class\tprecision"));
    assert!(report.contains("relation:lexical:coarse"));

    let o = nc_embed(&[
        "--out", out.to_str().unwrap(), "neighbors", "--embeddings", files.embeddings.to_str().unwrap(),
        "--compounds", files.compounds.to_str().unwrap(), "--k", "5", "--report", "nn.tsv", "--curve-bins", "1,100,1000",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let nn = fs::read_to_string(out.join("nn.tsv")).unwrap();
    let pct: f64 = nn
        .lines()
        .filter(|l| l.starts_with('#') && !l.starts_with("# cohort"))
        .map(|l| l.rsplit('\t').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((pct - 100.0).abs() < 1e-3, "{pct}");
    assert!(out.join("rare_curve.tsv").is_file());

    let o = nc_embed(&["--out", out.to_str().unwrap(), "neighbors", "--report", "../escape.tsv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn grid_subcommand_overrides_seed_and_output() {
    let dir = tempfile::tempdir().unwrap();
    let task = planted_relation_task(4, 60, 200, 100, 3, 6).unwrap();
    let files = task.write_inputs(dir.path()).unwrap();
    let spec = dir.path().join("grid.toml");
    fs::write(
        &spec,
        format!(
            "output_dir = \"ignored\"\nseeds = [0, 1]\ntasks = [\"relation\"]\ncompounds = \"compounds.tsv\"\n\
             relations = \"relations.tsv\"\n[[embeddings]]\npath = \"{}\"\nalgorithm = \"a\"\nwindow = 2\ndimension = 6\n\
             [[representations]]\nkind = \"add\"\n[[representations]]\nkind = \"random\"\n",
            files.embeddings.file_name().unwrap().to_str().unwrap()
        ),
    )
    .unwrap();
    let out = dir.path().join("grid-out");
    let o = nc_embed(&["--seed", "7", "--out", out.to_str().unwrap(), "grid", "--spec", spec.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!dir.path().join("ignored").exists());
    let resolved = fs::read_to_string(out.join("resolved_config.toml")).unwrap();
    assert!(resolved.contains("seeds = [7]"), "{resolved}");
    let cells = fs::read_to_string(out.join("cells.tsv")).unwrap();
    assert_eq!(cells.lines().count(), 3, "{cells}");
    let first = fs::read(out.join("aggregate.tsv")).unwrap();

    // rerunning resumes from the journal and reproduces the aggregate
    let o = nc_embed(&["--seed", "7", "--out", out.to_str().unwrap(), "grid", "--spec", spec.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read(out.join("aggregate.tsv")).unwrap(), first);
}
