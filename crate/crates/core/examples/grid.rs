//! A small experiment grid over two embedding spaces and four
//! representations, run from a TOML spec.

use nc_embed::fixtures::planted_relation_task;
use nc_embed::pipeline::{run_grid, DsmGridSpec};
use nc_embed::EmbeddingSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> nc_embed::Result<()> {
    let dir = tempfile::tempdir()?;
    let task = planted_relation_task(1, 100, 400, 400, 4, 8)?;
    // a second "space": the same vectors with a little noise
    let mut noisy = task.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rows: Vec<(String, Vec<f64>)> = task
        .training_space
        .iter()
        .map(|(t, v)| (t.to_string(), v.iter().map(|x| x + 0.05 * rng.gen_range(-1.0..1.0)).collect()))
        .collect();
    noisy.training_space = EmbeddingSpace::from_rows(8, rows)?.with_frequencies(task.training_space.frequencies().clone());
    let mut spaces = Vec::new();
    for (name, t) in [("dsm1", &task), ("dsm2", &noisy)] {
        let sub = dir.path().join(name);
        std::fs::create_dir_all(&sub)?;
        spaces.push(t.write_inputs(&sub)?);
    }
    let spec = format!(
        r#"
output_dir = "results"
seeds = [0, 1]
tasks = ["relation"]
compounds = "{compounds}"
relations = "{relations}"

[[embeddings]]
path = "{a}"
algorithm = "sgns"
window = 2
dimension = 8

[[embeddings]]
path = "{b}"
algorithm = "sgns"
window = 5
dimension = 8

[[representations]]
kind = "add"
[representations.train]
epochs = 10

[[representations]]
kind = "fulladd"
[representations.train]
epochs = 10

[[representations]]
kind = "random"

[[representations]]
kind = "distributional"
"#,
        compounds = spaces[0].compounds.display(),
        relations = spaces[0].relations.display(),
        a = spaces[0].embeddings.display(),
        b = spaces[1].embeddings.display(),
    );
    let spec = DsmGridSpec::from_toml_str(&spec, dir.path())?;
    let outcome = run_grid(&spec)?;
    println!("{} cells", outcome.cells.len());
    for row in &outcome.report.rows {
        println!("{:<16} {:<24} {:.3} ± {:.3}", row.representation, row.task, row.mean, row.std);
    }
    print!("{}", std::fs::read_to_string(spec.output_dir.join("best.tsv"))?);
    Ok(())
}
