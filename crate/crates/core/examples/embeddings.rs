//! Load, save and query an embedding space with a frequency sidecar.

use std::collections::HashMap;
use std::fs::File;

use nc_embed::embeddings::{
    frequency_sidecar, open_embeddings, read_compounds, synthetic_space, write_embeddings, write_frequencies,
};
use nc_embed::linalg::cosine;

fn main() -> nc_embed::Result<()> {
    let vocab: Vec<String> = ["olive", "oil", "olive_oil", "baby", "baby_oil"].map(String::from).to_vec();
    let freqs: HashMap<String, u64> = vocab.iter().enumerate().map(|(i, w)| (w.clone(), 5 + 10 * i as u64)).collect();
    let space = synthetic_space(42, &vocab, 6, &freqs)?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("space.vec");
    write_embeddings(&space, File::create(&path)?)?;
    write_frequencies(&space, File::create(frequency_sidecar(&path))?)?;

    let loaded = open_embeddings(&path, true)?;
    assert_eq!(loaded, space);
    println!("{} tokens, dimension {}", loaded.len(), loaded.dim());

    let compounds = read_compounds("olive\toil\nbaby\toil\n".as_bytes(), Some(&loaded))?;
    for nc in &compounds {
        let observed = loaded.lookup(nc.surface()).expect("compound has a vector");
        let head = loaded.lookup(nc.w2()).expect("head has a vector");
        println!(
            "{:<10} freq {:>3}  cos(compound, head) = {:+.3}",
            nc.surface(),
            nc.frequency,
            cosine(observed, head).unwrap_or(0.0)
        );
    }
    Ok(())
}
