//! Train an LSTM phrase encoder with the paraphrase margin objective.

use nc_embed::fixtures::clustered_paraphrase_fixture;
use nc_embed::train::{paraphrase_separation, train_paraphrase, TrainConfig};

fn main() -> nc_embed::Result<()> {
    let fx = clustered_paraphrase_fixture(11, 30, 8)?;
    let cfg = TrainConfig {
        epochs: 15,
        ..TrainConfig::paraphrase()
    };
    let untrained = nc_embed::init_model(nc_embed::ModelKind::Lstm, 8, cfg.seed)?;
    let before = paraphrase_separation(&untrained, &fx.space, &fx.pairs, &cfg, 3)?;
    let out = train_paraphrase(&fx.space, &fx.pairs, &[], &cfg)?;
    let after = paraphrase_separation(&out.model, &fx.space, &fx.pairs, &cfg, 3)?;
    println!("{} pairs over {} dimensions", fx.pairs.len(), fx.space.dim());
    println!("before: {:.1}% ordered, loss {:.4}", 100.0 * before.ordered_fraction, before.mean_loss);
    println!("after:  {:.1}% ordered, loss {:.4}", 100.0 * after.ordered_fraction, after.mean_loss);
    Ok(())
}
