//! Recover a hidden FullAdd composition from observed compound vectors.

use nc_embed::fixtures::fulladd_fixture;
use nc_embed::linalg::cosine;
use nc_embed::train::{split_compounds, train_compositional, SplitRatios, TrainConfig};
use nc_embed::ModelKind;

fn main() -> nc_embed::Result<()> {
    let (fx, _, _) = fulladd_fixture(7, 200, 500, 10)?;
    let (train, val, test) = split_compounds(&fx.compounds, SplitRatios::DEFAULT, 1)?;
    let cfg = TrainConfig {
        epochs: 30,
        ..TrainConfig::compositional()
    };
    for kind in [ModelKind::Add, ModelKind::FullAdd, ModelKind::Matrix] {
        let out = train_compositional(&fx.space, &train, &val, kind, &cfg)?;
        let mean_cos = test
            .iter()
            .map(|nc| {
                let v1 = fx.space.lookup(nc.w1()).unwrap();
                let v2 = fx.space.lookup(nc.w2()).unwrap();
                let p = out.model.compose(v1, v2).unwrap();
                cosine(&p, fx.space.lookup(nc.surface()).unwrap()).unwrap_or(0.0)
            })
            .sum::<f64>()
            / test.len() as f64;
        let epoch = out.history.selected_epoch.map_or(0, |e| e + 1);
        println!("{kind:<8} held-out cosine {mean_cos:.4} (epoch {epoch} kept)");
    }
    Ok(())
}
