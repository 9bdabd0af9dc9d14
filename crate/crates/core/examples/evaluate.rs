//! Relation classification and property prediction on planted tasks.

use std::collections::BTreeMap;
use std::sync::Arc;

use nc_embed::eval::{
    property_eval, relation_eval, EvalConfig, Item, LabeledCompound, LabeledInstance, RelationConfig, SplitKind,
    NEGATIVE, POSITIVE,
};
use nc_embed::fixtures::planted_relation_task;
use nc_embed::pipeline::Representation;
use nc_embed::{init_model, ModelKind};

fn main() -> nc_embed::Result<()> {
    let task = planted_relation_task(5, 120, 400, 0, 4, 8)?;
    let space = Arc::new(task.space.clone());
    let data: Vec<LabeledCompound> = task
        .labeled
        .iter()
        .map(|(nc, label)| LabeledCompound {
            compound: nc.clone(),
            fine: label.clone(),
            coarse: label.clone(),
        })
        .collect();

    let mut add = init_model(ModelKind::Add, 8, 0)?;
    add.set_flat_params(&[1.0, 1.0])?;
    let providers = [
        ("add", Representation::Composed { model: add, space: space.clone(), normalize: false }),
        ("random", Representation::Random { dim: 8, seed: 3 }),
        ("distributional", Representation::Distributional(space.clone())),
    ];
    let config = EvalConfig::default();
    for split in [SplitKind::Random, SplitKind::Lexical] {
        let relation = RelationConfig { split, ..RelationConfig::default() };
        for (name, provider) in &providers {
            match relation_eval(provider, &data, &relation, &config) {
                Ok(r) => println!("{:<26} {name:<15} macro F1 {:.3} on {} compounds", r.name, r.metrics.f1, r.test_size),
                Err(e) => println!("{split:?} {name}: {e}"),
            }
        }
    }

    // property "has_rel0": compounds labeled rel0, plus their head words
    let mut instances = Vec::new();
    for (nc, label) in &task.labeled {
        let yes = label == "rel0";
        instances.push(LabeledInstance::new(Item::Compound(nc.clone()), if yes { POSITIVE } else { NEGATIVE })?);
    }
    for w in task.space.tokens().iter().take(80) {
        let v = task.space.lookup(w).unwrap();
        let yes = task.directions[0].iter().zip(v).map(|(a, b)| a * b).sum::<f64>() > 0.5;
        instances.push(LabeledInstance::new(Item::Word(w.clone()), if yes { POSITIVE } else { NEGATIVE })?);
    }
    let datasets = BTreeMap::from([("has_rel0".to_string(), instances)]);
    for r in property_eval(&task.space, &providers[0].1, &datasets, &config)? {
        println!("{:<26} add             F1 {:.3}", r.name, r.metrics.f1);
    }
    Ok(())
}
