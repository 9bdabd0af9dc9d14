//! The four composition functions, and the binary model file round trip.

use nc_embed::compose::{deserialize_model, serialize_model};
use nc_embed::{init_model, ModelKind};

fn main() -> nc_embed::Result<()> {
    let v1 = [0.5, -1.0, 0.25, 2.0];
    let v2 = [1.0, 0.0, -0.5, 0.5];
    for kind in ModelKind::ALL {
        let model = init_model(kind, v1.len(), 7)?;
        let p = model.encode(&[&v1, &v2])?;
        let mut bytes = Vec::new();
        serialize_model(&model, &mut bytes)?;
        assert_eq!(deserialize_model(&bytes[..], Some(kind))?, model);
        let shown: Vec<String> = p.iter().map(|x| format!("{x:+.3}")).collect();
        println!(
            "{kind:<8} {:>4} params, {:>4} bytes on disk  p = [{}]",
            model.param_count(),
            bytes.len(),
            shown.join(", ")
        );
    }
    Ok(())
}
