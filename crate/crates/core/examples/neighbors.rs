//! Categorized nearest neighbors of "street level".

use nc_embed::fixtures::street_level_fixture;
use nc_embed::neighbors::{neighbor_report, write_report, CandidatePool, CategoryResources, Cohort};

fn main() -> nc_embed::Result<()> {
    let fx = street_level_fixture()?;
    let mut resources = CategoryResources::new(fx.space.frequencies());
    resources.backtranslation = Some(&fx.backtranslation);
    resources.taxonomy = Some(&fx.taxonomy);

    let target = (fx.target.clone(), fx.space.lookup(fx.target.surface()).unwrap().to_vec());
    let pool = CandidatePool::from_space(&fx.space);
    let report = neighbor_report(&[target], &pool, 8, &resources, Cohort::All)?;
    write_report(&report, std::io::stdout().lock())?;
    Ok(())
}
