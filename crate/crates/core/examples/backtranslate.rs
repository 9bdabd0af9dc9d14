//! Backtranslation through pivot languages with a mock translation backend,
//! then filtering and corpus statistics.

use nc_embed::paraphrase::{
    backtranslate_all, filter_paraphrases, paraphrase_stats, MockBackend, VocabularyRatio, DEFAULT_PIVOTS,
};
use nc_embed::NounCompound;

fn main() -> nc_embed::Result<()> {
    let mut backend = MockBackend::new();
    backend
        .insert("en", "fr", "baby oil", &["huile pour bébé"])
        .insert("fr", "en", "huile pour bébé", &["oil for baby", "baby oil"])
        .insert("en", "it", "baby oil", &["olio per bambini"])
        .insert("it", "en", "olio per bambini", &["oil for children", "olio per bambini"])
        .insert("en", "fr", "olive oil", &["huile d'olive"])
        .insert("fr", "en", "huile d'olive", &["oil of olives", "olive oil"])
        .fail_language("ro");

    let english = VocabularyRatio::new(["oil", "for", "baby", "of", "olives", "children", "olive"]);
    let compounds = vec![NounCompound::new("baby", "oil")?, NounCompound::new("olive", "oil")?];
    let mut sets = Vec::new();
    for (nc, outcome) in backtranslate_all(&compounds, &backend, &DEFAULT_PIVOTS, 2)? {
        let raw: Vec<String> = outcome?.into_iter().map(|c| c.text).collect();
        let set = filter_paraphrases(&nc, &raw, &english);
        let kept: Vec<String> = set.paraphrases.iter().map(|p| p.join(" ")).collect();
        println!("{nc}: {} raw -> {:?}", set.raw_count, kept);
        sets.push(set);
    }
    let stats = paraphrase_stats(&sets)?;
    println!(
        "{} paraphrases, {:.2} per compound, {:.0}% filtered",
        stats.total,
        stats.mean_per_compound,
        100.0 * stats.filtered_fraction
    );
    Ok(())
}
