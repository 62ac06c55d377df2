//! Builds a schema for a dataset directory and explains the answers to the
//! first test query.
//!
//! cargo run --release --example reason -- data/WD-singer

use logre::reasoner::{Query, Reasoner, ReasonerConfig};
use logre::sampler::SamplerConfig;
use logre::{kg, schema};

fn main() -> Result<(), logre::Error> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data/WD-singer".into());
    let data = kg::load_dataset_dir(dir.as_ref(), &kg::LoadOptions::default())?;
    let cfg = SamplerConfig::new(20_000, 6, 7)?;
    let schema = schema::build_schema_streaming(&data.graph, cfg, "0.2".parse()?);
    let reasoner = Reasoner::new(&data.graph, &schema, ReasonerConfig::default());
    let Some(fact) = data.test.first() else {
        return Ok(());
    };
    let q = Query::new(fact.head, fact.relation);
    for cand in reasoner.answer(q).iter().take(3) {
        println!("{}", reasoner.explain(cand, 10));
    }
    Ok(())
}
