//! Generate a corpus with planted palettes, mine it, and check that the
//! planted palettes come back.
//!
//! cargo run --release -p harmonia --example mine_palettes [-- IMAGES SEED]

use harmonia::corpus::{generate_planted_corpus, match_planted, PlantedCorpusConfig};
use harmonia::{default_partition, mine, ColorDistanceTable, ExtractConfig, MinerConfig};

fn main() -> harmonia::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let images = args.next().and_then(|a| a.parse().ok()).unwrap_or(500);
    let seed = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);

    let partition = default_partition();
    let table = ColorDistanceTable::new(&partition);
    let cfg = PlantedCorpusConfig { images, seed, ..Default::default() };
    let corpus = generate_planted_corpus(&partition, &table, &cfg)?;
    let miner_cfg = MinerConfig { convergence_window: 100, ..MinerConfig::desk_scale() };
    let outcome = mine(corpus.items(), &partition, &table, &miner_cfg, &ExtractConfig::default())?;

    let s = &outcome.stats;
    println!("{} items, {} groups, {} promoted", s.items_mined, s.group_count, s.promoted_count);
    println!("extract+assign {:.2} ms mean, {:.2} ms max", s.latency.mean_ms, s.latency.max_ms);
    print!("{}", s.convergence_csv());

    for p in &outcome.palettes {
        let colors: Vec<String> = p
            .entries()
            .iter()
            .map(|e| format!("{} {:.2}", partition.get(e.id).unwrap().name, e.w))
            .collect();
        println!("palette {:>2} ({:>3} looks): {}", p.id, p.member_count, colors.join(", "));
    }
    for m in match_planted(&corpus.planted_descriptors(), &outcome.palettes, &table) {
        println!("planted {} -> palette {:?} similarity {:.3}", m.planted, m.palette_id, m.similarity);
    }
    Ok(())
}
