//! Retrieval precision/recall and average preference difference on small
//! fixtures.

use harmonia::evaluation::{precision_recall, DifferenceReport, PreferencePair, QueryResult};

fn main() -> harmonia::Result<()> {
    let queries = [
        QueryResult { retrieved: 4, relevant_retrieved: 2, relevant_in_db: 8 },
        QueryResult { retrieved: 4, relevant_retrieved: 4, relevant_in_db: 8 },
    ];
    let pr = precision_recall(&queries)?;
    print!("{}", pr.table(&queries));

    let pairs = [
        PreferencePair { real: 0.8, predicted: 0.7 },
        PreferencePair { real: 0.6, predicted: 0.9 },
    ];
    let d = DifferenceReport::compute(&pairs)?;
    print!("\n{}", d.table(&pairs));
    Ok(())
}
