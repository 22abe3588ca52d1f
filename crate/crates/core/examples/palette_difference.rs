//! Fuzzy difference and similarity between color palettes.

use harmonia::{default_partition, descriptor_difference, palette_similarity, ColorDescriptor, ColorDistanceTable};

fn main() -> harmonia::Result<()> {
    let partition = default_partition();
    let table = ColorDistanceTable::new(&partition);
    let name = |id| partition.get(id).unwrap().name.clone();

    println!("distance {} / {}: {:.4}", name(90), name(91), table.get(90, 91));
    println!("distance {} / {}: {:.4}", name(4), name(13), table.get(4, 13));

    let blue_tan = ColorDescriptor::from_weights([(58, 0.7), (13, 0.3)])?;
    let blue_white = ColorDescriptor::from_weights([(58, 0.6), (91, 0.4)])?;
    let red_black = ColorDescriptor::from_weights([(4, 0.5), (90, 0.5)])?;
    let describe = |d: &ColorDescriptor| d.ids().map(&name).collect::<Vec<_>>().join(" + ");
    println!("reference: {}", describe(&blue_tan));
    for q in [&blue_white, &red_black, &blue_tan] {
        println!(
            "  vs {:<42} difference {:.4}  similarity {:.4}",
            describe(q),
            descriptor_difference(&blue_tan, q, &table),
            palette_similarity(&blue_tan, q, &table)
        );
    }
    Ok(())
}
