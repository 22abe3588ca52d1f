//! Rank catalog items as additions to a partial look.

use harmonia::{
    default_partition, rank_catalog, ApparelItem, ColorDescriptor, ColorDistanceTable, HarmoniousPalette, KnowledgeBase,
    Look, Role, UserProfile, Viewer,
};

fn main() -> harmonia::Result<()> {
    let partition = default_partition();
    let table = ColorDistanceTable::new(&partition);
    let kb = KnowledgeBase::new(
        "demo",
        vec![
            HarmoniousPalette::new(0, ColorDescriptor::from_weights([(58, 0.5), (91, 0.3), (13, 0.2)])?, 150),
            HarmoniousPalette::new(1, ColorDescriptor::from_weights([(4, 0.6), (90, 0.4)])?, 120),
        ],
    )?;
    let mut user = UserProfile::new("shopper")?;
    user.rate(4, 0.9)?;
    user.rate(13, 0.3)?;

    let anchor = Look::new(vec![ApparelItem::with_color(Role::DressCostume, 58)]);
    let shoes: Vec<(&str, ApparelItem)> = vec![
        ("white sneakers", ApparelItem::with_color(Role::ShoesBags, 91)),
        ("tan loafers", ApparelItem::with_color(Role::ShoesBags, 13)),
        ("rust pumps", ApparelItem::with_color(Role::ShoesBags, 4)),
        (
            "two-tone boots",
            ApparelItem::with_descriptor(Role::ShoesBags, ColorDescriptor::from_weights([(90, 0.7), (4, 0.3)])?),
        ),
    ];
    let items: Vec<ApparelItem> = shoes.iter().map(|(_, i)| i.clone()).collect();
    for viewer in [Viewer::Registered(&user), Viewer::Guest] {
        println!("{}", if matches!(viewer, Viewer::Guest) { "guest" } else { "shopper" });
        for r in rank_catalog(&anchor, &items, viewer, &kb, &table)? {
            println!("  {:<15} {:.3}", shoes[r.index].0, r.score.value);
        }
    }
    Ok(())
}
