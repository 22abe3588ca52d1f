//! Score two looks for registered users and for a guest.

use harmonia::{
    default_partition, predict_preference, ApparelItem, ColorDescriptor, ColorDistanceTable, HarmoniousPalette,
    KnowledgeBase, Look, Role, UserProfile, Viewer,
};

fn show(label: &str, look: &Look, viewer: Viewer<'_>, kb: &KnowledgeBase, table: &ColorDistanceTable) -> harmonia::Result<()> {
    let s = predict_preference(look, viewer, kb, table)?;
    println!(
        "{label:<28} value {:.3}  weighted ratings {:<8} harmony {:.3}  palette {:?}",
        s.value,
        s.components.weighted_scp.map_or("-".to_string(), |v| format!("{v:.3}")),
        s.components.harmony,
        s.matched_palette_id
    );
    Ok(())
}

fn main() -> harmonia::Result<()> {
    let partition = default_partition();
    let table = ColorDistanceTable::new(&partition);
    let kb = KnowledgeBase::new(
        "demo",
        vec![
            HarmoniousPalette::new(14, ColorDescriptor::from_weights([(58, 0.4), (13, 0.3), (91, 0.3)])?, 140),
            HarmoniousPalette::new(27, ColorDescriptor::from_weights([(12, 0.5), (1, 0.3), (91, 0.2)])?, 210),
        ],
    )?;

    // A dress in color 12 with a bag in color 1: both sit in palette 27.
    let mut x = UserProfile::new("x")?;
    x.rate(12, 0.8)?;
    x.rate(1, 0.5)?;
    let dress_and_bag = Look::new(vec![
        ApparelItem::with_color(Role::DressCostume, 12),
        ApparelItem::with_color(Role::ShoesBags, 1),
    ]);
    show("dress + bag, user x", &dress_and_bag, Viewer::Registered(&x), &kb, &table)?;
    show("dress + bag, guest", &dress_and_bag, Viewer::Guest, &kb, &table)?;

    // Five items; no palette holds all their colors, so harmony falls back to
    // the closest palette.
    let mut y = UserProfile::new("y")?;
    for (id, r) in [(58, 0.9), (13, 0.8), (91, 0.7), (49, 0.6), (22, 0.75)] {
        y.rate(id, r)?;
    }
    let five_piece = Look::new(vec![
        ApparelItem::with_color(Role::UpDown, 58),
        ApparelItem::with_color(Role::UpDown, 13),
        ApparelItem::with_color(Role::ShoesBags, 91),
        ApparelItem::with_color(Role::ShoesBags, 49),
        ApparelItem::with_color(Role::Accessory, 22),
    ]);
    show("five pieces, user y", &five_piece, Viewer::Registered(&y), &kb, &table)?;
    show("five pieces, guest", &five_piece, Viewer::Guest, &kb, &table)?;
    Ok(())
}
