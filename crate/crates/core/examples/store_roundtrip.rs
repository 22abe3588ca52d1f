//! Persist profiles, palettes and catalog items, then read them back.
//!
//! cargo run -p harmonia --example store_roundtrip [-- DIR]

use harmonia::{CatalogFilter, CatalogItem, ColorDescriptor, HarmoniousPalette, KnowledgeBase, Role, Store, UserProfile};

fn main() -> harmonia::Result<()> {
    let scratch = tempfile::tempdir()?;
    let root = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| scratch.path().to_path_buf());
    {
        let store = Store::open(&root)?;
        let mut p = UserProfile::new("alice")?;
        p.rate(12, 0.8)?;
        store.put_profile(&p)?;
        store.put_palettes(KnowledgeBase::new(
            "1",
            vec![
                HarmoniousPalette::new(0, ColorDescriptor::from_weights([(12, 0.6), (1, 0.4)])?, 40).with_label("retro"),
                HarmoniousPalette::new(1, ColorDescriptor::from_weights([(58, 0.5), (91, 0.5)])?, 35).with_label("classic"),
            ],
        )?)?;
        store.upsert_catalog([CatalogItem {
            item_id: "dress-001".into(),
            role: Role::DressCostume,
            descriptor: ColorDescriptor::single(12),
            image_path: None,
            name: "red wrap dress".into(),
            label: Some("retro".into()),
        }])?;
    }

    // A second open sees everything the first one wrote.
    let store = Store::open(&root)?;
    println!("store at {}", store.root().display());
    println!("users: {:?}", store.list_users()?);
    println!("alice rates 12 at {}", store.get_profile("alice")?.rating(12));
    for p in store.list_palettes(Some("retro")) {
        println!("retro palette {} with {} colors", p.id, p.entries().len());
    }
    let filter = CatalogFilter { role: Some(Role::DressCostume), label: None };
    for item in store.list_catalog(&filter) {
        println!("catalog: {} ({})", item.item_id, item.name);
    }
    Ok(())
}
