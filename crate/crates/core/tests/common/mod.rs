//! Randomized properties shared by the property tests and the acceptance run.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use harmonia::color_space::ChannelMembership;
use harmonia::corpus::pure_core_samples;
use harmonia::evaluation::{average_difference, precision_recall, PreferencePair, QueryResult};
use harmonia::preference::weighted_mean;
use harmonia::{
    default_partition, descriptor_difference, extract_descriptor, harmony, palette_similarity, predict_preference,
    ApparelItem, ColorDescriptor, ColorDistanceTable, ColorId, ExtractConfig, HarmoniousPalette, HsiPixel,
    KnowledgeBase, Look, MinerConfig, PaletteMiner, Partition, Role, UserProfile, Viewer,
};
use image::imageops::{self, FilterType};
use image::{Rgb, RgbImage};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub const CASES: u32 = 256;

pub fn partition() -> &'static Partition {
    static P: OnceLock<Partition> = OnceLock::new();
    P.get_or_init(default_partition)
}

pub fn table() -> &'static ColorDistanceTable {
    static T: OnceLock<ColorDistanceTable> = OnceLock::new();
    T.get_or_init(|| ColorDistanceTable::new(partition()))
}

fn cores() -> &'static Vec<Vec<[u8; 3]>> {
    static C: OnceLock<Vec<Vec<[u8; 3]>>> = OnceLock::new();
    C.get_or_init(|| pure_core_samples(partition(), 8))
}

fn core_colors() -> Vec<ColorId> {
    cores()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_empty())
        .map(|(id, _)| id as ColorId)
        .collect()
}

/// Run `test` on `cases` generated values with a fixed seed.
pub fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn color_count() -> ColorId {
    partition().len() as ColorId
}

pub fn descriptor_strategy() -> impl Strategy<Value = ColorDescriptor> {
    prop::collection::btree_map(0..color_count(), 0.01f64..1.0, 1..6)
        .prop_map(|m| ColorDescriptor::from_weights(m).unwrap())
}

fn role_strategy() -> impl Strategy<Value = Role> {
    prop::sample::select(Role::ALL.to_vec())
}

fn look_strategy() -> impl Strategy<Value = Look> {
    prop::collection::vec((role_strategy(), 0..color_count()), 1..5)
        .prop_map(|items| Look::new(items.into_iter().map(|(r, c)| ApparelItem::with_color(r, c)).collect()))
}

fn palettes_strategy() -> impl Strategy<Value = Vec<HarmoniousPalette>> {
    prop::collection::vec((descriptor_strategy(), 1usize..50), 1..5).prop_map(|ps| {
        ps.into_iter()
            .enumerate()
            .map(|(k, (d, n))| HarmoniousPalette::new(k as u32, d, n))
            .collect()
    })
}

fn kb(palettes: Vec<HarmoniousPalette>) -> KnowledgeBase {
    KnowledgeBase::new("test", palettes).unwrap()
}

fn profile_strategy() -> impl Strategy<Value = UserProfile> {
    (prop::collection::btree_map(0..color_count(), 0.0f64..=1.0, 0..20), 0.0f64..=1.0).prop_map(|(ratings, d)| {
        let mut p = UserProfile::new("u").unwrap();
        p.set_default_rating(d).unwrap();
        for (id, v) in ratings {
            p.rate(id, v).unwrap();
        }
        p
    })
}

fn pixel_strategy() -> impl Strategy<Value = HsiPixel> {
    (0.0f64..360.0, 0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(h, s, i)| HsiPixel { h, s, i })
}

fn small_image_strategy() -> impl Strategy<Value = RgbImage> {
    (1u32..12, 1u32..12).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<[u8; 3]>(), (w * h) as usize).prop_map(move |px| {
            RgbImage::from_fn(w, h, |x, y| Rgb(px[(y * w + x) as usize]))
        })
    })
}

fn weight_gap(a: &ColorDescriptor, b: &ColorDescriptor) -> f64 {
    a.ids()
        .chain(b.ids())
        .map(|id| (a.weight_of(id) - b.weight_of(id)).abs())
        .fold(0.0, f64::max)
}

pub fn membership_range() -> Result<(), String> {
    check(CASES, pixel_strategy(), |px| {
        for c in partition().colors() {
            let m = c.membership(px);
            prop_assert!((0.0..=1.0).contains(&m), "color {} gave {m}", c.id);
        }
        Ok(())
    })
}

pub fn hue_circularity() -> Result<(), String> {
    let strategy = (0.0f64..360.0, 0.0f64..360.0, 1.0f64..90.0, 0.0f64..60.0, 1.0f64..90.0, -5i32..5);
    check(CASES, strategy, |(x, a, rise, plateau, fall, k)| {
        let m = ChannelMembership::circular(a, a + rise, a + rise + plateau, a + rise + plateau + fall);
        let shifted = m.eval(x + 360.0 * k as f64);
        prop_assert!((m.eval(x) - shifted).abs() < 1e-9);
        for c in partition().colors().iter().filter(|c| !c.achromatic) {
            let p = HsiPixel { h: x, s: 0.4, i: 0.5 };
            let q = HsiPixel { h: x + 360.0 * k as f64, ..p };
            prop_assert!((c.membership(p) - c.membership(q)).abs() < 1e-9);
        }
        Ok(())
    })
}

pub fn descriptor_normalization() -> Result<(), String> {
    check(CASES, small_image_strategy(), |img| {
        let d = extract_descriptor(&img, partition(), &ExtractConfig::default()).unwrap();
        let total: f64 = d.entries().iter().map(|e| e.w).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(d.entries().iter().all(|e| e.w > 0.0 && e.w <= 1.0));
        Ok(())
    })
}

pub fn descriptor_permutation_invariance() -> Result<(), String> {
    check(CASES, (small_image_strategy(), any::<u64>()), |(img, seed)| {
        let mut px: Vec<Rgb<u8>> = img.pixels().copied().collect();
        px.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (w, h) = img.dimensions();
        let shuffled = RgbImage::from_fn(w, h, |x, y| px[(y * w + x) as usize]);
        let cfg = ExtractConfig::default();
        let a = extract_descriptor(&img, partition(), &cfg).unwrap();
        let b = extract_descriptor(&shuffled, partition(), &cfg).unwrap();
        prop_assert!(weight_gap(&a, &b) < 1e-9, "{a:?} vs {b:?}");
        Ok(())
    })
}

/// Vertical single-color stripes, at least 32 px wide each.
fn striped_image_strategy() -> impl Strategy<Value = RgbImage> {
    let colors = core_colors();
    (
        prop::collection::vec((prop::sample::select(colors), 0u32..32, any::<prop::sample::Index>()), 1..5),
        1u32..=16,
    )
        .prop_map(|(stripes, half_height)| {
            let mut columns: Vec<[u8; 3]> = Vec::new();
            for (id, extra, pick) in stripes {
                let samples = &cores()[id as usize];
                let rgb = samples[pick.index(samples.len())];
                columns.extend(std::iter::repeat_n(rgb, (32 + extra) as usize));
            }
            RgbImage::from_fn(columns.len() as u32, 2 * half_height, |x, _| Rgb(columns[x as usize]))
        })
}

pub fn descriptor_scale_stability() -> Result<(), String> {
    check(CASES, striped_image_strategy(), |img| {
        let half = imageops::resize(&img, img.width() / 2, img.height() / 2, FilterType::Triangle);
        let cfg = ExtractConfig::default();
        let a = extract_descriptor(&img, partition(), &cfg).unwrap();
        let b = extract_descriptor(&half, partition(), &cfg).unwrap();
        let gap = weight_gap(&a, &b);
        prop_assert!(gap < 0.05, "weights moved by {gap}: {a:?} vs {b:?}");
        Ok(())
    })
}

pub fn difference_reflexive() -> Result<(), String> {
    check(CASES, descriptor_strategy(), |p| {
        prop_assert_eq!(descriptor_difference(&p, &p, table()), 0.0);
        prop_assert_eq!(palette_similarity(&p, &p, table()), 1.0);
        Ok(())
    })
}

pub fn difference_symmetric() -> Result<(), String> {
    check(CASES, (descriptor_strategy(), descriptor_strategy()), |(p, q)| {
        let pq = descriptor_difference(&p, &q, table());
        let qp = descriptor_difference(&q, &p, table());
        prop_assert!((pq - qp).abs() < 1e-12);
        prop_assert!((palette_similarity(&p, &q, table()) - palette_similarity(&q, &p, table())).abs() < 1e-12);
        Ok(())
    })
}

pub fn difference_range() -> Result<(), String> {
    check(CASES, (descriptor_strategy(), descriptor_strategy()), |(p, q)| {
        let d = descriptor_difference(&p, &q, table());
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((0.0..=1.0).contains(&palette_similarity(&p, &q, table())));
        Ok(())
    })
}

/// Swapping one color of Q for a color at least as far from every color of P
/// never lowers the difference.
pub fn difference_monotone_in_distance() -> Result<(), String> {
    check(
        CASES,
        (descriptor_strategy(), descriptor_strategy(), any::<prop::sample::Index>(), any::<prop::sample::Index>()),
        |(p, q, slot, pick)| {
            let t = table();
            let j = slot.index(q.len());
            let old = q.entries()[j].id;
            let in_q: BTreeSet<ColorId> = q.ids().collect();
            let farther: Vec<ColorId> = (0..color_count())
                .filter(|c| !in_q.contains(c))
                .filter(|&c| p.ids().all(|a| t.get(a, c) >= t.get(a, old)))
                .collect();
            prop_assume!(!farther.is_empty());
            let replacement = farther[pick.index(farther.len())];
            let moved = ColorDescriptor::from_weights(
                q.entries().iter().map(|e| (if e.id == old { replacement } else { e.id }, e.w)),
            )
            .unwrap();
            let before = descriptor_difference(&p, &q, t);
            let after = descriptor_difference(&p, &moved, t);
            prop_assert!(after >= before - 1e-12, "{before} -> {after}");
            Ok(())
        },
    )
}

pub fn preference_range() -> Result<(), String> {
    check(CASES, (look_strategy(), profile_strategy(), palettes_strategy()), |(look, user, ps)| {
        let kb = kb(ps);
        for viewer in [Viewer::Registered(&user), Viewer::Guest] {
            let s = predict_preference(&look, viewer, &kb, table()).unwrap();
            prop_assert!((0.0..=1.0).contains(&s.value));
        }
        Ok(())
    })
}

pub fn preference_monotone_in_rating() -> Result<(), String> {
    check(
        CASES,
        (look_strategy(), profile_strategy(), palettes_strategy(), any::<prop::sample::Index>(), 0.0f64..=1.0),
        |(look, user, ps, item, bump)| {
            let kb = kb(ps);
            let id = look.items[item.index(look.items.len())].dominant_color();
            let mut raised = user.clone();
            let current = user.rating(id);
            raised.rate(id, current + (1.0 - current) * bump).unwrap();
            let before = predict_preference(&look, Viewer::Registered(&user), &kb, table()).unwrap();
            let after = predict_preference(&look, Viewer::Registered(&raised), &kb, table()).unwrap();
            prop_assert!(after.value >= before.value);
            Ok(())
        },
    )
}

/// Adding a palette can only raise harmony, and the score follows it.
pub fn preference_monotone_in_harmony() -> Result<(), String> {
    check(
        CASES,
        (look_strategy(), profile_strategy(), palettes_strategy(), descriptor_strategy()),
        |(look, user, ps, extra)| {
            let small = kb(ps.clone());
            let mut more = ps;
            more.push(HarmoniousPalette::new(more.len() as u32, extra, 1));
            let large = kb(more);
            let combined = look.combined_descriptor().unwrap();
            let h_small = harmony(&combined, &small, table()).unwrap().harm;
            let h_large = harmony(&combined, &large, table()).unwrap().harm;
            prop_assert!(h_large >= h_small);
            let before = predict_preference(&look, Viewer::Registered(&user), &small, table()).unwrap();
            let after = predict_preference(&look, Viewer::Registered(&user), &large, table()).unwrap();
            prop_assert_eq!(before.components.weighted_scp, after.components.weighted_scp);
            prop_assert!(after.value >= before.value);
            Ok(())
        },
    )
}

pub fn guest_invariance() -> Result<(), String> {
    check(CASES, (look_strategy(), profile_strategy(), profile_strategy(), palettes_strategy()), |(look, a, b, ps)| {
        let kb = kb(ps);
        let guest = predict_preference(&look, Viewer::Guest, &kb, table()).unwrap();
        prop_assert_eq!(guest.value, guest.components.harmony);
        prop_assert_eq!(guest.components.weighted_scp, None);
        for user in [&a, &b] {
            let s = predict_preference(&look, Viewer::Registered(user), &kb, table()).unwrap();
            prop_assert_eq!(s.components.harmony, guest.value);
            prop_assert_eq!(s.matched_palette_id, guest.matched_palette_id);
        }
        Ok(())
    })
}

pub fn weighted_mean_scale_invariance() -> Result<(), String> {
    let pairs = prop::collection::vec((0.01f64..10.0, 0.0f64..=1.0), 1..8);
    check(CASES, (pairs, 1e-3f64..1e3), |(pairs, k)| {
        let base = weighted_mean(pairs.iter().copied()).unwrap();
        let scaled = weighted_mean(pairs.iter().map(|&(w, x)| (w * k, x))).unwrap();
        prop_assert!((base - scaled).abs() < 1e-12);
        Ok(())
    })
}

pub fn containment_dominance() -> Result<(), String> {
    check(CASES, (palettes_strategy(), any::<prop::sample::Index>(), prop::collection::vec(any::<prop::sample::Index>(), 1..4)), |(ps, which, picks)| {
        let target = &ps[which.index(ps.len())];
        let ids: Vec<ColorId> = target.descriptor().ids().collect();
        let items: Vec<ApparelItem> = picks
            .iter()
            .zip(Role::ALL.iter().cycle())
            .map(|(i, &r)| ApparelItem::with_color(r, ids[i.index(ids.len())]))
            .collect();
        let look = Look::new(items);
        let s = predict_preference(&look, Viewer::Guest, &kb(ps), table()).unwrap();
        prop_assert_eq!(s.components.harmony, 1.0);
        Ok(())
    })
}

/// Every mined item ends up in exactly one group, and joins only groups
/// within the threshold.
pub fn mining_partitions_items() -> Result<(), String> {
    let items = prop::collection::vec(
        prop::collection::btree_map(0..12u16, 0.05f64..1.0, 1..4).prop_map(|m| ColorDescriptor::from_weights(m).unwrap()),
        1..40,
    );
    check(CASES, (items, 0.05f64..0.5), |(items, threshold)| {
        let cfg = MinerConfig {
            threshold,
            min_group_size: 2,
            ..MinerConfig::default()
        };
        let mut miner = PaletteMiner::new(table(), cfg).unwrap();
        for (k, d) in items.iter().enumerate() {
            let a = miner.push(format!("item{k}"), d.clone());
            prop_assert!(a.founded || a.best_difference.unwrap() <= threshold);
            if a.founded {
                prop_assert!(a.best_difference.is_none_or(|b| b > threshold));
            }
        }
        let outcome = miner.finish();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for g in outcome.groups.groups() {
            for r in &g.member_refs {
                *seen.entry(r.clone()).or_default() += 1;
            }
        }
        prop_assert_eq!(seen.len(), items.len());
        prop_assert!(seen.values().all(|&n| n == 1));
        Ok(())
    })
}

pub fn query_strategy() -> impl Strategy<Value = QueryResult> {
    (1u64..30, 1u64..30)
        .prop_flat_map(|(retrieved, in_db)| (Just(retrieved), 0..=retrieved.min(in_db), Just(in_db)))
        .prop_map(|(retrieved, relevant_retrieved, relevant_in_db)| QueryResult {
            retrieved,
            relevant_retrieved,
            relevant_in_db,
        })
}

pub fn pair_strategy() -> impl Strategy<Value = PreferencePair> {
    (0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(real, predicted)| PreferencePair { real, predicted })
}

pub fn metric_ranges() -> Result<(), String> {
    let fixtures = (prop::collection::vec(query_strategy(), 1..10), prop::collection::vec(pair_strategy(), 1..10));
    check(CASES, fixtures, |(queries, pairs)| {
        let d = average_difference(&pairs).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        match precision_recall(&queries) {
            Ok(pr) => {
                prop_assert!((0.0..=1.0).contains(&pr.precision));
                prop_assert!(pr.recall > 0.0 && pr.recall <= 1.0);
                prop_assert!(pr.relevance.is_finite());
            }
            Err(_) => prop_assert!(queries.iter().all(|q| q.relevant_retrieved == 0)),
        }
        Ok(())
    })
}

pub type Property = fn() -> Result<(), String>;

/// Every property above, by name.
pub fn all_properties() -> Vec<(&'static str, Property)> {
    vec![
        ("membership range", membership_range),
        ("hue circularity", hue_circularity),
        ("descriptor normalization", descriptor_normalization),
        ("descriptor pixel permutation invariance", descriptor_permutation_invariance),
        ("descriptor 2x downscale stability", descriptor_scale_stability),
        ("difference reflexivity", difference_reflexive),
        ("difference symmetry", difference_symmetric),
        ("difference range", difference_range),
        ("difference monotone in color distance", difference_monotone_in_distance),
        ("score range", preference_range),
        ("score monotone in ratings", preference_monotone_in_rating),
        ("score monotone in harmony", preference_monotone_in_harmony),
        ("guest invariance", guest_invariance),
        ("weighted mean scale invariance", weighted_mean_scale_invariance),
        ("containment dominance", containment_dominance),
        ("mining assigns each item to one group", mining_partitions_items),
        ("metric ranges", metric_ranges),
    ]
}
