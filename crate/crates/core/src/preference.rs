//! Look preference prediction.
//!
//! A look's predicted preference averages two terms in `[0, 1]`:
//!
//! * the role-weighted mean of the user's single-color ratings, one color
//!   per apparel item (its dominant fuzzy color), and
//! * the harmony of all the look's colors against the palette knowledge base.
//!
//! Harmony is 1 when some mined palette contains every queried color;
//! otherwise it is the similarity to the closest palette. Guests have no
//! ratings, so their score is the harmony alone.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::color_space::{ColorId, Partition};
use crate::descriptor::ColorDescriptor;
use crate::error::{Error, Result};
use crate::miner::{HarmoniousPalette, KnowledgeBase};
use crate::similarity::{palette_similarity, ColorDistanceTable};

/// Apparel role, which fixes the item's importance weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Dresses and costumes.
    DressCostume,
    /// Upper and lower garments: skirts, blouses, trousers.
    UpDown,
    ShoesBags,
    /// Glasses, watches, jewelry.
    Accessory,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::DressCostume, Role::UpDown, Role::ShoesBags, Role::Accessory];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::DressCostume => "dress_costume",
            Role::UpDown => "up_down",
            Role::ShoesBags => "shoes_bags",
            Role::Accessory => "accessory",
        }
    }
}

impl std::str::FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::invalid("role", format!("unknown role {s:?}")))
    }
}

pub fn role_weight(role: Role) -> f64 {
    match role {
        Role::DressCostume => 1.0,
        Role::UpDown => 0.75,
        Role::ShoesBags => 0.5,
        Role::Accessory => 0.25,
    }
}

/// Single-color preference ratings of one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRepr", into = "ProfileRepr")]
pub struct UserProfile {
    pub user_id: String,
    default_rating: f64,
    ratings: BTreeMap<ColorId, f64>,
}

#[derive(Serialize, Deserialize)]
struct ProfileRepr {
    user_id: String,
    #[serde(default = "neutral_rating")]
    default_rating: f64,
    #[serde(default)]
    ratings: BTreeMap<ColorId, f64>,
}

fn neutral_rating() -> f64 {
    0.5
}

impl TryFrom<ProfileRepr> for UserProfile {
    type Error = Error;

    fn try_from(r: ProfileRepr) -> Result<Self> {
        let mut p = UserProfile::new(r.user_id)?;
        p.set_default_rating(r.default_rating)?;
        for (id, v) in r.ratings {
            p.rate(id, v)?;
        }
        Ok(p)
    }
}

impl From<UserProfile> for ProfileRepr {
    fn from(p: UserProfile) -> Self {
        Self {
            user_id: p.user_id,
            default_rating: p.default_rating,
            ratings: p.ratings,
        }
    }
}

fn check_rating(v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::invalid("rating", format!("{v} outside [0, 1]")))
    }
}

impl UserProfile {
    pub fn new(user_id: impl Into<String>) -> Result<Self> {
        let user_id = user_id.into();
        if user_id.is_empty() {
            return Err(Error::invalid("profile", "empty user id"));
        }
        Ok(Self {
            user_id,
            default_rating: neutral_rating(),
            ratings: BTreeMap::new(),
        })
    }

    pub fn with_ratings(mut self, ratings: impl IntoIterator<Item = (ColorId, f64)>) -> Result<Self> {
        for (id, v) in ratings {
            self.rate(id, v)?;
        }
        Ok(self)
    }

    pub fn rate(&mut self, id: ColorId, rating: f64) -> Result<()> {
        self.ratings.insert(id, check_rating(rating)?);
        Ok(())
    }

    pub fn set_default_rating(&mut self, rating: f64) -> Result<()> {
        self.default_rating = check_rating(rating)?;
        Ok(())
    }

    pub fn default_rating(&self) -> f64 {
        self.default_rating
    }

    pub fn ratings(&self) -> &BTreeMap<ColorId, f64> {
        &self.ratings
    }

    /// Rating of a color, falling back to the default for unrated colors.
    pub fn rating(&self, id: ColorId) -> f64 {
        self.ratings.get(&id).copied().unwrap_or(self.default_rating)
    }

    pub fn validate_ids(&self, partition: &Partition) -> Result<()> {
        match self.ratings.keys().find(|&&id| !partition.contains(id)) {
            Some(&id) => Err(Error::UnknownColor(id)),
            None => Ok(()),
        }
    }
}

/// Who is asking for a score.
#[derive(Debug, Clone, Copy)]
pub enum Viewer<'a> {
    Registered(&'a UserProfile),
    Guest,
}

/// An item's color: a known fuzzy color or a full descriptor.
#[derive(Debug, Clone, PartialEq)]
pub enum ItemColor {
    Id(ColorId),
    Descriptor(ColorDescriptor),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ItemRepr", into = "ItemRepr")]
pub struct ApparelItem {
    pub role: Role,
    pub color: ItemColor,
}

#[derive(Serialize, Deserialize)]
struct ItemRepr {
    role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    color_id: Option<ColorId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    descriptor: Option<ColorDescriptor>,
}

impl TryFrom<ItemRepr> for ApparelItem {
    type Error = Error;

    fn try_from(r: ItemRepr) -> Result<Self> {
        let color = match (r.color_id, r.descriptor) {
            (Some(id), None) => ItemColor::Id(id),
            (None, Some(d)) => ItemColor::Descriptor(d),
            _ => return Err(Error::invalid("apparel item", "exactly one of color_id or descriptor is required")),
        };
        Ok(Self { role: r.role, color })
    }
}

impl From<ApparelItem> for ItemRepr {
    fn from(item: ApparelItem) -> Self {
        let (color_id, descriptor) = match item.color {
            ItemColor::Id(id) => (Some(id), None),
            ItemColor::Descriptor(d) => (None, Some(d)),
        };
        Self {
            role: item.role,
            color_id,
            descriptor,
        }
    }
}

impl ApparelItem {
    pub fn with_color(role: Role, id: ColorId) -> Self {
        Self {
            role,
            color: ItemColor::Id(id),
        }
    }

    pub fn with_descriptor(role: Role, descriptor: ColorDescriptor) -> Self {
        Self {
            role,
            color: ItemColor::Descriptor(descriptor),
        }
    }

    pub fn weight(&self) -> f64 {
        role_weight(self.role)
    }

    /// Color used for the single-color rating lookup.
    pub fn dominant_color(&self) -> ColorId {
        match &self.color {
            ItemColor::Id(id) => *id,
            ItemColor::Descriptor(d) => d.dominant(),
        }
    }

    pub fn descriptor(&self) -> ColorDescriptor {
        match &self.color {
            ItemColor::Id(id) => ColorDescriptor::single(*id),
            ItemColor::Descriptor(d) => d.clone(),
        }
    }

    fn check_ids(&self, table: &ColorDistanceTable) -> Result<()> {
        match &self.color {
            ItemColor::Id(id) if *id as usize >= table.len() => Err(Error::UnknownColor(*id)),
            ItemColor::Id(_) => Ok(()),
            ItemColor::Descriptor(d) => table.check(d),
        }
    }
}

/// An ordered set of apparel items worn together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Look {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub items: Vec<ApparelItem>,
}

impl Look {
    pub fn new(items: Vec<ApparelItem>) -> Self {
        Self { id: None, items }
    }

    pub fn total_weight(&self) -> f64 {
        self.items.iter().map(ApparelItem::weight).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.items.is_empty() {
            return Err(Error::Empty("look items"));
        }
        if self.total_weight() <= 0.0 {
            return Err(Error::invalid("look", "total item weight is zero"));
        }
        Ok(())
    }

    /// All of the look's colors as one descriptor: each item's descriptor
    /// scaled by its role weight, summed and normalized.
    pub fn combined_descriptor(&self) -> Result<ColorDescriptor> {
        let mut mass: BTreeMap<ColorId, f64> = BTreeMap::new();
        for item in &self.items {
            let w = item.weight();
            for e in item.descriptor().entries() {
                *mass.entry(e.id).or_insert(0.0) += w * e.w;
            }
        }
        ColorDescriptor::from_weights(mass.into_iter().filter(|(_, m)| *m > 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonyMatch {
    pub harm: f64,
    pub matched_palette_id: u32,
    /// True when a palette contains every queried color.
    pub contained: bool,
}

fn prefer_containing<'a>(a: &'a HarmoniousPalette, b: &'a HarmoniousPalette) -> &'a HarmoniousPalette {
    // Larger palettes (more members) win, then lower ids.
    if b.member_count > a.member_count || (b.member_count == a.member_count && b.id < a.id) {
        b
    } else {
        a
    }
}

/// Harmony of a set of colors against the knowledge base.
///
/// Containment in some palette gives exactly 1, preferring the palette with
/// most members and then the lowest id. Otherwise the best
/// [`palette_similarity`] wins, lowest id on ties.
pub fn harmony(query: &ColorDescriptor, kb: &KnowledgeBase, table: &ColorDistanceTable) -> Result<HarmonyMatch> {
    if kb.is_empty() {
        return Err(Error::EmptyKnowledgeBase);
    }
    table.check(query)?;
    let containing = kb
        .palettes()
        .iter()
        .filter(|p| p.contains_all(query.ids()))
        .reduce(prefer_containing);
    if let Some(p) = containing {
        return Ok(HarmonyMatch {
            harm: 1.0,
            matched_palette_id: p.id,
            contained: true,
        });
    }
    let (sim, id) = kb
        .palettes()
        .iter()
        .map(|p| (palette_similarity(query, p.descriptor(), table), p.id))
        .fold((f64::NEG_INFINITY, u32::MAX), |best, cur| {
            if cur.0 > best.0 || (cur.0 == best.0 && cur.1 < best.1) {
                cur
            } else {
                best
            }
        });
    Ok(HarmonyMatch {
        harm: sim,
        matched_palette_id: id,
        contained: false,
    })
}

/// Harmony of explicit color ids, each weighted equally.
pub fn harmony_of_ids(ids: &[ColorId], kb: &KnowledgeBase, table: &ColorDistanceTable) -> Result<HarmonyMatch> {
    if ids.is_empty() {
        return Err(Error::Empty("color ids"));
    }
    let query = ColorDescriptor::from_weights(ids.iter().map(|&id| (id, 1.0)))?;
    harmony(&query, kb, table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreComponents {
    /// Absent for guests.
    pub weighted_scp: Option<f64>,
    pub harmony: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreferenceScore {
    pub value: f64,
    pub components: ScoreComponents,
    pub matched_palette_id: Option<u32>,
}

/// Role-weighted mean of the user's ratings of each item's dominant color.
/// `Σ w·x / Σ w` over `(weight, value)` pairs; `None` when the weights sum to zero.
pub fn weighted_mean(pairs: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    let (num, den) = pairs.into_iter().fold((0.0, 0.0), |(n, d), (w, x)| (n + w * x, d + w));
    (den > 0.0).then(|| num / den)
}

pub fn weighted_single_color_preference(look: &Look, user: &UserProfile) -> Result<f64> {
    look.validate()?;
    weighted_mean(look.items.iter().map(|item| (item.weight(), user.rating(item.dominant_color()))))
        .ok_or_else(|| Error::invalid("look", "total item weight is zero"))
}

/// Predicted preference of `viewer` for `look`.
pub fn predict_preference(
    look: &Look,
    viewer: Viewer<'_>,
    kb: &KnowledgeBase,
    table: &ColorDistanceTable,
) -> Result<PreferenceScore> {
    look.validate()?;
    for item in &look.items {
        item.check_ids(table)?;
    }
    let h = harmony(&look.combined_descriptor()?, kb, table)?;
    let (value, weighted_scp) = match viewer {
        Viewer::Guest => (h.harm, None),
        Viewer::Registered(user) => {
            let scp = weighted_single_color_preference(look, user)?;
            ((scp + h.harm) / 2.0, Some(scp))
        }
    };
    Ok(PreferenceScore {
        value,
        components: ScoreComponents {
            weighted_scp,
            harmony: h.harm,
        },
        matched_palette_id: Some(h.matched_palette_id),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    /// Position of the candidate in the input list.
    pub index: usize,
    pub score: PreferenceScore,
}

/// Score every candidate added to the anchor look and sort descending.
/// Equal scores keep their input order.
pub fn rank_catalog(
    anchor: &Look,
    candidates: &[ApparelItem],
    viewer: Viewer<'_>,
    kb: &KnowledgeBase,
    table: &ColorDistanceTable,
) -> Result<Vec<RankedCandidate>> {
    if candidates.is_empty() {
        return Err(Error::Empty("candidates"));
    }
    let mut ranked = candidates
        .iter()
        .enumerate()
        .map(|(index, item)| {
            let mut look = anchor.clone();
            look.items.push(item.clone());
            predict_preference(&look, viewer, kb, table).map(|score| RankedCandidate { index, score })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| b.score.value.total_cmp(&a.score.value));
    Ok(ranked)
}
