//! Streaming harmonious-palette mining.
//!
//! Images are visited once, in corpus order. Each image's descriptor joins
//! the group with the smallest mean difference `Dp_avg` to its members, or
//! founds a new group when even the best `Dp_avg` exceeds the threshold.
//! Groups that end up with at least `min_group_size` members are averaged
//! into [`HarmoniousPalette`]s.

use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color_space::{ColorId, Partition};
use crate::descriptor::{extract_descriptor, ColorDescriptor, DescriptorEntry, ExtractConfig};
use crate::error::{Error, Result};
use crate::similarity::{descriptor_difference, group_mean_difference, ColorDistanceTable};

/// How `Dp_avg` against a group is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupDistance {
    /// Mean over every stored member.
    #[default]
    Exact,
    /// Difference to the group's mean descriptor; O(1) members per group.
    Centroid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinerConfig {
    /// Difference threshold; a best `Dp_avg` strictly above it founds a new group.
    pub threshold: f64,
    pub min_group_size: usize,
    /// Averaged colors lighter than this are dropped from a palette.
    pub min_palette_weight: f64,
    pub group_distance: GroupDistance,
    /// Items per convergence-curve window.
    pub convergence_window: usize,
}

impl Default for MinerConfig {
    fn default() -> Self {
        Self {
            threshold: 0.25,
            min_group_size: 100,
            min_palette_weight: 0.1,
            group_distance: GroupDistance::Exact,
            convergence_window: 1000,
        }
    }
}

impl MinerConfig {
    /// Defaults for corpora of a few hundred images.
    pub fn desk_scale() -> Self {
        Self {
            min_group_size: 10,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid("miner config", format!("threshold {} outside (0, 1)", self.threshold)));
        }
        if self.min_group_size == 0 {
            return Err(Error::invalid("miner config", "min_group_size must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.min_palette_weight) {
            return Err(Error::invalid("miner config", "min_palette_weight must lie in [0, 1)"));
        }
        if self.convergence_window == 0 {
            return Err(Error::invalid("miner config", "convergence_window must be at least 1"));
        }
        Ok(())
    }
}

/// Looks with similar fuzzy color compositions.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub id: u32,
    pub members: Vec<ColorDescriptor>,
    pub member_refs: Vec<String>,
    weight_sums: BTreeMap<ColorId, f64>,
}

impl Group {
    fn new(id: u32, first: ColorDescriptor, item: String) -> Self {
        let mut g = Self {
            id,
            members: Vec::new(),
            member_refs: Vec::new(),
            weight_sums: BTreeMap::new(),
        };
        g.push(first, item);
        g
    }

    fn push(&mut self, desc: ColorDescriptor, item: String) {
        for e in desc.entries() {
            *self.weight_sums.entry(e.id).or_insert(0.0) += e.w;
        }
        self.members.push(desc);
        self.member_refs.push(item);
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Column means of the member weight matrix (absent ids count as 0).
    pub fn mean_weights(&self) -> BTreeMap<ColorId, f64> {
        let n = self.members.len() as f64;
        self.weight_sums.iter().map(|(&id, &s)| (id, s / n)).collect()
    }

    fn centroid(&self) -> ColorDescriptor {
        ColorDescriptor::from_weights(self.mean_weights().into_iter().filter(|(_, w)| *w > 0.0))
            .expect("group members carry positive weights")
    }

    fn mean_difference(&self, ch: &ColorDescriptor, table: &ColorDistanceTable, mode: GroupDistance) -> f64 {
        match mode {
            GroupDistance::Exact => group_mean_difference(ch, &self.members, table).expect("groups are never empty"),
            GroupDistance::Centroid => descriptor_difference(ch, &self.centroid(), table),
        }
    }
}

/// Where a descriptor landed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Assignment {
    pub group_id: u32,
    pub founded: bool,
    /// Smallest `Dp_avg` over the groups that existed before assignment.
    pub best_difference: Option<f64>,
}

/// The evolving set of groups in a mining run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroupSet {
    groups: Vec<Group>,
}

impl GroupSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&Group> {
        self.groups.get(id as usize)
    }

    /// Place `ch` into the closest group, or found a new one when the
    /// closest is farther than the threshold. Ties go to the lowest id.
    pub fn assign(
        &mut self,
        ch: ColorDescriptor,
        item: impl Into<String>,
        table: &ColorDistanceTable,
        cfg: &MinerConfig,
    ) -> Assignment {
        let diffs: Vec<f64> = self
            .groups
            .par_iter()
            .map(|g| g.mean_difference(&ch, table, cfg.group_distance))
            .collect();
        let best = diffs
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (k, &d)| match best {
                Some((_, bd)) if bd <= d => best,
                _ => Some((k, d)),
            });
        match best {
            Some((k, d)) if d <= cfg.threshold => {
                self.groups[k].push(ch, item.into());
                Assignment {
                    group_id: k as u32,
                    founded: false,
                    best_difference: Some(d),
                }
            }
            _ => {
                let id = self.groups.len() as u32;
                self.groups.push(Group::new(id, ch, item.into()));
                Assignment {
                    group_id: id,
                    founded: true,
                    best_difference: best.map(|b| b.1),
                }
            }
        }
    }
}

/// An averaged group descriptor promoted to the knowledge base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PaletteRepr", into = "PaletteRepr")]
pub struct HarmoniousPalette {
    pub id: u32,
    pub label: Option<String>,
    pub member_count: usize,
    descriptor: ColorDescriptor,
}

#[derive(Serialize, Deserialize)]
struct PaletteRepr {
    id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    member_count: usize,
    entries: Vec<DescriptorEntry>,
}

impl TryFrom<PaletteRepr> for HarmoniousPalette {
    type Error = Error;

    fn try_from(r: PaletteRepr) -> Result<Self> {
        if r.member_count == 0 {
            return Err(Error::invalid("palette", format!("palette {} has no members", r.id)));
        }
        let descriptor: ColorDescriptor = serde_json::from_value(serde_json::json!({ "entries": r.entries }))
            .map_err(|e| Error::invalid("palette", format!("palette {}: {e}", r.id)))?;
        Ok(Self {
            id: r.id,
            label: r.label,
            member_count: r.member_count,
            descriptor,
        })
    }
}

impl From<HarmoniousPalette> for PaletteRepr {
    fn from(p: HarmoniousPalette) -> Self {
        Self {
            id: p.id,
            label: p.label,
            member_count: p.member_count,
            entries: p.descriptor.entries().to_vec(),
        }
    }
}

impl HarmoniousPalette {
    pub fn new(id: u32, descriptor: ColorDescriptor, member_count: usize) -> Self {
        Self {
            id,
            label: None,
            member_count,
            descriptor,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn descriptor(&self) -> &ColorDescriptor {
        &self.descriptor
    }

    pub fn entries(&self) -> &[DescriptorEntry] {
        self.descriptor.entries()
    }

    pub fn contains(&self, id: ColorId) -> bool {
        self.descriptor.ids().any(|x| x == id)
    }

    pub fn contains_all(&self, ids: impl IntoIterator<Item = ColorId>) -> bool {
        let own: HashSet<ColorId> = self.descriptor.ids().collect();
        ids.into_iter().all(|id| own.contains(&id))
    }
}

/// Average a group's member descriptors into a palette.
///
/// Mean weight per color id over all members, dropping ids lighter than
/// `min_palette_weight` and renormalizing.
pub fn average_palette(group: &Group, cfg: &MinerConfig) -> Result<HarmoniousPalette> {
    if group.len() < cfg.min_group_size {
        return Err(Error::invalid(
            "group",
            format!("group {} has {} members, needs {}", group.id, group.len(), cfg.min_group_size),
        ));
    }
    let means = group.mean_weights();
    let mut kept: Vec<(ColorId, f64)> = means
        .iter()
        .filter(|(_, &w)| w >= cfg.min_palette_weight)
        .map(|(&id, &w)| (id, w))
        .collect();
    if kept.is_empty() {
        // Nothing clears the floor; keep the heaviest mean color.
        let (&id, &w) = means
            .iter()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(a.0)))
            .expect("groups are never empty");
        kept.push((id, w));
    }
    Ok(HarmoniousPalette::new(group.id, ColorDescriptor::from_weights(kept)?, group.len()))
}

/// The palette knowledge base file: `{version, palettes: [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KbRepr", into = "KbRepr")]
pub struct KnowledgeBase {
    pub version: String,
    palettes: Vec<HarmoniousPalette>,
}

#[derive(Serialize, Deserialize)]
struct KbRepr {
    version: String,
    palettes: Vec<HarmoniousPalette>,
}

impl TryFrom<KbRepr> for KnowledgeBase {
    type Error = Error;

    fn try_from(r: KbRepr) -> Result<Self> {
        KnowledgeBase::new(r.version, r.palettes)
    }
}

impl From<KnowledgeBase> for KbRepr {
    fn from(kb: KnowledgeBase) -> Self {
        Self {
            version: kb.version,
            palettes: kb.palettes,
        }
    }
}

pub const KB_VERSION: &str = "1";

impl Default for KnowledgeBase {
    fn default() -> Self {
        Self {
            version: KB_VERSION.into(),
            palettes: Vec::new(),
        }
    }
}

impl KnowledgeBase {
    /// Palettes are kept sorted by id; ids must be unique.
    pub fn new(version: impl Into<String>, mut palettes: Vec<HarmoniousPalette>) -> Result<Self> {
        palettes.sort_by_key(|p| p.id);
        if let Some(w) = palettes.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::invalid("knowledge base", format!("duplicate palette id {}", w[0].id)));
        }
        Ok(Self {
            version: version.into(),
            palettes,
        })
    }

    pub fn palettes(&self) -> &[HarmoniousPalette] {
        &self.palettes
    }

    pub fn is_empty(&self) -> bool {
        self.palettes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.palettes.len()
    }

    pub fn get(&self, id: u32) -> Option<&HarmoniousPalette> {
        self.palettes.iter().find(|p| p.id == id)
    }

    pub fn with_label<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a HarmoniousPalette> + 'a {
        self.palettes.iter().filter(move |p| p.label.as_deref() == Some(label))
    }

    /// Every palette id must exist in the partition.
    pub fn validate_ids(&self, partition: &Partition) -> Result<()> {
        self.palettes.iter().try_for_each(|p| p.descriptor.validate_ids(partition))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// One point of the convergence curve: groups founded in a window of items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    /// Index of the first item in the window (0-based, decoded items only).
    pub start: usize,
    pub items: usize,
    pub founded: usize,
    /// Founded groups per 1000 items.
    pub rate_per_1000: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean_ms: f64,
    pub max_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MiningStats {
    pub items_seen: usize,
    pub items_mined: usize,
    pub items_skipped: usize,
    pub group_count: usize,
    pub promoted_count: usize,
    pub convergence: Vec<ConvergencePoint>,
    /// Per-image wall time for extraction plus assignment.
    pub latency: LatencyStats,
}

impl MiningStats {
    /// Convergence curve as CSV: `start,items,founded,rate_per_1000`.
    pub fn convergence_csv(&self) -> String {
        let mut out = String::from("start,items,founded,rate_per_1000\n");
        for p in &self.convergence {
            out.push_str(&format!("{},{},{},{:.3}\n", p.start, p.items, p.founded, p.rate_per_1000));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct MiningOutcome {
    pub groups: GroupSet,
    pub palettes: Vec<HarmoniousPalette>,
    pub stats: MiningStats,
}

impl MiningOutcome {
    pub fn knowledge_base(&self) -> KnowledgeBase {
        KnowledgeBase::new(KB_VERSION, self.palettes.clone()).expect("group ids are unique")
    }
}

/// Incremental miner: feed descriptors with [`PaletteMiner::push`], then
/// [`PaletteMiner::finish`].
pub struct PaletteMiner<'t> {
    table: &'t ColorDistanceTable,
    cfg: MinerConfig,
    groups: GroupSet,
    founded: Vec<bool>,
    skipped: usize,
    latencies_ms: Vec<f64>,
}

impl<'t> PaletteMiner<'t> {
    pub fn new(table: &'t ColorDistanceTable, cfg: MinerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            table,
            cfg,
            groups: GroupSet::new(),
            founded: Vec::new(),
            skipped: 0,
            latencies_ms: Vec::new(),
        })
    }

    pub fn push(&mut self, item: impl Into<String>, ch: ColorDescriptor) -> Assignment {
        let a = self.groups.assign(ch, item, self.table, &self.cfg);
        self.founded.push(a.founded);
        a
    }

    pub fn record_skip(&mut self) {
        self.skipped += 1;
    }

    fn record_latency(&mut self, ms: f64) {
        self.latencies_ms.push(ms);
    }

    pub fn groups(&self) -> &GroupSet {
        &self.groups
    }

    pub fn finish(self) -> MiningOutcome {
        let palettes: Vec<HarmoniousPalette> = self
            .groups
            .groups()
            .iter()
            .filter(|g| g.len() >= self.cfg.min_group_size)
            .map(|g| average_palette(g, &self.cfg).expect("size checked"))
            .collect();
        let window = self.cfg.convergence_window;
        let convergence = self
            .founded
            .chunks(window)
            .enumerate()
            .map(|(k, chunk)| {
                let founded = chunk.iter().filter(|f| **f).count();
                ConvergencePoint {
                    start: k * window,
                    items: chunk.len(),
                    founded,
                    rate_per_1000: founded as f64 * 1000.0 / chunk.len() as f64,
                }
            })
            .collect();
        let latency = if self.latencies_ms.is_empty() {
            LatencyStats::default()
        } else {
            let total: f64 = self.latencies_ms.iter().sum();
            LatencyStats {
                mean_ms: total / self.latencies_ms.len() as f64,
                max_ms: self.latencies_ms.iter().copied().fold(0.0, f64::max),
                total_ms: total,
            }
        };
        let stats = MiningStats {
            items_seen: self.founded.len() + self.skipped,
            items_mined: self.founded.len(),
            items_skipped: self.skipped,
            group_count: self.groups.len(),
            promoted_count: palettes.len(),
            convergence,
            latency,
        };
        MiningOutcome {
            groups: self.groups,
            palettes,
            stats,
        }
    }
}

/// Mine a corpus of `(item id, decoded image)` pairs in iteration order.
/// Items that failed to decode are logged and skipped.
pub fn mine<I>(
    corpus: I,
    partition: &Partition,
    table: &ColorDistanceTable,
    cfg: &MinerConfig,
    extract: &ExtractConfig,
) -> Result<MiningOutcome>
where
    I: IntoIterator<Item = (String, Result<RgbImage>)>,
{
    let mut miner = PaletteMiner::new(table, *cfg)?;
    for (item, image) in corpus {
        let started = Instant::now();
        let descriptor = image.and_then(|img| extract_descriptor(&img, partition, extract));
        match descriptor {
            Ok(ch) => {
                miner.push(item, ch);
                miner.record_latency(started.elapsed().as_secs_f64() * 1e3);
            }
            Err(e) => {
                log::warn!("skipping corpus item {item}: {e}");
                miner.record_skip();
            }
        }
    }
    Ok(miner.finish())
}

/// Mine already-extracted descriptors.
pub fn mine_descriptors<I>(descriptors: I, table: &ColorDistanceTable, cfg: &MinerConfig) -> Result<MiningOutcome>
where
    I: IntoIterator<Item = (String, ColorDescriptor)>,
{
    let mut miner = PaletteMiner::new(table, *cfg)?;
    for (item, ch) in descriptors {
        miner.push(item, ch);
    }
    Ok(miner.finish())
}
