//! Fuzzy dominant color histograms.
//!
//! Every pixel spreads its membership mass over all fuzzy colors it belongs
//! to; the normalized mass per color, trimmed to the dominant few, is the
//! image's [`ColorDescriptor`].

use std::collections::HashSet;
use std::path::Path;

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color_space::{rgb_to_hsi, ColorId, Partition};
use crate::error::{Error, Result};

/// Tolerance on the sum of descriptor weights.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptorEntry {
    pub id: ColorId,
    pub w: f64,
}

/// Dominant fuzzy colors of an image (or of a synthetic color set) with
/// weights summing to one, sorted by weight descending then id ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DescriptorRepr", into = "DescriptorRepr")]
pub struct ColorDescriptor {
    entries: Vec<DescriptorEntry>,
    source_dims: Option<(u32, u32)>,
}

#[derive(Serialize, Deserialize)]
struct DescriptorRepr {
    entries: Vec<DescriptorEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    height: Option<u32>,
}

impl TryFrom<DescriptorRepr> for ColorDescriptor {
    type Error = Error;

    fn try_from(repr: DescriptorRepr) -> Result<Self> {
        let source_dims = match (repr.width, repr.height) {
            (Some(w), Some(h)) => Some((w, h)),
            (None, None) => None,
            _ => return Err(Error::invalid("descriptor", "width and height must be given together")),
        };
        let mut entries = repr.entries;
        check_entries(&entries)?;
        let sum: f64 = entries.iter().map(|e| e.w).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::invalid("descriptor", format!("weights sum to {sum}, expected 1")));
        }
        sort_entries(&mut entries);
        Ok(Self {
            entries,
            source_dims,
        })
    }
}

impl From<ColorDescriptor> for DescriptorRepr {
    fn from(d: ColorDescriptor) -> Self {
        Self {
            entries: d.entries,
            width: d.source_dims.map(|s| s.0),
            height: d.source_dims.map(|s| s.1),
        }
    }
}

fn check_entries(entries: &[DescriptorEntry]) -> Result<()> {
    if entries.is_empty() {
        return Err(Error::Empty("descriptor entries"));
    }
    let mut seen = HashSet::with_capacity(entries.len());
    for e in entries {
        if !seen.insert(e.id) {
            return Err(Error::DuplicateColor(e.id));
        }
        if !e.w.is_finite() || e.w < 0.0 || e.w > 1.0 + WEIGHT_SUM_TOLERANCE {
            return Err(Error::invalid("descriptor", format!("weight {} for color {} outside [0, 1]", e.w, e.id)));
        }
    }
    Ok(())
}

fn sort_entries(entries: &mut [DescriptorEntry]) {
    entries.sort_by(|x, y| y.w.total_cmp(&x.w).then(x.id.cmp(&y.id)));
}

impl ColorDescriptor {
    /// Build from positive (id, weight) pairs; weights are normalized.
    pub fn from_weights(pairs: impl IntoIterator<Item = (ColorId, f64)>) -> Result<Self> {
        let mut entries: Vec<DescriptorEntry> = pairs
            .into_iter()
            .map(|(id, w)| DescriptorEntry { id, w })
            .collect();
        if entries.is_empty() {
            return Err(Error::Empty("descriptor entries"));
        }
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !seen.insert(e.id) {
                return Err(Error::DuplicateColor(e.id));
            }
            if !e.w.is_finite() || e.w <= 0.0 {
                return Err(Error::invalid("descriptor", format!("weight {} for color {} must be positive", e.w, e.id)));
            }
        }
        let total: f64 = entries.iter().map(|e| e.w).sum();
        for e in &mut entries {
            e.w /= total;
        }
        sort_entries(&mut entries);
        Ok(Self {
            entries,
            source_dims: None,
        })
    }

    /// Single-color descriptor.
    pub fn single(id: ColorId) -> Self {
        Self {
            entries: vec![DescriptorEntry { id, w: 1.0 }],
            source_dims: None,
        }
    }

    pub fn with_source_dims(mut self, width: u32, height: u32) -> Self {
        self.source_dims = Some((width, height));
        self
    }

    pub fn entries(&self) -> &[DescriptorEntry] {
        &self.entries
    }

    pub fn source_dims(&self) -> Option<(u32, u32)> {
        self.source_dims
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ColorId> + '_ {
        self.entries.iter().map(|e| e.id)
    }

    pub fn weight_of(&self, id: ColorId) -> f64 {
        self.entries
            .iter()
            .find(|e| e.id == id)
            .map_or(0.0, |e| e.w)
    }

    /// Heaviest color.
    pub fn dominant(&self) -> ColorId {
        self.entries[0].id
    }

    /// Check every id against a partition.
    pub fn validate_ids(&self, partition: &Partition) -> Result<()> {
        match self.ids().find(|&id| !partition.contains(id)) {
            Some(id) => Err(Error::UnknownColor(id)),
            None => Ok(()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Knobs for [`extract_descriptor`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractConfig {
    /// Colors holding less than this share of membership mass are dropped.
    pub min_share: f64,
    pub max_dominant: usize,
    /// Images above this many pixels are sampled on a regular stride.
    pub max_pixels: u64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            min_share: 0.05,
            max_dominant: 8,
            max_pixels: 1_000_000,
        }
    }
}

impl ExtractConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.min_share) {
            return Err(Error::invalid("extract config", "min_share must lie in [0, 1)"));
        }
        if self.max_dominant == 0 {
            return Err(Error::invalid("extract config", "max_dominant must be at least 1"));
        }
        if self.max_pixels == 0 {
            return Err(Error::invalid("extract config", "max_pixels must be at least 1"));
        }
        Ok(())
    }
}

fn sampling_stride(width: u32, height: u32, max_pixels: u64) -> u32 {
    let total = width as u64 * height as u64;
    if total <= max_pixels {
        1
    } else {
        (total as f64 / max_pixels as f64).sqrt().ceil() as u32
    }
}

/// Per-color membership mass accumulated over the (possibly strided) image.
pub fn membership_mass(image: &RgbImage, partition: &Partition, max_pixels: u64) -> Vec<f64> {
    let n = partition.len();
    let stride = sampling_stride(image.width(), image.height(), max_pixels);
    let width = image.width();
    (0..image.height())
        .into_par_iter()
        .step_by(stride as usize)
        .fold(
            || (vec![0.0; n], vec![0.0; n]),
            |(mut acc, mut scratch), y| {
                for x in (0..width).step_by(stride as usize) {
                    let [r, g, b] = image.get_pixel(x, y).0;
                    partition.memberships_into(rgb_to_hsi(r, g, b), &mut scratch);
                    for (a, m) in acc.iter_mut().zip(&scratch) {
                        *a += m;
                    }
                }
                (acc, scratch)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(
            || vec![0.0; n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

/// Compute the fuzzy dominant color histogram of an image.
pub fn extract_descriptor(image: &RgbImage, partition: &Partition, cfg: &ExtractConfig) -> Result<ColorDescriptor> {
    cfg.validate()?;
    if image.width() == 0 || image.height() == 0 {
        return Err(Error::Empty("image"));
    }
    let mass = membership_mass(image, partition, cfg.max_pixels);
    let total: f64 = mass.iter().sum();
    assert!(total > 0.0, "partition coverage guarantees positive membership mass");

    let mut shares: Vec<(ColorId, f64)> = mass
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > 0.0)
        .map(|(id, m)| (id as ColorId, m / total))
        .collect();
    shares.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    let strongest = shares[0];
    shares.retain(|(_, s)| *s >= cfg.min_share);
    if shares.is_empty() {
        // Mass spread too thin for any color to reach min_share.
        shares.push(strongest);
    }
    shares.truncate(cfg.max_dominant);
    Ok(ColorDescriptor::from_weights(shares)?.with_source_dims(image.width(), image.height()))
}

/// Decode an encoded PNG/JPEG buffer into an RGB raster.
pub fn decode_image(bytes: &[u8]) -> Result<RgbImage> {
    Ok(image::load_from_memory(bytes)?.to_rgb8())
}

pub fn open_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    Ok(image::open(path)?.to_rgb8())
}

/// Descriptor for items whose fuzzy colors are already known.
///
/// Without weights every id gets the same share.
pub fn descriptor_from_color_ids(ids: &[ColorId], weights: Option<&[f64]>, partition: &Partition) -> Result<ColorDescriptor> {
    if ids.is_empty() {
        return Err(Error::Empty("color ids"));
    }
    if let Some(&id) = ids.iter().find(|&&id| !partition.contains(id)) {
        return Err(Error::UnknownColor(id));
    }
    match weights {
        None => ColorDescriptor::from_weights(ids.iter().map(|&id| (id, 1.0))),
        Some(ws) if ws.len() != ids.len() => Err(Error::invalid(
            "descriptor",
            format!("{} ids but {} weights", ids.len(), ws.len()),
        )),
        Some(ws) => ColorDescriptor::from_weights(ids.iter().copied().zip(ws.iter().copied())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color_space::default_partition;
    use image::Rgb;
    use proptest::prelude::*;

    fn uniform(w: u32, h: u32, rgb: [u8; 3]) -> RgbImage {
        RgbImage::from_pixel(w, h, Rgb(rgb))
    }

    #[test]
    fn uniform_red_is_single_entry() {
        let p = default_partition();
        let d = extract_descriptor(&uniform(64, 64, [255, 0, 0]), &p, &ExtractConfig::default()).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.entries()[0].w, 1.0);
        assert!(p.get(d.dominant()).unwrap().name.ends_with("red"));
        assert_eq!(d.source_dims(), Some((64, 64)));
    }

    #[test]
    fn half_red_half_blue() {
        let p = default_partition();
        let img = RgbImage::from_fn(64, 64, |x, _| if x < 32 { Rgb([255, 0, 0]) } else { Rgb([0, 0, 255]) });
        let d = extract_descriptor(&img, &p, &ExtractConfig::default()).unwrap();
        // Pixel-count oracle: 2048 red pixels and 2048 blue pixels.
        let red = p.classify(rgb_to_hsi(255, 0, 0));
        let blue = p.classify(rgb_to_hsi(0, 0, 255));
        assert_eq!(d.len(), 2);
        assert!((d.weight_of(red) - 2048.0 / 4096.0).abs() <= 0.02);
        assert!((d.weight_of(blue) - 2048.0 / 4096.0).abs() <= 0.02);
    }

    #[test]
    fn empty_image_errors() {
        let p = default_partition();
        let err = extract_descriptor(&RgbImage::new(0, 0), &p, &ExtractConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Empty(_)));
    }

    #[test]
    fn truncates_to_max_dominant() {
        let p = default_partition();
        // Eight vertical stripes of distinct pure-core colors.
        let stripes = [
            [255, 0, 0],
            [0, 0, 255],
            [0, 0, 0],
            [255, 255, 255],
            [0, 255, 0],
            [255, 255, 0],
            [0, 255, 255],
            [255, 0, 255],
        ];
        let img = RgbImage::from_fn(80, 10, |x, _| Rgb(stripes[(x / 10) as usize]));
        let cfg = ExtractConfig {
            max_dominant: 3,
            ..Default::default()
        };
        let d = extract_descriptor(&img, &p, &cfg).unwrap();
        assert_eq!(d.len(), 3);
        let sum: f64 = d.entries().iter().map(|e| e.w).sum();
        assert!((sum - 1.0).abs() < WEIGHT_SUM_TOLERANCE);
    }

    #[test]
    fn large_images_are_strided() {
        assert_eq!(sampling_stride(1000, 1000, 1_000_000), 1);
        assert_eq!(sampling_stride(2000, 2000, 1_000_000), 2);
        assert_eq!(sampling_stride(2001, 2000, 1_000_000), 3);
    }

    #[test]
    fn from_ids_uniform() {
        let p = default_partition();
        let d = descriptor_from_color_ids(&[12, 1], None, &p).unwrap();
        assert_eq!(d.weight_of(12), 0.5);
        assert_eq!(d.weight_of(1), 0.5);
        // equal weights: lower id first
        assert_eq!(d.dominant(), 1);
    }

    #[test]
    fn from_ids_normalizes() {
        let p = default_partition();
        let d = descriptor_from_color_ids(&[3], Some(&[2.0]), &p).unwrap();
        assert_eq!(d.entries(), &[DescriptorEntry { id: 3, w: 1.0 }]);
    }

    #[test]
    fn from_ids_errors() {
        let p = default_partition();
        assert!(matches!(descriptor_from_color_ids(&[1, 1], None, &p), Err(Error::DuplicateColor(1))));
        assert!(matches!(descriptor_from_color_ids(&[], None, &p), Err(Error::Empty(_))));
        assert!(matches!(descriptor_from_color_ids(&[92], None, &p), Err(Error::UnknownColor(92))));
        assert!(descriptor_from_color_ids(&[1, 2], Some(&[1.0]), &p).is_err());
        assert!(descriptor_from_color_ids(&[1], Some(&[0.0]), &p).is_err());
    }

    #[test]
    fn json_shape() {
        let d = ColorDescriptor::from_weights([(4, 3.0), (7, 1.0)]).unwrap().with_source_dims(10, 20);
        let v: serde_json::Value = serde_json::from_str(&d.to_json().unwrap()).unwrap();
        assert_eq!(v["entries"][0]["id"], 4);
        assert_eq!(v["entries"][0]["w"], 0.75);
        assert_eq!(v["width"], 10);
        assert_eq!(v["height"], 20);
        let back: ColorDescriptor = serde_json::from_value(v).unwrap();
        assert_eq!(back, d);
        let synthetic = ColorDescriptor::single(3);
        assert_eq!(synthetic.to_json().unwrap(), r#"{"entries":[{"id":3,"w":1.0}]}"#);
    }

    #[test]
    fn json_rejects_broken_invariants() {
        let bad_sum = r#"{"entries":[{"id":1,"w":0.5},{"id":2,"w":0.2}]}"#;
        assert!(serde_json::from_str::<ColorDescriptor>(bad_sum).is_err());
        let dup = r#"{"entries":[{"id":1,"w":0.5},{"id":1,"w":0.5}]}"#;
        assert!(serde_json::from_str::<ColorDescriptor>(dup).is_err());
        let empty = r#"{"entries":[]}"#;
        assert!(serde_json::from_str::<ColorDescriptor>(empty).is_err());
        let unsorted = r#"{"entries":[{"id":1,"w":0.25},{"id":2,"w":0.75}]}"#;
        let d: ColorDescriptor = serde_json::from_str(unsorted).unwrap();
        assert_eq!(d.dominant(), 2);
    }

    fn arb_image() -> impl Strategy<Value = RgbImage> {
        (1u32..24, 1u32..24)
            .prop_flat_map(|(w, h)| (Just(w), Just(h), proptest::collection::vec(any::<[u8; 3]>(), (w * h) as usize)))
            .prop_map(|(w, h, px)| RgbImage::from_fn(w, h, |x, y| Rgb(px[(y * w + x) as usize])))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn weights_always_normalized(img in arb_image()) {
            let p = default_partition();
            let d = extract_descriptor(&img, &p, &ExtractConfig::default()).unwrap();
            let sum: f64 = d.entries().iter().map(|e| e.w).sum();
            prop_assert!((sum - 1.0).abs() <= WEIGHT_SUM_TOLERANCE);
            prop_assert!((1..=8).contains(&d.len()));
            for pair in d.entries().windows(2) {
                prop_assert!(pair[0].w >= pair[1].w);
            }
        }

        #[test]
        fn pixel_order_is_irrelevant(img in arb_image(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let p = default_partition();
            let mut px: Vec<Rgb<u8>> = img.pixels().copied().collect();
            px.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let shuffled = RgbImage::from_fn(img.width(), img.height(), |x, y| px[(y * img.width() + x) as usize]);
            let a = extract_descriptor(&img, &p, &ExtractConfig::default()).unwrap();
            let b = extract_descriptor(&shuffled, &p, &ExtractConfig::default()).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for e in a.entries() {
                prop_assert!((e.w - b.weight_of(e.id)).abs() < 1e-9);
            }
        }
    }
}
