//! Image corpora: reading a directory of images, and generating synthetic
//! corpora with known ("planted") palettes whose manifest is the ground truth
//! for mining.

use std::fs;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::color_space::{rgb_to_hsi, ColorId, Partition};
use crate::descriptor::{open_image, ColorDescriptor, DescriptorEntry};
use crate::error::{Error, Result};
use crate::miner::HarmoniousPalette;
use crate::similarity::{descriptor_difference, palette_similarity, ColorDistanceTable};

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// PNG/JPEG files directly inside `dir`, sorted by file name.
pub fn list_images(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir.as_ref())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    paths.sort();
    Ok(paths)
}

/// Lazily decode a list of image files as `(file name, image)` pairs.
pub fn decode_all(paths: Vec<PathBuf>) -> impl Iterator<Item = (String, Result<image::RgbImage>)> {
    paths.into_iter().map(|p| {
        let name = p
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        (name, open_image(&p))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedCorpusConfig {
    pub palettes: usize,
    pub images: usize,
    /// Fraction of images drawn from uniformly random palettes.
    pub noise: f64,
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    /// Fraction of pixels replaced by random RGB values in every image.
    pub pixel_noise: f64,
    pub min_colors: usize,
    pub max_colors: usize,
    /// Minimum pairwise difference between planted palettes.
    pub min_separation: f64,
}

impl Default for PlantedCorpusConfig {
    fn default() -> Self {
        Self {
            palettes: 8,
            images: 500,
            noise: 0.05,
            seed: 7,
            width: 32,
            height: 32,
            pixel_noise: 0.02,
            min_colors: 2,
            max_colors: 3,
            min_separation: 0.27,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedPalette {
    pub index: usize,
    pub entries: Vec<DescriptorEntry>,
}

impl PlantedPalette {
    pub fn descriptor(&self) -> ColorDescriptor {
        ColorDescriptor::from_weights(self.entries.iter().map(|e| (e.id, e.w))).expect("planted palettes are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub file: String,
    /// Planted palette index, or `None` for noise images.
    pub palette: Option<usize>,
}

/// Ground truth written next to a generated corpus as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub config: PlantedCorpusConfig,
    pub palettes: Vec<PlantedPalette>,
    pub items: Vec<ManifestItem>,
}

pub struct PlantedCorpus {
    pub manifest: CorpusManifest,
    pub images: Vec<RgbImage>,
}

impl PlantedCorpus {
    /// `(file name, image)` pairs in manifest order.
    pub fn items(&self) -> impl Iterator<Item = (String, Result<RgbImage>)> + '_ {
        self.manifest
            .items
            .iter()
            .zip(&self.images)
            .map(|(m, img)| (m.file.clone(), Ok(img.clone())))
    }

    pub fn planted_descriptors(&self) -> Vec<ColorDescriptor> {
        self.manifest.palettes.iter().map(PlantedPalette::descriptor).collect()
    }

    /// Write every image as PNG plus `manifest.json` into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        for (m, img) in self.manifest.items.iter().zip(&self.images) {
            img.save(dir.join(&m.file))?;
        }
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&self.manifest)? + "\n")?;
        Ok(())
    }
}

/// RGB values lying in the plateau of exactly one fuzzy color (membership 1
/// there, 0 in every other color), grouped per color.
pub fn pure_core_samples(partition: &Partition, step: u8) -> Vec<Vec<[u8; 3]>> {
    let mut cores = vec![Vec::new(); partition.len()];
    let mut scratch = vec![0.0; partition.len()];
    let levels: Vec<u8> = (0..=255u16).step_by(step.max(1) as usize).map(|v| v as u8).collect();
    for &r in &levels {
        for &g in &levels {
            for &b in &levels {
                partition.memberships_into(rgb_to_hsi(r, g, b), &mut scratch);
                let mut owner = None;
                let mut pure = true;
                for (id, &m) in scratch.iter().enumerate() {
                    if m == 1.0 && owner.is_none() {
                        owner = Some(id);
                    } else if m > 0.0 {
                        pure = false;
                        break;
                    }
                }
                if let (Some(id), true) = (owner, pure) {
                    cores[id].push([r, g, b]);
                }
            }
        }
    }
    cores
}

fn random_palette(rng: &mut ChaCha8Rng, eligible: &[ColorId], cfg: &PlantedCorpusConfig) -> ColorDescriptor {
    let k = rng.random_range(cfg.min_colors..=cfg.max_colors);
    let ids: Vec<ColorId> = eligible.choose_multiple(rng, k).copied().collect();
    ColorDescriptor::from_weights(ids.into_iter().map(|id| (id, rng.random_range(0.25..1.0)))).expect("k >= 1")
}

fn render(
    rng: &mut ChaCha8Rng,
    palette: &ColorDescriptor,
    cores: &[Vec<[u8; 3]>],
    cfg: &PlantedCorpusConfig,
) -> RgbImage {
    // Stripe widths follow the palette weights with ±15% jitter.
    let jittered: Vec<(ColorId, f64)> = palette
        .entries()
        .iter()
        .map(|e| (e.id, e.w * rng.random_range(0.85..1.15)))
        .collect();
    let total: f64 = jittered.iter().map(|x| x.1).sum();
    let mut columns: Vec<ColorId> = Vec::with_capacity(cfg.width as usize);
    for (k, (id, w)) in jittered.iter().enumerate() {
        let n = if k + 1 == jittered.len() {
            cfg.width as usize - columns.len()
        } else {
            ((w / total) * cfg.width as f64).round().max(1.0) as usize
        };
        columns.extend(std::iter::repeat_n(*id, n.min(cfg.width as usize - columns.len())));
    }
    RgbImage::from_fn(cfg.width, cfg.height, |x, _| {
        if rng.random_bool(cfg.pixel_noise) {
            Rgb(rng.random())
        } else {
            let core = &cores[columns[x as usize] as usize];
            Rgb(*core.choose(rng).expect("eligible colors have core samples"))
        }
    })
}

/// Generate a seeded corpus from `cfg.palettes` well-separated planted
/// palettes plus a `cfg.noise` fraction of random-palette images.
pub fn generate_planted_corpus(
    partition: &Partition,
    table: &ColorDistanceTable,
    cfg: &PlantedCorpusConfig,
) -> Result<PlantedCorpus> {
    if cfg.palettes == 0 {
        return Err(Error::invalid("corpus config", "need at least one planted palette"));
    }
    if !(0.0..=1.0).contains(&cfg.noise) || !(0.0..1.0).contains(&cfg.pixel_noise) {
        return Err(Error::invalid("corpus config", "noise fractions must lie in [0, 1]"));
    }
    if cfg.min_colors == 0 || cfg.min_colors > cfg.max_colors {
        return Err(Error::invalid("corpus config", "need 1 <= min_colors <= max_colors"));
    }
    if cfg.width < cfg.max_colors as u32 || cfg.height == 0 {
        return Err(Error::invalid("corpus config", "images too small for the palette size"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cores = pure_core_samples(partition, 8);
    let eligible: Vec<ColorId> = cores
        .iter()
        .enumerate()
        .filter(|(_, c)| c.len() >= 4)
        .map(|(id, _)| id as ColorId)
        .collect();
    if eligible.len() < cfg.max_colors {
        return Err(Error::invalid("corpus config", "partition has too few reachable colors"));
    }

    let mut planted: Vec<ColorDescriptor> = Vec::with_capacity(cfg.palettes);
    let mut attempts = 0;
    while planted.len() < cfg.palettes {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::invalid(
                "corpus config",
                format!("could not place {} palettes {} apart", cfg.palettes, cfg.min_separation),
            ));
        }
        let candidate = random_palette(&mut rng, &eligible, cfg);
        if candidate.entries().iter().any(|e| e.w < 0.15) {
            continue;
        }
        if planted
            .iter()
            .all(|p| descriptor_difference(p, &candidate, table) >= cfg.min_separation)
        {
            planted.push(candidate);
        }
    }

    let noise_count = (cfg.noise * cfg.images as f64).round() as usize;
    let mut sources: Vec<Option<usize>> = (0..cfg.images)
        .map(|k| (k >= noise_count).then(|| rng.random_range(0..cfg.palettes)))
        .collect();
    sources.shuffle(&mut rng);

    let mut images = Vec::with_capacity(cfg.images);
    let mut items = Vec::with_capacity(cfg.images);
    for (k, source) in sources.into_iter().enumerate() {
        let palette = match source {
            Some(i) => planted[i].clone(),
            None => random_palette(&mut rng, &eligible, cfg),
        };
        images.push(render(&mut rng, &palette, &cores, cfg));
        items.push(ManifestItem {
            file: format!("img_{k:05}.png"),
            palette: source,
        });
    }
    let palettes = planted
        .iter()
        .enumerate()
        .map(|(index, d)| PlantedPalette {
            index,
            entries: d.entries().to_vec(),
        })
        .collect();
    Ok(PlantedCorpus {
        manifest: CorpusManifest {
            config: *cfg,
            palettes,
            items,
        },
        images,
    })
}

/// Best match of one planted palette among the promoted palettes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub planted: usize,
    pub palette_id: Option<u32>,
    pub similarity: f64,
}

/// For each planted palette, the most similar promoted palette.
pub fn match_planted(
    planted: &[ColorDescriptor],
    promoted: &[HarmoniousPalette],
    table: &ColorDistanceTable,
) -> Vec<Recovery> {
    planted
        .iter()
        .enumerate()
        .map(|(k, p)| {
            promoted
                .iter()
                .map(|h| (palette_similarity(p, h.descriptor(), table), h.id))
                .fold(
                    Recovery {
                        planted: k,
                        palette_id: None,
                        similarity: 0.0,
                    },
                    |best, (sim, id)| {
                        if best.palette_id.is_none() || sim > best.similarity {
                            Recovery {
                                planted: k,
                                palette_id: Some(id),
                                similarity: sim,
                            }
                        } else {
                            best
                        }
                    },
                )
        })
        .collect()
}
