//! Color aesthetics for apparel.
//!
//! Pixels are mapped onto a fuzzy partition of HSI space ([`color_space`]),
//! images are summarized as weighted sets of fuzzy colors ([`descriptor`]) and
//! compared with a fuzzy palette difference ([`similarity`]). A streaming
//! grouper mines harmonious palettes from an image corpus ([`miner`]) and a
//! look is scored for a user by combining per-color ratings with palette
//! harmony ([`preference`]).
//!
//! ```
//! use harmonia::{default_partition, ColorDistanceTable, ColorDescriptor, palette_similarity};
//!
//! let partition = default_partition();
//! let table = ColorDistanceTable::new(&partition);
//! let a = ColorDescriptor::from_weights([(3, 0.6), (91, 0.4)]).unwrap();
//! assert_eq!(palette_similarity(&a, &a, &table), 1.0);
//! ```

pub mod color_space;
pub mod corpus;
pub mod descriptor;
pub mod error;
pub mod evaluation;
pub mod miner;
pub mod preference;
pub mod similarity;
pub mod store;

pub use color_space::{default_partition, load_partition, rgb_to_hsi, ColorId, FuzzyColor, HsiPixel, Partition};
pub use descriptor::{decode_image, extract_descriptor, open_image, ColorDescriptor, DescriptorEntry, ExtractConfig};
pub use error::{Error, Result};
pub use evaluation::{average_difference, precision_recall, PreferencePair, QueryResult};
pub use miner::{mine, mine_descriptors, HarmoniousPalette, KnowledgeBase, MinerConfig, MiningOutcome, PaletteMiner};
pub use preference::{
    harmony, predict_preference, rank_catalog, role_weight, ApparelItem, Look, PreferenceScore, Role, UserProfile, Viewer,
};
pub use similarity::{descriptor_difference, palette_similarity, ColorDistanceTable};
pub use store::{Catalog, CatalogFilter, CatalogItem, Store};
