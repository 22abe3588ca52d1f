//! File-backed persistence for the palette knowledge base, the apparel
//! catalog and user profiles.
//!
//! Layout under the root directory:
//!
//! ```text
//! kb.json          palette knowledge base
//! catalog.json     {"items": [...]}
//! users/<id>.json  one profile per user
//! .lock            held exclusively while a Store is open
//! ```
//!
//! Every write goes to a temporary file in the same directory and is renamed
//! into place.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::color_space::Partition;
use crate::descriptor::ColorDescriptor;
use crate::error::{Error, Result};
use crate::miner::{HarmoniousPalette, KnowledgeBase};
use crate::preference::{ApparelItem, Role, UserProfile};

const KB_FILE: &str = "kb.json";
const CATALOG_FILE: &str = "catalog.json";
const USERS_DIR: &str = "users";
const LOCK_FILE: &str = ".lock";

/// A commodity in the apparel catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogItem {
    pub item_id: String,
    pub role: Role,
    pub descriptor: ColorDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<String>,
    pub name: String,
    /// Style label such as "retro" or "classic".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl CatalogItem {
    pub fn apparel(&self) -> ApparelItem {
        ApparelItem::with_descriptor(self.role, self.descriptor.clone())
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Catalog {
    pub items: Vec<CatalogItem>,
}

impl Catalog {
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for item in &self.items {
            if item.item_id.is_empty() {
                return Err(Error::invalid("catalog", "empty item id"));
            }
            if !seen.insert(item.item_id.as_str()) {
                return Err(Error::invalid("catalog", format!("duplicate item id {}", item.item_id)));
            }
        }
        Ok(())
    }
}

/// Optional role and label constraints; an empty filter matches everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogFilter {
    #[serde(default)]
    pub role: Option<Role>,
    #[serde(default)]
    pub label: Option<String>,
}

impl CatalogFilter {
    pub fn matches(&self, item: &CatalogItem) -> bool {
        self.role.is_none_or(|r| item.role == r)
            && self
                .label
                .as_deref()
                .is_none_or(|l| item.label.as_deref() == Some(l))
    }
}

fn valid_user_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Corrupt {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn write_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let dir = path.parent().expect("store paths have a parent");
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    serde_json::to_writer_pretty(&mut tmp, value)?;
    tmp.write_all(b"\n")?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Handle on an opened store directory. Share it behind an `Arc`.
pub struct Store {
    root: PathBuf,
    _lock: File,
    kb: RwLock<KnowledgeBase>,
    catalog: RwLock<Catalog>,
    kb_write: Mutex<()>,
    catalog_write: Mutex<()>,
    user_writes: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("root", &self.root).finish_non_exhaustive()
    }
}

impl Store {
    /// Open (creating if needed) a store directory, take its lock and
    /// validate everything already on disk.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(root.join(USERS_DIR))?;
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(root.join(LOCK_FILE))?;
        lock.try_lock().map_err(|e| match e {
            fs::TryLockError::WouldBlock => Error::Locked(root.clone()),
            fs::TryLockError::Error(io) => Error::Io(io),
        })?;

        let kb_path = root.join(KB_FILE);
        let kb = if kb_path.exists() {
            read_json::<KnowledgeBase>(&kb_path)?
        } else {
            KnowledgeBase::default()
        };
        let catalog_path = root.join(CATALOG_FILE);
        let catalog = if catalog_path.exists() {
            let c = read_json::<Catalog>(&catalog_path)?;
            c.validate().map_err(|e| Error::Corrupt {
                path: catalog_path.clone(),
                reason: e.to_string(),
            })?;
            c
        } else {
            Catalog::default()
        };
        let store = Self {
            root,
            _lock: lock,
            kb: RwLock::new(kb),
            catalog: RwLock::new(catalog),
            kb_write: Mutex::new(()),
            catalog_write: Mutex::new(()),
            user_writes: Mutex::new(HashMap::new()),
        };
        for entry in fs::read_dir(store.root.join(USERS_DIR))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                store.read_profile(&path)?;
            }
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Check every stored color id against a partition.
    pub fn check_ids(&self, partition: &Partition) -> Result<()> {
        let corrupt = |file: &str, e: Error| Error::Corrupt {
            path: self.root.join(file),
            reason: e.to_string(),
        };
        self.kb.read().validate_ids(partition).map_err(|e| corrupt(KB_FILE, e))?;
        for item in &self.catalog.read().items {
            item.descriptor
                .validate_ids(partition)
                .map_err(|e| corrupt(CATALOG_FILE, e))?;
        }
        for id in self.list_users()? {
            self.get_profile(&id)?
                .validate_ids(partition)
                .map_err(|e| corrupt(&format!("{USERS_DIR}/{id}.json"), e))?;
        }
        Ok(())
    }

    fn user_path(&self, user_id: &str) -> Result<PathBuf> {
        if !valid_user_id(user_id) {
            return Err(Error::invalid("user id", format!("{user_id:?} must be 1-128 of [A-Za-z0-9_-]")));
        }
        Ok(self.root.join(USERS_DIR).join(format!("{user_id}.json")))
    }

    fn read_profile(&self, path: &Path) -> Result<UserProfile> {
        let profile: UserProfile = read_json(path)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        if profile.user_id != stem {
            return Err(Error::Corrupt {
                path: path.to_path_buf(),
                reason: format!("user_id {:?} does not match file name", profile.user_id),
            });
        }
        Ok(profile)
    }

    pub fn put_profile(&self, profile: &UserProfile) -> Result<()> {
        let path = self.user_path(&profile.user_id)?;
        let slot = self
            .user_writes
            .lock()
            .entry(profile.user_id.clone())
            .or_default()
            .clone();
        let _guard = slot.lock();
        write_atomic(&path, profile)
    }

    pub fn get_profile(&self, user_id: &str) -> Result<UserProfile> {
        let path = self.user_path(user_id)?;
        if !path.exists() {
            return Err(Error::NotFound(format!("user {user_id}")));
        }
        self.read_profile(&path)
    }

    pub fn list_users(&self) -> Result<Vec<String>> {
        let mut ids: Vec<String> = fs::read_dir(self.root.join(USERS_DIR))?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let p = e.path();
                (p.extension()? == "json").then(|| p.file_stem()?.to_str().map(str::to_owned))?
            })
            .collect();
        ids.sort();
        Ok(ids)
    }

    pub fn put_palettes(&self, kb: KnowledgeBase) -> Result<()> {
        let _guard = self.kb_write.lock();
        write_atomic(&self.root.join(KB_FILE), &kb)?;
        *self.kb.write() = kb;
        Ok(())
    }

    pub fn knowledge_base(&self) -> KnowledgeBase {
        self.kb.read().clone()
    }

    /// Palettes, optionally only those carrying `label`.
    pub fn list_palettes(&self, label: Option<&str>) -> Vec<HarmoniousPalette> {
        let kb = self.kb.read();
        kb.palettes()
            .iter()
            .filter(|p| label.is_none_or(|l| p.label.as_deref() == Some(l)))
            .cloned()
            .collect()
    }

    /// Insert or replace items by `item_id`. Replaced items keep their
    /// position; new ones are appended.
    pub fn upsert_catalog(&self, items: impl IntoIterator<Item = CatalogItem>) -> Result<()> {
        let _guard = self.catalog_write.lock();
        let mut next = self.catalog.read().clone();
        for item in items {
            match next.items.iter_mut().find(|i| i.item_id == item.item_id) {
                Some(slot) => *slot = item,
                None => next.items.push(item),
            }
        }
        next.validate()?;
        write_atomic(&self.root.join(CATALOG_FILE), &next)?;
        *self.catalog.write() = next;
        Ok(())
    }

    pub fn list_catalog(&self, filter: &CatalogFilter) -> Vec<CatalogItem> {
        self.catalog
            .read()
            .items
            .iter()
            .filter(|i| filter.matches(i))
            .cloned()
            .collect()
    }
}
