//! File-backed document storage for the service.
//!
//! Each document lives in three files under the data directory:
//! `<id>.chorda` (the markup), `<id>.meta.json` (version counter) and
//! `<id>.bindings.json`. Readers load an immutable snapshot without locking;
//! writers to one document queue on its mutex.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use arc_swap::ArcSwapOption;
use chorda_core::{parse_document, GroupBinding, ParseDiagnostic, ParseOutput};
use dashmap::DashMap;
use serde::{Deserialize, Serialize};

/// How a document's groups are bound to skeleton sub-processes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "camelCase", deny_unknown_fields)]
pub enum BindingSpec {
    #[default]
    ByName,
    Explicit {
        bindings: Vec<GroupBinding>,
    },
}

#[derive(Debug)]
pub struct Snapshot {
    pub id: String,
    pub version: u64,
    pub markup: String,
    pub parsed: ParseOutput,
    pub bindings: BindingSpec,
}

#[derive(Debug)]
pub enum StoreError {
    InvalidId,
    NotFound,
    Conflict { current: u64 },
    Parse(Vec<ParseDiagnostic>),
    Io(io::Error),
}

impl From<io::Error> for StoreError {
    fn from(e: io::Error) -> Self {
        StoreError::Io(e)
    }
}

#[derive(Default)]
struct Slot {
    write: tokio::sync::Mutex<()>,
    current: ArcSwapOption<Snapshot>,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    version: u64,
}

pub struct Store {
    dir: PathBuf,
    slots: DashMap<String, Arc<Slot>>,
}

/// Ids are used as file names, so they are restricted to a safe alphabet.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        && !id.starts_with('-')
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    Ok(())
}

fn read_optional(path: &Path) -> io::Result<Option<String>> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e),
    }
}

fn corrupt(path: &Path, e: serde_json::Error) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", path.display()))
}

impl Store {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Store> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Store {
            dir,
            slots: DashMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn list(&self) -> io::Result<Vec<String>> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let name = entry?.file_name();
            if let Some(id) = name.to_str().and_then(|n| n.strip_suffix(".chorda")) {
                if valid_id(id) {
                    ids.push(id.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    fn load(&self, id: &str) -> io::Result<Option<Snapshot>> {
        let Some(markup) = read_optional(&self.dir.join(format!("{id}.chorda")))? else {
            return Ok(None);
        };
        let meta_path = self.dir.join(format!("{id}.meta.json"));
        let version = match read_optional(&meta_path)? {
            Some(s) => {
                serde_json::from_str::<Meta>(&s)
                    .map_err(|e| corrupt(&meta_path, e))?
                    .version
            }
            None => 1,
        };
        let bindings_path = self.dir.join(format!("{id}.bindings.json"));
        let bindings = match read_optional(&bindings_path)? {
            Some(s) => serde_json::from_str(&s).map_err(|e| corrupt(&bindings_path, e))?,
            None => BindingSpec::default(),
        };
        let parsed = parse_document(&markup);
        Ok(Some(Snapshot {
            id: id.to_string(),
            version,
            markup,
            parsed,
            bindings,
        }))
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, StoreError> {
        if !valid_id(id) {
            return Err(StoreError::InvalidId);
        }
        if let Some(s) = self.slots.get(id) {
            return Ok(s.clone());
        }
        let loaded = self.load(id)?;
        let slot = self.slots.entry(id.to_string()).or_insert_with(|| {
            let s = Slot::default();
            s.current.store(loaded.map(Arc::new));
            Arc::new(s)
        });
        Ok(slot.clone())
    }

    /// Current snapshot, without taking any lock.
    pub fn get(&self, id: &str) -> Result<Arc<Snapshot>, StoreError> {
        self.slot(id)?.current.load_full().ok_or(StoreError::NotFound)
    }

    /// Stores new markup. Returns the snapshot and whether it was created.
    /// Markup with parse errors is rejected and nothing is written.
    pub async fn put(
        &self,
        id: &str,
        markup: String,
        if_match: Option<u64>,
    ) -> Result<(Arc<Snapshot>, bool), StoreError> {
        let slot = self.slot(id)?;
        let _guard = slot.write.lock().await;
        let current = slot.current.load_full();
        check_version(current.as_deref(), if_match)?;
        let parsed = parse_document(&markup);
        if parsed.has_errors() {
            return Err(StoreError::Parse(parsed.diagnostics));
        }
        let created = current.is_none();
        let next = Snapshot {
            id: id.to_string(),
            version: current.as_ref().map_or(1, |c| c.version + 1),
            markup,
            parsed,
            bindings: current.as_ref().map(|c| c.bindings.clone()).unwrap_or_default(),
        };
        write_atomic(&self.dir, &format!("{id}.chorda"), next.markup.as_bytes())?;
        self.write_meta(&next)?;
        let next = Arc::new(next);
        slot.current.store(Some(next.clone()));
        Ok((next, created))
    }

    /// Replaces the bindings of an existing document. `check` runs under the
    /// document lock against the snapshot being replaced.
    pub async fn set_bindings<E>(
        &self,
        id: &str,
        bindings: BindingSpec,
        if_match: Option<u64>,
        check: impl FnOnce(&Snapshot, &BindingSpec) -> Result<(), E>,
    ) -> Result<Result<Arc<Snapshot>, E>, StoreError> {
        let slot = self.slot(id)?;
        let _guard = slot.write.lock().await;
        let current = slot.current.load_full().ok_or(StoreError::NotFound)?;
        check_version(Some(&current), if_match)?;
        if let Err(e) = check(&current, &bindings) {
            return Ok(Err(e));
        }
        let next = Snapshot {
            id: id.to_string(),
            version: current.version + 1,
            markup: current.markup.clone(),
            parsed: current.parsed.clone(),
            bindings,
        };
        let json = serde_json::to_string_pretty(&next.bindings).expect("bindings serialize");
        write_atomic(&self.dir, &format!("{id}.bindings.json"), json.as_bytes())?;
        self.write_meta(&next)?;
        let next = Arc::new(next);
        slot.current.store(Some(next.clone()));
        Ok(Ok(next))
    }

    fn write_meta(&self, snap: &Snapshot) -> io::Result<()> {
        let json = serde_json::to_string(&Meta { version: snap.version }).expect("meta serializes");
        write_atomic(&self.dir, &format!("{}.meta.json", snap.id), json.as_bytes())
    }
}

fn check_version(current: Option<&Snapshot>, if_match: Option<u64>) -> Result<(), StoreError> {
    let have = current.map_or(0, |c| c.version);
    match if_match {
        Some(v) if v != have => Err(StoreError::Conflict { current: have }),
        _ => Ok(()),
    }
}
