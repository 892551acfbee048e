//! Append-only server-side key registry.
//!
//! One record per line, tab separated:
//!
//! ```text
//! <index: 8 hex digits>\t<secret: hex>\t<prompt: base64>\t<created_at: RFC 3339>\n
//! ```
//!
//! Registration takes an exclusive file lock and rescans the file before
//! appending, so concurrent registrations of one index (threads or processes)
//! produce exactly one success.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use chrono::{DateTime, SecondsFormat, Utc};

use super::{PlainIndex, SecretPayload};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryRecord {
    pub index: PlainIndex,
    pub secret: SecretPayload,
    pub prompt: String,
    pub created_at: DateTime<Utc>,
}

impl RegistryRecord {
    /// Record stamped with the current time.
    pub fn new(index: PlainIndex, secret: SecretPayload, prompt: impl Into<String>) -> Self {
        RegistryRecord {
            index,
            secret,
            prompt: prompt.into(),
            created_at: Utc::now(),
        }
    }

    fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\n",
            self.index.to_hex(),
            self.secret.to_hex(),
            B64.encode(self.prompt.as_bytes()),
            self.created_at.to_rfc3339_opts(SecondsFormat::Micros, true)
        )
    }

    fn parse_line(line: &str, line_no: usize) -> Result<Self> {
        let corrupt = |reason: String| Error::RegistryCorrupt {
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(corrupt(format!("expected 4 fields, found {}", fields.len())));
        }
        let index = PlainIndex::from_hex(fields[0]).map_err(|e| corrupt(e.to_string()))?;
        let secret = SecretPayload::from_hex(fields[1]).map_err(|e| corrupt(e.to_string()))?;
        let prompt_bytes = B64
            .decode(fields[2])
            .map_err(|e| corrupt(format!("prompt base64: {e}")))?;
        let prompt = String::from_utf8(prompt_bytes).map_err(|e| corrupt(e.to_string()))?;
        let created_at = DateTime::parse_from_rfc3339(fields[3].trim())
            .map_err(|e| corrupt(format!("timestamp: {e}")))?
            .with_timezone(&Utc);
        Ok(RegistryRecord {
            index,
            secret,
            prompt,
            created_at,
        })
    }
}

/// Anything that can resolve a plaintext index to its registration.
pub trait KeyLookup: Send + Sync {
    fn lookup(&self, index: PlainIndex) -> Result<RegistryRecord>;
}

/// In-memory lookup, for callers that hold their records already.
impl KeyLookup for HashMap<PlainIndex, RegistryRecord> {
    fn lookup(&self, index: PlainIndex) -> Result<RegistryRecord> {
        self.get(&index).cloned().ok_or(Error::NotFound(index))
    }
}

pub struct Registry {
    path: PathBuf,
    cache: Mutex<HashMap<PlainIndex, RegistryRecord>>,
}

impl Registry {
    /// Opens (creating if needed) the registry file at `path`.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .read(true)
            .open(&path)?;
        let records = read_all(&file)?;
        Ok(Registry {
            path,
            cache: Mutex::new(records),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn register(&self, index: PlainIndex, secret: &SecretPayload, prompt: &str) -> Result<()> {
        let mut cache = self.cache.lock().expect("registry mutex poisoned");
        let mut file = OpenOptions::new().read(true).append(true).open(&self.path)?;
        file.lock()?;
        let result = (|| {
            let on_disk = read_all(&file)?;
            if on_disk.contains_key(&index) {
                *cache = on_disk;
                return Err(Error::DuplicateIndex(index));
            }
            let record = RegistryRecord {
                index,
                secret: secret.clone(),
                prompt: prompt.to_owned(),
                created_at: Utc::now(),
            };
            file.seek(SeekFrom::End(0))?;
            file.write_all(record.to_line().as_bytes())?;
            file.sync_data()?;
            *cache = on_disk;
            cache.insert(index, record);
            Ok(())
        })();
        file.unlock()?;
        result
    }

    pub fn len(&self) -> usize {
        self.cache.lock().expect("registry mutex poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn reload(&self) -> Result<()> {
        let file = File::open(&self.path)?;
        file.lock_shared()?;
        let records = read_all(&file);
        file.unlock()?;
        *self.cache.lock().expect("registry mutex poisoned") = records?;
        Ok(())
    }
}

impl KeyLookup for Registry {
    fn lookup(&self, index: PlainIndex) -> Result<RegistryRecord> {
        if let Some(r) = self.cache.lock().expect("registry mutex poisoned").get(&index) {
            return Ok(r.clone());
        }
        // another writer may have appended since we last read
        self.reload()?;
        self.cache
            .lock()
            .expect("registry mutex poisoned")
            .get(&index)
            .cloned()
            .ok_or(Error::NotFound(index))
    }
}

fn read_all(file: &File) -> Result<HashMap<PlainIndex, RegistryRecord>> {
    let mut reader = BufReader::new(file.try_clone()?);
    reader.seek(SeekFrom::Start(0))?;
    let mut out = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = RegistryRecord::parse_line(&line, i + 1)?;
        out.insert(rec.index, rec);
    }
    Ok(out)
}
