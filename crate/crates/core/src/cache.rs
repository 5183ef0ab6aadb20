//! Append-only cache of search results, one JSON object per line.
//!
//! Lines that fail to parse, or whose record does not match its key, are
//! skipped with a warning and the search is recomputed.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search::{ExtremeRecord, Pruning, SearchSpace};

/// Environment variable naming the cache file.
pub const CACHE_ENV: &str = "FLOORSUM_CACHE";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheKey {
    pub n: usize,
    pub m: i64,
    pub k_min: i64,
    pub k_max: i64,
    pub cap: usize,
    pub pruning: Pruning,
}

impl From<&SearchSpace> for CacheKey {
    fn from(s: &SearchSpace) -> Self {
        Self {
            n: s.n,
            m: s.m,
            k_min: s.k_min,
            k_max: s.k_max,
            cap: s.cap,
            pruning: s.pruning,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    key: CacheKey,
    record: ExtremeRecord,
}

impl Entry {
    fn consistent(&self) -> bool {
        let (k, r) = (&self.key, &self.record);
        k.n == r.n && k.m == r.m && k.k_min == r.k_min && k.k_max == r.k_max && k.cap == r.cap
    }
}

#[derive(Debug, Clone)]
pub struct ResultCache {
    path: PathBuf,
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Cache(format!("{}: {e}", path.display()))
}

impl ResultCache {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    /// `explicit` if given, else the path in `FLOORSUM_CACHE`, else no cache.
    pub fn resolve(explicit: Option<PathBuf>) -> Option<Self> {
        explicit
            .or_else(|| std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .map(Self::new)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Last well-formed entry stored under `key`.
    pub fn lookup(&self, key: &CacheKey) -> Result<Option<ExtremeRecord>> {
        let file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(io_err(&self.path, e)),
        };
        let mut found = None;
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| io_err(&self.path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Entry>(&line) {
                Ok(entry) if !entry.consistent() => warn!(
                    "{}:{}: record does not match its key, discarded",
                    self.path.display(),
                    lineno + 1
                ),
                Ok(entry) => {
                    if entry.key == *key {
                        found = Some(entry.record);
                    }
                }
                Err(e) => warn!(
                    "{}:{}: corrupt cache entry discarded ({e})",
                    self.path.display(),
                    lineno + 1
                ),
            }
        }
        Ok(found)
    }

    pub fn store(&self, key: &CacheKey, record: &ExtremeRecord) -> Result<()> {
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| io_err(&self.path, e))?;
        }
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| io_err(&self.path, e))?;
        // a previous writer may have died mid-line
        let len = file.metadata().map_err(|e| io_err(&self.path, e))?.len();
        let mut line = String::new();
        if len > 0 {
            let mut last = [0u8; 1];
            file.seek(SeekFrom::Start(len - 1))
                .and_then(|_| file.read_exact(&mut last))
                .map_err(|e| io_err(&self.path, e))?;
            if last[0] != b'\n' {
                line.push('\n');
            }
        }
        let entry = Entry {
            key: key.clone(),
            record: record.clone(),
        };
        line.push_str(&serde_json::to_string(&entry).map_err(|e| Error::Cache(e.to_string()))?);
        line.push('\n');
        file.write_all(line.as_bytes()).map_err(|e| io_err(&self.path, e))
    }

    /// Cached record for `space`, or the result of `compute` (then stored).
    /// The flag is true on a cache hit.
    pub fn get_or_compute<F>(&self, space: &SearchSpace, compute: F) -> Result<(ExtremeRecord, bool)>
    where
        F: FnOnce(&SearchSpace) -> Result<ExtremeRecord>,
    {
        let key = CacheKey::from(space);
        if let Some(rec) = self.lookup(&key)? {
            return Ok((rec, true));
        }
        let rec = compute(space)?;
        self.store(&key, &rec)?;
        Ok((rec, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::extremes;

    #[test]
    fn roundtrip_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResultCache::new(dir.path().join("c.jsonl"));
        let space = SearchSpace::new(4, 9);
        let (fresh, hit) = cache.get_or_compute(&space, extremes).unwrap();
        assert!(!hit);
        assert_eq!((fresh.max_value, fresh.min_value), (15, -9));
        let (again, hit) = cache
            .get_or_compute(&space, |_| panic!("should be served from cache"))
            .unwrap();
        assert!(hit);
        assert_eq!(again, fresh);
        assert_eq!(
            serde_json::to_string(&again).unwrap(),
            serde_json::to_string(&fresh).unwrap()
        );
    }

    #[test]
    fn mismatched_key_misses() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResultCache::new(dir.path().join("c.jsonl"));
        let space = SearchSpace::new(2, 5);
        cache.get_or_compute(&space, extremes).unwrap();
        assert!(cache.lookup(&CacheKey::from(&space.clone().with_cap(7))).unwrap().is_none());
        assert!(cache.lookup(&CacheKey::from(&SearchSpace::new(2, 6))).unwrap().is_none());
        assert!(cache.lookup(&CacheKey::from(&space)).unwrap().is_some());
    }

    #[test]
    fn truncated_line_is_discarded_and_recomputed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let cache = ResultCache::new(&path);
        let space = SearchSpace::new(3, 5);
        cache.get_or_compute(&space, extremes).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, &text[..text.len() / 2]).unwrap();

        assert!(cache.lookup(&CacheKey::from(&space)).unwrap().is_none());
        let (rec, hit) = cache.get_or_compute(&space, extremes).unwrap();
        assert!(!hit);
        assert_eq!(rec, extremes(&space).unwrap());
        // the fresh entry landed on its own line
        let (_, hit) = cache.get_or_compute(&space, extremes).unwrap();
        assert!(hit);
    }

    #[test]
    fn inconsistent_entry_is_discarded() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let cache = ResultCache::new(&path);
        let space = SearchSpace::new(2, 5);
        let wrong = extremes(&SearchSpace::new(2, 6)).unwrap();
        cache.store(&CacheKey::from(&space), &wrong).unwrap();
        assert!(cache.lookup(&CacheKey::from(&space)).unwrap().is_none());
    }

    #[test]
    fn missing_file_is_a_miss() {
        let cache = ResultCache::new("/nonexistent/dir/for/floorsum/cache.jsonl");
        assert!(cache.lookup(&CacheKey::from(&SearchSpace::new(2, 3))).unwrap().is_none());
    }
}
