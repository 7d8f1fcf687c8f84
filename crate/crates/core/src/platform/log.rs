use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EventRecord, PlatformState, SCHEMA_VERSION};

pub const LOG_FILE: &str = "events.log";
pub const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("storage failure: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt log at sequence {seq}: {reason}")]
    CorruptLog { seq: u64, reason: String },
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
}

/// `crc32-hex SP json`. The checksum covers the json text.
pub fn encode_line(record: &EventRecord) -> String {
    let json = serde_json::to_string(record).expect("event records always serialize");
    format!("{:08x} {json}", crc32fast::hash(json.as_bytes()))
}

/// Parses one line; `expected` names the sequence number for error reports.
pub fn decode_line(line: &str, expected: u64) -> Result<EventRecord, StorageError> {
    let corrupt = |reason: String| StorageError::CorruptLog { seq: expected, reason };
    let (crc, json) = line.split_once(' ').ok_or_else(|| corrupt("missing checksum separator".into()))?;
    let crc = u32::from_str_radix(crc, 16).map_err(|_| corrupt(format!("bad checksum field {crc:?}")))?;
    if crc32fast::hash(json.as_bytes()) != crc {
        return Err(corrupt("checksum mismatch".into()));
    }
    let record: EventRecord = serde_json::from_str(json).map_err(|e| corrupt(format!("unreadable record: {e}")))?;
    if record.v != SCHEMA_VERSION {
        return Err(corrupt(format!("unsupported schema version {}", record.v)));
    }
    if record.seq != expected {
        return Err(corrupt(format!("found sequence {}", record.seq)));
    }
    Ok(record)
}

/// Reads every record, verifying checksums and sequence continuity. A final
/// line without its newline is treated as a torn write and reported.
pub fn read_log(path: &Path) -> Result<Vec<EventRecord>, StorageError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut reader = BufReader::new(file);
    let mut out = Vec::new();
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        let expected = out.len() as u64 + 1;
        let Some(body) = line.strip_suffix('\n') else {
            return Err(StorageError::CorruptLog { seq: expected, reason: "truncated record".into() });
        };
        out.push(decode_line(body, expected)?);
    }
    Ok(out)
}

/// Destination for committed events. An append must be durable before it returns.
pub trait EventSink: Send {
    fn append(&mut self, record: &EventRecord) -> Result<(), StorageError>;
}

/// Keeps records in memory; used by the simulator and tests. Clones share
/// one buffer, so a caller can keep a handle after giving the sink away.
#[derive(Debug, Default, Clone)]
pub struct MemoryLog {
    records: Arc<Mutex<Vec<EventRecord>>>,
}

impl MemoryLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> Vec<EventRecord> {
        self.lock().clone()
    }

    pub fn len(&self) -> usize {
        self.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Vec<EventRecord>> {
        self.records.lock().unwrap_or_else(|e| e.into_inner())
    }
}

impl EventSink for MemoryLog {
    fn append(&mut self, record: &EventRecord) -> Result<(), StorageError> {
        self.lock().push(record.clone());
        Ok(())
    }
}

/// Append-only file log, synced after every record.
#[derive(Debug)]
pub struct FileLog {
    path: PathBuf,
    file: File,
}

impl FileLog {
    pub fn open(path: &Path) -> Result<Self, StorageError> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { path: path.to_owned(), file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl EventSink for FileLog {
    fn append(&mut self, record: &EventRecord) -> Result<(), StorageError> {
        let mut line = encode_line(record);
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.sync_data()?;
        Ok(())
    }
}

/// Writes all records in log format.
pub fn write_log(path: &Path, records: &[EventRecord]) -> Result<(), StorageError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&encode_line(r));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Full state as of `last_seq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub v: u32,
    pub last_seq: u64,
    pub state: PlatformState,
}

impl Snapshot {
    pub fn of(state: &PlatformState) -> Self {
        Self { v: SCHEMA_VERSION, last_seq: state.last_seq(), state: state.clone() }
    }

    /// Writes via a temporary file and rename so a crash never leaves half a snapshot.
    pub fn save(&self, path: &Path) -> Result<(), StorageError> {
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec(self).expect("state serializes"))?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Option<Self>, StorageError> {
        let bytes = match fs::read(path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let snap: Snapshot = serde_json::from_slice(&bytes).map_err(|e| StorageError::CorruptSnapshot(e.to_string()))?;
        if snap.v != SCHEMA_VERSION || snap.state.last_seq() != snap.last_seq {
            return Err(StorageError::CorruptSnapshot("version or sequence mismatch".into()));
        }
        Ok(Some(snap))
    }
}
