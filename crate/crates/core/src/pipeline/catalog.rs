//! On-disk dataset layout: `catalog.json` plus one directory per event
//! holding `E.f32le`, `N.f32le` and `Z.f32le`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::signal::{Channel, Waveform};

pub const CATALOG_FILE: &str = "catalog.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventType {
    Earthquake,
    Explosion,
}

impl std::fmt::Display for EventType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EventType::Earthquake => "earthquake",
            EventType::Explosion => "explosion",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    pub event_id: String,
    #[serde(rename = "type")]
    pub event_type: EventType,
    pub lat: f64,
    pub lon: f64,
    #[serde(default)]
    pub cluster: Option<String>,
    pub fs: f64,
    pub n_samples: usize,
    /// Ground-truth onset sample, present for synthetic events.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onset: Option<usize>,
}

impl CatalogEntry {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::Ingest {
            event_id: self.event_id.clone(),
            reason,
        };
        if self.event_id.is_empty() || self.event_id.contains(['/', '\\']) || self.event_id == ".." {
            return Err(bad(format!("invalid event id '{}'", self.event_id)));
        }
        if !(-90.0..=90.0).contains(&self.lat) || !(-180.0..=180.0).contains(&self.lon) {
            return Err(bad(format!("location ({}, {}) out of range", self.lat, self.lon)));
        }
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(bad(format!("invalid sampling rate {}", self.fs)));
        }
        if self.n_samples == 0 {
            return Err(bad("n_samples is zero".into()));
        }
        Ok(())
    }
}

/// Three equal-length channels of one event with its catalog row.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub entry: CatalogEntry,
    /// Indexed by [`Channel::index`].
    pub channels: [Waveform; 3],
}

impl EventRecord {
    pub fn new(entry: CatalogEntry, channels: [Waveform; 3]) -> Result<Self> {
        entry.validate()?;
        for (c, w) in Channel::ALL.iter().zip(&channels) {
            let bad = |reason: String| Error::Ingest {
                event_id: entry.event_id.clone(),
                reason,
            };
            if w.channel != *c {
                return Err(bad(format!("channel slot {c} holds {}", w.channel)));
            }
            if w.len() != entry.n_samples {
                return Err(bad(format!(
                    "{c} channel has {} samples, catalog says {}",
                    w.len(),
                    entry.n_samples
                )));
            }
            if w.fs != entry.fs {
                return Err(bad(format!(
                    "{c} channel sampled at {} Hz, catalog says {}",
                    w.fs, entry.fs
                )));
            }
        }
        Ok(EventRecord { entry, channels })
    }

    pub fn id(&self) -> &str {
        &self.entry.event_id
    }

    pub fn channel(&self, c: Channel) -> &Waveform {
        &self.channels[c.index()]
    }
}

/// Events that loaded, and why the others did not.
#[derive(Debug)]
pub struct IngestReport {
    pub events: Vec<EventRecord>,
    pub rejected: Vec<(String, Error)>,
    /// Catalog rows with no waveform directory.
    pub orphans: Vec<String>,
}

pub fn channel_path(dir: &Path, event_id: &str, c: Channel) -> PathBuf {
    dir.join(event_id).join(format!("{c}.f32le"))
}

fn read_channel(dir: &Path, entry: &CatalogEntry, c: Channel) -> Result<Waveform> {
    let path = channel_path(dir, &entry.event_id, c);
    let bytes = fs::read(&path).map_err(|e| Error::Ingest {
        event_id: entry.event_id.clone(),
        reason: if e.kind() == std::io::ErrorKind::NotFound {
            format!("missing {c} channel")
        } else {
            format!("reading {}: {e}", path.display())
        },
    })?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Ingest {
            event_id: entry.event_id.clone(),
            reason: format!(
                "{c} channel is {} bytes, not a whole number of f32 samples",
                bytes.len()
            ),
        });
    }
    let samples = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    Waveform::new(samples, entry.fs, c, entry.event_id.clone()).map_err(|e| Error::Ingest {
        event_id: entry.event_id.clone(),
        reason: e.to_string(),
    })
}

fn load_event(dir: &Path, entry: &CatalogEntry) -> Result<EventRecord> {
    entry.validate()?;
    let [e, n, z] = Channel::ALL.map(|c| read_channel(dir, entry, c));
    EventRecord::new(entry.clone(), [e?, n?, z?])
}

pub fn read_catalog(dir: &Path) -> Result<Vec<CatalogEntry>> {
    let path = dir.join(CATALOG_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Loads every catalog event; per-event failures are collected rather than
/// aborting the load.
pub fn ingest(dir: &Path) -> Result<IngestReport> {
    let catalog = read_catalog(dir)?;
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = catalog.iter().find(|e| !seen.insert(e.event_id.as_str())) {
        return Err(Error::Config(format!(
            "duplicate event id '{}' in catalog",
            dup.event_id
        )));
    }
    let (present, orphans): (Vec<&CatalogEntry>, Vec<&CatalogEntry>) =
        catalog.iter().partition(|e| dir.join(&e.event_id).is_dir());
    for o in &orphans {
        log::warn!("catalog event {} has no waveform directory; skipped", o.event_id);
    }
    let loaded = par::map_slice(&present, |e| load_event(dir, e));
    let mut events = Vec::new();
    let mut rejected = Vec::new();
    for (entry, res) in present.iter().zip(loaded) {
        match res {
            Ok(ev) => events.push(ev),
            Err(err) => {
                log::warn!("event {} rejected: {err}", entry.event_id);
                rejected.push((entry.event_id.clone(), err));
            }
        }
    }
    Ok(IngestReport {
        events,
        rejected,
        orphans: orphans.into_iter().map(|e| e.event_id.clone()).collect(),
    })
}

/// Writes events in the layout [`ingest`] reads. Samples are stored as f32.
pub fn write_dataset(dir: &Path, events: &[EventRecord]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for ev in events {
        let sub = dir.join(ev.id());
        fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        for w in &ev.channels {
            let path = channel_path(dir, ev.id(), w.channel);
            let bytes: Vec<u8> = w.samples.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect();
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        }
    }
    let catalog: Vec<&CatalogEntry> = events.iter().map(|e| &e.entry).collect();
    let path = dir.join(CATALOG_FILE);
    let text = serde_json::to_string_pretty(&catalog)?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(())
}
