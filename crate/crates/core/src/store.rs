//! Incremental on-disk analysis cache.
//!
//! Layout: one directory holding `manifest.json`, the mined revision list
//! (`revisions.ndjson`, oldest first) and newline-delimited record files
//! sharded by revision prefix under `records/`. Record writes append and
//! are idempotent per (revision, path, analyzer_version); the manifest
//! and revision list are swapped atomically when a run completes, so an
//! interrupted run leaves the previous consistent view and a re-run
//! converges on the same final state.
//!
//! Per-revision file states resolve inheritance: a file keeps its most
//! recent record until a newer revision changes or deletes it. Coupling
//! is not denormalized into records — import lists are stored per file
//! and resolved against the live set of the queried revision, so an
//! unchanged file's fan-in still reflects edits elsewhere.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analyzer::{self, LanguageProfile, MetricVector};
use crate::error::{Error, Result};
use crate::expertise::ComponentMap;
use crate::miner::{ChangeKind, RevisionRecord};

pub const STORE_SCHEMA_VERSION: u32 = 1;

/// Run-level metadata, written when an analyze run completes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub repository: String,
    pub branch: String,
    pub profile: String,
    pub analyzer_version: String,
}

/// What analysis produced for one (revision, path).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum AnalysisOutcome {
    Analyzed {
        metrics: MetricVector,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        imports: Vec<String>,
    },
    /// Tokenization failed or the file exceeded the size limit; excluded
    /// from aggregation.
    Unanalyzable { reason: String },
    /// Tombstone: the path stopped existing at this revision.
    Deleted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub revision_id: String,
    pub path: String,
    #[serde(flatten)]
    pub outcome: AnalysisOutcome,
    pub analyzer_version: String,
    pub profile: String,
}

/// Work needed to bring one revision up to date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevisionPlan {
    pub revision_id: String,
    /// Paths whose content must be fetched and analyzed.
    pub analyze: Vec<String>,
    /// Paths needing a deletion tombstone.
    pub tombstones: Vec<String>,
}

impl RevisionPlan {
    pub fn is_empty(&self) -> bool {
        self.analyze.is_empty() && self.tombstones.is_empty()
    }
}

type State = BTreeMap<String, Arc<AnalysisRecord>>;

#[derive(Debug, Default)]
pub struct Store {
    dir: PathBuf,
    manifest: Option<Manifest>,
    revisions: Vec<RevisionRecord>,
    /// revision id -> path -> latest record.
    records: HashMap<String, BTreeMap<String, Arc<AnalysisRecord>>>,
    rev_index: HashMap<String, usize>,
    states: Vec<State>,
}

impl Store {
    /// Open a store directory, creating an empty one if nothing is there.
    pub fn open(dir: &Path) -> Result<Store> {
        let mut store = Store {
            dir: dir.to_path_buf(),
            ..Store::default()
        };

        let manifest_path = dir.join("manifest.json");
        if manifest_path.exists() {
            let text = fs::read_to_string(&manifest_path)?;
            let manifest: Manifest =
                serde_json::from_str(&text).map_err(|e| Error::StoreCorruption {
                    path: manifest_path.clone(),
                    reason: format!("manifest unreadable: {e}"),
                })?;
            if manifest.schema_version != STORE_SCHEMA_VERSION {
                return Err(Error::StoreCorruption {
                    path: manifest_path,
                    reason: format!(
                        "schema version {} unsupported (expected {STORE_SCHEMA_VERSION})",
                        manifest.schema_version
                    ),
                });
            }
            store.manifest = Some(manifest);
        }

        let revisions_path = dir.join("revisions.ndjson");
        if revisions_path.exists() {
            let text = fs::read_to_string(&revisions_path)?;
            for line in text.lines() {
                if line.is_empty() {
                    continue;
                }
                let rev: RevisionRecord =
                    serde_json::from_str(line).map_err(|e| Error::StoreCorruption {
                        path: revisions_path.clone(),
                        reason: format!("revision line unreadable: {e}"),
                    })?;
                store.revisions.push(rev);
            }
        }

        let records_dir = dir.join("records");
        if records_dir.exists() {
            let mut shards: Vec<PathBuf> = fs::read_dir(&records_dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "ndjson"))
                .collect();
            shards.sort();
            for shard in shards {
                store.load_shard(&shard)?;
            }
        }

        store.rebuild();
        Ok(store)
    }

    fn load_shard(&mut self, shard: &Path) -> Result<()> {
        let text = fs::read_to_string(shard)?;
        let ends_complete = text.is_empty() || text.ends_with('\n');
        let lines: Vec<&str> = text.lines().collect();
        for (i, line) in lines.iter().enumerate() {
            if line.is_empty() {
                continue;
            }
            match serde_json::from_str::<AnalysisRecord>(line) {
                Ok(record) => self.insert_record(record),
                // A torn final line is what a crash mid-append leaves
                // behind; the record is simply recomputed next run.
                Err(_) if i + 1 == lines.len() && !ends_complete => {}
                Err(e) => {
                    return Err(Error::StoreCorruption {
                        path: shard.to_path_buf(),
                        reason: format!("record line {} unreadable: {e}", i + 1),
                    });
                }
            }
        }
        Ok(())
    }

    fn insert_record(&mut self, record: AnalysisRecord) {
        self.records
            .entry(record.revision_id.clone())
            .or_default()
            .insert(record.path.clone(), Arc::new(record));
    }

    fn rebuild(&mut self) {
        self.rev_index = self
            .revisions
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.clone(), i))
            .collect();
        self.states.clear();
        let mut state = State::new();
        for revision in &self.revisions {
            if let Some(changes) = self.records.get(&revision.id) {
                for (path, record) in changes {
                    match record.outcome {
                        AnalysisOutcome::Deleted => {
                            state.remove(path);
                        }
                        _ => {
                            state.insert(path.clone(), Arc::clone(record));
                        }
                    }
                }
            }
            self.states.push(state.clone());
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> Option<&Manifest> {
        self.manifest.as_ref()
    }

    pub fn revisions(&self) -> &[RevisionRecord] {
        &self.revisions
    }

    pub fn record(&self, revision_id: &str, path: &str) -> Option<&AnalysisRecord> {
        self.records
            .get(revision_id)
            .and_then(|paths| paths.get(path))
            .map(Arc::as_ref)
    }

    /// Reject reads from a store whose last completed run does not match
    /// the requested analyzer version and profile.
    pub fn assert_current(&self, analyzer_version: &str, profile: &str) -> Result<()> {
        match &self.manifest {
            None => Err(Error::MissingMetrics("store has no completed run".into())),
            Some(m) if m.analyzer_version != analyzer_version => {
                Err(Error::MissingMetrics(format!(
                    "store was produced by analyzer {:?}, current is {analyzer_version:?}",
                    m.analyzer_version
                )))
            }
            Some(m) if m.profile != profile => Err(Error::MissingMetrics(format!(
                "store was produced with profile {:?}, current is {profile:?}",
                m.profile
            ))),
            Some(_) => Ok(()),
        }
    }

    /// Schedule only the (revision, changed-file) pairs lacking a current
    /// record. Unchanged files inherit the parent's record by reference,
    /// so they never reappear in a plan.
    pub fn plan_incremental(
        &self,
        revisions: &[RevisionRecord],
        analyzer_version: &str,
        relevant: &dyn Fn(&str) -> bool,
    ) -> Vec<RevisionPlan> {
        let mut plans = Vec::new();
        for revision in revisions {
            let mut analyze = Vec::new();
            let mut tombstones = Vec::new();
            for change in &revision.changed_files {
                match &change.kind {
                    ChangeKind::Added | ChangeKind::Modified => {
                        if relevant(&change.path)
                            && !self.has_content_record(
                                &revision.id,
                                &change.path,
                                analyzer_version,
                            )
                        {
                            analyze.push(change.path.clone());
                        }
                    }
                    ChangeKind::Deleted => {
                        if relevant(&change.path)
                            && !self.has_tombstone(&revision.id, &change.path, analyzer_version)
                        {
                            tombstones.push(change.path.clone());
                        }
                    }
                    ChangeKind::Renamed { from } => {
                        if relevant(from)
                            && !self.has_tombstone(&revision.id, from, analyzer_version)
                        {
                            tombstones.push(from.clone());
                        }
                        if relevant(&change.path)
                            && !self.has_content_record(
                                &revision.id,
                                &change.path,
                                analyzer_version,
                            )
                        {
                            analyze.push(change.path.clone());
                        }
                    }
                }
            }
            analyze.sort();
            analyze.dedup();
            tombstones.sort();
            tombstones.dedup();
            plans.push(RevisionPlan {
                revision_id: revision.id.clone(),
                analyze,
                tombstones,
            });
        }
        plans
    }

    fn has_content_record(&self, revision_id: &str, path: &str, version: &str) -> bool {
        self.record(revision_id, path).is_some_and(|r| {
            r.analyzer_version == version && !matches!(r.outcome, AnalysisOutcome::Deleted)
        })
    }

    fn has_tombstone(&self, revision_id: &str, path: &str, version: &str) -> bool {
        self.record(revision_id, path).is_some_and(|r| {
            r.analyzer_version == version && matches!(r.outcome, AnalysisOutcome::Deleted)
        })
    }

    /// Append records to their shards (deterministic (revision, path)
    /// order) and fold them into the in-memory view.
    pub fn append_records(&mut self, mut records: Vec<AnalysisRecord>) -> Result<()> {
        if records.is_empty() {
            return Ok(());
        }
        records.sort_by(|a, b| {
            (a.revision_id.as_str(), a.path.as_str())
                .cmp(&(b.revision_id.as_str(), b.path.as_str()))
        });
        let records_dir = self.dir.join("records");
        fs::create_dir_all(&records_dir)?;

        let mut by_shard: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for record in &records {
            let prefix: String = record.revision_id.chars().take(2).collect();
            let shard = if prefix.len() == 2 {
                prefix
            } else {
                "misc".into()
            };
            by_shard
                .entry(shard)
                .or_default()
                .push(serde_json::to_string(record).expect("record serializes"));
        }
        for (shard, lines) in by_shard {
            let mut file = fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(records_dir.join(format!("{shard}.ndjson")))?;
            for line in lines {
                file.write_all(line.as_bytes())?;
                file.write_all(b"\n")?;
            }
        }
        for record in records {
            self.insert_record(record);
        }
        self.rebuild();
        Ok(())
    }

    /// Complete a run: atomically swap in the revision list and manifest.
    pub fn finish_run(&mut self, revisions: Vec<RevisionRecord>, manifest: Manifest) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let mut revision_lines = String::new();
        for revision in &revisions {
            revision_lines.push_str(&serde_json::to_string(revision).expect("revision serializes"));
            revision_lines.push('\n');
        }
        write_atomic(
            &self.dir.join("revisions.ndjson"),
            revision_lines.as_bytes(),
        )?;
        write_atomic(
            &self.dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)
                .expect("manifest serializes")
                .as_bytes(),
        )?;
        self.revisions = revisions;
        self.manifest = Some(manifest);
        self.rebuild();
        Ok(())
    }

    fn state_index(&self, revision_id: &str) -> Result<usize> {
        self.rev_index
            .get(revision_id)
            .copied()
            .ok_or_else(|| Error::MissingMetrics(format!("revision {revision_id} not in store")))
    }

    /// Live records (inheritance and tombstones resolved) at a revision.
    pub fn state_at(&self, revision_id: &str) -> Result<&State> {
        Ok(&self.states[self.state_index(revision_id)?])
    }

    /// Live state just before a revision: its first parent's state, or
    /// empty for a root commit.
    pub fn state_before(&self, revision_id: &str) -> Result<State> {
        let idx = self.state_index(revision_id)?;
        match &self.revisions[idx].parent_id {
            None => Ok(State::new()),
            Some(parent) => Ok(self.state_at(parent)?.clone()),
        }
    }

    /// Metric vectors of all live analyzable files at a revision, with
    /// coupling resolved over the live set when the profile supports it.
    pub fn live_vectors(
        &self,
        revision_id: &str,
        profile: &LanguageProfile,
    ) -> Result<BTreeMap<String, MetricVector>> {
        let state = self.state_at(revision_id)?.clone();
        Ok(vectors_of_state(&state, profile))
    }

    /// Like [`Store::live_vectors`], for the state preceding a revision.
    pub fn live_vectors_before(
        &self,
        revision_id: &str,
        profile: &LanguageProfile,
    ) -> Result<BTreeMap<String, MetricVector>> {
        let state = self.state_before(revision_id)?;
        Ok(vectors_of_state(&state, profile))
    }

    /// Metric vectors for one component's live analyzable files.
    pub fn component_state(
        &self,
        revision_id: &str,
        component: &str,
        component_map: &ComponentMap,
        profile: &LanguageProfile,
    ) -> Result<BTreeMap<String, MetricVector>> {
        let mut vectors = self.live_vectors(revision_id, profile)?;
        vectors.retain(|path, _| component_map.component_of(path) == component);
        Ok(vectors)
    }
}

/// Extract analyzable vectors from a state, resolving coupling over the
/// whole live set.
pub(crate) fn vectors_of_state(
    state: &State,
    profile: &LanguageProfile,
) -> BTreeMap<String, MetricVector> {
    let mut vectors: BTreeMap<String, MetricVector> = BTreeMap::new();
    let mut imports: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (path, record) in state {
        if let AnalysisOutcome::Analyzed {
            metrics,
            imports: file_imports,
        } = &record.outcome
        {
            vectors.insert(path.clone(), metrics.clone());
            imports.insert(path.clone(), file_imports.clone());
        }
    }
    if profile.coupling {
        let coupling = analyzer::resolve_coupling(&imports);
        for (path, vector) in vectors.iter_mut() {
            if let Some(&(ca, ce)) = coupling.get(path) {
                // Checker-provided coupling wins over resolution.
                vector.ca = vector.ca.or(Some(ca));
                vector.ce = vector.ce.or(Some(ce));
            }
        }
    }
    vectors
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
