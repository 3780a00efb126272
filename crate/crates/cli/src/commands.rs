//! Pipeline orchestration behind the subcommands: mine, plan, analyze,
//! persist, aggregate, rank and report.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use codemine_core::analyzer::{
    self, analyze_batch, run_external_checker, LanguageProfile, MetricVector, ANALYZER_VERSION,
    MAX_ANALYZABLE_BYTES,
};
use codemine_core::expertise::{
    attribute_deltas, component_mark, glob_match, rank_experts, ComponentMap, ExpertiseWindow,
    RankedExpert,
};
use codemine_core::miner::{self, file_at_revision, AliasMap, ChangeKind, RevisionRecord};
use codemine_core::squale::MetricId;
use codemine_core::store::{
    AnalysisOutcome, AnalysisRecord, Manifest, Store, STORE_SCHEMA_VERSION,
};
use codemine_core::{Error, Result};

use crate::config::{EffectiveConfig, REPORT_SCHEMA_VERSION};

/// Cache key for this run's analysis logic. External checkers contribute
/// a fingerprint so reconfiguring them invalidates their cached results.
pub fn effective_analyzer_version(config: &EffectiveConfig) -> String {
    if config.checkers.is_empty() {
        return ANALYZER_VERSION.to_string();
    }
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for checker in &config.checkers {
        for byte in checker.display().bytes().chain([0u8]) {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{ANALYZER_VERSION}+ext-{hash:016x}")
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeSummary {
    pub schema_version: u32,
    pub repository: String,
    pub branch: String,
    pub revisions_processed: usize,
    /// (revision, file) pairs computed in this run.
    pub files_analyzed: usize,
    /// (revision, file) pairs already current in the store.
    pub cache_hits: usize,
    pub unanalyzable_files: usize,
    pub tombstones_written: usize,
    pub store: String,
    pub config: EffectiveConfig,
}

/// Bring the store up to date for the configured branch.
pub fn run_analyze(config: &EffectiveConfig) -> Result<AnalyzeSummary> {
    let repo = config.repository_ref();
    let aliases = match config.alias_map_path() {
        Some(path) => AliasMap::load(&path)?,
        None => AliasMap::empty(),
    };
    let revisions = miner::list_revisions(&repo, &aliases)?;
    let branch = miner::resolve_branch(&repo)?.unwrap_or_else(|| "(empty)".into());

    let profile = analyzer::profile(&config.profile)?;
    let version = effective_analyzer_version(config);
    let mut store = Store::open(&config.store_path())?;

    let relevant = |path: &str| profile.applies_to(path);
    let plans = store.plan_incremental(&revisions, &version, &relevant);

    let mut files_analyzed = 0usize;
    let mut unanalyzable_files = 0usize;
    let mut tombstones_written = 0usize;

    for plan in &plans {
        if plan.is_empty() {
            continue;
        }
        let mut batch: Vec<(String, String)> = Vec::new();
        let mut records: Vec<AnalysisRecord> = Vec::new();

        for path in &plan.analyze {
            match file_at_revision(&repo, &plan.revision_id, path)? {
                Some(content) if content.len() > MAX_ANALYZABLE_BYTES => {
                    records.push(unanalyzable(
                        plan,
                        path,
                        &version,
                        profile,
                        "exceeds the 1 MiB analysis limit",
                    ));
                }
                Some(content) => batch.push((path.clone(), content)),
                None => {
                    records.push(unanalyzable(
                        plan,
                        path,
                        &version,
                        profile,
                        "content unavailable at this revision",
                    ));
                }
            }
        }

        let mut analyzed: BTreeMap<String, (MetricVector, Vec<String>)> = BTreeMap::new();
        for (path, result) in analyze_batch(&batch, profile.id)? {
            match result {
                Ok(analysis) => {
                    analyzed.insert(path, (analysis.metrics, analysis.imports));
                }
                Err(e) => {
                    records.push(unanalyzable(plan, &path, &version, profile, &e.to_string()));
                }
            }
        }
        for checker in &config.checkers {
            let reported = run_external_checker(checker, &batch)?;
            for (path, vector) in reported {
                if let Some((metrics, _)) = analyzed.get_mut(&path) {
                    *metrics = metrics.merged_with(&vector);
                } else if batch.iter().any(|(p, _)| *p == path) {
                    // The built-in pass failed but the checker coped.
                    analyzed.insert(path, (vector, Vec::new()));
                }
            }
        }

        for (path, (metrics, imports)) in analyzed {
            records.retain(|r| r.path != path);
            records.push(AnalysisRecord {
                revision_id: plan.revision_id.clone(),
                path,
                outcome: AnalysisOutcome::Analyzed { metrics, imports },
                analyzer_version: version.clone(),
                profile: profile.id.to_string(),
            });
        }
        for path in &plan.tombstones {
            records.push(AnalysisRecord {
                revision_id: plan.revision_id.clone(),
                path: path.clone(),
                outcome: AnalysisOutcome::Deleted,
                analyzer_version: version.clone(),
                profile: profile.id.to_string(),
            });
        }

        files_analyzed += records
            .iter()
            .filter(|r| !matches!(r.outcome, AnalysisOutcome::Deleted))
            .count();
        for record in &records {
            if let AnalysisOutcome::Unanalyzable { reason } = &record.outcome {
                eprintln!(
                    "warning: {} at {} is unanalyzable: {reason}",
                    record.path, record.revision_id
                );
                unanalyzable_files += 1;
            }
        }
        tombstones_written += plan.tombstones.len();

        store.append_records(records)?;
    }

    let total_content_pairs: usize = revisions
        .iter()
        .flat_map(|r| &r.changed_files)
        .filter(|c| !matches!(c.kind, ChangeKind::Deleted) && relevant(&c.path))
        .count();

    store.finish_run(
        revisions,
        Manifest {
            schema_version: STORE_SCHEMA_VERSION,
            repository: config.repository.name.clone(),
            branch: branch.clone(),
            profile: profile.id.to_string(),
            analyzer_version: version,
        },
    )?;

    Ok(AnalyzeSummary {
        schema_version: REPORT_SCHEMA_VERSION,
        repository: config.repository.name.clone(),
        branch,
        revisions_processed: store.revisions().len(),
        files_analyzed,
        cache_hits: total_content_pairs - files_analyzed,
        unanalyzable_files,
        tombstones_written,
        store: config.store.clone(),
        config: config.clone(),
    })
}

fn unanalyzable(
    plan: &codemine_core::store::RevisionPlan,
    path: &str,
    version: &str,
    profile: &LanguageProfile,
    reason: &str,
) -> AnalysisRecord {
    AnalysisRecord {
        revision_id: plan.revision_id.clone(),
        path: path.to_string(),
        outcome: AnalysisOutcome::Unanalyzable {
            reason: reason.to_string(),
        },
        analyzer_version: version.to_string(),
        profile: profile.id.to_string(),
    }
}

fn open_current_store(config: &EffectiveConfig) -> Result<(Store, &'static LanguageProfile)> {
    let profile = analyzer::profile(&config.profile)?;
    let store = Store::open(&config.store_path())?;
    store.assert_current(&effective_analyzer_version(config), profile.id)?;
    if let (Some(wanted), Some(manifest)) = (&config.repository.branch, store.manifest()) {
        if manifest.branch != *wanted {
            return Err(Error::MissingMetrics(format!(
                "store was analyzed for branch {:?}, not {wanted:?}",
                manifest.branch
            )));
        }
    }
    Ok((store, profile))
}

fn resolve_window(config: &EffectiveConfig, revisions: &[RevisionRecord]) -> ExpertiseWindow {
    let reference = config
        .reference_time
        .or_else(|| revisions.iter().map(|r| r.timestamp).max())
        .unwrap_or(0);
    ExpertiseWindow {
        reference_time: reference,
        duration_days: config.window_days,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpertsReport {
    pub schema_version: u32,
    pub repository: String,
    pub window: ExpertiseWindow,
    pub components: Vec<ComponentExperts>,
    pub config: EffectiveConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentExperts {
    pub component: String,
    pub experts: Vec<RankedEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankedEntry {
    pub rank: usize,
    #[serde(flatten)]
    pub expert: RankedExpert,
}

/// Rank experts per component over the configured window.
pub fn run_experts(config: &EffectiveConfig) -> Result<ExpertsReport> {
    let (store, profile) = open_current_store(config)?;
    let component_map = ComponentMap::new(config.components.clone());
    let squale = config.squale();
    let window = resolve_window(config, store.revisions());

    let tallies = attribute_deltas(
        store.revisions(),
        &store,
        &component_map,
        &squale,
        &window,
        profile,
    )?;
    let rankings = rank_experts(&tallies, config.top_k);

    // Every component with live analyzable files is listed, with an empty
    // ranking when nothing in the window moved it.
    let mut universe: BTreeSet<String> = rankings.iter().map(|r| r.component.clone()).collect();
    if let Some(last) = store.revisions().last() {
        for path in store.live_vectors(&last.id, profile)?.keys() {
            universe.insert(component_map.component_of(path));
        }
    }

    let mut by_component: BTreeMap<String, Vec<RankedEntry>> = BTreeMap::new();
    for ranking in rankings {
        by_component.insert(
            ranking.component.clone(),
            ranking
                .entries
                .into_iter()
                .enumerate()
                .map(|(i, expert)| RankedEntry {
                    rank: i + 1,
                    expert,
                })
                .collect(),
        );
    }

    let components = universe
        .into_iter()
        .filter(|c| match &config.component_filter {
            Some(pattern) => glob_match(pattern, c),
            None => true,
        })
        .map(|component| ComponentExperts {
            experts: by_component.remove(&component).unwrap_or_default(),
            component,
        })
        .collect();

    Ok(ExpertsReport {
        schema_version: REPORT_SCHEMA_VERSION,
        repository: config.repository.name.clone(),
        window,
        components,
        config: config.clone(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeSeriesReport {
    pub schema_version: u32,
    pub repository: String,
    pub metrics: Vec<MetricId>,
    pub buckets: Vec<TimeBucket>,
    pub config: EffectiveConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeBucket {
    /// ISO week label, e.g. `2024-W05`.
    pub week: String,
    pub commit_count: u32,
    /// Summed per-commit global-mark deltas, aligned with `metrics`.
    /// Positive means improved quality.
    pub deltas: Vec<f64>,
}

/// Weekly oriented quality deltas per metric plus commit counts.
///
/// For each commit and metric, the repository-wide (or component-filtered)
/// global mark over that single metric's marks is compared against the
/// parent state; commits where either side has no mark contribute zero.
pub fn run_timeseries(config: &EffectiveConfig, metrics: &[MetricId]) -> Result<TimeSeriesReport> {
    let (store, profile) = open_current_store(config)?;
    let component_map = ComponentMap::new(config.components.clone());
    let squale = config.squale();

    let in_scope = |path: &str| match &config.component_filter {
        Some(pattern) => glob_match(pattern, &component_map.component_of(path)),
        None => true,
    };

    // Single-metric global marks per revision, swept in chain order.
    let mut per_commit: Vec<(i64, Vec<f64>)> = Vec::new();
    let mut previous: Option<Vec<Option<f64>>> = None;
    for revision in store.revisions() {
        let vectors = store.live_vectors(&revision.id, profile)?;
        let current: Vec<Option<f64>> = metrics
            .iter()
            .map(|&metric| {
                let pool: Vec<f64> = vectors
                    .iter()
                    .filter(|(path, _)| in_scope(path))
                    .filter_map(|(_, v)| single_mark(v, metric, &squale))
                    .collect();
                if pool.is_empty() {
                    None
                } else {
                    codemine_core::squale::global_mark(&pool, &squale)
                        .ok()
                        .map(|gm| gm.value)
                }
            })
            .collect();
        let parent: Vec<Option<f64>> = match (&revision.parent_id, &previous) {
            (Some(_), Some(prev)) => prev.clone(),
            _ => vec![None; metrics.len()],
        };
        let deltas: Vec<f64> = current
            .iter()
            .zip(&parent)
            .map(|(now, before)| match (now, before) {
                (Some(now), Some(before)) => now - before,
                _ => 0.0,
            })
            .collect();
        per_commit.push((revision.timestamp, deltas));
        previous = Some(current);
    }

    Ok(TimeSeriesReport {
        schema_version: REPORT_SCHEMA_VERSION,
        repository: config.repository.name.clone(),
        metrics: metrics.to_vec(),
        buckets: bucket_by_iso_week(&per_commit, metrics.len()),
        config: config.clone(),
    })
}

fn single_mark(
    vector: &MetricVector,
    metric: MetricId,
    squale: &codemine_core::squale::SqualeConfig,
) -> Option<f64> {
    let raw = match metric {
        MetricId::Cc => vector.cc.map(f64::from),
        MetricId::Hv => vector.hv,
        MetricId::Hd => vector.hd,
        MetricId::Ca => vector.ca.map(f64::from),
        MetricId::Ce => vector.ce.map(f64::from),
    }?;
    codemine_core::squale::individual_mark(metric, raw, squale).ok()
}

fn iso_week_label(timestamp: i64) -> String {
    use chrono::Datelike;
    let date = chrono::DateTime::from_timestamp(timestamp, 0)
        .unwrap_or_default()
        .date_naive();
    let week = date.iso_week();
    format!("{:04}-W{:02}", week.year(), week.week())
}

/// Sum per-commit deltas into contiguous ISO-week buckets.
fn bucket_by_iso_week(per_commit: &[(i64, Vec<f64>)], metric_count: usize) -> Vec<TimeBucket> {
    use chrono::Datelike;
    if per_commit.is_empty() {
        return Vec::new();
    }
    let mut by_week: BTreeMap<i64, TimeBucket> = BTreeMap::new();
    let min_ts = per_commit.iter().map(|(t, _)| *t).min().unwrap_or(0);
    let max_ts = per_commit.iter().map(|(t, _)| *t).max().unwrap_or(0);

    // Key weeks by the Monday's epoch day so the range is easy to fill.
    let monday_key = |ts: i64| -> i64 {
        let date = chrono::DateTime::from_timestamp(ts, 0)
            .unwrap_or_default()
            .date_naive();
        let monday = date - chrono::Days::new(date.weekday().num_days_from_monday() as u64);
        monday.num_days_from_ce() as i64
    };

    let mut key = monday_key(min_ts);
    let last_key = monday_key(max_ts);
    let mut ts_cursor = min_ts;
    while key <= last_key {
        by_week.insert(
            key,
            TimeBucket {
                week: iso_week_label(ts_cursor),
                commit_count: 0,
                deltas: vec![0.0; metric_count],
            },
        );
        // Advance one week.
        ts_cursor += 7 * 86_400;
        key += 7;
    }

    for (timestamp, deltas) in per_commit {
        let bucket = by_week
            .get_mut(&monday_key(*timestamp))
            .expect("commit week inside filled range");
        bucket.commit_count += 1;
        for (total, delta) in bucket.deltas.iter_mut().zip(deltas) {
            *total += delta;
        }
    }
    by_week.into_values().collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CommitReport {
    pub schema_version: u32,
    pub revision: String,
    pub author: String,
    pub timestamp: i64,
    pub parent: Option<String>,
    pub files: Vec<CommitFileDelta>,
    pub components: Vec<CommitComponentDelta>,
    pub config: EffectiveConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommitFileDelta {
    pub path: String,
    pub change: String,
    pub before: Option<MetricVector>,
    pub after: Option<MetricVector>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommitComponentDelta {
    pub component: String,
    pub global_mark_before: Option<f64>,
    pub global_mark_after: Option<f64>,
}

/// Per-file before/after metric pairs for one commit, plus the touched
/// components' global-mark movement.
pub fn run_commit(config: &EffectiveConfig, revision_id: &str) -> Result<CommitReport> {
    let (store, profile) = open_current_store(config)?;
    let component_map = ComponentMap::new(config.components.clone());
    let squale = config.squale();

    let revision = store
        .revisions()
        .iter()
        .find(|r| r.id == revision_id || (revision_id.len() >= 7 && r.id.starts_with(revision_id)))
        .cloned()
        .ok_or_else(|| Error::MissingMetrics(format!("revision {revision_id} not in store")))?;

    let before = store.live_vectors_before(&revision.id, profile)?;
    let after = store.live_vectors(&revision.id, profile)?;

    let mut files = Vec::new();
    let mut touched: BTreeSet<String> = BTreeSet::new();
    for change in &revision.changed_files {
        let before_path = match &change.kind {
            ChangeKind::Renamed { from } => from.as_str(),
            _ => change.path.as_str(),
        };
        let before_vector = before.get(before_path).cloned();
        let after_vector = after.get(&change.path).cloned();
        if before_vector.is_none() && after_vector.is_none() {
            continue; // not analyzable on either side
        }
        touched.insert(component_map.component_of(&change.path));
        if let ChangeKind::Renamed { from } = &change.kind {
            touched.insert(component_map.component_of(from));
        }
        files.push(CommitFileDelta {
            path: change.path.clone(),
            change: match &change.kind {
                ChangeKind::Added => "added".into(),
                ChangeKind::Modified => "modified".into(),
                ChangeKind::Deleted => "deleted".into(),
                ChangeKind::Renamed { from } => format!("renamed-from:{from}"),
            },
            before: before_vector,
            after: after_vector,
        });
    }

    let components = touched
        .into_iter()
        .map(|component| CommitComponentDelta {
            global_mark_before: component_mark(&before, &component, &component_map, &squale),
            global_mark_after: component_mark(&after, &component, &component_map, &squale),
            component,
        })
        .collect();

    Ok(CommitReport {
        schema_version: REPORT_SCHEMA_VERSION,
        revision: revision.id.clone(),
        author: revision.author.clone(),
        timestamp: revision.timestamp,
        parent: revision.parent_id.clone(),
        files,
        components,
        config: config.clone(),
    })
}
