//! Expertise extraction: restrict history to a time window, attribute
//! per-component global-mark deltas to commit authors, and rank experts.
//!
//! A commit counts as an increase for (author, component) when it raises
//! the component's global mark by more than a small neutral band, as a
//! decrease when it lowers it, and as neither otherwise. The score is
//! `qi * ln(1 + commits)` with `qi = min(increases/decreases, 1)` and
//! `qi = 1` when nothing ever decreased quality, so doubling commit
//! volume never doubles the score.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::analyzer::LanguageProfile;
use crate::error::Result;
use crate::miner::{ChangeKind, RevisionRecord};
use crate::par;
use crate::squale::{global_mark, marks_for_vector, SqualeConfig};
use crate::store::Store;

/// Global-mark deltas smaller than this are neutral: floating-point noise
/// must not flip an increase/decrease count.
pub const GM_DELTA_EPSILON: f64 = 1e-9;

/// A component born in this commit (no analyzable files before) counts as
/// an increase when its first global mark lands at or above mid-scale,
/// a decrease otherwise; a component dying does the reverse.
pub const GM_BIRTH_THRESHOLD: f64 = 1.5;

/// Ordered glob rules mapping paths to component names; the first match
/// wins and unmatched paths fall back to their top-level directory
/// (`.` for paths without one).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentMap {
    #[serde(default)]
    pub rules: Vec<ComponentRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentRule {
    pub pattern: String,
    pub component: String,
}

impl ComponentMap {
    pub fn new(rules: Vec<ComponentRule>) -> Self {
        ComponentMap { rules }
    }

    pub fn component_of(&self, path: &str) -> String {
        for rule in &self.rules {
            if glob_match(&rule.pattern, path) {
                return rule.component.clone();
            }
        }
        match path.split_once('/') {
            Some((top, _)) => top.to_string(),
            None => ".".to_string(),
        }
    }
}

/// Segment-aware glob matching: `*` and `?` match within one path
/// segment, `**` spans segments.
pub fn glob_match(pattern: &str, path: &str) -> bool {
    let pattern_segments: Vec<&str> = pattern.split('/').collect();
    let path_segments: Vec<&str> = path.split('/').collect();
    match_segments(&pattern_segments, &path_segments)
}

fn match_segments(pattern: &[&str], path: &[&str]) -> bool {
    match pattern.split_first() {
        None => path.is_empty(),
        Some((&"**", rest)) => (0..=path.len()).any(|skip| match_segments(rest, &path[skip..])),
        Some((first, rest)) => match path.split_first() {
            Some((segment, path_rest)) => {
                match_one_segment(first.as_bytes(), segment.as_bytes())
                    && match_segments(rest, path_rest)
            }
            None => false,
        },
    }
}

fn match_one_segment(pattern: &[u8], text: &[u8]) -> bool {
    match pattern.split_first() {
        None => text.is_empty(),
        Some((b'*', rest)) => (0..=text.len()).any(|skip| match_one_segment(rest, &text[skip..])),
        Some((b'?', rest)) => match text.split_first() {
            Some((_, text_rest)) => match_one_segment(rest, text_rest),
            None => false,
        },
        Some((c, rest)) => match text.split_first() {
            Some((t, text_rest)) if t == c => match_one_segment(rest, text_rest),
            _ => false,
        },
    }
}

/// Half-open analysis window `(reference - days, reference]` in Unix
/// seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertiseWindow {
    pub reference_time: i64,
    pub duration_days: u32,
}

pub const DEFAULT_WINDOW_DAYS: u32 = 62;

impl ExpertiseWindow {
    pub fn ending_at(reference_time: i64) -> Self {
        ExpertiseWindow {
            reference_time,
            duration_days: DEFAULT_WINDOW_DAYS,
        }
    }

    pub fn contains(&self, timestamp: i64) -> bool {
        let start = self.reference_time - self.duration_days as i64 * 86_400;
        timestamp > start && timestamp <= self.reference_time
    }
}

/// Revisions by one author inside the window, chronological order kept.
pub fn commits_in_window<'a>(
    revisions: &'a [RevisionRecord],
    window: &ExpertiseWindow,
    author: &str,
) -> Vec<&'a RevisionRecord> {
    revisions
        .iter()
        .filter(|r| r.author == author && window.contains(r.timestamp))
        .collect()
}

/// Per-(author, component) quality impact counts over one window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityImpactTally {
    pub author: String,
    pub component: String,
    pub increases: u32,
    pub decreases: u32,
    /// Windowed commits by this author touching this component; neutral
    /// commits count here but in neither direction.
    pub total_commits: u32,
}

/// Walk windowed commits and classify each touched component's global
/// mark movement. Requires a completed analysis store.
pub fn attribute_deltas(
    revisions: &[RevisionRecord],
    store: &Store,
    component_map: &ComponentMap,
    squale: &SqualeConfig,
    window: &ExpertiseWindow,
    profile: &LanguageProfile,
) -> Result<Vec<QualityImpactTally>> {
    let mut tallies: BTreeMap<(String, String), QualityImpactTally> = BTreeMap::new();

    for revision in revisions {
        if !window.contains(revision.timestamp) {
            continue;
        }
        let before = store.live_vectors_before(&revision.id, profile)?;
        let after = store.live_vectors(&revision.id, profile)?;

        // Components touched through at least one analyzable file; a
        // rename can touch the old and the new component.
        let mut touched: BTreeSet<String> = BTreeSet::new();
        for change in &revision.changed_files {
            let mut paths: Vec<&str> = vec![&change.path];
            if let ChangeKind::Renamed { from } = &change.kind {
                paths.push(from);
            }
            for path in paths {
                if before.contains_key(path) || after.contains_key(path) {
                    touched.insert(component_map.component_of(path));
                }
            }
        }
        if touched.is_empty() {
            continue;
        }

        let touched: Vec<String> = touched.into_iter().collect();
        let movements = par::map_ordered(&touched, |component| {
            let gm_before = component_mark(&before, component, component_map, squale);
            let gm_after = component_mark(&after, component, component_map, squale);
            classify(gm_before, gm_after)
        });

        for (component, movement) in touched.into_iter().zip(movements) {
            let tally = tallies
                .entry((component.clone(), revision.author.clone()))
                .or_insert_with(|| QualityImpactTally {
                    author: revision.author.clone(),
                    component,
                    increases: 0,
                    decreases: 0,
                    total_commits: 0,
                });
            tally.total_commits += 1;
            match movement {
                Movement::Increase => tally.increases += 1,
                Movement::Decrease => tally.decreases += 1,
                Movement::Neutral => {}
            }
        }
    }

    Ok(tallies.into_values().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Movement {
    Increase,
    Decrease,
    Neutral,
}

fn classify(before: Option<f64>, after: Option<f64>) -> Movement {
    match (before, after) {
        (Some(b), Some(a)) => {
            if a - b > GM_DELTA_EPSILON {
                Movement::Increase
            } else if b - a > GM_DELTA_EPSILON {
                Movement::Decrease
            } else {
                Movement::Neutral
            }
        }
        (None, Some(a)) => {
            if a >= GM_BIRTH_THRESHOLD {
                Movement::Increase
            } else {
                Movement::Decrease
            }
        }
        (Some(b), None) => {
            if b < GM_BIRTH_THRESHOLD {
                Movement::Increase
            } else {
                Movement::Decrease
            }
        }
        (None, None) => Movement::Neutral,
    }
}

/// Component global mark over the flat pool of all individual marks of
/// all its analyzable files; `None` when the component has none.
pub fn component_mark(
    vectors: &BTreeMap<String, crate::analyzer::MetricVector>,
    component: &str,
    component_map: &ComponentMap,
    squale: &SqualeConfig,
) -> Option<f64> {
    let mut pool = Vec::new();
    for (path, vector) in vectors {
        if component_map.component_of(path) != component {
            continue;
        }
        if let Ok(marks) = marks_for_vector(vector, squale) {
            pool.extend(marks.values());
        }
    }
    if pool.is_empty() {
        None
    } else {
        global_mark(&pool, squale).ok().map(|gm| gm.value)
    }
}

/// `score = qi * ln(1 + total_commits)`; an author who never decreased
/// quality falls back to pure (smoothed) commit volume via `qi = 1`.
pub fn expertise_score(tally: &QualityImpactTally) -> f64 {
    let qi = if tally.decreases == 0 {
        1.0
    } else {
        (tally.increases as f64 / tally.decreases as f64).min(1.0)
    };
    qi * (1.0 + tally.total_commits as f64).ln()
}

/// Quality-impact ratio alone, for audit output.
pub fn quality_impact(tally: &QualityImpactTally) -> f64 {
    if tally.decreases == 0 {
        1.0
    } else {
        (tally.increases as f64 / tally.decreases as f64).min(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedExpert {
    pub author: String,
    pub score: f64,
    pub qi: f64,
    pub increases: u32,
    pub decreases: u32,
    pub total_commits: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertRanking {
    pub component: String,
    pub entries: Vec<RankedExpert>,
}

pub const DEFAULT_TOP_K: usize = 3;

/// Rank authors per component: score descending, ties broken by commit
/// volume descending then author name ascending; zero scores drop out and
/// the list truncates to `top_k`.
pub fn rank_experts(tallies: &[QualityImpactTally], top_k: usize) -> Vec<ExpertRanking> {
    let mut by_component: BTreeMap<String, Vec<&QualityImpactTally>> = BTreeMap::new();
    for tally in tallies {
        by_component
            .entry(tally.component.clone())
            .or_default()
            .push(tally);
    }

    by_component
        .into_iter()
        .map(|(component, mut tallies)| {
            tallies.sort_by(|a, b| {
                let score_a = expertise_score(a);
                let score_b = expertise_score(b);
                score_b
                    .partial_cmp(&score_a)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(b.total_commits.cmp(&a.total_commits))
                    .then(a.author.cmp(&b.author))
            });
            let entries = tallies
                .into_iter()
                .map(|t| RankedExpert {
                    author: t.author.clone(),
                    score: expertise_score(t),
                    qi: quality_impact(t),
                    increases: t.increases,
                    decreases: t.decreases,
                    total_commits: t.total_commits,
                })
                .filter(|e| e.score > 0.0)
                .take(top_k)
                .collect();
            ExpertRanking { component, entries }
        })
        .collect()
}
