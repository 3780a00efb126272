//! Git history extraction over subprocess plumbing.
//!
//! One branch is mined per run, oldest first, along first-parent order so
//! merge commits appear once and diff against the mainline. The exact
//! invocations (`rev-list --first-parent --reverse`,
//! `log --format=%H%x00%an%x00%ae%x00%at%x00%P`,
//! `diff-tree --no-commit-id --name-status -r -M`, `show <rev>:<path>`)
//! are part of the contract; anything speaking the same protocol can
//! substitute for the real tool in tests.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::Command;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A local clone plus the branch to mine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepositoryRef {
    pub path: PathBuf,
    /// Branch to mine; `None` means "master", falling back to "main"
    /// when no "master" exists.
    #[serde(default)]
    pub branch: Option<String>,
    /// Display label for reports.
    #[serde(default)]
    pub name: String,
}

/// One developer with every (name, email) spelling seen in history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorIdentity {
    pub canonical: String,
    #[serde(default)]
    pub aliases: Vec<AuthorAlias>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorAlias {
    pub name: String,
    pub email: String,
}

/// Alias resolution: explicit (name, email) pairs map to canonical names;
/// canonical names are fixed points; everything else passes through with
/// the name trimmed (emails are matched lowercased).
#[derive(Debug, Clone, Default)]
pub struct AliasMap {
    by_alias: HashMap<(String, String), String>,
    canonical: std::collections::HashSet<String>,
}

impl AliasMap {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_identities(identities: &[AuthorIdentity]) -> Result<Self> {
        let mut map = AliasMap::default();
        for identity in identities {
            if identity.canonical.trim().is_empty() {
                return Err(Error::Config(
                    "alias map entry with empty canonical name".into(),
                ));
            }
            let canonical = identity.canonical.trim().to_string();
            map.canonical.insert(canonical.clone());
            for alias in &identity.aliases {
                let key = (alias.name.trim().to_string(), alias.email.to_lowercase());
                if let Some(previous) = map.by_alias.insert(key.clone(), canonical.clone()) {
                    if previous != canonical {
                        return Err(Error::Config(format!(
                            "alias ({}, {}) maps to both {previous:?} and {canonical:?}",
                            key.0, key.1
                        )));
                    }
                }
            }
        }
        Ok(map)
    }

    /// Load from a JSON array of `{"canonical": ..., "aliases": [...]}`.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read alias map {}: {e}", path.display())))?;
        let identities: Vec<AuthorIdentity> = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("malformed alias map {}: {e}", path.display())))?;
        Self::from_identities(&identities)
    }

    pub fn canonicalize(&self, name: &str, email: &str) -> String {
        let name = name.trim();
        // Canonical names are fixed points, which keeps resolution
        // idempotent even if an alias entry shadows one.
        if self.canonical.contains(name) {
            return name.to_string();
        }
        let key = (name.to_string(), email.to_lowercase());
        if let Some(canonical) = self.by_alias.get(&key) {
            return canonical.clone();
        }
        name.to_string()
    }
}

/// What happened to one path in one commit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChangeKind {
    Added,
    Modified,
    Deleted,
    Renamed { from: String },
}

impl ChangeKind {
    fn as_string(&self) -> String {
        match self {
            ChangeKind::Added => "added".into(),
            ChangeKind::Modified => "modified".into(),
            ChangeKind::Deleted => "deleted".into(),
            ChangeKind::Renamed { from } => format!("renamed-from:{from}"),
        }
    }

    fn parse(s: &str) -> Result<ChangeKind> {
        match s {
            "added" => Ok(ChangeKind::Added),
            "modified" => Ok(ChangeKind::Modified),
            "deleted" => Ok(ChangeKind::Deleted),
            other => match other.strip_prefix("renamed-from:") {
                Some(from) => Ok(ChangeKind::Renamed { from: from.into() }),
                None => Err(Error::Config(format!("unknown change kind {other:?}"))),
            },
        }
    }
}

impl Serialize for ChangeKind {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.as_string())
    }
}

impl<'de> Deserialize<'de> for ChangeKind {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        ChangeKind::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    pub kind: ChangeKind,
}

/// One commit on the mined branch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionRecord {
    pub id: String,
    /// Canonical author name after alias resolution.
    pub author: String,
    /// Unix seconds, UTC.
    pub timestamp: i64,
    /// First parent; absent for root commits.
    pub parent_id: Option<String>,
    pub changed_files: Vec<FileChange>,
}

fn git_output(repo: &std::path::Path, args: &[&str]) -> Result<Vec<u8>> {
    let output = Command::new("git")
        .arg("-C")
        .arg(repo)
        .args(args)
        .env("LC_ALL", "C")
        .output()
        .map_err(|e| Error::VcsToolFailure {
            command: format!("git {}", args.join(" ")),
            status: -1,
            stderr: e.to_string(),
        })?;
    if !output.status.success() {
        return Err(Error::VcsToolFailure {
            command: format!("git {}", args.join(" ")),
            status: output.status.code().unwrap_or(-1),
            stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        });
    }
    Ok(output.stdout)
}

fn git_text(repo: &std::path::Path, args: &[&str]) -> Result<String> {
    Ok(String::from_utf8_lossy(&git_output(repo, args)?).into_owned())
}

fn ensure_repository(repo: &RepositoryRef) -> Result<()> {
    if !repo.path.exists() {
        return Err(Error::RepositoryNotFound {
            path: repo.path.clone(),
            reason: "path does not exist".into(),
        });
    }
    git_output(&repo.path, &["rev-parse", "--git-dir"]).map_err(|e| Error::RepositoryNotFound {
        path: repo.path.clone(),
        reason: e.to_string(),
    })?;
    Ok(())
}

fn branch_exists(repo: &RepositoryRef, branch: &str) -> bool {
    git_output(
        &repo.path,
        &[
            "rev-parse",
            "--verify",
            "--quiet",
            &format!("refs/heads/{branch}"),
        ],
    )
    .is_ok()
}

fn repository_is_empty(repo: &RepositoryRef) -> bool {
    git_output(&repo.path, &["rev-parse", "--verify", "--quiet", "HEAD"]).is_err()
}

/// Resolve the branch to mine. `Ok(None)` means the repository has no
/// commits at all (an empty history, not an error).
pub fn resolve_branch(repo: &RepositoryRef) -> Result<Option<String>> {
    ensure_repository(repo)?;
    match &repo.branch {
        Some(branch) => {
            if branch_exists(repo, branch) {
                Ok(Some(branch.clone()))
            } else if repository_is_empty(repo) {
                Ok(None)
            } else {
                Err(Error::BranchNotFound {
                    branch: branch.clone(),
                })
            }
        }
        None => {
            for candidate in ["master", "main"] {
                if branch_exists(repo, candidate) {
                    return Ok(Some(candidate.to_string()));
                }
            }
            if repository_is_empty(repo) {
                Ok(None)
            } else {
                Err(Error::BranchNotFound {
                    branch: "master (or fallback main)".into(),
                })
            }
        }
    }
}

/// First-parent history of the configured branch, oldest first, authors
/// rewritten through the alias map. Timestamps going backwards along the
/// chain are recorded with a warning, never rejected.
pub fn list_revisions(repo: &RepositoryRef, aliases: &AliasMap) -> Result<Vec<RevisionRecord>> {
    let Some(branch) = resolve_branch(repo)? else {
        return Ok(Vec::new());
    };

    let order = git_text(
        &repo.path,
        &["rev-list", "--first-parent", "--reverse", &branch],
    )?;
    let ids: Vec<&str> = order.lines().filter(|l| !l.is_empty()).collect();

    let meta_raw = git_text(
        &repo.path,
        &["log", "--format=%H%x00%an%x00%ae%x00%at%x00%P", &branch],
    )?;
    let mut meta: HashMap<&str, (&str, &str, i64, Option<&str>)> = HashMap::new();
    for line in meta_raw.lines() {
        let fields: Vec<&str> = line.split('\0').collect();
        if fields.len() != 5 {
            continue;
        }
        let timestamp = fields[3]
            .parse::<i64>()
            .map_err(|_| Error::VcsToolFailure {
                command: "git log".into(),
                status: 0,
                stderr: format!("unparseable author timestamp {:?}", fields[3]),
            })?;
        let first_parent = fields[4].split_whitespace().next();
        meta.insert(fields[0], (fields[1], fields[2], timestamp, first_parent));
    }

    let mut revisions = Vec::with_capacity(ids.len());
    let mut previous_timestamp = i64::MIN;
    for id in ids {
        let &(name, email, timestamp, parent) =
            meta.get(id).ok_or_else(|| Error::VcsToolFailure {
                command: "git log".into(),
                status: 0,
                stderr: format!("rev-list commit {id} missing from log output"),
            })?;
        if timestamp < previous_timestamp {
            eprintln!(
                "warning: commit {id} timestamp {timestamp} precedes its first parent ({previous_timestamp}); clock skew recorded"
            );
        }
        previous_timestamp = timestamp;

        let changed_files = diff_first_parent(repo, id, parent)?;
        revisions.push(RevisionRecord {
            id: id.to_string(),
            author: aliases.canonicalize(name, email),
            timestamp,
            parent_id: parent.map(str::to_string),
            changed_files,
        });
    }
    Ok(revisions)
}

fn validate_path(id: &str, path: &str) -> Result<String> {
    if path
        .split('/')
        .any(|seg| seg == "." || seg == ".." || seg.is_empty())
    {
        return Err(Error::VcsToolFailure {
            command: "git diff-tree".into(),
            status: 0,
            stderr: format!("commit {id} produced a non-normalized path {path:?}"),
        });
    }
    Ok(path.to_string())
}

/// Name-status diff of a commit against its first parent (`--root` for
/// root commits, so every file shows as added). Rename detection runs at
/// the diff tool's default similarity.
fn diff_first_parent(
    repo: &RepositoryRef,
    id: &str,
    parent: Option<&str>,
) -> Result<Vec<FileChange>> {
    let raw = match parent {
        Some(parent) => git_output(
            &repo.path,
            &[
                "diff-tree",
                "--no-commit-id",
                "--name-status",
                "-r",
                "-M",
                "-z",
                parent,
                id,
            ],
        )?,
        None => git_output(
            &repo.path,
            &[
                "diff-tree",
                "--no-commit-id",
                "--name-status",
                "-r",
                "-M",
                "-z",
                "--root",
                id,
            ],
        )?,
    };
    let raw = String::from_utf8_lossy(&raw);
    let mut fields = raw.split('\0').filter(|f| !f.is_empty());

    let mut changes = Vec::new();
    while let Some(status) = fields.next() {
        // The --root form prefixes output with the commit id once.
        if status.len() == 40 && status.chars().all(|c| c.is_ascii_hexdigit()) {
            continue;
        }
        let code = status.chars().next().unwrap_or('X');
        match code {
            'R' | 'C' => {
                let old = fields.next().ok_or_else(|| Error::VcsToolFailure {
                    command: "git diff-tree".into(),
                    status: 0,
                    stderr: format!("truncated rename entry in commit {id}"),
                })?;
                let new = fields.next().ok_or_else(|| Error::VcsToolFailure {
                    command: "git diff-tree".into(),
                    status: 0,
                    stderr: format!("truncated rename entry in commit {id}"),
                })?;
                let kind = if code == 'R' {
                    ChangeKind::Renamed {
                        from: validate_path(id, old)?,
                    }
                } else {
                    ChangeKind::Added
                };
                changes.push(FileChange {
                    path: validate_path(id, new)?,
                    kind,
                });
            }
            _ => {
                let path = fields.next().ok_or_else(|| Error::VcsToolFailure {
                    command: "git diff-tree".into(),
                    status: 0,
                    stderr: format!("truncated diff entry in commit {id}"),
                })?;
                let kind = match code {
                    'A' => ChangeKind::Added,
                    'D' => ChangeKind::Deleted,
                    // Typechange, unmerged and unknown all land on the
                    // conservative side: content changed.
                    _ => ChangeKind::Modified,
                };
                changes.push(FileChange {
                    path: validate_path(id, path)?,
                    kind,
                });
            }
        }
    }
    Ok(changes)
}

/// A file's content at a revision, or `None` when the path does not exist
/// there. Invalid UTF-8 is replaced, not rejected.
pub fn file_at_revision(
    repo: &RepositoryRef,
    revision_id: &str,
    path: &str,
) -> Result<Option<String>> {
    let spec = format!("{revision_id}:{path}");
    match git_output(&repo.path, &["show", &spec]) {
        Ok(bytes) => Ok(Some(String::from_utf8_lossy(&bytes).into_owned())),
        Err(Error::VcsToolFailure {
            stderr,
            status,
            command,
        }) => {
            if stderr.contains("does not exist in") || stderr.contains("exists on disk, but not in")
            {
                Ok(None)
            } else {
                Err(Error::VcsToolFailure {
                    stderr,
                    status,
                    command,
                })
            }
        }
        Err(other) => Err(other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn change_kind_round_trips_through_its_string_form() {
        for kind in [
            ChangeKind::Added,
            ChangeKind::Modified,
            ChangeKind::Deleted,
            ChangeKind::Renamed {
                from: "old/p.c".into(),
            },
        ] {
            let s = serde_json::to_string(&kind).unwrap();
            let back: ChangeKind = serde_json::from_str(&s).unwrap();
            assert_eq!(back, kind);
        }
        assert_eq!(
            serde_json::to_string(&ChangeKind::Renamed {
                from: "a/b.c".into()
            })
            .unwrap(),
            "\"renamed-from:a/b.c\""
        );
    }

    #[test]
    fn alias_lookup_normalizes_email_case_and_name_whitespace() {
        let map = AliasMap::from_identities(&[AuthorIdentity {
            canonical: "Alice".into(),
            aliases: vec![AuthorAlias {
                name: "alice".into(),
                email: "A@X".into(),
            }],
        }])
        .unwrap();
        assert_eq!(map.canonicalize("alice", "a@x"), "Alice");
        assert_eq!(map.canonicalize(" alice ", "A@x"), "Alice");
        assert_eq!(map.canonicalize("Alice", "other@x"), "Alice");
        assert_eq!(map.canonicalize("  Bob <stray>  ", "b@x"), "Bob <stray>");
    }

    #[test]
    fn conflicting_alias_entries_are_rejected() {
        let err = AliasMap::from_identities(&[
            AuthorIdentity {
                canonical: "Alice".into(),
                aliases: vec![AuthorAlias {
                    name: "al".into(),
                    email: "a@x".into(),
                }],
            },
            AuthorIdentity {
                canonical: "Albert".into(),
                aliases: vec![AuthorAlias {
                    name: "al".into(),
                    email: "A@X".into(),
                }],
            },
        ])
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn empty_canonical_name_is_rejected() {
        assert!(AliasMap::from_identities(&[AuthorIdentity {
            canonical: "   ".into(),
            aliases: vec![],
        }])
        .is_err());
    }

    #[test]
    fn missing_repository_path() {
        let repo = RepositoryRef {
            path: PathBuf::from("/nonexistent/definitely/not/here"),
            branch: None,
            name: "x".into(),
        };
        assert!(matches!(
            list_revisions(&repo, &AliasMap::empty()),
            Err(Error::RepositoryNotFound { .. })
        ));
    }
}
