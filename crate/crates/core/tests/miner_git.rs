//! Miner behavior against real scripted repositories.

mod common;

use codemine_core::miner::{
    file_at_revision, list_revisions, AliasMap, AuthorAlias, AuthorIdentity, ChangeKind,
    RepositoryRef, RevisionRecord,
};
use codemine_core::Error;
use common::GitFixture;

const T0: i64 = 1_700_000_000;

#[test]
fn empty_repository_yields_empty_history() {
    let fixture = GitFixture::init();
    let revisions = list_revisions(&fixture.repo(), &AliasMap::empty()).unwrap();
    assert!(revisions.is_empty());
}

#[test]
fn alias_map_folds_author_spellings() {
    let fixture = GitFixture::init();
    fixture.write("a.c", "int a;\n");
    fixture.commit("Alice", "a@x", T0, "one");
    fixture.write("b.c", "int b;\n");
    fixture.commit("Alice", "a@x", T0 + 10, "two");
    fixture.write("c.c", "int c;\n");
    fixture.commit("Alice", "a@x", T0 + 20, "three");
    fixture.write("d.c", "int d;\n");
    fixture.commit("alice", "A@X", T0 + 30, "four");

    let aliases = AliasMap::from_identities(&[AuthorIdentity {
        canonical: "Alice".into(),
        aliases: vec![AuthorAlias {
            name: "alice".into(),
            email: "A@X".into(),
        }],
    }])
    .unwrap();

    let revisions = list_revisions(&fixture.repo(), &aliases).unwrap();
    assert_eq!(revisions.len(), 4);
    assert!(revisions.iter().all(|r| r.author == "Alice"));
    // Oldest first, first commit has no parent, later ones chain.
    assert!(revisions[0].parent_id.is_none());
    assert_eq!(
        revisions[1].parent_id.as_deref(),
        Some(revisions[0].id.as_str())
    );
    // Root commit files all appear as added.
    assert_eq!(revisions[0].changed_files.len(), 1);
    assert_eq!(revisions[0].changed_files[0].kind, ChangeKind::Added);
}

#[test]
fn merge_commits_appear_once_with_first_parent_diff() {
    let fixture = GitFixture::init();
    fixture.write("main.c", "int main;\n");
    fixture.commit("Ann", "ann@x", T0, "root");
    fixture.git(&["checkout", "-q", "-b", "feature"]);
    fixture.write("feature.c", "int feature;\n");
    fixture.commit("Bob", "bob@x", T0 + 10, "feature work");
    fixture.git(&["checkout", "-q", "master"]);
    fixture.write("main.c", "int main2;\n");
    fixture.commit("Ann", "ann@x", T0 + 20, "mainline work");
    fixture.git_as(
        &["merge", "-q", "--no-ff", "-m", "merge feature", "feature"],
        "Meg",
        "meg@x",
        T0 + 30,
    );

    let revisions = list_revisions(&fixture.repo(), &AliasMap::empty()).unwrap();
    // First-parent history: root, mainline work, merge. The feature
    // commit itself is not on the first-parent chain.
    assert_eq!(revisions.len(), 3);
    let merge = &revisions[2];
    assert_eq!(merge.author, "Meg");
    // Diff against the first parent: only the branch's file arrives.
    assert_eq!(merge.changed_files.len(), 1);
    assert_eq!(merge.changed_files[0].path, "feature.c");
    assert_eq!(merge.changed_files[0].kind, ChangeKind::Added);
}

#[test]
fn renames_are_tracked_with_origin() {
    let fixture = GitFixture::init();
    fixture.write(
        "old/name.c",
        "int f() { return 42; }\nint g() { return 43; }\n",
    );
    fixture.commit("Ann", "ann@x", T0, "add");
    fixture.git(&["mv", "old/name.c", "new_name.c"]);
    fixture.commit("Ann", "ann@x", T0 + 10, "rename");

    let revisions = list_revisions(&fixture.repo(), &AliasMap::empty()).unwrap();
    assert_eq!(revisions[1].changed_files.len(), 1);
    assert_eq!(revisions[1].changed_files[0].path, "new_name.c");
    assert_eq!(
        revisions[1].changed_files[0].kind,
        ChangeKind::Renamed {
            from: "old/name.c".into()
        }
    );
}

#[test]
fn changed_files_match_manual_diff_tree() {
    let fixture = GitFixture::init();
    fixture.write("keep.c", "int keep;\n");
    fixture.write("gone.c", "int gone;\n");
    fixture.commit("Ann", "ann@x", T0, "base");
    fixture.write("keep.c", "int keep2;\n");
    fixture.write("fresh.c", "int fresh;\n");
    std::fs::remove_file(fixture.path().join("gone.c")).unwrap();
    let head = fixture.commit("Ann", "ann@x", T0 + 10, "churn");

    let revisions = list_revisions(&fixture.repo(), &AliasMap::empty()).unwrap();
    let mined: Vec<(String, String)> = revisions[1]
        .changed_files
        .iter()
        .map(|c| {
            let kind = match &c.kind {
                ChangeKind::Added => "A",
                ChangeKind::Modified => "M",
                ChangeKind::Deleted => "D",
                ChangeKind::Renamed { .. } => "R",
            };
            (kind.to_string(), c.path.clone())
        })
        .collect();

    let manual = fixture.git(&[
        "diff-tree",
        "--no-commit-id",
        "--name-status",
        "-r",
        "-M",
        &head,
    ]);
    let mut expected: Vec<(String, String)> = manual
        .lines()
        .map(|l| {
            let mut parts = l.split_whitespace();
            (
                parts.next().unwrap().to_string(),
                parts.next().unwrap().to_string(),
            )
        })
        .collect();
    expected.sort();
    let mut mined_sorted = mined;
    mined_sorted.sort();
    assert_eq!(mined_sorted, expected);
}

#[test]
fn mining_is_deterministic() {
    let fixture = GitFixture::init();
    fixture.write("a.c", "int a;\n");
    fixture.commit("Ann", "ann@x", T0, "one");
    fixture.write("b.c", "int b;\n");
    fixture.commit("Bob", "bob@x", T0 + 5, "two");

    let first = list_revisions(&fixture.repo(), &AliasMap::empty()).unwrap();
    let second = list_revisions(&fixture.repo(), &AliasMap::empty()).unwrap();
    assert_eq!(first, second);
}

#[test]
fn branch_falls_back_from_master_to_main() {
    let fixture = GitFixture::init();
    fixture.write("a.c", "int a;\n");
    fixture.commit("Ann", "ann@x", T0, "one");
    fixture.git(&["branch", "-m", "master", "main"]);

    let revisions = list_revisions(&fixture.repo(), &AliasMap::empty()).unwrap();
    assert_eq!(revisions.len(), 1);

    // An explicitly configured missing branch is an error, not a fallback.
    let repo = RepositoryRef {
        branch: Some("release".into()),
        ..fixture.repo()
    };
    assert!(matches!(
        list_revisions(&repo, &AliasMap::empty()),
        Err(Error::BranchNotFound { .. })
    ));
}

#[test]
fn file_content_round_trips_and_absences_are_none() {
    let fixture = GitFixture::init();
    fixture.write("lib.c", "int lib() { return 7; }\n");
    let first = fixture.commit("Ann", "ann@x", T0, "add lib");
    fixture.write("late.c", "int late;\n");
    let second = fixture.commit("Ann", "ann@x", T0 + 10, "add late");
    std::fs::remove_file(fixture.path().join("lib.c")).unwrap();
    let third = fixture.commit("Ann", "ann@x", T0 + 20, "drop lib");

    let repo = fixture.repo();
    // Exact content at the revision that has it.
    assert_eq!(
        file_at_revision(&repo, &first, "lib.c").unwrap().as_deref(),
        Some("int lib() { return 7; }\n")
    );
    // Not yet present.
    assert_eq!(file_at_revision(&repo, &first, "late.c").unwrap(), None);
    // Deleted at this revision.
    assert_eq!(file_at_revision(&repo, &third, "lib.c").unwrap(), None);
    // Still present at the middle revision.
    assert!(file_at_revision(&repo, &second, "lib.c").unwrap().is_some());
}

#[test]
fn alias_resolution_is_idempotent_over_history() {
    let fixture = GitFixture::init();
    fixture.write("a.c", "int a;\n");
    fixture.commit("bobby", "B@Y", T0, "one");
    fixture.write("b.c", "int b;\n");
    fixture.commit("Roberta", "b@y", T0 + 10, "two");

    let aliases = AliasMap::from_identities(&[AuthorIdentity {
        canonical: "Roberta".into(),
        aliases: vec![AuthorAlias {
            name: "bobby".into(),
            email: "b@y".into(),
        }],
    }])
    .unwrap();

    let once = list_revisions(&fixture.repo(), &aliases).unwrap();
    let twice: Vec<RevisionRecord> = once
        .iter()
        .cloned()
        .map(|mut r| {
            r.author = aliases.canonicalize(&r.author, "b@y");
            r
        })
        .collect();
    assert_eq!(once, twice);
    assert!(once.iter().all(|r| r.author == "Roberta"));
}
