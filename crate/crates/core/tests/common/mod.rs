//! Scripted Git repositories for integration tests. Commits are pinned to
//! explicit authors and timestamps so mined histories are reproducible.

use std::path::Path;
use std::process::Command;

use codemine_core::miner::RepositoryRef;
use tempfile::TempDir;

pub struct GitFixture {
    pub dir: TempDir,
}

impl GitFixture {
    pub fn init() -> GitFixture {
        let dir = TempDir::new().expect("create fixture dir");
        let fixture = GitFixture { dir };
        fixture.git(&["init", "-q", "-b", "master"]);
        fixture
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn repo(&self) -> RepositoryRef {
        RepositoryRef {
            path: self.path().to_path_buf(),
            branch: None,
            name: "fixture".into(),
        }
    }

    pub fn git(&self, args: &[&str]) -> String {
        self.git_as(args, "Test", "test@example.com", 1_700_000_000)
    }

    pub fn git_as(&self, args: &[&str], name: &str, email: &str, timestamp: i64) -> String {
        let output = Command::new("git")
            .arg("-C")
            .arg(self.path())
            .args(args)
            .env("GIT_CONFIG_GLOBAL", "/dev/null")
            .env("GIT_CONFIG_NOSYSTEM", "1")
            .env("GIT_AUTHOR_NAME", name)
            .env("GIT_AUTHOR_EMAIL", email)
            .env("GIT_AUTHOR_DATE", format!("@{timestamp} +0000"))
            .env("GIT_COMMITTER_NAME", name)
            .env("GIT_COMMITTER_EMAIL", email)
            .env("GIT_COMMITTER_DATE", format!("@{timestamp} +0000"))
            .output()
            .expect("spawn git");
        assert!(
            output.status.success(),
            "git {args:?} failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        String::from_utf8_lossy(&output.stdout).trim().to_string()
    }

    pub fn write(&self, path: &str, content: &str) {
        let full = self.path().join(path);
        if let Some(parent) = full.parent() {
            std::fs::create_dir_all(parent).expect("create parent dirs");
        }
        std::fs::write(full, content).expect("write fixture file");
    }

    /// Stage everything and commit as the given author at the given time;
    /// returns the commit hash.
    pub fn commit(&self, name: &str, email: &str, timestamp: i64, message: &str) -> String {
        self.git_as(&["add", "-A"], name, email, timestamp);
        self.git_as(
            &["commit", "-q", "--allow-empty", "-m", message],
            name,
            email,
            timestamp,
        );
        self.git_as(&["rev-parse", "HEAD"], name, email, timestamp)
    }
}
