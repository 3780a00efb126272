//! Shared helpers for binary-level tests: scripted Git repositories with
//! pinned authors/timestamps, config scaffolding, and binary invocation.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

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

    pub fn remove(&self, path: &str) {
        std::fs::remove_file(self.path().join(path)).expect("remove fixture file");
    }

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

/// A workspace directory holding a config file pointing at a fixture
/// repository; the store lands next to the config.
pub struct Workspace {
    pub dir: TempDir,
    pub config_path: PathBuf,
}

impl Workspace {
    pub fn for_repo(repo: &Path) -> Workspace {
        Self::with_config(&format!(
            r#"{{"repository": {{"path": {:?}, "name": "fixture"}}}}"#,
            repo.display().to_string()
        ))
    }

    pub fn with_config(config_json: &str) -> Workspace {
        let dir = TempDir::new().expect("create workspace");
        let config_path = dir.path().join("run.json");
        std::fs::write(&config_path, config_json).expect("write config");
        Workspace { dir, config_path }
    }

    pub fn store_path(&self) -> PathBuf {
        self.dir.path().join("codemine-store")
    }

    pub fn run(&self, args: &[&str]) -> Output {
        run_codemine(&self.config_path, args)
    }

    /// Run and require success, returning stdout.
    pub fn run_ok(&self, args: &[&str]) -> String {
        let output = self.run(args);
        assert!(
            output.status.success(),
            "codemine {args:?} failed ({:?}):\n{}",
            output.status.code(),
            String::from_utf8_lossy(&output.stderr)
        );
        String::from_utf8_lossy(&output.stdout).into_owned()
    }
}

pub fn run_codemine(config: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_codemine"))
        .arg("--config")
        .arg(config)
        .args(args)
        .output()
        .expect("spawn codemine")
}

/// A c-family function with one branchless body: marks all land at 3.
pub fn clean_source(tag: &str) -> String {
    format!("int {tag}() {{ return 1; }}\n")
}

/// A c-family file with one function of cyclomatic complexity 25: its
/// complexity mark is 0 and drags the component's global mark down hard.
pub fn messy_source(tag: &str) -> String {
    messy_source_sized(tag, 24)
}

/// Like [`messy_source`] with a chosen branch count (cc = branches + 1);
/// 24 and up keeps cc and volume above their upper thresholds.
pub fn messy_source_sized(tag: &str, branches: u32) -> String {
    let mut body = format!("int {tag}(int n) {{\n");
    for i in 0..branches {
        body.push_str(&format!("  if (n == {i}) {{ n = n + {i}; }}\n"));
    }
    body.push_str("  return n;\n}\n");
    body
}
