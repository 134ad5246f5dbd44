use crate::config::ExperimentConfig;
use crate::CliError;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Seventeen significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// In-memory CSV table with a fixed header.
#[derive(Clone, Debug)]
pub struct Csv {
    name: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Csv { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub tables: Vec<Csv>,
    pub checks: Vec<Check>,
    /// Free-form lines placed in the summary before the checks.
    pub notes: Vec<String>,
    /// Paths written so far, filled by [`Report::write`].
    pub files: Vec<PathBuf>,
}

impl Report {
    pub fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(Check { name: name.into(), pass, detail });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Writes every table plus `summary.txt` into `dir`, creating it if needed.
    pub fn write(&mut self, dir: &Path, config: &ExperimentConfig, extra: &[PathBuf]) -> Result<(), CliError> {
        create_dir(dir)?;
        self.files.extend_from_slice(extra);
        for t in &self.tables {
            let path = dir.join(t.name());
            write_file(&path, &t.to_text())?;
            self.files.push(path);
        }
        let path = dir.join("summary.txt");
        write_file(&path, &self.summary(config))?;
        self.files.push(path);
        Ok(())
    }

    pub fn summary(&self, config: &ExperimentConfig) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# config");
        s.push_str(&config.to_text());
        let _ = writeln!(s, "\n# files");
        for f in &self.files {
            let _ = writeln!(s, "{}", f.display());
        }
        if !self.notes.is_empty() {
            let _ = writeln!(s, "\n# results");
            for n in &self.notes {
                let _ = writeln!(s, "{n}");
            }
        }
        let _ = writeln!(s, "\n# checks");
        for c in &self.checks {
            let _ = writeln!(s, "{}: {} ({})", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
        }
        s
    }
}

pub(crate) fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|cause| CliError::Io { path: dir.to_path_buf(), cause })
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|cause| CliError::Io { path: path.to_path_buf(), cause })
}
