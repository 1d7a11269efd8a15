//! Run directory management: the manifest and the report/CSV files.
//!
//! The manifest is a flat `key = value` echo of everything that influences
//! the computation; identical manifests reproduce byte-identical outputs.

use anyhow::{Context, Result};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub struct RunDir {
    dir: PathBuf,
    manifest: Vec<(String, String)>,
}

impl RunDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(RunDir {
            dir: dir.to_path_buf(),
            manifest: vec![
                ("tool".into(), "implifit".into()),
                ("version".into(), env!("CARGO_PKG_VERSION").into()),
            ],
        })
    }

    pub fn record(&mut self, key: &str, value: impl ToString) {
        self.manifest.push((key.into(), value.to_string()));
    }

    pub fn write_manifest(&self) -> Result<()> {
        let mut text = String::new();
        for (k, v) in &self.manifest {
            let _ = writeln!(text, "{k} = {v}");
        }
        self.write("manifest.txt", &text)
    }

    pub fn write(&self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
