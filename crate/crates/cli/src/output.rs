//! Output directory with config-echo headers on every file.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::Failure;

pub struct OutDir {
    root: PathBuf,
    command: &'static str,
    config: Value,
}

impl OutDir {
    /// Creates the directory and writes `config.toml`, which re-runs the
    /// command with `--config`.
    pub fn create(root: &Path, command: &'static str, config: &RunConfig) -> Result<Self, Failure> {
        std::fs::create_dir_all(root)?;
        let mut f = File::create(root.join("config.toml"))?;
        writeln!(f, "# lstf {command} {}", env!("CARGO_PKG_VERSION"))?;
        f.write_all(config.to_toml().as_bytes())?;
        let config = serde_json::to_value(config)?;
        Ok(OutDir { root: root.to_path_buf(), command, config })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn header(&self, w: &mut impl Write) -> Result<(), Failure> {
        writeln!(w, "# lstf {} {}", self.command, env!("CARGO_PKG_VERSION"))?;
        writeln!(w, "# config: {}", self.config)?;
        Ok(())
    }

    /// Text file prefixed by `#` header lines; `body` writes the rest.
    pub fn text<F>(&self, name: &str, body: F) -> Result<PathBuf, Failure>
    where
        F: FnOnce(&mut BufWriter<File>) -> lstf::Result<()>,
    {
        let path = self.path(name);
        let mut w = BufWriter::new(File::create(&path)?);
        self.header(&mut w)?;
        body(&mut w)?;
        w.flush()?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    /// Pretty JSON object `{ "command", "config", "result" }`.
    pub fn json<T: Serialize>(&self, name: &str, result: &T) -> Result<PathBuf, Failure> {
        let path = self.path(name);
        let doc = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "result": result,
        });
        let mut w = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut w, &doc)?;
        writeln!(w)?;
        w.flush()?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }
}
