//! Run directories, artifact writers and the manifest.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

pub struct RunDir {
    pub path: PathBuf,
    command: String,
    files: Vec<String>,
    started: Instant,
}

impl RunDir {
    /// First free `<base>/<command>-NNNN`. Creation is atomic, so concurrent
    /// invocations never share a directory and nothing is overwritten.
    pub fn create(base: &Path, command: &str) -> io::Result<RunDir> {
        fs::create_dir_all(base)?;
        for k in 0..100_000 {
            let path = base.join(format!("{command}-{k:04}"));
            match fs::create_dir(&path) {
                Ok(()) => {
                    return Ok(RunDir {
                        path,
                        command: command.to_string(),
                        files: Vec::new(),
                        started: Instant::now(),
                    })
                }
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(e),
            }
        }
        Err(io::Error::new(io::ErrorKind::Other, "no free run directory name"))
    }

    fn new_file(&mut self, name: &str) -> io::Result<fs::File> {
        self.files.push(name.to_string());
        fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(self.path.join(name))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        let mut f = self.new_file(name)?;
        serde_json::to_writer_pretty(&mut f, value)?;
        f.write_all(b"\n")
    }

    /// CSV with an optional leading `#` comment line.
    pub fn csv<I>(&mut self, name: &str, comment: Option<&str>, header: &[&str], rows: I) -> io::Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut f = self.new_file(name)?;
        if let Some(c) = comment {
            writeln!(f, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(f);
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()
    }

    /// Write `manifest.json` listing every file written so far.
    pub fn finish(mut self, config: &Value) -> io::Result<PathBuf> {
        let command = self.command.clone();
        let manifest = Manifest {
            command: &command,
            config,
            versions: Versions {
                critlab: env!("CARGO_PKG_VERSION"),
                arch: std::env::consts::ARCH,
            },
            wall_time_s: self.started.elapsed().as_secs_f64(),
            files: self.files.clone(),
        };
        let mut f = self.new_file("manifest.json")?;
        serde_json::to_writer_pretty(&mut f, &manifest)?;
        f.write_all(b"\n")?;
        Ok(self.path)
    }
}

#[derive(Serialize)]
struct Versions {
    critlab: &'static str,
    arch: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: &'a Value,
    versions: Versions,
    wall_time_s: f64,
    files: Vec<String>,
}

/// The `config` object and command name from a run directory's manifest.
pub fn read_manifest(run: &Path) -> io::Result<(String, Value)> {
    let text = fs::read_to_string(run.join("manifest.json"))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    let cmd = v["command"].as_str().unwrap_or_default().to_string();
    Ok((cmd, v["config"].clone()))
}

/// Rows of a CSV written by [`RunDir::csv`], comment line skipped.
pub fn read_csv(path: &Path) -> io::Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path)?;
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

/// Every k-th index so that about `max` survive; the last row is always kept.
pub fn downsample(len: usize, max: usize) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    let stride = len.div_ceil(max.max(1));
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if *idx.last().expect("non-empty") != len - 1 {
        idx.push(len - 1);
    }
    idx
}
