//! Artifact writing: CSV tables and grids, the JSON sidecar and the
//! plain-text summary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chordlab::phase_space::{ChordGrid, WignerGrid};
use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Collects artifacts under one output directory.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn open(&mut self, name: &str) -> std::io::Result<BufWriter<File>> {
        self.files.push(name.to_string());
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        writeln!(w, "# schema_version={SCHEMA_VERSION}")?;
        Ok(w)
    }

    /// A table with `#` metadata lines, a header and numeric rows.
    pub fn table(&mut self, name: &str, meta: &[(&str, String)], header: &[&str], rows: &[Vec<f64>]) -> std::io::Result<()> {
        let mut w = self.open(name)?;
        for (k, v) in meta {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()
    }

    pub fn real_grid(&mut self, name: &str, kind: &str, g: &WignerGrid) -> Result<(), chordlab::Error> {
        let mut w = self.open(name)?;
        chordlab::io::write_real_csv(&mut w, kind, g)?;
        w.flush()?;
        Ok(())
    }

    pub fn complex_grid(&mut self, name: &str, kind: &str, g: &ChordGrid) -> Result<(), chordlab::Error> {
        let mut w = self.open(name)?;
        chordlab::io::write_complex_csv(&mut w, kind, g)?;
        w.flush()?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> std::io::Result<()> {
        self.files.push(name.to_string());
        std::fs::write(self.dir.join(name), body)
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    schema_version: u32,
    experiment: &'a str,
    config: &'a ExperimentConfig,
    results: &'a Value,
    warnings: &'a [String],
    files: &'a [String],
}

pub fn write_sidecar(
    artifacts: &mut Artifacts,
    experiment: &str,
    config: &ExperimentConfig,
    results: &Value,
    warnings: &[String],
) -> std::io::Result<()> {
    let mut files = artifacts.files().to_vec();
    files.push("summary.json".into());
    let body = serde_json::to_string_pretty(&Sidecar {
        schema_version: SCHEMA_VERSION,
        experiment,
        config,
        results,
        warnings,
        files: &files,
    })
    .map_err(std::io::Error::other)?;
    artifacts.text("summary.json", &(body + "\n"))
}

/// Column documentation printed by `--schema`.
pub fn schema() -> String {
    let entries: &[(&str, &str, &str)] = &[
        ("wigner.csv, wigner_t*.csv", "p,q,value", "Wigner function on the centre grid; metadata kind, half-widths, points, hbar"),
        ("chord.csv, chord_t*.csv", "xi_p,xi_q,re,im", "chord function on the conjugate grid"),
        ("husimi_fourier.csv, husimi_lwc.csv, husimi_convolution.csv", "p,q,value", "Husimi function (unit total mass) through the chord domain, from correlations at delta = sqrt(hbar/2), or by convolution"),
        ("lwc_*.csv", "xi_q,re,im[,re_ref,im_ref]", "correlation C(xi_q, Q) for one window and time; optional reference route"),
        ("spectrum_*.csv", "p,s[,s_sc]", "momentum spectrum S(p') by DFT; optional semiclassical closed form"),
        ("peaks.csv", "t,window,q,position,height,variance,branch,predicted_variance", "fitted spectral peaks; branch = -1 when unmatched"),
        ("verdicts.csv", "t,window,q,pair,resolved", "resolution of adjacent branch pairs (1 resolved, 0 not)"),
        ("wigner_min.csv", "t,t_over_tp,w_min,w_max,ratio", "exact Wigner extremes around the positivity time"),
        ("errors.csv", "t,max_abs,max_rel", "route-against-oracle errors per time"),
        ("validate.csv", "case,error,tolerance,pass", "validation table; case indices are listed in summary.json"),
        ("summary.json", "-", "schema_version, experiment, config echo, results, warnings, files"),
        ("summary.txt", "-", "plain-text report with peak tables and verdicts"),
    ];
    let mut out = format!("schema_version {SCHEMA_VERSION}\nEvery CSV starts with `# schema_version=N` and `# key=value` metadata lines.\n\n");
    for (file, cols, what) in entries {
        out.push_str(&format!("{file}\n  columns: {cols}\n  {what}\n"));
    }
    out
}
