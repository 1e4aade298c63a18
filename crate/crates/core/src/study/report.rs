use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EocReport, StudyError};

pub const CSV_HEADER: &str = "level,h,dofs,bdofs,error,eoc,toc_s,toc_r,iters,seconds";

/// One parsed row of the CSV report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub level: usize,
    pub h: f64,
    pub dofs: usize,
    pub bdofs: usize,
    pub error: f64,
    pub eoc: Option<f64>,
    pub toc_s: f64,
    pub toc_r: u8,
    pub iters: usize,
    pub seconds: f64,
}

/// Paths of the files written by [`emit_report`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportPaths {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub plot: PathBuf,
}

pub fn report_csv(r: &EocReport) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for (k, l) in r.levels.iter().enumerate() {
        let eoc = if k == 0 {
            String::new()
        } else {
            format!("{:?}", r.eoc[k - 1])
        };
        let _ = writeln!(
            s,
            "{},{:?},{},{},{:?},{},{:?},{},{},{:?}",
            l.level, l.h, l.dofs, l.bdofs, l.error, eoc, r.rate.s, r.rate.r, l.iters, l.seconds
        );
    }
    s
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, StudyError> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(StudyError::Parse("missing CSV header".into()));
    }
    let bad = |l: &str| StudyError::Parse(format!("malformed CSV row '{l}'"));
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(bad(line));
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad(line));
            let int = |i: usize| f[i].parse::<usize>().map_err(|_| bad(line));
            Ok(CsvRow {
                level: int(0)?,
                h: num(1)?,
                dofs: int(2)?,
                bdofs: int(3)?,
                error: num(4)?,
                eoc: if f[5].is_empty() { None } else { Some(num(5)?) },
                toc_s: num(6)?,
                toc_r: f[7].parse().map_err(|_| bad(line))?,
                iters: int(8)?,
                seconds: num(9)?,
            })
        })
        .collect()
}

pub fn report_json(r: &EocReport) -> Result<String, StudyError> {
    Ok(serde_json::to_string_pretty(r)?)
}

/// Two columns `log10 h` and `log10 e`, one line per level.
pub fn plot_data(r: &EocReport) -> String {
    let mut s = String::from("# log10_h log10_error\n");
    for l in &r.levels {
        let _ = writeln!(s, "{:?} {:?}", l.h.log10(), l.error.log10());
    }
    s
}

/// Writes `contents` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), StudyError> {
    let io = |source| StudyError::Io {
        path: path.to_path_buf(),
        source,
    };
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(io)
}

/// Writes the CSV, JSON and plot-data files for a report into `dir`.
pub fn emit_report(r: &EocReport, dir: &Path) -> Result<ReportPaths, StudyError> {
    fs::create_dir_all(dir).map_err(|source| StudyError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let stem = r.config.label();
    let paths = ReportPaths {
        csv: dir.join(format!("{stem}.csv")),
        json: dir.join(format!("{stem}.json")),
        plot: dir.join(format!("{stem}.dat")),
    };
    write_atomic(&paths.csv, &report_csv(r))?;
    write_atomic(&paths.json, &report_json(r)?)?;
    write_atomic(&paths.plot, &plot_data(r))?;
    Ok(paths)
}
