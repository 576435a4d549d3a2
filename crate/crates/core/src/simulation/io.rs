//! Panel files.
//!
//! `<name>.csv` has the header `tenor_months:1,2,...` and one row per
//! observation. `<name>.json` holds the metadata, `<name>_states.csv` the
//! true states with header `chi,xi`.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Convention, FuturesPanel, SimulationConfig, SimulationError};
use crate::fmt_f64;
use crate::models::{months_to_years, CoordinateVector, ModelKind, ModelParams};

const HEADER_PREFIX: &str = "tenor_months:";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelMetadata {
    pub n_obs: usize,
    pub tenors_months: Vec<f64>,
    pub dt: f64,
    pub convention: Convention,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ModelParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<CoordinateVector>,
}

impl PanelMetadata {
    /// Everything needed to regenerate a simulated panel.
    pub fn from_config(cfg: &SimulationConfig) -> Self {
        PanelMetadata {
            n_obs: cfg.n_obs,
            tenors_months: cfg.tenors_months.clone(),
            dt: cfg.dt,
            convention: Convention::for_model(cfg.model),
            seed: Some(cfg.seed),
            model: Some(cfg.model),
            params: Some(cfg.params.clone()),
            coords: cfg.coords.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelFiles {
    pub panel: PathBuf,
    pub metadata: PathBuf,
    pub states: Option<PathBuf>,
}

impl PanelFiles {
    pub fn for_panel(csv: &Path) -> Self {
        let stem = csv
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        PanelFiles {
            panel: csv.to_path_buf(),
            metadata: csv.with_extension("json"),
            states: Some(csv.with_file_name(format!("{stem}_states.csv"))),
        }
    }
}

/// Tenors are stored in years; whole months print without the
/// `12·(m/12)` rounding noise.
fn fmt_months(m: f64) -> String {
    let r = m.round();
    if (m - r).abs() < 1e-9 {
        format!("{r}")
    } else {
        format!("{m}")
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_panel_csv(path: &Path, panel: &FuturesPanel) -> Result<(), SimulationError> {
    let months: Vec<String> = panel.tenors.iter().map(|t| fmt_months(t * 12.0)).collect();
    let mut text = format!("{HEADER_PREFIX}{}\n", months.join(","));
    text.push_str(&matrix_rows(&panel.observations));
    fs::write(path, text)?;
    Ok(())
}

pub fn write_states_csv(path: &Path, states: &DMatrix<f64>) -> Result<(), SimulationError> {
    let mut text = String::from("chi,xi\n");
    text.push_str(&matrix_rows(states));
    fs::write(path, text)?;
    Ok(())
}

/// Panel CSV, metadata JSON and, if the panel carries them, true states.
pub fn write_panel(
    csv: &Path,
    panel: &FuturesPanel,
    meta: &PanelMetadata,
) -> Result<PanelFiles, SimulationError> {
    let mut files = PanelFiles::for_panel(csv);
    write_panel_csv(&files.panel, panel)?;
    fs::write(&files.metadata, serde_json::to_string_pretty(meta)? + "\n")?;
    match &panel.true_states {
        Some(s) => write_states_csv(files.states.as_ref().expect("set by for_panel"), s)?,
        None => files.states = None,
    }
    Ok(files)
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> SimulationError {
    SimulationError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn parse_rows(
    path: &Path,
    lines: impl Iterator<Item = (usize, String)>,
    width: usize,
) -> Result<DMatrix<f64>, SimulationError> {
    let mut data = Vec::new();
    let mut n = 0;
    for (no, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut count = 0;
        for cell in line.split(',') {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| parse_err(path, no, format!("not a number: '{cell}'")))?;
            data.push(v);
            count += 1;
        }
        if count != width {
            return Err(parse_err(
                path,
                no,
                format!("expected {width} values, found {count}"),
            ));
        }
        n += 1;
    }
    Ok(DMatrix::from_row_slice(n, width, &data))
}

fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, String)> + '_ {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.to_string()))
}

/// Reads observations only; `dt` and the convention come from the caller.
pub fn read_panel_csv(
    path: &Path,
    dt: f64,
    convention: Convention,
) -> Result<FuturesPanel, SimulationError> {
    let text = fs::read_to_string(path)?;
    let mut lines = numbered_lines(&text);
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let rest = header
        .trim()
        .strip_prefix(HEADER_PREFIX)
        .ok_or_else(|| parse_err(path, 1, format!("header must start with '{HEADER_PREFIX}'")))?;
    let months = rest
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| parse_err(path, 1, "bad tenor in header"))?;
    let observations = parse_rows(path, lines, months.len())?;
    let panel = FuturesPanel {
        observations,
        tenors: months.iter().map(|&m| months_to_years(m)).collect(),
        dt,
        convention,
        true_states: None,
    };
    panel.validate()?;
    Ok(panel)
}

pub fn read_states_csv(path: &Path) -> Result<DMatrix<f64>, SimulationError> {
    let text = fs::read_to_string(path)?;
    let mut lines = numbered_lines(&text);
    match lines.next() {
        Some((_, h)) if h.trim() == "chi,xi" => parse_rows(path, lines, 2),
        _ => Err(parse_err(path, 1, "header must be 'chi,xi'")),
    }
}

/// Panel with its metadata; true states are attached when the companion
/// file exists.
pub fn read_panel(csv: &Path) -> Result<(FuturesPanel, PanelMetadata), SimulationError> {
    let files = PanelFiles::for_panel(csv);
    let meta: PanelMetadata = serde_json::from_str(&fs::read_to_string(&files.metadata)?)?;
    let mut panel = read_panel_csv(csv, meta.dt, meta.convention)?;
    if panel.n_obs() != meta.n_obs {
        return Err(SimulationError::InvalidConfig(format!(
            "metadata says {} rows, panel has {}",
            meta.n_obs,
            panel.n_obs()
        )));
    }
    if let Some(states) = files.states.filter(|p| p.exists()) {
        panel.true_states = Some(read_states_csv(&states)?);
        panel.validate()?;
    }
    Ok((panel, meta))
}

#[cfg(test)]
mod tests {
    use super::super::{reference_config, simulate_panel};
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut cfg = reference_config(ModelKind::Pd, 4, 9);
        cfg.n_obs = 30;
        let panel = simulate_panel(&cfg).unwrap();
        let meta = PanelMetadata::from_config(&cfg);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("panel.csv");
        let files = write_panel(&path, &panel, &meta).unwrap();
        assert!(files.states.as_ref().unwrap().ends_with("panel_states.csv"));
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("tenor_months:1,2,3,4\n"));
        let (back, meta_back) = read_panel(&path).unwrap();
        assert_eq!(back, panel);
        assert_eq!(meta_back, meta);
    }

    #[test]
    fn bad_rows_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        fs::write(&path, "tenor_months:1,2\n1.0,2.0\n3.0\n").unwrap();
        let err = read_panel_csv(&path, 0.1, Convention::RawPrice).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        fs::write(&path, "months:1,2\n1.0,2.0\n").unwrap();
        assert!(read_panel_csv(&path, 0.1, Convention::RawPrice).is_err());
    }
}
