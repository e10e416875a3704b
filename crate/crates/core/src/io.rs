//! CSV panel files.

use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::panel::Panel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    SectionsAsRows,
    SectionsAsColumns,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelFile {
    pub path: PathBuf,
    pub orientation: Orientation,
    /// First record holds labels.
    pub header: bool,
    pub delimiter: u8,
}

impl PanelFile {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into(), orientation: Orientation::default(), header: false, delimiter: b',' }
    }
}

/// Parses CSV text. Row and column numbers in errors are one-based positions in the file.
pub fn parse_panel(text: &str, orientation: Orientation, header: bool, delimiter: u8) -> Result<Panel> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut labels = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse { row: r + 1, col: 0, msg: e.to_string() })?;
        if header && r == 0 {
            labels = Some(rec.iter().map(str::to_string).collect::<Vec<_>>());
            continue;
        }
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(Error::Parse {
                row: r + 1,
                col: rec.len().min(expected) + 1,
                msg: format!("ragged row: {} fields, expected {expected}", rec.len()),
            });
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    row: r + 1,
                    col: c + 1,
                    msg: format!("not a finite number: {field:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let (nr, nc) = (rows.len(), width.unwrap_or(0));
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let grid = Array2::from_shape_vec((nr, nc), flat).map_err(|e| Error::InvalidPanel(e.to_string()))?;
    let data = match orientation {
        Orientation::SectionsAsRows => grid,
        Orientation::SectionsAsColumns => grid.reversed_axes().as_standard_layout().to_owned(),
    };
    let panel = Panel::new(data)?;
    match (labels, orientation) {
        (Some(l), Orientation::SectionsAsColumns) if l.len() == panel.n() => panel.with_section_labels(l),
        (Some(l), Orientation::SectionsAsRows) if l.len() == panel.t() => panel.with_time_labels(l),
        (Some(l), _) => Err(Error::Parse { row: 1, col: 0, msg: format!("header has {} labels", l.len()) }),
        (None, _) => Ok(panel),
    }
}

pub fn read_panel(file: &PanelFile) -> Result<Panel> {
    let text = std::fs::read_to_string(&file.path)?;
    parse_panel(&text, file.orientation, file.header, file.delimiter)
}

/// Sections as rows, shortest round-trip decimal representation.
pub fn panel_to_csv(panel: &Panel, delimiter: u8) -> String {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
    for row in panel.data().rows() {
        w.write_record(row.iter().map(|v| format!("{v:?}"))).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

pub fn write_panel(panel: &Panel, path: &Path) -> Result<()> {
    std::fs::write(path, panel_to_csv(panel, b','))?;
    Ok(())
}
