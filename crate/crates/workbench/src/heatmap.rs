//! Min-loss tables (rows = model, columns = R_OFF) as CSV and SVG.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use memristor_eqprop::device::DeviceKind;
use tempfile::NamedTempFile;

use crate::config::Scheme;
use crate::sweep::SweepResult;
use crate::WorkbenchError;

#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub title: String,
    pub models: Vec<DeviceKind>,
    /// Column order, largest first.
    pub r_offs: Vec<f64>,
    /// `values[row][col]`; `NaN` marks a missing cell.
    pub values: Vec<Vec<f64>>,
}

impl Heatmap {
    /// Collects the cells of one hidden size and modulation scheme.
    pub fn from_result(result: &SweepResult, hidden: usize, modulation: Scheme) -> Result<Self, WorkbenchError> {
        let cells: Vec<_> = result
            .cells
            .iter()
            .filter(|c| c.cell.hidden == hidden && c.cell.modulation == modulation)
            .collect();
        if cells.is_empty() {
            return Err(WorkbenchError::EmptyResult);
        }
        let mut models: Vec<DeviceKind> = cells.iter().map(|c| c.cell.model).collect();
        models.sort();
        models.dedup();
        let mut r_offs: Vec<f64> = cells.iter().map(|c| c.cell.r_off).collect();
        r_offs.sort_by(|a, b| b.total_cmp(a));
        r_offs.dedup();
        let values = models
            .iter()
            .map(|m| {
                r_offs
                    .iter()
                    .map(|r| result.get(*m, *r, hidden, modulation).map_or(f64::NAN, |c| c.min_loss))
                    .collect()
            })
            .collect();
        let title = format!("{} {} hidden={hidden}", result.dataset, modulation);
        Ok(Heatmap { title, models, r_offs, values })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("model");
        for r in &self.r_offs {
            write!(out, ",{r:.0}").unwrap();
        }
        out.push('\n');
        for (m, row) in self.models.iter().zip(&self.values) {
            out.push_str(m.name());
            for v in row {
                write!(out, ",{v:.3}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn to_svg(&self) -> String {
        const CELL_W: usize = 90;
        const CELL_H: usize = 32;
        const LEFT: usize = 140;
        const TOP: usize = 60;
        let finite = self.values.iter().flatten().copied().filter(|v| v.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let width = LEFT + CELL_W * self.r_offs.len() + 20;
        let height = TOP + CELL_H * self.models.len() + 20;
        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="13">"#
        )
        .unwrap();
        writeln!(s, r#"<text x="{LEFT}" y="20" font-weight="bold">{}</text>"#, self.title).unwrap();
        for (j, r) in self.r_offs.iter().enumerate() {
            let x = LEFT + j * CELL_W + CELL_W / 2;
            writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{r:.0} ohm</text>"#, TOP - 8).unwrap();
        }
        for (i, (m, row)) in self.models.iter().zip(&self.values).enumerate() {
            let y = TOP + i * CELL_H;
            writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{m}</text>"#, LEFT - 8, y + CELL_H / 2 + 4).unwrap();
            for (j, v) in row.iter().enumerate() {
                let x = LEFT + j * CELL_W;
                let fill = if v.is_finite() { color(*v, lo, hi) } else { "#cccccc".to_string() };
                writeln!(s, r#"<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{fill}" stroke="white"/>"#).unwrap();
                writeln!(
                    s,
                    r#"<text x="{}" y="{}" text-anchor="middle">{v:.3}</text>"#,
                    x + CELL_W / 2,
                    y + CELL_H / 2 + 4
                )
                .unwrap();
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Green for the lowest loss through yellow to red for the highest.
fn color(v: f64, lo: f64, hi: f64) -> String {
    let t = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 };
    format!("hsl({:.0},70%,55%)", 120.0 * (1.0 - t))
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), WorkbenchError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).map_err(|e| WorkbenchError::Io(e.error))?;
    Ok(())
}

/// Writes the table of one hidden size and modulation scheme to `path` and
/// its rendering next to it with an `.svg` extension. Nothing is written if
/// the selection is empty.
pub fn emit_heatmap(result: &SweepResult, hidden: usize, modulation: Scheme, path: impl AsRef<Path>) -> Result<Heatmap, WorkbenchError> {
    let map = Heatmap::from_result(result, hidden, modulation)?;
    let path = path.as_ref();
    write_atomic(path, &map.to_csv())?;
    write_atomic(&path.with_extension("svg"), &map.to_svg())?;
    Ok(map)
}
