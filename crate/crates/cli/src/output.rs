//! Output tables, CSV and plot-data writers, and the run manifest.
//!
//! Numbers are written with 17 significant digits, enough to round-trip any
//! `f64`, and data files carry no timestamps, so reruns are byte-identical.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::Num(x)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Self::Text(b.to_string())
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Self::Text(s.to_owned())
    }
}

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Self::Num(x) => format_number(*x),
            Self::Text(s) => s.clone(),
            Self::Empty => String::new(),
        }
    }
}

/// A CSV file in the making.
#[derive(Debug, Clone)]
pub struct Table {
    /// file stem inside the output directory
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Column whose value changes start a new block in the `.dat` companion,
    /// and the `(x, y)` columns a plot script should draw.
    pub curves: Option<Curves>,
}

#[derive(Debug, Clone, Copy)]
pub struct Curves {
    pub block: usize,
    pub x: usize,
    pub y: usize,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_owned(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            curves: None,
        }
    }

    pub fn with_curves(mut self, block: &str, x: &str, y: &str) -> Self {
        let col = |c: &str| self.column(c).expect("curve column exists");
        self.curves = Some(Curves {
            block: col(block),
            x: col(x),
            y: col(y),
        });
        self
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> anyhow::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_path(path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Whitespace-separated blocks, two blank lines apart, one per curve.
    pub fn write_dat(&self, path: &Path) -> anyhow::Result<()> {
        let Some(curves) = self.curves else {
            return Ok(());
        };
        let mut out = String::new();
        let mut current: Option<String> = None;
        for row in &self.rows {
            let key = row[curves.block].render();
            if current.as_ref() != Some(&key) {
                if current.is_some() {
                    out.push_str("\n\n");
                }
                out.push_str(&format!(
                    "# {} = {}\n# {}\n",
                    self.header[curves.block],
                    key,
                    self.header.join(" ")
                ));
                current = Some(key);
            }
            let cells: Vec<String> = row.iter().map(|c| c.render().replace(' ', "_")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
    }

    /// A gnuplot script drawing every block of the `.dat` companion.
    pub fn plot_script(&self, dat_name: &str) -> Option<String> {
        let c = self.curves?;
        Some(format!(
            "set datafile commentschars '#'\nset xlabel '{x}'\nset ylabel '{y}'\nset key outside\n\
             stats '{dat}' nooutput\n\
             plot for [i=0:STATS_blocks-1] '{dat}' index i using {xc}:{yc} with lines title sprintf('block %d', i)\n",
            x = self.header[c.x],
            y = self.header[c.y],
            dat = dat_name,
            xc = c.x + 1,
            yc = c.y + 1,
        ))
    }
}

/// Writes every table; failed runs get a `.partial` suffix on each data file.
pub fn write_tables(
    dir: &Path,
    tables: &[Table],
    partial: bool,
    plot: bool,
) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let suffix = if partial { ".partial" } else { "" };
    let mut written = Vec::new();
    for t in tables {
        let csv_path = dir.join(format!("{}.csv{suffix}", t.name));
        t.write_csv(&csv_path)?;
        written.push(csv_path);
        if t.curves.is_some() {
            let dat_name = format!("{}.dat{suffix}", t.name);
            let dat_path = dir.join(&dat_name);
            t.write_dat(&dat_path)?;
            written.push(dat_path);
            if plot {
                if let Some(script) = t.plot_script(&dat_name) {
                    let gp = dir.join(format!("{}.gp{suffix}", t.name));
                    fs::write(&gp, script)?;
                    written.push(gp);
                }
            }
        }
    }
    Ok(written)
}

/// Flat `key = value` manifest.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string().replace(['\n', '\r'], " ");
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn extend(&mut self, items: impl IntoIterator<Item = (String, String)>) {
        for (k, v) in items {
            self.set(k, v);
        }
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join("manifest.txt");
        let mut f =
            fs::File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        f.write_all(self.render().as_bytes())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [
            0.1,
            1.0 / 3.0,
            6.02214076e23,
            -2.5e-300,
            f64::MIN_POSITIVE,
            0.0,
        ] {
            let s = format_number(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            let mantissa = s
                .split('e')
                .next()
                .unwrap()
                .trim_start_matches('-')
                .replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
        assert_eq!(format_number(f64::NAN), "NaN");
    }

    #[test]
    fn csv_quotes_text_and_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("demo", &["x", "note"]);
        t.push(vec![1.5.into(), "a, b".into()]);
        t.push(vec![Cell::Empty, "plain".into()]);
        let p = dir.path().join("a.csv");
        t.write_csv(&p).unwrap();
        let first = fs::read(&p).unwrap();
        assert_eq!(
            String::from_utf8(first.clone()).unwrap(),
            "x,note\r\n1.5000000000000000e0,\"a, b\"\r\n,plain\r\n"
        );
        t.write_csv(&p).unwrap();
        assert_eq!(fs::read(&p).unwrap(), first);
    }

    #[test]
    fn dat_blocks_split_on_key_changes() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("c", &["T", "t", "F"]).with_curves("T", "t", "F");
        for (temp, time) in [(1.0, 0.0), (1.0, 1.0), (2.0, 0.0)] {
            t.push(vec![temp.into(), time.into(), 0.5.into()]);
        }
        let p = dir.path().join("c.dat");
        t.write_dat(&p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.matches("# T = ").count(), 2);
        assert!(text.contains("\n\n\n# T = 2"));
        assert!(t.plot_script("c.dat").unwrap().contains("using 2:3"));
    }

    #[test]
    fn manifest_overwrites_and_flattens() {
        let mut m = Manifest::default();
        m.set("status", "running");
        m.set("status", "ok");
        m.set("error", "line one\nline two");
        assert_eq!(m.render(), "status = ok\nerror = line one line two\n");
    }
}
