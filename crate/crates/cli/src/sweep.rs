//! Cartesian parameter sweeps over up to three config keys.
//!
//! Points are evaluated in parallel but rows come out in lexicographic axis
//! order (first axis outermost), so the CSV does not depend on scheduling.

use rayon::prelude::*;

use crate::config::{usage, Config, ConfigLayers};
use crate::output::{Cell, Table};
use crate::scenario::{evaluate_point, POINT_COLUMNS};

pub const MAX_AXES: usize = 3;
pub const MAX_AXIS_POINTS: usize = 10_000;
pub const MAX_JOBS: usize = 100_000;

#[derive(Debug, Clone)]
pub struct SweepPlan {
    /// fully qualified `section.key` per axis
    pub keys: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl SweepPlan {
    pub fn new(layers: &ConfigLayers, cfg: &Config) -> anyhow::Result<Self> {
        let axes = &cfg.sweep.axes;
        if axes.is_empty() || axes.len() > MAX_AXES {
            return Err(usage(format!(
                "a sweep needs 1 to {MAX_AXES} axes, got {}",
                axes.len()
            )));
        }
        let mut keys = Vec::new();
        let mut values = Vec::new();
        for axis in axes {
            let (section, field) = layers.resolve_key(&axis.key)?;
            if section == "sweep" {
                return Err(usage("the sweep section itself cannot be swept"));
            }
            let key = format!("{section}.{field}");
            if keys.contains(&key) {
                return Err(usage(format!("axis `{key}` appears twice")));
            }
            let v = axis.resolved_values()?;
            if v.is_empty() || v.len() > MAX_AXIS_POINTS {
                return Err(usage(format!(
                    "axis `{key}` has {} points (1 to {MAX_AXIS_POINTS} allowed)",
                    v.len()
                )));
            }
            keys.push(key);
            values.push(v);
        }
        let jobs: usize = values.iter().map(Vec::len).product();
        if jobs > MAX_JOBS {
            return Err(usage(format!(
                "sweep has {jobs} points, more than {MAX_JOBS}"
            )));
        }
        Ok(Self { keys, values })
    }

    pub fn len(&self) -> usize {
        self.values.iter().map(Vec::len).product()
    }

    /// Coordinates of point `k` in lexicographic order.
    pub fn point(&self, mut k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.values.len()];
        for (slot, axis) in out.iter_mut().zip(&self.values).rev() {
            *slot = axis[k % axis.len()];
            k /= axis.len();
        }
        out
    }
}

/// Result cells of one point, or its error message.
type PointResult = Result<Vec<Cell>, String>;

/// Result table and the number of failed points.
pub fn run_sweep(layers: &ConfigLayers, plan: &SweepPlan) -> (Table, usize) {
    let mut header: Vec<&str> = plan.keys.iter().map(String::as_str).collect();
    header.extend(POINT_COLUMNS);
    header.push("error");
    let mut table = Table::new("sweep", &header);

    let rows: Vec<(Vec<f64>, PointResult)> = (0..plan.len())
        .into_par_iter()
        .map(|k| {
            let coords = plan.point(k);
            (coords.clone(), evaluate_at(layers, &plan.keys, &coords))
        })
        .collect();

    let mut failures = 0;
    for (coords, result) in rows {
        let mut row: Vec<Cell> = coords.into_iter().map(Cell::Num).collect();
        match result {
            Ok(cells) => {
                row.extend(cells);
                row.push(Cell::Empty);
            }
            Err(msg) => {
                log::warn!("sweep point failed: {msg}");
                failures += 1;
                row.extend(std::iter::repeat_n(Cell::Empty, POINT_COLUMNS.len()));
                row.push(Cell::Text(msg));
            }
        }
        table.push(row);
    }
    (table, failures)
}

fn evaluate_at(
    layers: &ConfigLayers,
    keys: &[String],
    coords: &[f64],
) -> Result<Vec<Cell>, String> {
    let mut layers = layers.clone();
    for (key, &x) in keys.iter().zip(coords) {
        layers.set_number(key, x).map_err(|e| e.to_string())?;
    }
    let cfg = layers.resolve().map_err(|e| e.to_string())?;
    evaluate_point(&cfg).map_err(|e| e.to_string())
}
