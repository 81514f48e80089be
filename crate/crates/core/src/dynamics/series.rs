use std::io::Write;
use std::path::Path;

use super::evolve::Diagnostics;
use crate::{Error, Result};

/// Sampled observables of one evolution, one named column per observable.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
    pub diagnostics: Diagnostics,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }

    /// Value of `name` at the sample closest to `t`.
    pub fn at(&self, name: &str, t: f64) -> Option<f64> {
        let col = self.column(name)?;
        let i = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))?
            .0;
        Some(col[i])
    }

    /// Largest absolute difference over all shared columns and samples.
    pub fn max_difference(&self, other: &TimeSeries) -> Result<(f64, String, f64)> {
        if self.times != other.times {
            return Err(Error::invalid("time grids differ"));
        }
        let mut worst = (0.0, String::new(), f64::NAN);
        for (name, col) in &self.columns {
            let Some(o) = other.column(name) else {
                continue;
            };
            for (i, (a, b)) in col.iter().zip(o).enumerate() {
                let d = (a - b).abs();
                if d > worst.0 || d.is_nan() {
                    worst = (d, name.clone(), self.times[i]);
                }
            }
        }
        Ok(worst)
    }

    /// CSV with a header row, first column `t`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header = vec!["t"];
        header.extend(self.names());
        w.write_record(&header)?;
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(self.columns.iter().map(|(_, c)| c[i].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)
            .map_err(|e| Error::from(e).context(format!("creating {}", path.display())))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
