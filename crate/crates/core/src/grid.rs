//! Square phase-space grids and sampled Wigner functions.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform `points × points` grid over `[−extent, extent]²` in `(x, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub extent: f64,
    pub points: usize,
}

impl Default for PhaseGrid {
    /// 201 × 201 over `[−5, 5]²`.
    fn default() -> Self {
        Self {
            extent: 5.0,
            points: 201,
        }
    }
}

impl PhaseGrid {
    pub fn new(extent: f64, points: usize) -> Result<Self> {
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::OutOfRange {
                name: "grid extent",
                value: extent,
                range: "(0, inf)",
            });
        }
        if points < 3 {
            return Err(Error::OutOfRange {
                name: "grid points",
                value: points as f64,
                range: "[3, inf)",
            });
        }
        Ok(Self { extent, points })
    }

    pub fn step(&self) -> f64 {
        2.0 * self.extent / (self.points - 1) as f64
    }

    pub fn axis(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.points)
            .map(|i| -self.extent + h * i as f64)
            .collect()
    }

    /// Samples `f(x, p)` over the grid, row-major with x as the slow index.
    /// Rows are evaluated in parallel; the output order is fixed.
    pub fn sample<F>(&self, f: F) -> WignerGrid
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        let axis = self.axis();
        let values: Vec<f64> = axis
            .par_iter()
            .flat_map_iter(|&x| axis.iter().map(move |&p| (x, p)).collect::<Vec<_>>())
            .map(|(x, p)| f(x, p))
            .collect();
        WignerGrid {
            grid: *self,
            values,
        }
    }
}

/// Wigner values sampled on a [`PhaseGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub grid: PhaseGrid,
    /// `values[i * points + j]` is `W(x_i, p_j)`.
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.points + j]
    }

    /// Trapezoid-free Riemann sum; adequate because the functions decay to
    /// zero well inside the grid.
    pub fn integral(&self) -> f64 {
        let h = self.grid.step();
        self.values.iter().sum::<f64>() * h * h
    }

    /// `(min value, i, j)`.
    pub fn argmin(&self) -> (f64, usize, usize) {
        let n = self.grid.points;
        let (k, v) = self
            .values
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc },
            );
        (v, k / n, k % n)
    }

    pub fn max_abs_diff(&self, other: &WignerGrid) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Dimension("Wigner grids differ".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Largest `|W|` on the outermost ring of the grid.
    pub fn boundary_max_abs(&self) -> f64 {
        let n = self.grid.points;
        let mut m: f64 = 0.0;
        for k in 0..n {
            for (i, j) in [(0, k), (n - 1, k), (k, 0), (k, n - 1)] {
                m = m.max(self.get(i, j).abs());
            }
        }
        m
    }

    /// Writes `x,p,w` CSV rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["x", "p", "w"])?;
        let axis = self.grid.axis();
        for (i, x) in axis.iter().enumerate() {
            for (j, p) in axis.iter().enumerate() {
                wtr.write_record([x.to_string(), p.to_string(), self.get(i, j).to_string()])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads a grid written by [`WignerGrid::write_csv`]. Lines starting with
    /// `#` are skipped.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(input);
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Parse("short row".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(e.to_string()))
            };
            xs.push(parse(0)?);
            values.push(parse(2)?);
        }
        let n = (values.len() as f64).sqrt().round() as usize;
        if n * n != values.len() || n < 3 {
            return Err(Error::Parse("Wigner CSV is not a square grid".into()));
        }
        let grid = PhaseGrid::new(-xs[0], n)?;
        Ok(Self { grid, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn default_grid_contains_origin() {
        let g = PhaseGrid::default();
        let axis = g.axis();
        assert_eq!(axis.len(), 201);
        assert_eq!(axis[100], 0.0);
        assert!((g.step() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn vacuum_integrates_to_one() {
        let g = PhaseGrid::default();
        let w = g.sample(|x, p| (-(x * x) - p * p).exp() / PI);
        assert!((w.integral() - 1.0).abs() < 1e-10);
        let (m, _, _) = w.argmin();
        assert!(m >= 0.0);
        assert!(w.boundary_max_abs() < 1e-10);
    }

    #[test]
    fn csv_round_trip() {
        let g = PhaseGrid::new(2.0, 5).unwrap();
        let w = g.sample(|x, p| x - 2.0 * p);
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,p,w\n"));
        let back = WignerGrid::read_csv(&buf[..]).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn rejects_bad_grid() {
        assert!(PhaseGrid::new(0.0, 11).is_err());
        assert!(PhaseGrid::new(1.0, 2).is_err());
    }
}
