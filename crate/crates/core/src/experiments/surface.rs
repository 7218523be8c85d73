//! The uniform-routing bound as a surface over `(p, c)`, its level curves and
//! the qualitative features checked against it.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::bounds::{eq5_uniform_pruning_bound, Eq5Bound};
use crate::error::{Error, Result};

pub const DEFAULT_P_GRID_STEPS: usize = 50;
pub const DEFAULT_C_GRID_STEPS: usize = 100;
pub const CONTOUR_LEVELS: [f64; 2] = [0.25, 0.5];

/// Plateau: bound at most this for `p <= 0.7`, `c in [1, 2]`.
pub const PLATEAU_MAX: f64 = 1e-3;
/// Steep rise: values at or above this count as "high".
pub const HIGH_LEVEL: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contour {
    pub level: f64,
    /// Polylines of `(p, c)` points.
    pub polylines: Vec<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Surface {
    pub k: u64,
    pub n: u64,
    pub p_grid: Vec<f64>,
    pub c_grid: Vec<f64>,
    /// `values[i][j]` is the bound at `(p_grid[i], c_grid[j])`.
    pub values: Vec<Vec<Eq5Bound>>,
    pub contours: Vec<Contour>,
}

/// `steps` evenly spaced points in `(lo, hi]`.
pub fn open_closed_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    let s = steps as f64;
    (1..=steps).map(|i| (lo * s + (hi - lo) * i as f64) / s).collect()
}

/// Default grids: `p` in `(0.5, 1]` and `c` in `(0, 2]`.
pub fn default_grids() -> (Vec<f64>, Vec<f64>) {
    (
        open_closed_grid(0.5, 1.0, DEFAULT_P_GRID_STEPS),
        open_closed_grid(0.0, 2.0, DEFAULT_C_GRID_STEPS),
    )
}

pub fn figure3_surface(k: u64, n: u64, p_grid: &[f64], c_grid: &[f64]) -> Result<Surface> {
    const OP: &str = "figure3_surface";
    if p_grid.len() < 2 || c_grid.len() < 2 {
        return Err(Error::domain(OP, "each grid needs at least two points"));
    }
    if let Some(p) = p_grid.iter().find(|&&p| !(p > 0.5 && p <= 1.0)) {
        return Err(Error::domain(OP, format!("p grid must lie in (0.5, 1], found {p}")));
    }
    if let Some(c) = c_grid.iter().find(|&&c| !(c > 0.0 && c <= 2.0)) {
        return Err(Error::domain(OP, format!("c grid must lie in (0, 2], found {c}")));
    }
    for g in [p_grid, c_grid] {
        if g.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain(OP, "grids must be strictly increasing"));
        }
    }
    let values: Vec<Vec<Eq5Bound>> = p_grid
        .iter()
        .map(|&p| c_grid.iter().map(|&c| eq5_uniform_pruning_bound(n, k, p, c)).collect())
        .collect::<Result<_>>()?;
    let scalar: Vec<Vec<f64>> = values
        .iter()
        .map(|row| row.iter().map(|b| b.bound).collect())
        .collect();
    let contours = CONTOUR_LEVELS
        .iter()
        .map(|&level| Contour {
            level,
            polylines: marching_squares(p_grid, c_grid, &scalar, level),
        })
        .collect();
    Ok(Surface {
        k,
        n,
        p_grid: p_grid.to_vec(),
        c_grid: c_grid.to_vec(),
        values,
        contours,
    })
}

impl Surface {
    pub fn bound(&self, i: usize, j: usize) -> f64 {
        self.values[i][j].bound
    }

    /// Grid CSV: `p,c,bound,exponent_p,vacuous`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["p", "c", "bound", "exponent_p", "vacuous"])
            .map_err(csv_err)?;
        for (i, &p) in self.p_grid.iter().enumerate() {
            for (j, &c) in self.c_grid.iter().enumerate() {
                let v = self.values[i][j];
                w.write_record([
                    p.to_string(),
                    c.to_string(),
                    v.bound.to_string(),
                    v.exponent_p.to_string(),
                    v.vacuous.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Level-curve CSV: `level,polyline,vertex,p,c`.
    pub fn write_contours_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["level", "polyline", "vertex", "p", "c"])
            .map_err(csv_err)?;
        for contour in &self.contours {
            for (li, line) in contour.polylines.iter().enumerate() {
                for (vi, (p, c)) in line.iter().enumerate() {
                    w.write_record([
                        contour.level.to_string(),
                        li.to_string(),
                        vi.to_string(),
                        p.to_string(),
                        c.to_string(),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Rows whose bound varies with `c`; the `p = 1` row is identically 1.
    fn informative_rows(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.p_grid.len()).filter(move |&i| {
            let row = &self.values[i];
            row.iter().any(|v| v.bound != row[0].bound)
        })
    }

    fn argmin_c(&self, i: usize) -> f64 {
        let row = &self.values[i];
        let j = (0..row.len())
            .min_by(|&a, &b| row[a].bound.total_cmp(&row[b].bound))
            .expect("non-empty row");
        self.c_grid[j]
    }

    pub fn claims(&self) -> SurfaceClaims {
        let plateau_max = self
            .p_grid
            .iter()
            .enumerate()
            .filter(|(_, &p)| p <= 0.7 + 1e-12)
            .flat_map(|(i, _)| {
                self.c_grid
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| (1.0 - 1e-12..=2.0).contains(&c))
                    .map(move |(j, _)| self.bound(i, j))
            })
            .fold(0.0f64, f64::max);

        let small_c_min = self
            .informative_rows()
            .map(|i| self.bound(i, 0))
            .fold(f64::INFINITY, f64::min);

        let j1 = (0..self.c_grid.len())
            .min_by(|&a, &b| (self.c_grid[a] - 1.0).abs().total_cmp(&(self.c_grid[b] - 1.0).abs()))
            .expect("non-empty grid");
        let band: Vec<usize> = (0..self.p_grid.len())
            .filter(|&i| self.p_grid[i] >= 0.7 - 1e-12 && self.p_grid[i] <= 0.85 + 1e-12)
            .collect();
        let (rise_low, rise_high) = match (band.first(), band.last()) {
            (Some(&a), Some(&b)) => (self.bound(a, j1), self.bound(b, j1)),
            _ => (f64::NAN, f64::NAN),
        };
        let rise_monotone = band.windows(2).all(|w| self.bound(w[0], j1) <= self.bound(w[1], j1));

        let argmins: Vec<(f64, f64)> = self
            .informative_rows()
            .map(|i| (self.p_grid[i], self.argmin_c(i)))
            .collect();
        let inside = |c: f64| (1.0 - 1e-12..=1.5 + 1e-12).contains(&c);
        let in_band: Vec<f64> = argmins.iter().filter(|(_, c)| inside(*c)).map(|(p, _)| *p).collect();

        SurfaceClaims {
            plateau_max,
            plateau_holds: plateau_max <= PLATEAU_MAX,
            small_c_min,
            small_c_rise_holds: small_c_min >= HIGH_LEVEL,
            c_for_p_rise: self.c_grid[j1],
            p_rise_low: rise_low,
            p_rise_high: rise_high,
            p_rise_holds: rise_low < PLATEAU_MAX && rise_high > HIGH_LEVEL && rise_monotone,
            minimum_in_band_holds: argmins.iter().all(|(_, c)| inside(*c)),
            minimum_band_p: in_band
                .first()
                .zip(in_band.last())
                .map(|(&a, &b)| (a, b)),
            argmin_c: argmins,
            contours_emitted: self.contours.iter().all(|c| !c.polylines.is_empty()),
        }
    }
}

/// The qualitative features of the surface, each with the measured values
/// behind its verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceClaims {
    /// Largest bound over `p <= 0.7`, `c in [1, 2]`.
    pub plateau_max: f64,
    pub plateau_holds: bool,
    /// Smallest bound at the lowest grid `c` over rows that vary with `c`.
    pub small_c_min: f64,
    pub small_c_rise_holds: bool,
    /// Column used for the rise in `p`, the grid value closest to 1.
    pub c_for_p_rise: f64,
    /// Bound there at the first grid `p >= 0.7` and the last `p <= 0.85`.
    pub p_rise_low: f64,
    pub p_rise_high: f64,
    pub p_rise_holds: bool,
    /// Every row's minimiser over `c` lies in `[1.0, 1.5]`.
    pub minimum_in_band_holds: bool,
    /// Smallest and largest `p` whose minimiser lies in `[1.0, 1.5]`.
    pub minimum_band_p: Option<(f64, f64)>,
    /// `(p, argmin c)` per row.
    pub argmin_c: Vec<(f64, f64)>,
    pub contours_emitted: bool,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Edge of the grid: `(i, j, 0)` joins `(i, j)` and `(i + 1, j)`; `(i, j, 1)`
/// joins `(i, j)` and `(i, j + 1)`.
type EdgeKey = (usize, usize, u8);

/// Level curves of `values` (indexed `[x][y]`) at `level`, as polylines
/// joined across cells. Closed curves repeat their first point at the end.
pub fn marching_squares(xs: &[f64], ys: &[f64], values: &[Vec<f64>], level: f64) -> Vec<Vec<(f64, f64)>> {
    let above = |i: usize, j: usize| values[i][j] >= level;
    let point = |e: EdgeKey| -> (f64, f64) {
        let (i, j, dir) = e;
        let (i2, j2) = if dir == 0 { (i + 1, j) } else { (i, j + 1) };
        let (va, vb) = (values[i][j], values[i2][j2]);
        let t = ((level - va) / (vb - va)).clamp(0.0, 1.0);
        (xs[i] + t * (xs[i2] - xs[i]), ys[j] + t * (ys[j2] - ys[j]))
    };

    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for i in 0..xs.len().saturating_sub(1) {
        for j in 0..ys.len().saturating_sub(1) {
            let corners = [above(i, j), above(i + 1, j), above(i + 1, j + 1), above(i, j + 1)];
            // Bottom, right, top, left; edge m joins corners m and m + 1.
            let edges: [EdgeKey; 4] = [(i, j, 0), (i + 1, j, 1), (i, j + 1, 0), (i, j, 1)];
            let crossed: Vec<usize> = (0..4).filter(|&m| corners[m] != corners[(m + 1) % 4]).collect();
            match crossed.len() {
                2 => segments.push((edges[crossed[0]], edges[crossed[1]])),
                4 => {
                    let centre = 0.25
                        * (values[i][j] + values[i + 1][j] + values[i + 1][j + 1] + values[i][j + 1]);
                    if (centre >= level) == corners[0] {
                        // Corners 0 and 2 connect through the centre.
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[3], edges[0]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }

    let mut by_edge: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        by_edge.entry(a).or_default().push(s);
        by_edge.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let walk = |start_seg: usize, start_edge: EdgeKey, used: &mut Vec<bool>| {
        let mut line = vec![point(start_edge)];
        let (mut seg, mut at) = (start_seg, start_edge);
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            line.push(point(next));
            at = next;
            match by_edge[&at].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => break,
            }
        }
        line
    };
    // Open curves start at edges touched by one segment.
    for (&edge, segs) in &by_edge {
        if segs.len() == 1 && !used[segs[0]] {
            lines.push(walk(segs[0], edge, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            lines.push(walk(s, segments[s].0, &mut used));
        }
    }
    lines
}
