//! Periodic simulation box and the point-configuration data structure.
//!
//! A [`Configuration`] is a finite set of points on a d-dimensional torus
//! `[0, L)^d`, stored in id-stable slots and indexed by a uniform cell grid
//! for O(1) neighborhood queries. Interaction ranges must satisfy `R < L/2`
//! so the minimum-image convention is unambiguous.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Poisson};

/// Periodic box `[0, L)^d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Torus {
    dim: usize,
    side: f64,
}

impl Torus {
    pub fn new(dim: usize, side: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Geometry("dimension must be >= 1".into()));
        }
        if !(side > 0.0) || !side.is_finite() {
            return Err(Error::Geometry(format!("box side must be positive, got {side}")));
        }
        Ok(Torus { dim, side })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    /// Wrap raw coordinates into `[0, L)` component-wise.
    pub fn wrap(&self, raw: &[f64]) -> Point {
        debug_assert_eq!(raw.len(), self.dim);
        let coords = raw
            .iter()
            .map(|&c| {
                let mut w = c.rem_euclid(self.side);
                // rem_euclid can return L itself when c is a tiny negative number.
                if w >= self.side {
                    w -= self.side;
                }
                w
            })
            .collect();
        Point { coords }
    }

    /// Minimum-image representative of `x - y`, each component in `[-L/2, L/2)`.
    ///
    /// The tie at exactly `L/2` resolves to `-L/2` for determinism.
    pub fn min_image_disp(&self, x: &Point, y: &Point) -> Vec<f64> {
        debug_assert_eq!(x.coords.len(), self.dim);
        debug_assert_eq!(y.coords.len(), self.dim);
        let half = 0.5 * self.side;
        x.coords
            .iter()
            .zip(&y.coords)
            .map(|(&a, &b)| {
                let mut d = (a - b).rem_euclid(self.side);
                if d >= half {
                    d -= self.side;
                }
                d
            })
            .collect()
    }

    /// Minimum-image distance between `x` and `y`.
    pub fn min_image_dist(&self, x: &Point, y: &Point) -> f64 {
        self.min_image_disp(x, y).iter().map(|d| d * d).sum::<f64>().sqrt()
    }

    /// Uniform point on the torus.
    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> Point {
        let coords = (0..self.dim).map(|_| rng.gen::<f64>() * self.side).collect();
        Point { coords }
    }
}

/// A position on the torus; every coordinate lies in `[0, L)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

/// Uniform cell grid over the torus; cells tile the box exactly.
#[derive(Clone, Debug)]
struct CellGrid {
    per_side: usize,
    cell_side: f64,
    cells: Vec<Vec<usize>>,
}

impl CellGrid {
    fn new(torus: &Torus, min_cell_side: f64) -> Result<Self> {
        if min_cell_side >= 0.5 * torus.side() {
            return Err(Error::Geometry(format!(
                "cell side {min_cell_side} must be < L/2 = {}",
                0.5 * torus.side()
            )));
        }
        let per_side = if min_cell_side <= 0.0 {
            8.min((torus.side() / f64::EPSILON) as usize).max(1)
        } else {
            ((torus.side() / min_cell_side).floor() as usize).max(1)
        };
        let n_cells = per_side.checked_pow(torus.dim() as u32).ok_or_else(|| {
            Error::Geometry(format!("cell grid {per_side}^{} overflows", torus.dim()))
        })?;
        Ok(CellGrid {
            per_side,
            cell_side: torus.side() / per_side as f64,
            cells: vec![Vec::new(); n_cells],
        })
    }

    fn cell_index(&self, p: &Point) -> usize {
        let mut idx = 0usize;
        for &c in &p.coords {
            let mut k = (c / self.cell_side) as usize;
            if k >= self.per_side {
                k = self.per_side - 1;
            }
            idx = idx * self.per_side + k;
        }
        idx
    }

    fn insert(&mut self, p: &Point, id: usize) {
        let c = self.cell_index(p);
        self.cells[c].push(id);
    }

    fn remove(&mut self, p: &Point, id: usize) -> Result<()> {
        let c = self.cell_index(p);
        let pos = self.cells[c]
            .iter()
            .position(|&q| q == id)
            .ok_or_else(|| Error::Internal(format!("id {id} missing from its cell")))?;
        self.cells[c].swap_remove(pos);
        Ok(())
    }
}

/// Finite point configuration with stable integer ids and a cell index.
///
/// Configurations are always finite here, so growth bounds on the particle
/// count over expanding balls hold trivially (a documented non-check; no
/// growth constants are exposed).
#[derive(Clone, Debug)]
pub struct Configuration {
    torus: Torus,
    slots: Vec<Option<Point>>,
    free_ids: Vec<usize>,
    len: usize,
    grid: CellGrid,
}

impl Configuration {
    /// Empty configuration. `min_cell_side` sizes the cell grid; pass the
    /// largest interaction range that will be queried (a pure performance
    /// knob — queries of any radius up to `L/2` stay correct), or `0.0`
    /// for a default granularity.
    pub fn new(torus: Torus, min_cell_side: f64) -> Result<Self> {
        let grid = CellGrid::new(&torus, min_cell_side)?;
        Ok(Configuration { torus, slots: Vec::new(), free_ids: Vec::new(), len: 0, grid })
    }

    /// Poisson point process with intensity `rho`: the count is
    /// Poisson(`rho * L^d`) and positions are i.i.d. uniform.
    pub fn sample_poisson<R: Rng>(
        torus: Torus,
        rho: f64,
        min_cell_side: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(rho >= 0.0) {
            return Err(Error::Parameter(format!("intensity must be >= 0, got {rho}")));
        }
        let mut cfg = Configuration::new(torus, min_cell_side)?;
        let mean = rho * torus.volume();
        let n = if mean > 0.0 {
            Poisson::new(mean)
                .map_err(|e| Error::Parameter(format!("poisson({mean}): {e}")))?
                .sample(rng) as usize
        } else {
            0
        };
        for _ in 0..n {
            let p = torus.sample_uniform(rng);
            cfg.insert(p)?;
        }
        Ok(cfg)
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn point(&self, id: usize) -> Result<&Point> {
        self.slots.get(id).and_then(|s| s.as_ref()).ok_or(Error::UnknownId(id))
    }

    /// Live `(id, point)` pairs in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Point)> {
        self.slots.iter().enumerate().filter_map(|(i, s)| s.as_ref().map(|p| (i, p)))
    }

    /// Live ids in ascending order.
    pub fn ids(&self) -> Vec<usize> {
        self.iter().map(|(i, _)| i).collect()
    }

    /// Insert a (wrapped) point; rejects an exact duplicate of a stored point.
    /// Returns the new point's id.
    pub fn insert(&mut self, p: Point) -> Result<usize> {
        let cell = self.grid.cell_index(&p);
        for &other in &self.grid.cells[cell] {
            if self.slots[other].as_ref().map(|q| q.coords == p.coords).unwrap_or(false) {
                return Err(Error::DuplicatePoint(p.coords.clone()));
            }
        }
        let id = match self.free_ids.pop() {
            Some(id) => {
                self.slots[id] = Some(p);
                id
            }
            None => {
                self.slots.push(Some(p));
                self.slots.len() - 1
            }
        };
        self.grid.insert(self.slots[id].as_ref().unwrap(), id);
        self.len += 1;
        Ok(id)
    }

    /// Remove a point by id, returning it.
    pub fn remove(&mut self, id: usize) -> Result<Point> {
        let p = self.slots.get_mut(id).and_then(|s| s.take()).ok_or(Error::UnknownId(id))?;
        self.grid.remove(&p, id)?;
        self.free_ids.push(id);
        self.len -= 1;
        Ok(p)
    }

    /// Move a point to a new (wrapped) position, keeping its id stable.
    pub fn move_point(&mut self, id: usize, to: Point) -> Result<()> {
        let from = self.slots.get(id).and_then(|s| s.clone()).ok_or(Error::UnknownId(id))?;
        self.grid.remove(&from, id)?;
        self.grid.insert(&to, id);
        self.slots[id] = Some(to);
        Ok(())
    }

    /// Ids of all stored points within minimum-image distance `r` of `x`
    /// (inclusive), in ascending id order. A stored point equal to `x` is
    /// included; callers exclude self explicitly.
    pub fn neighbors_within(&self, x: &Point, r: f64) -> Result<Vec<usize>> {
        let half = 0.5 * self.torus.side();
        if r > half {
            return Err(Error::RangeTooLarge { range: r, half });
        }
        let mut out = Vec::new();
        self.for_each_neighbor(x, r, |id, _| out.push(id));
        out.sort_unstable();
        Ok(out)
    }

    /// Visit `(id, distance)` for every stored point within distance `r` of
    /// `x` (inclusive). Visit order is unspecified.
    pub fn for_each_neighbor<F: FnMut(usize, f64)>(&self, x: &Point, r: f64, mut visit: F) {
        let m = self.grid.per_side;
        let reach = ((r / self.grid.cell_side).ceil() as usize).min(m / 2);
        let span = (2 * reach + 1).min(m);
        let base: Vec<usize> = x
            .coords
            .iter()
            .map(|&c| {
                let mut k = (c / self.grid.cell_side) as usize;
                if k >= m {
                    k = m - 1;
                }
                k
            })
            .collect();
        let dim = self.torus.dim();
        let mut offsets = vec![0usize; dim];
        loop {
            // cell coordinates for this offset combination
            let mut idx = 0usize;
            for a in 0..dim {
                let k = (base[a] + m - reach + offsets[a]) % m;
                idx = idx * m + k;
            }
            for &id in &self.grid.cells[idx] {
                let p = self.slots[id].as_ref().expect("cell grid references live ids");
                let d = self.torus.min_image_dist(x, p);
                if d <= r {
                    visit(id, d);
                }
            }
            // odometer increment over the span^dim block
            let mut a = 0;
            loop {
                if a == dim {
                    return;
                }
                offsets[a] += 1;
                if offsets[a] < span {
                    break;
                }
                offsets[a] = 0;
                a += 1;
            }
        }
    }

    /// Brute-force O(n) variant of [`Self::neighbors_within`]; the oracle the
    /// cell grid is audited against.
    pub fn neighbors_within_bruteforce(&self, x: &Point, r: f64) -> Result<Vec<usize>> {
        let half = 0.5 * self.torus.side();
        if r > half {
            return Err(Error::RangeTooLarge { range: r, half });
        }
        Ok(self
            .iter()
            .filter(|(_, p)| self.torus.min_image_dist(x, p) <= r)
            .map(|(i, _)| i)
            .collect())
    }

    /// Check that the cell grid is consistent with the stored points by full
    /// rebuild comparison.
    pub fn cells_consistent(&self) -> bool {
        let mut rebuilt = vec![Vec::new(); self.grid.cells.len()];
        for (id, p) in self.iter() {
            rebuilt[self.grid.cell_index(p)].push(id);
        }
        let mut a: Vec<Vec<usize>> = self.grid.cells.clone();
        for c in a.iter_mut() {
            c.sort_unstable();
        }
        for c in rebuilt.iter_mut() {
            c.sort_unstable();
        }
        a == rebuilt
    }
}
