//! Uniform node grids in one and two dimensions, grid functions, Dirichlet
//! data and the finite-difference operators shared by every solver.
//!
//! Storage is row-major in axis order: for a 2D grid the node `(i, j)`
//! (x index `i`, y index `j`) lives at `i * ny + j`.
//!
//! The discrete gradient is the forward difference. The Laplacian is the
//! standard `(2d+1)`-point stencil, and the two are tied together by
//! `-Δ_h = ∇_hᵀ ∇_h` when the energy sums over grid edges, so the
//! Euler–Lagrange equation of [`dirichlet_energy`] is exactly the Poisson
//! substep solved in [`crate::elliptic`].

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Relative tolerance used when checking that all axes share one spacing.
const SQUARE_CELL_RTOL: f64 = 1e-12;

/// Axis-aligned uniform grid with square cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    dim: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    n: [usize; 2],
    h: f64,
}

impl GridSpec {
    /// Builds a grid from per-axis extents and node counts.
    ///
    /// Rejects grids with fewer than three nodes per axis, empty extents,
    /// and anisotropic spacings.
    pub fn new(lo: &[f64], hi: &[f64], n: &[usize]) -> Result<Self> {
        let dim = n.len();
        if !(1..=2).contains(&dim) || lo.len() != dim || hi.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2 with matching extents (got lo={}, hi={}, n={})",
                lo.len(),
                hi.len(),
                dim
            )));
        }
        let mut spec = GridSpec {
            dim,
            lo: [0.0; 2],
            hi: [0.0; 2],
            n: [1; 2],
            h: 0.0,
        };
        for axis in 0..dim {
            if n[axis] < 3 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} needs at least 3 nodes, got {}",
                    n[axis]
                )));
            }
            if !(lo[axis].is_finite() && hi[axis].is_finite() && hi[axis] > lo[axis]) {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} has an empty or non-finite extent [{}, {}]",
                    lo[axis], hi[axis]
                )));
            }
            spec.lo[axis] = lo[axis];
            spec.hi[axis] = hi[axis];
            spec.n[axis] = n[axis];
        }
        spec.h = (hi[0] - lo[0]) / (n[0] - 1) as f64;
        for axis in 1..dim {
            let h_axis = (hi[axis] - lo[axis]) / (n[axis] - 1) as f64;
            if (h_axis - spec.h).abs() > SQUARE_CELL_RTOL * spec.h {
                return Err(Error::InvalidGrid(format!(
                    "anisotropic spacing: h0={} h{axis}={h_axis}",
                    spec.h
                )));
            }
        }
        Ok(spec)
    }

    /// 1D grid on `[lo, hi]` with `n` nodes.
    pub fn interval(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(&[lo], &[hi], &[n])
    }

    /// 2D grid on `[lo, hi]²` with `n` nodes per axis.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(&[lo, lo], &[hi, hi], &[n, n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Node count along `axis` (1 for the unused second axis of a 1D grid).
    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn shape(&self) -> [usize; 2] {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.lo[axis]
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.hi[axis]
    }

    /// `h^d`, the quadrature weight of one node.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Coordinate of node `j` along `axis`: `lo + j·h`.
    #[inline]
    pub fn coord(&self, axis: usize, j: usize) -> f64 {
        self.lo[axis] + j as f64 * self.h
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n[0] && j < self.n[1]);
        i * self.n[1] + j
    }

    /// Inverse of [`GridSpec::index`].
    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize) {
        (idx / self.n[1], idx % self.n[1])
    }

    /// Node coordinates; the second entry is 0 on 1D grids.
    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.unravel(idx);
        if self.dim == 1 {
            [self.coord(0, i), 0.0]
        } else {
            [self.coord(0, i), self.coord(1, j)]
        }
    }

    #[inline]
    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, j) = self.unravel(idx);
        if i == 0 || i == self.n[0] - 1 {
            return true;
        }
        self.dim == 2 && (j == 0 || j == self.n[1] - 1)
    }

    pub fn boundary_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.is_boundary(k)).collect()
    }

    /// Index offset of a unit step along `axis`.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        if axis == 0 {
            self.n[1]
        } else {
            1
        }
    }

    /// Calls `f` on every interior node index, in storage order.
    #[inline]
    pub fn for_each_interior(&self, mut f: impl FnMut(usize)) {
        if self.dim == 1 {
            for i in 1..self.n[0] - 1 {
                f(i);
            }
        } else {
            let ny = self.n[1];
            for i in 1..self.n[0] - 1 {
                let row = i * ny;
                for j in 1..ny - 1 {
                    f(row + j);
                }
            }
        }
    }

    /// Whether node `idx` has a forward neighbour along `axis`.
    #[inline]
    pub fn has_forward(&self, idx: usize, axis: usize) -> bool {
        let (i, j) = self.unravel(idx);
        match axis {
            0 => i + 1 < self.n[0],
            _ => self.dim == 2 && j + 1 < self.n[1],
        }
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpecMismatch(what.to_string()))
        }
    }
}

/// Scalar field sampled at the nodes of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(spec: &GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    pub fn constant(spec: &GridSpec, c: f64) -> Self {
        GridFunction {
            spec: spec.clone(),
            values: vec![c; spec.len()],
        }
    }

    /// Samples `f` at every node. The closure receives the node coordinates
    /// as a slice of length `dim`.
    pub fn from_fn(spec: &GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let dim = spec.dim();
        let values = (0..spec.len())
            .map(|k| {
                let p = spec.point(k);
                f(&p[..dim])
            })
            .collect();
        GridFunction {
            spec: spec.clone(),
            values,
        }
    }

    pub fn from_values(spec: &GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::SpecMismatch(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        let gf = GridFunction {
            spec: spec.clone(),
            values,
        };
        gf.check_finite("grid function values")?;
        Ok(gf)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridFunction {
            spec: self.spec.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.spec.ensure_same(&other.spec, "zip_map operands")?;
        Ok(GridFunction {
            spec: self.spec.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn check_finite(&self, what: &str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    }

    /// CSV with header `x[,y],value`, one node per row in storage order,
    /// 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 48);
        let dim = self.spec.dim();
        out.push_str(if dim == 1 { "x,value\n" } else { "x,y,value\n" });
        for (k, v) in self.values.iter().enumerate() {
            let p = self.spec.point(k);
            if dim == 1 {
                let _ = writeln!(out, "{},{}", fmt_f64(p[0]), fmt_f64(*v));
            } else {
                let _ = writeln!(out, "{},{},{}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(*v));
            }
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Parses the CSV layout written by [`GridFunction::to_csv`], recovering
    /// the grid from the node coordinates.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Csv("empty input".into()))?
            .trim();
        let dim = match header {
            "x,value" => 1,
            "x,y,value" => 2,
            other => return Err(Error::Csv(format!("unexpected header `{other}`"))),
        };
        let mut rows: Vec<[f64; 3]> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != dim + 1 {
                return Err(Error::Csv(format!(
                    "row {} has {} fields, expected {}",
                    lineno + 2,
                    fields.len(),
                    dim + 1
                )));
            }
            let mut row = [0.0; 3];
            for (slot, field) in row.iter_mut().zip(&fields) {
                *slot = field
                    .parse()
                    .map_err(|e| Error::Csv(format!("row {}: {e}", lineno + 2)))?;
            }
            if dim == 1 {
                row[2] = row[1];
                row[1] = 0.0;
            }
            rows.push(row);
        }
        if rows.len() < 3 {
            return Err(Error::Csv("too few rows".into()));
        }
        let spec = if dim == 1 {
            GridSpec::interval(rows[0][0], rows[rows.len() - 1][0], rows.len())?
        } else {
            let ny = rows.iter().take_while(|r| r[0] == rows[0][0]).count();
            if ny == 0 || rows.len() % ny != 0 {
                return Err(Error::Csv("rows do not form a tensor grid".into()));
            }
            let nx = rows.len() / ny;
            let last = rows[rows.len() - 1];
            GridSpec::new(&[rows[0][0], rows[0][1]], &[last[0], last[1]], &[nx, ny])?
        };
        let tol = 1e-9 * spec.h();
        for (k, row) in rows.iter().enumerate() {
            let p = spec.point(k);
            if (p[0] - row[0]).abs() > tol || (p[1] - row[1]).abs() > tol {
                return Err(Error::Csv(format!("row {} is off the inferred grid", k + 2)));
            }
        }
        GridFunction::from_values(&spec, rows.iter().map(|r| r[2]).collect())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Fixed values on the boundary nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletBC {
    spec: GridSpec,
    // full-length storage; interior entries are unused and kept at zero
    values: Vec<f64>,
}

impl DirichletBC {
    pub fn zero(spec: &GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    pub fn constant(spec: &GridSpec, c: f64) -> Self {
        Self::from_fn(spec, |_| c)
    }

    /// Samples a boundary function `g` at the boundary nodes.
    pub fn from_fn(spec: &GridSpec, g: impl Fn(&[f64]) -> f64) -> Self {
        let dim = spec.dim();
        let mut values = vec![0.0; spec.len()];
        for k in spec.boundary_indices() {
            let p = spec.point(k);
            values[k] = g(&p[..dim]);
        }
        DirichletBC {
            spec: spec.clone(),
            values,
        }
    }

    /// Takes the boundary values of an existing field.
    pub fn from_field(u: &GridFunction) -> Self {
        let spec = u.spec();
        let mut values = vec![0.0; spec.len()];
        for k in spec.boundary_indices() {
            values[k] = u.get(k);
        }
        DirichletBC {
            spec: spec.clone(),
            values,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Boundary value at node `idx`; meaningless for interior nodes.
    #[inline]
    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn boundary_values(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.spec.boundary_indices().into_iter().map(|k| (k, self.values[k]))
    }

    /// Overwrites the boundary nodes of `u` with the stored values.
    pub fn apply(&self, u: &mut GridFunction) -> Result<()> {
        self.spec.ensure_same(u.spec(), "boundary condition and field")?;
        self.apply_slice(u.values_mut());
        Ok(())
    }

    pub(crate) fn apply_slice(&self, u: &mut [f64]) {
        for k in self.spec.boundary_indices() {
            u[k] = self.values[k];
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("boundary values".into()))
        }
    }
}

/// Forward-difference gradient, one field per axis.
///
/// On the high face of each axis there is no forward neighbour, so the
/// backward difference is copied there and the field is defined everywhere.
pub fn gradient_forward(u: &GridFunction) -> Vec<GridFunction> {
    let spec = u.spec();
    let h = spec.h();
    let vals = u.values();
    (0..spec.dim())
        .map(|axis| {
            let stride = spec.stride(axis);
            let values = (0..spec.len())
                .map(|k| {
                    if spec.has_forward(k, axis) {
                        (vals[k + stride] - vals[k]) / h
                    } else {
                        (vals[k] - vals[k - stride]) / h
                    }
                })
                .collect();
            GridFunction {
                spec: spec.clone(),
                values,
            }
        })
        .collect()
}

/// Writes `Δ_h u` on interior nodes into `out` and zeros on the boundary,
/// reading boundary values straight from `u`.
pub(crate) fn laplacian_into(spec: &GridSpec, u: &[f64], out: &mut [f64]) {
    let inv_h2 = 1.0 / (spec.h() * spec.h());
    for k in spec.boundary_indices() {
        out[k] = 0.0;
    }
    if spec.dim() == 1 {
        spec.for_each_interior(|k| {
            out[k] = (u[k - 1] - 2.0 * u[k] + u[k + 1]) * inv_h2;
        });
    } else {
        let ny = spec.n(1);
        spec.for_each_interior(|k| {
            out[k] = (u[k - ny] + u[k + ny] + u[k - 1] + u[k + 1] - 4.0 * u[k]) * inv_h2;
        });
    }
}

/// Five-point (three-point in 1D) Laplacian with Dirichlet data.
///
/// Boundary nodes take their values from `bc`; the result is reported on
/// interior nodes only and is zero on the boundary.
pub fn laplacian(u: &GridFunction, bc: &DirichletBC) -> Result<GridFunction> {
    u.spec().ensure_same(bc.spec(), "laplacian operand and boundary condition")?;
    let spec = u.spec();
    let mut with_bc = u.values().to_vec();
    bc.apply_slice(&mut with_bc);
    let mut out = vec![0.0; spec.len()];
    laplacian_into(spec, &with_bc, &mut out);
    Ok(GridFunction {
        spec: spec.clone(),
        values: out,
    })
}

/// Sum over grid edges of `½ (forward difference)²`, without the `h^d`
/// weight. Its gradient with respect to the node values is `-Δ_h u`.
pub(crate) fn edge_energy(spec: &GridSpec, u: &[f64]) -> f64 {
    let h = spec.h();
    let mut sum = 0.0;
    for axis in 0..spec.dim() {
        let stride = spec.stride(axis);
        for k in 0..spec.len() {
            if spec.has_forward(k, axis) {
                let d = (u[k + stride] - u[k]) / h;
                sum += 0.5 * d * d;
            }
        }
    }
    sum
}

/// Discrete Dirichlet energy `h^d Σ ½|∇_h u|²`.
///
/// The sum runs over forward-admissible differences only; the copied
/// backward differences that [`gradient_forward`] places on the high face are
/// not counted twice.
pub fn dirichlet_energy(u: &GridFunction) -> f64 {
    let spec = u.spec();
    spec.cell_volume() * edge_energy(spec, u.values())
}

/// Maximum nodewise difference `max |a - b|`.
pub fn linf_diff(a: &GridFunction, b: &GridFunction) -> Result<f64> {
    a.spec().ensure_same(b.spec(), "linf_diff operands")?;
    Ok(linf_slices(a.values(), b.values()))
}

#[inline]
pub(crate) fn linf_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_and_anisotropic_grids() {
        assert!(GridSpec::interval(0.0, 1.0, 2).is_err());
        assert!(GridSpec::new(&[0.0, 0.0], &[1.0, 2.0], &[11, 11]).is_err());
        assert!(GridSpec::new(&[0.0, 0.0], &[1.0, 2.0], &[11, 21]).is_ok());
        assert!(GridSpec::interval(1.0, 1.0, 5).is_err());
    }

    #[test]
    fn coordinates_are_reproducible() {
        let spec = GridSpec::square(-2.0, 2.0, 256).unwrap();
        let h = 4.0 / 255.0;
        for j in [0, 1, 17, 128, 255] {
            assert_eq!(spec.coord(0, j), -2.0 + j as f64 * h);
        }
        let k = spec.index(3, 7);
        assert_eq!(spec.unravel(k), (3, 7));
        assert_eq!(spec.point(k), [spec.coord(0, 3), spec.coord(1, 7)]);
    }

    #[test]
    fn boundary_counts() {
        let s1 = GridSpec::interval(0.0, 1.0, 9).unwrap();
        assert_eq!(s1.boundary_indices(), vec![0, 8]);
        let s2 = GridSpec::square(0.0, 1.0, 5).unwrap();
        assert_eq!(s2.boundary_indices().len(), 16);
        let mut interior = 0;
        s2.for_each_interior(|_| interior += 1);
        assert_eq!(interior, 9);
    }

    #[test]
    fn gradient_of_linear_and_constant() {
        let spec = GridSpec::interval(0.0, 2.0, 3).unwrap();
        let u = GridFunction::from_values(&spec, vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(gradient_forward(&u)[0].values(), &[1.0, 1.0, 1.0]);

        let spec2 = GridSpec::square(0.0, 1.0, 7).unwrap();
        let c = GridFunction::constant(&spec2, 3.5);
        for comp in gradient_forward(&c) {
            assert!(comp.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn gradient_of_square_is_first_order() {
        let spec = GridSpec::interval(0.0, 1.0, 101).unwrap();
        let h = spec.h();
        let u = GridFunction::from_fn(&spec, |p| p[0] * p[0]);
        let g = &gradient_forward(&u)[0];
        let err = (0..spec.len())
            .map(|k| {
                let x = spec.point(k)[0];
                (g.get(k) - 2.0 * x - h).abs()
            })
            // the copied high-face entry is a backward difference
            .take(spec.len() - 1)
            .fold(0.0, f64::max);
        assert!(err <= 2.0 * h, "err={err}");
        let last = spec.len() - 1;
        assert!((g.get(last) - 2.0).abs() <= 2.0 * h);
    }

    #[test]
    fn laplacian_stencil_examples() {
        let spec = GridSpec::interval(0.0, 2.0, 3).unwrap();
        let u = GridFunction::from_values(&spec, vec![0.0, 1.0, 0.0]).unwrap();
        let bc = DirichletBC::from_field(&u);
        let lap = laplacian(&u, &bc).unwrap();
        assert_eq!(lap.values(), &[0.0, -2.0, 0.0]);

        let spec = GridSpec::interval(0.0, 1.0, 17).unwrap();
        let u = GridFunction::from_fn(&spec, |p| p[0]);
        let lap = laplacian(&u, &DirichletBC::from_field(&u)).unwrap();
        assert!(lap.max_abs() < 1e-10);
    }

    #[test]
    fn laplacian_is_exact_on_quadratics() {
        let spec = GridSpec::square(-1.0, 1.0, 65).unwrap();
        let u = GridFunction::from_fn(&spec, |p| p[0] * p[0] + p[1] * p[1]);
        let lap = laplacian(&u, &DirichletBC::from_field(&u)).unwrap();
        spec.for_each_interior(|k| {
            assert!((lap.get(k) - 4.0).abs() < 1e-9, "{}", lap.get(k));
        });
        for k in spec.boundary_indices() {
            assert_eq!(lap.get(k), 0.0);
        }
    }

    #[test]
    fn laplacian_uses_bc_values() {
        let spec = GridSpec::interval(0.0, 2.0, 3).unwrap();
        let u = GridFunction::zeros(&spec);
        let bc = DirichletBC::constant(&spec, 1.0);
        let lap = laplacian(&u, &bc).unwrap();
        assert_eq!(lap.get(1), 2.0);
        let other = GridSpec::interval(0.0, 1.0, 3).unwrap();
        assert!(laplacian(&u, &DirichletBC::zero(&other)).is_err());
    }

    #[test]
    fn dirichlet_energy_examples() {
        let spec = GridSpec::square(0.0, 1.0, 9).unwrap();
        assert_eq!(dirichlet_energy(&GridFunction::constant(&spec, 2.0)), 0.0);

        for n in [5, 33, 100] {
            let spec = GridSpec::interval(0.0, 1.0, n).unwrap();
            let u = GridFunction::from_fn(&spec, |p| p[0]);
            assert!((dirichlet_energy(&u) - 0.5).abs() <= spec.h());
        }

        let spec = GridSpec::interval(0.0, 1.0, 257).unwrap();
        let u = GridFunction::from_fn(&spec, |p| (2.0 * std::f64::consts::PI * p[0]).sin());
        let pi2 = std::f64::consts::PI.powi(2);
        let rel = (dirichlet_energy(&u) - pi2).abs() / pi2;
        // O(h²) with h = 1/256
        assert!(rel < 10.0 * spec.h() * spec.h(), "rel={rel}");
    }

    #[test]
    fn bc_apply_is_idempotent() {
        let spec = GridSpec::square(0.0, 1.0, 6).unwrap();
        let bc = DirichletBC::from_fn(&spec, |p| p[0] + 2.0 * p[1]);
        let mut u = GridFunction::constant(&spec, -1.0);
        bc.apply(&mut u).unwrap();
        let once = u.clone();
        bc.apply(&mut u).unwrap();
        assert_eq!(once, u);
        for (k, v) in bc.boundary_values() {
            assert_eq!(u.get(k), v);
        }
    }

    #[test]
    fn linf_diff_examples() {
        let spec = GridSpec::interval(0.0, 1.0, 5).unwrap();
        let a = GridFunction::from_fn(&spec, |p| p[0].sin());
        assert_eq!(linf_diff(&a, &a).unwrap(), 0.0);
        let b = a.map(|v| v + 0.5);
        assert!((linf_diff(&a, &b).unwrap() - 0.5).abs() < 1e-15);
        let other = GridSpec::interval(0.0, 2.0, 5).unwrap();
        assert!(linf_diff(&a, &GridFunction::zeros(&other)).is_err());
    }

    #[test]
    fn csv_round_trip_2d() {
        let spec = GridSpec::new(&[-1.0, 0.0], &[1.0, 1.0], &[5, 3]).unwrap();
        let u = GridFunction::from_fn(&spec, |p| p[0].exp() * p[1] + 1.0 / 3.0);
        let text = u.to_csv();
        assert!(text.starts_with("x,y,value\n"));
        let back = GridFunction::from_csv(&text).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(GridFunction::from_csv("a,b\n1,2\n").is_err());
        assert!(GridFunction::from_csv("x,value\n0,1\n0.5,x\n1,2\n").is_err());
    }
}
