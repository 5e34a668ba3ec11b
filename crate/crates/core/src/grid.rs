//! Axisymmetric domains, tensor grids, r³-weighted quadrature and the
//! finite-difference operators every other module builds on.
//!
//! Fields are stored as `Nr × Nz` arrays indexed `[i, j]` with `i` the radial
//! node and `j` the axial node. All grids are uniform and include both
//! endpoints in each direction.

use std::sync::Arc;

use ndarray::{Array2, Zip};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Smallest admissible node count per direction.
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    /// The solid cylinder `0 ≤ r < 1`, with the symmetry axis at `r = 0`.
    Interior,
    /// The exterior region `1 ≤ r < ∞`, truncated at `r_max`.
    Exterior,
}

/// Annular region `gamma1 ≤ r ≤ gamma2`, `z_lo ≤ z ≤ z_hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain<T> {
    pub gamma1: T,
    pub gamma2: T,
    pub z_lo: T,
    pub z_hi: T,
    pub kind: DomainKind,
}

impl<T: Scalar> Domain<T> {
    /// `Ω(0,1) × [0,1]`.
    pub fn interior() -> Self {
        Self {
            gamma1: T::zero(),
            gamma2: T::one(),
            z_lo: T::zero(),
            z_hi: T::one(),
            kind: DomainKind::Interior,
        }
    }

    /// `Ω(1, r_max) × [0,1]`, the truncation of the unbounded exterior domain.
    ///
    /// Integrands decaying like `exp(-α r²)` lose at most `exp(-α r_max²)`
    /// times a polynomial factor to the truncation.
    pub fn exterior(r_max: T) -> Result<Self> {
        if !(r_max > T::one()) || !r_max.is_finite() {
            return Err(Error::InvalidDomain(format!(
                "exterior truncation radius must exceed 1, got {r_max}"
            )));
        }
        Ok(Self {
            gamma1: T::one(),
            gamma2: r_max,
            z_lo: T::zero(),
            z_hi: T::one(),
            kind: DomainKind::Exterior,
        })
    }

    pub fn is_interior(&self) -> bool {
        self.kind == DomainKind::Interior
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma1 >= T::zero() && self.gamma1 < self.gamma2) {
            return Err(Error::InvalidDomain("need 0 ≤ gamma1 < gamma2".into()));
        }
        if !(self.z_lo < self.z_hi) {
            return Err(Error::InvalidDomain("need z_lo < z_hi".into()));
        }
        match self.kind {
            DomainKind::Interior if self.gamma1 != T::zero() || self.gamma2 != T::one() => {
                Err(Error::InvalidDomain("interior domain must be 0 ≤ r ≤ 1".into()))
            }
            DomainKind::Exterior if self.gamma1 != T::one() || !(self.gamma2 > T::one()) => {
                Err(Error::InvalidDomain("exterior domain must be 1 ≤ r ≤ r_max".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Uniform tensor grid with precomputed quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    pub domain: Domain<T>,
    pub nr: usize,
    pub nz: usize,
    pub r_nodes: Vec<T>,
    pub z_nodes: Vec<T>,
    pub hr: T,
    pub hz: T,
    /// Radial weights already multiplied by `r³`.
    weights_r: Vec<T>,
    weights_z: Vec<T>,
}

impl<T: Scalar> Grid<T> {
    pub fn new(domain: Domain<T>, nr: usize, nz: usize) -> Result<Arc<Self>> {
        domain.validate()?;
        if nr < MIN_NODES || nz < MIN_NODES {
            return Err(Error::GridTooCoarse(format!(
                "need at least {MIN_NODES} nodes per direction, got {nr}×{nz}"
            )));
        }
        let hr = (domain.gamma2 - domain.gamma1) / T::from_usize_lossy(nr - 1);
        let hz = (domain.z_hi - domain.z_lo) / T::from_usize_lossy(nz - 1);
        let mut r_nodes: Vec<T> = (0..nr).map(|i| domain.gamma1 + hr * T::from_usize_lossy(i)).collect();
        let mut z_nodes: Vec<T> = (0..nz).map(|j| domain.z_lo + hz * T::from_usize_lossy(j)).collect();
        // pin the endpoints exactly
        r_nodes[nr - 1] = domain.gamma2;
        z_nodes[nz - 1] = domain.z_hi;

        let weights_r = simpson_weights(nr, hr)
            .into_iter()
            .zip(&r_nodes)
            .map(|(w, &r)| w * r * r * r)
            .collect();
        let weights_z = simpson_weights(nz, hz);
        Ok(Arc::new(Self {
            domain,
            nr,
            nz,
            r_nodes,
            z_nodes,
            hr,
            hz,
            weights_r,
            weights_z,
        }))
    }

    /// Same domain with both node counts refined: `n ↦ 2n − 1`.
    pub fn refined(&self) -> Result<Arc<Self>> {
        Self::new(self.domain, 2 * self.nr - 1, 2 * self.nz - 1)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nr, self.nz)
    }

    /// `∫∫ r³ dr dz` over the grid's domain, by the grid's own rule.
    pub fn measure(&self) -> T {
        let sr: T = self.weights_r.iter().copied().sum();
        let sz: T = self.weights_z.iter().copied().sum();
        sr * sz
    }

    /// Quadrature weight (including `r³`) attached to node `(i, j)`.
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> T {
        self.weights_r[i] * self.weights_z[j]
    }

    pub fn radial_weights(&self) -> &[T] {
        &self.weights_r
    }

    pub fn axial_weights(&self) -> &[T] {
        &self.weights_z
    }

    pub fn has_axis(&self) -> bool {
        self.domain.is_interior()
    }
}

/// Composite Simpson weights on `n` equispaced nodes; an odd interval count
/// closes with the 3/8 rule on the last three intervals.
pub fn simpson_weights<T: Scalar>(n: usize, h: T) -> Vec<T> {
    assert!(n >= 4, "simpson_weights needs at least 4 nodes");
    let mut w = vec![T::zero(); n];
    let intervals = n - 1;
    let simpson_end = if intervals.is_multiple_of(2) {
        intervals
    } else {
        intervals - 3
    };
    let third = h / T::lit(3.0);
    let mut k = 0;
    while k < simpson_end {
        w[k] += third;
        w[k + 1] += T::lit(4.0) * third;
        w[k + 2] += third;
        k += 2;
    }
    if simpson_end < intervals {
        let e = T::lit(3.0) * h / T::lit(8.0);
        let s = simpson_end;
        w[s] += e;
        w[s + 1] += T::lit(3.0) * e;
        w[s + 2] += T::lit(3.0) * e;
        w[s + 3] += e;
    }
    w
}

/// A scalar function sampled on a grid.
#[derive(Debug, Clone)]
pub struct Field<T> {
    pub grid: Arc<Grid<T>>,
    pub values: Array2<T>,
}

impl<T: Scalar> PartialEq for Field<T> {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values && same_grid(&self.grid, &other.grid)
    }
}

fn same_grid<T: Scalar>(a: &Arc<Grid<T>>, b: &Arc<Grid<T>>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl<T: Scalar> Field<T> {
    pub fn zeros(grid: &Arc<Grid<T>>) -> Self {
        Self {
            grid: grid.clone(),
            values: Array2::zeros((grid.nr, grid.nz)),
        }
    }

    pub fn constant(grid: &Arc<Grid<T>>, c: T) -> Self {
        Self {
            grid: grid.clone(),
            values: Array2::from_elem((grid.nr, grid.nz), c),
        }
    }

    /// Samples `f(r, z)` at every node.
    pub fn from_fn(grid: &Arc<Grid<T>>, f: impl Fn(T, T) -> T) -> Self {
        let values = Array2::from_shape_fn((grid.nr, grid.nz), |(i, j)| f(grid.r_nodes[i], grid.z_nodes[j]));
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_values(grid: &Arc<Grid<T>>, values: Array2<T>) -> Result<Self> {
        if values.dim() != (grid.nr, grid.nz) {
            return Err(Error::InvalidArgument(format!(
                "values have shape {:?}, grid is {}×{}",
                values.dim(),
                grid.nr,
                grid.nz
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[[i, j]]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFiniteField)
        }
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> T {
        self.values.iter().fold(T::infinity(), |m, &v| m.min(v))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.mapv(f),
        }
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if same_grid(&self.grid, &other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_grid(other)?;
        let mut values = self.values.clone();
        Zip::from(&mut values)
            .and(&other.values)
            .for_each(|a, &b| *a = f(*a, b));
        Ok(Self {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: T, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + c * b)
    }

    /// Max-norm over the nodes strictly inside the grid (all boundary rows
    /// and columns excluded; the axis row `r = 0` is kept).
    pub fn max_abs_interior(&self) -> T {
        let (nr, nz) = self.grid.shape();
        let i0 = if self.grid.has_axis() { 0 } else { 1 };
        let mut m = T::zero();
        for i in i0..nr - 1 {
            for j in 1..nz - 1 {
                m = m.max(self.values[[i, j]].abs());
            }
        }
        m
    }
}

/// `∫∫ f(r,z) r³ dr dz` by composite Simpson in each direction.
pub fn integrate_weighted<T: Scalar>(f: &Field<T>) -> Result<T> {
    f.ensure_finite()?;
    let g = &f.grid;
    let mut total = T::zero();
    for i in 0..g.nr {
        let mut row = T::zero();
        for j in 0..g.nz {
            row += g.weights_z[j] * f.values[[i, j]];
        }
        total += g.weights_r[i] * row;
    }
    Ok(total)
}

/// Weighted `L²(r³ dr dz)` norm.
pub fn weighted_l2<T: Scalar>(f: &Field<T>) -> Result<T> {
    Ok(integrate_weighted(&f.map(|v| v * v))?.max(T::zero()).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    R,
    Z,
}

fn check_order(order: usize, n: usize) -> Result<()> {
    if order != 1 && order != 2 {
        return Err(Error::InvalidArgument(format!(
            "derivative order must be 1 or 2, got {order}"
        )));
    }
    if n < 2 * order + 1 {
        return Err(Error::GridTooCoarse(format!(
            "order-{order} stencil needs at least {} nodes, got {n}",
            2 * order + 1
        )));
    }
    Ok(())
}

/// Second-order derivative of a 1-D line. `even_at_start` applies the even
/// reflection `f(-h) = f(h)` at index 0 (the symmetry axis).
fn diff_line<T: Scalar>(f: &[T], out: &mut [T], h: T, order: usize, even_at_start: bool) {
    let n = f.len();
    let two = T::lit(2.0);
    match order {
        1 => {
            let c = T::one() / (two * h);
            for k in 1..n - 1 {
                out[k] = (f[k + 1] - f[k - 1]) * c;
            }
            out[0] = if even_at_start {
                T::zero()
            } else {
                (-T::lit(3.0) * f[0] + T::lit(4.0) * f[1] - f[2]) * c
            };
            out[n - 1] = (T::lit(3.0) * f[n - 1] - T::lit(4.0) * f[n - 2] + f[n - 3]) * c;
        }
        _ => {
            let c = T::one() / (h * h);
            for k in 1..n - 1 {
                out[k] = (f[k + 1] - two * f[k] + f[k - 1]) * c;
            }
            out[0] = if even_at_start {
                two * (f[1] - f[0]) * c
            } else {
                (two * f[0] - T::lit(5.0) * f[1] + T::lit(4.0) * f[2] - f[3]) * c
            };
            out[n - 1] = (two * f[n - 1] - T::lit(5.0) * f[n - 2] + T::lit(4.0) * f[n - 3] - f[n - 4]) * c;
        }
    }
}

fn diff_along<T: Scalar>(f: &Field<T>, order: usize, axis: Axis) -> Result<Field<T>> {
    let g = &f.grid;
    let (nr, nz) = g.shape();
    let mut out = Field::zeros(g);
    match axis {
        Axis::Z => {
            check_order(order, nz)?;
            let mut buf = vec![T::zero(); nz];
            for i in 0..nr {
                let line: Vec<T> = f.values.row(i).to_vec();
                diff_line(&line, &mut buf, g.hz, order, false);
                out.values.row_mut(i).assign(&ndarray::ArrayView1::from(&buf[..]));
            }
        }
        Axis::R => {
            check_order(order, nr)?;
            let mut buf = vec![T::zero(); nr];
            for j in 0..nz {
                let line: Vec<T> = f.values.column(j).to_vec();
                diff_line(&line, &mut buf, g.hr, order, g.has_axis());
                out.values.column_mut(j).assign(&ndarray::ArrayView1::from(&buf[..]));
            }
        }
    }
    Ok(out)
}

/// `∂_z^order f`; centered in the interior, one-sided at `z = 0, 1`.
pub fn diff_z<T: Scalar>(f: &Field<T>, order: usize) -> Result<Field<T>> {
    diff_along(f, order, Axis::Z)
}

/// `∂_r^order f`; on interior domains the axis row uses the even reflection.
pub fn diff_r<T: Scalar>(f: &Field<T>, order: usize) -> Result<Field<T>> {
    diff_along(f, order, Axis::R)
}

/// `L₅ f = f_rr + (3/r) f_r + f_zz`, the radial part of the five-dimensional
/// Laplacian. On the axis `(3/r)∂_r` is replaced by its limit `3∂_r²`.
pub fn apply_l5<T: Scalar>(f: &Field<T>) -> Result<Field<T>> {
    let g = &f.grid;
    let frr = diff_r(f, 2)?;
    let fr = diff_r(f, 1)?;
    let fzz = diff_z(f, 2)?;
    let three = T::lit(3.0);
    let mut out = Field::zeros(g);
    for i in 0..g.nr {
        let r = g.r_nodes[i];
        for j in 0..g.nz {
            let radial = if g.has_axis() && i == 0 {
                T::lit(4.0) * frr.values[[i, j]]
            } else {
                frr.values[[i, j]] + three / r * fr.values[[i, j]]
            };
            out.values[[i, j]] = radial + fzz.values[[i, j]];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn interior(n: usize) -> Arc<Grid<f64>> {
        Grid::new(Domain::interior(), n, n).unwrap()
    }

    fn exterior(r_max: f64, nr: usize, nz: usize) -> Arc<Grid<f64>> {
        Grid::new(Domain::exterior(r_max).unwrap(), nr, nz).unwrap()
    }

    #[test]
    fn domain_validation() {
        assert!(Domain::<f64>::exterior(1.0).is_err());
        assert!(Grid::new(Domain::<f64>::interior(), 7, 9).is_err());
        let bad = Domain {
            gamma1: 0.5,
            gamma2: 1.0,
            z_lo: 0.0,
            z_hi: 1.0,
            kind: DomainKind::Interior,
        };
        assert!(Grid::new(bad, 9, 9).is_err());
    }

    #[test]
    fn unit_integrals() {
        let g = interior(17);
        assert_relative_eq!(
            integrate_weighted(&Field::constant(&g, 1.0)).unwrap(),
            0.25,
            epsilon = 1e-14
        );
        let g = exterior(2.0, 17, 9);
        assert_relative_eq!(
            integrate_weighted(&Field::constant(&g, 1.0)).unwrap(),
            3.75,
            epsilon = 1e-13
        );
        // odd interval count exercises the 3/8 closure
        let g = exterior(2.0, 12, 10);
        assert_relative_eq!(
            integrate_weighted(&Field::constant(&g, 1.0)).unwrap(),
            3.75,
            epsilon = 1e-13
        );
    }

    #[test]
    fn gaussian_test_function_integral() {
        let alpha = 3.0;
        let g = exterior(8.0, 513, 129);
        let phi = Field::from_fn(&g, |r, z| (-alpha * r * r).exp() * (std::f64::consts::PI * z).sin());
        let exact = (-3.0f64).exp() * 4.0 / (9.0 * std::f64::consts::PI);
        assert_relative_eq!(integrate_weighted(&phi).unwrap(), exact, max_relative = 1e-6);
    }

    #[test]
    fn non_finite_rejected() {
        let g = interior(9);
        let mut f = Field::constant(&g, 1.0);
        f.values[[3, 3]] = f64::NAN;
        assert_eq!(integrate_weighted(&f), Err(Error::NonFiniteField));
    }

    #[test]
    fn z_derivatives() {
        let g = interior(33);
        let pi = std::f64::consts::PI;
        let f = Field::from_fn(&g, |_, z| (pi * z).sin());
        let d = diff_z(&f, 1).unwrap();
        let err = d
            .zip_with(&Field::from_fn(&g, |_, z| pi * (pi * z).cos()), |a, b| a - b)
            .unwrap()
            .max_abs();
        assert!(err < 2.0 * pi.powi(3) * g.hz * g.hz, "err = {err}");

        let c = Field::constant(&g, 2.5);
        assert_eq!(diff_z(&c, 1).unwrap().max_abs(), 0.0);

        let q = Field::from_fn(&g, |_, z| z * z);
        let d2 = diff_z(&q, 2).unwrap();
        assert!(d2.values.iter().all(|v| (v - 2.0).abs() < 1e-9));
    }

    #[test]
    fn r_derivatives() {
        let g = exterior(2.0, 65, 9);
        let f = Field::from_fn(&g, |r, _| r * r);
        let d = diff_r(&f, 1).unwrap();
        for i in 0..g.nr {
            assert_relative_eq!(d.at(i, 3), 2.0 * g.r_nodes[i], epsilon = 1e-10);
        }
        let e = Field::from_fn(&g, |r, _| (-r * r).exp());
        let de = diff_r(&e, 1).unwrap();
        let exact = -2.0 * (-1.0f64).exp();
        assert!((de.at(0, 0) - exact).abs() < 4.0 * g.hr * g.hr);
        assert_eq!(diff_r(&Field::constant(&g, -1.0), 1).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn l5_on_polynomials() {
        let g = interior(17);
        let f = Field::from_fn(&g, |r, _| r * r);
        let l = apply_l5(&f).unwrap();
        assert!(l.values.iter().all(|v| (v - 8.0).abs() < 1e-9));
        assert!(apply_l5(&Field::constant(&g, 1.0)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn l5_radial_harmonic_on_exterior() {
        let mut prev = f64::INFINITY;
        for n in [65, 129, 257] {
            let g = exterior(4.0, n, 9);
            let f = Field::from_fn(&g, |r, _| 1.0 / (r * r));
            let e = apply_l5(&f).unwrap().max_abs_interior();
            assert!(e < prev / 3.5, "{e} vs {prev}");
            prev = e;
        }
    }

    #[test]
    fn l5_reproduces_gaussian_image() {
        let alpha = 3.0;
        let pi = std::f64::consts::PI;
        let g = exterior(4.0, 129, 65);
        let phi = Field::from_fn(&g, |r, z| (-alpha * r * r).exp() * (pi * z).sin());
        let big_phi = Field::from_fn(&g, |r, z| {
            (4.0 * alpha * alpha * r * r - (8.0 * alpha + pi * pi)) * (-alpha * r * r).exp() * (pi * z).sin()
        });
        let err = apply_l5(&phi).unwrap().sub(&big_phi).unwrap().max_abs();
        assert!(err < 1e-2 * big_phi.max_abs(), "err = {err}");
    }

    #[test]
    fn f32_grid_integrates() {
        let g = Grid::<f32>::new(Domain::interior(), 17, 17).unwrap();
        let v = integrate_weighted(&Field::constant(&g, 1.0f32)).unwrap();
        assert!((v - 0.25).abs() < 1e-6);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = Field::constant(&interior(9), 1.0);
        let b = Field::constant(&interior(11), 1.0);
        assert_eq!(a.add(&b), Err(Error::GridMismatch));
    }
}
