//! Solvers for `−L₅ψ = ω` under the model's boundary regimes.
//!
//! Every solver diagonalizes the second-difference operator in `z` (a cosine
//! transform for Neumann ends, a sine transform for Dirichlet ends, and a
//! symmetrized tridiagonal eigensolve for the Robin end) and then performs
//! one tridiagonal radial solve per `z`-mode. The radial factorizations are
//! computed once per solver and reused.
//!
//! On the exterior domain the solution is split as `ψ = ψ⁽¹⁾ + ψ⁽²⁾`:
//! `ψ⁽¹⁾` vanishes at `r = 1`, and `ψ⁽²⁾` is a sum of decaying homogeneous
//! modes whose amplitudes restore the Robin condition `ψ_r + βψ = 0`. The
//! truncation at `r_max` carries the exact decaying-mode condition
//! `ψ_r = σ_k ψ`, `σ_k = κK′(κr)/K(κr) − 1/r` (`σ₀ = −2/r`), so no
//! artificial reflection is introduced there.

use std::sync::Arc;

use ndarray::{s, Array2};

use crate::error::{Error, Result};
use crate::grid::{apply_l5, diff_r, diff_z, DomainKind, Field, Grid};
use crate::linalg::{symmetric_tridiagonal_eigen, TridiagLu};
use crate::scalar::Scalar;
use crate::specfun::{in_s_interior, robin_ratio, K_MAX, TOL_SPEC};

/// Boundary conditions for `−L₅ψ = ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcSpec<T> {
    /// `ψ = 0` on the whole boundary of the interior domain.
    DirichletHomog,
    /// Interior domain: `ψ = 0` at `r = 1` and `z = 1`, `ψ_z + βψ = 0` at `z = 0`.
    InteriorDirichletRobin { beta: T },
    /// Exterior domain: `ψ_r + βψ = 0` at `r = 1`, `ψ_z = 0` at `z = 0, 1`,
    /// decay as `r → ∞`.
    ExteriorNeumannRobin { beta: T },
    /// Interior domain: `ψ = −Mz` at `r = 1`, `ψ_z = −M` at `z = 0, 1`.
    /// Solved as `ψ = ψ_h − Mz` with `ψ_h` homogeneous, since `L₅(z) = 0`.
    DecayShiftM { m: T },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ZKind<T> {
    Neumann,
    Dirichlet,
    /// One-sided Robin at `z = 0`, Dirichlet at `z = 1`.
    RobinDirichlet(T),
}

/// Diagonalization `A_z = V Λ V⁻¹` of `−D_zz` restricted to the unknown
/// `z`-nodes `lo..hi`.
#[derive(Debug, Clone)]
struct ZTransform<T> {
    lo: usize,
    hi: usize,
    mu: Vec<T>,
    /// `V⁻¹`, modes × unknowns.
    fwd: Array2<T>,
    /// `V`, unknowns × modes.
    inv: Array2<T>,
    /// `ψ₀ = a ψ₁ + b ψ₂` for an eliminated Robin node at `z = 0`.
    robin_elim: Option<(T, T)>,
}

impl<T: Scalar> ZTransform<T> {
    fn new(grid: &Grid<T>, kind: ZKind<T>) -> Result<Self> {
        let nz = grid.nz;
        let h = grid.hz;
        let m = nz - 1;
        let pi = T::PI();
        let mf = T::from_usize_lossy(m);
        let mu_of = |k: usize| {
            let s = (pi * T::from_usize_lossy(k) / (T::lit(2.0) * mf)).sin();
            T::lit(4.0) / (h * h) * s * s
        };
        match kind {
            ZKind::Neumann => {
                let n = nz;
                let end = |j: usize| if j == 0 || j == m { T::lit(0.5) } else { T::one() };
                let cos = |j: usize, k: usize| (pi * T::from_usize_lossy((j * k) % (2 * m)) / mf).cos();
                let fwd = Array2::from_shape_fn((n, n), |(k, j)| T::lit(2.0) / mf * end(j) * cos(j, k));
                let inv = Array2::from_shape_fn((n, n), |(j, k)| end(k) * cos(j, k));
                Ok(Self {
                    lo: 0,
                    hi: nz,
                    mu: (0..n).map(mu_of).collect(),
                    fwd,
                    inv,
                    robin_elim: None,
                })
            }
            ZKind::Dirichlet => {
                let n = nz - 2;
                let sin = |j: usize, k: usize| (pi * T::from_usize_lossy((j * k) % (2 * m)) / mf).sin();
                let fwd = Array2::from_shape_fn((n, n), |(k, j)| T::lit(2.0) / mf * sin(j + 1, k + 1));
                let inv = Array2::from_shape_fn((n, n), |(j, k)| sin(j + 1, k + 1));
                Ok(Self {
                    lo: 1,
                    hi: nz - 1,
                    mu: (1..=n).map(mu_of).collect(),
                    fwd,
                    inv,
                    robin_elim: None,
                })
            }
            ZKind::RobinDirichlet(beta) => {
                // (−3ψ₀ + 4ψ₁ − ψ₂)/2h + βψ₀ = 0  ⇒  ψ₀ = (4ψ₁ − ψ₂)/d
                let d = T::lit(3.0) - T::lit(2.0) * h * beta;
                if !(d > T::one()) {
                    return Err(Error::GridTooCoarse(format!(
                        "Robin elimination needs h_z·β < 1, got {}",
                        h * beta
                    )));
                }
                let n = nz - 2;
                let h2 = h * h;
                let mut diag = vec![T::lit(2.0) / h2; n];
                let mut off = vec![-T::one() / h2; n - 1];
                diag[0] = (T::lit(2.0) - T::lit(4.0) / d) / h2;
                let c0 = (T::one() / d - T::one()) / h2;
                let b0 = -T::one() / h2;
                off[0] = -(c0 * b0).sqrt();
                let d0 = (b0 / c0).sqrt();
                let (mu, q) = symmetric_tridiagonal_eigen(&diag, &off)?;
                // A = D⁻¹ Q Λ Qᵀ D with D = diag(d0, 1, …, 1)
                let dscale = |j: usize| if j == 0 { d0 } else { T::one() };
                let fwd = Array2::from_shape_fn((n, n), |(k, j)| q[j][k] * dscale(j));
                let inv = Array2::from_shape_fn((n, n), |(j, k)| q[j][k] / dscale(j));
                Ok(Self {
                    lo: 1,
                    hi: nz - 1,
                    mu,
                    fwd,
                    inv,
                    robin_elim: Some((T::lit(4.0) / d, -T::one() / d)),
                })
            }
        }
    }

    fn modes(&self) -> usize {
        self.mu.len()
    }

    /// Rows of `values` transformed to mode space: `nr × modes`.
    fn forward(&self, values: &Array2<T>) -> Array2<T> {
        values.slice(s![.., self.lo..self.hi]).dot(&self.fwd.t())
    }

    /// Mode coefficients back to nodal values on the full grid.
    fn inverse(&self, hat: &Array2<T>, nz: usize) -> Array2<T> {
        let nr = hat.nrows();
        let mut out = Array2::zeros((nr, nz));
        out.slice_mut(s![.., self.lo..self.hi]).assign(&hat.dot(&self.inv.t()));
        if let Some((a, b)) = self.robin_elim {
            for i in 0..nr {
                out[[i, 0]] = a * out[[i, 1]] + b * out[[i, 2]];
            }
        }
        out
    }
}

/// Decay rate `σ = ψ_r/ψ` of the decaying radial mode with wavenumber `κ`.
fn decay_rate<T: Scalar>(kappa: T, r: T) -> Result<T> {
    if kappa <= T::zero() {
        Ok(-T::lit(2.0) / r)
    } else {
        Ok(-(robin_ratio(kappa * r)? + T::one()) / r)
    }
}

/// Radial tridiagonal for `−(D_rr + (3/r)D_r) + μ` on the unknown radial
/// nodes. Interior: nodes `0..nr−1` with the axis row and `ψ(1) = 0`.
/// Exterior: nodes `1..nr` with `ψ(1)` known and `ψ_r = σψ` at `r_max`.
/// Also returns the coefficient coupling the first unknown to node 0.
fn radial_bands<T: Scalar>(grid: &Grid<T>, mu: T, sigma: Option<T>) -> (Vec<T>, Vec<T>, Vec<T>, T) {
    let h = grid.hr;
    let h2 = h * h;
    let two = T::lit(2.0);
    let lower = |r: T| -T::one() / h2 + T::lit(1.5) / (h * r);
    let upper = |r: T| -T::one() / h2 - T::lit(1.5) / (h * r);
    let nr = grid.nr;
    match grid.domain.kind {
        DomainKind::Interior => {
            let n = nr - 1;
            let mut sub = vec![T::zero(); n - 1];
            let mut diag = vec![two / h2 + mu; n];
            let mut sup = vec![T::zero(); n - 1];
            diag[0] = T::lit(8.0) / h2 + mu;
            sup[0] = -T::lit(8.0) / h2;
            for i in 1..n {
                let r = grid.r_nodes[i];
                sub[i - 1] = lower(r);
                if i < n - 1 {
                    sup[i] = upper(r);
                }
            }
            (sub, diag, sup, T::zero())
        }
        DomainKind::Exterior => {
            let n = nr - 1;
            let mut sub = vec![T::zero(); n - 1];
            let mut diag = vec![two / h2 + mu; n];
            let mut sup = vec![T::zero(); n - 1];
            for m in 0..n {
                let r = grid.r_nodes[m + 1];
                if m > 0 {
                    sub[m - 1] = lower(r);
                }
                if m < n - 1 {
                    sup[m] = upper(r);
                }
            }
            let r_last = grid.r_nodes[nr - 1];
            let sigma = sigma.unwrap_or(T::zero());
            // ghost ψ_N = ψ_{N−2} + 2hσψ_{N−1}
            sub[n - 2] = -two / h2;
            diag[n - 1] = two / h2 + mu + upper(r_last) * two * h * sigma;
            (sub, diag, sup, lower(grid.r_nodes[1]))
        }
    }
}

/// Decaying homogeneous radial modes used to impose the exterior Robin
/// condition.
#[derive(Debug, Clone)]
struct RobinModes<T> {
    beta: T,
    /// `g_k` on all radial nodes, `g_k(1) = 1`.
    shapes: Vec<Vec<T>>,
    /// `D_r g_k(1) + β`.
    denominators: Vec<T>,
    /// `β − 1 − ratio(κ_k)` (`β − 2` for `k = 0`).
    analytic_denominators: Vec<T>,
}

/// Mode-by-mode direct solver for one grid and boundary specification.
#[derive(Debug, Clone)]
pub struct EllipticSolver<T> {
    grid: Arc<Grid<T>>,
    bc: BcSpec<T>,
    z: ZTransform<T>,
    radial: Vec<TridiagLu<T>>,
    robin: Option<RobinModes<T>>,
}

/// Result of an exterior Neumann–Robin solve.
#[derive(Debug, Clone)]
pub struct ExteriorSolution<T> {
    pub psi: Field<T>,
    /// Part vanishing at `r = 1`.
    pub psi1: Field<T>,
    /// Homogeneous decaying correction.
    pub psi2: Field<T>,
    /// `ψ̂⁽²⁾(1, k)` from the discrete Robin condition.
    pub amplitudes: Vec<T>,
    /// `C(k)K(κ_k)`, the same amplitude from the closed-form solvability
    /// formula `C(k) = −ψ̂⁽¹⁾_r(1,k) / [(β−1)K(κ_k) + κ_kK′(κ_k)]`.
    pub amplitudes_analytic: Vec<T>,
}

fn one_sided_r<T: Scalar>(f0: T, f1: T, f2: T, h: T) -> T {
    (-T::lit(3.0) * f0 + T::lit(4.0) * f1 - f2) / (T::lit(2.0) * h)
}

impl<T: Scalar> EllipticSolver<T> {
    pub fn new(grid: &Arc<Grid<T>>, bc: BcSpec<T>) -> Result<Self> {
        let kind = grid.domain.kind;
        let zkind = match (bc, kind) {
            (BcSpec::DirichletHomog, DomainKind::Interior) => ZKind::Dirichlet,
            (BcSpec::InteriorDirichletRobin { beta }, DomainKind::Interior) => {
                let report = in_s_interior(beta, K_MAX, T::lit(TOL_SPEC))?;
                if !report.member {
                    return Err(Error::ResonantRobin(format!(
                        "beta = {beta} lies within {} of an excluded value ({:?}, k = {})",
                        report.margin, report.nearest_family, report.nearest_k
                    )));
                }
                ZKind::RobinDirichlet(beta)
            }
            (BcSpec::ExteriorNeumannRobin { beta }, DomainKind::Exterior) => {
                if !(beta > T::zero()) {
                    return Err(Error::InvalidArgument("Robin coefficient must be positive".into()));
                }
                ZKind::Neumann
            }
            (BcSpec::DecayShiftM { .. }, DomainKind::Interior) => ZKind::Neumann,
            _ => {
                return Err(Error::InvalidDomain(format!(
                    "boundary specification {bc:?} does not apply to a {kind:?} grid"
                )))
            }
        };
        let z = ZTransform::new(grid, zkind)?;
        let r_max = grid.domain.gamma2;
        let mut radial = Vec::with_capacity(z.modes());
        let mut sigmas = Vec::with_capacity(z.modes());
        for &mu in &z.mu {
            let sigma = match kind {
                DomainKind::Exterior => Some(decay_rate(mu.max(T::zero()).sqrt(), r_max)?),
                DomainKind::Interior => None,
            };
            let (sub, diag, sup, _) = radial_bands(grid, mu, sigma);
            radial.push(TridiagLu::factor(&sub, &diag, &sup)?);
            sigmas.push(sigma);
        }
        let robin = match bc {
            BcSpec::ExteriorNeumannRobin { beta } => Some(Self::robin_modes(grid, &z, &radial, beta)?),
            _ => None,
        };
        Ok(Self {
            grid: grid.clone(),
            bc,
            z,
            radial,
            robin,
        })
    }

    fn robin_modes(grid: &Arc<Grid<T>>, z: &ZTransform<T>, radial: &[TridiagLu<T>], beta: T) -> Result<RobinModes<T>> {
        let nr = grid.nr;
        let tol = T::lit(TOL_SPEC);
        let mut shapes = Vec::with_capacity(z.modes());
        let mut denominators = Vec::with_capacity(z.modes());
        let mut analytic_denominators = Vec::with_capacity(z.modes());
        for (k, &mu) in z.mu.iter().enumerate() {
            let (_, _, _, couple) = radial_bands(grid, mu, None);
            let mut rhs = vec![T::zero(); nr - 1];
            rhs[0] = -couple;
            radial[k].solve_in_place(&mut rhs);
            let mut g = Vec::with_capacity(nr);
            g.push(T::one());
            g.extend_from_slice(&rhs);
            let den = one_sided_r(g[0], g[1], g[2], grid.hr) + beta;
            let kappa = mu.max(T::zero()).sqrt();
            let analytic = if k == 0 {
                beta - T::lit(2.0)
            } else {
                beta - T::one() - robin_ratio(kappa)?
            };
            if den.abs() < tol || analytic.abs() < tol {
                return Err(Error::RobinResonance {
                    mode: k,
                    denominator: den.abs().min(analytic.abs()).as_f64(),
                });
            }
            shapes.push(g);
            denominators.push(den);
            analytic_denominators.push(analytic);
        }
        Ok(RobinModes {
            beta,
            shapes,
            denominators,
            analytic_denominators,
        })
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn bc(&self) -> BcSpec<T> {
        self.bc
    }

    /// `z`-eigenvalues `μ_k` of the discrete operator.
    pub fn modal_eigenvalues(&self) -> &[T] {
        &self.z.mu
    }

    /// Normalized solvability denominators `β − 1 − ratio(κ_k)` per mode
    /// (exterior Robin only).
    pub fn robin_denominators(&self) -> Option<&[T]> {
        self.robin.as_ref().map(|r| r.analytic_denominators.as_slice())
    }

    /// Solves with homogeneous conditions (the `ψ⁽¹⁾` problem on the
    /// exterior domain).
    fn solve_homogeneous(&self, omega: &Field<T>) -> Array2<T> {
        let g = &self.grid;
        let nr = g.nr;
        let mut hat = self.z.forward(&omega.values);
        let (r_lo, r_hi) = match g.domain.kind {
            DomainKind::Interior => (0, nr - 1),
            DomainKind::Exterior => (1, nr),
        };
        let mut buf = vec![T::zero(); r_hi - r_lo];
        for k in 0..self.z.modes() {
            for (b, i) in buf.iter_mut().zip(r_lo..r_hi) {
                *b = hat[[i, k]];
            }
            self.radial[k].solve_in_place(&mut buf);
            for i in 0..nr {
                hat[[i, k]] = if (r_lo..r_hi).contains(&i) {
                    buf[i - r_lo]
                } else {
                    T::zero()
                };
            }
        }
        self.z.inverse(&hat, g.nz)
    }

    fn check(&self, omega: &Field<T>) -> Result<()> {
        if !Arc::ptr_eq(&omega.grid, &self.grid) && *omega.grid != *self.grid {
            return Err(Error::GridMismatch);
        }
        omega.ensure_finite()
    }

    /// Solves `−L₅ψ = ω`.
    pub fn solve(&self, omega: &Field<T>) -> Result<Field<T>> {
        match self.bc {
            BcSpec::ExteriorNeumannRobin { .. } => Ok(self.solve_exterior(omega)?.psi),
            BcSpec::DecayShiftM { m } => {
                self.check(omega)?;
                let mut psi = Field::from_values(&self.grid, self.solve_homogeneous(omega))?;
                for (j, &z) in self.grid.z_nodes.iter().enumerate() {
                    psi.values.column_mut(j).mapv_inplace(|v| v - m * z);
                }
                self.verify(&psi, omega)?;
                Ok(psi)
            }
            _ => {
                self.check(omega)?;
                let psi = Field::from_values(&self.grid, self.solve_homogeneous(omega))?;
                self.verify(&psi, omega)?;
                Ok(psi)
            }
        }
    }

    /// Exterior Neumann–Robin solve with the decomposition exposed.
    pub fn solve_exterior(&self, omega: &Field<T>) -> Result<ExteriorSolution<T>> {
        let robin = self
            .robin
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("not an exterior Neumann–Robin solver".into()))?;
        self.check(omega)?;
        let g = &self.grid;
        let (nr, nz) = g.shape();
        let psi1_vals = self.solve_homogeneous(omega);
        // modal radial derivative of ψ⁽¹⁾ at r = 1
        let hat1 = self.z.forward(&psi1_vals);
        let mut hat2 = Array2::zeros((nr, self.z.modes()));
        let mut amplitudes = Vec::with_capacity(self.z.modes());
        let mut amplitudes_analytic = Vec::with_capacity(self.z.modes());
        for k in 0..self.z.modes() {
            let dr1 = one_sided_r(hat1[[0, k]], hat1[[1, k]], hat1[[2, k]], g.hr);
            let c = -dr1 / robin.denominators[k];
            for i in 0..nr {
                hat2[[i, k]] = c * robin.shapes[k][i];
            }
            amplitudes.push(c);
            amplitudes_analytic.push(-dr1 / robin.analytic_denominators[k]);
        }
        let psi1 = Field::from_values(g, psi1_vals)?;
        let psi2 = Field::from_values(g, self.z.inverse(&hat2, nz))?;
        let psi = psi1.add(&psi2)?;
        self.verify(&psi, omega)?;
        Ok(ExteriorSolution {
            psi,
            psi1,
            psi2,
            amplitudes,
            amplitudes_analytic,
        })
    }

    /// Max-norm of `L₅ψ + ω` over non-boundary nodes.
    pub fn residual(&self, psi: &Field<T>, omega: &Field<T>) -> Result<T> {
        Ok(apply_l5(psi)?.add(omega)?.max_abs_interior())
    }

    fn verify(&self, psi: &Field<T>, omega: &Field<T>) -> Result<()> {
        psi.ensure_finite()?;
        let residual = self.residual(psi, omega)?;
        let g = &self.grid;
        let stencil = T::lit(8.0) / (g.hr * g.hr) + T::lit(4.0) / (g.hz * g.hz);
        let scale = omega.max_abs() + stencil * psi.max_abs();
        if residual > T::lit(1e4) * T::epsilon() * scale {
            return Err(Error::SolverNonConvergence {
                residual: residual.as_f64(),
            });
        }
        Ok(())
    }

    /// Beta of the exterior Robin condition, if any.
    pub fn beta(&self) -> Option<T> {
        self.robin.as_ref().map(|r| r.beta)
    }
}

/// `ψ` with `−L₅ψ = ω` and `ψ = 0` on the boundary of the interior domain.
/// `Δ₅⁻¹f` is `−solve_dirichlet(f)`.
pub fn solve_dirichlet<T: Scalar>(omega: &Field<T>) -> Result<Field<T>> {
    EllipticSolver::new(&omega.grid, BcSpec::DirichletHomog)?.solve(omega)
}

pub fn solve_interior_dirichlet_robin<T: Scalar>(omega: &Field<T>, beta: T) -> Result<Field<T>> {
    EllipticSolver::new(&omega.grid, BcSpec::InteriorDirichletRobin { beta })?.solve(omega)
}

pub fn solve_exterior_neumann_robin<T: Scalar>(omega: &Field<T>, beta: T) -> Result<ExteriorSolution<T>> {
    EllipticSolver::new(&omega.grid, BcSpec::ExteriorNeumannRobin { beta })?.solve_exterior(omega)
}

/// Max-norm residual of each boundary condition, evaluated with the grid's
/// one-sided derivative stencils.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryResiduals<T> {
    pub entries: Vec<(&'static str, T)>,
}

impl<T: Scalar> BoundaryResiduals<T> {
    pub fn max(&self) -> T {
        self.entries.iter().fold(T::zero(), |m, &(_, v)| m.max(v))
    }

    pub fn get(&self, name: &str) -> Option<T> {
        self.entries.iter().find(|(n, _)| *n == name).map(|&(_, v)| v)
    }
}

pub fn boundary_residuals<T: Scalar>(psi: &Field<T>, bc: BcSpec<T>) -> Result<BoundaryResiduals<T>> {
    let g = &psi.grid;
    let (nr, nz) = g.shape();
    let max_over = |it: &mut dyn Iterator<Item = T>| it.fold(T::zero(), |m, v| m.max(v.abs()));
    let col = |f: &Field<T>, j: usize| f.values.column(j).to_vec();
    let row = |f: &Field<T>, i: usize| f.values.row(i).to_vec();
    let mut entries = Vec::new();
    match bc {
        BcSpec::DirichletHomog => {
            entries.push(("dirichlet_r1", max_over(&mut row(psi, nr - 1).into_iter())));
            entries.push(("dirichlet_z0", max_over(&mut col(psi, 0).into_iter())));
            entries.push(("dirichlet_z1", max_over(&mut col(psi, nz - 1).into_iter())));
        }
        BcSpec::InteriorDirichletRobin { beta } => {
            let dz = diff_z(psi, 1)?;
            entries.push(("dirichlet_r1", max_over(&mut row(psi, nr - 1).into_iter())));
            entries.push(("dirichlet_z1", max_over(&mut col(psi, nz - 1).into_iter())));
            let robin = (0..nr).map(|i| dz.values[[i, 0]] + beta * psi.values[[i, 0]]);
            entries.push(("robin_z0", max_over(&mut robin.into_iter())));
        }
        BcSpec::ExteriorNeumannRobin { beta } => {
            let dr = diff_r(psi, 1)?;
            let dz = diff_z(psi, 1)?;
            let robin = (0..nz).map(|j| dr.values[[0, j]] + beta * psi.values[[0, j]]);
            entries.push(("robin_r1", max_over(&mut robin.into_iter())));
            entries.push(("neumann_z0", max_over(&mut col(&dz, 0).into_iter())));
            entries.push(("neumann_z1", max_over(&mut col(&dz, nz - 1).into_iter())));
        }
        BcSpec::DecayShiftM { m } => {
            let dz = diff_z(psi, 1)?;
            let shift = (0..nz).map(|j| psi.values[[nr - 1, j]] + m * g.z_nodes[j]);
            entries.push(("shift_r1", max_over(&mut shift.into_iter())));
            entries.push(("neumann_z0", max_over(&mut col(&dz, 0).into_iter().map(|v| v + m))));
            entries.push(("neumann_z1", max_over(&mut col(&dz, nz - 1).into_iter().map(|v| v + m))));
        }
    }
    Ok(BoundaryResiduals { entries })
}
