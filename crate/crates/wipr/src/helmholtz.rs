//! Discrete Helmholtz operator A(m) = Δ + ω² C diag(m) B on a 2D grid.
//!
//! Δ is the 5-point Laplacian in PML-stretched coordinates, written in the
//! symmetric flux form ∂x((sz/sx)∂x) + ∂z((sx/sz)∂z) so the boundary operator
//! C = diag(sx·sz) is a plain diagonal folded into the rows; inside the
//! physical domain all stretch factors are 1 and the rows reduce to the
//! textbook −4/h² center, 1/h² neighbor stencil. B is an optional anti-lumped
//! mass spreading with center weight w_c and neighbor weight (1−w_c)/4.
//! Homogeneous Dirichlet conditions apply on the outer ring (dropped
//! neighbors), with the PML absorbing before reflections matter.

use std::sync::OnceLock;

use num_complex::Complex;
use num_traits::Zero;

use crate::grid::Grid2D;
use crate::linalg::{norm2, BandLu};
use crate::model::ModelField;
use crate::scalar::Scalar;
use crate::{Result, WiprError};

/// Angular frequency from a temporal frequency in Hz.
pub fn omega_from_hz<T: Scalar>(f: T) -> T {
    T::real(2.0) * T::PI() * f
}

/// Absorbing-layer description: `thickness` cells on all four edges with a
/// quadratic damping ramp of peak `amplitude`. The stretch factor along an
/// axis is s(ξ) = 1 + j·amplitude·ξ² with ξ the normalized depth into the
/// layer; ξ = 0 (hence s = 1) strictly inside the physical domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlProfile<T: Scalar> {
    thickness: usize,
    amplitude: T,
}

impl<T: Scalar> Default for PmlProfile<T> {
    /// Ten absorbing cells with quadratic ramp peaking at 6.
    fn default() -> Self {
        Self { thickness: 10, amplitude: T::real(6.0) }
    }
}

impl<T: Scalar> PmlProfile<T> {
    pub fn new(thickness: usize, amplitude: T) -> Result<Self> {
        if !(amplitude >= T::zero()) || !amplitude.is_finite() {
            return Err(WiprError::InvalidConfig(format!(
                "PML amplitude must be finite and nonnegative, got {amplitude}"
            )));
        }
        Ok(Self { thickness, amplitude })
    }

    /// No absorbing layer: plain Dirichlet box.
    pub fn none() -> Self {
        Self { thickness: 0, amplitude: T::zero() }
    }

    pub fn thickness(&self) -> usize {
        self.thickness
    }

    pub fn amplitude(&self) -> T {
        self.amplitude
    }

    /// Stretch factor at a continuous position measured in cells along an
    /// axis with `nn` nodes.
    fn stretch_at(&self, pos: T, nn: usize) -> Complex<T> {
        if self.thickness == 0 {
            return Complex::new(T::one(), T::zero());
        }
        let t = T::real(self.thickness as f64);
        let left = t - pos;
        let right = pos - (T::real((nn - 1) as f64) - t);
        let d = left.max(right).max(T::zero());
        let xi = d / t;
        Complex::new(T::one(), self.amplitude * xi * xi)
    }

    /// Node and half-node stretch factors along one axis. Half factors are
    /// indexed so slot i is the position i − ½ (slot 0 sits just outside).
    fn stretch_axis(&self, nn: usize) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
        let nodes = (0..nn).map(|i| self.stretch_at(T::real(i as f64), nn)).collect();
        let half = T::real(0.5);
        let halves = (0..=nn)
            .map(|i| self.stretch_at(T::real(i as f64) - half, nn))
            .collect();
        (nodes, halves)
    }
}

/// Mass-matrix spreading: center weight w_c plus (1−w_c)/4 on each of the
/// four neighbors, so the weights always sum to 1. w_c = 1 is the lumped
/// (diagonal) mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilConfig<T: Scalar> {
    center_weight: T,
}

impl<T: Scalar> StencilConfig<T> {
    pub fn new(center_weight: T) -> Result<Self> {
        if !(center_weight > T::zero() && center_weight <= T::one()) {
            return Err(WiprError::InvalidConfig(format!(
                "mass center weight must lie in (0, 1], got {center_weight}"
            )));
        }
        Ok(Self { center_weight })
    }

    pub fn lumped() -> Self {
        Self { center_weight: T::one() }
    }

    pub fn center_weight(&self) -> T {
        self.center_weight
    }

    pub fn neighbor_weight(&self) -> T {
        (T::one() - self.center_weight) / T::real(4.0)
    }

    pub fn is_lumped(&self) -> bool {
        self.center_weight == T::one()
    }
}

/// Five-point stencil with per-row complex coefficients. Structural zeros
/// occupy the neighbor slots that would leave the grid, which keeps flat
/// index arithmetic safe against column wrap-around.
#[derive(Debug, Clone)]
struct Stencil5<T: Scalar> {
    nz: usize,
    c: Vec<Complex<T>>,
    zm: Vec<Complex<T>>,
    zp: Vec<Complex<T>>,
    xm: Vec<Complex<T>>,
    xp: Vec<Complex<T>>,
}

impl<T: Scalar> Stencil5<T> {
    fn zeros(n: usize, nz: usize) -> Self {
        Self {
            nz,
            c: vec![Complex::zero(); n],
            zm: vec![Complex::zero(); n],
            zp: vec![Complex::zero(); n],
            xm: vec![Complex::zero(); n],
            xp: vec![Complex::zero(); n],
        }
    }

    fn n(&self) -> usize {
        self.c.len()
    }

    fn apply(&self, u: &[Complex<T>], out: &mut [Complex<T>]) {
        let (n, nz) = (self.n(), self.nz);
        for i in 0..n {
            let mut s = self.c[i] * u[i];
            if i >= 1 {
                s = s + self.zm[i] * u[i - 1];
            }
            if i + 1 < n {
                s = s + self.zp[i] * u[i + 1];
            }
            if i >= nz {
                s = s + self.xm[i] * u[i - nz];
            }
            if i + nz < n {
                s = s + self.xp[i] * u[i + nz];
            }
            out[i] = s;
        }
    }

    fn apply_adjoint(&self, u: &[Complex<T>], out: &mut [Complex<T>]) {
        let (n, nz) = (self.n(), self.nz);
        for i in 0..n {
            let mut s = self.c[i].conj() * u[i];
            if i + 1 < n {
                s = s + self.zm[i + 1].conj() * u[i + 1];
            }
            if i >= 1 {
                s = s + self.zp[i - 1].conj() * u[i - 1];
            }
            if i + nz < n {
                s = s + self.xm[i + nz].conj() * u[i + nz];
            }
            if i >= nz {
                s = s + self.xp[i - nz].conj() * u[i - nz];
            }
            out[i] = s;
        }
    }

    /// Pushes the (column, coefficient) pairs of row i, structural zeros
    /// included when the neighbor exists.
    fn push_row(&self, i: usize, buf: &mut Vec<(usize, Complex<T>)>) {
        let (n, nz) = (self.n(), self.nz);
        buf.push((i, self.c[i]));
        if i >= 1 {
            buf.push((i - 1, self.zm[i]));
        }
        if i + 1 < n {
            buf.push((i + 1, self.zp[i]));
        }
        if i >= nz {
            buf.push((i - nz, self.xm[i]));
        }
        if i + nz < n {
            buf.push((i + nz, self.xp[i]));
        }
    }
}

/// Assembled Helmholtz operator at one (model, frequency) pair. Immutable
/// after assembly; the LU factorization is created on first use and shared.
pub struct HelmholtzSystem<T: Scalar> {
    grid: Grid2D<T>,
    omega: T,
    pml: PmlProfile<T>,
    stencil: StencilConfig<T>,
    lap: Stencil5<T>,
    mass: Stencil5<T>,
    c_diag: Vec<Complex<T>>,
    model: ModelField<T>,
    lu: OnceLock<std::result::Result<BandLu<Complex<T>>, String>>,
}

/// Builds the discrete operator for squared slowness `m` at angular
/// frequency `omega`.
pub fn assemble<T: Scalar>(
    m: &ModelField<T>,
    omega: T,
    pml: &PmlProfile<T>,
    stencil: StencilConfig<T>,
) -> Result<HelmholtzSystem<T>> {
    if !(omega > T::zero()) || !omega.is_finite() {
        return Err(WiprError::InvalidConfig(format!(
            "angular frequency must be positive, got {omega}"
        )));
    }
    let grid = m.grid();
    if 2 * pml.thickness() >= grid.nx().min(grid.nz()) {
        return Err(WiprError::InvalidConfig(format!(
            "PML thickness {} covers half or more of a {}x{} grid",
            pml.thickness(),
            grid.nx(),
            grid.nz()
        )));
    }
    let (nx, nz, n) = (grid.nx(), grid.nz(), grid.n());
    let (sx, sx_half) = pml.stretch_axis(nx);
    let (sz, sz_half) = pml.stretch_axis(nz);
    let inv_h2 = (grid.h() * grid.h()).recip();
    let om2 = omega * omega;
    let wc = stencil.center_weight();
    let wn = stencil.neighbor_weight();

    let mut lap = Stencil5::zeros(n, nz);
    let mut mass = Stencil5::zeros(n, nz);
    let mut c_diag = vec![Complex::zero(); n];

    for ix in 0..nx {
        for iz in 0..nz {
            let i = grid.idx(ix, iz);
            let fx_p = sz[iz] / sx_half[ix + 1] * inv_h2;
            let fx_m = sz[iz] / sx_half[ix] * inv_h2;
            let fz_p = sx[ix] / sz_half[iz + 1] * inv_h2;
            let fz_m = sx[ix] / sz_half[iz] * inv_h2;
            lap.c[i] = -(fx_p + fx_m + fz_p + fz_m);
            if ix + 1 < nx {
                lap.xp[i] = fx_p;
            }
            if ix >= 1 {
                lap.xm[i] = fx_m;
            }
            if iz + 1 < nz {
                lap.zp[i] = fz_p;
            }
            if iz >= 1 {
                lap.zm[i] = fz_m;
            }

            let c = sx[ix] * sz[iz];
            c_diag[i] = c;
            let base = c * (om2 * m.values()[i]);
            mass.c[i] = base * wc;
            if ix + 1 < nx {
                mass.xp[i] = base * wn;
            }
            if ix >= 1 {
                mass.xm[i] = base * wn;
            }
            if iz + 1 < nz {
                mass.zp[i] = base * wn;
            }
            if iz >= 1 {
                mass.zm[i] = base * wn;
            }
        }
    }

    Ok(HelmholtzSystem {
        grid,
        omega,
        pml: *pml,
        stencil,
        lap,
        mass,
        c_diag,
        model: m.clone(),
        lu: OnceLock::new(),
    })
}

impl<T: Scalar> HelmholtzSystem<T> {
    pub fn grid(&self) -> Grid2D<T> {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn omega(&self) -> T {
        self.omega
    }

    pub fn pml(&self) -> PmlProfile<T> {
        self.pml
    }

    pub fn stencil(&self) -> StencilConfig<T> {
        self.stencil
    }

    pub fn model(&self) -> &ModelField<T> {
        &self.model
    }

    /// Diagonal of the boundary operator C = diag(sx·sz).
    pub fn c_diag(&self) -> &[Complex<T>] {
        &self.c_diag
    }

    fn check_len(&self, v: &[Complex<T>]) -> Result<()> {
        if v.len() != self.n() {
            return Err(WiprError::DimensionMismatch { expected: self.n(), got: v.len() });
        }
        Ok(())
    }

    /// y = A u.
    pub fn apply(&self, u: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.check_len(u)?;
        let mut out = vec![Complex::zero(); self.n()];
        let mut tmp = vec![Complex::zero(); self.n()];
        self.lap.apply(u, &mut out);
        self.mass.apply(u, &mut tmp);
        for (o, t) in out.iter_mut().zip(&tmp) {
            *o = *o + *t;
        }
        Ok(out)
    }

    /// y = Aᴴ u (conjugate transpose).
    pub fn apply_adjoint(&self, u: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.check_len(u)?;
        let mut out = vec![Complex::zero(); self.n()];
        let mut tmp = vec![Complex::zero(); self.n()];
        self.lap.apply_adjoint(u, &mut out);
        self.mass.apply_adjoint(u, &mut tmp);
        for (o, t) in out.iter_mut().zip(&tmp) {
            *o = *o + *t;
        }
        Ok(out)
    }

    /// y = Δ u, the stretched Laplacian part only.
    pub fn apply_laplacian_part(&self, u: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.check_len(u)?;
        let mut out = vec![Complex::zero(); self.n()];
        self.lap.apply(u, &mut out);
        Ok(out)
    }

    /// y = ω² C diag(m) B u, the mass part only.
    pub fn apply_mass_part(&self, u: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.check_len(u)?;
        let mut out = vec![Complex::zero(); self.n()];
        self.mass.apply(u, &mut out);
        Ok(out)
    }

    /// y = B u, the bare mass-spreading operator.
    pub fn apply_b(&self, u: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.check_len(u)?;
        let (n, nz) = (self.n(), self.grid.nz());
        let wc = self.stencil.center_weight();
        let wn = self.stencil.neighbor_weight();
        let mut out = vec![Complex::zero(); n];
        for i in 0..n {
            let (ix, iz) = self.grid.coords(i);
            let mut s = u[i] * wc;
            if iz >= 1 {
                s = s + u[i - 1] * wn;
            }
            if iz + 1 < self.grid.nz() {
                s = s + u[i + 1] * wn;
            }
            if ix >= 1 {
                s = s + u[i - nz] * wn;
            }
            if ix + 1 < self.grid.nx() {
                s = s + u[i + nz] * wn;
            }
            out[i] = s;
        }
        Ok(out)
    }

    /// Pushes the combined (Δ + mass) entries of row i; duplicate columns
    /// appear once per part and accumulate downstream.
    pub fn push_row_entries(&self, i: usize, buf: &mut Vec<(usize, Complex<T>)>) {
        self.lap.push_row(i, buf);
        self.mass.push_row(i, buf);
    }

    /// Upper bound on the operator ∞-norm: the largest row sum of entry
    /// magnitudes. Sets the scale for penalty weights against the
    /// unit-magnitude sampling term.
    pub fn inf_norm(&self) -> T {
        let mut buf = Vec::with_capacity(12);
        let mut best = T::zero();
        for i in 0..self.n() {
            buf.clear();
            self.push_row_entries(i, &mut buf);
            let mut s = T::zero();
            for &(_, v) in buf.iter() {
                s += v.norm();
            }
            best = best.max(s);
        }
        best
    }

    /// Banded LU of A, built once and reused for every right-hand side.
    pub fn factorization(&self) -> Result<&BandLu<Complex<T>>> {
        let r = self.lu.get_or_init(|| {
            let nz = self.grid.nz();
            let mut buf = Vec::with_capacity(10);
            BandLu::factor_from_rows(self.n(), nz, nz, |i, out| {
                buf.clear();
                self.push_row_entries(i, &mut buf);
                out.extend_from_slice(&buf);
            })
            .map_err(|e| e.to_string())
        });
        match r {
            Ok(lu) => Ok(lu),
            Err(msg) => Err(WiprError::SingularOperator(msg.clone())),
        }
    }

    /// Solves A u = b directly, with one refinement pass; fails if the
    /// relative residual cannot be brought under 1e-10.
    pub fn forward_solve(&self, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.check_len(b)?;
        let bnorm = norm2(b);
        if bnorm == T::zero() {
            return Ok(vec![Complex::zero(); self.n()]);
        }
        let lu = self.factorization()?;
        let mut x = lu.solve(b);
        let tol_refine = T::real(1e-12);
        let tol_accept = T::real(1e-10);
        for _ in 0..3 {
            let ax = self.apply(&x)?;
            let r: Vec<Complex<T>> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
            let rel = norm2(&r) / bnorm;
            if rel <= tol_refine {
                return Ok(x);
            }
            let dx = lu.solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi = *xi + *di;
            }
        }
        let ax = self.apply(&x)?;
        let r: Vec<Complex<T>> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
        let rel = norm2(&r) / bnorm;
        if rel <= tol_accept {
            Ok(x)
        } else {
            Err(WiprError::SolverAccuracy(format!(
                "forward solve stalled at relative residual {:.3e} (pivot ratio {:.3e})",
                rel.to_f64().unwrap_or(f64::NAN),
                self.factorization()?.pivot_ratio()
            )))
        }
    }
}

/// Plain unstretched 5-point Laplacian with Dirichlet edges, independent of
/// any assembled system. Used by the bilinear model recovery, whose algebra
/// assumes the physical-domain stencil.
pub fn plain_laplacian_apply<T: Scalar>(grid: Grid2D<T>, u: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    if u.len() != grid.n() {
        return Err(WiprError::DimensionMismatch { expected: grid.n(), got: u.len() });
    }
    let inv_h2 = (grid.h() * grid.h()).recip();
    let four = T::real(4.0);
    let (nx, nz, n) = (grid.nx(), grid.nz(), grid.n());
    let mut out = vec![Complex::zero(); n];
    for i in 0..n {
        let (ix, iz) = grid.coords(i);
        let mut s = -u[i] * four;
        if iz >= 1 {
            s = s + u[i - 1];
        }
        if iz + 1 < nz {
            s = s + u[i + 1];
        }
        if ix >= 1 {
            s = s + u[i - nz];
        }
        if ix + 1 < nx {
            s = s + u[i + nz];
        }
        out[i] = s * inv_h2;
    }
    Ok(out)
}
