//! Two-part model regularization: the model splits as m = m₁ + m₂ with a
//! total-variation prior on the blocky part m₁ and a second-order Tikhonov
//! prior on the smooth part m₂, tied to pointwise data through a weighted
//! least-squares term:
//!
//!   J(m₁, m₂) = w_tv·TV(m₁) + w_t·T₂(m₂) + λ Σᵢ aᵢ((m₁+m₂)ᵢ − rᵢ)²
//!
//! with TV(m) = Σ √((Dx m)² + (Dz m)²) and T₂(m) = Σ (Dxx m)² + 2(Dxz m)² +
//! (Dzz m)². Optional box bounds constrain the composite. The minimization
//! runs split variables p ≈ ∇m₁, t ≈ D₂m₂, w ≈ clamp(m₁+m₂) with
//! running-sum dual updates; the quadratic (m₁, m₂) subproblem is a real
//! symmetric banded system, factored once per call and reused across inner
//! iterations. The pair (c, −c) leaves the composite unchanged, so the
//! system carries a tiny diagonal shift to pin that free direction.

pub mod diff;

pub use diff::{DiffKind, DiffOp};

use crate::grid::{Grid2D, GridField};
use crate::linalg::HermBand;
use crate::model::Bounds;
use crate::scalar::Scalar;
use crate::{Result, WiprError};

/// Weights and step parameters of the split solver. The `gamma_*` values are
/// coupling strengths of the split penalties, not part of the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtConfig<T: Scalar> {
    pub tv_weight: T,
    pub tikh_weight: T,
    pub lambda_fit: T,
    pub inner_iters: usize,
    pub gamma_tv: T,
    pub gamma_tikh: T,
    pub gamma_bounds: T,
}

impl<T: Scalar> TtConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |v: T, name: &str| {
            if v >= T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(WiprError::InvalidConfig(format!("{name} must be finite and nonnegative, got {v}")))
            }
        };
        let positive = |v: T, name: &str| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(WiprError::InvalidConfig(format!("{name} must be finite and positive, got {v}")))
            }
        };
        nonneg(self.tv_weight, "tv_weight")?;
        nonneg(self.tikh_weight, "tikh_weight")?;
        positive(self.lambda_fit, "lambda_fit")?;
        positive(self.gamma_tv, "gamma_tv")?;
        positive(self.gamma_tikh, "gamma_tikh")?;
        positive(self.gamma_bounds, "gamma_bounds")?;
        if self.inner_iters == 0 {
            return Err(WiprError::InvalidConfig("inner_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Isotropic soft threshold of a gradient pair: scales (gx, gz) by
/// max(0, 1 − τ/‖g‖), mapping ‖g‖ ≤ τ to zero.
pub fn isotropic_shrink<T: Scalar>(gx: T, gz: T, tau: T) -> (T, T) {
    let r = (gx * gx + gz * gz).sqrt();
    if r <= tau || r == T::zero() {
        (T::zero(), T::zero())
    } else {
        let s = T::one() - tau / r;
        (gx * s, gz * s)
    }
}

/// Σ √((Dx m)² + (Dz m)²) over the grid.
pub fn tv_seminorm<T: Scalar>(grid: Grid2D<T>, m: &[T]) -> Result<T> {
    let dx = DiffOp::new(grid, DiffKind::Dx).apply(m)?;
    let dz = DiffOp::new(grid, DiffKind::Dz).apply(m)?;
    let mut s = T::zero();
    for (a, b) in dx.iter().zip(&dz) {
        s += (*a * *a + *b * *b).sqrt();
    }
    Ok(s)
}

/// Σ (Dxx m)² + 2(Dxz m)² + (Dzz m)² over the grid.
pub fn tikh2_seminorm<T: Scalar>(grid: Grid2D<T>, m: &[T]) -> Result<T> {
    let dxx = DiffOp::new(grid, DiffKind::Dxx).apply(m)?;
    let dxz = DiffOp::new(grid, DiffKind::Dxz).apply(m)?;
    let dzz = DiffOp::new(grid, DiffKind::Dzz).apply(m)?;
    let two = T::real(2.0);
    let mut s = T::zero();
    for i in 0..m.len() {
        s += dxx[i] * dxx[i] + two * dxz[i] * dxz[i] + dzz[i] * dzz[i];
    }
    Ok(s)
}

/// Split variables and running-sum duals, persisted across calls so a
/// sequence of related fits warm-starts instead of restarting.
#[derive(Debug, Clone)]
pub struct SplitState<T: Scalar> {
    grid: Grid2D<T>,
    m1: Vec<T>,
    m2: Vec<T>,
    px: Vec<T>,
    pz: Vec<T>,
    qx: Vec<T>,
    qz: Vec<T>,
    txx: Vec<T>,
    txz: Vec<T>,
    tzz: Vec<T>,
    qxx: Vec<T>,
    qxz: Vec<T>,
    qzz: Vec<T>,
    w: Vec<T>,
    qw: Vec<T>,
}

impl<T: Scalar> SplitState<T> {
    /// Starts from m₂ = initial model, m₁ = 0, all splits and duals at rest.
    pub fn new(initial: &GridField<T>) -> Self {
        let grid = initial.grid();
        let n = grid.n();
        let z = || vec![T::zero(); n];
        Self {
            grid,
            m1: z(),
            m2: initial.values().to_vec(),
            px: z(),
            pz: z(),
            qx: z(),
            qz: z(),
            txx: z(),
            txz: z(),
            tzz: z(),
            qxx: z(),
            qxz: z(),
            qzz: z(),
            w: initial.values().to_vec(),
            qw: z(),
        }
    }

    pub fn grid(&self) -> Grid2D<T> {
        self.grid
    }

    pub fn blocky_part(&self) -> &[T] {
        &self.m1
    }

    pub fn smooth_part(&self) -> &[T] {
        &self.m2
    }

    pub fn composite(&self) -> Vec<T> {
        self.m1.iter().zip(&self.m2).map(|(a, b)| *a + *b).collect()
    }
}

/// Outcome of one call: the composite iterate, the accepted objective trace
/// (first entry is the starting objective), and safeguard bookkeeping.
#[derive(Debug, Clone)]
pub struct TtReport<T: Scalar> {
    pub composite: Vec<T>,
    pub objective_trace: Vec<T>,
    pub accepted_iters: usize,
    pub reverted: bool,
}

struct Ops<T: Scalar> {
    dx: DiffOp<T>,
    dz: DiffOp<T>,
    dxx: DiffOp<T>,
    dxz: DiffOp<T>,
    dzz: DiffOp<T>,
}

impl<T: Scalar> Ops<T> {
    fn new(grid: Grid2D<T>) -> Self {
        Self {
            dx: DiffOp::new(grid, DiffKind::Dx),
            dz: DiffOp::new(grid, DiffKind::Dz),
            dxx: DiffOp::new(grid, DiffKind::Dxx),
            dxz: DiffOp::new(grid, DiffKind::Dxz),
            dzz: DiffOp::new(grid, DiffKind::Dzz),
        }
    }
}

fn objective<T: Scalar>(
    grid: Grid2D<T>,
    m1: &[T],
    m2: &[T],
    weights: &[T],
    targets: &[T],
    cfg: &TtConfig<T>,
    bounds: Option<&Bounds<T>>,
) -> Result<T> {
    let mut comp: Vec<T> = m1.iter().zip(m2).map(|(a, b)| *a + *b).collect();
    let mut m2_eval = m2.to_vec();
    if let Some(b) = bounds {
        let raw = comp.clone();
        b.clamp(&mut comp);
        for i in 0..comp.len() {
            m2_eval[i] += comp[i] - raw[i];
        }
    }
    let mut fit = T::zero();
    for i in 0..comp.len() {
        let d = comp[i] - targets[i];
        fit += weights[i] * d * d;
    }
    Ok(cfg.tv_weight * tv_seminorm(grid, m1)?
        + cfg.tikh_weight * tikh2_seminorm(grid, &m2_eval)?
        + cfg.lambda_fit * fit)
}

fn accumulate_gram<T: Scalar>(
    k: &mut HermBand<T>,
    op: &DiffOp<T>,
    weight: T,
    offset: usize,
    n: usize,
) {
    let mut buf = Vec::with_capacity(4);
    for r in 0..n {
        op.row(r, &mut buf);
        for p in 0..buf.len() {
            let (cp, vp) = buf[p];
            for q in 0..buf.len() {
                let (cq, vq) = buf[q];
                if cp > cq {
                    k.add(2 * cp + offset, 2 * cq + offset, weight * vp * vq);
                } else if cp == cq && p == q {
                    k.add(2 * cp + offset, 2 * cp + offset, weight * vp * vp);
                }
            }
        }
    }
}

/// Runs `cfg.inner_iters` split iterations against the pointwise fit
/// (weights aᵢ, targets rᵢ), continuing from `state`. A step that raises the
/// objective beyond a 1e-10 relative slack is undone and ends the loop. On
/// return the bound projection is folded into m₂, so the composite equals
/// m₁ + m₂ exactly and projecting it again changes nothing.
pub fn tt_solve<T: Scalar>(
    state: &mut SplitState<T>,
    fit_weights: &[T],
    fit_targets: &[T],
    cfg: &TtConfig<T>,
    bounds: Option<&Bounds<T>>,
) -> Result<TtReport<T>> {
    cfg.validate()?;
    let grid = state.grid;
    let n = grid.n();
    if fit_weights.len() != n {
        return Err(WiprError::DimensionMismatch { expected: n, got: fit_weights.len() });
    }
    if fit_targets.len() != n {
        return Err(WiprError::DimensionMismatch { expected: n, got: fit_targets.len() });
    }
    for &a in fit_weights {
        if !(a >= T::zero()) || !a.is_finite() {
            return Err(WiprError::InvalidConfig(format!(
                "fit weights must be finite and nonnegative, got {a}"
            )));
        }
    }
    if fit_targets.iter().any(|t| !t.is_finite()) {
        return Err(WiprError::InvalidConfig("fit targets must be finite".into()));
    }

    let ops = Ops::new(grid);
    let two = T::real(2.0);
    let lam = cfg.lambda_fit;
    let bounds_on = bounds.is_some();
    let gw = if bounds_on { cfg.gamma_bounds } else { T::zero() };

    let hb = 4 * grid.nz() + 1;
    let mut k = HermBand::<T>::zeros(2 * n, hb);
    for i in 0..n {
        let d = lam * fit_weights[i] + gw;
        k.add(2 * i, 2 * i, d);
        k.add(2 * i + 1, 2 * i + 1, d);
        k.add(2 * i + 1, 2 * i, d);
    }
    accumulate_gram(&mut k, &ops.dx, cfg.gamma_tv, 0, n);
    accumulate_gram(&mut k, &ops.dz, cfg.gamma_tv, 0, n);
    accumulate_gram(&mut k, &ops.dxx, cfg.gamma_tikh, 1, n);
    accumulate_gram(&mut k, &ops.dxz, two * cfg.gamma_tikh, 1, n);
    accumulate_gram(&mut k, &ops.dzz, cfg.gamma_tikh, 1, n);
    k.add_ridge(T::real(1e-12) * k.mean_diag());
    let chol = k.cholesky()?;

    let tau = cfg.tv_weight / (two * cfg.gamma_tv);
    let t_scale = cfg.gamma_tikh / (cfg.tikh_weight + cfg.gamma_tikh);

    let mut trace =
        vec![objective(grid, &state.m1, &state.m2, fit_weights, fit_targets, cfg, bounds)?];
    let mut reverted = false;
    let mut accepted = 0usize;

    for _ in 0..cfg.inner_iters {
        let snapshot = state.clone();

        let mut rhs1 = vec![T::zero(); n];
        let mut rhs2 = vec![T::zero(); n];
        for i in 0..n {
            let data = lam * fit_weights[i] * fit_targets[i];
            let wall = gw * (state.w[i] - state.qw[i]);
            rhs1[i] = data + wall;
            rhs2[i] = data + wall;
        }
        let sub = |a: &[T], b: &[T]| -> Vec<T> {
            a.iter().zip(b).map(|(x, y)| *x - *y).collect()
        };
        ops.dx.apply_transpose_accumulate(&sub(&state.px, &state.qx), cfg.gamma_tv, &mut rhs1);
        ops.dz.apply_transpose_accumulate(&sub(&state.pz, &state.qz), cfg.gamma_tv, &mut rhs1);
        ops.dxx.apply_transpose_accumulate(&sub(&state.txx, &state.qxx), cfg.gamma_tikh, &mut rhs2);
        ops.dxz.apply_transpose_accumulate(
            &sub(&state.txz, &state.qxz),
            two * cfg.gamma_tikh,
            &mut rhs2,
        );
        ops.dzz.apply_transpose_accumulate(&sub(&state.tzz, &state.qzz), cfg.gamma_tikh, &mut rhs2);

        let mut rhs = vec![T::zero(); 2 * n];
        for i in 0..n {
            rhs[2 * i] = rhs1[i];
            rhs[2 * i + 1] = rhs2[i];
        }
        let sol = chol.solve(&rhs);
        for i in 0..n {
            state.m1[i] = sol[2 * i];
            state.m2[i] = sol[2 * i + 1];
        }

        let gx = ops.dx.apply(&state.m1)?;
        let gz = ops.dz.apply(&state.m1)?;
        for i in 0..n {
            let vx = gx[i] + state.qx[i];
            let vz = gz[i] + state.qz[i];
            let (sx, sz) = isotropic_shrink(vx, vz, tau);
            state.px[i] = sx;
            state.pz[i] = sz;
            state.qx[i] = vx - sx;
            state.qz[i] = vz - sz;
        }
        for (op, t, q) in [
            (&ops.dxx, &mut state.txx, &mut state.qxx),
            (&ops.dxz, &mut state.txz, &mut state.qxz),
            (&ops.dzz, &mut state.tzz, &mut state.qzz),
        ] {
            let d = op.apply(&state.m2)?;
            for i in 0..n {
                let v = d[i] + q[i];
                t[i] = v * t_scale;
                q[i] = v - t[i];
            }
        }
        if let Some(b) = bounds {
            let mut v: Vec<T> =
                (0..n).map(|i| state.m1[i] + state.m2[i] + state.qw[i]).collect();
            let raw = v.clone();
            b.clamp(&mut v);
            for i in 0..n {
                state.w[i] = v[i];
                state.qw[i] = raw[i] - v[i];
            }
        }

        let j_new = objective(grid, &state.m1, &state.m2, fit_weights, fit_targets, cfg, bounds)?;
        let j_prev = *trace.last().unwrap();
        if j_new > j_prev + T::real(1e-10) * j_prev.max(T::one()) {
            *state = snapshot;
            reverted = true;
            break;
        }
        trace.push(j_new);
        accepted += 1;
    }

    if let Some(b) = bounds {
        let mut comp = state.composite();
        let raw = comp.clone();
        b.clamp(&mut comp);
        for i in 0..n {
            if comp[i] != raw[i] {
                state.m2[i] = comp[i] - state.m1[i];
                if state.m1[i] + state.m2[i] != comp[i] {
                    state.m1[i] = T::zero();
                    state.m2[i] = comp[i];
                }
            }
        }
    }
    let composite = state.composite();
    Ok(TtReport { composite, objective_trace: trace, accepted_iters: accepted, reverted })
}
