//! Phase retrieval by majorize–minimize: given a linear operator L and
//! magnitudes y ≥ 0, minimize f(x) = ½‖|Lx| − y‖².
//!
//! At an anchor point x^k the convex surrogate q(x) = ½‖Lx − ỹ^k‖² with
//! ỹ^k = y ∘ unit(Lx^k) satisfies q ≥ f everywhere and touches f at x^k
//! (reverse triangle inequality), so each least-squares step never increases
//! f. The Gram matrix LᴴL is factored once and reused across iterations.

use num_complex::Complex;
use num_traits::Zero;

use crate::linalg::{cdot, norm2, DenseHermChol, DenseMatrix};
use crate::scalar::Scalar;
use crate::{Result, WiprError};

/// Complex linear map exposing forward and adjoint products.
pub trait LinearOperator<T: Scalar> {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>>;
    fn apply_adjoint(&self, y: &[Complex<T>]) -> Vec<Complex<T>>;
}

impl<T: Scalar> LinearOperator<T> for DenseMatrix<T> {
    fn rows(&self) -> usize {
        DenseMatrix::rows(self)
    }

    fn cols(&self) -> usize {
        DenseMatrix::cols(self)
    }

    fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        DenseMatrix::apply(self, x)
    }

    fn apply_adjoint(&self, y: &[Complex<T>]) -> Vec<Complex<T>> {
        DenseMatrix::apply_adjoint(self, y)
    }
}

/// z/|z| extended by unit(0) = 1; the flag reports the zero case.
pub fn unit_phase<T: Scalar>(z: Complex<T>) -> (Complex<T>, bool) {
    let r = z.norm();
    if r == T::zero() {
        (Complex::new(T::one(), T::zero()), true)
    } else {
        (z / r, false)
    }
}

/// Largest relative defect of ⟨y, Lx⟩ = ⟨Lᴴy, x⟩ over a few deterministic
/// test vectors; a correct adjoint sits at rounding level.
pub fn adjoint_mismatch<T: Scalar, L: LinearOperator<T>>(op: &L) -> T {
    let mut worst = T::zero();
    for trial in 0..4 {
        let t = T::real(trial as f64);
        let x: Vec<Complex<T>> = (0..op.cols())
            .map(|i| {
                let a = T::real(i as f64 * 0.613) + t;
                Complex::new(a.sin(), (a + a).cos())
            })
            .collect();
        let y: Vec<Complex<T>> = (0..op.rows())
            .map(|i| {
                let a = T::real(i as f64 * 0.377) - t;
                Complex::new(a.cos(), (a * T::real(1.7)).sin())
            })
            .collect();
        let lhs = cdot(&y, &op.apply(&x));
        let rhs = cdot(&op.apply_adjoint(&y), &x);
        let scale = lhs.norm().max(rhs.norm()).max(T::one());
        worst = worst.max((lhs - rhs).norm() / scale);
    }
    worst
}

/// f(x) = ½ Σ (|Lx|_i − y_i)².
pub fn pr_objective<T: Scalar, L: LinearOperator<T>>(op: &L, x: &[Complex<T>], target_abs: &[T]) -> T {
    let lx = op.apply(x);
    objective_from_image(&lx, target_abs)
}

fn objective_from_image<T: Scalar>(lx: &[Complex<T>], target_abs: &[T]) -> T {
    let half = T::real(0.5);
    let mut s = T::zero();
    for (v, &y) in lx.iter().zip(target_abs) {
        let d = v.norm() - y;
        s += d * d;
    }
    half * s
}

/// Wirtinger gradient of f together with the count of rows where |Lx| = 0
/// and the phase convention unit(0) = 1 was invoked.
pub struct PrGradient<T: Scalar> {
    pub gradient: Vec<Complex<T>>,
    pub zero_magnitude_entries: usize,
}

pub fn pr_gradient<T: Scalar, L: LinearOperator<T>>(
    op: &L,
    x: &[Complex<T>],
    target_abs: &[T],
) -> PrGradient<T> {
    let lx = op.apply(x);
    let mut zeros = 0usize;
    let r: Vec<Complex<T>> = lx
        .iter()
        .zip(target_abs)
        .map(|(&v, &y)| {
            let (u, was_zero) = unit_phase(v);
            if was_zero {
                zeros += 1;
            }
            v - u * y
        })
        .collect();
    PrGradient { gradient: op.apply_adjoint(&r), zero_magnitude_entries: zeros }
}

/// ỹ = y ∘ unit(L·anchor), the anchored phase target of one MM step.
pub fn phase_anchor_target<T: Scalar>(lx_anchor: &[Complex<T>], target_abs: &[T]) -> (Vec<Complex<T>>, usize) {
    let mut zeros = 0usize;
    let t = lx_anchor
        .iter()
        .zip(target_abs)
        .map(|(&v, &y)| {
            let (u, was_zero) = unit_phase(v);
            if was_zero {
                zeros += 1;
            }
            u * y
        })
        .collect();
    (t, zeros)
}

/// q(x) = ½‖Lx − ỹ(anchor)‖², the surrogate majorizing f at the anchor.
pub fn pr_surrogate<T: Scalar, L: LinearOperator<T>>(
    op: &L,
    x: &[Complex<T>],
    anchor: &[Complex<T>],
    target_abs: &[T],
) -> T {
    let (target, _) = phase_anchor_target(&op.apply(anchor), target_abs);
    let lx = op.apply(x);
    let half = T::real(0.5);
    let mut s = T::zero();
    for (v, t) in lx.iter().zip(&target) {
        s += (v - t).norm_sqr();
    }
    half * s
}

/// Gram factorization of LᴴL with materialized columns, reusable across
/// right-hand sides. A rank-deficient Gram gets a relative ridge and the
/// solutions are then minimum-norm-like; `ridged` reports that.
pub struct NormalEquations<T: Scalar> {
    columns: Vec<Vec<Complex<T>>>,
    chol: DenseHermChol<T>,
    gram: Vec<Complex<T>>,
    ridged: bool,
}

impl<T: Scalar> NormalEquations<T> {
    pub fn build<L: LinearOperator<T>>(op: &L) -> Result<Self> {
        let (rows, cols) = (op.rows(), op.cols());
        if rows == 0 || cols == 0 {
            return Err(WiprError::InvalidConfig("operator has an empty dimension".into()));
        }
        let mut columns = Vec::with_capacity(cols);
        let mut e = vec![Complex::zero(); cols];
        for j in 0..cols {
            e[j] = Complex::new(T::one(), T::zero());
            columns.push(op.apply(&e));
            e[j] = Complex::zero();
        }
        let mut gram = vec![Complex::zero(); cols * cols];
        for i in 0..cols {
            for j in 0..=i {
                let g = cdot(&columns[i], &columns[j]);
                gram[i * cols + j] = g;
                gram[j * cols + i] = g.conj();
            }
        }
        let mut trace = T::zero();
        for i in 0..cols {
            trace += gram[i * cols + i].re;
        }
        if trace <= T::zero() {
            return Err(WiprError::SingularOperator("operator is identically zero".into()));
        }
        let mean_diag = trace / T::real(cols as f64);
        let mut ridged = false;
        let chol = match DenseHermChol::factor(&gram, cols) {
            Ok(c) => c,
            Err(_) => {
                let mut c = None;
                for exp in [1e-12, 1e-8, 1e-4] {
                    let ridge = T::real(exp) * mean_diag;
                    let mut g = gram.clone();
                    for i in 0..cols {
                        g[i * cols + i] += Complex::new(ridge, T::zero());
                    }
                    if let Ok(f) = DenseHermChol::factor(&g, cols) {
                        ridged = true;
                        c = Some(f);
                        break;
                    }
                }
                c.ok_or_else(|| {
                    WiprError::SingularOperator("normal equations remain indefinite after ridging".into())
                })?
            }
        };
        Ok(Self { columns, chol, gram, ridged })
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn ridged(&self) -> bool {
        self.ridged
    }

    pub fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let rows = self.columns[0].len();
        let mut out = vec![Complex::zero(); rows];
        for (j, col) in self.columns.iter().enumerate() {
            let xj = x[j];
            for (o, &c) in out.iter_mut().zip(col) {
                *o = *o + c * xj;
            }
        }
        out
    }

    /// Solves LᴴL x = Lᴴ target and reports the relative residual of the
    /// normal equations themselves.
    pub fn solve_ls(&self, target: &[Complex<T>]) -> (Vec<Complex<T>>, T) {
        let ncols = self.cols();
        let rhs: Vec<Complex<T>> = self.columns.iter().map(|col| cdot(col, target)).collect();
        let x = self.chol.solve(&rhs);
        let mut res: Vec<Complex<T>> = vec![Complex::zero(); ncols];
        for i in 0..ncols {
            let mut s: Complex<T> = Complex::zero();
            for j in 0..ncols {
                s = s + self.gram[i * ncols + j] * x[j];
            }
            res[i] = s - rhs[i];
        }
        let denom = norm2(&rhs).max(T::real(1e-300));
        (x, norm2(&res) / denom)
    }
}

/// One majorize–minimize step from `x` against `target_abs`.
pub struct MmStep<T: Scalar> {
    pub x: Vec<Complex<T>>,
    pub objective: T,
    pub zero_magnitude_entries: usize,
    pub normal_residual: T,
}

pub fn mm_step<T: Scalar>(ne: &NormalEquations<T>, x: &[Complex<T>], target_abs: &[T]) -> MmStep<T> {
    let lx = ne.apply(x);
    let (target, zeros) = phase_anchor_target(&lx, target_abs);
    let (x_next, normal_residual) = ne.solve_ls(&target);
    let objective = objective_from_image(&ne.apply(&x_next), target_abs);
    MmStep { x: x_next, objective, zero_magnitude_entries: zeros, normal_residual }
}

/// Full MM run: objective trace, stop on |f_k − f_{k−1}| ≤ tol·max(1, f₀)
/// or after `max_iters` steps.
pub struct PrState<T: Scalar> {
    pub x: Vec<Complex<T>>,
    pub objective: T,
    pub iterations: usize,
    pub trace: Vec<T>,
    pub zero_phase_events: usize,
    pub ridged: bool,
}

pub fn mm_solve<T: Scalar, L: LinearOperator<T>>(
    op: &L,
    x0: &[Complex<T>],
    target_abs: &[T],
    max_iters: usize,
    tol: T,
) -> Result<PrState<T>> {
    validate_problem(op, x0, target_abs)?;
    let ne = NormalEquations::build(op)?;
    let f0 = pr_objective(op, x0, target_abs);
    let mut trace = vec![f0];
    let mut x = x0.to_vec();
    let mut f_prev = f0;
    let mut zero_events = 0usize;
    let mut iterations = 0usize;
    let floor = tol * T::one().max(f0);
    for _ in 0..max_iters {
        let step = mm_step(&ne, &x, target_abs);
        x = step.x;
        zero_events += step.zero_magnitude_entries;
        trace.push(step.objective);
        iterations += 1;
        if (f_prev - step.objective).abs() <= floor {
            f_prev = step.objective;
            break;
        }
        f_prev = step.objective;
    }
    Ok(PrState {
        x,
        objective: f_prev,
        iterations,
        trace,
        zero_phase_events: zero_events,
        ridged: ne.ridged(),
    })
}

fn validate_problem<T: Scalar, L: LinearOperator<T>>(
    op: &L,
    x0: &[Complex<T>],
    target_abs: &[T],
) -> Result<()> {
    if x0.len() != op.cols() {
        return Err(WiprError::DimensionMismatch { expected: op.cols(), got: x0.len() });
    }
    if target_abs.len() != op.rows() {
        return Err(WiprError::DimensionMismatch { expected: op.rows(), got: target_abs.len() });
    }
    for &y in target_abs {
        if !(y >= T::zero()) || !y.is_finite() {
            return Err(WiprError::InvalidConfig(format!(
                "target magnitudes must be finite and nonnegative, got {y}"
            )));
        }
    }
    Ok(())
}

/// Operator plus validated magnitude data.
pub struct PrProblem<'a, T: Scalar, L: LinearOperator<T>> {
    op: &'a L,
    target_abs: Vec<T>,
}

impl<'a, T: Scalar, L: LinearOperator<T>> PrProblem<'a, T, L> {
    pub fn new(op: &'a L, target_abs: Vec<T>) -> Result<Self> {
        let probe = vec![Complex::zero(); op.cols()];
        validate_problem(op, &probe, &target_abs)?;
        Ok(Self { op, target_abs })
    }

    pub fn operator(&self) -> &L {
        self.op
    }

    pub fn target_abs(&self) -> &[T] {
        &self.target_abs
    }

    pub fn objective(&self, x: &[Complex<T>]) -> T {
        pr_objective(self.op, x, &self.target_abs)
    }

    pub fn gradient(&self, x: &[Complex<T>]) -> PrGradient<T> {
        pr_gradient(self.op, x, &self.target_abs)
    }

    pub fn surrogate(&self, x: &[Complex<T>], anchor: &[Complex<T>]) -> T {
        pr_surrogate(self.op, x, anchor, &self.target_abs)
    }

    pub fn solve(&self, x0: &[Complex<T>], max_iters: usize, tol: T) -> Result<PrState<T>> {
        mm_solve(self.op, x0, &self.target_abs, max_iters, tol)
    }
}
