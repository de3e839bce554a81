//! Magnitude-fit machinery checked by finite differences and the two
//! majorization inequalities, over randomized dense problems.

mod common;

use common::{random_complex_vec, rng, C64};
use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use wipr::linalg::{cdot, DenseMatrix};
use wipr::phase_retrieval::{
    adjoint_mismatch, mm_solve, pr_gradient, pr_objective, pr_surrogate, unit_phase,
    LinearOperator, NormalEquations, PrProblem,
};

fn random_operator(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(rows, cols, |i, j| {
        let boost = if i == j { 1.5 } else { 0.0 };
        C64::new(rng.gen_range(-1.0..1.0) + boost, rng.gen_range(-1.0..1.0))
    })
}

fn random_problem(rng: &mut ChaCha8Rng) -> (DenseMatrix<f64>, Vec<f64>) {
    let cols = rng.gen_range(3..8);
    let rows = cols + rng.gen_range(0..4);
    let op = random_operator(rng, rows, cols);
    let x_true = random_complex_vec(rng, cols);
    let target: Vec<f64> = op.apply(&x_true).iter().map(|v| v.norm()).collect();
    (op, target)
}

/// Draws an evaluation point whose image stays clear of the |Lx| = 0 kinks,
/// where the objective is not differentiable.
fn smooth_point(rng: &mut ChaCha8Rng, op: &DenseMatrix<f64>) -> Vec<C64> {
    loop {
        let x = random_complex_vec(rng, op.cols());
        let lx = op.apply(&x);
        let min = lx.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        if min > 0.1 {
            return x;
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut r = rng(101);
    let mut checked = 0;
    while checked < 25 {
        let (op, target) = random_problem(&mut r);
        let x = smooth_point(&mut r, &op);
        let g = pr_gradient(&op, &x, &target);
        assert_eq!(g.zero_magnitude_entries, 0);
        let delta = random_complex_vec(&mut r, op.cols());
        let analytic = cdot(&g.gradient, &delta).re;
        if analytic.abs() < 1e-3 {
            continue;
        }
        let eps = 1e-6;
        let shift = |t: f64| -> Vec<C64> {
            x.iter().zip(&delta).map(|(&xi, &di)| xi + di * t).collect()
        };
        let fd = (pr_objective(&op, &shift(eps), &target)
            - pr_objective(&op, &shift(-eps), &target))
            / (2.0 * eps);
        let rel = (fd - analytic).abs() / analytic.abs().max(fd.abs());
        assert!(rel <= 1e-6, "problem {checked}: fd {fd}, analytic {analytic}, rel {rel}");
        checked += 1;
    }
}

#[test]
fn surrogate_touches_and_majorizes() {
    let mut r = rng(103);
    for trial in 0..120 {
        let (op, target) = random_problem(&mut r);
        let anchor = random_complex_vec(&mut r, op.cols());
        let f_anchor = pr_objective(&op, &anchor, &target);
        let q_anchor = pr_surrogate(&op, &anchor, &anchor, &target);
        assert!(
            (q_anchor - f_anchor).abs() <= 1e-13 * f_anchor.max(1.0),
            "trial {trial}: touch violated, q {q_anchor} vs f {f_anchor}"
        );
        for _ in 0..5 {
            let x = random_complex_vec(&mut r, op.cols());
            let f = pr_objective(&op, &x, &target);
            let q = pr_surrogate(&op, &x, &anchor, &target);
            assert!(q >= f - 1e-12, "trial {trial}: q {q} below f {f}");
        }
    }
}

#[test]
fn mm_trace_never_increases() {
    let mut r = rng(107);
    for trial in 0..100 {
        let (op, target) = random_problem(&mut r);
        let x0 = random_complex_vec(&mut r, op.cols());
        let state = mm_solve(&op, &x0, &target, 25, 0.0).unwrap();
        assert_eq!(state.trace[0], pr_objective(&op, &x0, &target));
        for w in state.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "trial {trial}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn mm_finishes_consistent_problems_from_a_near_start() {
    let mut r = rng(109);
    for trial in 0..20 {
        let cols = r.gen_range(3..7);
        let op = random_operator(&mut r, cols + 3, cols);
        let x_true = random_complex_vec(&mut r, cols);
        let target: Vec<f64> = op.apply(&x_true).iter().map(|v| v.norm()).collect();
        let x0: Vec<C64> = x_true
            .iter()
            .map(|&v| v * C64::new(1.0 + r.gen_range(-0.02..0.02), r.gen_range(-0.02..0.02)))
            .collect();
        let f0 = pr_objective(&op, &x0, &target);
        let state = mm_solve(&op, &x0, &target, 2000, 0.0).unwrap();
        assert!(
            state.objective <= 1e-8 * f0,
            "trial {trial}: stalled at {} from {}",
            state.objective,
            f0
        );
    }
}

#[test]
fn normal_equations_reproduce_consistent_targets() {
    let mut r = rng(113);
    for _ in 0..30 {
        let (op, _) = random_problem(&mut r);
        let ne = NormalEquations::build(&op).unwrap();
        assert!(!ne.ridged());
        let x = random_complex_vec(&mut r, op.cols());
        let target = op.apply(&x);
        let (x_hat, normal_residual) = ne.solve_ls(&target);
        let err: f64 = x_hat.iter().zip(&x).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let scale: f64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(err <= 1e-10 * scale.max(1.0));
        assert!(normal_residual <= 1e-10 * scale.max(1.0));
    }
}

#[test]
fn gram_ridge_turns_on_for_duplicated_columns() {
    let mut r = rng(127);
    let base = random_operator(&mut r, 6, 2);
    let op = DenseMatrix::from_fn(6, 4, |i, j| base.get(i, j % 2));
    let ne = NormalEquations::build(&op).unwrap();
    assert!(ne.ridged());
    let target = random_complex_vec(&mut r, 6);
    let (x, _) = ne.solve_ls(&target);
    assert!(x.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
}

struct BrokenAdjoint(DenseMatrix<f64>);

impl LinearOperator<f64> for BrokenAdjoint {
    fn rows(&self) -> usize {
        self.0.rows()
    }

    fn cols(&self) -> usize {
        self.0.cols()
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.0.apply(x)
    }

    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        self.0.apply_adjoint(y).into_iter().map(|v| v * 1.01).collect()
    }
}

#[test]
fn adjoint_mismatch_separates_correct_from_broken() {
    let mut r = rng(131);
    let op = random_operator(&mut r, 7, 5);
    assert!(adjoint_mismatch(&op) <= 1e-13);
    assert!(adjoint_mismatch(&BrokenAdjoint(op)) > 1e-3);
}

#[test]
fn unit_phase_is_a_unit_and_flags_zero() {
    let (u, z) = unit_phase(C64::new(0.0, 0.0));
    assert!(z);
    assert_eq!(u, C64::new(1.0, 0.0));
    let mut r = rng(137);
    for _ in 0..50 {
        let v = C64::new(r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
        if v.norm() == 0.0 {
            continue;
        }
        let (u, z) = unit_phase(v);
        assert!(!z);
        assert!((u.norm() - 1.0).abs() <= 1e-15);
        assert!((u * v.norm() - v).norm() <= 1e-15 * v.norm());
    }
}

#[test]
fn problem_wrapper_validates_and_delegates() {
    let mut r = rng(139);
    let (op, target) = random_problem(&mut r);
    let p = PrProblem::new(&op, target.clone()).unwrap();
    let x = random_complex_vec(&mut r, op.cols());
    assert_eq!(p.objective(&x), pr_objective(&op, &x, &target));
    let bad = vec![-1.0; op.rows()];
    assert!(PrProblem::new(&op, bad).is_err());
    let nan = vec![f64::NAN; op.rows()];
    assert!(PrProblem::new(&op, nan).is_err());
}

#[test]
fn mm_respects_the_relative_stop_rule() {
    let mut r = rng(149);
    let (op, target) = random_problem(&mut r);
    let x0 = random_complex_vec(&mut r, op.cols());
    let tight = mm_solve(&op, &x0, &target, 50, 0.0).unwrap();
    let loose = mm_solve(&op, &x0, &target, 50, 0.5).unwrap();
    assert!(loose.iterations <= tight.iterations);
    assert!(loose.iterations <= 2);
    let capped = mm_solve(&op, &x0, &target, 3, 0.0).unwrap();
    assert!(capped.iterations <= 3);
    assert_eq!(capped.trace.len(), capped.iterations + 1);
}
