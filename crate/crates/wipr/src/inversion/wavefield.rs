//! Wavefield reconstruction: for fixed model, frequency, and trade-off λ,
//! the field solves the dense-data least-squares problem
//!
//!   min_u λ‖A u − b̄‖² + ‖P u − d̄‖²
//!
//! through its normal equations N u = λAᴴb̄ + Pᴴd̄ with N = λAᴴA + PᴴP.
//! N is Hermitian positive definite with half-bandwidth 2·nz; its banded
//! Cholesky factorization is built once and shared by every source and
//! right-hand side at this (model, frequency, λ).

use num_complex::Complex;
use num_traits::Zero;

use crate::helmholtz::HelmholtzSystem;
use crate::inversion::acquisition::AcquisitionSet;
use crate::linalg::{norm2, BandChol, HermBand};
use crate::scalar::Scalar;
use crate::{Result, WiprError};

pub struct WavefieldReconstructor<'a, T: Scalar> {
    system: &'a HelmholtzSystem<T>,
    acq: &'a AcquisitionSet<T>,
    lambda: T,
    chol: BandChol<Complex<T>>,
}

impl<'a, T: Scalar> WavefieldReconstructor<'a, T> {
    pub fn new(
        system: &'a HelmholtzSystem<T>,
        acq: &'a AcquisitionSet<T>,
        lambda: T,
    ) -> Result<Self> {
        if acq.grid() != system.grid() {
            return Err(WiprError::Geometry(
                "acquisition grid does not match the operator grid".into(),
            ));
        }
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(WiprError::InvalidConfig(format!(
                "reconstruction trade-off must be positive, got {lambda}"
            )));
        }
        let n = system.n();
        let nz = system.grid().nz();
        let mut nmat = HermBand::<Complex<T>>::zeros(n, 2 * nz);
        let lam = Complex::new(lambda, T::zero());
        let mut raw = Vec::with_capacity(10);
        let mut row: Vec<(usize, Complex<T>)> = Vec::with_capacity(5);
        for k in 0..n {
            raw.clear();
            system.push_row_entries(k, &mut raw);
            row.clear();
            for &(j, v) in &raw {
                if let Some(slot) = row.iter_mut().find(|(c, _)| *c == j) {
                    slot.1 = slot.1 + v;
                } else {
                    row.push((j, v));
                }
            }
            for p in 0..row.len() {
                let (cp, vp) = row[p];
                for q in 0..row.len() {
                    let (cq, vq) = row[q];
                    if cp > cq {
                        nmat.add(cp, cq, lam * vp.conj() * vq);
                    } else if p == q {
                        nmat.add(cp, cp, lam * vp.conj() * vp);
                    }
                }
            }
        }
        let one = Complex::new(T::one(), T::zero());
        for &r in acq.receiver_nodes() {
            nmat.add(r, r, one);
        }
        let chol = nmat.cholesky()?;
        Ok(Self { system, acq, lambda, chol })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// N x computed from the underlying operators: λAᴴ(Ax) + Pᴴ(Px).
    fn normal_apply(&self, x: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let ax = self.system.apply(x)?;
        let mut out = self.system.apply_adjoint(&ax)?;
        let lam = self.lambda;
        for v in out.iter_mut() {
            *v = *v * lam;
        }
        let px = self.acq.sample(x);
        self.acq.inject_adjoint(&px, &mut out);
        Ok(out)
    }

    /// Reconstructs the field against an augmented source b̄ (full grid) and
    /// augmented data d̄ (one value per receiver).
    pub fn reconstruct(&self, b_aug: &[Complex<T>], d_aug: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let n = self.system.n();
        if b_aug.len() != n {
            return Err(WiprError::DimensionMismatch { expected: n, got: b_aug.len() });
        }
        if d_aug.len() != self.acq.n_receivers() {
            return Err(WiprError::DimensionMismatch {
                expected: self.acq.n_receivers(),
                got: d_aug.len(),
            });
        }
        let mut rhs = self.system.apply_adjoint(b_aug)?;
        let lam = self.lambda;
        for v in rhs.iter_mut() {
            *v = *v * lam;
        }
        self.acq.inject_adjoint(d_aug, &mut rhs);
        let rnorm = norm2(&rhs);
        if rnorm == T::zero() {
            return Ok(vec![Complex::zero(); n]);
        }
        let mut u = self.chol.solve(&rhs);
        let tol_refine = T::real(1e-12);
        let tol_accept = T::real(1e-10);
        for _ in 0..4 {
            let nu = self.normal_apply(&u)?;
            let r: Vec<Complex<T>> = rhs.iter().zip(&nu).map(|(&a, &b)| a - b).collect();
            if norm2(&r) / rnorm <= tol_refine {
                return Ok(u);
            }
            let du = self.chol.solve(&r);
            for (ui, di) in u.iter_mut().zip(&du) {
                *ui = *ui + *di;
            }
        }
        let nu = self.normal_apply(&u)?;
        let r: Vec<Complex<T>> = rhs.iter().zip(&nu).map(|(&a, &b)| a - b).collect();
        let rel = norm2(&r) / rnorm;
        if rel <= tol_accept {
            Ok(u)
        } else {
            Err(WiprError::SolverAccuracy(format!(
                "field reconstruction stalled at relative residual {:.3e}",
                rel.to_f64().unwrap_or(f64::NAN)
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use crate::helmholtz::{assemble, omega_from_hz, PmlProfile, StencilConfig};
    use crate::inversion::acquisition::SourceSignature;
    use crate::model::ModelField;

    type C64 = Complex<f64>;

    fn setup() -> (ModelField<f64>, AcquisitionSet<f64>) {
        let g = Grid2D::new(15, 13, 20.0).unwrap();
        let m = crate::model::velocity_to_sq_slowness(g, &vec![2000.0; g.n()]).unwrap();
        let acq = AcquisitionSet::new(
            g,
            &[(7, 4)],
            &[(4, 8), (7, 8), (10, 8)],
            3,
            SourceSignature::Impulse,
        )
        .unwrap();
        (m, acq)
    }

    #[test]
    fn normal_matrix_matches_operator_form() {
        let (m, acq) = setup();
        let sys = assemble(&m, omega_from_hz(4.0), &PmlProfile::new(3, 6.0).unwrap(), StencilConfig::lumped()).unwrap();
        let rec = WavefieldReconstructor::new(&sys, &acq, 0.37).unwrap();
        // chol solve of N x should invert the operator-form N
        let x: Vec<C64> = (0..sys.n())
            .map(|i| C64::new((i as f64 * 0.19).sin(), (i as f64 * 0.41).cos()))
            .collect();
        let nx = rec.normal_apply(&x).unwrap();
        let back = rec.chol.solve(&nx);
        let err: f64 = back.iter().zip(&x).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let scale: f64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(err <= 1e-8 * scale, "round trip error {err}");
    }

    #[test]
    fn huge_lambda_recovers_forward_solution() {
        let (m, acq) = setup();
        let sys = assemble(&m, omega_from_hz(4.0), &PmlProfile::new(3, 6.0).unwrap(), StencilConfig::lumped()).unwrap();
        let b = acq.source_vector(0, 4.0);
        let u_fwd = sys.forward_solve(&b).unwrap();
        let rec = WavefieldReconstructor::new(&sys, &acq, 1e12).unwrap();
        let d = vec![C64::new(0.0, 0.0); acq.n_receivers()];
        let u = rec.reconstruct(&b, &d).unwrap();
        let diff: f64 = u.iter().zip(&u_fwd).map(|(a, c)| (a - c).norm_sqr()).sum::<f64>().sqrt();
        let scale: f64 = u_fwd.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(diff <= 1e-5 * scale, "relative deviation {}", diff / scale);
    }

    #[test]
    fn consistent_data_is_a_fixed_point() {
        let (m, acq) = setup();
        let sys = assemble(&m, omega_from_hz(4.0), &PmlProfile::new(3, 6.0).unwrap(), StencilConfig::lumped()).unwrap();
        let b = acq.source_vector(0, 4.0);
        let u_fwd = sys.forward_solve(&b).unwrap();
        let d = acq.sample(&u_fwd);
        let scale: f64 = u_fwd.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for lambda in [1e6, 1.0, 1e-8] {
            let rec = WavefieldReconstructor::new(&sys, &acq, lambda).unwrap();
            let u = rec.reconstruct(&b, &d).unwrap();
            let diff: f64 =
                u.iter().zip(&u_fwd).map(|(a, c)| (a - c).norm_sqr()).sum::<f64>().sqrt();
            assert!(diff <= 1e-9 * scale, "lambda {lambda}: deviation {}", diff / scale);
        }
    }

    #[test]
    fn rejects_bad_lambda_and_dimensions() {
        let (m, acq) = setup();
        let sys = assemble(&m, omega_from_hz(4.0), &PmlProfile::new(3, 6.0).unwrap(), StencilConfig::lumped()).unwrap();
        assert!(WavefieldReconstructor::new(&sys, &acq, 0.0).is_err());
        let rec = WavefieldReconstructor::new(&sys, &acq, 1.0).unwrap();
        let b = vec![C64::new(0.0, 0.0); sys.n()];
        assert!(rec.reconstruct(&b, &[C64::new(0.0, 0.0)]).is_err());
    }
}
