//! Sources, receivers, and synthetic data generation.
//!
//! Sources are point injections at grid nodes, optionally shaped by a Ricker
//! amplitude spectrum; receivers sample the field at grid nodes. Both must
//! sit inside the physical domain, clear of the absorbing frame.

use num_complex::Complex;
use num_traits::Zero;

use crate::grid::Grid2D;
use crate::helmholtz::{assemble, omega_from_hz, PmlProfile, StencilConfig};
use crate::io::ObservedData;
use crate::model::ModelField;
use crate::scalar::Scalar;
use crate::{Result, WiprError};

/// Source spectrum: flat impulse or a Ricker wavelet's magnitude spectrum
/// (2/√π)·(f²/p³)·exp(−f²/p²) with peak frequency p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceSignature<T: Scalar> {
    Impulse,
    Ricker { peak_hz: T },
}

impl<T: Scalar> SourceSignature<T> {
    pub fn amplitude(&self, f_hz: T) -> T {
        match *self {
            SourceSignature::Impulse => T::one(),
            SourceSignature::Ricker { peak_hz } => {
                let two = T::real(2.0);
                let fp2 = peak_hz * peak_hz;
                let ratio = f_hz * f_hz / fp2;
                two / T::PI().sqrt() * (f_hz * f_hz / (fp2 * peak_hz)) * (-ratio).exp()
            }
        }
    }
}

/// Grid positions of sources and receivers plus the source spectrum.
#[derive(Debug, Clone)]
pub struct AcquisitionSet<T: Scalar> {
    grid: Grid2D<T>,
    sources: Vec<usize>,
    receivers: Vec<usize>,
    signature: SourceSignature<T>,
}

impl<T: Scalar> AcquisitionSet<T> {
    /// Validates every position against the physical domain
    /// [margin, n−1−margin] on both axes; `margin` is normally the
    /// absorbing-layer thickness.
    pub fn new(
        grid: Grid2D<T>,
        sources: &[(usize, usize)],
        receivers: &[(usize, usize)],
        margin: usize,
        signature: SourceSignature<T>,
    ) -> Result<Self> {
        if sources.is_empty() {
            return Err(WiprError::Geometry("at least one source is required".into()));
        }
        if receivers.is_empty() {
            return Err(WiprError::Geometry("at least one receiver is required".into()));
        }
        if let SourceSignature::Ricker { peak_hz } = signature {
            if !(peak_hz > T::zero()) || !peak_hz.is_finite() {
                return Err(WiprError::InvalidConfig(format!(
                    "Ricker peak frequency must be positive, got {peak_hz}"
                )));
            }
        }
        let check = |(ix, iz): (usize, usize), what: &str| -> Result<usize> {
            let inside = |c: usize, nn: usize| c >= margin && c + margin < nn && c < nn;
            if !inside(ix, grid.nx()) || !inside(iz, grid.nz()) {
                return Err(WiprError::Geometry(format!(
                    "{what} at ({ix}, {iz}) lies outside the physical domain of a {}x{} grid with margin {margin}",
                    grid.nx(),
                    grid.nz()
                )));
            }
            Ok(grid.idx(ix, iz))
        };
        let sources = sources.iter().map(|&p| check(p, "source")).collect::<Result<Vec<_>>>()?;
        let receivers =
            receivers.iter().map(|&p| check(p, "receiver")).collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, sources, receivers, signature })
    }

    pub fn grid(&self) -> Grid2D<T> {
        self.grid
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn n_receivers(&self) -> usize {
        self.receivers.len()
    }

    pub fn source_nodes(&self) -> &[usize] {
        &self.sources
    }

    pub fn receiver_nodes(&self) -> &[usize] {
        &self.receivers
    }

    pub fn signature(&self) -> SourceSignature<T> {
        self.signature
    }

    /// Right-hand side of source s at frequency `f_hz`: the spectrum
    /// amplitude injected at the source node.
    pub fn source_vector(&self, s: usize, f_hz: T) -> Vec<Complex<T>> {
        let mut b = vec![Complex::zero(); self.grid.n()];
        b[self.sources[s]] = Complex::new(self.signature.amplitude(f_hz), T::zero());
        b
    }

    /// d = P u: the field sampled at the receiver nodes, in order.
    pub fn sample(&self, u: &[Complex<T>]) -> Vec<Complex<T>> {
        self.receivers.iter().map(|&r| u[r]).collect()
    }

    /// out += Pᴴ d: receiver values scattered back onto the grid.
    pub fn inject_adjoint(&self, d: &[Complex<T>], out: &mut [Complex<T>]) {
        for (&r, &v) in self.receivers.iter().zip(d) {
            out[r] = out[r] + v;
        }
    }

    /// Synthesizes observed data: one direct solve per (frequency, source),
    /// factoring each frequency's operator once.
    pub fn simulate_data(
        &self,
        model: &ModelField<T>,
        frequencies: &[T],
        pml: &PmlProfile<T>,
        stencil: StencilConfig<T>,
    ) -> Result<ObservedData<T>> {
        if model.grid() != self.grid {
            return Err(WiprError::InvalidModel(
                "model grid does not match the acquisition grid".into(),
            ));
        }
        let mut samples = Vec::with_capacity(frequencies.len());
        for &f in frequencies {
            let sys = assemble(model, omega_from_hz(f), pml, stencil)?;
            let mut per_source = Vec::with_capacity(self.n_sources());
            for s in 0..self.n_sources() {
                let b = self.source_vector(s, f);
                let u = sys.forward_solve(&b)?;
                per_source.push(self.sample(&u));
            }
            samples.push(per_source);
        }
        let data = ObservedData {
            frequencies: frequencies.to_vec(),
            n_sources: self.n_sources(),
            n_receivers: self.n_receivers(),
            samples,
        };
        data.validate()?;
        Ok(data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_validation() {
        let g = Grid2D::new(20, 15, 10.0).unwrap();
        let sig = SourceSignature::Impulse;
        assert!(AcquisitionSet::new(g, &[(10, 7)], &[(5, 5)], 4, sig).is_ok());
        // inside the absorbing frame
        assert!(AcquisitionSet::new(g, &[(3, 7)], &[(5, 5)], 4, sig).is_err());
        assert!(AcquisitionSet::new(g, &[(10, 7)], &[(16, 5)], 4, sig).is_err());
        // off the grid entirely
        assert!(AcquisitionSet::new(g, &[(25, 7)], &[(5, 5)], 0, sig).is_err());
        assert!(AcquisitionSet::new(g, &[], &[(5, 5)], 0, sig).is_err());
        assert!(
            AcquisitionSet::new(g, &[(10, 7)], &[(5, 5)], 4, SourceSignature::Ricker {
                peak_hz: -3.0
            })
            .is_err()
        );
    }

    #[test]
    fn ricker_peaks_at_peak_frequency() {
        let sig = SourceSignature::Ricker { peak_hz: 6.0 };
        let at_peak: f64 = sig.amplitude(6.0);
        for f in [2.0, 4.0, 5.0, 7.0, 9.0, 14.0] {
            assert!(sig.amplitude(f) < at_peak, "f = {f}");
        }
        // hand value at the peak: (2/√π)·(1/p)·e⁻¹
        let expect = 2.0 / std::f64::consts::PI.sqrt() / 6.0 * (-1.0_f64).exp();
        assert!((at_peak - expect).abs() < 1e-15);
    }

    #[test]
    fn sample_and_adjoint_are_consistent() {
        let g = Grid2D::new(12, 9, 5.0).unwrap();
        let acq = AcquisitionSet::new(
            g,
            &[(5, 4)],
            &[(3, 3), (6, 3), (3, 3)],
            2,
            SourceSignature::Impulse,
        )
        .unwrap();
        let u: Vec<Complex<f64>> =
            (0..g.n()).map(|i| Complex::new(i as f64, -(i as f64) * 0.5)).collect();
        let d = acq.sample(&u);
        assert_eq!(d.len(), 3);
        assert_eq!(d[0], d[2]);
        // ⟨Pu, d⟩ = ⟨u, Pᴴd⟩ with duplicate receivers contributing twice
        let dd: Vec<Complex<f64>> = vec![Complex::new(1.0, 2.0); 3];
        let lhs = crate::linalg::cdot(&dd, &d);
        let mut pt = vec![Complex::zero(); g.n()];
        acq.inject_adjoint(&dd, &mut pt);
        let rhs = crate::linalg::cdot(&pt, &u);
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm());
    }
}
