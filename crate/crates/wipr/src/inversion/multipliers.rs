//! Running-sum multipliers of the iterative refinement loop.
//!
//! Each (frequency, source) pair owns a source-side multiplier b̄ over the
//! grid and a data-side multiplier d̄ over the receivers. Both accumulate
//! the per-iteration misfit increments in plain summation order, so replays
//! with identical inputs reproduce them bit for bit. Slots are keyed by the
//! global frequency index, letting a frequency shared by consecutive batches
//! either carry its sums forward or restart from zero.

use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::Scalar;
use crate::{Result, WiprError};

#[derive(Debug, Clone)]
struct FreqSlot<T: Scalar> {
    b: Vec<Vec<Complex<T>>>,
    d: Vec<Vec<Complex<T>>>,
}

#[derive(Debug, Clone)]
pub struct MultiplierState<T: Scalar> {
    slots: Vec<Option<FreqSlot<T>>>,
    n_sources: usize,
    n_field: usize,
    n_receivers: usize,
}

impl<T: Scalar> MultiplierState<T> {
    pub fn new(n_freqs: usize, n_sources: usize, n_field: usize, n_receivers: usize) -> Self {
        Self { slots: vec![None; n_freqs], n_sources, n_field, n_receivers }
    }

    fn check(&self, freq: usize, source: usize) -> Result<()> {
        if freq >= self.slots.len() {
            return Err(WiprError::InvalidConfig(format!(
                "frequency index {freq} out of range (have {})",
                self.slots.len()
            )));
        }
        if source >= self.n_sources {
            return Err(WiprError::InvalidConfig(format!(
                "source index {source} out of range (have {})",
                self.n_sources
            )));
        }
        Ok(())
    }

    fn slot_mut(&mut self, freq: usize) -> &mut FreqSlot<T> {
        let (ns, nf, nr) = (self.n_sources, self.n_field, self.n_receivers);
        self.slots[freq].get_or_insert_with(|| FreqSlot {
            b: vec![vec![Complex::zero(); nf]; ns],
            d: vec![vec![Complex::zero(); nr]; ns],
        })
    }

    /// Source-side multiplier b̄ of (freq, source); zeros until touched.
    pub fn b_slot(&mut self, freq: usize, source: usize) -> Result<&[Complex<T>]> {
        self.check(freq, source)?;
        Ok(&self.slot_mut(freq).b[source])
    }

    /// Data-side multiplier d̄ of (freq, source); zeros until touched.
    pub fn d_slot(&mut self, freq: usize, source: usize) -> Result<&[Complex<T>]> {
        self.check(freq, source)?;
        Ok(&self.slot_mut(freq).d[source])
    }

    /// b̄ += increment.
    pub fn add_b(&mut self, freq: usize, source: usize, inc: &[Complex<T>]) -> Result<()> {
        self.check(freq, source)?;
        if inc.len() != self.n_field {
            return Err(WiprError::DimensionMismatch { expected: self.n_field, got: inc.len() });
        }
        let slot = &mut self.slot_mut(freq).b[source];
        for (s, v) in slot.iter_mut().zip(inc) {
            *s = *s + *v;
        }
        Ok(())
    }

    /// d̄ += increment.
    pub fn add_d(&mut self, freq: usize, source: usize, inc: &[Complex<T>]) -> Result<()> {
        self.check(freq, source)?;
        if inc.len() != self.n_receivers {
            return Err(WiprError::DimensionMismatch {
                expected: self.n_receivers,
                got: inc.len(),
            });
        }
        let slot = &mut self.slot_mut(freq).d[source];
        for (s, v) in slot.iter_mut().zip(inc) {
            *s = *s + *v;
        }
        Ok(())
    }

    /// Zeros the given frequencies' multipliers.
    pub fn reset(&mut self, freqs: &[usize]) {
        for &f in freqs {
            if f < self.slots.len() {
                self.slots[f] = None;
            }
        }
    }

    /// Prepares a batch: with `carry` false every batch frequency restarts
    /// from zero; with `carry` true existing sums persist and only untouched
    /// frequencies start at zero.
    pub fn start_batch(&mut self, freqs: &[usize], carry: bool) {
        if !carry {
            self.reset(freqs);
        }
    }
}
