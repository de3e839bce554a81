//! Frequency-domain waveform inversion with relaxed wavefields.
//!
//! Each iteration reconstructs, per frequency and source, the field that
//! balances the wave equation against the recorded data (weight λ), then
//! refits the squared slowness from the virtual-source split of the
//! operator, and finally pushes the remaining equation and data misfits
//! into running-sum multipliers that augment the next iteration's right-hand
//! sides. The model step is either the plain least-squares fit or its
//! phase-retrieval variant that keeps only data magnitudes; an optional
//! blocky-plus-smooth regularization replaces the raw fit. Frequencies are
//! processed in batches, lowest first.

pub mod acquisition;
pub mod log;
pub mod multipliers;
pub mod update;
pub mod wavefield;

pub use acquisition::{AcquisitionSet, SourceSignature};
pub use log::{read_csv, write_csv, IterationRecord, CSV_HEADER};
pub use multipliers::MultiplierState;
pub use update::{
    bilinear_recovery, model_error, phase_align, update_model_ls, update_model_pr,
    virtual_source, BilinearRecovery, ModelUpdate, VirtualSource,
};
pub use wavefield::WavefieldReconstructor;

use std::fmt;
use std::time::Instant;

use num_complex::Complex;

use crate::grid::{Grid2D, GridField};
use crate::helmholtz::{assemble, omega_from_hz, HelmholtzSystem, PmlProfile, StencilConfig};
use crate::io::ObservedData;
use crate::linalg::norm2_sq;
use crate::model::{Bounds, ModelField};
use crate::regularization::{tt_solve, SplitState, TtConfig};
use crate::scalar::Scalar;
use crate::{Result, WiprError};

/// Model-update rule of one batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Irwri,
    Wipr,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Irwri => write!(f, "irwri"),
            Mode::Wipr => write!(f, "wipr"),
        }
    }
}

/// Which update rule each batch uses. `WiprFirstBatch` runs the
/// phase-retrieval update on the lowest batch only, then switches to the
/// plain update with the cycle-skip risk already defused.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Irwri,
    Wipr,
    WiprFirstBatch,
}

impl Protocol {
    pub fn mode_for_batch(&self, batch: usize) -> Mode {
        match (self, batch) {
            (Protocol::Irwri, _) => Mode::Irwri,
            (Protocol::Wipr, _) => Mode::Wipr,
            (Protocol::WiprFirstBatch, 0) => Mode::Wipr,
            (Protocol::WiprFirstBatch, _) => Mode::Irwri,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::Irwri => write!(f, "irwri"),
            Protocol::Wipr => write!(f, "wipr"),
            Protocol::WiprFirstBatch => write!(f, "wipr-first-batch"),
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = WiprError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "irwri" => Ok(Protocol::Irwri),
            "wipr" => Ok(Protocol::Wipr),
            "wipr-first-batch" => Ok(Protocol::WiprFirstBatch),
            other => Err(WiprError::InvalidConfig(format!(
                "unknown mode '{other}' (expected irwri, wipr, or wipr-first-batch)"
            ))),
        }
    }
}

/// Both residuals must reach their thresholds; equality counts as reached.
pub fn stopping_check<T: Scalar>(
    source_residual: T,
    data_residual: T,
    eps_source: T,
    eps_data: T,
) -> bool {
    source_residual <= eps_source && data_residual <= eps_data
}

#[derive(Debug, Clone)]
pub struct InversionConfig<T: Scalar> {
    pub protocol: Protocol,
    /// Frequency batches in Hz, processed in order.
    pub schedule: Vec<Vec<T>>,
    /// Base of the reconstruction trade-off. Unless overridden, each batch
    /// uses λ = lambda0 / ‖A‖² at the batch-start model, keeping the
    /// wave-equation weight that fraction of the unit data weight.
    pub lambda0: T,
    pub lambda_override: Option<T>,
    /// Iteration cap per batch.
    pub max_iters: usize,
    pub eps_source: T,
    pub eps_data: T,
    pub bounds: Option<Bounds<T>>,
    /// First iteration (1-based) at which bounds apply.
    pub bounds_activation_iter: usize,
    pub tt: Option<TtConfig<T>>,
    /// Keep multiplier sums of a frequency shared with the previous batch.
    pub carry_multipliers: bool,
    pub pml: PmlProfile<T>,
    pub stencil: StencilConfig<T>,
    /// Record wall time per iteration; off by default so reruns are
    /// byte-identical.
    pub log_timing: bool,
}

impl<T: Scalar> InversionConfig<T> {
    pub fn new(schedule: Vec<Vec<T>>) -> Self {
        Self {
            protocol: Protocol::Wipr,
            schedule,
            lambda0: T::real(1e-2),
            lambda_override: None,
            max_iters: 15,
            eps_source: T::real(1e-3),
            eps_data: T::real(1e-5),
            bounds: None,
            bounds_activation_iter: 1,
            tt: None,
            carry_multipliers: false,
            pml: PmlProfile::default(),
            stencil: StencilConfig::lumped(),
            log_timing: false,
        }
    }

    /// Checks the configuration against the data and resolves every
    /// scheduled frequency to its index in the data file.
    pub fn resolved_batches(&self, data: &ObservedData<T>, grid: Grid2D<T>) -> Result<Vec<Vec<usize>>> {
        if self.schedule.is_empty() {
            return Err(WiprError::InvalidConfig("schedule has no batches".into()));
        }
        if !(self.lambda0 > T::zero()) || !self.lambda0.is_finite() {
            return Err(WiprError::InvalidConfig(format!(
                "lambda0 must be positive, got {}",
                self.lambda0
            )));
        }
        if let Some(l) = self.lambda_override {
            if !(l > T::zero()) || !l.is_finite() {
                return Err(WiprError::InvalidConfig(format!(
                    "lambda override must be positive, got {l}"
                )));
            }
        }
        if self.max_iters == 0 {
            return Err(WiprError::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.eps_source >= T::zero()) || !(self.eps_data >= T::zero()) {
            return Err(WiprError::InvalidConfig("stopping thresholds must be nonnegative".into()));
        }
        if self.bounds_activation_iter == 0 {
            return Err(WiprError::InvalidConfig(
                "bounds_activation_iter is 1-based and must be at least 1".into(),
            ));
        }
        if let Some(b) = &self.bounds {
            if b.n() != grid.n() {
                return Err(WiprError::DimensionMismatch { expected: grid.n(), got: b.n() });
            }
        }
        if let Some(tt) = &self.tt {
            tt.validate()?;
        }
        let mut batches = Vec::with_capacity(self.schedule.len());
        for (bi, batch) in self.schedule.iter().enumerate() {
            if batch.is_empty() {
                return Err(WiprError::InvalidConfig(format!("batch {bi} is empty")));
            }
            let mut idxs = Vec::with_capacity(batch.len());
            for &f in batch {
                let idx = data.frequency_index(f).ok_or_else(|| {
                    WiprError::InvalidConfig(format!(
                        "scheduled frequency {f} Hz is not present in the data"
                    ))
                })?;
                idxs.push(idx);
            }
            batches.push(idxs);
        }
        Ok(batches)
    }
}

/// Final model plus the full iteration history and per-batch snapshots.
#[derive(Debug, Clone)]
pub struct InversionOutcome<T: Scalar> {
    pub model: ModelField<T>,
    pub records: Vec<IterationRecord>,
    pub batch_models: Vec<ModelField<T>>,
    pub warnings: Vec<String>,
}

fn to_f64<T: Scalar>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

pub fn run_inversion<T: Scalar>(
    data: &ObservedData<T>,
    acq: &AcquisitionSet<T>,
    initial: &ModelField<T>,
    reference: Option<&ModelField<T>>,
    cfg: &InversionConfig<T>,
) -> Result<InversionOutcome<T>> {
    let grid = initial.grid();
    if acq.grid() != grid {
        return Err(WiprError::Geometry("acquisition grid does not match the model grid".into()));
    }
    if let Some(r) = reference {
        if r.grid() != grid {
            return Err(WiprError::InvalidModel("reference model grid mismatch".into()));
        }
    }
    data.validate()?;
    if data.n_sources != acq.n_sources() || data.n_receivers != acq.n_receivers() {
        return Err(WiprError::Geometry(format!(
            "data holds {}x{} source/receiver traces but the acquisition has {}x{}",
            data.n_sources,
            data.n_receivers,
            acq.n_sources(),
            acq.n_receivers()
        )));
    }
    let batches = cfg.resolved_batches(data, grid)?;
    let ns = acq.n_sources();
    let floor = T::real(1e-3) * initial.min_value();

    let mut m = initial.clone();
    let mut multipliers =
        MultiplierState::<T>::new(data.frequencies.len(), ns, grid.n(), acq.n_receivers());
    let mut records = Vec::new();
    let mut batch_models = Vec::new();
    let mut warnings = Vec::new();
    let mut iter_counter = 0usize;

    for (bi, freq_idxs) in batches.iter().enumerate() {
        let mode = cfg.protocol.mode_for_batch(bi);
        multipliers.start_batch(freq_idxs, cfg.carry_multipliers);

        let mut tt_state: Option<SplitState<T>> = match &cfg.tt {
            Some(_) => Some(SplitState::new(&GridField::new(grid, m.values().to_vec())?)),
            None => None,
        };

        let mut systems: Vec<HelmholtzSystem<T>> = Vec::with_capacity(freq_idxs.len());
        for &fi in freq_idxs {
            systems.push(assemble(&m, omega_from_hz(data.frequencies[fi]), &cfg.pml, cfg.stencil)?);
        }

        // The sampling term PᴴP has unit scale, so λ‖A‖² ≈ λ₀ keeps the
        // wave-equation weight a fixed small fraction of the data weight and
        // the data are matched from the first iteration; the multiplier
        // updates then restore the wave equation over the iterations.
        let lambda = match cfg.lambda_override {
            Some(l) => l,
            None => {
                let mut nrm = T::zero();
                for sys in &systems {
                    nrm = nrm.max(sys.inf_norm());
                }
                if !(nrm > T::zero()) || !nrm.is_finite() {
                    return Err(WiprError::SingularOperator(
                        "operator norm estimate failed at batch start".into(),
                    ));
                }
                cfg.lambda0 / (nrm * nrm)
            }
        };

        for it in 1..=cfg.max_iters {
            let iter_start = Instant::now();
            iter_counter += 1;

            let mut all_vs: Vec<VirtualSource<T>> = Vec::with_capacity(freq_idxs.len() * ns);
            let mut fields: Vec<Vec<Vec<Complex<T>>>> = Vec::with_capacity(freq_idxs.len());
            for (k, &fi) in freq_idxs.iter().enumerate() {
                let f = data.frequencies[fi];
                let rec = WavefieldReconstructor::new(&systems[k], acq, lambda)?;
                let mut per_source = Vec::with_capacity(ns);
                for s in 0..ns {
                    let mut b_aug = acq.source_vector(s, f);
                    for (bv, mv) in b_aug.iter_mut().zip(multipliers.b_slot(fi, s)?) {
                        *bv = *bv + *mv;
                    }
                    let mut d_aug = data.samples[fi][s].clone();
                    for (dv, mv) in d_aug.iter_mut().zip(multipliers.d_slot(fi, s)?) {
                        *dv = *dv + *mv;
                    }
                    let u = rec.reconstruct(&b_aug, &d_aug)?;
                    all_vs.push(virtual_source(&systems[k], &u, &b_aug)?);
                    per_source.push(u);
                }
                fields.push(per_source);
            }

            let upd = match mode {
                Mode::Irwri => update_model_ls(&all_vs)?,
                Mode::Wipr => update_model_pr(&all_vs, m.values())?,
            };
            if upd.ridged {
                warnings.push(format!(
                    "iteration {iter_counter}: degenerate fit denominators, ridge applied"
                ));
            }

            let bounds_active = cfg.bounds.is_some() && it >= cfg.bounds_activation_iter;
            let mut new_values = match &cfg.tt {
                Some(ttcfg) => {
                    let wmax = upd.fit_weights.iter().cloned().fold(T::zero(), T::max);
                    let weights: Vec<T> =
                        upd.fit_weights.iter().map(|&w| w / wmax).collect();
                    let targets: Vec<T> = upd
                        .fit_weights
                        .iter()
                        .zip(&upd.fit_rhs)
                        .map(|(&w, &r)| if w > T::zero() { r / w } else { T::zero() })
                        .collect();
                    let st = tt_state.as_mut().unwrap();
                    let bounds = if bounds_active { cfg.bounds.as_ref() } else { None };
                    let rep = tt_solve(st, &weights, &targets, ttcfg, bounds)?;
                    rep.composite
                }
                None => upd.values,
            };

            if bounds_active {
                cfg.bounds.as_ref().unwrap().clamp(&mut new_values);
            } else {
                let mut floored = 0usize;
                for v in new_values.iter_mut() {
                    if !(*v >= floor) {
                        *v = floor;
                        floored += 1;
                    }
                }
                if floored > 0 {
                    warnings.push(format!(
                        "iteration {iter_counter}: {floored} nodes raised to the positivity floor"
                    ));
                }
            }
            let m_new = ModelField::new(grid, new_values)?;

            let mut src_sq = T::zero();
            let mut dat_sq = T::zero();
            let mut new_systems: Vec<HelmholtzSystem<T>> = Vec::with_capacity(freq_idxs.len());
            for (k, &fi) in freq_idxs.iter().enumerate() {
                let f = data.frequencies[fi];
                let sys_new = assemble(&m_new, omega_from_hz(f), &cfg.pml, cfg.stencil)?;
                for s in 0..ns {
                    let u = &fields[k][s];
                    let au = sys_new.apply(u)?;
                    let b = acq.source_vector(s, f);
                    let inc_b: Vec<Complex<T>> =
                        b.iter().zip(&au).map(|(&bv, &av)| bv - av).collect();
                    src_sq += norm2_sq(&inc_b);
                    multipliers.add_b(fi, s, &inc_b)?;
                    let pu = acq.sample(u);
                    let inc_d: Vec<Complex<T>> = data.samples[fi][s]
                        .iter()
                        .zip(&pu)
                        .map(|(&dv, &pv)| dv - pv)
                        .collect();
                    dat_sq += norm2_sq(&inc_d);
                    multipliers.add_d(fi, s, &inc_d)?;
                }
                new_systems.push(sys_new);
            }
            systems = new_systems;
            m = m_new;

            let source_residual = src_sq.sqrt();
            let data_residual = dat_sq.sqrt();
            let me = match reference {
                Some(r) => Some(model_error(m.values(), r.values())?),
                None => None,
            };
            records.push(IterationRecord {
                iter: iter_counter,
                freq_batch: bi,
                mode,
                data_residual: to_f64(data_residual),
                source_residual: to_f64(source_residual),
                model_error: me.map(to_f64),
                lambda: to_f64(lambda),
                seconds: if cfg.log_timing { iter_start.elapsed().as_secs_f64() } else { 0.0 },
            });

            if stopping_check(source_residual, data_residual, cfg.eps_source, cfg.eps_data) {
                break;
            }
        }
        batch_models.push(m.clone());
    }

    Ok(InversionOutcome { model: m, records, batch_models, warnings })
}
