//! Implementations behind the subcommands. Argument structs live in the
//! parent module; everything here returns `Result` and leaves process exit
//! codes to the caller.

use std::fs;
use std::path::Path;
use std::time::Instant;

use crate::helmholtz::{assemble, omega_from_hz, PmlProfile, StencilConfig};
use crate::inversion::{
    bilinear_recovery, read_csv, run_inversion, write_csv, AcquisitionSet, InversionConfig,
};
use crate::io::{read_data, read_model, write_data, write_model, write_pgm, ObservedData};
use crate::model::{make_toy_model, sq_slowness_to_velocity, Bounds, ModelField, ToyModel};
use crate::{Result, WiprError};

use super::config::{pair_axes, parse_index_list, ExperimentConfig};
use super::{BilinearArgs, ForwardArgs, InvertArgs, ModelArgs, ReportArgs};

fn seed_comment(seed: u64) -> Vec<String> {
    vec![format!("seed={seed}")]
}

pub fn cmd_model(args: &ModelArgs) -> Result<()> {
    let grid = crate::grid::Grid2D::new(args.nx, args.nz, args.h)?;
    let kind = match args.kind.as_str() {
        "homogeneous" => {
            if args.v.len() != 1 {
                return Err(WiprError::InvalidConfig(format!(
                    "homogeneous takes one velocity, got {}",
                    args.v.len()
                )));
            }
            ToyModel::Homogeneous { velocity: args.v[0] }
        }
        "layered" => {
            let interfaces = match &args.interfaces {
                Some(text) => parse_index_list(text)?,
                None => {
                    return Err(WiprError::InvalidConfig(
                        "layered requires --interfaces".into(),
                    ))
                }
            };
            ToyModel::Layered { velocities: args.v.clone(), interfaces }
        }
        "inclusion" => {
            if args.v.len() != 2 {
                return Err(WiprError::InvalidConfig(format!(
                    "inclusion takes background,anomaly velocities, got {} values",
                    args.v.len()
                )));
            }
            let rect = match &args.rect {
                Some(text) => parse_index_list(text)?,
                None => {
                    return Err(WiprError::InvalidConfig(
                        "inclusion requires --rect x0,x1,z0,z1".into(),
                    ))
                }
            };
            if rect.len() != 4 {
                return Err(WiprError::InvalidConfig(format!(
                    "--rect needs four indices x0,x1,z0,z1, got {}",
                    rect.len()
                )));
            }
            ToyModel::Inclusion {
                background: args.v[0],
                anomaly: args.v[1],
                x0: rect[0],
                x1: rect[1],
                z0: rect[2],
                z1: rect[3],
            }
        }
        other => {
            return Err(WiprError::InvalidConfig(format!(
                "unknown model kind '{other}' (homogeneous, layered, inclusion)"
            )))
        }
    };
    let model = make_toy_model(grid, &kind)?;
    write_model(&args.out, &model)?;
    if let Some(image) = &args.image {
        let velocity = sq_slowness_to_velocity(&model);
        write_pgm(image, grid, &velocity, &seed_comment(args.seed))?;
    }
    println!(
        "wrote {} ({}x{} cells, h={} m, seed={})",
        args.out.display(),
        grid.nx(),
        grid.nz(),
        args.h,
        args.seed
    );
    Ok(())
}

pub fn cmd_forward(args: &ForwardArgs) -> Result<()> {
    let model: ModelField<f64> = read_model(&args.model)?;
    let grid = model.grid();
    let pml = PmlProfile::new(args.pml_thickness, args.pml_amplitude)?;
    let stencil = StencilConfig::new(args.mass_center)?;
    let sources = pair_axes(&parse_index_list(&args.sources_x)?, &parse_index_list(&args.sources_z)?)?;
    let receivers =
        pair_axes(&parse_index_list(&args.receivers_x)?, &parse_index_list(&args.receivers_z)?)?;
    let signature = super::config::parse_signature(&args.signature)?;
    let acq = AcquisitionSet::new(grid, &sources, &receivers, args.pml_thickness, signature)?;

    let mut frequencies = super::config::parse_float_list(&args.frequencies)?;
    frequencies.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut samples = Vec::with_capacity(frequencies.len());
    for &f in &frequencies {
        let sys = assemble(&model, omega_from_hz(f), &pml, stencil).map_err(|e| {
            WiprError::InvalidConfig(format!("frequency {f} Hz: {e}"))
        })?;
        let mut per_source = Vec::with_capacity(acq.n_sources());
        for s in 0..acq.n_sources() {
            let b = acq.source_vector(s, f);
            let u = sys.forward_solve(&b).map_err(|e| {
                WiprError::SolverAccuracy(format!("frequency {f} Hz, source {s}: {e}"))
            })?;
            per_source.push(acq.sample(&u));
        }
        samples.push(per_source);
    }
    let data = ObservedData {
        frequencies,
        n_sources: acq.n_sources(),
        n_receivers: acq.n_receivers(),
        samples,
    };
    data.validate()?;
    write_data(&args.out, &data)?;
    println!(
        "wrote {} ({} frequencies, {} sources, {} receivers, seed={})",
        args.out.display(),
        data.frequencies.len(),
        data.n_sources,
        data.n_receivers,
        args.seed
    );
    Ok(())
}

pub fn cmd_invert(args: &InvertArgs) -> Result<()> {
    let started = Instant::now();
    let text = fs::read_to_string(&args.config)?;
    let base = args.config.parent().unwrap_or_else(|| Path::new("."));
    let mut exp = ExperimentConfig::parse(&text, base)?;
    if let Some(seed) = args.seed {
        exp.seed = seed;
    }
    if let Some(emit) = args.emit_images {
        exp.emit_images = emit;
    }

    let initial: ModelField<f64> = read_model(&exp.initial_model)?;
    let grid = initial.grid();
    let reference = match &exp.true_model {
        Some(p) => {
            let m: ModelField<f64> = read_model(p)?;
            if m.grid() != grid {
                return Err(WiprError::InvalidGrid(
                    "true model grid does not match the initial model grid".into(),
                ));
            }
            Some(m)
        }
        None => None,
    };
    let data = read_data(&exp.data, &exp.frequencies)?;
    let signature = exp.signature;
    let acq =
        AcquisitionSet::new(grid, &exp.sources, &exp.receivers, exp.pml_thickness, signature)?;

    let mut cfg = InversionConfig::new(exp.schedule.clone());
    cfg.protocol = exp.protocol;
    cfg.lambda0 = exp.lambda0;
    cfg.lambda_override = exp.lambda_override;
    cfg.max_iters = exp.max_iters;
    cfg.eps_source = exp.eps_source;
    cfg.eps_data = exp.eps_data;
    cfg.bounds = match exp.velocity_bounds {
        Some((v_min, v_max)) => Some(Bounds::from_velocities(grid, v_min, v_max)?),
        None => None,
    };
    cfg.bounds_activation_iter = exp.bounds_activation_iter;
    cfg.tt = exp.tt.clone();
    cfg.carry_multipliers = exp.carry_multipliers;
    cfg.pml = PmlProfile::new(exp.pml_thickness, exp.pml_amplitude)?;
    cfg.stencil = StencilConfig::new(exp.mass_center)?;
    cfg.log_timing = exp.log_timing;

    let outcome = run_inversion(&data, &acq, &initial, reference.as_ref(), &cfg)?;

    fs::create_dir_all(&exp.output_dir)?;
    write_model(&exp.output_dir.join("final_model.wmod"), &outcome.model)?;
    write_csv(&exp.output_dir.join("iterations.csv"), exp.seed, &outcome.records)?;
    if exp.emit_images {
        for (bi, m) in outcome.batch_models.iter().enumerate() {
            let velocity = sq_slowness_to_velocity(m);
            write_pgm(
                &exp.output_dir.join(format!("batch_{bi:02}.pgm")),
                grid,
                &velocity,
                &seed_comment(exp.seed),
            )?;
        }
    }

    for w in &outcome.warnings {
        println!("warning: {w}");
    }
    let last = outcome.records.last();
    println!(
        "finished {} iterations over {} batches in {:.1} s (seed={})",
        outcome.records.len(),
        exp.schedule.len(),
        started.elapsed().as_secs_f64(),
        exp.seed
    );
    if let Some(r) = last {
        match r.model_error {
            Some(me) => println!(
                "final: data residual {:e}, source residual {:e}, model error {:.2}%",
                r.data_residual, r.source_residual, me
            ),
            None => println!(
                "final: data residual {:e}, source residual {:e}",
                r.data_residual, r.source_residual
            ),
        }
    }
    println!("results in {}", exp.output_dir.display());
    Ok(())
}

pub fn cmd_bilinear(args: &BilinearArgs) -> Result<()> {
    let model: ModelField<f64> = read_model(&args.model)?;
    let grid = model.grid();
    let pml = PmlProfile::new(args.pml_thickness, args.pml_amplitude)?;
    let stencil = StencilConfig::lumped();
    let margin = args.margin.unwrap_or(args.pml_thickness + 1);
    let acq = AcquisitionSet::new(
        grid,
        &[(args.source_x, args.source_z)],
        &[(args.source_x, args.source_z)],
        args.pml_thickness,
        crate::inversion::SourceSignature::Impulse,
    )?;
    let omega = omega_from_hz(args.freq);
    let sys = assemble(&model, omega, &pml, stencil)?;
    let b = acq.source_vector(0, args.freq);
    let u = sys.forward_solve(&b)?;
    let rec = bilinear_recovery(grid, omega, &u, &b, margin, args.threshold)?;

    let mut full_num = 0.0;
    let mut mag_num = 0.0;
    let mut den = 0.0;
    let mut kept = 0usize;
    for i in 0..grid.n() {
        if !rec.valid[i] {
            continue;
        }
        let t = model.values()[i];
        full_num += (rec.values[i] - t) * (rec.values[i] - t);
        mag_num += (rec.magnitudes[i] - t) * (rec.magnitudes[i] - t);
        den += t * t;
        kept += 1;
    }
    if kept == 0 {
        return Err(WiprError::Geometry(
            "every node is masked; enlarge the grid or lower the threshold".into(),
        ));
    }
    let full_err = (full_num / den).sqrt();
    let mag_err = (mag_num / den).sqrt();
    println!("full relative error: {full_err:e}");
    if !args.magnitude_only {
        println!("magnitude relative error: {mag_err:e}");
    } else {
        println!("magnitude relative error: {mag_err:e} (magnitude-only run)");
    }
    println!("masked fraction: {:.4}", rec.masked_fraction);
    if let Some(out) = &args.out {
        let mut values = model.values().to_vec();
        for i in 0..grid.n() {
            let v = if args.magnitude_only { rec.magnitudes[i] } else { rec.values[i] };
            if rec.valid[i] && v.is_finite() && v > 0.0 {
                values[i] = v;
            }
        }
        let recovered = ModelField::new(grid, values)?;
        write_model(out, &recovered)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

pub fn cmd_report(args: &ReportArgs) -> Result<()> {
    println!("run,model_error,source_residual,data_residual");
    for path in &args.logs {
        let (_, records) = read_csv(path)?;
        let last = records.last().ok_or_else(|| {
            WiprError::FileFormat(format!("{}: no iteration rows", path.display()))
        })?;
        let run = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let me = match last.model_error {
            Some(v) => format!("{v}"),
            None => String::new(),
        };
        println!("{run},{me},{},{}", last.source_residual, last.data_residual);
    }
    Ok(())
}
