//! Flat `key = value` experiment configuration for the `invert` command.
//!
//! Lines are `key = value` pairs; `#` starts a comment; blank lines are
//! skipped. Paths are resolved relative to the config file's directory.
//! Unknown keys are errors, so typos fail fast instead of silently running
//! with defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::inversion::{Protocol, SourceSignature};
use crate::regularization::TtConfig;
use crate::{Result, WiprError};

/// Parses "3", "1,5,9", "0:2:10" (inclusive range), and mixtures thereof.
pub fn parse_index_list(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        if item.is_empty() {
            return Err(WiprError::InvalidConfig(format!("empty entry in index list '{text}'")));
        }
        if let Some((a, rest)) = item.split_once(':') {
            let (b, c) = rest.split_once(':').ok_or_else(|| {
                WiprError::InvalidConfig(format!("range '{item}' must be start:step:stop"))
            })?;
            let start: usize = a.trim().parse().map_err(|_| bad_num(a))?;
            let step: usize = b.trim().parse().map_err(|_| bad_num(b))?;
            let stop: usize = c.trim().parse().map_err(|_| bad_num(c))?;
            if step == 0 {
                return Err(WiprError::InvalidConfig(format!("zero step in range '{item}'")));
            }
            if stop < start {
                return Err(WiprError::InvalidConfig(format!(
                    "descending range '{item}' is not supported"
                )));
            }
            let mut v = start;
            while v <= stop {
                out.push(v);
                v += step;
            }
        } else {
            out.push(item.parse().map_err(|_| bad_num(item))?);
        }
    }
    Ok(out)
}

/// Parses "4.5", "4,4.5,5", and "3:0.5:6" (inclusive up to rounding).
pub fn parse_float_list(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        if item.is_empty() {
            return Err(WiprError::InvalidConfig(format!("empty entry in list '{text}'")));
        }
        let colons = item.matches(':').count();
        if colons == 2 {
            let mut parts = item.splitn(3, ':');
            let start: f64 = parse_f64(parts.next().unwrap())?;
            let step: f64 = parse_f64(parts.next().unwrap())?;
            let stop: f64 = parse_f64(parts.next().unwrap())?;
            if !(step > 0.0) {
                return Err(WiprError::InvalidConfig(format!(
                    "range '{item}' needs a positive step"
                )));
            }
            if stop < start {
                return Err(WiprError::InvalidConfig(format!(
                    "descending range '{item}' is not supported"
                )));
            }
            let mut k = 0usize;
            loop {
                let v = start + step * k as f64;
                if v > stop + 1e-9 * step {
                    break;
                }
                out.push(v);
                k += 1;
            }
        } else if colons == 0 {
            out.push(parse_f64(item)?);
        } else {
            return Err(WiprError::InvalidConfig(format!("range '{item}' must be start:step:stop")));
        }
    }
    Ok(out)
}

fn parse_f64(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| bad_num(s))?;
    if !v.is_finite() {
        return Err(bad_num(s));
    }
    Ok(v)
}

fn bad_num(s: &str) -> WiprError {
    WiprError::InvalidConfig(format!("'{}' is not a valid number", s.trim()))
}

fn parse_bool(s: &str) -> Result<bool> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(WiprError::InvalidConfig(format!("'{other}' is not a boolean (true/false)"))),
    }
}

/// Pairs x and z index lists into grid positions: equal lengths zip, a
/// single value broadcasts over the other list.
pub fn pair_axes(xs: &[usize], zs: &[usize]) -> Result<Vec<(usize, usize)>> {
    if xs.is_empty() || zs.is_empty() {
        return Err(WiprError::Geometry("empty position list".into()));
    }
    if xs.len() == zs.len() {
        Ok(xs.iter().copied().zip(zs.iter().copied()).collect())
    } else if zs.len() == 1 {
        Ok(xs.iter().map(|&x| (x, zs[0])).collect())
    } else if xs.len() == 1 {
        Ok(zs.iter().map(|&z| (xs[0], z)).collect())
    } else {
        Err(WiprError::Geometry(format!(
            "cannot pair {} x positions with {} z positions",
            xs.len(),
            zs.len()
        )))
    }
}

pub fn parse_signature(text: &str) -> Result<SourceSignature<f64>> {
    if text == "impulse" {
        return Ok(SourceSignature::Impulse);
    }
    if let Some(peak) = text.strip_prefix("ricker:") {
        return Ok(SourceSignature::Ricker { peak_hz: parse_f64(peak)? });
    }
    Err(WiprError::InvalidConfig(format!(
        "unknown signature '{text}' (expected impulse or ricker:PEAK_HZ)"
    )))
}

/// Everything the `invert` command needs, typed and validated as far as
/// possible without touching the referenced files.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub true_model: Option<PathBuf>,
    pub initial_model: PathBuf,
    pub data: PathBuf,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub frequencies: Vec<f64>,
    pub schedule: Vec<Vec<f64>>,
    pub protocol: Protocol,
    pub lambda0: f64,
    pub lambda_override: Option<f64>,
    pub max_iters: usize,
    pub eps_source: f64,
    pub eps_data: f64,
    pub pml_thickness: usize,
    pub pml_amplitude: f64,
    pub mass_center: f64,
    pub sources: Vec<(usize, usize)>,
    pub receivers: Vec<(usize, usize)>,
    pub signature: SourceSignature<f64>,
    pub velocity_bounds: Option<(f64, f64)>,
    pub bounds_activation_iter: usize,
    pub carry_multipliers: bool,
    pub tt: Option<TtConfig<f64>>,
    pub emit_images: bool,
    pub log_timing: bool,
}

struct KeyMap {
    entries: BTreeMap<String, (String, usize)>,
    used: std::collections::BTreeSet<String>,
}

impl KeyMap {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                WiprError::InvalidConfig(format!("line {}: expected 'key = value'", ln + 1))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(WiprError::InvalidConfig(format!("line {}: empty key", ln + 1)));
            }
            if entries.insert(key.clone(), (value, ln + 1)).is_some() {
                return Err(WiprError::InvalidConfig(format!(
                    "line {}: key '{key}' given twice",
                    ln + 1
                )));
            }
        }
        Ok(Self { entries, used: Default::default() })
    }

    fn get(&mut self, key: &str) -> Option<String> {
        self.used.insert(key.to_string());
        self.entries.get(key).map(|(v, _)| v.clone())
    }

    fn require(&mut self, key: &str) -> Result<String> {
        self.get(key)
            .ok_or_else(|| WiprError::InvalidConfig(format!("missing required key '{key}'")))
    }

    fn finish(self) -> Result<()> {
        for (key, (_, ln)) in &self.entries {
            if !self.used.contains(key) {
                return Err(WiprError::InvalidConfig(format!("line {ln}: unknown key '{key}'")));
            }
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut map = KeyMap::parse(text)?;
        let path_of = |raw: String| -> PathBuf {
            let p = PathBuf::from(raw);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };

        let initial_model = path_of(map.require("initial_model")?);
        let data = path_of(map.require("data")?);
        let output_dir = path_of(map.require("output_dir")?);
        let true_model = map.get("true_model").map(path_of);

        let frequencies = parse_float_list(&map.require("frequencies")?)?;
        let schedule_text = map.require("schedule")?;
        let mut schedule = Vec::new();
        for part in schedule_text.split(';') {
            schedule.push(parse_float_list(part.trim())?);
        }
        let protocol: Protocol = map.get("mode").unwrap_or_else(|| "wipr".into()).parse()?;

        let get_f64 = |map: &mut KeyMap, key: &str, default: f64| -> Result<f64> {
            match map.get(key) {
                Some(v) => parse_f64(&v),
                None => Ok(default),
            }
        };
        let get_usize = |map: &mut KeyMap, key: &str, default: usize| -> Result<usize> {
            match map.get(key) {
                Some(v) => v.parse().map_err(|_| bad_num(&v)),
                None => Ok(default),
            }
        };
        let get_bool = |map: &mut KeyMap, key: &str, default: bool| -> Result<bool> {
            match map.get(key) {
                Some(v) => parse_bool(&v),
                None => Ok(default),
            }
        };

        let seed = get_usize(&mut map, "seed", 0)? as u64;
        let lambda0 = get_f64(&mut map, "lambda0", 1e-2)?;
        let lambda_override = match map.get("lambda") {
            Some(v) => Some(parse_f64(&v)?),
            None => None,
        };
        let max_iters = get_usize(&mut map, "max_iters", 15)?;
        let eps_source = get_f64(&mut map, "eps_source", 1e-3)?;
        let eps_data = get_f64(&mut map, "eps_data", 1e-5)?;
        let pml_thickness = get_usize(&mut map, "pml_thickness", 10)?;
        let pml_amplitude = get_f64(&mut map, "pml_amplitude", 6.0)?;
        let mass_center = get_f64(&mut map, "mass_center", 1.0)?;

        let sources = pair_axes(
            &parse_index_list(&map.require("sources_x")?)?,
            &parse_index_list(&map.require("sources_z")?)?,
        )?;
        let receivers = pair_axes(
            &parse_index_list(&map.require("receivers_x")?)?,
            &parse_index_list(&map.require("receivers_z")?)?,
        )?;
        let signature = parse_signature(&map.get("signature").unwrap_or_else(|| "impulse".into()))?;

        let v_min = map.get("v_min");
        let v_max = map.get("v_max");
        let velocity_bounds = match (v_min, v_max) {
            (Some(a), Some(b)) => {
                let lo = parse_f64(&a)?;
                let hi = parse_f64(&b)?;
                if !(lo > 0.0 && hi > lo) {
                    return Err(WiprError::InvalidConfig(format!(
                        "velocity bounds need 0 < v_min < v_max, got {lo} and {hi}"
                    )));
                }
                Some((lo, hi))
            }
            (None, None) => None,
            _ => {
                return Err(WiprError::InvalidConfig(
                    "v_min and v_max must be given together".into(),
                ))
            }
        };
        let bounds_activation_iter = get_usize(&mut map, "bounds_activation_iter", 1)?;
        let carry_multipliers = get_bool(&mut map, "carry_multipliers", false)?;

        let tt = if get_bool(&mut map, "tt", false)? {
            Some(TtConfig {
                tv_weight: get_f64(&mut map, "tt_tv_weight", 0.0)?,
                tikh_weight: get_f64(&mut map, "tt_tikh_weight", 0.0)?,
                lambda_fit: get_f64(&mut map, "tt_lambda_fit", 1.0)?,
                inner_iters: get_usize(&mut map, "tt_inner_iters", 8)?,
                gamma_tv: get_f64(&mut map, "tt_gamma_tv", 1.0)?,
                gamma_tikh: get_f64(&mut map, "tt_gamma_tikh", 1.0)?,
                gamma_bounds: get_f64(&mut map, "tt_gamma_bounds", 1.0)?,
            })
        } else {
            for k in [
                "tt_tv_weight",
                "tt_tikh_weight",
                "tt_lambda_fit",
                "tt_inner_iters",
                "tt_gamma_tv",
                "tt_gamma_tikh",
                "tt_gamma_bounds",
            ] {
                if map.get(k).is_some() {
                    return Err(WiprError::InvalidConfig(format!(
                        "'{k}' given but tt is not enabled"
                    )));
                }
            }
            None
        };

        let emit_images = get_bool(&mut map, "emit_images", false)?;
        let log_timing = get_bool(&mut map, "log_timing", false)?;
        map.finish()?;

        let cfg = Self {
            true_model,
            initial_model,
            data,
            output_dir,
            seed,
            frequencies,
            schedule,
            protocol,
            lambda0,
            lambda_override,
            max_iters,
            eps_source,
            eps_data,
            pml_thickness,
            pml_amplitude,
            mass_center,
            sources,
            receivers,
            signature,
            velocity_bounds,
            bounds_activation_iter,
            carry_multipliers,
            tt,
            emit_images,
            log_timing,
        };
        cfg.check_distinct_paths()?;
        Ok(cfg)
    }

    /// Every referenced path, inputs and fixed outputs alike, must be
    /// pairwise distinct so nothing is read and overwritten in one run.
    fn check_distinct_paths(&self) -> Result<()> {
        let mut paths = vec![
            self.initial_model.clone(),
            self.data.clone(),
            self.output_dir.join("final_model.wmod"),
            self.output_dir.join("iterations.csv"),
        ];
        if let Some(t) = &self.true_model {
            paths.push(t.clone());
        }
        for i in 0..paths.len() {
            for j in i + 1..paths.len() {
                if normalize(&paths[i]) == normalize(&paths[j]) {
                    return Err(WiprError::InvalidConfig(format!(
                        "path {} is referenced twice; all paths must be distinct",
                        paths[i].display()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Lexically normalizes a path (resolves `.` and `..` components) without
/// touching the filesystem.
fn normalize(p: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in p.components() {
        match c {
            std::path::Component::CurDir => {}
            std::path::Component::ParentDir => {
                if !out.pop() {
                    out.push("..");
                }
            }
            other => out.push(other.as_os_str()),
        }
    }
    out
}
