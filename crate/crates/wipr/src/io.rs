//! Binary file formats and image export.
//!
//! Model file ("WIPR", version 1): magic, version u32, nx u32, nz u32,
//! h f64, then nx·nz f64 values z-fastest. Data file ("WIPD", version 1):
//! magic, version u32, frequency/source/receiver counts u32, then per
//! (frequency, source) the receiver-ordered complex samples as interleaved
//! (re, im) f64, frequencies ascending. Everything is little-endian with no
//! padding. Images are binary 8-bit PGM with per-image min-max scaling.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex;

use crate::grid::Grid2D;
use crate::model::ModelField;
use crate::scalar::Scalar;
use crate::{Result, WiprError};

const MODEL_MAGIC: &[u8; 4] = b"WIPR";
const DATA_MAGIC: &[u8; 4] = b"WIPD";
const FORMAT_VERSION: u32 = 1;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(WiprError::FileFormat(format!(
                "truncated file: wanted {n} bytes at offset {}, have {}",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn finished(&self) -> bool {
        self.pos == self.buf.len()
    }
}

/// Writes a model to the pinned binary format (values converted to f64).
pub fn write_model<T: Scalar>(path: &Path, m: &ModelField<T>) -> Result<()> {
    let g = m.grid();
    let mut out = Vec::with_capacity(24 + 8 * g.n());
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.nx() as u32).to_le_bytes());
    out.extend_from_slice(&(g.nz() as u32).to_le_bytes());
    out.extend_from_slice(&g.h().to_f64().unwrap().to_le_bytes());
    for v in m.values() {
        let v = v.to_f64().unwrap();
        if !v.is_finite() {
            return Err(WiprError::FileFormat("refusing to write non-finite model value".into()));
        }
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a model file. Validates magic, version, header-payload consistency
/// and finiteness; positivity is the caller's concern (inversion outputs from
/// unbounded runs are representable).
pub fn read_model<T: Scalar>(path: &Path) -> Result<ModelField<T>> {
    let buf = fs::read(path)?;
    let mut r = Reader::new(&buf);
    if r.take(4)? != MODEL_MAGIC {
        return Err(WiprError::FileFormat(format!("{}: bad magic, not a model file", path.display())));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(WiprError::FileFormat(format!("unsupported model format version {version}")));
    }
    let nx = r.u32()? as usize;
    let nz = r.u32()? as usize;
    let h = r.f64()?;
    let grid = Grid2D::new(nx, nz, T::real(h))?;
    let mut values = Vec::with_capacity(grid.n());
    for _ in 0..grid.n() {
        let v = r.f64()?;
        if !v.is_finite() {
            return Err(WiprError::FileFormat("non-finite model payload value".into()));
        }
        values.push(T::real(v));
    }
    if !r.finished() {
        return Err(WiprError::FileFormat(format!(
            "model payload longer than header promises ({} trailing bytes)",
            buf.len() - 24 - 8 * grid.n()
        )));
    }
    Ok(ModelField::from_values_unchecked(grid, values))
}

/// Frequency-domain receiver data for a set of sources and frequencies.
/// Frequencies are stored ascending; the values live in `samples[f][s]`.
#[derive(Debug, Clone)]
pub struct ObservedData<T: Scalar> {
    pub frequencies: Vec<T>,
    pub n_sources: usize,
    pub n_receivers: usize,
    /// samples[freq][source] is a receiver-ordered complex vector.
    pub samples: Vec<Vec<Vec<Complex<T>>>>,
}

impl<T: Scalar> ObservedData<T> {
    pub fn validate(&self) -> Result<()> {
        if self.frequencies.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(WiprError::InvalidConfig("data frequencies must be strictly ascending".into()));
        }
        if self.samples.len() != self.frequencies.len() {
            return Err(WiprError::DimensionMismatch {
                expected: self.frequencies.len(),
                got: self.samples.len(),
            });
        }
        for per_freq in &self.samples {
            if per_freq.len() != self.n_sources {
                return Err(WiprError::DimensionMismatch {
                    expected: self.n_sources,
                    got: per_freq.len(),
                });
            }
            for d in per_freq {
                if d.len() != self.n_receivers {
                    return Err(WiprError::DimensionMismatch {
                        expected: self.n_receivers,
                        got: d.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Index of a frequency within the stored list, matched to a relative
    /// tolerance so configs can restate values textually.
    pub fn frequency_index(&self, f: T) -> Option<usize> {
        let tol = T::real(1e-9) * T::max(T::one(), f.abs());
        self.frequencies.iter().position(|&g| (g - f).abs() <= tol)
    }
}

/// Writes the data payload. Frequency values are not part of the format;
/// they travel in the experiment config.
pub fn write_data<T: Scalar>(path: &Path, data: &ObservedData<T>) -> Result<()> {
    data.validate()?;
    let nf = data.frequencies.len();
    let mut out = Vec::with_capacity(20 + 16 * nf * data.n_sources * data.n_receivers);
    out.extend_from_slice(DATA_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(nf as u32).to_le_bytes());
    out.extend_from_slice(&(data.n_sources as u32).to_le_bytes());
    out.extend_from_slice(&(data.n_receivers as u32).to_le_bytes());
    for per_freq in &data.samples {
        for per_src in per_freq {
            for v in per_src {
                out.extend_from_slice(&v.re.to_f64().unwrap().to_le_bytes());
                out.extend_from_slice(&v.im.to_f64().unwrap().to_le_bytes());
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a data file; `frequencies` supplies the ascending frequency values
/// the file is known to contain (the format stores only their count).
pub fn read_data<T: Scalar>(path: &Path, frequencies: &[T]) -> Result<ObservedData<T>> {
    let buf = fs::read(path)?;
    let mut r = Reader::new(&buf);
    if r.take(4)? != DATA_MAGIC {
        return Err(WiprError::FileFormat(format!("{}: bad magic, not a data file", path.display())));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(WiprError::FileFormat(format!("unsupported data format version {version}")));
    }
    let nf = r.u32()? as usize;
    let ns = r.u32()? as usize;
    let nr = r.u32()? as usize;
    if nf != frequencies.len() {
        return Err(WiprError::InvalidConfig(format!(
            "data file holds {nf} frequencies but the config lists {}",
            frequencies.len()
        )));
    }
    let mut samples = Vec::with_capacity(nf);
    for _ in 0..nf {
        let mut per_freq = Vec::with_capacity(ns);
        for _ in 0..ns {
            let mut d = Vec::with_capacity(nr);
            for _ in 0..nr {
                let re = r.f64()?;
                let im = r.f64()?;
                if !re.is_finite() || !im.is_finite() {
                    return Err(WiprError::FileFormat("non-finite data sample".into()));
                }
                d.push(Complex::new(T::real(re), T::real(im)));
            }
            per_freq.push(d);
        }
        samples.push(per_freq);
    }
    if !r.finished() {
        return Err(WiprError::FileFormat("data payload longer than header promises".into()));
    }
    let data = ObservedData {
        frequencies: frequencies.to_vec(),
        n_sources: ns,
        n_receivers: nr,
        samples,
    };
    data.validate()?;
    Ok(data)
}

/// Writes a field as a binary 8-bit PGM with linear min-max scaling
/// (constant fields map to 0). `comment` lines, if any, go after the magic.
pub fn write_pgm<T: Scalar>(
    path: &Path,
    grid: Grid2D<T>,
    values: &[T],
    comments: &[String],
) -> Result<()> {
    if values.len() != grid.n() {
        return Err(WiprError::DimensionMismatch { expected: grid.n(), got: values.len() });
    }
    let lo = values.iter().cloned().fold(T::infinity(), T::min);
    let hi = values.iter().cloned().fold(T::neg_infinity(), T::max);
    let span = hi - lo;
    let mut f = fs::File::create(path)?;
    writeln!(f, "P5")?;
    for c in comments {
        writeln!(f, "# {c}")?;
    }
    writeln!(f, "{} {}", grid.nx(), grid.nz())?;
    writeln!(f, "255")?;
    let mut pixels = Vec::with_capacity(grid.n());
    for iz in 0..grid.nz() {
        for ix in 0..grid.nx() {
            let v = values[grid.idx(ix, iz)];
            let p = if span > T::zero() {
                ((v - lo) / span * T::real(255.0)).round().to_f64().unwrap() as i64
            } else {
                0
            };
            pixels.push(p.clamp(0, 255) as u8);
        }
    }
    f.write_all(&pixels)?;
    Ok(())
}
