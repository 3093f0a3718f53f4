//! Periodic computational box, grid functions and Fourier multipliers.
//!
//! The box is `[-L, L)^n` with `N` cell-centred points per axis,
//! `x_j = -L + (j + 1/2) h`, `h = 2L/N`. Cell centring keeps the origin off the
//! grid, so weights such as `|x|^{-γ}` are finite at every node. The discrete
//! frequencies are `ξ_k = k / (2L)` with `k ∈ {-N/2, …, N/2 - 1}`, and
//! transforms follow the convention `û(ξ) = ∫ u(x) e^{-2πi x·ξ} dx`.

use crate::error::{Error, Result};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

const BINARY_MAGIC: &[u8; 8] = b"NLFGRID1";
const SUM_CHUNK: usize = 4096;

/// Uniform periodic box `[-L, L)^n` with `N` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicBox {
    dim: usize,
    half_width: f64,
    points: usize,
}

impl PeriodicBox {
    pub fn new(dim: usize, half_width: f64, points: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::Domain(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::Domain(format!("half width must be positive, got {half_width}")));
        }
        if points < 8 || !points.is_multiple_of(2) {
            return Err(Error::Domain(format!("points per axis must be even and at least 8, got {points}")));
        }
        Ok(Self { dim, half_width, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Grid spacing `h = 2L/N`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// Total number of grid points `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^n` of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinate of index `j` along any axis.
    pub fn axis_coord(&self, j: usize) -> f64 {
        -self.half_width + (j as f64 + 0.5) * self.spacing()
    }

    /// Frequency `ξ` of FFT slot `i` along any axis.
    pub fn frequency(&self, i: usize) -> f64 {
        let n = self.points as i64;
        let k = if (i as i64) < n / 2 { i as i64 } else { i as i64 - n };
        k as f64 / (2.0 * self.half_width)
    }

    /// Multi-index of a lexicographic (row-major, last axis fastest) index.
    pub fn multi_index(&self, idx: usize) -> [usize; MAX_DIM] {
        let mut out = [0usize; MAX_DIM];
        let mut rem = idx;
        for a in (0..self.dim).rev() {
            out[a] = rem % self.points;
            rem /= self.points;
        }
        out
    }

    /// Lexicographic index of a multi-index.
    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi[..self.dim].iter().fold(0, |acc, &i| acc * self.points + i)
    }

    /// Coordinates of grid point `idx`; unused trailing slots are zero.
    pub fn point(&self, idx: usize) -> [f64; MAX_DIM] {
        let m = self.multi_index(idx);
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim {
            x[a] = self.axis_coord(m[a]);
        }
        x
    }

    /// Index of the grid point nearest to `x` (coordinates clamped to the box).
    pub fn nearest_index(&self, x: &[f64]) -> usize {
        let h = self.spacing();
        let mut m = [0usize; MAX_DIM];
        for a in 0..self.dim {
            let j = ((x[a] + self.half_width) / h - 0.5).round();
            m[a] = j.clamp(0.0, (self.points - 1) as f64) as usize;
        }
        self.linear_index(&m)
    }
}

/// Sum of a slice in fixed-size chunks combined in index order, so the result
/// does not depend on how rayon schedules the chunks.
pub fn deterministic_sum(values: &[f64]) -> f64 {
    values.par_chunks(SUM_CHUNK).map(|c| c.iter().sum::<f64>()).collect::<Vec<_>>().iter().sum()
}

/// Real samples of a function on a [`PeriodicBox`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    bx: PeriodicBox,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn from_values(bx: PeriodicBox, values: Vec<f64>) -> Result<Self> {
        if values.len() != bx.len() {
            return Err(Error::Format(format!("expected {} values, got {}", bx.len(), values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite value at index {i}")));
        }
        Ok(Self { bx, values })
    }

    pub fn zeros(bx: PeriodicBox) -> Self {
        Self { bx, values: vec![0.0; bx.len()] }
    }

    pub fn constant(bx: PeriodicBox, c: f64) -> Self {
        Self { bx, values: vec![c; bx.len()] }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn<F>(bx: PeriodicBox, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let d = bx.dim();
        let values = (0..bx.len())
            .into_par_iter()
            .map(|i| {
                let x = bx.point(i);
                f(&x[..d])
            })
            .collect();
        Self { bx, values }
    }

    pub fn grid(&self) -> &PeriodicBox {
        &self.bx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn same_box(&self, other: &Self) -> Result<()> {
        if self.bx != other.bx {
            return Err(Error::BoxMismatch);
        }
        Ok(())
    }

    /// Pointwise combination of two grid functions on the same box.
    pub fn zip_with<F: Fn(f64, f64) -> f64 + Sync>(&self, other: &Self, f: F) -> Result<Self> {
        self.same_box(other)?;
        let values = self.values.par_iter().zip(other.values.par_iter()).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { bx: self.bx, values })
    }

    pub fn map<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> Self {
        Self { bx: self.bx, values: self.values.par_iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `∫ u` by the periodic trapezoid rule (sum times cell volume).
    pub fn integral(&self) -> f64 {
        deterministic_sum(&self.values) * self.bx.cell_volume()
    }

    /// `∫ u v`.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.same_box(other)?;
        let prods: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(deterministic_sum(&prods) * self.bx.cell_volume())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Grid `L^p` norm over the whole box; `p = ∞` gives the max norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm_of(&self.values, p, self.bx.cell_volume())
    }

    /// Grid `L^p` norm restricted to points where `mask` holds.
    pub fn lp_norm_masked(&self, p: f64, mask: &[bool]) -> f64 {
        let vals: Vec<f64> = self.values.iter().zip(mask).map(|(&v, &m)| if m { v } else { 0.0 }).collect();
        lp_norm_of(&vals, p, self.bx.cell_volume())
    }

    /// Writes `index_0,…,index_{n-1},value` rows with CRLF line endings and
    /// 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
        let d = self.bx.dim();
        let mut header: Vec<String> = (0..d).map(|a| format!("index_{a}")).collect();
        header.push("value".into());
        wr.write_record(&header)?;
        for (i, v) in self.values.iter().enumerate() {
            let m = self.bx.multi_index(i);
            let mut row: Vec<String> = m[..d].iter().map(|k| k.to_string()).collect();
            row.push(format_f64(*v));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads the CSV layout written by [`GridFunction::write_csv`].
    pub fn read_csv<R: Read>(bx: PeriodicBox, r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let d = bx.dim();
        let header = rd.headers()?.clone();
        if header.len() != d + 1 || &header[d] != "value" {
            return Err(Error::Format(format!("unexpected CSV header {header:?}")));
        }
        let mut values = vec![f64::NAN; bx.len()];
        for rec in rd.records() {
            let rec = rec?;
            let mut m = [0usize; MAX_DIM];
            for a in 0..d {
                m[a] = rec[a].trim().parse().map_err(|_| Error::Format(format!("bad index '{}'", &rec[a])))?;
                if m[a] >= bx.points() {
                    return Err(Error::Format(format!("index {} out of range", m[a])));
                }
            }
            let v: f64 = rec[d].trim().parse().map_err(|_| Error::Format(format!("bad value '{}'", &rec[d])))?;
            values[bx.linear_index(&m)] = v;
        }
        Self::from_values(bx, values)
    }

    /// Little-endian binary dump: 8-byte magic, `dim`, `points` (u64),
    /// `half_width` (f64), then the values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.bx.dim() as u64).to_le_bytes())?;
        w.write_all(&(self.bx.points() as u64).to_le_bytes())?;
        w.write_all(&self.bx.half_width().to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Format("bad magic in grid dump".into()));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let dim = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let points = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let half_width = f64::from_le_bytes(b8);
        let bx = PeriodicBox::new(dim, half_width, points)?;
        let mut values = Vec::with_capacity(bx.len());
        for _ in 0..bx.len() {
            r.read_exact(&mut b8)?;
            values.push(f64::from_le_bytes(b8));
        }
        Self::from_values(bx, values)
    }
}

fn lp_norm_of(values: &[f64], p: f64, vol: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    let pow: Vec<f64> = values.iter().map(|v| v.abs().powf(p)).collect();
    (deterministic_sum(&pow) * vol).powf(1.0 / p)
}

/// Formats a float with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fft_axis(data: &mut [Complex64], dim: usize, n: usize, axis: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let inner = n.pow((dim - 1 - axis) as u32);
    if inner == 1 {
        data.par_chunks_mut(n).for_each(|line| fft.process(line));
        return;
    }
    data.par_chunks_mut(n * inner).for_each(|block| {
        let mut t = vec![Complex64::new(0.0, 0.0); n * inner];
        for k in 0..n {
            for i in 0..inner {
                t[i * n + k] = block[k * inner + i];
            }
        }
        t.par_chunks_mut(n).for_each(|line| fft.process(line));
        for k in 0..n {
            for i in 0..inner {
                block[k * inner + i] = t[i * n + k];
            }
        }
    });
}

/// Discrete Fourier coefficients of a grid function (unnormalised forward DFT).
#[derive(Debug, Clone)]
pub struct Spectrum {
    bx: PeriodicBox,
    data: Vec<Complex64>,
}

/// Forward transform of `u`.
pub fn forward(u: &GridFunction) -> Spectrum {
    let bx = *u.grid();
    let mut data: Vec<Complex64> = u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for a in 0..bx.dim() {
        fft_axis(&mut data, bx.dim(), bx.points(), a, false);
    }
    Spectrum { bx, data }
}

impl Spectrum {
    pub fn grid(&self) -> &PeriodicBox {
        &self.bx
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.data
    }

    /// Multiplies by a symbol `m(ξ)`.
    ///
    /// On frequencies whose partner `-ξ` aliases back onto the same lattice
    /// slot (some component at the Nyquist index `-N/2`), the Hermitian part
    /// `(m(ξ) + conj(m(ξ')))/2` is used so that conjugate-symmetric symbols
    /// produce real output; an odd imaginary symbol such as `2πiξ` therefore
    /// vanishes there.
    pub fn apply_symbol<M>(&self, m: M) -> Spectrum
    where
        M: Fn(&[f64]) -> Complex64 + Sync,
    {
        let bx = self.bx;
        let d = bx.dim();
        let nyq = bx.points() / 2;
        let data = self
            .data
            .par_iter()
            .enumerate()
            .map(|(idx, &c)| {
                let mi = bx.multi_index(idx);
                let mut xi = [0.0; MAX_DIM];
                let mut partner = [0.0; MAX_DIM];
                let mut at_nyquist = false;
                for a in 0..d {
                    xi[a] = bx.frequency(mi[a]);
                    if mi[a] == nyq {
                        at_nyquist = true;
                        partner[a] = xi[a];
                    } else {
                        partner[a] = -xi[a];
                    }
                }
                let sym = if at_nyquist { 0.5 * (m(&xi[..d]) + m(&partner[..d]).conj()) } else { m(&xi[..d]) };
                c * sym
            })
            .collect();
        Spectrum { bx, data }
    }

    /// Pointwise sum of two spectra on the same box.
    pub fn add(&self, other: &Spectrum) -> Result<Spectrum> {
        if self.bx != other.bx {
            return Err(Error::BoxMismatch);
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Spectrum { bx: self.bx, data })
    }

    /// Inverse transform; fails if the imaginary part exceeds `1e-9` relative
    /// to the largest value the coefficients can produce.
    pub fn inverse_real(&self) -> Result<GridFunction> {
        let bx = self.bx;
        let mut data = self.data.clone();
        for a in 0..bx.dim() {
            fft_axis(&mut data, bx.dim(), bx.points(), a, true);
        }
        let norm = 1.0 / bx.len() as f64;
        let scale = self.data.iter().map(|c| c.norm()).sum::<f64>() * norm;
        let max_im = data.iter().fold(0.0f64, |m, c| m.max(c.im.abs())) * norm;
        if scale > 0.0 && max_im > 1e-9 * scale {
            return Err(Error::LossOfReality(max_im / scale));
        }
        let values = data.iter().map(|c| c.re * norm).collect();
        Ok(GridFunction { bx, values })
    }

    /// Value of the trigonometric interpolant at an arbitrary point.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let bx = self.bx;
        let d = bx.dim();
        let n = bx.points();
        let x0 = bx.axis_coord(0);
        let phases: Vec<Vec<Complex64>> = (0..d)
            .map(|a| {
                (0..n)
                    .map(|i| {
                        let arg = 2.0 * std::f64::consts::PI * bx.frequency(i) * (x[a] - x0);
                        Complex64::new(arg.cos(), arg.sin())
                    })
                    .collect()
            })
            .collect();
        let total: f64 = self
            .data
            .chunks(n)
            .enumerate()
            .map(|(row, chunk)| {
                let mut pre = Complex64::new(1.0, 0.0);
                let mi = bx.multi_index(row * n);
                for a in 0..d.saturating_sub(1) {
                    pre *= phases[a][mi[a]];
                }
                let last = &phases[d - 1];
                let s: Complex64 = chunk.iter().zip(last).map(|(c, p)| c * p).sum();
                (pre * s).re
            })
            .sum();
        total / bx.len() as f64
    }
}

/// Inverse transform of `m(ξ)·û(ξ)`.
pub fn apply_multiplier<M>(u: &GridFunction, m: M) -> Result<GridFunction>
where
    M: Fn(&[f64]) -> Complex64 + Sync,
{
    forward(u).apply_symbol(m).inverse_real()
}

/// `inverse(forward(u))`.
pub fn transform_roundtrip(u: &GridFunction) -> Result<GridFunction> {
    forward(u).inverse_real()
}
