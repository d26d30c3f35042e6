//! Periodic grids, sampled complex vector fields, quadrature, and the
//! discrete Fourier transform on the flat unit torus [0,1)^d.
//!
//! Fields are sampled at cell centers x_i = (i + 1/2)/n per axis. The
//! forward transform approximates the continuum Fourier coefficient,
//!
//! ```text
//! u_hat(k) = cellvol * sum_i u(x_i) exp(-2 pi i k . x_i),
//! ```
//!
//! so sampling exp(2 pi i k . x) produces exactly one nonzero bin and
//! Parseval reads sum_k |u_hat(k)|^2 = cellvol * sum_i |u(x_i)|^2.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::io::{Read, Write};

use crate::error::{McfError, Result};

/// Hard cap on the spatial dimension; coordinates are passed around as
/// fixed-size arrays with the first `dim` entries valid.
pub const MAX_DIM: usize = 3;

/// A uniform periodic grid on the unit torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    dim: usize,
    points: usize,
}

impl Grid {
    /// `points` per axis must be a power of two, at least 8; `dim` in 1..=3.
    pub fn new(dim: usize, points: usize) -> Result<Grid> {
        if dim < 1 || dim > MAX_DIM {
            return Err(McfError::InvalidGrid(format!(
                "dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(McfError::InvalidGrid(format!(
                "points per axis {points} must be a power of two >= 8"
            )));
        }
        Ok(Grid { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn cells(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        (self.points as f64).powi(-(self.dim as i32))
    }

    /// Largest representable frequency magnitude per axis.
    pub fn nyquist(&self) -> f64 {
        self.points as f64 / 2.0
    }

    /// Per-axis integer indices of a flat cell index (row major, axis 0 slowest).
    pub fn cell_indices(&self, cell: usize) -> [usize; MAX_DIM] {
        let mut idx = [0usize; MAX_DIM];
        let mut rest = cell;
        for a in (0..self.dim).rev() {
            idx[a] = rest % self.points;
            rest /= self.points;
        }
        idx
    }

    /// Cell center coordinates; entries past `dim` are zero.
    pub fn center(&self, cell: usize) -> [f64; MAX_DIM] {
        let idx = self.cell_indices(cell);
        let n = self.points as f64;
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim {
            x[a] = (idx[a] as f64 + 0.5) / n;
        }
        x
    }

    /// Integer frequency vector of a flat spectral index; per axis the
    /// frequency lies in (-n/2, n/2].
    pub fn freq(&self, cell: usize) -> [i64; MAX_DIM] {
        let idx = self.cell_indices(cell);
        let n = self.points as i64;
        let mut k = [0i64; MAX_DIM];
        for a in 0..self.dim {
            let m = idx[a] as i64;
            k[a] = if m <= n / 2 { m } else { m - n };
        }
        k
    }

    pub fn freq_abs(&self, cell: usize) -> f64 {
        let k = self.freq(cell);
        let mut s = 0.0;
        for a in 0..self.dim {
            s += (k[a] * k[a]) as f64;
        }
        s.sqrt()
    }
}

/// A C^N-valued function sampled at the cell centers of a grid.
///
/// Storage is cell major: `values[cell * n_comp + c]`.
#[derive(Clone, Debug)]
pub struct SampledField {
    grid: Grid,
    n_comp: usize,
    values: Vec<Complex64>,
}

/// The discrete Fourier coefficients of a sampled field.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    n_comp: usize,
    coeffs: Vec<Complex64>,
}

impl SampledField {
    pub fn zeros(grid: Grid, n_comp: usize) -> SampledField {
        assert!(n_comp >= 1);
        SampledField {
            grid,
            n_comp,
            values: vec![Complex64::default(); grid.cells() * n_comp],
        }
    }

    pub fn constant(grid: Grid, value: &[Complex64]) -> SampledField {
        let mut field = SampledField::zeros(grid, value.len());
        for cell in 0..grid.cells() {
            field.values[cell * value.len()..(cell + 1) * value.len()].copy_from_slice(value);
        }
        field
    }

    /// Sample a function at the cell centers, rejecting non-finite output.
    pub fn from_fn(
        grid: Grid,
        n_comp: usize,
        f: impl Fn(&[f64], &mut [Complex64]),
    ) -> Result<SampledField> {
        let mut field = SampledField::zeros(grid, n_comp);
        let mut buf = vec![Complex64::default(); n_comp];
        for cell in 0..grid.cells() {
            let x = grid.center(cell);
            f(&x[..grid.dim()], &mut buf);
            for (c, v) in buf.iter().enumerate() {
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(McfError::NonFiniteSample {
                        coord: x[..grid.dim()].to_vec(),
                        component: c,
                    });
                }
            }
            field.values[cell * n_comp..(cell + 1) * n_comp].copy_from_slice(&buf);
        }
        Ok(field)
    }

    pub fn from_values(grid: Grid, n_comp: usize, values: Vec<Complex64>) -> SampledField {
        assert_eq!(values.len(), grid.cells() * n_comp);
        SampledField {
            grid,
            n_comp,
            values,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn n_comp(&self) -> usize {
        self.n_comp
    }

    pub fn value(&self, cell: usize) -> &[Complex64] {
        &self.values[cell * self.n_comp..(cell + 1) * self.n_comp]
    }

    pub fn value_mut(&mut self, cell: usize) -> &mut [Complex64] {
        &mut self.values[cell * self.n_comp..(cell + 1) * self.n_comp]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.values
    }

    /// Riemann sum over cells times the cell volume. Without a weight the
    /// components of the value are summed.
    pub fn integrate(&self, weight: Option<&dyn Fn(&[Complex64]) -> Complex64>) -> Complex64 {
        let mut acc = Complex64::default();
        for cell in 0..self.grid.cells() {
            let v = self.value(cell);
            acc += match weight {
                Some(w) => w(v),
                None => v.iter().sum(),
            };
        }
        acc * self.grid.cell_volume()
    }

    /// Riemann sum of `sum_c u_c conj(v_c)`, the workhorse of all pairings.
    pub fn integrate_dot(&self, other: &SampledField) -> Complex64 {
        assert_eq!(self.values.len(), other.values.len());
        let mut acc = Complex64::default();
        for (u, v) in self.values.iter().zip(other.values.iter()) {
            acc += u * v.conj();
        }
        acc * self.grid.cell_volume()
    }

    /// (sum |u(x_i)|^p cellvol)^{1/p} with the euclidean norm on C^N values.
    pub fn lp_norm(&self, p: f64) -> f64 {
        assert!(p > 1.0 && p.is_finite());
        let mut acc = 0.0;
        for cell in 0..self.grid.cells() {
            let mut sq = 0.0;
            for v in self.value(cell) {
                sq += v.norm_sqr();
            }
            acc += sq.powf(p / 2.0);
        }
        (acc * self.grid.cell_volume()).powf(1.0 / p)
    }

    pub fn sup_norm(&self) -> f64 {
        let mut m: f64 = 0.0;
        for cell in 0..self.grid.cells() {
            let mut sq = 0.0;
            for v in self.value(cell) {
                sq += v.norm_sqr();
            }
            m = m.max(sq.sqrt());
        }
        m
    }

    pub fn sub(&self, other: &SampledField) -> SampledField {
        assert_eq!(self.values.len(), other.values.len());
        let values = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a - b)
            .collect();
        SampledField::from_values(self.grid, self.n_comp, values)
    }

    pub fn scaled(&self, factor: Complex64) -> SampledField {
        let values = self.values.iter().map(|v| v * factor).collect();
        SampledField::from_values(self.grid, self.n_comp, values)
    }

    /// Multiply every value by a scalar function of position.
    pub fn scaled_by_fn(&self, f: impl Fn(&[f64]) -> Complex64) -> SampledField {
        let mut out = self.clone();
        for cell in 0..self.grid.cells() {
            let x = self.grid.center(cell);
            let s = f(&x[..self.grid.dim()]);
            for v in out.value_mut(cell) {
                *v *= s;
            }
        }
        out
    }

    /// Flat binary layout: u32 header (d, n, N) then little-endian f64
    /// interleaved re/im per value.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        for h in [self.grid.dim as u32, self.grid.points as u32, self.n_comp as u32] {
            w.write_all(&h.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<SampledField> {
        let mut h = [0u8; 4];
        let mut header = [0u32; 3];
        for slot in header.iter_mut() {
            r.read_exact(&mut h)?;
            *slot = u32::from_le_bytes(h);
        }
        let grid = Grid::new(header[0] as usize, header[1] as usize)?;
        let n_comp = header[2] as usize;
        let mut values = Vec::with_capacity(grid.cells() * n_comp);
        let mut b = [0u8; 8];
        for _ in 0..grid.cells() * n_comp {
            r.read_exact(&mut b)?;
            let re = f64::from_le_bytes(b);
            r.read_exact(&mut b)?;
            let im = f64::from_le_bytes(b);
            values.push(Complex64::new(re, im));
        }
        Ok(SampledField::from_values(grid, n_comp, values))
    }

    /// CSV rows `x_0,..,x_{d-1},re_0,im_0,..` for inspection.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        for cell in 0..self.grid.cells() {
            let x = self.grid.center(cell);
            let mut row = String::new();
            for a in 0..self.grid.dim() {
                row.push_str(&format!("{:.17e},", x[a]));
            }
            for v in self.value(cell) {
                row.push_str(&format!("{:.17e},{:.17e},", v.re, v.im));
            }
            row.pop();
            row.push('\n');
            w.write_all(row.as_bytes())?;
        }
        Ok(())
    }
}

impl SpectralField {
    pub fn zeros(grid: Grid, n_comp: usize) -> SpectralField {
        SpectralField {
            grid,
            n_comp,
            coeffs: vec![Complex64::default(); grid.cells() * n_comp],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn n_comp(&self) -> usize {
        self.n_comp
    }

    pub fn coeff(&self, cell: usize) -> &[Complex64] {
        &self.coeffs[cell * self.n_comp..(cell + 1) * self.n_comp]
    }

    pub fn coeff_mut(&mut self, cell: usize) -> &mut [Complex64] {
        &mut self.coeffs[cell * self.n_comp..(cell + 1) * self.n_comp]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient at an integer frequency vector, or zero when the
    /// frequency is not representable on the grid.
    pub fn coeff_at(&self, k: &[i64]) -> Option<&[Complex64]> {
        let n = self.grid.points as i64;
        let mut cell = 0usize;
        for a in 0..self.grid.dim() {
            if k[a] <= -n / 2 || k[a] > n / 2 {
                return None;
            }
            let m = k[a].rem_euclid(n) as usize;
            cell = cell * self.grid.points + m;
        }
        Some(self.coeff(cell))
    }
}

/// Apply 1-d FFTs along every axis of the interleaved-component data.
fn fft_all_axes(grid: Grid, n_comp: usize, data: &mut [Complex64], inverse: bool) {
    let n = grid.points;
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut line = vec![Complex64::default(); n];
    for axis in 0..grid.dim() {
        let stride = n.pow((grid.dim() - 1 - axis) as u32);
        let blocks = grid.cells() / (n * stride);
        for c in 0..n_comp {
            for block in 0..blocks {
                for offset in 0..stride {
                    let base = block * n * stride + offset;
                    for t in 0..n {
                        line[t] = data[(base + t * stride) * n_comp + c];
                    }
                    fft.process(&mut line);
                    for t in 0..n {
                        data[(base + t * stride) * n_comp + c] = line[t];
                    }
                }
            }
        }
    }
}

/// Per-axis phase exp(-i pi k(m)/n) accounting for cell-center sampling.
fn half_cell_phases(grid: Grid) -> Vec<Complex64> {
    let n = grid.points as i64;
    (0..grid.points)
        .map(|m| {
            let k = if (m as i64) <= n / 2 {
                m as i64
            } else {
                m as i64 - n
            };
            Complex64::from_polar(1.0, -PI * k as f64 / n as f64)
        })
        .collect()
}

pub fn forward_dft(field: &SampledField) -> SpectralField {
    let grid = field.grid();
    let n_comp = field.n_comp();
    let mut out = SpectralField {
        grid,
        n_comp,
        coeffs: field.values.clone(),
    };
    fft_all_axes(grid, n_comp, &mut out.coeffs, false);
    let phases = half_cell_phases(grid);
    let vol = grid.cell_volume();
    for cell in 0..grid.cells() {
        let idx = grid.cell_indices(cell);
        let mut factor = Complex64::new(vol, 0.0);
        for a in 0..grid.dim() {
            factor *= phases[idx[a]];
        }
        for v in out.coeff_mut(cell) {
            *v *= factor;
        }
    }
    out
}

pub fn inverse_dft(spec: &SpectralField) -> SampledField {
    let grid = spec.grid();
    let n_comp = spec.n_comp();
    let mut data = spec.coeffs.clone();
    let phases = half_cell_phases(grid);
    for cell in 0..grid.cells() {
        let idx = grid.cell_indices(cell);
        let mut factor = Complex64::new(1.0, 0.0);
        for a in 0..grid.dim() {
            factor *= phases[idx[a]].conj();
        }
        for v in &mut data[cell * n_comp..(cell + 1) * n_comp] {
            *v *= factor;
        }
    }
    fft_all_axes(grid, n_comp, &mut data, true);
    SampledField::from_values(grid, n_comp, data)
}
