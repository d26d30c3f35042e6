//! Fourier multiplier operators with positively 0-homogeneous symbols and
//! smooth radial high-frequency cutoffs.
//!
//! A symbol is evaluated only on unit frequency vectors k/|k|, which makes
//! positive 0-homogeneity exact on the lattice. The zero bin carries the
//! mean and is handled separately: it is annihilated in `Full` and
//! `Highpass` modes and passed through unchanged in `Bandlimit` mode.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{McfError, Result};
use crate::field::{forward_dft, inverse_dft, SampledField};

/// Radial cutoff profile eta with eta = 1 on [0,1], eta = 0 on [2,inf).
///
/// Applied at radius R as eta_R(xi) = eta(|xi|/R).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutoffProfile {
    /// cos^2(pi (t-1)/2) on the ramp [1,2]; C^1.
    RaisedCosine,
    /// Quintic smoothstep on the ramp; C^2. Used to verify that results do
    /// not depend on the choice of eta.
    Smoothstep,
}

impl CutoffProfile {
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 1.0 {
            1.0
        } else if t >= 2.0 {
            0.0
        } else {
            let s = t - 1.0;
            match self {
                CutoffProfile::RaisedCosine => {
                    let c = (PI * s / 2.0).cos();
                    c * c
                }
                CutoffProfile::Smoothstep => 1.0 - s * s * s * (s * (6.0 * s - 15.0) + 10.0),
            }
        }
    }

    /// eta_R(|xi|) = eta(|xi|/R).
    pub fn eval_scaled(&self, xi_abs: f64, radius: f64) -> f64 {
        self.eval(xi_abs / radius)
    }
}

/// A positively 0-homogeneous C^{NxN}-valued symbol, given by its values on
/// the unit sphere. The evaluator writes an N x N row-major matrix.
#[derive(Clone)]
pub struct MultiplierSymbol {
    name: String,
    n_comp: usize,
    eval: Arc<dyn Fn(&[f64], &mut [Complex64]) + Send + Sync>,
}

impl std::fmt::Debug for MultiplierSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MultiplierSymbol({}, N={})", self.name, self.n_comp)
    }
}

impl MultiplierSymbol {
    pub fn new(
        name: impl Into<String>,
        n_comp: usize,
        eval: impl Fn(&[f64], &mut [Complex64]) + Send + Sync + 'static,
    ) -> MultiplierSymbol {
        MultiplierSymbol {
            name: name.into(),
            n_comp,
            eval: Arc::new(eval),
        }
    }

    /// Embed a scalar symbol as psi * Identity.
    pub fn scalar(
        name: impl Into<String>,
        n_comp: usize,
        psi: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> MultiplierSymbol {
        MultiplierSymbol::new(name, n_comp, move |xi, out| {
            let v = psi(xi);
            out.fill(Complex64::default());
            for c in 0..n_comp {
                out[c * n_comp + c] = v;
            }
        })
    }

    pub fn identity(n_comp: usize) -> MultiplierSymbol {
        MultiplierSymbol::scalar("identity", n_comp, |_| Complex64::new(1.0, 0.0))
    }

    /// Indicator of the half space xi . axis > 0 (sharp; on the two-point
    /// sphere in d = 1 smoothness is vacuous).
    pub fn half_space(n_comp: usize, axis: usize) -> MultiplierSymbol {
        MultiplierSymbol::scalar("half-space", n_comp, move |xi| {
            if xi[axis] > 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            }
        })
    }

    /// Arbitrary values on the two-point sphere {+1,-1} in d = 1.
    pub fn weighted_pair(n_comp: usize, plus: Complex64, minus: Complex64) -> MultiplierSymbol {
        MultiplierSymbol::scalar("weighted-pair", n_comp, move |xi| {
            if xi[0] > 0.0 {
                plus
            } else {
                minus
            }
        })
    }

    /// Smooth bump supported on the cone of half-angle `half_angle` around
    /// the unit vector `center`, equal to 1 on the half-angle/2 inner cone.
    pub fn cone_cutoff(n_comp: usize, center: Vec<f64>, half_angle: f64) -> MultiplierSymbol {
        let norm: f64 = center.iter().map(|v| v * v).sum::<f64>().sqrt();
        let center: Vec<f64> = center.iter().map(|v| v / norm).collect();
        MultiplierSymbol::scalar("cone-cutoff", n_comp, move |xi| {
            let mut dot = 0.0;
            for (a, b) in xi.iter().zip(center.iter()) {
                dot += a * b;
            }
            let angle = dot.clamp(-1.0, 1.0).acos();
            let t = angle / half_angle;
            let v = if t <= 0.5 {
                1.0
            } else if t >= 1.0 {
                0.0
            } else {
                let c = (PI * (t - 0.5)).cos();
                c * c
            };
            Complex64::new(v, 0.0)
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_comp(&self) -> usize {
        self.n_comp
    }

    /// Evaluate at a unit vector; `out` receives the N x N matrix row major.
    pub fn eval(&self, xi_unit: &[f64], out: &mut [Complex64]) {
        debug_assert_eq!(out.len(), self.n_comp * self.n_comp);
        (self.eval)(xi_unit, out);
    }

    /// Largest spectral norm over a sample of unit directions; exact bound
    /// for the L^2 operator norm when maximized over the occupied lattice.
    pub fn sup_spectral_norm(&self, directions: &[Vec<f64>]) -> f64 {
        let n = self.n_comp;
        let mut buf = vec![Complex64::default(); n * n];
        let mut best: f64 = 0.0;
        for dir in directions {
            self.eval(dir, &mut buf);
            best = best.max(spectral_norm(&buf, n));
        }
        best
    }
}

/// Spectral norm of a small row-major complex matrix via power iteration on
/// M* M (deterministic start vector).
pub(crate) fn spectral_norm(m: &[Complex64], n: usize) -> f64 {
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + i as f64 * 0.3, 0.1 * i as f64))
        .collect();
    let mut mv = vec![Complex64::default(); n];
    let mut mtmv = vec![Complex64::default(); n];
    let mut lambda = 0.0;
    for _ in 0..60 {
        for i in 0..n {
            mv[i] = (0..n).map(|j| m[i * n + j] * v[j]).sum();
        }
        for j in 0..n {
            mtmv[j] = (0..n).map(|i| m[i * n + j].conj() * mv[i]).sum();
        }
        let nrm: f64 = mtmv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm == 0.0 {
            return 0.0;
        }
        lambda = nrm;
        for (vi, wi) in v.iter_mut().zip(mtmv.iter()) {
            *vi = wi / nrm;
        }
    }
    lambda.sqrt()
}

/// How the radial factor scales each frequency bin.
#[derive(Clone, Copy, Debug)]
pub enum MultiplierMode {
    /// Plain T_Psi with the zero bin annihilated.
    Full,
    /// (1 - eta_R) Psi: keeps only high frequencies.
    Highpass { radius: f64 },
    /// eta_R Psi with the zero bin passed through: the band-limiting
    /// (compact) part of the operator.
    Bandlimit { radius: f64 },
}

/// Apply a Fourier multiplier operator with the requested radial scaling.
pub fn apply_multiplier(
    symbol: &MultiplierSymbol,
    field: &SampledField,
    mode: MultiplierMode,
    eta: &CutoffProfile,
) -> Result<SampledField> {
    if symbol.n_comp() != field.n_comp() {
        return Err(McfError::DimensionMismatch {
            left: symbol.n_comp(),
            right: field.n_comp(),
        });
    }
    if let MultiplierMode::Highpass { radius } = mode {
        if radius >= field.grid().nyquist() {
            return Err(McfError::CutoffTooLarge {
                radius,
                nyquist: field.grid().nyquist(),
            });
        }
    }

    let grid = field.grid();
    let n = symbol.n_comp();
    let mut spec = forward_dft(field);
    let mut mat = vec![Complex64::default(); n * n];
    let mut tmp = vec![Complex64::default(); n];
    let mut unit = [0.0f64; crate::field::MAX_DIM];

    for cell in 0..grid.cells() {
        let abs = grid.freq_abs(cell);
        if abs == 0.0 {
            match mode {
                MultiplierMode::Bandlimit { .. } => {}
                _ => spec.coeff_mut(cell).fill(Complex64::default()),
            }
            continue;
        }
        let scale = match mode {
            MultiplierMode::Full => 1.0,
            MultiplierMode::Highpass { radius } => 1.0 - eta.eval_scaled(abs, radius),
            MultiplierMode::Bandlimit { radius } => eta.eval_scaled(abs, radius),
        };
        let coeff = spec.coeff_mut(cell);
        if scale == 0.0 {
            coeff.fill(Complex64::default());
            continue;
        }
        let k = grid.freq(cell);
        for a in 0..grid.dim() {
            unit[a] = k[a] as f64 / abs;
        }
        symbol.eval(&unit[..grid.dim()], &mut mat);
        for i in 0..n {
            tmp[i] = (0..n).map(|j| mat[i * n + j] * coeff[j]).sum::<Complex64>() * scale;
        }
        coeff.copy_from_slice(&tmp);
    }
    Ok(inverse_dft(&spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;

    fn sine_field(grid: Grid, j: u32) -> SampledField {
        SampledField::from_fn(grid, 1, |x, out| {
            out[0] = Complex64::new((2.0 * PI * j as f64 * x[0]).sin(), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn cutoff_profiles_are_monotone_with_unit_origin() {
        for profile in [CutoffProfile::RaisedCosine, CutoffProfile::Smoothstep] {
            assert_eq!(profile.eval_scaled(0.0, 5.0), 1.0);
            let mut prev = 1.0;
            for i in 0..=200 {
                let t = i as f64 * 2.5 / 200.0;
                let v = profile.eval(t);
                assert!(v <= prev + 1e-15, "{profile:?} not nonincreasing at {t}");
                assert!((0.0..=1.0).contains(&v));
                prev = v;
            }
            assert_eq!(profile.eval(2.0), 0.0);
        }
    }

    #[test]
    fn highpass_above_occupied_band_kills_everything() {
        let grid = Grid::new(1, 64).unwrap();
        let f = sine_field(grid, 4);
        // All mass at |k| = 4 <= R, well inside eta = 1.
        let out = apply_multiplier(
            &MultiplierSymbol::identity(1),
            &f,
            MultiplierMode::Highpass { radius: 8.0 },
            &CutoffProfile::RaisedCosine,
        )
        .unwrap();
        assert!(out.lp_norm(2.0) < 1e-13);
    }

    #[test]
    fn highpass_at_nyquist_is_rejected() {
        let grid = Grid::new(1, 64).unwrap();
        let f = sine_field(grid, 4);
        let r = apply_multiplier(
            &MultiplierSymbol::identity(1),
            &f,
            MultiplierMode::Highpass { radius: 32.0 },
            &CutoffProfile::RaisedCosine,
        );
        assert!(matches!(r, Err(McfError::CutoffTooLarge { .. })));
    }

    /// The half-line symbol keeps exactly the positive-frequency half of a
    /// sine: sin(2 pi j x) goes to exp(2 pi i j x)/(2i), checked bin-wise.
    #[test]
    fn half_line_extracts_analytic_part_of_sine() {
        let grid = Grid::new(1, 64).unwrap();
        let j = 5u32;
        let f = sine_field(grid, j);
        let out = apply_multiplier(
            &MultiplierSymbol::half_space(1, 0),
            &f,
            MultiplierMode::Full,
            &CutoffProfile::RaisedCosine,
        )
        .unwrap();
        let spec = forward_dft(&out);
        for cell in 0..grid.cells() {
            let k = grid.freq(cell)[0];
            let expect = if k == j as i64 {
                Complex64::new(0.0, -0.5) // 1/(2i)
            } else {
                Complex64::default()
            };
            assert!(
                (spec.coeff(cell)[0] - expect).norm() < 1e-13,
                "bin {k}: {:?}",
                spec.coeff(cell)[0]
            );
        }
        let expected = SampledField::from_fn(grid, 1, |x, out| {
            out[0] = Complex64::from_polar(0.5, 2.0 * PI * j as f64 * x[0] - PI / 2.0)
        })
        .unwrap();
        assert!(out.sub(&expected).lp_norm(2.0) < 1e-12);
    }

    #[test]
    fn bandlimit_below_frequency_gives_zero() {
        let grid = Grid::new(1, 64).unwrap();
        let f = sine_field(grid, 8);
        // eta_R vanishes at |k| >= 2R; j = 8 = 2 * 4.
        let out = apply_multiplier(
            &MultiplierSymbol::identity(1),
            &f,
            MultiplierMode::Bandlimit { radius: 4.0 },
            &CutoffProfile::RaisedCosine,
        )
        .unwrap();
        assert!(out.lp_norm(2.0) < 1e-13);
    }

    #[test]
    fn bandlimit_passes_the_mean_through() {
        let grid = Grid::new(1, 64).unwrap();
        let f = SampledField::constant(grid, &[Complex64::new(0.7, -0.2)]);
        let out = apply_multiplier(
            &MultiplierSymbol::identity(1),
            &f,
            MultiplierMode::Bandlimit { radius: 4.0 },
            &CutoffProfile::RaisedCosine,
        )
        .unwrap();
        assert!(out.sub(&f).lp_norm(2.0) < 1e-13);
        let killed = apply_multiplier(
            &MultiplierSymbol::identity(1),
            &f,
            MultiplierMode::Full,
            &CutoffProfile::RaisedCosine,
        )
        .unwrap();
        assert!(killed.lp_norm(2.0) < 1e-13);
    }

    /// Exact L^2 operator bound by Parseval: ||T_Psi u||_2 is at most the
    /// largest spectral norm of Psi over occupied lattice directions.
    #[test]
    fn l2_operator_bound_is_exact() {
        let grid = Grid::new(2, 16).unwrap();
        let sym = MultiplierSymbol::new("test", 2, |xi, out| {
            out[0] = Complex64::new(xi[0], 0.0);
            out[1] = Complex64::new(0.0, xi[1]);
            out[2] = Complex64::new(xi[1], 0.0);
            out[3] = Complex64::new(-xi[0], 0.5);
        });
        let f = SampledField::from_fn(grid, 2, |x, out| {
            out[0] = Complex64::new((2.0 * PI * 3.0 * x[0]).cos(), x[1]);
            out[1] = Complex64::new((2.0 * PI * 2.0 * x[1]).sin(), -0.3);
        })
        .unwrap();
        let out = apply_multiplier(
            &sym,
            &f,
            MultiplierMode::Full,
            &CutoffProfile::RaisedCosine,
        )
        .unwrap();
        let mut dirs = Vec::new();
        for cell in 0..grid.cells() {
            let abs = grid.freq_abs(cell);
            if abs > 0.0 {
                let k = grid.freq(cell);
                dirs.push(vec![k[0] as f64 / abs, k[1] as f64 / abs]);
            }
        }
        let bound = sym.sup_spectral_norm(&dirs) * f.lp_norm(2.0);
        assert!(out.lp_norm(2.0) <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn mismatched_components_are_rejected() {
        let grid = Grid::new(1, 16).unwrap();
        let f = SampledField::zeros(grid, 2);
        let r = apply_multiplier(
            &MultiplierSymbol::identity(3),
            &f,
            MultiplierMode::Full,
            &CutoffProfile::RaisedCosine,
        );
        assert!(matches!(r, Err(McfError::DimensionMismatch { .. })));
    }

    #[test]
    fn cone_cutoff_selects_directions() {
        let sym = MultiplierSymbol::cone_cutoff(1, vec![1.0, 0.0], PI / 8.0);
        let mut m = [Complex64::default()];
        sym.eval(&[1.0, 0.0], &mut m);
        assert!((m[0].re - 1.0).abs() < 1e-15);
        sym.eval(&[-1.0, 0.0], &mut m);
        assert!(m[0].norm() < 1e-15);
        sym.eval(&[0.0, 1.0], &mut m);
        assert!(m[0].norm() < 1e-15);
    }
}
