//! The empirical pairing evaluator: raw values I(j,R) of
//!
//! ```text
//! I(j,R) = int h(., u_j) . conj( T_{(1-eta_R) Psi}[u_j] ) dx,
//! ```
//!
//! their double-limit extrapolation in j then R, the weak-limit shortcut
//! int h(., u_j) . conj(T_Psi[u_j - u]), and the coarse spatial density of
//! |u_j|^p.
//!
//! The double limit is realized as stabilization: once every active
//! frequency of u_j clears the cutoff band, the raw values become
//! independent of both j and R up to quadrature error, and the
//! extrapolation simply averages the stabilized tail while recording the
//! observed spread.

use num_complex::Complex64;

use crate::error::{McfError, Result};
use crate::field::{Grid, SampledField, MAX_DIM};
use crate::fourier::{apply_multiplier, CutoffProfile, MultiplierMode, MultiplierSymbol};
use crate::synth::Sequence;
use crate::testfun::TestIntegrand;

/// j/R schedules and tolerances shared by all limit evaluations.
#[derive(Clone, Debug)]
pub struct LimitParams {
    pub j_list: Vec<u32>,
    pub r_list: Vec<f64>,
    pub tolerance: f64,
    pub eta: CutoffProfile,
}

impl LimitParams {
    /// n = 4096, j in {32,...,256}, R in {2,...,16}: all active frequencies
    /// stay within Nyquist/4 and all cutoffs below min j / 2.
    pub fn default_1d() -> LimitParams {
        LimitParams {
            j_list: vec![32, 64, 128, 256],
            r_list: vec![2.0, 4.0, 8.0, 16.0],
            tolerance: 1e-2,
            eta: CutoffProfile::RaisedCosine,
        }
    }

    /// Concentrations carry spectrum at every scale, so the (j,R) bias of
    /// the raw values decays like R/j; this schedule keeps it below half a
    /// percent on n = 16384.
    pub fn concentration_1d() -> LimitParams {
        LimitParams {
            j_list: vec![256, 512, 1024],
            r_list: vec![2.0, 3.0, 4.0, 6.0],
            tolerance: 1e-2,
            eta: CutoffProfile::RaisedCosine,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> LimitParams {
        self.tolerance = tol;
        self
    }

    pub fn with_eta(mut self, eta: CutoffProfile) -> LimitParams {
        self.eta = eta;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.j_list.len() < 2 || self.j_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(McfError::InvalidParameter(
                "j_list must be strictly increasing with at least two entries".into(),
            ));
        }
        if self.r_list.is_empty() || self.r_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(McfError::InvalidParameter(
                "R_list must be strictly increasing and nonempty".into(),
            ));
        }
        let r_max = *self.r_list.last().unwrap();
        let j_min = self.j_list[0] as f64;
        if r_max > j_min / 2.0 {
            return Err(McfError::InvalidParameter(format!(
                "max R = {r_max} exceeds min j / 2 = {}",
                j_min / 2.0
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairingMode {
    DoubleLimit,
    Shortcut,
}

/// Table of raw pairing values with the extrapolated limit and diagnostics.
#[derive(Clone, Debug)]
pub struct EmpiricalPairing {
    /// Rows (j, R, value); shortcut rows carry R = 0.
    pub table: Vec<(u32, f64, Complex64)>,
    pub value: Complex64,
    /// Max deviation of the largest-j row from the extrapolated value.
    pub spread: f64,
    /// Largest-two-j agreement within tolerance at every R.
    pub stabilized: bool,
    pub mode: PairingMode,
}

impl EmpiricalPairing {
    pub fn table_csv(&self) -> String {
        let mut out = String::from("j,R,re,im\n");
        for (j, r, v) in &self.table {
            out.push_str(&format!("{j},{r:.17e},{:.17e},{:.17e}\n", v.re, v.im));
        }
        out
    }
}

/// Pointwise integrand field phi(x) h(u(x)).
pub fn h_field(f: &TestIntegrand, u: &SampledField) -> SampledField {
    let n = u.n_comp();
    let grid = u.grid();
    let mut out = SampledField::zeros(grid, n);
    let mut buf = vec![Complex64::default(); n];
    for cell in 0..grid.cells() {
        f.eval_h(u.value(cell), &mut buf);
        let x = grid.center(cell);
        let phi = f.spatial_factor(&x[..grid.dim()]);
        let slot = out.value_mut(cell);
        for c in 0..n {
            slot[c] = buf[c] * phi;
        }
    }
    out
}

/// One raw pairing value at fixed (j, R). The per-sample Hoelder bound
/// |I| <= ||phi h(.,u_j)||_{p'} ||T u_j||_p holds exactly on the discrete
/// measure and is asserted.
pub fn pairing_raw(
    f: &TestIntegrand,
    symbol: &MultiplierSymbol,
    u_j: &SampledField,
    radius: f64,
    eta: &CutoffProfile,
) -> Result<Complex64> {
    if f.n_comp() != u_j.n_comp() || symbol.n_comp() != u_j.n_comp() {
        return Err(McfError::DimensionMismatch {
            left: f.n_comp(),
            right: u_j.n_comp(),
        });
    }
    if radius >= u_j.grid().nyquist() / 2.0 {
        return Err(McfError::CutoffTooLarge {
            radius,
            nyquist: u_j.grid().nyquist() / 2.0,
        });
    }
    let transformed = apply_multiplier(symbol, u_j, MultiplierMode::Highpass { radius }, eta)?;
    let hf = h_field(f, u_j);
    let value = hf.integrate_dot(&transformed);

    let p = f.exponent();
    let q = p / (p - 1.0);
    let bound = hf.lp_norm(q) * transformed.lp_norm(p);
    debug_assert!(
        value.norm() <= bound * (1.0 + 1e-9) + 1e-12,
        "Hoelder bound violated: |I| = {} > {bound}",
        value.norm()
    );
    Ok(value)
}

/// The weak-limit shortcut: int h(., u_j) . conj(T_Psi[u_j - u]).
pub fn pairing_shortcut_raw(
    f: &TestIntegrand,
    symbol: &MultiplierSymbol,
    u_j: &SampledField,
    u: &SampledField,
    eta: &CutoffProfile,
) -> Result<Complex64> {
    let diff = u_j.sub(u);
    let transformed = apply_multiplier(symbol, &diff, MultiplierMode::Full, eta)?;
    let hf = h_field(f, u_j);
    Ok(hf.integrate_dot(&transformed))
}

/// Run the full (j, R) table and extrapolate.
pub fn pairing_limit(
    f: &TestIntegrand,
    symbol: &MultiplierSymbol,
    gen: &dyn Sequence,
    grid: Grid,
    params: &LimitParams,
    mode: PairingMode,
) -> Result<EmpiricalPairing> {
    params.validate()?;
    let j_max = *params.j_list.last().unwrap();
    gen.validate_budget(j_max, &grid)?;

    match mode {
        PairingMode::DoubleLimit => double_limit(f, symbol, gen, grid, params),
        PairingMode::Shortcut => shortcut(f, symbol, gen, grid, params),
    }
}

fn double_limit(
    f: &TestIntegrand,
    symbol: &MultiplierSymbol,
    gen: &dyn Sequence,
    grid: Grid,
    params: &LimitParams,
) -> Result<EmpiricalPairing> {
    let mut table = Vec::new();
    for &j in &params.j_list {
        let u_j = gen.emit(j, grid)?;
        for &r in &params.r_list {
            let v = pairing_raw(f, symbol, &u_j, r, &params.eta)?;
            table.push((j, r, v));
        }
    }

    let nj = params.j_list.len();
    let (j_top, j_snd) = (params.j_list[nj - 1], params.j_list[nj - 2]);
    let row = |j: u32, r: f64| -> Complex64 {
        table
            .iter()
            .find(|(jj, rr, _)| *jj == j && *rr == r)
            .map(|(_, _, v)| *v)
            .unwrap()
    };

    let mut stabilized = true;
    let mut worst = 0.0f64;
    for &r in &params.r_list {
        let d = (row(j_top, r) - row(j_snd, r)).norm();
        worst = worst.max(d);
        if d > params.tolerance {
            stabilized = false;
        }
    }
    if worst > 10.0 * params.tolerance {
        let partial = EmpiricalPairing {
            table,
            value: Complex64::default(),
            spread: worst,
            stabilized: false,
            mode: PairingMode::DoubleLimit,
        };
        return Err(McfError::NonConvergent {
            message: format!(
                "largest-j rows differ by {worst:.3e} (> 10 x tolerance {})",
                params.tolerance
            ),
            table: partial.table_csv(),
        });
    }

    // average the stabilized pair over the top half of the R schedule
    let half = params.r_list.len().div_ceil(2);
    let top_r = &params.r_list[params.r_list.len() - half..];
    let mut value = Complex64::default();
    for &r in top_r {
        value += (row(j_top, r) + row(j_snd, r)) / 2.0;
    }
    value /= top_r.len() as f64;

    let spread = params
        .r_list
        .iter()
        .map(|&r| (row(j_top, r) - value).norm())
        .fold(0.0f64, f64::max);

    Ok(EmpiricalPairing {
        table,
        value,
        spread,
        stabilized,
        mode: PairingMode::DoubleLimit,
    })
}

fn shortcut(
    f: &TestIntegrand,
    symbol: &MultiplierSymbol,
    gen: &dyn Sequence,
    grid: Grid,
    params: &LimitParams,
) -> Result<EmpiricalPairing> {
    let u = gen.weak_limit_field(grid);
    let nj = params.j_list.len();
    let mut table = Vec::new();
    let mut tail = Vec::new();
    for &j in &params.j_list[nj - 2..] {
        let u_j = gen.emit(j, grid)?;
        let v = pairing_shortcut_raw(f, symbol, &u_j, &u, &params.eta)?;
        table.push((j, 0.0, v));
        tail.push(v);
    }
    let diff = (tail[1] - tail[0]).norm();
    if diff > 10.0 * params.tolerance {
        let partial = EmpiricalPairing {
            table,
            value: Complex64::default(),
            spread: diff,
            stabilized: false,
            mode: PairingMode::Shortcut,
        };
        return Err(McfError::NonConvergent {
            message: format!(
                "shortcut values differ by {diff:.3e} across largest j (> 10 x tolerance)"
            ),
            table: partial.table_csv(),
        });
    }
    let value = (tail[0] + tail[1]) / 2.0;
    Ok(EmpiricalPairing {
        table,
        value,
        spread: diff,
        stabilized: diff <= params.tolerance,
        mode: PairingMode::Shortcut,
    })
}

/// Run both modes and check that they agree within the combined spread.
pub fn pairing_limit_checked(
    f: &TestIntegrand,
    symbol: &MultiplierSymbol,
    gen: &dyn Sequence,
    grid: Grid,
    params: &LimitParams,
) -> Result<EmpiricalPairing> {
    let dl = pairing_limit(f, symbol, gen, grid, params, PairingMode::DoubleLimit)?;
    let sc = pairing_limit(f, symbol, gen, grid, params, PairingMode::Shortcut)?;
    let gap = (dl.value - sc.value).norm();
    let budget = dl.spread + sc.spread + params.tolerance;
    if gap > budget {
        return Err(McfError::NonConvergent {
            message: format!(
                "double-limit and shortcut disagree: |{} - {}| = {gap:.3e} > {budget:.3e}",
                dl.value, sc.value
            ),
            table: dl.table_csv(),
        });
    }
    Ok(dl)
}

/// Coarse-binned spatial density (bins centered at i/B per axis, so the
/// torus seam is a bin center).
#[derive(Clone, Debug)]
pub struct SpatialDensity {
    pub dim: usize,
    pub bins_per_axis: usize,
    /// Mass per bin (integral of |u|^p over the bin), flat row major.
    pub masses: Vec<f64>,
}

impl SpatialDensity {
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn bin_of(&self, x: &[f64]) -> usize {
        let b = self.bins_per_axis;
        let mut idx = 0usize;
        for a in 0..self.dim {
            let i = (x[a] * b as f64).round() as i64;

            idx = idx * b + i.rem_euclid(b as i64) as usize;
        }
        idx
    }

    pub fn bin_center(&self, flat: usize) -> [f64; MAX_DIM] {
        let mut c = [0.0; MAX_DIM];
        let mut rest = flat;
        for a in (0..self.dim).rev() {
            c[a] = (rest % self.bins_per_axis) as f64 / self.bins_per_axis as f64;
            rest /= self.bins_per_axis;
        }
        c
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin,center,mass\n");
        for (i, m) in self.masses.iter().enumerate() {
            let c = self.bin_center(i);
            let cs: Vec<String> = c[..self.dim].iter().map(|v| format!("{v:.6}")).collect();
            out.push_str(&format!("{i},{},{m:.17e}\n", cs.join(" ")));
        }
        out
    }
}

fn density_at(field: &SampledField, p: f64, bins: usize) -> SpatialDensity {
    let grid = field.grid();
    let mut density = SpatialDensity {
        dim: grid.dim(),
        bins_per_axis: bins,
        masses: vec![0.0; bins.pow(grid.dim() as u32)],
    };
    for cell in 0..grid.cells() {
        let x = grid.center(cell);
        let mut sq = 0.0;
        for v in field.value(cell) {
            sq += v.norm_sqr();
        }
        let bin = density.bin_of(&x[..grid.dim()]);
        density.masses[bin] += sq.powf(p / 2.0) * grid.cell_volume();
    }
    density
}

/// Coarse spatial density of |u_j|^p at the largest j, with a stability
/// check across the top two members.
pub fn lambda_omega(
    gen: &dyn Sequence,
    p: f64,
    grid: Grid,
    j_list: &[u32],
    bins: usize,
    tolerance: f64,
) -> Result<SpatialDensity> {
    assert!(j_list.len() >= 2);
    let nj = j_list.len();
    let top = density_at(&gen.emit(j_list[nj - 1], grid)?, p, bins);
    let snd = density_at(&gen.emit(j_list[nj - 2], grid)?, p, bins);
    let scale = top.total_mass().max(1e-30);
    let worst = top
        .masses
        .iter()
        .zip(snd.masses.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if worst > tolerance * scale {
        return Err(McfError::Instability(format!(
            "density varies by {worst:.3e} across the top two j (scale {scale:.3e})"
        )));
    }
    Ok(top)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{
        ConcentrationGenerator, ConstantGenerator, Direction, OscillationGenerator,
        StrongGenerator,
    };
    use crate::testfun::identity_integrand;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn osc1() -> OscillationGenerator {
        OscillationGenerator::two_state(
            1,
            2.0,
            Direction::axis(1, 0),
            vec![c(1.0)],
            vec![c(0.0)],
            0.5,
        )
    }

    fn grid1d() -> Grid {
        Grid::new(1, 4096).unwrap()
    }

    /// Brute-force oracle: lim int u_j (u_j - M) = theta A(A-M) + (1-theta) B(B-M).
    /// For OSC1 this is 1/4; the raw FFT pipeline must land within 1e-2.
    #[test]
    fn osc1_raw_pairing_matches_symbolic_oracle() {
        let (a, b, theta) = (1.0f64, 0.0f64, 0.5f64);
        let m = theta * a + (1.0 - theta) * b;
        let oracle = theta * a * (a - m) + (1.0 - theta) * b * (b - m);
        assert!((oracle - 0.25).abs() < 1e-15);

        let f = identity_integrand(2.0, 1);
        let sym = MultiplierSymbol::identity(1);
        let u = osc1().emit(64, grid1d()).unwrap();
        let v = pairing_raw(&f, &sym, &u, 4.0, &CutoffProfile::RaisedCosine).unwrap();
        assert!((v - c(oracle)).norm() < 1e-2, "got {v}");
    }

    #[test]
    fn strongly_convergent_sequence_pairs_to_zero() {
        let gen = StrongGenerator::new(vec![c(0.0)], Direction::axis(1, 0), 2.0);
        let f = identity_integrand(2.0, 1);
        let sym = MultiplierSymbol::identity(1);
        let u = gen.emit(64, grid1d()).unwrap();
        let v = pairing_raw(&f, &sym, &u, 4.0, &CutoffProfile::RaisedCosine).unwrap();
        assert!(v.norm() < 1e-3, "got {v}");
    }

    #[test]
    fn hoelder_bound_holds_exactly() {
        let f = identity_integrand(2.0, 1);
        let sym = MultiplierSymbol::identity(1);
        let u = osc1().emit(32, grid1d()).unwrap();
        let transformed = apply_multiplier(
            &sym,
            &u,
            MultiplierMode::Highpass { radius: 4.0 },
            &CutoffProfile::RaisedCosine,
        )
        .unwrap();
        let hf = h_field(&f, &u);
        let v = hf.integrate_dot(&transformed);
        let bound = hf.lp_norm(2.0) * transformed.lp_norm(2.0);
        assert!(v.norm() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn osc1_limit_value() {
        let f = identity_integrand(2.0, 1);
        let sym = MultiplierSymbol::identity(1);
        let params = LimitParams::default_1d();
        let pairing = pairing_limit_checked(&f, &sym, &osc1(), grid1d(), &params).unwrap();
        assert!(pairing.stabilized);
        assert!((pairing.value - c(0.25)).norm() < 1e-2, "{:?}", pairing.value);
    }

    /// Half the sine energy sits on positive frequencies: half-line symbol
    /// gives 1/4, the full symbol 1/2.
    #[test]
    fn sine_directional_split() {
        let gen = OscillationGenerator::sine(2.0);
        let f = identity_integrand(2.0, 1);
        let params = LimitParams::default_1d();
        let half = pairing_limit(
            &f,
            &MultiplierSymbol::half_space(1, 0),
            &gen,
            grid1d(),
            &params,
            PairingMode::DoubleLimit,
        )
        .unwrap();
        assert!((half.value - c(0.25)).norm() < 1e-2, "{:?}", half.value);
        let full = pairing_limit(
            &f,
            &MultiplierSymbol::identity(1),
            &gen,
            grid1d(),
            &params,
            PairingMode::Shortcut,
        )
        .unwrap();
        assert!((full.value - c(0.5)).norm() < 1e-2, "{:?}", full.value);
    }

    #[test]
    fn concentration_limit_is_profile_energy() {
        let grid = Grid::new(1, 16384).unwrap();
        let gen = ConcentrationGenerator::tent(1, 2.0, vec![c(1.0)]);
        let energy = gen.profile_field(grid).lp_norm(2.0).powi(2);
        assert!((energy - 1.0 / 6.0).abs() < 1e-3);
        let f = identity_integrand(2.0, 1);
        let params = LimitParams::concentration_1d();
        let pairing =
            pairing_limit_checked(&f, &MultiplierSymbol::identity(1), &gen, grid, &params)
                .unwrap();
        assert!(
            (pairing.value - c(energy)).norm() < 0.02 * energy,
            "{} vs {energy}",
            pairing.value
        );
    }

    /// A sequence whose values alternate with the parity of j never
    /// stabilizes; the table is attached to the diagnostic failure.
    #[test]
    fn non_convergence_is_diagnosed() {
        struct Flip;
        impl Sequence for Flip {
            fn exponent(&self) -> f64 {
                2.0
            }
            fn n_comp(&self) -> usize {
                1
            }
            fn descriptor(&self) -> String {
                "flip".into()
            }
            fn eval(&self, j: u32, x: &[f64], out: &mut [Complex64]) {
                let amp = if j.trailing_zeros() % 2 == 0 { 1.0 } else { 2.0 };
                out[0] = Complex64::new(
                    amp * (2.0 * std::f64::consts::PI * j as f64 * x[0]).sin(),
                    0.0,
                );
            }
            fn weak_limit(&self, _x: &[f64], out: &mut [Complex64]) {
                out[0] = Complex64::default();
            }
        }
        let f = identity_integrand(2.0, 1);
        let r = pairing_limit(
            &f,
            &MultiplierSymbol::identity(1),
            &Flip,
            grid1d(),
            &LimitParams::default_1d(),
            PairingMode::DoubleLimit,
        );
        match r {
            Err(McfError::NonConvergent { table, .. }) => {
                assert!(table.contains("j,R,re,im"));
            }
            other => panic!("expected NonConvergent, got {other:?}"),
        }
    }

    #[test]
    fn lambda_omega_osc1_uniform() {
        let density = lambda_omega(&osc1(), 2.0, grid1d(), &[64, 128], 16, 0.02).unwrap();
        let per_bin = 0.5 / 16.0;
        for m in &density.masses {
            assert!((m - per_bin).abs() < 0.02 * per_bin, "{m} vs {per_bin}");
        }
    }

    #[test]
    fn lambda_omega_concentration_localizes() {
        let gen = ConcentrationGenerator::tent(1, 2.0, vec![c(1.0)]);
        let energy = gen.profile_field(grid1d()).lp_norm(2.0).powi(2);
        let density = lambda_omega(&gen, 2.0, grid1d(), &[128, 256], 16, 0.02).unwrap();
        let total = density.total_mass();
        assert!((total - energy).abs() < 0.02 * energy);
        let zero_bin = density.bin_of(&[0.0]);
        assert!(density.masses[zero_bin] >= 0.95 * total);
    }

    #[test]
    fn lambda_omega_constant_uniform() {
        let gen = ConstantGenerator::new(vec![c(2.0)], 2.0);
        let density = lambda_omega(&gen, 2.0, grid1d(), &[64, 128], 8, 0.02).unwrap();
        for m in &density.masses {
            assert!((m - 4.0 / 8.0).abs() < 1e-12);
        }
    }
}
