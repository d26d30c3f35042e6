//! Generators of the canonical weakly-converging sequences: simple
//! oscillations u_j(x) = w(j x . m), concentrations u_j = Z0 j^{d/p} w(jx),
//! and hierarchical laminates built from strip mixtures of the two.
//!
//! All generators are deterministic in j and expose both pointwise
//! evaluation and grid emission. Directions are integer lattice vectors so
//! that every emitted field is exactly torus periodic.

use num_complex::Complex64;
use std::sync::Arc;

use crate::error::{McfError, Result};
use crate::field::{Grid, SampledField, MAX_DIM};

/// A rational oscillation direction, stored as a reduced integer vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Direction {
    ints: [i64; MAX_DIM],
    dim: usize,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Direction {
    pub fn new(dim: usize, ints: &[i64]) -> Result<Direction> {
        assert!(dim >= 1 && dim <= MAX_DIM && ints.len() >= dim);
        let mut v = [0i64; MAX_DIM];
        v[..dim].copy_from_slice(&ints[..dim]);
        let g = v[..dim].iter().fold(0, |acc, &x| gcd(acc, x));
        if g == 0 {
            return Err(McfError::InvalidParameter(
                "direction must be a nonzero lattice vector".into(),
            ));
        }
        for x in &mut v[..dim] {
            *x /= g;
        }
        Ok(Direction { ints: v, dim })
    }

    pub fn axis(dim: usize, a: usize) -> Direction {
        let mut v = [0i64; MAX_DIM];
        v[a] = 1;
        Direction { ints: v, dim }
    }

    /// Recognize a unit vector as a rational lattice direction with small
    /// integer entries; rejects irrational directions, which would violate
    /// torus periodicity.
    pub fn from_unit_vector(v: &[f64], max_denominator: i64) -> Result<Direction> {
        let dim = v.len();
        for den in 1..=max_denominator {
            let mut ints = [0i64; MAX_DIM];
            let mut ok = true;
            // scale so the largest entry maps to `den`
            let vmax = v.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
            if vmax == 0.0 {
                break;
            }
            for a in 0..dim {
                let scaled = v[a] / vmax * den as f64;
                let r = scaled.round();
                if (scaled - r).abs() > 1e-9 * den as f64 {
                    ok = false;
                    break;
                }
                ints[a] = r as i64;
            }
            if ok {
                return Direction::new(dim, &ints[..dim]);
            }
        }
        Err(McfError::IrrationalDirection(v.to_vec(), max_denominator))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ints(&self) -> &[i64] {
        &self.ints[..self.dim]
    }

    pub fn norm(&self) -> f64 {
        self.ints[..self.dim]
            .iter()
            .map(|&v| (v * v) as f64)
            .sum::<f64>()
            .sqrt()
    }

    pub fn unit(&self) -> [f64; MAX_DIM] {
        let n = self.norm();
        let mut u = [0.0; MAX_DIM];
        for a in 0..self.dim {
            u[a] = self.ints[a] as f64 / n;
        }
        u
    }

    /// Lattice phase x . m, periodic with period 1 on the torus.
    pub fn phase(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for a in 0..self.dim {
            s += self.ints[a] as f64 * x[a];
        }
        s
    }

    pub fn parallel_to(&self, other: &Direction) -> bool {
        // reduced integer vectors are parallel iff equal up to sign
        self.ints()
            .iter()
            .zip(other.ints())
            .all(|(a, b)| a == b)
            || self
                .ints()
                .iter()
                .zip(other.ints())
                .all(|(a, b)| *a == -b)
    }
}

/// A member-emitting description of a norm-bounded sequence together with
/// its declared weak limit and exponent.
pub trait Sequence: Send + Sync {
    fn exponent(&self) -> f64;
    fn n_comp(&self) -> usize;
    fn descriptor(&self) -> String;
    fn eval(&self, j: u32, x: &[f64], out: &mut [Complex64]);
    fn weak_limit(&self, x: &[f64], out: &mut [Complex64]);

    /// Largest lattice frequency per unit j carrying leading content.
    fn fundamental_frequency(&self) -> f64 {
        1.0
    }

    /// Reject j choices whose active frequencies do not fit the grid.
    fn validate_budget(&self, j_max: u32, grid: &Grid) -> Result<()> {
        let active = j_max as f64 * self.fundamental_frequency();
        if active > grid.nyquist() / 2.0 {
            return Err(McfError::ScaleSeparation(format!(
                "active frequency {active} exceeds Nyquist/2 = {}",
                grid.nyquist() / 2.0
            )));
        }
        Ok(())
    }

    fn emit(&self, j: u32, grid: Grid) -> Result<SampledField> {
        SampledField::from_fn(grid, self.n_comp(), |x, out| self.eval(j, x, out))
    }

    fn weak_limit_field(&self, grid: Grid) -> SampledField {
        SampledField::from_fn(grid, self.n_comp(), |x, out| self.weak_limit(x, out))
            .expect("weak limits are finite")
    }
}

pub type ProfileFn = Arc<dyn Fn(f64, &mut [Complex64]) + Send + Sync>;

/// u_j(x) = w(j x . m) for a 1-periodic profile w and lattice direction m.
#[derive(Clone)]
pub struct OscillationGenerator {
    name: String,
    profile: ProfileFn,
    direction: Direction,
    mean: Vec<Complex64>,
    p: f64,
    n_comp: usize,
}

impl OscillationGenerator {
    pub fn new(
        name: impl Into<String>,
        n_comp: usize,
        p: f64,
        direction: Direction,
        profile: impl Fn(f64, &mut [Complex64]) + Send + Sync + 'static,
    ) -> OscillationGenerator {
        let profile: ProfileFn = Arc::new(profile);
        // period-cell average by midpoint quadrature
        let samples = 1 << 14;
        let mut mean = vec![Complex64::default(); n_comp];
        let mut buf = vec![Complex64::default(); n_comp];
        for i in 0..samples {
            profile((i as f64 + 0.5) / samples as f64, &mut buf);
            for (m, v) in mean.iter_mut().zip(buf.iter()) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= samples as f64;
        }
        OscillationGenerator {
            name: name.into(),
            profile,
            direction,
            mean,
            p,
            n_comp,
        }
    }

    /// Two-state profile taking value `a` on [0,theta) and `b` on [theta,1),
    /// with the exact mean theta a + (1-theta) b.
    pub fn two_state(
        n_comp: usize,
        p: f64,
        direction: Direction,
        a: Vec<Complex64>,
        b: Vec<Complex64>,
        theta: f64,
    ) -> OscillationGenerator {
        assert!(theta > 0.0 && theta < 1.0);
        assert_eq!(a.len(), n_comp);
        assert_eq!(b.len(), n_comp);
        let (ac, bc) = (a.clone(), b.clone());
        let mut gen = OscillationGenerator::new(
            format!("two-state(theta={theta})"),
            n_comp,
            p,
            direction,
            move |s, out| {
                let frac = s - s.floor();
                let v = if frac < theta { &ac } else { &bc };
                out.copy_from_slice(v);
            },
        );
        for c in 0..n_comp {
            gen.mean[c] = a[c] * theta + b[c] * (1.0 - theta);
        }
        gen
    }

    pub fn sine(p: f64) -> OscillationGenerator {
        let mut gen = OscillationGenerator::new(
            "sine",
            1,
            p,
            Direction::axis(1, 0),
            |s, out| out[0] = Complex64::new((2.0 * std::f64::consts::PI * s).sin(), 0.0),
        );
        gen.mean[0] = Complex64::default();
        gen
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn mean(&self) -> &[Complex64] {
        &self.mean
    }

    pub fn eval_profile(&self, s: f64, out: &mut [Complex64]) {
        (self.profile)(s, out)
    }
}

impl Sequence for OscillationGenerator {
    fn exponent(&self) -> f64 {
        self.p
    }

    fn n_comp(&self) -> usize {
        self.n_comp
    }

    fn descriptor(&self) -> String {
        format!(
            "oscillation[{} dir={:?} p={}]",
            self.name,
            self.direction.ints(),
            self.p
        )
    }

    fn eval(&self, j: u32, x: &[f64], out: &mut [Complex64]) {
        (self.profile)(j as f64 * self.direction.phase(x), out);
    }

    fn weak_limit(&self, _x: &[f64], out: &mut [Complex64]) {
        out.copy_from_slice(&self.mean);
    }

    fn fundamental_frequency(&self) -> f64 {
        self.direction.norm()
    }
}

pub type BumpFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// u_j(x) = Z0 j^{d/p} w(j x~) with x~ the torus representative in
/// [-1/2,1/2)^d; w >= 0 is supported inside the fundamental cell.
#[derive(Clone)]
pub struct ConcentrationGenerator {
    name: String,
    profile: BumpFn,
    z0: Vec<Complex64>,
    p: f64,
    dim: usize,
}

impl ConcentrationGenerator {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        p: f64,
        z0: Vec<Complex64>,
        profile: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> ConcentrationGenerator {
        ConcentrationGenerator {
            name: name.into(),
            profile: Arc::new(profile),
            z0,
            p,
            dim,
        }
    }

    /// Radial tent max(0, 1 - 4|y|): support radius 1/4.
    pub fn tent(dim: usize, p: f64, z0: Vec<Complex64>) -> ConcentrationGenerator {
        ConcentrationGenerator::new("tent", dim, p, z0, |y| {
            let r: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            (1.0 - 4.0 * r).max(0.0)
        })
    }

    /// Smooth mollifier bump with support radius 1/4 and unit peak.
    pub fn smooth_bump(dim: usize, p: f64, z0: Vec<Complex64>) -> ConcentrationGenerator {
        ConcentrationGenerator::new("smooth-bump", dim, p, z0, |y| {
            let t: f64 = y.iter().map(|v| 4.0 * v * 4.0 * v).sum::<f64>();
            if t < 1.0 {
                (1.0 - 1.0 / (1.0 - t)).exp()
            } else {
                0.0
            }
        })
    }

    pub fn profile_field(&self, grid: Grid) -> SampledField {
        let profile = self.profile.clone();
        let dim = self.dim;
        SampledField::from_fn(grid, 1, move |x, out| {
            let mut y = [0.0; MAX_DIM];
            for a in 0..dim {
                y[a] = x[a] - x[a].round();
            }
            out[0] = Complex64::new(profile(&y[..dim]), 0.0);
        })
        .expect("profile is finite")
    }

    pub fn eval_profile(&self, y: &[f64]) -> f64 {
        (self.profile)(y)
    }

    pub fn z0(&self) -> &[Complex64] {
        &self.z0
    }
}

impl Sequence for ConcentrationGenerator {
    fn exponent(&self) -> f64 {
        self.p
    }

    fn n_comp(&self) -> usize {
        self.z0.len()
    }

    fn descriptor(&self) -> String {
        format!("concentration[{} d={} p={}]", self.name, self.dim, self.p)
    }

    fn eval(&self, j: u32, x: &[f64], out: &mut [Complex64]) {
        let mut y = [0.0; MAX_DIM];
        for a in 0..self.dim {
            let xc = x[a] - x[a].round();
            y[a] = j as f64 * xc;
        }
        let amp = (j as f64).powf(self.dim as f64 / self.p) * (self.profile)(&y[..self.dim]);
        for (o, z) in out.iter_mut().zip(self.z0.iter()) {
            *o = z * amp;
        }
    }

    fn weak_limit(&self, _x: &[f64], out: &mut [Complex64]) {
        out.fill(Complex64::default());
    }

    fn validate_budget(&self, j_max: u32, grid: &Grid) -> Result<()> {
        if (j_max as usize) * 16 > grid.points() {
            return Err(McfError::ScaleSeparation(format!(
                "concentration at j = {j_max} leaves fewer than 16 samples across the support \
                 on n = {}",
                grid.points()
            )));
        }
        Ok(())
    }
}

/// An inner layer of a laminate: a simple oscillation or a constant state.
/// Oscillations and constants are equiintegrable with constant weak limits,
/// which is what the strip construction requires.
#[derive(Clone)]
pub enum LaminateLayer {
    Oscillation(OscillationGenerator),
    Constant(Vec<Complex64>),
}

impl LaminateLayer {
    fn n_comp(&self) -> usize {
        match self {
            LaminateLayer::Oscillation(o) => o.n_comp(),
            LaminateLayer::Constant(c) => c.len(),
        }
    }

    fn mean(&self) -> Vec<Complex64> {
        match self {
            LaminateLayer::Oscillation(o) => o.mean().to_vec(),
            LaminateLayer::Constant(c) => c.clone(),
        }
    }

    fn fundamental(&self) -> f64 {
        match self {
            LaminateLayer::Oscillation(o) => o.fundamental_frequency(),
            LaminateLayer::Constant(_) => 0.0,
        }
    }

    /// Evaluate the layer inside a strip. `local` is the normal coordinate
    /// rescaled to [0,1) across the strip; a layer oscillating parallel to
    /// the lamination normal is evaluated as a rescaled copy (j periods per
    /// strip), a transverse one fills the strip directly.
    fn eval_in_strip(
        &self,
        j: u32,
        x: &[f64],
        local: f64,
        normal: &Direction,
        out: &mut [Complex64],
    ) {
        match self {
            LaminateLayer::Constant(c) => out.copy_from_slice(c),
            LaminateLayer::Oscillation(o) => {
                if o.direction().parallel_to(normal) {
                    o.eval_profile(j as f64 * local, out)
                } else {
                    o.eval(j, x, out)
                }
            }
        }
    }
}

/// Strips of width theta/k filled with layer 1 and width (1-theta)/k with
/// layer 2, normal to an integer lattice direction; the fast scale j and
/// the slow scale k are coupled by j = sep * k along the sequence.
#[derive(Clone)]
pub struct LaminateGenerator {
    layer1: LaminateLayer,
    layer2: LaminateLayer,
    theta: f64,
    normal: Direction,
    /// Scale separation j / k; at least 8.
    sep: u32,
    p: f64,
}

impl LaminateGenerator {
    pub fn new(
        layer1: LaminateLayer,
        layer2: LaminateLayer,
        theta: f64,
        normal: Direction,
        sep: u32,
        p: f64,
    ) -> Result<LaminateGenerator> {
        if !(0.0 < theta && theta < 1.0) {
            return Err(McfError::InvalidParameter("theta must lie in (0,1)".into()));
        }
        if sep < 8 {
            return Err(McfError::ScaleSeparation(format!(
                "fast/slow ratio {sep} below the required 8"
            )));
        }
        if layer1.n_comp() != layer2.n_comp() {
            return Err(McfError::DimensionMismatch {
                left: layer1.n_comp(),
                right: layer2.n_comp(),
            });
        }
        Ok(LaminateGenerator {
            layer1,
            layer2,
            theta,
            normal,
            sep,
            p,
        })
    }

    pub fn slow_scale(&self, j: u32) -> u32 {
        (j / self.sep).max(1)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn normal(&self) -> Direction {
        self.normal
    }

    pub fn layer_means(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        (self.layer1.mean(), self.layer2.mean())
    }

    fn max_profile_frequency(&self) -> f64 {
        self.layer1.fundamental().max(self.layer2.fundamental()).max(1.0)
    }

    /// The strip mixture at explicit fast scale j and slow scale k.
    pub fn eval_jk(&self, j: u32, k: u32, x: &[f64], out: &mut [Complex64]) {
        let s = k as f64 * self.normal.phase(x);
        let sigma = s - s.floor();
        if sigma < self.theta {
            let local = sigma / self.theta;
            self.layer1.eval_in_strip(j, x, local, &self.normal, out);
        } else {
            let local = (sigma - self.theta) / (1.0 - self.theta);
            self.layer2.eval_in_strip(j, x, local, &self.normal, out);
        }
    }

    /// Emit the strip mixture w_{j,k}; errs when the rescaled fine scale
    /// does not fit the grid budget.
    pub fn emit_jk(&self, j: u32, k: u32, grid: Grid) -> Result<SampledField> {
        let active = j as f64 * k as f64 * self.max_profile_frequency();
        if active > grid.nyquist() / 4.0 {
            return Err(McfError::ScaleSeparation(format!(
                "j*k*profile frequency = {active} exceeds Nyquist/4 = {}",
                grid.nyquist() / 4.0
            )));
        }
        SampledField::from_fn(grid, self.n_comp(), |x, out| self.eval_jk(j, k, x, out))
    }

    /// The slow limit field taking the layer means on the strip families.
    pub fn slow_limit_field(&self, k: u32, grid: Grid) -> SampledField {
        let (a, b) = self.layer_means();
        SampledField::from_fn(grid, self.n_comp(), |x, out| {
            let s = k as f64 * self.normal.phase(x);
            let sigma = s - s.floor();
            out.copy_from_slice(if sigma < self.theta { &a } else { &b });
        })
        .expect("means are finite")
    }
}

impl Sequence for LaminateGenerator {
    fn exponent(&self) -> f64 {
        self.p
    }

    fn n_comp(&self) -> usize {
        self.layer1.n_comp()
    }

    fn descriptor(&self) -> String {
        format!(
            "laminate[theta={} normal={:?} sep={}]",
            self.theta,
            self.normal.ints(),
            self.sep
        )
    }

    fn eval(&self, j: u32, x: &[f64], out: &mut [Complex64]) {
        self.eval_jk(j, self.slow_scale(j), x, out)
    }

    fn weak_limit(&self, _x: &[f64], out: &mut [Complex64]) {
        let (a, b) = self.layer_means();
        for c in 0..out.len() {
            out[c] = a[c] * self.theta + b[c] * (1.0 - self.theta);
        }
    }

    fn fundamental_frequency(&self) -> f64 {
        // the rescaled copies oscillate at j*k/theta along the normal
        self.max_profile_frequency() / self.theta.min(1.0 - self.theta)
    }

    fn validate_budget(&self, j_max: u32, grid: &Grid) -> Result<()> {
        let k = self.slow_scale(j_max);
        let active = j_max as f64 * k as f64 * self.max_profile_frequency();
        if active > grid.nyquist() / 4.0 {
            return Err(McfError::ScaleSeparation(format!(
                "j*k*profile frequency = {active} exceeds Nyquist/4 = {}",
                grid.nyquist() / 4.0
            )));
        }
        Ok(())
    }
}

/// A constant sequence (generates the zero form).
#[derive(Clone)]
pub struct ConstantGenerator {
    value: Vec<Complex64>,
    p: f64,
}

impl ConstantGenerator {
    pub fn new(value: Vec<Complex64>, p: f64) -> ConstantGenerator {
        ConstantGenerator { value, p }
    }
}

impl Sequence for ConstantGenerator {
    fn exponent(&self) -> f64 {
        self.p
    }

    fn n_comp(&self) -> usize {
        self.value.len()
    }

    fn descriptor(&self) -> String {
        "constant".into()
    }

    fn eval(&self, _j: u32, _x: &[f64], out: &mut [Complex64]) {
        out.copy_from_slice(&self.value);
    }

    fn weak_limit(&self, _x: &[f64], out: &mut [Complex64]) {
        out.copy_from_slice(&self.value);
    }

    fn fundamental_frequency(&self) -> f64 {
        0.0
    }

    fn validate_budget(&self, _j_max: u32, _grid: &Grid) -> Result<()> {
        Ok(())
    }
}

/// A strongly convergent sequence u + j^{-1} sin(2 pi j x . m) z0.
#[derive(Clone)]
pub struct StrongGenerator {
    limit: Vec<Complex64>,
    direction: Direction,
    p: f64,
}

impl StrongGenerator {
    pub fn new(limit: Vec<Complex64>, direction: Direction, p: f64) -> StrongGenerator {
        StrongGenerator {
            limit,
            direction,
            p,
        }
    }
}

impl Sequence for StrongGenerator {
    fn exponent(&self) -> f64 {
        self.p
    }

    fn n_comp(&self) -> usize {
        self.limit.len()
    }

    fn descriptor(&self) -> String {
        "strongly-convergent".into()
    }

    fn eval(&self, j: u32, x: &[f64], out: &mut [Complex64]) {
        let s = (2.0 * std::f64::consts::PI * j as f64 * self.direction.phase(x)).sin()
            / j as f64;
        for (o, l) in out.iter_mut().zip(self.limit.iter()) {
            *o = l + Complex64::new(s, 0.0);
        }
    }

    fn weak_limit(&self, _x: &[f64], out: &mut [Complex64]) {
        out.copy_from_slice(&self.limit);
    }

    fn fundamental_frequency(&self) -> f64 {
        self.direction.norm()
    }
}

/// Two sequences glued along a spatial region; used by locality checks.
pub struct PatchedGenerator {
    pub inside: Arc<dyn Sequence>,
    pub outside: Arc<dyn Sequence>,
    pub region: Arc<dyn Fn(&[f64]) -> bool + Send + Sync>,
}

impl Sequence for PatchedGenerator {
    fn exponent(&self) -> f64 {
        self.inside.exponent()
    }

    fn n_comp(&self) -> usize {
        self.inside.n_comp()
    }

    fn descriptor(&self) -> String {
        format!(
            "patched[{} | {}]",
            self.inside.descriptor(),
            self.outside.descriptor()
        )
    }

    fn eval(&self, j: u32, x: &[f64], out: &mut [Complex64]) {
        if (self.region)(x) {
            self.inside.eval(j, x, out)
        } else {
            self.outside.eval(j, x, out)
        }
    }

    fn weak_limit(&self, x: &[f64], out: &mut [Complex64]) {
        if (self.region)(x) {
            self.inside.weak_limit(x, out)
        } else {
            self.outside.weak_limit(x, out)
        }
    }

    fn fundamental_frequency(&self) -> f64 {
        self.inside
            .fundamental_frequency()
            .max(self.outside.fundamental_frequency())
    }
}

/// Histogram of exact values taken by a field, for laminate mass checks.
pub fn value_histogram(field: &SampledField, tol: f64) -> Vec<(Vec<Complex64>, f64)> {
    let mut clusters: Vec<(Vec<Complex64>, usize)> = Vec::new();
    'cells: for cell in 0..field.grid().cells() {
        let v = field.value(cell);
        for (center, count) in clusters.iter_mut() {
            let d: f64 = center
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if d <= tol {
                *count += 1;
                continue 'cells;
            }
        }
        clusters.push((v.to_vec(), 1));
    }
    let total = field.grid().cells() as f64;
    clusters
        .into_iter()
        .map(|(center, count)| (center, count as f64 / total))
        .collect()
}
