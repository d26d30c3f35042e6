//! The test-function algebra: integrands f(x,z,q) = h(x,z) . q with
//! exponent p, the ball compactification transform S^q, recession
//! functions, and the sup norm over the compactified vertical domain.
//!
//! The change of variables w = z/(1+|z|) maps C^N onto the open unit ball;
//! S^q carries the weight (1 -/+ |.|)^q so that S^q S^{-q} = id. An
//! integrand belongs to the class for exponent p when S^{p-1}h extends
//! continuously to the closed ball; its boundary values are exactly the
//! (p-1)-recession function h^inf.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use crate::error::{McfError, Result};

pub type VerticalFn = Arc<dyn Fn(&[Complex64], &mut [Complex64]) + Send + Sync>;
pub type SpatialFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

fn vec_abs(z: &[Complex64]) -> f64 {
    z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Compactify: (S^q h)(w) = (1-|w|)^q h(w/(1-|w|)) on the open unit ball.
/// At |w| = 1 the value must come from recession data.
pub fn s_compactify(
    q: f64,
    h: VerticalFn,
    recession: Option<VerticalFn>,
) -> impl Fn(&[Complex64], &mut [Complex64]) -> Result<()> {
    move |w: &[Complex64], out: &mut [Complex64]| {
        let r = vec_abs(w);
        if r >= 1.0 {
            match &recession {
                Some(rec) => {
                    let e: Vec<Complex64> = w.iter().map(|v| v / r).collect();
                    rec(&e, out);
                    Ok(())
                }
                None => Err(McfError::MissingRecession),
            }
        } else {
            let z: Vec<Complex64> = w.iter().map(|v| v / (1.0 - r)).collect();
            h(&z, out);
            let scale = (1.0 - r).powf(q);
            for v in out.iter_mut() {
                *v *= scale;
            }
            Ok(())
        }
    }
}

/// Decompactify: (S^{-q} g)(z) = (1+|z|)^q g(z/(1+|z|)).
pub fn s_decompactify(q: f64, g: VerticalFn) -> impl Fn(&[Complex64], &mut [Complex64]) {
    move |z: &[Complex64], out: &mut [Complex64]| {
        let r = vec_abs(z);
        let w: Vec<Complex64> = z.iter().map(|v| v / (1.0 + r)).collect();
        g(&w, out);
        let scale = (1.0 + r).powf(q);
        for v in out.iter_mut() {
            *v *= scale;
        }
    }
}

/// An integrand f(x,z,q) = phi(x) h(z) . q with exponent p.
#[derive(Clone)]
pub struct TestIntegrand {
    name: String,
    p: f64,
    n_comp: usize,
    spatial: Option<SpatialFn>,
    vertical: VerticalFn,
    recession: Option<VerticalFn>,
    /// Whether S^{p-1}h extends continuously to the closed ball.
    s_continuous: bool,
}

impl std::fmt::Debug for TestIntegrand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TestIntegrand({}, p={}, N={})", self.name, self.p, self.n_comp)
    }
}

impl TestIntegrand {
    pub fn new(
        name: impl Into<String>,
        p: f64,
        n_comp: usize,
        vertical: impl Fn(&[Complex64], &mut [Complex64]) + Send + Sync + 'static,
    ) -> TestIntegrand {
        assert!(p > 1.0 && p.is_finite(), "exponent must lie in (1, inf)");
        TestIntegrand {
            name: name.into(),
            p,
            n_comp,
            spatial: None,
            vertical: Arc::new(vertical),
            recession: None,
            s_continuous: false,
        }
    }

    pub fn with_recession(
        mut self,
        recession: impl Fn(&[Complex64], &mut [Complex64]) + Send + Sync + 'static,
    ) -> TestIntegrand {
        self.recession = Some(Arc::new(recession));
        self.s_continuous = true;
        self
    }

    /// Mark S^{p-1}h continuous up to the sphere with vanishing boundary
    /// values (recession identically zero).
    pub fn with_zero_recession(mut self) -> TestIntegrand {
        let n = self.n_comp;
        let _ = n;
        self.recession = Some(Arc::new(|_z: &[Complex64], out: &mut [Complex64]| {
            out.fill(Complex64::default())
        }));
        self.s_continuous = true;
        self
    }

    pub fn with_spatial(
        mut self,
        name_suffix: &str,
        phi: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> TestIntegrand {
        self.name = format!("{}*{}", self.name, name_suffix);
        self.spatial = Some(Arc::new(phi));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn n_comp(&self) -> usize {
        self.n_comp
    }

    pub fn has_recession(&self) -> bool {
        self.recession.is_some()
    }

    pub fn spatial_factor(&self, x: &[f64]) -> Complex64 {
        match &self.spatial {
            Some(phi) => phi(x),
            None => Complex64::new(1.0, 0.0),
        }
    }

    pub fn eval_h(&self, z: &[Complex64], out: &mut [Complex64]) {
        (self.vertical)(z, out);
    }

    /// h^inf evaluated at a sphere point e (|e| = 1).
    pub fn eval_recession(&self, e: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        match &self.recession {
            Some(rec) => {
                rec(e, out);
                Ok(())
            }
            None => Err(McfError::MissingRecession),
        }
    }

    /// S^{p-1}h at a ball point |w| < 1 (or boundary via recession).
    pub fn eval_compactified(&self, w: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let f = s_compactify(self.p - 1.0, self.vertical.clone(), self.recession.clone());
        f(w, out)
    }

    /// Sup of |S^{p-1}h| over a deterministic ball sample of the given
    /// density, together with the recession values at the sphere points of
    /// the sample. Errs when the flag is unset and the sphere values keep
    /// changing under radial refinement (no recession function).
    pub fn fp_norm_and_recession(
        &self,
        sample_density: usize,
    ) -> Result<(f64, Vec<(Vec<Complex64>, Vec<Complex64>)>)> {
        let dirs = ball_directions(self.n_comp, sample_density);
        let mut buf = vec![Complex64::default(); self.n_comp];
        let mut norm: f64 = 0.0;

        // interior sup over radii x directions
        for ir in 0..sample_density {
            let r = (ir as f64 + 0.5) / sample_density as f64;
            for dir in &dirs {
                let w: Vec<Complex64> = dir.iter().map(|v| v * r).collect();
                self.eval_compactified(&w, &mut buf)?;
                norm = norm.max(vec_abs(&buf));
            }
        }

        let mut sphere_values = Vec::with_capacity(dirs.len());
        if self.s_continuous {
            for dir in &dirs {
                self.eval_recession(dir, &mut buf)?;
                norm = norm.max(vec_abs(&buf));
                sphere_values.push((dir.clone(), buf.clone()));
            }
        } else {
            // radial refinement x4: the limit along each direction must
            // settle for a recession function to exist
            for dir in &dirs {
                let mut prev: Option<Vec<Complex64>> = None;
                let mut eps = 1.0 / sample_density as f64;
                for _ in 0..4 {
                    let w: Vec<Complex64> = dir.iter().map(|v| v * (1.0 - eps)).collect();
                    self.eval_compactified(&w, &mut buf)?;
                    if let Some(p) = &prev {
                        let diff: f64 = p
                            .iter()
                            .zip(buf.iter())
                            .map(|(a, b)| (a - b).norm_sqr())
                            .sum::<f64>()
                            .sqrt();
                        if diff > 1e-2 * (1.0 + vec_abs(&buf)) {
                            return Err(McfError::NoRecession(format!(
                                "direction {dir:?}, jump {diff:.3e} at eps {eps:.3e}"
                            )));
                        }
                    }
                    prev = Some(buf.clone());
                    eps /= 4.0;
                }
                let v = prev.unwrap();
                norm = norm.max(vec_abs(&v));
                sphere_values.push((dir.clone(), v));
            }
        }
        Ok((norm, sphere_values))
    }
}

/// Deterministic unit directions in C^N. For N = 1 a uniform circle grid;
/// otherwise seeded Gaussian directions (the per-real-dimension tensor grid
/// is unaffordable beyond two real dimensions).
pub fn ball_directions(n_comp: usize, density: usize) -> Vec<Vec<Complex64>> {
    if n_comp == 1 {
        (0..density.max(4))
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / density.max(4) as f64;
                vec![Complex64::from_polar(1.0, a)]
            })
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ba11);
        let count = density.max(4) * 2 * n_comp;
        (0..count)
            .map(|_| {
                let mut v: Vec<Complex64> = (0..n_comp)
                    .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                    .collect();
                let r = vec_abs(&v);
                for z in v.iter_mut() {
                    *z /= r;
                }
                v
            })
            .collect()
    }
}

// ----------------------------------------------------------------------
// Named integrand stock
// ----------------------------------------------------------------------

/// f(z,q) = z . q; valid for any p >= 2 with recession e at p = 2.
pub fn identity_integrand(p: f64, n_comp: usize) -> TestIntegrand {
    let base = TestIntegrand::new("identity", p, n_comp, |z, out| out.copy_from_slice(z));
    if (p - 2.0).abs() < 1e-12 {
        base.with_recession(|e, out| out.copy_from_slice(e))
    } else {
        base
    }
}

/// f(z,q) = (z - z0) . q.
pub fn shifted_integrand(p: f64, z0: Vec<Complex64>) -> TestIntegrand {
    let n = z0.len();
    let z0c = z0.clone();
    let base = TestIntegrand::new("shifted", p, n, move |z, out| {
        for c in 0..z.len() {
            out[c] = z[c] - z0c[c];
        }
    });
    if (p - 2.0).abs() < 1e-12 {
        base.with_recession(|e, out| out.copy_from_slice(e))
    } else {
        base
    }
}

/// f(z,q) = |z|^{p-2} z . q, exactly (p-1)-homogeneous.
pub fn power_integrand(p: f64, n_comp: usize) -> TestIntegrand {
    TestIntegrand::new("power", p, n_comp, move |z, out| {
        let r = vec_abs(z);
        let s = if r == 0.0 { 0.0 } else { r.powf(p - 2.0) };
        for c in 0..z.len() {
            out[c] = z[c] * s;
        }
    })
    .with_recession(|e, out| out.copy_from_slice(e))
}

/// The ramp used by truncations: 0 below 1/2, linear on [1/2,1], 1 above.
pub fn truncation_ramp(t: f64) -> f64 {
    if t < 0.5 {
        0.0
    } else if t <= 1.0 {
        2.0 * t - 1.0
    } else {
        1.0
    }
}

/// Truncation integrand h_K(z) = g(|z|/K) |z|^{p-2} z; its recession is the
/// full power integrand since g(.) saturates at 1.
pub fn truncation_integrand(p: f64, n_comp: usize, cutoff: f64) -> TestIntegrand {
    TestIntegrand::new(
        format!("truncation(K={cutoff})"),
        p,
        n_comp,
        move |z, out| {
            let r = vec_abs(z);
            let s = truncation_ramp(r / cutoff) * if r == 0.0 { 0.0 } else { r.powf(p - 2.0) };
            for c in 0..z.len() {
                out[c] = z[c] * s;
            }
        },
    )
    .with_recession(|e, out| out.copy_from_slice(e))
}

/// Triangular window of the given width around a ball point w0 (in the
/// compactified coordinates w = z/(1+|z|)), decompactified into an
/// integrand. Finite window centers give compactly supported h with zero
/// recession; sphere-cap centers (|w0| = 1) give a nonzero recession.
pub fn ball_window_integrand(
    p: f64,
    center_w: Vec<Complex64>,
    width: f64,
    direction: Vec<Complex64>,
) -> TestIntegrand {
    let n = center_w.len();
    assert_eq!(direction.len(), n);
    let tri = move |w: &[Complex64]| -> f64 {
        let mut d2 = 0.0;
        for (a, b) in w.iter().zip(center_w.iter()) {
            d2 += (a - b).norm_sqr();
        }
        (1.0 - d2.sqrt() / width).max(0.0)
    };
    let g: VerticalFn = {
        let tri = tri.clone();
        let dir = direction.clone();
        Arc::new(move |w: &[Complex64], out: &mut [Complex64]| {
            let t = tri(w);
            for c in 0..out.len() {
                out[c] = dir[c] * t;
            }
        })
    };
    let h = s_decompactify(p - 1.0, g);
    TestIntegrand::new(format!("window(width={width})"), p, n, h).with_recession(
        move |e, out| {
            // boundary values of the compactified window at the sphere
            let t = tri(e);
            for c in 0..out.len() {
                out[c] = direction[c] * t;
            }
        },
    )
}

/// Anisotropy integrand on m x d matrices (flattened row major):
/// h(A) = A (I - n0 n0^T), so that f(A) = h(A) : conj(A) = |A|^2 - |A n0|^2.
pub fn anisotropy_integrand(rows: usize, cols: usize, n0: Vec<f64>) -> TestIntegrand {
    assert_eq!(n0.len(), cols);
    let nn: f64 = n0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let n0: Vec<f64> = n0.iter().map(|v| v / nn).collect();
    let n0c = n0.clone();
    TestIntegrand::new("anisotropy", 2.0, rows * cols, move |z, out| {
        // out = A - (A n0) n0^T
        for i in 0..rows {
            let mut an = Complex64::default();
            for j in 0..cols {
                an += z[i * cols + j] * n0c[j];
            }
            for j in 0..cols {
                out[i * cols + j] = z[i * cols + j] - an * n0c[j];
            }
        }
    })
    .with_recession(move |e, out| {
        for i in 0..rows {
            let mut an = Complex64::default();
            for j in 0..cols {
                an += e[i * cols + j] * n0[j];
            }
            for j in 0..cols {
                out[i * cols + j] = e[i * cols + j] - an * n0[j];
            }
        }
    })
}

/// The reproducible countable test battery: low-order trigonometric
/// spatial factors times tensor Bernstein polynomials on the closed ball
/// pulled back through S^{-(p-1)}. Scalar target space.
pub fn test_battery(p: f64, max_degree: usize) -> Vec<TestIntegrand> {
    let mut battery = Vec::new();
    let bernstein = |k: usize, n: usize, t: f64| -> f64 {
        let mut binom = 1.0;
        for i in 0..k {
            binom *= (n - i) as f64 / (k - i) as f64;
        }
        binom * t.powi(k as i32) * (1.0 - t).powi((n - k) as i32)
    };
    for deg_re in 0..=max_degree {
        for deg_im in 0..=max_degree {
            let g: VerticalFn = Arc::new(move |w: &[Complex64], out: &mut [Complex64]| {
                // map ball coordinates into [0,1]^2 per real dimension
                let s = (w[0].re + 1.0) / 2.0;
                let t = (w[0].im + 1.0) / 2.0;
                out[0] = Complex64::new(
                    bernstein(deg_re, max_degree, s.clamp(0.0, 1.0))
                        * bernstein(deg_im, max_degree, t.clamp(0.0, 1.0)),
                    0.0,
                );
            });
            let g_rec = g.clone();
            let h = s_decompactify(p - 1.0, g);
            let integrand = TestIntegrand::new(
                format!("bernstein({deg_re},{deg_im})"),
                p,
                1,
                h,
            )
            .with_recession(move |e, out| g_rec(e, out));
            battery.push(integrand);
        }
    }
    battery
}

/// The standard trigonometric spatial factors used alongside the battery.
pub fn trig_spatial_factors() -> Vec<(String, SpatialFn)> {
    let mk = |name: &str, f: SpatialFn| (name.to_string(), f);
    vec![
        mk("one", Arc::new(|_| Complex64::new(1.0, 0.0))),
        mk(
            "1+cos",
            Arc::new(|x: &[f64]| {
                Complex64::new(1.0 + 0.5 * (2.0 * std::f64::consts::PI * x[0]).cos(), 0.0)
            }),
        ),
        mk(
            "1+sin2",
            Arc::new(|x: &[f64]| {
                Complex64::new(1.0 + 0.3 * (4.0 * std::f64::consts::PI * x[0]).sin(), 0.0)
            }),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn s_transform_round_trip_is_identity() {
        for q in [0.5, 1.0, 2.0, 3.5] {
            let h: VerticalFn = Arc::new(|z, out| {
                out[0] = z[0] * z[0] + c(1.0, 0.5);
            });
            let fwd = s_compactify(q, h.clone(), None);
            let mut g_values = Vec::new();
            // sample ball points, push forward then back
            for i in 0..32 {
                let w = vec![Complex64::from_polar(
                    0.9 * (i as f64 + 0.5) / 32.0,
                    0.37 * i as f64,
                )];
                let mut out = [Complex64::default()];
                fwd(&w, &mut out).unwrap();
                g_values.push((w, out[0]));
            }
            // decompactify h's compactification and compare with h itself
            let fwd2 = s_compactify(q, h.clone(), None);
            let g: VerticalFn = Arc::new(move |w, out| {
                fwd2(w, out).unwrap();
            });
            let back = s_decompactify(q, g);
            for (w, _) in &g_values {
                let r = vec_abs(w);
                let z: Vec<Complex64> = w.iter().map(|v| v / (1.0 - r)).collect();
                let mut got = [Complex64::default()];
                back(&z, &mut got);
                let mut want = [Complex64::default()];
                h(&z, &mut want);
                assert!(
                    (got[0] - want[0]).norm() < 1e-10 * (1.0 + want[0].norm()),
                    "q={q}"
                );
            }
        }
    }

    /// h(z) = z with q = 1 compactifies to the identity on the ball.
    #[test]
    fn linear_h_compactifies_to_identity() {
        let h: VerticalFn = Arc::new(|z, out| out.copy_from_slice(z));
        let fwd = s_compactify(1.0, h, None);
        for i in 0..16 {
            let w = vec![Complex64::from_polar(0.95 * (i as f64 + 0.5) / 16.0, i as f64)];
            let mut out = [Complex64::default()];
            fwd(&w, &mut out).unwrap();
            assert!((out[0] - w[0]).norm() < 1e-13);
        }
    }

    /// h(z) = |z|^2 at q = 1 grows like 1/(1-|w|) near the sphere: not in
    /// the p = 2 class, flagged by the recession check.
    #[test]
    fn quadratic_h_is_rejected_for_p2() {
        let f = TestIntegrand::new("quadratic", 2.0, 1, |z, out| {
            out[0] = c(vec_abs(z).powi(2), 0.0)
        });
        match f.fp_norm_and_recession(16) {
            Err(McfError::NoRecession(_)) => {}
            other => panic!("expected NoRecession, got {other:?}"),
        }
    }

    #[test]
    fn identity_integrand_has_unit_norm_and_identity_recession() {
        let f = identity_integrand(2.0, 1);
        let (norm, sphere) = f.fp_norm_and_recession(64).unwrap();
        assert!((norm - 1.0).abs() < 1e-6, "norm {norm}");
        for (e, v) in &sphere {
            assert!((v[0] - e[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn decaying_h_has_zero_recession() {
        let f = TestIntegrand::new("decaying", 2.0, 1, |z, out| {
            out[0] = c(1.0 / (1.0 + vec_abs(z)), 0.0)
        });
        let (_, sphere) = f.fp_norm_and_recession(32).unwrap();
        for (_, v) in &sphere {
            assert!(v[0].norm() < 1e-6);
        }
    }

    #[test]
    fn homogeneous_h_recession_equals_restriction() {
        for p in [1.5, 2.0, 3.0] {
            let f = power_integrand(p, 1);
            let (norm, sphere) = f.fp_norm_and_recession(32).unwrap();
            assert!((norm - 1.0).abs() < 1e-6);
            for (e, v) in &sphere {
                assert!((v[0] - e[0]).norm() < 1e-12, "p={p}");
            }
        }
    }

    /// Growth bound |h(z)| <= norm (1+|z|)^{p-1} on random samples.
    #[test]
    fn growth_estimate_holds_on_random_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for f in [
            identity_integrand(2.0, 1),
            power_integrand(2.5, 1),
            truncation_integrand(2.0, 1, 2.0),
        ] {
            let (norm, _) = f.fp_norm_and_recession(64).unwrap();
            let mut buf = [Complex64::default()];
            for _ in 0..200 {
                let z = vec![c(
                    20.0 * (rng.gen::<f64>() - 0.5),
                    20.0 * (rng.gen::<f64>() - 0.5),
                )];
                f.eval_h(&z, &mut buf);
                let bound = norm * (1.0 + vec_abs(&z)).powf(f.exponent() - 1.0);
                assert!(
                    buf[0].norm() <= bound * (1.0 + 1e-9) + 1e-12,
                    "{} at {z:?}: {} > {}",
                    f.name(),
                    buf[0].norm(),
                    bound
                );
            }
        }
    }

    #[test]
    fn recession_norm_bounded_by_fp_norm() {
        let f = truncation_integrand(2.0, 1, 1.5);
        let (norm, sphere) = f.fp_norm_and_recession(48).unwrap();
        for (_, v) in &sphere {
            assert!(vec_abs(v) <= norm * (1.0 + 1e-9));
        }
    }

    #[test]
    fn window_integrand_is_compactly_supported_in_z() {
        let f = ball_window_integrand(
            2.0,
            vec![c(0.3, 0.0)],
            0.1,
            vec![c(1.0, 0.0)],
        );
        let mut out = [Complex64::default()];
        // window center in z coordinates: w/(1-w) = 0.3/0.7
        f.eval_h(&[c(0.3 / 0.7, 0.0)], &mut out);
        assert!(out[0].norm() > 0.5);
        f.eval_h(&[c(5.0, 0.0)], &mut out);
        assert!(out[0].norm() == 0.0);
        // zero recession for an interior window
        f.eval_recession(&[c(1.0, 0.0)], &mut out).unwrap();
        assert!(out[0].norm() == 0.0);
    }

    #[test]
    fn battery_is_nonempty_and_bounded() {
        let battery = test_battery(2.0, 2);
        assert_eq!(battery.len(), 9);
        for f in &battery {
            let (norm, _) = f.fp_norm_and_recession(16).unwrap();
            assert!(norm.is_finite() && norm <= 1.0 + 1e-9);
        }
    }
}
