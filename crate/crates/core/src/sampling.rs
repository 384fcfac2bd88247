//! Mixture importance sampling of volume and level-surface integrals in star coordinates
//! around the domain center.
//!
//! A volume point is `w = c + (1 − σ) R(ω) ω` with `R(ω)` the boundary radius along ω.
//! The proposal for σ mixes the uniform law with dyadic bands `[2^{−k}, 2^{1−k})`;
//! the proposal for ω mixes the uniform law with nested caps around a pole.

use crate::cplx::{self, CVec, Point, C};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Monte-Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// A weighted volume sample handed to integrands.
#[derive(Clone, Debug)]
pub struct VolumeSample {
    pub w: Point,
    /// −r(w), exact for centered quadrics
    pub neg_r: f64,
    pub sigma: f64,
    pub omega: CVec,
}

#[derive(Clone, Debug)]
pub struct Sampler<'a> {
    dom: &'a DomainSpec,
    pole: Option<CVec>,
    depth_levels: usize,
    cap_levels: usize,
}

fn lens_area(t: f64) -> f64 {
    // unit disc ∩ disc(1, t)
    let t = t.min(2.0);
    (1.0 - t * t / 2.0).acos() + t * t * (t / 2.0).acos() - 0.5 * t * (4.0 - t * t).max(0.0).sqrt()
}

fn cap_scale(l: usize) -> f64 {
    2.0 * 0.5f64.powi(l as i32)
}

impl<'a> Sampler<'a> {
    /// `pole`: direction to concentrate on (normalized internally); `None` disables caps.
    pub fn new(dom: &'a DomainSpec, pole: Option<&[C]>, depth_levels: usize, cap_levels: usize) -> Self {
        let pole = pole.and_then(|p| {
            let nn = cplx::norm(p);
            (nn > 1e-300).then(|| p.iter().map(|x| x / nn).collect::<CVec>())
        });
        let cap_levels = if pole.is_some() { cap_levels } else { 0 };
        let depth_levels = if dom.quadric_weights().is_some() {
            depth_levels.min(60)
        } else {
            depth_levels.min(36)
        };
        Sampler {
            dom,
            pole,
            depth_levels,
            cap_levels,
        }
    }

    /// Sampler with caps around the direction of `z` from the center.
    pub fn toward(dom: &'a DomainSpec, z: &Point, depth_levels: usize, cap_levels: usize) -> Self {
        let v = cplx::sub(&z.0, &dom.center.0);
        Self::new(dom, Some(&v), depth_levels, cap_levels)
    }

    pub fn strata(&self) -> usize {
        (self.depth_levels + 1) * (self.cap_levels + 1)
    }

    fn depth_density(&self, sigma: f64) -> f64 {
        let k = (-sigma.log2()).ceil();
        if k >= 1.0 && k <= self.depth_levels as f64 {
            1.0 + k.exp2()
        } else {
            1.0
        }
    }

    fn draw_depth<R: Rng>(&self, comp: usize, rng: &mut R) -> f64 {
        let u: f64 = 1.0 - rng.gen::<f64>();
        if comp == 0 {
            u
        } else {
            let lo = 0.5f64.powi(comp as i32);
            (lo * (1.0 + (1.0 - u))).min(2.0 * lo * (1.0 - f64::EPSILON))
        }
    }

    /// Mixture density of ω relative to the normalized sphere measure, summed over components.
    fn sphere_density(&self, omega: &[C]) -> f64 {
        let Some(e) = &self.pole else { return 1.0 };
        let n = self.dom.n;
        let lam = cplx::inner(omega, e);
        let mut s = 1.0;
        if n == 1 {
            let phi = lam.arg().abs();
            for l in 1..=self.cap_levels {
                let ph = 2.0 * (cap_scale(l) / 2.0).min(1.0).asin();
                if phi < ph {
                    s += PI / ph;
                }
            }
        } else {
            let d1 = 1.0 - lam.norm_sqr();
            let p = (n - 1) as f64 / PI * d1.max(0.0).powi(n as i32 - 2);
            let dist = (C::new(1.0, 0.0) - lam).norm();
            for l in 1..=self.cap_levels {
                let t = cap_scale(l);
                if dist < t {
                    s += 1.0 / (lens_area(t) * p);
                }
            }
        }
        s
    }

    fn draw_direction<R: Rng>(&self, comp: usize, rng: &mut R) -> CVec {
        let n = self.dom.n;
        let e = match (&self.pole, comp) {
            (Some(e), c) if c > 0 => e,
            _ => return cplx::unit_sphere(rng, n),
        };
        let t = cap_scale(comp);
        if n == 1 {
            let ph = 2.0 * (t / 2.0).min(1.0).asin();
            let phi = ph * (2.0 * rng.gen::<f64>() - 1.0);
            return e.iter().map(|x| x * C::from_polar(1.0, phi)).collect();
        }
        let lam = loop {
            let rad = t * rng.gen::<f64>().sqrt();
            let ang = std::f64::consts::TAU * rng.gen::<f64>();
            let l = C::new(1.0, 0.0) + C::from_polar(rad, ang);
            if l.norm_sqr() < 1.0 {
                break l;
            }
        };
        // uniform unit vector orthogonal to e
        let v = loop {
            let g = cplx::gaussian_vec(rng, n);
            let pr = cplx::inner(&g, e);
            let g: CVec = g.iter().zip(e.iter()).map(|(a, b)| a - b * pr).collect();
            let nn = cplx::norm(&g);
            if nn > 1e-12 {
                break g.iter().map(|x| x / nn).collect::<CVec>();
            }
        };
        let s = (1.0 - lam.norm_sqr()).max(0.0).sqrt();
        e.iter().zip(v.iter()).map(|(a, b)| a * lam + b * s).collect()
    }

    fn volume_point(&self, sigma: f64, omega: CVec) -> Option<(VolumeSample, f64)> {
        let dom = self.dom;
        let n = dom.n;
        let big_r = dom.ray_root(&omega, 0.0)?;
        let s = 1.0 - sigma;
        let w = dom.center.offset(s * big_r, &omega);
        let neg_r = if dom.quadric_weights().is_some() {
            sigma * (2.0 - sigma)
        } else {
            -dom.r(&w.0)
        };
        let jac = cplx::sphere_area(n) * big_r.powi(2 * n as i32) * s.powi(2 * n as i32 - 1);
        Some((
            VolumeSample {
                w,
                neg_r,
                sigma,
                omega,
            },
            jac,
        ))
    }

    /// ∫_Ω f dv with `samples` total draws spread evenly over the mixture strata.
    pub fn integrate<F>(&self, f: F, samples: usize, seed: u64) -> Result<Estimate>
    where
        F: Fn(&VolumeSample) -> f64 + Sync,
    {
        let strata = self.strata();
        let per = samples.div_ceil(strata).max(2);
        let parts: Vec<(f64, f64)> = (0..strata)
            .into_par_iter()
            .map(|s| {
                let (dc, sc) = (s / (self.cap_levels + 1), s % (self.cap_levels + 1));
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(s as u64 + 1);
                let mut m = crate::stats::Moments::default();
                for _ in 0..per {
                    let sigma = self.draw_depth(dc, &mut rng);
                    let om = self.draw_direction(sc, &mut rng);
                    let y = match self.volume_point(sigma, om) {
                        Some((vs, jac)) => {
                            let q = per as f64 * self.depth_density(sigma) * self.sphere_density(&vs.omega);
                            let v = f(&vs);
                            if v == 0.0 {
                                0.0
                            } else {
                                v * jac / q
                            }
                        }
                        None => 0.0,
                    };
                    m.push(y);
                }
                (m.sum(), per as f64 * m.variance())
            })
            .collect();
        finish(&parts, per * strata)
    }

    /// ∫_{S_ρ} f dσ_ρ over the level surface −r = ρ; `f` receives the surface point.
    pub fn integrate_surface<F>(&self, rho: f64, f: F, samples: usize, seed: u64) -> Result<Estimate>
    where
        F: Fn(&Point) -> f64 + Sync,
    {
        let dom = self.dom;
        let n = dom.n;
        let strata = self.cap_levels + 1;
        let per = samples.div_ceil(strata).max(2);
        let area = cplx::sphere_area(n);
        let parts: Vec<(f64, f64)> = (0..strata)
            .into_par_iter()
            .map(|sc| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(sc as u64 + 1);
                let mut m = crate::stats::Moments::default();
                for _ in 0..per {
                    let om = self.draw_direction(sc, &mut rng);
                    let y = match dom.ray_root(&om, rho) {
                        Some(big_r) => {
                            let x = dom.center.offset(big_r, &om);
                            let v = f(&x);
                            if v == 0.0 {
                                0.0
                            } else {
                                let cos = dom.ray_cosine(&x.0, &om);
                                v * area * big_r.powi(2 * n as i32 - 1) / (cos * per as f64 * self.sphere_density(&om))
                            }
                        }
                        None => 0.0,
                    };
                    m.push(y);
                }
                (m.sum(), per as f64 * m.variance())
            })
            .collect();
        finish(&parts, per * strata)
    }
}

fn finish(parts: &[(f64, f64)], samples: usize) -> Result<Estimate> {
    let estimate: f64 = parts.iter().map(|p| p.0).sum();
    let var: f64 = parts.iter().map(|p| p.1).sum();
    if !estimate.is_finite() {
        return Err(Error::CheckFailed("non-finite Monte-Carlo estimate".into()));
    }
    Ok(Estimate {
        estimate,
        stderr: var.max(0.0).sqrt(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lens_area_limits() {
        assert!((lens_area(2.0) - PI).abs() < 1e-12);
        // small t: half disc of radius t
        let t = 1e-3;
        assert!((lens_area(t) / (PI * t * t / 2.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn volumes_are_unbiased() {
        for n in 1..=2 {
            let d = DomainSpec::ball(n);
            let z = Point::axis(n, 0, C::new(0.9, 0.0));
            let s = Sampler::toward(&d, &z, 20, 12);
            let e = s.integrate(|_| 1.0, 40_000, 3).unwrap();
            let exact = cplx::ball_volume(n);
            assert!((e.estimate - exact).abs() < 4.0 * e.stderr + 1e-12, "n={n} {e:?} vs {exact}");
            // ∫ (1−|w|^2)^{-1/2} dv on the disc = 2π
            if n == 1 {
                let e = s.integrate(|v| v.neg_r.powf(-0.5), 40_000, 4).unwrap();
                assert!((e.estimate - 2.0 * PI).abs() < 4.0 * e.stderr, "{e:?}");
            }
        }
    }

    #[test]
    fn surface_area_of_ellipsoid_level() {
        // 3-sphere of radius sqrt(1 − ρ): area 2π^2 (1−ρ)^{3/2}
        let d = DomainSpec::ball(2);
        let s = Sampler::new(&d, Some(&[C::new(1.0, 0.0), C::new(0.0, 0.0)]), 0, 10);
        let e = s.integrate_surface(0.19, |_| 1.0, 20_000, 1).unwrap();
        let exact = 2.0 * PI * PI * 0.81f64.powf(1.5);
        assert!((e.estimate - exact).abs() < 4.0 * e.stderr + 1e-9, "{e:?} vs {exact}");
    }

    #[test]
    fn deterministic_in_seed() {
        let d = DomainSpec::disc();
        let s = Sampler::toward(&d, &Point::real(&[0.5]), 10, 5);
        let a = s.integrate(|v| v.neg_r, 5000, 9).unwrap();
        let b = s.integrate(|v| v.neg_r, 5000, 9).unwrap();
        assert_eq!(a, b);
    }
}
