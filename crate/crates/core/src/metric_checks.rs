//! Invariant scans for the metric: oracles, distance-depth bounds, polydisc inclusions,
//! surface pairs, triangle inequality and symmetry.

use crate::cplx::{self, Point, C};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::gauge::{gauge_eval, gauge_rho};
use crate::metric::{
    ball_automorphism, ball_distance, distance, mu_volume, Budget, DistanceOracle, MetricRegion, MuRegion, Polydisc,
};
use crate::report::Check;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Distance from 0 to x·e_1 against arctanh(x).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub n: usize,
    pub x: f64,
    pub d_upper: f64,
    pub exact: f64,
    pub rel_err: f64,
    pub seconds: f64,
}

pub fn arctanh_oracle(dom: &DomainSpec, xs: &[f64], budget: &Budget) -> Result<Vec<OracleRow>> {
    let z = Point::zeros(dom.n);
    xs.iter()
        .map(|&x| {
            let w = Point::axis(dom.n, 0, C::new(x, 0.0));
            let t = Instant::now();
            let d = distance(dom, &z, &w, budget)?.d_upper;
            let seconds = t.elapsed().as_secs_f64();
            let exact = x.atanh();
            Ok(OracleRow {
                n: dom.n,
                x,
                d_upper: d,
                exact,
                rel_err: (d - exact).abs() / exact,
                seconds,
            })
        })
        .collect()
}

pub fn check_arctanh_oracle(dom: &DomainSpec, xs: &[f64], budget: &Budget) -> Check {
    match arctanh_oracle(dom, xs, budget) {
        Ok(rows) => {
            let err = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
            let secs = rows.iter().map(|r| r.seconds).fold(0.0, f64::max);
            Check::new(format!("metric.arctanh_oracle.n{}", dom.n), err <= 0.01 && secs <= 10.0)
                .fit("max_rel_err", err)
                .fit("max_seconds", secs)
                .witness(rows)
        }
        Err(e) => Check::from_error(format!("metric.arctanh_oracle.n{}", dom.n), &e),
    }
}

/// Pairs mixing independent points and nearby points, with depths log-uniform.
pub fn sample_pairs(dom: &DomainSpec, count: usize, seed: u64) -> Vec<(Point, Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = 0.99 * -dom.r(&dom.center.0);
    (0..count)
        .map(|i| {
            let z = dom.random_point_log_depth(&mut rng, 1e-3, top);
            let w = if i % 2 == 0 {
                dom.random_point_log_depth(&mut rng, 1e-3, top)
            } else {
                loop {
                    let nz = -dom.r(&z.0);
                    let step = nz.sqrt() * 2f64.powf(rng.gen_range(-3.0..1.0));
                    let dir = cplx::unit_sphere(&mut rng, dom.n);
                    let w = z.offset(step, &dir);
                    if dom.r(&w.0) < 0.0 {
                        break w;
                    }
                }
            };
            (z, w)
        })
        .collect()
}

/// Fitted offset κ = max over pairs of −log(−r(w)/−r(z)) − 4 log2 · d_upper.
pub fn depth_decay_offset(dom: &DomainSpec, pairs: usize, seed: u64, budget: &Budget) -> Result<(f64, Option<(Point, Point)>)> {
    let mut kappa = f64::NEG_INFINITY;
    let mut wit = None;
    for (z, w) in sample_pairs(dom, pairs, seed) {
        let d = distance(dom, &z, &w, budget)?.d_upper;
        let k = -((-dom.r(&w.0)).ln() - (-dom.r(&z.0)).ln()) - 4.0 * std::f64::consts::LN_2 * d;
        if k > kappa {
            kappa = k;
            wit = Some((z, w));
        }
    }
    Ok((kappa, wit))
}

/// Offsets for two seeds; stable when |κ₁ − κ₂| ≤ 0.1·max(1, |κ₁|, |κ₂|).
pub fn check_depth_decay(dom: &DomainSpec, pairs: usize, seeds: [u64; 2], budget: &Budget, label: &str) -> Check {
    let name = format!("metric.depth_decay.{label}");
    let run = || -> Result<Check> {
        let (k1, w1) = depth_decay_offset(dom, pairs, seeds[0], budget)?;
        let (k2, _) = depth_decay_offset(dom, pairs, seeds[1], budget)?;
        let scale = 1f64.max(k1.abs()).max(k2.abs());
        let ok = k1.is_finite() && k2.is_finite() && (k1 - k2).abs() <= 0.1 * scale;
        Ok(Check::new(&name, ok)
            .fit("kappa_seed1", k1)
            .fit("kappa_seed2", k2)
            .fit("pairs", pairs as f64)
            .witness(w1))
    };
    run().unwrap_or_else(|e| Check::from_error(&name, &e))
}

/// ρ(z,w) ≤ C{d + d^2}2^{12d}(−r(z)); returns the fitted C.
pub fn check_gauge_growth(dom: &DomainSpec, pairs: usize, seed: u64, budget: &Budget, label: &str) -> Check {
    let name = format!("metric.gauge_growth.{label}");
    let run = || -> Result<Check> {
        let mut c = 0.0f64;
        let mut wit = None;
        for (z, w) in sample_pairs(dom, pairs, seed) {
            let d = distance(dom, &z, &w, budget)?.d_upper;
            let rho = gauge_rho(dom, &z.0, &w.0);
            let q = rho / ((d + d * d) * (12.0 * d).exp2() * -dom.r(&z.0));
            if q > c {
                c = q;
                wit = Some((z, w));
            }
        }
        Ok(Check::new(&name, c.is_finite()).fit("C", c).witness(wit))
    };
    run().unwrap_or_else(|e| Check::from_error(&name, &e))
}

/// Decomposition x = u + v with v along η: returns (|u|, |v|).
fn split(x: &[C], eta: &[C]) -> (f64, f64) {
    let e = cplx::normalized(eta);
    let c = cplx::inner(x, &e);
    let u: Vec<C> = x.iter().zip(e.iter()).map(|(a, b)| a - b * c).collect();
    (cplx::norm(&u), c.norm())
}

/// Polydisc inclusions on the unit ball. Inner: the largest dyadic c with
/// z + P(∂̄r(z); c√(−r), −cr) ⊂ D(z,a) on samples. Outer: the smallest C with
/// D(z,a₀) ⊂ z + P(∂̄r(z); C a₀√(−r), −C a₀ r) on samples (a₀ < 1/2).
pub fn check_polydisc_inclusions(dom: &DomainSpec, a: f64, a0: f64, depths: &[f64], samples: usize, seed: u64) -> Check {
    let name = format!("metric.polydisc_inclusions.n{}", dom.n);
    if !dom.is_unit_ball() {
        return Check::new(&name, false).note("requires the unit ball");
    }
    let n = dom.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c_inner = f64::INFINITY;
    let mut c_outer = 0.0f64;
    for &t in depths {
        let z = Point::axis(n, 0, C::new((1.0 - t).sqrt(), 0.0));
        let (rz, dr) = dom.r_grad(&z.0);
        let eta: Vec<C> = dr.iter().map(|x| x.conj()).collect();
        let e = cplx::normalized(&eta);
        let s = (-rz).sqrt();
        // inner: halve c until every sample of the polydisc lies in D(z,a)
        let mut c = 1.0f64;
        'grid: while c > 1e-6 {
            for _ in 0..samples {
                let ut = cplx::unit_sphere(&mut rng, n);
                let pr = cplx::inner(&ut, &e);
                let mut u: Vec<C> = ut.iter().zip(e.iter()).map(|(x, y)| x - y * pr).collect();
                let un = cplx::norm(&u).max(1e-300);
                let ru = c * s * rng.gen::<f64>().sqrt();
                for x in &mut u {
                    *x *= ru / un;
                }
                let v = C::from_polar(-c * rz * rng.gen::<f64>().sqrt(), std::f64::consts::TAU * rng.gen::<f64>());
                let w: Vec<C> = (0..n).map(|i| z.0[i] + u[i] + e[i] * v).collect();
                if !(cplx::norm_sq(&w) < 1.0) || ball_distance(&z.0, &w) >= a {
                    c /= 2.0;
                    continue 'grid;
                }
            }
            break;
        }
        c_inner = c_inner.min(c);
        // outer: samples of D(z,a₀) through the automorphism φ_z
        for _ in 0..samples {
            let dir = cplx::unit_sphere(&mut rng, n);
            let rad = a0.tanh() * rng.gen::<f64>().powf(1.0 / (2 * n) as f64);
            let zeta: Vec<C> = dir.iter().map(|x| x * rad).collect();
            let w = ball_automorphism(&z.0, &zeta);
            let (u, v) = split(&cplx::sub(&w, &z.0), &eta);
            c_outer = c_outer.max(u / (a0 * s)).max(v / (a0 * -rz));
        }
    }
    Check::new(&name, c_inner > 1e-6 && c_outer.is_finite())
        .fit("c_inner", c_inner)
        .fit("C_outer", c_outer)
        .fit("a", a)
        .fit("a0", a0)
}

/// Pairs on S_ρ with |z−w| ≤ R√ρ and |⟨z−w, ∂̄r(z)⟩| ≤ R²ρ: fitted C with d_upper ≤ C R².
pub fn check_surface_pairs(dom: &DomainSpec, rhos: &[f64], big_rs: &[f64], per: usize, seed: u64, budget: &Budget) -> Check {
    let name = format!("metric.surface_pairs.n{}", dom.n);
    let oracle = DistanceOracle::for_domain(dom, *budget);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = 0.0f64;
    let mut used = 0;
    let run = |c: &mut f64, used: &mut usize, rng: &mut ChaCha8Rng| -> Result<()> {
        for &rho in rhos {
            for &big in big_rs {
                let mut got = 0;
                let mut tries = 0;
                while got < per && tries < 200 * per {
                    tries += 1;
                    let om = cplx::unit_sphere(rng, dom.n);
                    let Some(z) = dom.point_at_depth(&om, rho) else { continue };
                    let step = big * rho.sqrt() * rng.gen::<f64>();
                    let w0 = z.offset(step, &cplx::unit_sphere(rng, dom.n));
                    let d0 = cplx::sub(&w0.0, &dom.center.0);
                    let Some(w) = dom.point_at_depth(&cplx::normalized(&d0), rho) else { continue };
                    let (_, dr) = dom.r_grad(&z.0);
                    let diff = cplx::sub(&z.0, &w.0);
                    let normal: C = diff.iter().zip(dr.iter()).map(|(a, b)| a * b).sum();
                    if cplx::norm(&diff) > big * rho.sqrt() || normal.norm() > big * big * rho {
                        continue;
                    }
                    got += 1;
                    *used += 1;
                    let d = oracle.eval(dom, &z, &w)?;
                    *c = c.max(d / (big * big));
                }
            }
        }
        Ok(())
    };
    match run(&mut c, &mut used, &mut rng) {
        Ok(()) => Check::new(&name, used > 0 && c.is_finite()).fit("C", c).fit("pairs", used as f64),
        Err(e) => Check::from_error(&name, &e),
    }
}

/// Pairs built to satisfy the shell hypotheses: same level with ρ ≤ 2^j(−r(z)) gives
/// d ≤ C(1+j); depth ratio in [2^{k−1}, 2^k] with ρ < 2^{k+j}(−r(z)) gives d < C(1+|k|+j).
pub fn check_shell_distances(dom: &DomainSpec, depths: &[f64], per: usize, seed: u64, budget: &Budget) -> Check {
    let name = format!("metric.shell_distances.n{}", dom.n);
    let oracle = DistanceOracle::for_domain(dom, *budget);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c36 = 0.0f64;
    let mut c37 = 0.0f64;
    let mut run = || -> Result<()> {
        for &t in depths {
            for j in 0..4u32 {
                for k in -2i32..=2 {
                    let mut got = 0;
                    let mut tries = 0;
                    while got < per && tries < 400 * per {
                        tries += 1;
                        let om = cplx::unit_sphere(&mut rng, dom.n);
                        let Some(z) = dom.point_at_depth(&om, t) else { continue };
                        let bound = 2f64.powi(k + j as i32) * t;
                        // pick w near z at a depth in the k-band (k = 0 keeps the same level)
                        let depth_w = if k == 0 { t } else { t * 2f64.powf(k as f64 - rng.gen::<f64>()) };
                        if depth_w >= 0.99 {
                            break;
                        }
                        let step = bound.sqrt() * rng.gen::<f64>();
                        let w0 = z.offset(step, &cplx::unit_sphere(&mut rng, dom.n));
                        let dir = cplx::normalized(&cplx::sub(&w0.0, &dom.center.0));
                        let Some(w) = dom.point_at_depth(&dir, depth_w) else { continue };
                        let rho = gauge_rho(dom, &z.0, &w.0);
                        if rho > bound {
                            continue;
                        }
                        got += 1;
                        let d = oracle.eval(dom, &z, &w)?;
                        if k == 0 {
                            c36 = c36.max(d / (1.0 + j as f64));
                        }
                        c37 = c37.max(d / (1.0 + k.unsigned_abs() as f64 + j as f64));
                    }
                }
            }
        }
        Ok(())
    };
    match run() {
        Ok(()) => Check::new(&name, c36.is_finite() && c37.is_finite() && c36 > 0.0)
            .fit("C_same_level", c36)
            .fit("C_shell", c37),
        Err(e) => Check::from_error(&name, &e),
    }
}

/// F(z,w) ≤ C F(z′,w′) for d(z,z′), d(w,w′) < a₀, sampled through ball automorphisms.
pub fn check_f_stability(dom: &DomainSpec, a0: f64, pairs: usize, seed: u64) -> Check {
    let name = format!("metric.f_stability.n{}", dom.n);
    if !dom.is_unit_ball() {
        return Check::new(&name, false).note("requires the unit ball");
    }
    let n = dom.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = 0.0f64;
    let near = |p: &Point, rng: &mut ChaCha8Rng| {
        let dir = cplx::unit_sphere(rng, n);
        let rad = a0.tanh() * rng.gen::<f64>().powf(1.0 / (2 * n) as f64);
        let zeta: Vec<C> = dir.iter().map(|x| x * rad).collect();
        Point(ball_automorphism(&p.0, &zeta))
    };
    for (z, w) in sample_pairs(dom, pairs, seed) {
        let z2 = near(&z, &mut rng);
        let w2 = near(&w, &mut rng);
        c = c.max(gauge_eval(dom, &z, &w).f / gauge_eval(dom, &z2, &w2).f);
    }
    Check::new(&name, c.is_finite()).fit("C", c).fit("a0", a0)
}

/// |d(z,w) − d(w,z)| ≤ 10⁻³(1 + d) and d(x,z) ≤ d(x,y) + d(y,z) + 10⁻³(1 + d(x,y) + d(y,z)).
pub fn check_symmetry_triangle(dom: &DomainSpec, triples: usize, seed: u64, budget: &Budget) -> Check {
    let name = format!("metric.symmetry_triangle.n{}", dom.n);
    let run = || -> Result<Check> {
        let pts = dom.sample_region(crate::Region::Interior, 3 * triples, seed)?;
        let mut sym = 0.0f64;
        let mut tri = f64::NEG_INFINITY;
        let mut wit = None;
        for t in pts.chunks(3) {
            let d = |a: &Point, b: &Point| distance(dom, a, b, budget).map(|r| r.d_upper);
            let (xy, yz, xz, zx) = (d(&t[0], &t[1])?, d(&t[1], &t[2])?, d(&t[0], &t[2])?, d(&t[2], &t[0])?);
            let s = (xz - zx).abs() / (1.0 + xz.max(zx));
            sym = sym.max(s);
            let v = (xz - xy - yz) / (1.0 + xy + yz);
            if v > tri {
                tri = v;
                wit = Some(t.to_vec());
            }
        }
        Ok(Check::new(&name, sym <= 1e-3 && tri <= 1e-3)
            .fit("max_symmetry_defect", sym)
            .fit("max_triangle_excess", tri)
            .witness(wit))
    };
    run().unwrap_or_else(|e| Check::from_error(&name, &e))
}

/// μ(D(z,a)) along a boundary-approaching sequence stays in a band; on the disc it is π sinh²(a).
pub fn check_mu_band(dom: &DomainSpec, a: f64, depths: &[f64], samples: usize, seed: u64) -> Check {
    let name = format!("metric.mu_ball_band.n{}", dom.n);
    let run = || -> Result<Check> {
        let e1 = Point::axis(dom.n, 0, C::new(1.0, 0.0));
        let mut vals = Vec::new();
        for (i, &t) in depths.iter().enumerate() {
            let z = dom.point_at_depth(&e1.0, t).ok_or(Error::InvalidArgument("depth".into()))?;
            let reg = MuRegion::Metric(MetricRegion::Ball { center: z, radius: a });
            vals.push(mu_volume(dom, &reg, samples, seed + i as u64)?.estimate);
        }
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(0.0, f64::max);
        let mut c = Check::new(&name, lo > 0.0 && hi / lo <= 2.0)
            .fit("c_a", lo)
            .fit("C_a", hi)
            .witness(&vals);
        if dom.n == 1 && dom.is_unit_ball() {
            c = c.fit("exact", std::f64::consts::PI * a.sinh().powi(2));
        }
        Ok(c)
    };
    run().unwrap_or_else(|e| Check::from_error(&name, &e))
}

/// Polydisc membership examples as a check (disc, center 0.9).
pub fn check_polydisc_examples() -> Check {
    let p = Polydisc {
        center: Point::real(&[0.9]),
        axis: vec![C::new(1.0, 0.0)],
        a: 0.1,
        b: 0.05,
    };
    let inside = p.contains(&Point::from_slice(&[C::new(0.9, 0.04)]));
    let outside = !p.contains(&Point::real(&[0.96]));
    Check::new("metric.polydisc_membership", inside && outside)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_depth_decay_offset_is_nonpositive() {
        let d = DomainSpec::disc();
        let (k, _) = depth_decay_offset(&d, 200, 1, &Budget::fast()).unwrap();
        // radial geodesics give −r(w) ≈ 4e^{−2d}(−r(z)) at worst, so κ ≤ 0 up to optimizer slack
        assert!(k <= 1e-2, "κ = {k}");
    }

    #[test]
    fn ball_polydisc_inclusions_hold() {
        let c = check_polydisc_inclusions(&DomainSpec::ball(2), 1.0, 0.25, &[1e-1, 1e-2, 1e-3], 200, 3);
        assert!(c.passed, "{c:?}");
    }

    #[test]
    fn f_is_stable_under_small_moves() {
        let c = check_f_stability(&DomainSpec::disc(), 0.25, 500, 4);
        assert!(c.passed);
        let v = c.fitted["C"].as_f64().unwrap();
        assert!(v > 1.0 && v < 20.0, "{v}");
    }
}
