//! The gauges X, ρ, F, dyadic shells, boundary caps and Forelli-Rudin integrals.

use crate::cplx::{self, Point, C};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::metric::{self, Budget, DistanceOracle};
use crate::report::Check;
use crate::sampling::{Estimate, Sampler};
use crate::stats::{self, linear_fit, LinearFit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeValue {
    pub x: C,
    pub rho: f64,
    pub f: f64,
}

/// ρ(z,w) = |z−w|^2 + |⟨z−w, ∂̄r(z)⟩|.
pub fn gauge_rho(dom: &DomainSpec, z: &[C], w: &[C]) -> f64 {
    let (_, g) = dom.r_grad(z);
    rho_with(z, w, &g)
}

/// ρ with ∂r(z) supplied (the conjugate of ∂̄r(z)).
fn rho_with(z: &[C], w: &[C], dr_z: &[C]) -> f64 {
    let mut e = 0.0;
    let mut s = C::new(0.0, 0.0);
    for i in 0..z.len() {
        let d = z[i] - w[i];
        e += d.norm_sqr();
        // ⟨d, ∂̄r⟩ = Σ d_i · conj(∂̄_i r) = Σ d_i ∂_i r
        s += d * dr_z[i];
    }
    e + s.norm()
}

pub fn gauge_eval(dom: &DomainSpec, z: &Point, w: &Point) -> GaugeValue {
    let jw = dom.jet(&w.0);
    let n = dom.n;
    let d: Vec<C> = (0..n).map(|j| z.0[j] - w.0[j]).collect();
    let mut x = C::new(-jw.r, 0.0);
    for j in 0..n {
        x -= jw.dr[j] * d[j];
        for k in 0..n {
            x -= 0.5 * jw.hol[j * n + k] * d[j] * d[k];
        }
    }
    let rz = dom.r(&z.0);
    let rho = gauge_rho(dom, &z.0, &w.0);
    GaugeValue {
        x,
        rho,
        f: rz.abs() + jw.r.abs() + rho,
    }
}

/// Integration mode of [`fr_integral`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrMode {
    Plain,
    Tail,
    Weight,
}

/// Sampler resolution for Forelli-Rudin integrals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrResolution {
    pub depth_levels: usize,
    pub cap_levels: usize,
}

impl Default for FrResolution {
    fn default() -> Self {
        FrResolution {
            depth_levels: 50,
            cap_levels: 30,
        }
    }
}

/// ∫ |r(w)|^κ |r(z)|^{a'} / F(z,w)^{n+1+κ+a} dv(w), with a' = max(a, 0) in tail and weight
/// modes and 0 otherwise. Tail mode integrates over Ω∖D(z,R); weight mode multiplies by d(z,w).
#[allow(clippy::too_many_arguments)]
pub fn fr_integral(
    dom: &DomainSpec,
    z: &Point,
    kappa: f64,
    a: f64,
    tail_radius: Option<f64>,
    weight_d: bool,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    fr_integral_with(dom, z, kappa, a, tail_radius, weight_d, samples, seed, FrResolution::default())
}

#[allow(clippy::too_many_arguments)]
pub fn fr_integral_with(
    dom: &DomainSpec,
    z: &Point,
    kappa: f64,
    a: f64,
    tail_radius: Option<f64>,
    weight_d: bool,
    samples: usize,
    seed: u64,
    res: FrResolution,
) -> Result<Estimate> {
    if !(kappa > -1.0) {
        return Err(Error::InvalidArgument(format!("kappa = {kappa} must exceed −1")));
    }
    if let Some(r) = tail_radius {
        if !(r > 0.0) {
            return Err(Error::InvalidArgument("tail radius must be positive".into()));
        }
    }
    let (rz, dr_z) = dom.r_grad(&z.0);
    if !(rz < 0.0) {
        return Err(Error::NotInterior { r: rz });
    }
    let nrz = -rz;
    let n = dom.n as f64;
    let p = n + 1.0 + kappa + a;
    let special = tail_radius.is_some() || weight_d;
    let pre = if special { nrz.powf(a.max(0.0)) } else { 1.0 };
    let exact = dom.is_unit_ball();
    let oracle = DistanceOracle::for_domain(dom, Budget::certificate(8));
    let dist = |w: &Point, nrw: f64| -> f64 {
        if exact {
            metric::ball_distance_with_depths(&z.0, &w.0, nrz, nrw)
        } else {
            oracle.eval(dom, z, w).unwrap_or(f64::INFINITY)
        }
    };
    let sampler = Sampler::toward(dom, z, res.depth_levels, res.cap_levels);
    let est = sampler.integrate(
        |v| {
            let f = nrz + v.neg_r + rho_with(&z.0, &v.w.0, &dr_z);
            let mut y = pre * v.neg_r.powf(kappa) / f.powf(p);
            if special {
                let d = dist(&v.w, v.neg_r);
                if let Some(r) = tail_radius {
                    if d < r {
                        return 0.0;
                    }
                }
                if weight_d {
                    y *= d;
                }
            }
            y
        },
        samples,
        seed,
    )?;
    if est.estimate < 0.0 {
        return Err(Error::CheckFailed(format!("negative integral estimate {}", est.estimate)));
    }
    Ok(est)
}

/// One row of a Forelli-Rudin table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrRow {
    pub z: Point,
    pub kappa: f64,
    pub a: f64,
    pub mode: FrMode,
    /// |r(z)| (or the tail radius in tail scans)
    pub abscissa: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub fitted_slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrRegression {
    pub rows: Vec<FrRow>,
    pub fit: LinearFit,
}

/// Boundary-approaching points `c + (1 − 2^{−k}) R(e_1) e_1`.
pub fn approach_points(dom: &DomainSpec, ks: &[u32]) -> Result<Vec<Point>> {
    let e1 = Point::axis(dom.n, 0, C::new(1.0, 0.0));
    let big_r = dom
        .ray_root(&e1.0, 0.0)
        .ok_or_else(|| Error::InvalidDomain("no boundary along e1".into()))?;
    Ok(ks
        .iter()
        .map(|&k| dom.center.offset((1.0 - 0.5f64.powi(k as i32)) * big_r, &e1.0))
        .collect())
}

/// Least-squares slope of log(estimate) against log|r(z)| along [`approach_points`].
#[allow(clippy::too_many_arguments)]
pub fn fr_regression(
    dom: &DomainSpec,
    kappa: f64,
    a: f64,
    weight_d: bool,
    ks: &[u32],
    samples: usize,
    seed: u64,
    res: FrResolution,
) -> Result<FrRegression> {
    let pts = approach_points(dom, ks)?;
    let mut rows = Vec::new();
    for (i, z) in pts.into_iter().enumerate() {
        let e = fr_integral_with(dom, &z, kappa, a, None, weight_d, samples, seed.wrapping_add(i as u64), res)?;
        rows.push(FrRow {
            abscissa: -dom.r(&z.0),
            z,
            kappa,
            a,
            mode: if weight_d { FrMode::Weight } else { FrMode::Plain },
            estimate: e.estimate,
            stderr: e.stderr,
            fitted_slope: f64::NAN,
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.abscissa.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.estimate.ln()).collect();
    let fit = linear_fit(&x, &y);
    for r in &mut rows {
        r.fitted_slope = fit.slope;
    }
    Ok(FrRegression { rows, fit })
}

/// Tail integrals over Ω∖D(z,R) for each R, with the fitted slope of log2(estimate) in R.
pub fn tail_scan(
    dom: &DomainSpec,
    z: &Point,
    kappa: f64,
    a: f64,
    radii: &[f64],
    samples: usize,
    seed: u64,
) -> Result<FrRegression> {
    let mut rows = Vec::new();
    for (i, &r) in radii.iter().enumerate() {
        let e = fr_integral(dom, z, kappa, a, Some(r), false, samples, seed.wrapping_add(i as u64))?;
        rows.push(FrRow {
            z: z.clone(),
            kappa,
            a,
            mode: FrMode::Tail,
            abscissa: r,
            estimate: e.estimate,
            stderr: e.stderr,
            fitted_slope: f64::NAN,
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.abscissa).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.estimate.log2()).collect();
    let fit = linear_fit(&x, &y);
    for r in &mut rows {
        r.fitted_slope = fit.slope;
    }
    Ok(FrRegression { rows, fit })
}

/// Writes Forelli-Rudin rows as CSV `{z, kappa, a, mode, estimate, stderr, fitted_slope}`.
pub fn write_fr_csv<W: std::io::Write>(rows: &[FrRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["z", "kappa", "a", "mode", "estimate", "stderr", "fitted_slope"])
        .map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        let z = r.z.to_reals().iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" ");
        let mode = match r.mode {
            FrMode::Plain => "plain",
            FrMode::Tail => "tail",
            FrMode::Weight => "weight",
        };
        w.write_record([
            z,
            format!("{}", r.kappa),
            format!("{}", r.a),
            mode.to_string(),
            format!("{:e}", r.estimate),
            format!("{:e}", r.stderr),
            format!("{}", r.fitted_slope),
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// σ_ρ(Q_ρ(ζ,t)) for ζ on the level surface S_ρ, ρ = −r(ζ).
pub fn cap_measure(dom: &DomainSpec, zeta: &Point, t: f64, samples: usize, seed: u64) -> Result<Estimate> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("cap radius must be positive".into()));
    }
    let (r, dr) = dom.r_grad(&zeta.0);
    let rho = (-r).max(0.0);
    let v = cplx::sub(&zeta.0, &dom.center.0);
    let diam = dom.bbox_diameter();
    let whole = t > diam * diam + diam * cplx::norm(&dr);
    let levels = ((2.0 / t).log2().ceil().max(0.0) as usize + 4).min(50);
    let s = if whole {
        Sampler::new(dom, None, 0, 0)
    } else {
        Sampler::new(dom, Some(&v), 0, levels)
    };
    let e = s.integrate_surface(rho, |x| if rho_with(&zeta.0, &x.0, &dr) < t { 1.0 } else { 0.0 }, samples, seed)?;
    if e.estimate <= 0.0 {
        return Err(Error::Resolution(format!("empty cap at t = {t}")));
    }
    Ok(e)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellVolume {
    pub volume: f64,
    pub stderr: f64,
    /// volume / (2^{nj} (2^k |r(z)|)^{n+1})
    pub bound_ratio: f64,
}

/// Volume of W_{z;k,j} = {2^{k−1}|r(z)| < −r(w) ≤ 2^k|r(z)|, ρ(z,w) ≤ 2^{k+j}|r(z)|}.
pub fn shell_volume(dom: &DomainSpec, z: &Point, k: i32, j: u32, samples: usize, seed: u64) -> Result<ShellVolume> {
    let (rz, dr) = dom.r_grad(&z.0);
    if !(rz < 0.0) {
        return Err(Error::NotInterior { r: rz });
    }
    let nrz = -rz;
    let hi = 2f64.powi(k) * nrz;
    let lo = hi / 2.0;
    let gauge = 2f64.powi(k + j as i32) * nrz;
    let s = Sampler::toward(dom, z, 50, 30);
    let e = s.integrate(
        |v| {
            if v.neg_r > lo && v.neg_r <= hi && rho_with(&z.0, &v.w.0, &dr) <= gauge {
                1.0
            } else {
                0.0
            }
        },
        samples,
        seed,
    )?;
    let n = dom.n as i32;
    let scale = 2f64.powi(n * j as i32) * hi.powi(n + 1);
    Ok(ShellVolume {
        volume: e.estimate,
        stderr: e.stderr,
        bound_ratio: e.estimate / scale,
    })
}

fn near_boundary_point<R: Rng>(dom: &DomainSpec, rng: &mut R, max_depth: f64) -> Option<Point> {
    let om = cplx::unit_sphere(rng, dom.n);
    let depth = max_depth * rng.gen::<f64>().powi(2).max(1e-6);
    let s = dom.ray_root(&om, depth)?;
    Some(dom.center.offset(s, &om))
}

/// Band of |X|/F and F/(|r(z)|+|r(w)|+|Im X|+|z−w|^2) on pairs of R_δ.
pub fn check_x_comparable(dom: &DomainSpec, delta: f64, pairs: usize, seed: u64, cap: f64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut got = 0;
    let mut worst = None;
    let mut tries = 0;
    while got < pairs && tries < 100 * pairs {
        tries += 1;
        let Some(z) = near_boundary_point(dom, &mut rng, delta / 3.0) else { continue };
        let step = delta / 3.0 * rng.gen::<f64>();
        let dir = cplx::unit_sphere(&mut rng, dom.n);
        let w = z.offset(step, &dir);
        let (rz, rw) = (dom.r(&z.0), dom.r(&w.0));
        if !(rw < 0.0) || rz.abs() + rw.abs() + z.dist(&w) >= delta {
            continue;
        }
        got += 1;
        let g = gauge_eval(dom, &z, &w);
        let alt = rz.abs() + rw.abs() + g.x.im.abs() + cplx::norm_sq(&cplx::sub(&z.0, &w.0));
        for q in [g.x.norm() / g.f, g.f / alt] {
            if q < lo || q > hi {
                worst = Some((z.clone(), w.clone()));
            }
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    let c = hi.max(1.0 / lo);
    Check::new("gauge.x_comparable", got > 0 && c.is_finite() && c <= cap)
        .fit("C", c)
        .fit("ratio_min", lo)
        .fit("ratio_max", hi)
        .fit("pairs", got as f64)
        .witness(worst)
}

/// F(w,z) ≤ C₂ F(z,w) over random interior pairs.
pub fn check_symmetry_defect(dom: &DomainSpec, pairs: usize, seed: u64) -> Result<Check> {
    let pts = dom.sample_region(crate::Region::Interior, 2 * pairs, seed)?;
    let mut c2 = 0.0f64;
    for p in pts.chunks(2) {
        let a = gauge_eval(dom, &p[0], &p[1]).f;
        let b = gauge_eval(dom, &p[1], &p[0]).f;
        c2 = c2.max(b / a);
    }
    Ok(Check::new("gauge.symmetry_defect", c2.is_finite()).fit("C2", c2))
}

/// Normal-ray checks: d(z, z + s u_z) ≤ C for s ∈ [r(z), 0], and −r(z+tu_z) + r(z) ≥ c|t|.
pub fn check_normal_ray(dom: &DomainSpec, depths: &[f64], budget: &Budget) -> Result<Check> {
    let oracle = DistanceOracle::for_domain(dom, *budget);
    let e1 = Point::axis(dom.n, 0, C::new(1.0, 0.0));
    let mut cmax = 0.0f64;
    let mut cmin = f64::INFINITY;
    for &t in depths {
        let big_r = dom.ray_root(&e1.0, t).ok_or(Error::InvalidArgument("depth outside".into()))?;
        let z = dom.center.offset(big_r, &e1.0);
        let u = dom.normal_direction(&z)?;
        let rz = dom.r(&z.0);
        for f in [0.25, 0.5, 1.0] {
            let s = rz * f;
            let w = z.offset(s, &u);
            cmax = cmax.max(oracle.eval(dom, &z, &w)?);
            let gain = -dom.r(&w.0) + rz;
            cmin = cmin.min(gain / s.abs());
        }
    }
    Ok(Check::new("gauge.normal_ray", cmax.is_finite() && cmin > 0.0)
        .fit("C_ray", cmax)
        .fit("c_slope", cmin))
}

/// Cap measures at decreasing t and the fitted exponent of σ ~ t^slope.
pub fn cap_scan(dom: &DomainSpec, zeta: &Point, ts: &[f64], samples: usize, seed: u64) -> Result<(Vec<f64>, LinearFit)> {
    let mut vals = Vec::new();
    for (i, &t) in ts.iter().enumerate() {
        vals.push(cap_measure(dom, zeta, t, samples, seed.wrapping_add(i as u64))?.estimate);
    }
    let x: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
    Ok((vals, linear_fit(&x, &y)))
}

/// Shell-volume ratios over j at fixed (z, k); a finite common bound is the fitted constant.
pub fn shell_scan(dom: &DomainSpec, z: &Point, k: i32, js: &[u32], samples: usize, seed: u64) -> Result<Check> {
    let mut ratios = Vec::new();
    for &j in js {
        ratios.push(shell_volume(dom, z, k, j, samples, seed.wrapping_add(j as u64))?.bound_ratio);
    }
    let c = stats::max(ratios.iter().cloned());
    Ok(Check::new("gauge.shell_volume_bound", c.is_finite()).fit("C", c).witness(ratios))
}

/// Slope of the Forelli-Rudin integral against |r(z)|: −a ± `tol` for a > 0, and ≥ −`tol`
/// (bounded) for a < 0.
#[allow(clippy::too_many_arguments)]
pub fn check_fr_slope(
    dom: &DomainSpec,
    kappa: f64,
    a: f64,
    ks: &[u32],
    samples: usize,
    seed: u64,
    tol: f64,
    label: &str,
) -> (Check, Vec<FrRow>) {
    let name = format!("gauge.forelli_rudin.{label}.a{a}");
    let t = std::time::Instant::now();
    match fr_regression(dom, kappa, a, false, ks, samples, seed, FrResolution::default()) {
        Ok(reg) => {
            let secs = t.elapsed().as_secs_f64();
            let slope = reg.fit.slope;
            let ok = if a > 0.0 {
                (slope + a).abs() <= tol
            } else {
                slope >= -tol
            };
            let c = Check::new(name, ok && slope.is_finite())
                .fit("slope", slope)
                .fit("expected", if a > 0.0 { -a } else { 0.0 })
                .fit("seconds", secs)
                .fit("samples", samples as f64);
            (c, reg.rows)
        }
        Err(e) => (Check::from_error(name, &e), Vec::new()),
    }
}

/// Weight-mode integrals (times d(z,w) and |r(z)|^a) stay bounded as z approaches the boundary.
pub fn check_weight_bounded(dom: &DomainSpec, a: f64, ks: &[u32], samples: usize, seed: u64, label: &str) -> (Check, Vec<FrRow>) {
    let name = format!("gauge.weighted_bound.{label}");
    match fr_regression(dom, 0.0, a, true, ks, samples, seed, FrResolution::default()) {
        Ok(reg) => {
            let slope = reg.fit.slope;
            let c = Check::new(name, slope.is_finite() && slope >= -0.15)
                .fit("slope", slope)
                .fit("C", stats::max(reg.rows.iter().map(|r| r.estimate)));
            (c, reg.rows)
        }
        Err(e) => (Check::from_error(name, &e), Vec::new()),
    }
}

/// log2 of the tail integral over Ω∖D(z,R) decays in R with slope ≤ −0.05.
#[allow(clippy::too_many_arguments)]
pub fn check_tail_decay(
    dom: &DomainSpec,
    z: &Point,
    kappa: f64,
    a: f64,
    radii: &[f64],
    samples: usize,
    seed: u64,
    label: &str,
) -> (Check, Vec<FrRow>) {
    let name = format!("gauge.tail_decay.{label}");
    match tail_scan(dom, z, kappa, a, radii, samples, seed) {
        Ok(reg) => {
            let slope = reg.fit.slope;
            (
                Check::new(name, slope <= -0.05).fit("log2_slope", slope),
                reg.rows,
            )
        }
        Err(e) => (Check::from_error(name, &e), Vec::new()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cplx::c;
    use std::f64::consts::PI;

    #[test]
    fn gauge_examples() {
        let b = DomainSpec::ball(2);
        let z = Point::from_slice(&[c(0.9, 0.0), c(0.0, 0.0)]);
        let w = Point::from_slice(&[c(0.9, 0.0), c(0.1, 0.0)]);
        assert!((gauge_eval(&b, &z, &w).rho - 0.01).abs() < 1e-15);
        let d = DomainSpec::disc();
        let g = gauge_eval(&d, &Point::real(&[0.9]), &Point::real(&[0.8]));
        assert!((g.rho - 0.1).abs() < 1e-15);
        let zz = gauge_eval(&d, &Point::real(&[0.6]), &Point::real(&[0.6]));
        assert_eq!(zz.rho, 0.0);
        assert!((zz.f - 2.0 * 0.64).abs() < 1e-15);
        assert!((zz.x.re - 0.64).abs() < 1e-15 && zz.x.im == 0.0);
    }

    #[test]
    fn ball_x_is_one_minus_inner() {
        let b = DomainSpec::ball(2);
        let z = Point::from_slice(&[c(0.3, 0.2), c(-0.1, 0.4)]);
        let w = Point::from_slice(&[c(0.5, -0.1), c(0.2, 0.1)]);
        let x = gauge_eval(&b, &z, &w).x;
        let want = C::new(1.0, 0.0) - cplx::inner(&z.0, &w.0);
        assert!((x - want).norm() < 1e-15);
    }

    /// Nested polar Gauss quadrature around z on the disc, graded toward z and the boundary.
    fn disc_oracle(z: f64, kappa: f64, a: f64) -> f64 {
        let gl = crate::quadrature::gauss_legendre01(12);
        let p = 2.0 + kappa + a;
        let nrz = 1.0 - z * z;
        let integrand = |w: C| {
            let nrw = 1.0 - w.norm_sqr();
            let d = C::new(z, 0.0) - w;
            let f = nrz + nrw + d.norm_sqr() + (d * z).norm();
            nrw.max(0.0).powf(kappa) / f.powf(p)
        };
        // graded panels in a variable on [0, len]
        let panels = |len: f64, scale: f64| -> Vec<(f64, f64)> {
            let mut e = vec![0.0];
            let mut x = scale.min(len) / 64.0;
            while x < len {
                e.push(x);
                x *= 1.6;
            }
            e.push(len);
            e.windows(2).map(|w| (w[0], w[1])).collect()
        };
        let quad = |lo: f64, hi: f64, g: &dyn Fn(f64) -> f64| -> f64 {
            gl.nodes.iter().zip(&gl.weights).map(|(x, wt)| wt * (hi - lo) * g(lo + (hi - lo) * x)).sum()
        };
        // angle about z, graded away from the outward direction φ = 0 (symmetric in ±φ)
        let radial = |phi: f64| -> f64 {
            let e = C::from_polar(1.0, phi);
            // |z + t e| = 1
            let b = z * e.re;
            let tmax = -b + (b * b + 1.0 - z * z).sqrt();
            let g = |t: f64| t * integrand(C::new(z, 0.0) + e * t);
            // graded toward t = 0 and toward the boundary end
            let mid = tmax / 2.0;
            let head: f64 = panels(mid, nrz).iter().map(|&(l, h)| quad(l, h, &g)).sum();
            let tail: f64 = panels(mid, nrz).iter().map(|&(l, h)| quad(tmax - h, tmax - l, &g)).sum();
            head + tail
        };
        let ang: f64 = panels(PI, nrz).iter().map(|&(l, h)| quad(l, h, &radial)).sum();
        2.0 * ang
    }

    #[test]
    fn disc_integral_matches_quadrature_oracle() {
        let d = DomainSpec::disc();
        for (z, kappa, a) in [(0.5, 0.0, 1.0), (0.9, 0.0, 0.5), (0.97, 0.5, 1.0), (0.9, 0.0, -0.5)] {
            let want = disc_oracle(z, kappa, a);
            let e = fr_integral(&d, &Point::real(&[z]), kappa, a, None, false, 200_000, 5).unwrap();
            let err = (e.estimate - want).abs();
            assert!(err < 5.0 * e.stderr + 1e-3 * want, "z={z} κ={kappa} a={a}: {e:?} vs {want}");
            assert!(e.stderr < 0.02 * want, "{e:?}");
        }
    }

    #[test]
    fn rejects_bad_kappa() {
        let d = DomainSpec::disc();
        assert!(matches!(
            fr_integral(&d, &Point::real(&[0.5]), -1.0, 0.0, None, false, 10, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn disc_cap_is_linear_for_small_t() {
        let d = DomainSpec::disc();
        let one = Point::real(&[1.0]);
        for t in [1e-2, 1e-3] {
            let e = cap_measure(&d, &one, t, 20_000, 1).unwrap();
            // |1−e^{iθ}| = u with u^2 + u = t; arc length 4 asin(u/2) ≈ 2t
            let u = ((1.0 + 4.0 * t).sqrt() - 1.0) / 2.0;
            let exact = 4.0 * (u / 2.0).asin();
            assert!((e.estimate - exact).abs() < 4.0 * e.stderr, "{e:?} vs {exact}");
            assert!((exact / (2.0 * t) - 1.0).abs() < 0.02);
        }
        // whole circle
        let e = cap_measure(&d, &one, 20.0, 1000, 1).unwrap();
        assert!((e.estimate - 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn shell_volume_examples() {
        let d = DomainSpec::disc();
        let z = Point::real(&[0.9]);
        let s = shell_volume(&d, &z, 0, 0, 50_000, 2).unwrap();
        assert!(s.volume > 0.0 && s.volume < PI);
        let empty = shell_volume(&d, &z, 4, 0, 10_000, 2).unwrap();
        assert_eq!(empty.volume, 0.0);
    }
}
