//! Bergman kernel: exact on the unit ball, leading boundary term elsewhere.
//! Normalized kernels, reproducing-property quadrature and the kernel estimate scans.

use crate::cplx::{self, factorial, CVec, Point, C};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::gauge::gauge_eval;
use crate::metric::{ball_automorphism, ball_distance};
use crate::quadrature::{BallQuadrature, BallRuleSpec};
use crate::report::Check;
use crate::stats::{linear_fit, max};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "kebab-case")]
pub enum KernelMode {
    ExactBall,
    /// `c` multiplies the leading term; `delta` bounds |r(z)| + |r(w)| + |z − w|.
    FeffermanLeading { c: f64, delta: f64 },
}

/// Depth of the calibration point on the diagonal.
pub const CALIBRATION_DEPTH: f64 = 1e-3;

impl KernelMode {
    /// Leading-term mode with the constant matched to the exact ball kernel at one
    /// diagonal point of depth [`CALIBRATION_DEPTH`].
    pub fn fefferman(n: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta = {delta}")));
        }
        let ball = DomainSpec::ball(n);
        let z = Point::axis(n, 0, C::new((1.0 - CALIBRATION_DEPTH).sqrt(), 0.0));
        let exact = kernel_eval(&ball, KernelMode::ExactBall, &z, &z)?.re;
        let raw = leading_raw(&ball, z.as_slice(), z.as_slice())?;
        Ok(KernelMode::FeffermanLeading {
            c: exact / raw.re,
            delta,
        })
    }
}

/// `det` of the Levi form restricted to the complex tangent space at w.
pub fn levi_det(dom: &DomainSpec, w: &[C]) -> Result<f64> {
    let jet = dom.jet(w);
    let n = w.len();
    let nu = jet.dbar();
    let g = cplx::norm(&nu);
    if g < 1e-14 {
        return Err(Error::DegenerateGradient { norm: g });
    }
    if n == 1 {
        return Ok(1.0);
    }
    let nu = cplx::normalized(&nu);
    // orthonormal basis of ν^⊥ by Gram-Schmidt over the coordinate axes
    let mut basis: Vec<CVec> = vec![nu];
    for k in 0..n {
        let mut v: CVec = (0..n).map(|i| C::new(if i == k { 1.0 } else { 0.0 }, 0.0)).collect();
        for b in &basis {
            let p = cplx::inner(&v, b);
            for i in 0..n {
                v[i] -= p * b[i];
            }
        }
        let nv = cplx::norm(&v);
        if nv > 1e-8 {
            basis.push(v.iter().map(|x| x / nv).collect());
        }
        if basis.len() == n {
            break;
        }
    }
    let t = &basis[1..];
    let m = t.len();
    let h = DMatrix::from_fn(m, m, |a, b| {
        let mut s = C::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                s += jet.levi[i * n + j] * t[b][i] * t[a][j].conj();
            }
        }
        s
    });
    Ok(h.determinant().re)
}

/// |∇r(w)|² det L(w) X(z,w)^{−(n+1)} without the constant.
fn leading_raw(dom: &DomainSpec, z: &[C], w: &[C]) -> Result<C> {
    let n = z.len();
    let (_, dr) = dom.r_grad(w);
    let grad2 = 4.0 * cplx::norm_sq(&dr);
    let x = gauge_eval(dom, &Point::from_slice(z), &Point::from_slice(w)).x;
    if x.norm() < 1e-14 {
        return Err(Error::InvalidMode(format!("X(z,w) = {x:e} too close to 0")));
    }
    Ok(x.powi(-(n as i32 + 1)) * grad2 * levi_det(dom, w)?)
}

/// K(z, w). Hermitian symmetric in both modes.
pub fn kernel_eval(dom: &DomainSpec, mode: KernelMode, z: &Point, w: &Point) -> Result<C> {
    let (rz, rw) = (dom.r(z.as_slice()), dom.r(w.as_slice()));
    if rz >= 0.0 {
        return Err(Error::NotInterior { r: rz });
    }
    if rw >= 0.0 {
        return Err(Error::NotInterior { r: rw });
    }
    match mode {
        KernelMode::ExactBall => {
            if !dom.is_unit_ball() {
                return Err(Error::InvalidMode("exact-ball on a domain other than the unit ball".into()));
            }
            let n = dom.n;
            let x = C::new(1.0, 0.0) - cplx::inner(z.as_slice(), w.as_slice());
            Ok(x.powi(-(n as i32 + 1)) * (factorial(n) / PI.powi(n as i32)))
        }
        KernelMode::FeffermanLeading { c, delta } => {
            let sep = rz.abs() + rw.abs() + z.dist(w);
            if sep >= delta {
                return Err(Error::InvalidMode(format!(
                    "pair outside the near-diagonal region ({sep:.3e} ≥ {delta})"
                )));
            }
            let a = leading_raw(dom, z.as_slice(), w.as_slice())?;
            let b = leading_raw(dom, w.as_slice(), z.as_slice())?;
            Ok((a + b.conj()) * (0.5 * c))
        }
    }
}

/// k_z = K_z / ‖K_z‖ with the norm from the diagonal.
#[derive(Clone, Debug)]
pub struct NormalizedKernel {
    pub dom: DomainSpec,
    pub mode: KernelMode,
    pub center: Point,
    pub norm: f64,
}

impl NormalizedKernel {
    pub fn eval(&self, w: &Point) -> Result<C> {
        Ok(kernel_eval(&self.dom, self.mode, w, &self.center)? / self.norm)
    }

    /// ⟨k_z, k_z⟩ by quadrature.
    pub fn norm_sq_by(&self, quad: &BallQuadrature) -> Result<f64> {
        let mut s = 0.0;
        for (p, w) in quad.points.iter().zip(&quad.weights) {
            s += w * self.eval(p)?.norm_sqr();
        }
        Ok(s)
    }
}

pub fn normalized_kernel(dom: &DomainSpec, mode: KernelMode, z: &Point) -> Result<NormalizedKernel> {
    let kzz = kernel_eval(dom, mode, z, z)?.re;
    if !(kzz > 0.0) {
        return Err(Error::InvalidMode(format!("K(z,z) = {kzz:e}")));
    }
    Ok(NormalizedKernel {
        dom: dom.clone(),
        mode,
        center: z.clone(),
        norm: kzz.sqrt(),
    })
}

/// ⟨k_z, k_w⟩ = K(w,z)/(‖K_z‖‖K_w‖).
pub fn kernel_gram(dom: &DomainSpec, mode: KernelMode, z: &Point, w: &Point) -> Result<C> {
    let kz = kernel_eval(dom, mode, z, z)?.re;
    let kw = kernel_eval(dom, mode, w, w)?.re;
    Ok(kernel_eval(dom, mode, w, z)? / (kz * kw).sqrt())
}

/// Holomorphic polynomial Σ c_α z^α.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolPoly {
    pub n: usize,
    pub terms: Vec<(Vec<u32>, C)>,
}

/// Multi-indices with |α| ≤ deg, graded then lexicographic.
pub fn multi_indices(n: usize, deg: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 0..=deg {
        let mut cur = vec![0u32; n];
        fill(&mut out, &mut cur, 0, total);
    }
    out
}

fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, k: usize, left: u32) {
    let n = cur.len();
    if k == n - 1 {
        cur[k] = left;
        out.push(cur.clone());
        return;
    }
    for a in (0..=left).rev() {
        cur[k] = a;
        fill(out, cur, k + 1, left - a);
    }
    cur[k] = 0;
}

pub fn monomial(z: &[C], alpha: &[u32]) -> C {
    z.iter().zip(alpha).fold(C::new(1.0, 0.0), |p, (x, &a)| p * x.powu(a))
}

impl HolPoly {
    pub fn constant(n: usize, c: C) -> Self {
        HolPoly {
            n,
            terms: vec![(vec![0; n], c)],
        }
    }

    pub fn monomial(alpha: Vec<u32>, c: C) -> Self {
        HolPoly {
            n: alpha.len(),
            terms: vec![(alpha, c)],
        }
    }

    /// Gaussian coefficients on every monomial of degree ≤ deg.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, deg: u32) -> Self {
        let idx = multi_indices(n, deg);
        let s = 1.0 / (idx.len() as f64).sqrt();
        let terms = idx
            .into_iter()
            .map(|a| {
                let (x, y) = cplx::gaussian_pair(rng);
                (a, C::new(x, y) * s)
            })
            .collect();
        HolPoly { n, terms }
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(a, _)| a.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn eval(&self, z: &[C]) -> C {
        self.terms.iter().map(|(a, c)| c * monomial(z, a)).sum()
    }
}

/// Ball rule resolving ⟨h, K_z⟩ for |z| = `z_norm` and deg h ≤ `deg`.
/// Fails when the rule would exceed `max_points`.
pub fn kernel_rule(n: usize, z_norm: f64, deg: usize, max_points: usize) -> Result<BallRuleSpec> {
    let mut m = 8usize;
    if z_norm > 0.0 {
        while (m as f64) * z_norm.powi(m as i32) > 1e-13 {
            m += 1;
            if m > 4096 {
                return Err(Error::Resolution(format!("|z| = {z_norm} too close to the boundary")));
            }
        }
    }
    let spec = BallRuleSpec {
        radial: m / 2 + deg / 2 + 2,
        angular: m + deg + 1,
    };
    let pts = spec.radial.pow(n as u32) * spec.angular.pow(n as u32);
    if pts > max_points {
        return Err(Error::Resolution(format!(
            "rule needs {pts} points for |z| = {z_norm}, cap {max_points}"
        )));
    }
    Ok(spec)
}

/// |h(z) − Q⟨h, K_z⟩| with K in exact-ball mode.
pub fn reproducing_residual(dom: &DomainSpec, h: &HolPoly, z: &Point, quad: &BallQuadrature) -> Result<f64> {
    if !dom.is_unit_ball() {
        return Err(Error::InvalidMode("reproducing residual needs the unit ball".into()));
    }
    if quad.n != dom.n {
        return Err(Error::InvalidArgument("quadrature dimension".into()));
    }
    let n = dom.n;
    let zs = z.as_slice();
    let cst = factorial(n) / PI.powi(n as i32);
    // ⟨h, K_z⟩ = ∫ h(w) K(z, w) dv(w)
    let mut s = C::new(0.0, 0.0);
    for (p, w) in quad.points.iter().zip(&quad.weights) {
        let x = C::new(1.0, 0.0) - cplx::inner(zs, p.as_slice());
        s += h.eval(p.as_slice()) * x.powi(-(n as i32 + 1)) * (cst * w);
    }
    if !s.re.is_finite() || !s.im.is_finite() {
        return Err(Error::Resolution("quadrature overflow".into()));
    }
    Ok((h.eval(zs) - s).norm())
}

/// Residuals over random polynomials of degree ≤ `deg` at points with |z| ≤ `z_max` on the disc.
pub fn check_reproducing(dom: &DomainSpec, deg: u32, z_norms: &[f64], polys: usize, seed: u64, tol: f64) -> Check {
    let name = format!("kernel.reproducing.n{}", dom.n);
    let run = || -> Result<(f64, Vec<(f64, f64)>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let zmax = z_norms.iter().cloned().fold(0.0, f64::max);
        let spec = kernel_rule(dom.n, zmax, 2 * deg as usize, 2_000_000)?;
        let quad = BallQuadrature::new(dom.n, spec);
        let mut worst = 0.0f64;
        let mut rows = Vec::new();
        for &x in z_norms {
            let mut w = 0.0f64;
            for _ in 0..polys {
                let h = HolPoly::random(&mut rng, dom.n, deg);
                let om = cplx::unit_sphere(&mut rng, dom.n);
                let z = Point::from_slice(&cplx::scale(&om, C::new(x, 0.0)));
                w = w.max(reproducing_residual(dom, &h, &z, &quad)?);
            }
            rows.push((x, w));
            worst = worst.max(w);
        }
        Ok((worst, rows))
    };
    match run() {
        Ok((worst, rows)) => Check::new(name, worst <= tol)
            .fit("max_residual", worst)
            .fit("tolerance", tol)
            .witness(rows),
        Err(e) => Check::from_error(name, &e),
    }
}

/// Diagonal values `|K(z,z)|·|r(z)|^{n+1}` along a ray at the given depths.
pub fn diagonal_ratio_scan(dom: &DomainSpec, mode: KernelMode, depths: &[f64]) -> Result<Vec<(f64, f64)>> {
    let n = dom.n;
    let om = cplx::normalized(&(0..n).map(|k| C::new(1.0 + 0.3 * k as f64, 0.2 * k as f64)).collect::<CVec>());
    depths
        .iter()
        .map(|&d| {
            let z = dom
                .point_at_depth(&om, d)
                .ok_or_else(|| Error::Resolution(format!("no point at depth {d:e}")))?;
            let r = dom.r(z.as_slice()).abs();
            let k = kernel_eval(dom, mode, &z, &z)?;
            Ok((d, k.norm() * r.powi(n as i32 + 1)))
        })
        .collect()
}

/// Band width max/min of the diagonal ratio over −r ∈ [1e-3, 1e-1].
pub fn check_diagonal_band(dom: &DomainSpec, mode: KernelMode, label: &str) -> Check {
    let name = format!("kernel.diagonal_band.{label}");
    let depths: Vec<f64> = (0..=8).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect();
    match diagonal_ratio_scan(dom, mode, &depths) {
        Ok(rows) => {
            let hi = max(rows.iter().map(|r| r.1));
            let lo = crate::stats::min(rows.iter().map(|r| r.1));
            let band = hi / lo;
            Check::new(name, lo > 0.0 && band <= 10.0)
                .fit("c", lo)
                .fit("C", hi)
                .fit("band", band)
                .witness(rows)
        }
        Err(e) => Check::from_error(name, &e),
    }
}

/// Near-diagonal pairs on the unit ball at depths in [lo, hi] with |z − w| ≲ depth.
fn near_pairs(n: usize, count: usize, lo: f64, hi: f64, seed: u64) -> Vec<(Point, Point)> {
    let ball = DomainSpec::ball(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z = ball.random_point_log_depth(&mut rng, lo, hi);
        let dz = -ball.r(z.as_slice());
        let step = dz * rng.gen::<f64>();
        let v = cplx::unit_sphere(&mut rng, n);
        let w = z.offset(step, &v);
        if ball.r(w.as_slice()) < 0.0 {
            out.push((z, w));
        }
    }
    out
}

/// Relative error of the leading term against the exact ball kernel, divided by F^{1/2}.
pub fn check_fefferman_vs_exact(n: usize, pairs: usize, seed: u64) -> Check {
    let name = format!("kernel.leading_term_error.n{n}");
    let ball = DomainSpec::ball(n);
    let run = || -> Result<Check> {
        let mode = KernelMode::fefferman(n, 0.5)?;
        let ps = near_pairs(n, pairs, 1e-5, 1e-1, seed);
        let mut rows = Vec::with_capacity(ps.len());
        for (z, w) in &ps {
            let exact = kernel_eval(&ball, KernelMode::ExactBall, z, w)?;
            let lead = kernel_eval(&ball, mode, z, w)?;
            let f = gauge_eval(&ball, z, w).f;
            let rel = (lead - exact).norm() / exact.norm();
            rows.push((f, rel));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ratios: Vec<f64> = rows.iter().map(|(f, e)| e / f.sqrt()).collect();
        let c = max(ratios.iter().cloned());
        // the ratio must stay bounded as F shrinks: compare the small-F half with the rest
        let half = ratios.len() / 2;
        let small = max(ratios[..half].iter().cloned());
        let large = max(ratios[half..].iter().cloned());
        let (lx, ly): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| r.1 > 0.0)
            .map(|(f, e)| (f.ln(), e.ln()))
            .unzip();
        let fit = linear_fit(&lx, &ly);
        Ok(Check::new(name.clone(), c.is_finite() && small <= 2.0 * large.max(1e-300))
            .fit("C", c)
            .fit("C_small_F", small)
            .fit("C_large_F", large)
            .fit("error_vs_F_slope", fit.slope))
    };
    run().unwrap_or_else(|e| Check::from_error(name, &e))
}

/// ∫_{D(z,1)} |f|² dv on the unit ball via the automorphism φ_z.
pub fn local_norm_sq(f: &HolPoly, z: &[C], quad: &BallQuadrature) -> f64 {
    let n = z.len();
    let rho = 1f64.tanh();
    let dz = 1.0 - cplx::norm_sq(z);
    let vol_scale = rho.powi(2 * n as i32);
    let mut s = 0.0;
    for (p, w) in quad.points.iter().zip(&quad.weights) {
        let zeta: CVec = p.as_slice().iter().map(|x| x * rho).collect();
        let img = ball_automorphism(z, &zeta);
        let den = (C::new(1.0, 0.0) - cplx::inner(&zeta, z)).norm_sqr();
        let jac = (dz / den).powi(n as i32 + 1);
        s += w * vol_scale * jac * f.eval(&img).norm_sqr();
    }
    s
}

fn local_rule(n: usize) -> BallQuadrature {
    let spec = if n == 1 {
        BallRuleSpec { radial: 20, angular: 48 }
    } else {
        BallRuleSpec { radial: 10, angular: 20 }
    };
    BallQuadrature::new(n, spec)
}

/// Suprema of a ratio per depth level, shallow to deep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthProfile {
    pub depths: Vec<f64>,
    pub sup: Vec<f64>,
}

impl DepthProfile {
    pub fn constant(&self) -> f64 {
        max(self.sup.iter().cloned())
    }

    /// Deepest third does not exceed 4× the shallowest third.
    pub fn bounded(&self) -> bool {
        let k = (self.sup.len() / 3).max(1);
        let shallow = max(self.sup[..k].iter().cloned());
        let deep = max(self.sup[self.sup.len() - k..].iter().cloned());
        self.constant().is_finite() && deep <= 4.0 * shallow
    }

    fn to_check(&self, name: String) -> Check {
        Check::new(name, self.bounded())
            .fit("C", self.constant())
            .witness(self)
    }
}

fn scan_depths() -> Vec<f64> {
    (0..7).map(|i| 10f64.powf(-0.5 - 0.5 * i as f64)).collect()
}

/// |f(z)| |r(z)|^{(n+1)/2} / ‖f χ_{D(z,1)}‖ over random polynomials.
pub fn local_sup_profile(n: usize, per_level: usize, deg: u32, seed: u64) -> DepthProfile {
    let ball = DomainSpec::ball(n);
    let quad = local_rule(n);
    let depths = scan_depths();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sup = depths
        .iter()
        .map(|&d| {
            let mut s = 0.0f64;
            for _ in 0..per_level {
                let om = cplx::unit_sphere(&mut rng, n);
                let z = ball.point_at_depth(&om, d).expect("ball ray");
                let f = HolPoly::random(&mut rng, n, deg);
                let loc = local_norm_sq(&f, z.as_slice(), &quad).sqrt();
                s = s.max(f.eval(z.as_slice()).norm() * d.powf((n as f64 + 1.0) / 2.0) / loc);
            }
            s
        })
        .collect();
    DepthProfile { depths, sup }
}

pub fn check_local_sup(n: usize, per_level: usize, seed: u64) -> Check {
    local_sup_profile(n, per_level, 6, seed).to_check(format!("kernel.local_sup.n{n}"))
}

/// Random w with d(z, w) < c0 on the unit ball.
fn close_point<R: Rng + ?Sized>(rng: &mut R, z: &[C], c0: f64) -> (Point, f64) {
    let n = z.len();
    let t = c0 * rng.gen::<f64>().max(1e-3);
    let zeta = cplx::scale(&cplx::unit_sphere(rng, n), C::new(t.tanh(), 0.0));
    let w = ball_automorphism(z, &zeta);
    let d = ball_distance(z, &w);
    (Point(w), d)
}

/// |f(w) − f(z)| |r(z)|^{(n+1)/2} / (d(z,w) ‖f χ_{D(z,1)}‖) for d < c0.
pub fn local_lipschitz_profile(n: usize, per_level: usize, c0: f64, seed: u64) -> DepthProfile {
    let ball = DomainSpec::ball(n);
    let quad = local_rule(n);
    let depths = scan_depths();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sup = depths
        .iter()
        .map(|&d| {
            let mut s = 0.0f64;
            for _ in 0..per_level {
                let om = cplx::unit_sphere(&mut rng, n);
                let z = ball.point_at_depth(&om, d).expect("ball ray");
                let (w, dist) = close_point(&mut rng, z.as_slice(), c0);
                if dist <= 0.0 {
                    continue;
                }
                let f = HolPoly::random(&mut rng, n, 6);
                let loc = local_norm_sq(&f, z.as_slice(), &quad).sqrt();
                let diff = (f.eval(w.as_slice()) - f.eval(z.as_slice())).norm();
                s = s.max(diff * d.powf((n as f64 + 1.0) / 2.0) / (dist * loc));
            }
            s
        })
        .collect();
    DepthProfile { depths, sup }
}

pub fn check_local_lipschitz(n: usize, per_level: usize, seed: u64) -> Check {
    local_lipschitz_profile(n, per_level, 0.25, seed)
        .to_check(format!("kernel.local_lipschitz.n{n}"))
        .fit("c", 0.25)
}

/// ‖k_z − k_w‖ / d(z, w) from the exact Gram value, d < c0.
pub fn kernel_lipschitz(n: usize, per_level: usize, c0: f64, seed: u64) -> Result<DepthProfile> {
    let ball = DomainSpec::ball(n);
    let depths = scan_depths();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sup = Vec::with_capacity(depths.len());
    for &d in &depths {
        let mut s = 0.0f64;
        for _ in 0..per_level {
            let om = cplx::unit_sphere(&mut rng, n);
            let z = ball.point_at_depth(&om, d).expect("ball ray");
            let (w, dist) = close_point(&mut rng, z.as_slice(), c0);
            if dist <= 0.0 || ball.r(w.as_slice()) >= 0.0 {
                continue;
            }
            let g = kernel_gram(&ball, KernelMode::ExactBall, &z, &w)?;
            let diff = (2.0 - 2.0 * g.re).max(0.0).sqrt();
            s = s.max(diff / dist);
        }
        sup.push(s);
    }
    Ok(DepthProfile { depths, sup })
}

pub fn check_kernel_lipschitz(n: usize, per_level: usize, seed: u64) -> Check {
    let name = format!("kernel.normalized_lipschitz.n{n}");
    match kernel_lipschitz(n, per_level, 0.25, seed) {
        Ok(p) => p.to_check(name),
        Err(e) => Check::from_error(name, &e),
    }
}

/// Pairs with d ≤ c must have |⟨k_z, k_w⟩| ≥ 1/2.
pub fn check_gram_floor(n: usize, pairs: usize, c: f64, seed: u64) -> Check {
    let name = format!("kernel.gram_floor.n{n}");
    let ball = DomainSpec::ball(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut witness = None;
    for _ in 0..pairs {
        let z = ball.random_point_log_depth(&mut rng, 1e-6, 0.5);
        let (w, dist) = close_point(&mut rng, z.as_slice(), c);
        if dist > c || ball.r(w.as_slice()) >= 0.0 {
            continue;
        }
        match kernel_gram(&ball, KernelMode::ExactBall, &z, &w) {
            Ok(g) => {
                if g.norm() < worst {
                    worst = g.norm();
                    witness = Some((z.clone(), w.clone(), dist));
                }
            }
            Err(e) => return Check::from_error(name, &e),
        }
    }
    Check::new(name, worst >= 0.5).fit("c", c).fit("min_gram", worst).witness(witness)
}

/// |f(u) − f(0)| ρ / (|u| avg_{B(ρ)}|f|) for analytic polynomials on balls of C^m.
pub fn mean_value_gradient(m: usize, trials: usize, seed: u64) -> (f64, Vec<f64>) {
    let quad = BallQuadrature::new(m, if m == 1 { BallRuleSpec { radial: 12, angular: 32 } } else { BallRuleSpec { radial: 8, angular: 16 } });
    let vol = crate::cplx::ball_volume(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(trials);
    for _ in 0..trials {
        let rho = (rng.gen::<f64>() * 4.0 - 2.0).exp();
        let f = HolPoly::random(&mut rng, m, 5);
        let frac = 0.5 * rng.gen::<f64>().max(1e-4);
        let u = cplx::scale(&cplx::unit_sphere(&mut rng, m), C::new(rho * frac, 0.0));
        // f(ρ·) on the unit ball: averages are scale invariant
        let avg = quad
            .points
            .iter()
            .zip(&quad.weights)
            .map(|(p, w)| {
                let x: CVec = p.as_slice().iter().map(|c| c * rho).collect();
                w * f.eval(&x).norm()
            })
            .sum::<f64>()
            / vol;
        let zero = vec![C::new(0.0, 0.0); m];
        let diff = (f.eval(&u) - f.eval(&zero)).norm();
        ratios.push(diff * rho / (cplx::norm(&u) * avg));
    }
    (max(ratios.iter().cloned()), ratios)
}

pub fn check_mean_value_gradient(m: usize, trials: usize, seed: u64) -> Check {
    let (c, _) = mean_value_gradient(m, trials, seed);
    // Cauchy estimates on B(ρ/2) bound the constant by a dimensional number
    Check::new(format!("kernel.mean_value_gradient.m{m}"), c.is_finite() && c <= 100.0).fit("C", c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_values() {
        let disc = DomainSpec::disc();
        let o = Point::zeros(1);
        let k = kernel_eval(&disc, KernelMode::ExactBall, &o, &o).unwrap();
        assert!((k.re - 1.0 / PI).abs() < 1e-15);
        let b2 = DomainSpec::ball(2);
        let o2 = Point::zeros(2);
        let k = kernel_eval(&b2, KernelMode::ExactBall, &o2, &o2).unwrap();
        assert!((k.re - 2.0 / (PI * PI)).abs() < 1e-15);
        let nk = normalized_kernel(&disc, KernelMode::ExactBall, &o).unwrap();
        let v = nk.eval(&Point::from_slice(&[C::new(0.3, -0.4)])).unwrap();
        assert!((v.re - 1.0 / PI.sqrt()).abs() < 1e-14 && v.im.abs() < 1e-15);
    }

    #[test]
    fn hermitian_symmetry_both_modes() {
        let e = DomainSpec::ellipsoid(&[1.0, 2.0]).unwrap();
        let mode = KernelMode::fefferman(2, 2.0).unwrap();
        let z = Point::from_slice(&[C::new(0.6, 0.1), C::new(0.2, -0.3)]);
        let w = Point::from_slice(&[C::new(0.55, 0.2), C::new(0.25, -0.25)]);
        let a = kernel_eval(&e, mode, &z, &w).unwrap();
        let b = kernel_eval(&e, mode, &w, &z).unwrap();
        assert_eq!(a, b.conj());
        let b2 = DomainSpec::ball(2);
        let a = kernel_eval(&b2, KernelMode::ExactBall, &z, &w).unwrap();
        let b = kernel_eval(&b2, KernelMode::ExactBall, &w, &z).unwrap();
        assert_eq!(a, b.conj());
    }

    #[test]
    fn mode_errors() {
        let e = DomainSpec::ellipsoid(&[1.0, 2.0]).unwrap();
        let o = Point::zeros(2);
        assert!(matches!(kernel_eval(&e, KernelMode::ExactBall, &o, &o), Err(Error::InvalidMode(_))));
        let mode = KernelMode::fefferman(2, 0.1).unwrap();
        assert!(matches!(kernel_eval(&e, mode, &o, &o), Err(Error::InvalidMode(_))));
    }

    #[test]
    fn calibration_matches_at_the_anchor() {
        for n in 1..=2 {
            let ball = DomainSpec::ball(n);
            let mode = KernelMode::fefferman(n, 0.5).unwrap();
            let z = Point::axis(n, 0, C::new((1.0 - CALIBRATION_DEPTH).sqrt(), 0.0));
            let a = kernel_eval(&ball, mode, &z, &z).unwrap();
            let b = kernel_eval(&ball, KernelMode::ExactBall, &z, &z).unwrap();
            assert!((a / b - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn levi_det_on_ellipsoid_boundary() {
        // r = |z1|² + 2|z2|² − 1 at z = (1, 0): tangent space is the z2 axis, L = 2
        let e = DomainSpec::ellipsoid(&[1.0, 2.0]).unwrap();
        let d = levi_det(&e, &[C::new(1.0, 0.0), C::new(0.0, 0.0)]).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reproducing_examples() {
        let disc = DomainSpec::disc();
        let coarse = BallQuadrature::new(1, BallRuleSpec::exact_for(1, 12));
        let one = HolPoly::constant(1, C::new(1.0, 0.0));
        let o = Point::zeros(1);
        assert!(reproducing_residual(&disc, &one, &o, &coarse).unwrap() <= 1e-8);
        let q = BallQuadrature::new(1, kernel_rule(1, 0.5, 4, 1 << 20).unwrap());
        let h = HolPoly::monomial(vec![2], C::new(1.0, 0.0));
        let z = Point::from_slice(&[C::new(0.5, 0.0)]);
        assert!(reproducing_residual(&disc, &h, &z, &q).unwrap() <= 1e-6);
        let q = BallQuadrature::new(1, kernel_rule(1, 0.9, 0, 1 << 20).unwrap());
        let z = Point::from_slice(&[C::new(0.9, 0.0)]);
        assert!(reproducing_residual(&disc, &one, &z, &q).unwrap() <= 1e-4);
    }

    #[test]
    fn normalization_by_quadrature() {
        let disc = DomainSpec::disc();
        let z = Point::from_slice(&[C::new(0.3, 0.2)]);
        let nk = normalized_kernel(&disc, KernelMode::ExactBall, &z).unwrap();
        let q = BallQuadrature::new(1, kernel_rule(1, 0.6, 0, 1 << 20).unwrap());
        assert!((nk.norm_sq_by(&q).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn local_norm_of_constant_is_volume() {
        // vol D(z,1) = π tanh²(1)·(1−|z|²)²/(1−tanh²(1)|z|²)² on the disc
        let q = local_rule(1);
        let one = HolPoly::constant(1, C::new(1.0, 0.0));
        for x in [0.0, 0.5, 0.95] {
            let got = local_norm_sq(&one, &[C::new(x, 0.0)], &q);
            let t2 = 1f64.tanh().powi(2);
            let want = PI * t2 * (1.0 - x * x).powi(2) / (1.0 - t2 * x * x).powi(2);
            assert!((got / want - 1.0).abs() < 1e-5, "{x}: {got} vs {want}");
        }
    }

    #[test]
    fn multi_index_count() {
        assert_eq!(multi_indices(2, 1).len(), 3);
        assert_eq!(multi_indices(3, 4).len(), 35);
        assert_eq!(multi_indices(1, 2), vec![vec![0], vec![1], vec![2]]);
    }
}
