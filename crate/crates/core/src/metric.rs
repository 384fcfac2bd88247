//! The imitation Bergman metric: tensor, path lengths, the variational distance
//! estimator, metric balls, polydiscs and closed forms on the unit ball.

use crate::cplx::{self, CVec, Point, C};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::quadrature::{GL4_NODES, GL4_WEIGHTS};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Quintic smoothstep: 1 on [−θ, ∞), 0 on (−∞, −2θ].
pub fn psi(r: f64, theta: f64) -> f64 {
    if r >= -theta {
        1.0
    } else if r <= -2.0 * theta {
        0.0
    } else {
        let s = (r + 2.0 * theta) / theta;
        s * s * s * (s * (6.0 * s - 15.0) + 10.0)
    }
}

#[derive(Clone, Debug)]
pub struct MetricTensorValue {
    /// Row j, column i holds b_ij.
    pub b: DMatrix<C>,
}

impl MetricTensorValue {
    /// `⟨Bξ, ξ⟩`
    pub fn quad(&self, xi: &[C]) -> f64 {
        let n = xi.len();
        let mut s = C::new(0.0, 0.0);
        for j in 0..n {
            for i in 0..n {
                s += xi[j].conj() * self.b[(j, i)] * xi[i];
            }
        }
        s.re
    }
}

pub fn metric_tensor(dom: &DomainSpec, z: &Point) -> Result<MetricTensorValue> {
    let jet = dom.jet(&z.0);
    if !(jet.r < 0.0) {
        return Err(Error::NotInterior { r: jet.r });
    }
    let n = dom.n;
    let r = jet.r;
    let p = psi(r, dom.theta);
    let b = DMatrix::from_fn(n, n, |j, i| {
        let inner = jet.levi[i * n + j] / (-r) + jet.dr[i] * jet.dr[j].conj() / (r * r);
        let delta = if i == j { 1.0 } else { 0.0 };
        inner * p + C::new((1.0 - p) * delta, 0.0)
    });
    let eig = b.clone().symmetric_eigenvalues();
    let emin = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(emin > 0.0) {
        return Err(Error::NotPositive { eig: emin });
    }
    Ok(MetricTensorValue { b })
}

/// `⟨B(z)ξ, ξ⟩`, or `None` outside Ω.
#[inline]
pub fn metric_quad(dom: &DomainSpec, z: &[C], xi: &[C]) -> Option<f64> {
    let jet = dom.jet(z);
    let r = jet.r;
    if !(r < 0.0) {
        return None;
    }
    let p = psi(r, dom.theta);
    let lev = jet.levi_form(xi);
    let hol: C = jet.dr.iter().zip(xi).map(|(a, b)| a * b).sum();
    let q = lev / (-r) + hol.norm_sqr() / (r * r);
    if p == 1.0 {
        Some(q)
    } else {
        Some(p * q + (1.0 - p) * cplx::norm_sq(xi))
    }
}

/// Ordered interior nodes of a piecewise-linear path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPolyline {
    pub nodes: Vec<Point>,
}

impl PathPolyline {
    pub fn segments(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    pub fn straight(z: &Point, w: &Point, k: usize) -> Self {
        PathPolyline {
            nodes: (0..=k).map(|i| z.lerp(w, i as f64 / k as f64)).collect(),
        }
    }

    /// Resample at `k` segments, uniform in Euclidean arc length.
    pub fn resample(&self, k: usize) -> Self {
        let m = self.nodes.len();
        if m < 2 {
            return self.clone();
        }
        let mut cum = vec![0.0; m];
        for i in 1..m {
            cum[i] = cum[i - 1] + self.nodes[i - 1].dist(&self.nodes[i]);
        }
        let total = cum[m - 1];
        if total == 0.0 {
            return PathPolyline {
                nodes: vec![self.nodes[0].clone(); k + 1],
            };
        }
        let mut out = Vec::with_capacity(k + 1);
        let mut seg = 0;
        for i in 0..=k {
            let s = total * i as f64 / k as f64;
            while seg + 2 < m && cum[seg + 1] < s {
                seg += 1;
            }
            let len = cum[seg + 1] - cum[seg];
            let t = if len > 0.0 { ((s - cum[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
            out.push(self.nodes[seg].lerp(&self.nodes[seg + 1], t));
        }
        out[0] = self.nodes[0].clone();
        out[k] = self.nodes[m - 1].clone();
        PathPolyline { nodes: out }
    }

    /// Insert the Euclidean midpoint of every segment.
    pub fn refine(&self) -> Self {
        let mut out = Vec::with_capacity(2 * self.nodes.len());
        for i in 0..self.nodes.len() {
            if i > 0 {
                out.push(self.nodes[i - 1].lerp(&self.nodes[i], 0.5));
            }
            out.push(self.nodes[i].clone());
        }
        PathPolyline { nodes: out }
    }
}

/// Length of one linear segment by 4-point Gauss-Legendre; infinite if an abscissa leaves Ω.
#[inline]
pub fn segment_length(dom: &DomainSpec, a: &Point, b: &Point) -> f64 {
    let v = cplx::sub(&b.0, &a.0);
    if cplx::norm_sq(&v) == 0.0 {
        return 0.0;
    }
    let mut s = 0.0;
    for (t, w) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
        let x: CVec = a.0.iter().zip(v.iter()).map(|(p, d)| p + d * *t).collect();
        match metric_quad(dom, &x, &v) {
            Some(q) => s += w * q.max(0.0).sqrt(),
            None => return f64::INFINITY,
        }
    }
    s
}

pub fn path_length(dom: &DomainSpec, path: &PathPolyline) -> Result<f64> {
    for p in &path.nodes {
        let r = dom.r(&p.0);
        if !(r < 0.0) {
            return Err(Error::NotInterior { r });
        }
    }
    let mut total = 0.0;
    for w in path.nodes.windows(2) {
        let l = segment_length(dom, &w[0], &w[1]);
        if !l.is_finite() {
            let v = cplx::sub(&w[1].0, &w[0].0);
            let rmax = GL4_NODES
                .iter()
                .map(|t| dom.r(&w[0].offset(*t, &v).0))
                .fold(f64::NEG_INFINITY, f64::max);
            return Err(Error::QuadratureOutside { r: rmax });
        }
        total += l;
    }
    Ok(total)
}

/// Optimizer configuration for [`distance`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    /// segments K of the final path
    pub nodes: usize,
    /// sweeps per refinement level; 0 returns the best seed unoptimized
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            nodes: 64,
            max_iters: 200,
            restarts: 2,
            seed: 0,
            tol: 1e-8,
        }
    }
}

impl Budget {
    /// Cheap budget used by scans.
    pub fn scan() -> Self {
        Budget {
            nodes: 16,
            max_iters: 40,
            restarts: 2,
            seed: 0,
            tol: 1e-6,
        }
    }

    /// Coarse budget for large pair scans (8 segments, one restart).
    pub fn fast() -> Self {
        Budget {
            nodes: 8,
            max_iters: 20,
            restarts: 1,
            seed: 0,
            tol: 1e-4,
        }
    }

    /// Unoptimized path certificate.
    pub fn certificate(nodes: usize) -> Self {
        Budget {
            nodes,
            max_iters: 0,
            restarts: 2,
            seed: 0,
            tol: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistanceResult {
    pub d_upper: f64,
    pub path: PathPolyline,
    /// false when some level ran out of sweeps before reaching `tol`
    pub converged: bool,
    pub sweeps: usize,
}

const BARRIER: f64 = 1e-12;

struct Chain<'a> {
    dom: &'a DomainSpec,
    nodes: Vec<Point>,
    seg: Vec<f64>,
}

impl<'a> Chain<'a> {
    fn new(dom: &'a DomainSpec, path: PathPolyline) -> Self {
        let seg = path
            .nodes
            .windows(2)
            .map(|w| segment_length(dom, &w[0], &w[1]))
            .collect();
        Chain {
            dom,
            nodes: path.nodes,
            seg,
        }
    }

    fn length(&self) -> f64 {
        self.seg.iter().sum()
    }

    fn local(&self, i: usize, x: &Point) -> (f64, f64, f64) {
        let r = self.dom.r(&x.0);
        if !(r < 0.0) {
            return (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        }
        let a = segment_length(self.dom, &self.nodes[i - 1], x);
        let b = segment_length(self.dom, x, &self.nodes[i + 1]);
        (a * a + b * b - BARRIER * (-r).ln(), a, b)
    }

    /// Real 2n×2n matrix of the metric at x.
    fn frame(&self, x: &Point) -> Option<Vec<CVec>> {
        let n = x.n();
        let m = 2 * n;
        let unit = |k: usize| -> CVec {
            let mut v: CVec = smallvec::SmallVec::from_elem(C::new(0.0, 0.0), n);
            v[k / 2] = if k % 2 == 0 { C::new(1.0, 0.0) } else { C::new(0.0, 1.0) };
            v
        };
        let mut g = DMatrix::<f64>::zeros(m, m);
        let mut diag = vec![0.0; m];
        for k in 0..m {
            diag[k] = metric_quad(self.dom, &x.0, &unit(k))?;
            g[(k, k)] = diag[k];
        }
        for k in 0..m {
            for l in (k + 1)..m {
                let v: CVec = unit(k).iter().zip(unit(l).iter()).map(|(a, b)| a + b).collect();
                let q = metric_quad(self.dom, &x.0, &v)?;
                let off = 0.5 * (q - diag[k] - diag[l]);
                g[(k, l)] = off;
                g[(l, k)] = off;
            }
        }
        let eig = SymmetricEigen::new(g);
        let mut dirs = Vec::with_capacity(m);
        for k in 0..m {
            let lam = eig.eigenvalues[k];
            if !(lam > 0.0) {
                return None;
            }
            let s = 1.0 / lam.sqrt();
            let v: CVec = (0..n)
                .map(|j| C::new(eig.eigenvectors[(2 * j, k)], eig.eigenvectors[(2 * j + 1, k)]) * s)
                .collect();
            dirs.push(v);
        }
        Some(dirs)
    }

    fn sweep(&mut self) {
        let k = self.nodes.len() - 1;
        for i in 1..k {
            let x0 = self.nodes[i].clone();
            let Some(dirs) = self.frame(&x0) else { continue };
            let mut x = x0;
            let (mut f0, mut a0, mut b0) = self.local(i, &x);
            for d in &dirs {
                let lm = 0.5 * (a0 + b0);
                if !(lm > 0.0) {
                    break;
                }
                let h = 1e-3 * lm;
                let fp = self.local(i, &x.offset(h, d)).0;
                let fm = self.local(i, &x.offset(-h, d)).0;
                let mut step = if fp.is_finite() && fm.is_finite() {
                    let g = (fp - fm) / (2.0 * h);
                    let hh = (fp - 2.0 * f0 + fm) / (h * h);
                    if hh > 0.0 {
                        -g / hh
                    } else {
                        -g.signum() * 0.5 * lm
                    }
                } else if fp.is_finite() {
                    if fp < f0 { 0.5 * lm } else { -0.5 * lm }
                } else if fm.is_finite() {
                    if fm < f0 { -0.5 * lm } else { 0.5 * lm }
                } else {
                    continue;
                };
                step = step.clamp(-lm, lm);
                for _ in 0..10 {
                    let xn = x.offset(step, d);
                    let (fnew, an, bn) = self.local(i, &xn);
                    if fnew < f0 {
                        x = xn;
                        f0 = fnew;
                        a0 = an;
                        b0 = bn;
                        break;
                    }
                    step *= 0.5;
                }
            }
            self.nodes[i] = x;
            self.seg[i - 1] = a0;
            self.seg[i] = b0;
        }
    }

    /// Sweeps until the relative decrease of the path length drops below `tol`.
    fn relax(&mut self, max_iters: usize, tol: f64) -> (bool, usize) {
        let mut l = self.length();
        for it in 0..max_iters {
            self.sweep();
            let l2 = self.length();
            if !(l - l2 > tol * l2) {
                return (true, it + 1);
            }
            l = l2;
        }
        (max_iters == 0, max_iters)
    }
}

fn interior_path(dom: &DomainSpec, p: &PathPolyline) -> bool {
    p.nodes.iter().all(|x| dom.r(&x.0) < 0.0)
}

/// Arc seed: retreat inward along −u from both ends, cross, come back out.
fn arc_seed(dom: &DomainSpec, z: &Point, w: &Point, k: usize) -> Option<PathPolyline> {
    let gap = z.dist(w);
    let retreat = |p: &Point| -> Option<Point> {
        let u = dom.outward(&p.0).ok()?;
        let mut s = 0.5 * gap;
        for _ in 0..30 {
            let q = p.offset(-s, &u);
            if dom.r(&q.0) < dom.r(&p.0) && dom.r(&q.0) < 0.0 {
                return Some(q);
            }
            s *= 0.5;
        }
        None
    };
    let zi = retreat(z).unwrap_or_else(|| z.clone());
    let wi = retreat(w).unwrap_or_else(|| w.clone());
    if zi == *z && wi == *w {
        return None;
    }
    let poly = PathPolyline {
        nodes: vec![z.clone(), zi, wi, w.clone()],
    };
    let p = poly.resample(k);
    interior_path(dom, &p).then_some(p)
}

fn seeds(dom: &DomainSpec, z: &Point, w: &Point, k: usize, budget: &Budget) -> Vec<PathPolyline> {
    let mut out = vec![PathPolyline::straight(z, w, k)];
    if budget.restarts >= 2 {
        if let Some(a) = arc_seed(dom, z, w, k) {
            out.push(a);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let gap = z.dist(w);
    for _ in 2..budget.restarts.max(2) {
        let mut p = PathPolyline::straight(z, w, k);
        let bump = cplx::gaussian_vec(&mut rng, z.n());
        let amp = 0.25 * gap * rng.gen::<f64>();
        for (i, x) in p.nodes.iter_mut().enumerate().take(k).skip(1) {
            let t = i as f64 / k as f64;
            *x = x.offset(amp * (std::f64::consts::PI * t).sin(), &bump);
        }
        if interior_path(dom, &p) {
            out.push(p);
        }
    }
    out.retain(|p| interior_path(dom, p) && path_length(dom, p).is_ok());
    out
}

/// Upper estimate of d(z, w) by multi-start, coarse-to-fine minimization of the discrete
/// path energy over interior node positions.
pub fn distance(dom: &DomainSpec, z: &Point, w: &Point, budget: &Budget) -> Result<DistanceResult> {
    for p in [z, w] {
        let r = dom.r(&p.0);
        if !(r < 0.0) {
            return Err(Error::NotInterior { r });
        }
    }
    let k = budget.nodes.max(1);
    if z == w {
        return Ok(DistanceResult {
            d_upper: 0.0,
            path: PathPolyline {
                nodes: vec![z.clone(); k + 1],
            },
            converged: true,
            sweeps: 0,
        });
    }
    if budget.max_iters == 0 {
        let mut best: Option<(f64, PathPolyline)> = None;
        for s in seeds(dom, z, w, k, budget) {
            let l = path_length(dom, &s)?;
            if best.as_ref().map_or(true, |b| l < b.0) {
                best = Some((l, s));
            }
        }
        let (d, path) = best.ok_or(Error::QuadratureOutside { r: 0.0 })?;
        return Ok(DistanceResult {
            d_upper: d,
            path,
            converged: true,
            sweeps: 0,
        });
    }
    let k0 = k.min(4);
    let mut best: Option<DistanceResult> = None;
    for seed in seeds(dom, z, w, k0, budget) {
        let mut chain = Chain::new(dom, seed);
        let mut converged = true;
        let mut sweeps = 0;
        let mut level = k0;
        loop {
            let (ok, s) = chain.relax(budget.max_iters, budget.tol);
            converged &= ok;
            sweeps += s;
            if level >= k {
                break;
            }
            let path = PathPolyline {
                nodes: chain.nodes.clone(),
            };
            let next = if 2 * level <= k { path.refine() } else { path.resample(k) };
            level = next.segments();
            chain = Chain::new(dom, next);
        }
        let path = PathPolyline { nodes: chain.nodes };
        let d = match path_length(dom, &path) {
            Ok(d) => d,
            Err(_) => continue,
        };
        debug_assert!((d - chain.seg.iter().sum::<f64>()).abs() <= 1e-9 * (1.0 + d));
        if best.as_ref().map_or(true, |b| d < b.d_upper) {
            best = Some(DistanceResult {
                d_upper: d,
                path,
                converged,
                sweeps,
            });
        }
    }
    best.ok_or(Error::QuadratureOutside { r: 0.0 })
}

/// Exact distance on the unit ball: arctanh |φ_z(w)|.
pub fn ball_distance(z: &[C], w: &[C]) -> f64 {
    let dz = 1.0 - cplx::norm_sq(z);
    let dw = 1.0 - cplx::norm_sq(w);
    ball_distance_with_depths(z, w, dz, dw)
}

/// Same as [`ball_distance`] with `1 − |z|^2`, `1 − |w|^2` supplied by the caller.
pub fn ball_distance_with_depths(z: &[C], w: &[C], dz: f64, dw: f64) -> f64 {
    let one_minus = C::new(1.0, 0.0) - cplx::inner(z, w);
    let s = one_minus.norm_sqr();
    let diff = cplx::norm_sq(&cplx::sub(z, w));
    let mut lag = 0.0;
    for i in 0..z.len() {
        for j in (i + 1)..z.len() {
            lag += (z[i] * w[j] - z[j] * w[i]).norm_sqr();
        }
    }
    let phi2 = ((diff - lag).max(0.0) / s).min(1.0);
    let om = dz * dw / s;
    (phi2.sqrt()).ln_1p() - 0.5 * om.ln()
}

/// P(η; a, b): vectors u + v with u ⟂ η, |u| < a, v ∈ span{η}, |v| < b, translated to `center`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polydisc {
    pub center: Point,
    pub axis: Vec<C>,
    pub a: f64,
    pub b: f64,
}

impl Polydisc {
    pub fn contains(&self, w: &Point) -> bool {
        let x = cplx::sub(&w.0, &self.center.0);
        let eta = cplx::normalized(&self.axis);
        let c = cplx::inner(&x, &eta);
        let v_norm = c.norm();
        let u: CVec = x.iter().zip(eta.iter()).map(|(xi, e)| xi - e * c).collect();
        cplx::norm(&u) < self.a && v_norm < self.b
    }
}

#[derive(Clone, Debug)]
pub enum MetricRegion {
    Ball { center: Point, radius: f64 },
    Polydisc(Polydisc),
}

/// Which distance to use for ball membership.
#[derive(Clone, Copy, Debug)]
pub enum DistanceOracle {
    /// closed form on the unit ball
    Exact,
    Optimized(Budget),
}

impl DistanceOracle {
    pub fn for_domain(dom: &DomainSpec, budget: Budget) -> Self {
        if dom.is_unit_ball() {
            DistanceOracle::Exact
        } else {
            DistanceOracle::Optimized(budget)
        }
    }

    pub fn eval(&self, dom: &DomainSpec, z: &Point, w: &Point) -> Result<f64> {
        match self {
            DistanceOracle::Exact => Ok(ball_distance(&z.0, &w.0)),
            DistanceOracle::Optimized(b) => Ok(distance(dom, z, w, b)?.d_upper),
        }
    }
}

pub fn region_contains(dom: &DomainSpec, region: &MetricRegion, w: &Point, budget: &Budget) -> Result<bool> {
    match region {
        MetricRegion::Ball { center, radius } => {
            if center == w {
                return Ok(*radius > 0.0);
            }
            if !dom.contains(w) {
                return Ok(false);
            }
            Ok(distance(dom, center, w, budget)?.d_upper < *radius)
        }
        MetricRegion::Polydisc(p) => Ok(p.contains(w)),
    }
}

/// Automorphism φ_z of the unit ball: an involution exchanging z and 0.
pub fn ball_automorphism(z: &[C], w: &[C]) -> CVec {
    let zz = cplx::norm_sq(z);
    let wz = cplx::inner(w, z);
    let den = C::new(1.0, 0.0) - wz;
    if zz == 0.0 {
        return w.iter().map(|x| -x).collect();
    }
    let s = (1.0 - zz).sqrt();
    (0..z.len())
        .map(|i| {
            let p = z[i] * (wz / zz);
            let q = w[i] - p;
            (z[i] - p - q * s) / den
        })
        .collect()
}

/// Regions for [`mu_volume`].
#[derive(Clone, Debug)]
pub enum MuRegion {
    Metric(MetricRegion),
    EuclideanBall { center: Point, radius: f64 },
    /// `2n` real intervals
    Box(Vec<[f64; 2]>),
}

/// μ(region) with dμ = dv/(−r)^{n+1}, by mixture importance sampling over dyadic depth bands.
pub fn mu_volume(dom: &DomainSpec, region: &MuRegion, samples: usize, seed: u64) -> Result<crate::sampling::Estimate> {
    use crate::sampling::{Estimate, Sampler};
    let n1 = (dom.n + 1) as i32;
    let (focus, positive) = match region {
        MuRegion::Metric(MetricRegion::Ball { center, radius }) => (Some(center.clone()), *radius > 0.0),
        MuRegion::Metric(MetricRegion::Polydisc(p)) => (Some(p.center.clone()), p.a > 0.0 && p.b > 0.0),
        MuRegion::EuclideanBall { center, radius } => (Some(center.clone()), *radius > 0.0),
        MuRegion::Box(b) => (None, b.iter().all(|iv| iv[1] > iv[0])),
    };
    if !positive {
        return Ok(Estimate {
            estimate: 0.0,
            stderr: 0.0,
            samples: 0,
        });
    }
    let exact = dom.is_unit_ball();
    let budget = Budget::fast();
    let inside = |w: &Point, nr: f64| -> bool {
        match region {
            MuRegion::Metric(MetricRegion::Ball { center, radius }) => {
                if exact {
                    let nrc = -dom.r(&center.0);
                    ball_distance_with_depths(&center.0, &w.0, nrc, nr) < *radius
                } else {
                    distance(dom, center, w, &budget).map(|d| d.d_upper < *radius).unwrap_or(false)
                }
            }
            MuRegion::Metric(MetricRegion::Polydisc(p)) => p.contains(w),
            MuRegion::EuclideanBall { center, radius } => w.dist(center) < *radius,
            MuRegion::Box(b) => (0..2 * dom.n).all(|k| {
                let x = w.get_real(k);
                x >= b[k][0] && x <= b[k][1]
            }),
        }
    };
    let sampler = match &focus {
        Some(c) if c != &dom.center => Sampler::toward(dom, c, 50, 30),
        _ => Sampler::new(dom, None, 50, 0),
    };
    let est = sampler.integrate(
        |v| if inside(&v.w, v.neg_r) { v.neg_r.powi(-n1) } else { 0.0 },
        samples,
        seed,
    )?;
    if est.estimate == 0.0 && matches!(region, MuRegion::Metric(_)) {
        return Err(Error::LowAcceptance { rate: 0.0 });
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cplx::c;

    #[test]
    fn automorphism_is_involution_and_isometry() {
        let z = [c(0.3, 0.4), c(-0.2, 0.1)];
        let w = [c(0.1, -0.5), c(0.4, 0.2)];
        let p = ball_automorphism(&z, &w);
        let back = ball_automorphism(&z, &p);
        assert!(cplx::norm(&cplx::sub(&back, &w)) < 1e-14);
        let zero = ball_automorphism(&z, &z);
        assert!(cplx::norm(&zero) < 1e-15);
        let d1 = ball_distance(&z, &w);
        let d2 = ball_distance(&[c(0.0, 0.0), c(0.0, 0.0)], &p);
        assert!((d1 - d2).abs() < 1e-12);
    }

    #[test]
    fn mu_of_half_disc() {
        let d = DomainSpec::disc();
        let reg = MuRegion::EuclideanBall {
            center: Point::real(&[0.0]),
            radius: 0.5,
        };
        let e = mu_volume(&d, &reg, 100_000, 1).unwrap();
        let exact = std::f64::consts::PI / 3.0;
        assert!((e.estimate - exact).abs() < 4.0 * e.stderr + 1e-3 * exact, "{e:?}");
        let flat = MuRegion::Box(vec![[0.1, 0.1], [-0.5, 0.5]]);
        assert_eq!(mu_volume(&d, &flat, 1000, 1).unwrap().estimate, 0.0);
    }

    #[test]
    fn mu_of_metric_disc_is_invariant() {
        // μ(D(z,a)) = π sinh^2(a) on the disc for every z
        let d = DomainSpec::disc();
        let a = 1.0f64;
        let exact = std::f64::consts::PI * a.sinh().powi(2);
        for x in [0.0, 0.9, 0.999] {
            let reg = MuRegion::Metric(MetricRegion::Ball {
                center: Point::real(&[x]),
                radius: a,
            });
            let e = mu_volume(&d, &reg, 100_000, 2).unwrap();
            assert!((e.estimate - exact).abs() < 4.0 * e.stderr + 1e-3 * exact, "x={x}: {e:?} vs {exact}");
        }
    }

    #[test]
    fn disc_tensor_values() {
        let d = DomainSpec::disc();
        let b0 = metric_tensor(&d, &Point::real(&[0.0])).unwrap();
        assert!((b0.b[(0, 0)].re - 1.0).abs() < 1e-15);
        let b = metric_tensor(&d, &Point::real(&[0.5])).unwrap();
        assert!((b.b[(0, 0)].re - 16.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn tensor_identity_25() {
        let d = DomainSpec::ball(2);
        let z = Point(smallvec::smallvec![c(0.3, 0.4), c(-0.2, 0.5)]);
        let xi = [c(0.7, -0.1), c(0.2, 0.9)];
        let t = metric_tensor(&d, &z).unwrap();
        let r = d.r(&z.0);
        let dz = cplx::inner(&xi, &z.0).norm();
        let expect = cplx::norm_sq(&xi) / (-r) + (dz / r).powi(2);
        assert!((t.quad(&xi) - expect).abs() < 1e-12);
        assert!((metric_quad(&d, &z.0, &xi).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn psi_blend() {
        assert_eq!(psi(-0.5, 1.0), 1.0);
        assert_eq!(psi(-2.5, 1.0), 0.0);
        assert!((psi(-1.5, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn radial_segment_length() {
        let d = DomainSpec::disc();
        let p = PathPolyline::straight(&Point::real(&[0.0]), &Point::real(&[0.5]), 64);
        let l = path_length(&d, &p).unwrap();
        assert!((l - 0.5f64.atanh()).abs() < 1e-4);
        let zero = PathPolyline {
            nodes: vec![Point::real(&[0.2]); 5],
        };
        assert_eq!(path_length(&d, &zero).unwrap(), 0.0);
    }

    #[test]
    fn distance_matches_arctanh_on_disc() {
        let d = DomainSpec::disc();
        for x in [0.3, 0.5, 0.9] {
            let r = distance(&d, &Point::real(&[0.0]), &Point::real(&[x]), &Budget::default()).unwrap();
            assert!((r.d_upper / x.atanh() - 1.0).abs() < 0.01, "x={x}: {}", r.d_upper);
        }
    }

    #[test]
    fn ball_closed_form_radial() {
        for x in [0.1, 0.5, 0.99] {
            let d = ball_distance(&[c(0.0, 0.0), c(0.0, 0.0)], &[c(x, 0.0), c(0.0, 0.0)]);
            assert!((d - f64::atanh(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn optimizer_tracks_closed_form_off_axis() {
        let d = DomainSpec::ball(2);
        let z = Point(smallvec::smallvec![c(0.6, 0.1), c(0.0, 0.2)]);
        let w = Point(smallvec::smallvec![c(-0.1, 0.5), c(0.3, -0.2)]);
        let exact = ball_distance(&z.0, &w.0);
        let est = distance(&d, &z, &w, &Budget::default()).unwrap().d_upper;
        assert!(est >= exact * (1.0 - 1e-6), "{est} < {exact}");
        assert!(est <= exact * 1.01, "{est} vs {exact}");
    }

    #[test]
    fn polydisc_examples() {
        let p = Polydisc {
            center: Point::real(&[0.9]),
            axis: vec![c(1.0, 0.0)],
            a: 0.1,
            b: 0.05,
        };
        assert!(p.contains(&Point(smallvec::smallvec![c(0.9, 0.04)])));
        assert!(!p.contains(&Point::real(&[0.96])));
    }
}
