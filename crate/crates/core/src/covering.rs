//! Boundary covering of the unit ball (and disc) at scale m: caps Q(ζ,t), maximal packings
//! E_{m,j}, cells A/B, representatives, cutoffs f_{m,j,u} and the index partition.
//!
//! At m = 65 the cap scales reach 2^{−65j}, far below the spacing of f64 near 1, so every point
//! is stored in collar coordinates near ζ₀ = e₁: a boundary foot ξ = (√(1−|v|²)·e^{iθ}, v) and a
//! depth δ = 1 − |z|², with z = √(1−δ)·ξ. Differences of feet are formed without cancellation,
//! which keeps the gauge and the hyperbolic distance exact to rounding at every level.
//! Each level is built on a window of the boundary around ζ₀ that is several b-caps wide.

use crate::cplx::{self, CVec, Point, C};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::collections::{BTreeMap, HashMap};

/// Point of the closed ball near e₁ in collar coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollarPoint {
    pub theta: f64,
    pub v: CVec,
    #[serde(default)]
    pub depth: f64,
}

impl CollarPoint {
    pub fn boundary(theta: f64, v: &[C]) -> Self {
        CollarPoint {
            theta,
            v: v.iter().cloned().collect(),
            depth: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.v.len() + 1
    }

    pub fn with_depth(&self, depth: f64) -> Self {
        CollarPoint {
            depth,
            ..self.clone()
        }
    }

    pub fn foot(&self) -> Self {
        self.with_depth(0.0)
    }

    fn c(&self) -> f64 {
        (1.0 - cplx::norm_sq(&self.v)).sqrt()
    }

    /// Absolute coordinates (loses the collar resolution).
    pub fn to_point(&self) -> Point {
        let s = (1.0 - self.depth).sqrt();
        let mut z = CVec::new();
        z.push(C::from_polar(self.c() * s, self.theta));
        for x in &self.v {
            z.push(x * s);
        }
        Point(z)
    }

    /// Collar coordinates of an absolute point with z₁ ≠ 0.
    pub fn from_point(z: &Point) -> Self {
        let depth = 1.0 - z.norm().powi(2);
        let s = z.norm();
        CollarPoint {
            theta: z.0[0].arg(),
            v: z.0[1..].iter().map(|x| x / s).collect(),
            depth,
        }
    }
}

/// |ξa − ξb|² and D = 1 − ⟨ξa, ξb⟩ for the feet of two collar points.
pub fn foot_delta(a: &CollarPoint, b: &CollarPoint) -> (f64, C) {
    let delta = a.theta - b.theta;
    let (ca, cb) = (a.c(), b.c());
    let dv = cplx::sub(&b.v, &a.v);
    let sum: CVec = a.v.iter().zip(&b.v).map(|(x, y)| x + y).collect();
    let dc = cplx::inner(&dv, &sum).re / (ca + cb);
    let half = 0.5 * delta;
    let rot = C::new(0.0, 2.0 * half.sin()) * C::from_polar(1.0, half);
    let first = C::from_polar(1.0, delta) * dc + rot * cb;
    let e2 = first.norm_sqr() + cplx::norm_sq(&dv);
    let im_vv = cplx::inner(&a.v, &dv).im;
    let im = -(ca * cb * delta.sin() + im_vv);
    (e2, C::new(0.5 * e2, im))
}

/// |ζ−ξ|² + |⟨ζ−ξ, ∂̄r(ζ)⟩| on the sphere, where ∂̄r(ζ) = ζ.
pub fn cap_gauge(zeta: &CollarPoint, xi: &CollarPoint) -> f64 {
    let (e2, d) = foot_delta(zeta, xi);
    e2 + d.norm()
}

/// ξ ∈ Q(ζ, t).
pub fn cap_contains(zeta: &CollarPoint, t: f64, xi: &CollarPoint) -> bool {
    cap_gauge(zeta, xi) < t
}

/// ξ ∈ Q(ζ, t) for absolute boundary points of any domain.
pub fn cap_contains_point(dom: &DomainSpec, zeta: &Point, t: f64, xi: &Point) -> bool {
    crate::gauge::gauge_rho(dom, &zeta.0, &xi.0) < t
}

/// Hyperbolic distance arctanh|φ_z(w)| between collar points, computed in logs so that
/// depths near the underflow limit stay usable.
pub fn collar_distance(z: &CollarPoint, w: &CollarPoint) -> f64 {
    let (_, d) = foot_delta(z, w);
    distance_from_delta(z.depth, w.depth, d)
}

fn distance_from_delta(dz: f64, dw: f64, d: C) -> f64 {
    let (rz, rw) = ((1.0 - dz).sqrt(), (1.0 - dw).sqrt());
    let one_m = (dz + dw - dz * dw) / (1.0 + rz * rw);
    let q = C::new(one_m, 0.0) + d * (rz * rw);
    let ln_om = (dz.ln() + dw.ln() - 2.0 * q.norm().ln()).min(0.0);
    let phi = (1.0 - ln_om.exp()).max(0.0).sqrt();
    phi.ln_1p() - 0.5 * ln_om
}

/// Real coordinates of v.
fn v_reals(v: &[C]) -> SmallVec<[f64; 6]> {
    v.iter().flat_map(|x| [x.re, x.im]).collect()
}

/// Uniform point in the Euclidean ball of radius `r` in C^k.
pub(crate) fn uniform_v<R: Rng + ?Sized>(rng: &mut R, k: usize, r: f64) -> CVec {
    if k == 0 {
        return CVec::new();
    }
    let dir = cplx::unit_sphere(rng, k);
    let s = r * rng.gen::<f64>().powf(1.0 / (2 * k) as f64);
    dir.iter().map(|x| x * s).collect()
}

/// Sample of Q(u, t) by rejection from a box that contains it.
pub fn sample_in_cap<R: Rng + ?Sized>(rng: &mut R, u: &CollarPoint, t: f64) -> CollarPoint {
    let rv = t.sqrt();
    let reach = theta_reach(u, t, rv, 0.0);
    loop {
        let dv = uniform_v(rng, u.v.len(), rv);
        let v: CVec = u.v.iter().zip(&dv).map(|(a, b)| a + b).collect();
        let p = CollarPoint::boundary(u.theta + reach * (2.0 * rng.gen::<f64>() - 1.0), &v);
        if cap_contains(u, t, &p) {
            return p;
        }
    }
}

/// Bound on |Δθ| over feet with |Im D| < t_im and |Δv| < rv.
fn theta_reach(u: &CollarPoint, t_im: f64, rv: f64, extra_v: f64) -> f64 {
    let vu = cplx::norm(&u.v) + extra_v;
    let cmin2 = 1.0 - (vu + rv).powi(2);
    if cmin2 <= 0.5 {
        return std::f64::consts::PI;
    }
    let s = (t_im + vu * rv) / cmin2;
    if s >= 0.5 {
        std::f64::consts::PI
    } else {
        1.05 * s.asin()
    }
}

/// Region of the boundary holding one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub theta_max: f64,
    pub v_max: f64,
    /// centers with |θ| ≤ inner_theta and |v| ≤ inner_v have all b-conflicts inside the window
    pub inner_theta: f64,
    pub inner_v: f64,
    pub full_circle: bool,
}

impl Window {
    fn for_scale(n: usize, b: f64, params: &WindowParams) -> Result<Self> {
        let rv = meet_radius(b);
        let (lambda, mu) = if n == 1 { (0.0, params.mu_disc) } else { (params.lambda, params.mu) };
        let inner_v = if n == 1 { 0.0 } else { lambda * rv };
        let inner_theta = mu * 2.0 * b;
        let v_max = if n == 1 { 0.0 } else { inner_v + 1.1 * rv };
        let theta_max = inner_theta + 1.1 * (2.0 * b + inner_v * rv) + 0.5 * b;
        if n > 1 && v_max > 0.3 {
            return Err(Error::InvalidArgument(format!(
                "cap scale b = {b:e} too coarse for the collar chart"
            )));
        }
        if theta_max >= std::f64::consts::PI {
            if n > 1 {
                return Err(Error::InvalidArgument(format!(
                    "cap scale b = {b:e} too coarse for the collar chart"
                )));
            }
            return Ok(Window {
                theta_max: std::f64::consts::PI,
                v_max: 0.0,
                inner_theta: std::f64::consts::PI,
                inner_v: 0.0,
                full_circle: true,
            });
        }
        Ok(Window {
            theta_max,
            v_max,
            inner_theta,
            inner_v,
            full_circle: false,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> CollarPoint {
        let theta = self.theta_max * (2.0 * rng.gen::<f64>() - 1.0);
        CollarPoint::boundary(theta, &uniform_v(rng, n - 1, self.v_max))
    }

    /// Uniform sample of the inner region.
    pub fn sample_inner<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> CollarPoint {
        let theta = self.inner_theta * (2.0 * rng.gen::<f64>() - 1.0);
        CollarPoint::boundary(theta, &uniform_v(rng, n - 1, self.inner_v))
    }

    pub fn contains(&self, p: &CollarPoint) -> bool {
        self.full_circle || (p.theta.abs() <= self.theta_max && cplx::norm(&p.v) <= self.v_max)
    }

    pub fn is_inner(&self, p: &CollarPoint) -> bool {
        self.full_circle || (p.theta.abs() <= self.inner_theta && cplx::norm(&p.v) <= self.inner_v)
    }
}

/// Spatial hash on feet: cells in v, θ-sorted lists inside a cell.
struct Buckets {
    hv: f64,
    full_circle: bool,
    cells: HashMap<SmallVec<[i64; 6]>, Vec<(f64, usize)>>,
}

impl Buckets {
    fn new(hv: f64, full_circle: bool) -> Self {
        Buckets {
            hv,
            full_circle,
            cells: HashMap::new(),
        }
    }

    fn key(&self, v: &[C]) -> SmallVec<[i64; 6]> {
        v_reals(v).iter().map(|x| (x / self.hv).floor() as i64).collect()
    }

    fn insert(&mut self, p: &CollarPoint, idx: usize) {
        let k = self.key(&p.v);
        let list = self.cells.entry(k).or_default();
        let pos = list.partition_point(|e| e.0 < p.theta);
        list.insert(pos, (p.theta, idx));
    }

    /// Indices whose feet may satisfy |Δv| ≤ rv and |Im D| < t_im. The θ range is taken per
    /// cell, since Im D contains the shear Im⟨v_p, v⟩.
    fn query(&self, p: &CollarPoint, rv: f64, t_im: f64, out: &mut Vec<usize>) {
        out.clear();
        let vp = cplx::norm(&p.v);
        let cmin = 1.0 - (vp + rv).powi(2);
        let x = v_reals(&p.v);
        let lo: SmallVec<[i64; 6]> = x.iter().map(|c| ((c - rv) / self.hv).floor() as i64).collect();
        let hi: SmallVec<[i64; 6]> = x.iter().map(|c| ((c + rv) / self.hv).floor() as i64).collect();
        let rc = 0.5 * self.hv * (x.len() as f64).sqrt();
        let mut key = lo.clone();
        let mut ranges: SmallVec<[(f64, f64); 3]> = SmallVec::new();
        loop {
            if let Some(list) = self.cells.get(&key) {
                let vc: CVec = key
                    .chunks(2)
                    .map(|k| C::new((k[0] as f64 + 0.5) * self.hv, (k[1] as f64 + 0.5) * self.hv))
                    .collect();
                let shear = cplx::inner(&p.v, &vc).im;
                let e = vp * rc;
                // cc·sin(θ_p − θ) lies in (−t_im − shear − e, t_im − shear + e), cc ∈ [cmin, 1]
                let (mut s_lo, mut s_hi) = (-t_im - shear - e, t_im - shear + e);
                if s_lo < 0.0 {
                    s_lo /= cmin;
                }
                if s_hi > 0.0 {
                    s_hi /= cmin;
                }
                ranges.clear();
                if cmin <= 0.5 || s_lo <= -0.5 || s_hi >= 0.5 {
                    ranges.push((f64::NEG_INFINITY, f64::INFINITY));
                } else {
                    let (d_lo, d_hi) = (s_lo.asin(), s_hi.asin());
                    let pad = 1e-6 * (d_lo.abs() + d_hi.abs()) + f64::MIN_POSITIVE;
                    let (a, b) = (p.theta - d_hi - pad, p.theta - d_lo + pad);
                    ranges.push((a, b));
                    if self.full_circle {
                        ranges.push((a + std::f64::consts::TAU, b + std::f64::consts::TAU));
                        ranges.push((a - std::f64::consts::TAU, b - std::f64::consts::TAU));
                    }
                }
                for &(a, b) in &ranges {
                    let start = list.partition_point(|e| e.0 < a);
                    for e in &list[start..] {
                        if e.0 > b {
                            break;
                        }
                        out.push(e.1);
                    }
                }
            }
            // odometer over the cell box
            let mut i = 0;
            loop {
                if i == key.len() {
                    return;
                }
                if key[i] < hi[i] {
                    key[i] += 1;
                    break;
                }
                key[i] = lo[i];
                i += 1;
            }
        }
    }
}

/// Necessary condition for Q(u,s) ∩ Q(v,s) ≠ ∅. A common point y gives |ξ−ξ_y|² < 2s/3 for
/// both feet and D(u,v) = D(u,y) + D(y,v) − ⟨ξu−ξy, ξv−ξy⟩, hence |ξu−ξv|² < 8s/3 and |Im D| < 2s.
pub fn caps_may_meet(u: &CollarPoint, v: &CollarPoint, s: f64) -> bool {
    let (e2, d) = foot_delta(u, v);
    e2 < 8.0 * s / 3.0 && d.im.abs() < 2.0 * s
}

pub(crate) fn meet_radius(s: f64) -> f64 {
    (8.0 * s / 3.0).sqrt()
}

/// Window size in units of the conflict radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowParams {
    pub lambda: f64,
    pub mu: f64,
    pub mu_disc: f64,
}

impl Default for WindowParams {
    fn default() -> Self {
        WindowParams {
            lambda: 0.2,
            mu: 0.25,
            mu_disc: 6.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoverConfig {
    pub m: u32,
    pub j_max: u32,
    /// engulfing constant; fitted from samples when absent
    #[serde(default)]
    pub c1: Option<f64>,
    pub candidate_count: usize,
    pub repair_samples: usize,
    pub audit_samples: usize,
    /// center pairs per level in the disjointness audit
    pub audit_pairs: usize,
    /// sampled points per level for the cell and cutoff audits
    pub cell_samples: usize,
    #[serde(default)]
    pub window: WindowParams,
    pub seed: u64,
}

impl Default for CoverConfig {
    fn default() -> Self {
        CoverConfig {
            m: 65,
            j_max: 6,
            c1: None,
            candidate_count: 150_000,
            repair_samples: 50_000,
            audit_samples: 10_000,
            audit_pairs: 2,
            cell_samples: 200,
            window: WindowParams::default(),
            seed: 1,
        }
    }
}

/// d_{m,j} = m·2^{−jm}.
pub fn scale_d(m: u32, j: u32) -> f64 {
    m as f64 * 2f64.powi(-((j * m) as i32))
}

/// 2^{−k·m}.
pub(crate) fn depth_pow(m: u32, k: f64) -> f64 {
    2f64.powf(-k * m as f64)
}

/// f̃_m(x) = max(0, 1 − x/((m/13) − 4)).
pub fn ftilde(m: u32, x: f64) -> f64 {
    let l = m as f64 / 13.0 - 4.0;
    if x <= l {
        1.0 - x / l
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub j: u32,
    pub d: f64,
    pub a: f64,
    pub b: f64,
    /// least gauge between two centers
    pub pack: f64,
    pub window: Window,
    pub centers: Vec<CollarPoint>,
    pub representatives: Vec<CollarPoint>,
    /// partition class ν (0-based) of each center
    pub classes: Vec<u32>,
    pub kappa: u32,
    pub candidates: usize,
    pub repair_rounds: usize,
    /// card{v : Q(v,b) ∩ Q(u,b) ≠ ∅} for centers whose conflicts lie inside the window
    pub inner_overlap: Vec<(usize, usize)>,
    pub max_overlap: usize,
    #[serde(skip)]
    buckets: Option<std::sync::Arc<BucketsHandle>>,
}

/// Lookup structure kept next to a level (rebuilt after deserialization).
struct BucketsHandle {
    caps: Buckets,
}

impl std::fmt::Debug for BucketsHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Buckets")
    }
}

impl PartialEq for BucketsHandle {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Level {
    pub fn depth_a(&self, m: u32) -> (f64, f64) {
        (depth_pow(m, self.j as f64 + 2.0), depth_pow(m, self.j as f64 + 1.0))
    }

    pub fn depth_b(&self, m: u32) -> (f64, f64) {
        (depth_pow(m, self.j as f64 + 3.0), depth_pow(m, self.j as f64))
    }

    fn index(&mut self) {
        let mut caps = Buckets::new(self.a.sqrt(), self.window.full_circle);
        for (i, u) in self.centers.iter().enumerate() {
            caps.insert(u, i);
        }
        self.buckets = Some(std::sync::Arc::new(BucketsHandle { caps }));
    }

    fn caps(&self) -> &Buckets {
        &self.buckets.as_ref().expect("level indexed").caps
    }

    /// Centers u with gauge(u, ξ) < t.
    pub fn centers_near(&self, xi: &CollarPoint, t: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.caps().query(xi, t.sqrt(), t, &mut out);
        out.retain(|&i| cap_gauge(&self.centers[i], xi) < t);
        out
    }

    /// Centers x that may satisfy Q(x, s) ∩ Q(ζ, s) ≠ ∅ (superset from the necessary condition).
    pub fn centers_meeting(&self, zeta: &CollarPoint, s: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.caps().query(zeta, meet_radius(s), 2.0 * s, &mut out);
        out.retain(|&i| caps_may_meet(&self.centers[i], zeta, s));
        out
    }

    pub fn in_a(&self, m: u32, i: usize, z: &CollarPoint) -> bool {
        let (lo, hi) = self.depth_a(m);
        z.depth >= lo && z.depth < hi && cap_gauge(&self.centers[i], z) < self.a
    }

    pub fn in_b(&self, m: u32, i: usize, z: &CollarPoint) -> bool {
        let (lo, hi) = self.depth_b(m);
        z.depth > lo && z.depth < hi && cap_gauge(&self.centers[i], z) < self.b
    }
}

/// Boundary points of Q(u, a) used to bound the distance to an A-cell from outside its shadow.
fn cap_boundary(u: &CollarPoint, a: f64, seed: u64) -> Vec<CollarPoint> {
    if u.v.is_empty() {
        // 4s² + 2s = a with s = sin(Δ/2)
        let s = ((1.0 + 4.0 * a).sqrt() - 1.0) / 4.0;
        let h = 2.0 * s.min(1.0).asin();
        return vec![
            CollarPoint::boundary(u.theta + h, &[]),
            CollarPoint::boundary(u.theta - h, &[]),
        ];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = u.v.len();
    let u1 = C::from_polar(u.c(), u.theta);
    let mut out = Vec::new();
    let (n_phi, n_dir) = (48, 48);
    for _ in 0..n_dir {
        // e ⟂ u, parametrized by its last n−1 coordinates
        let ep = cplx::gaussian_vec(&mut rng, k);
        let e1 = -cplx::inner(&ep, &u.v) / u1.conj();
        let norm = (e1.norm_sqr() + cplx::norm_sq(&ep)).sqrt();
        let (e1, ep): (C, CVec) = (e1 / norm, ep.iter().map(|x| x / norm).collect());
        for p in 0..n_phi {
            let phi = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * (p as f64 + 0.5) / n_phi as f64;
            // 2 Re D + |D| = a along the ray D = ρ e^{iφ}
            let rho = a / (2.0 * phi.cos() + 1.0);
            let d0 = C::from_polar(rho, phi);
            let s2 = 2.0 * d0.re - d0.norm_sqr();
            if s2 <= 0.0 {
                continue;
            }
            let s = s2.sqrt();
            // η = (1 − D₀)u + s e, written as offsets from u
            let rel = -d0 + e1 * s / u1;
            let theta = u.theta + rel.im.atan2(1.0 + rel.re);
            let v: CVec = u.v.iter().zip(&ep).map(|(x, y)| x * (C::new(1.0, 0.0) - d0) + y * s).collect();
            out.push(CollarPoint::boundary(theta, &v));
        }
    }
    out
}

/// Smallest distance from z to {(η, δ) : δ ∈ [lo, hi]} for one foot η.
fn distance_to_fibre(z: &CollarPoint, eta: &CollarPoint, lo: f64, hi: f64) -> f64 {
    let (_, d) = foot_delta(z, eta);
    let c = 0.5 * z.depth + d.re;
    let best = (2.0 * (c * c + d.im * d.im).sqrt()).clamp(lo, hi);
    [lo, hi, best]
        .iter()
        .map(|&t| distance_from_delta(z.depth, t, d))
        .fold(f64::INFINITY, f64::min)
}


/// Per-center cap boundary samples, built on first use.
#[derive(Clone, Default)]
struct BoundaryCache(std::sync::Arc<std::sync::Mutex<HashMap<(u32, usize), std::sync::Arc<Vec<CollarPoint>>>>>);

impl std::fmt::Debug for BoundaryCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("BoundaryCache")
    }
}

impl PartialEq for BoundaryCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// Cover of the boundary window around e₁ at scale m.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    pub n: usize,
    pub m: u32,
    pub c1: f64,
    pub c1_observed: f64,
    /// largest b-overlap count over all centers; the greedy coloring never needs more classes
    pub n0: usize,
    pub levels: Vec<Level>,
    pub seed: u64,
    #[serde(skip)]
    cache: BoundaryCache,
}

/// One (j, u) index together with its cutoff value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Active {
    pub level: usize,
    pub index: usize,
    pub f: f64,
}

/// Sup of gauge(ζ, w)/t over w ∈ Q(ξ, t) with Q(ξ, t) ∩ Q(ζ, t) ≠ ∅, from samples.
pub fn fit_engulfing(n: usize, t: f64, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zeta = CollarPoint::boundary(0.0, &vec![C::new(0.0, 0.0); n - 1]);
    let mut best: f64 = 1.0;
    for _ in 0..trials {
        let y = sample_in_cap(&mut rng, &zeta, t);
        // the sphere gauge is symmetric, so y ∈ Q(ξ, t) iff ξ ∈ Q(y, t)
        let xi = sample_in_cap(&mut rng, &y, t);
        for _ in 0..4 {
            let w = sample_in_cap(&mut rng, &xi, t);
            best = best.max(cap_gauge(&zeta, &w) / t);
        }
    }
    best
}

fn kappa_of(j: u32) -> u32 {
    (j - 1) % 3 + 1
}

/// Greedy maximal packing of one level, its representatives and the b-conflict coloring.
/// Centers are kept at gauge ≥ c_pack·d from each other, which makes their d-caps disjoint as
/// soon as c_pack exceeds the engulfing constant; cells use a = c1·d.
pub fn build_level(n: usize, m: u32, j: u32, c1: f64, c_pack: f64, cfg: &CoverConfig) -> Result<Level> {
    if j == 0 || (j + 3) * m > 1000 {
        return Err(Error::InvalidArgument(format!("level j = {j} outside 1..=(1000/m − 3)")));
    }
    let d = scale_d(m, j);
    let (a, b) = (c1 * d, c1 * c1 * d);
    let t = c_pack.min(c1) * d;
    let window = Window::for_scale(n, b, &cfg.window)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(j as u64);

    let mut caps = Buckets::new(t.sqrt(), window.full_circle);
    let mut centers: Vec<CollarPoint> = Vec::new();
    let mut buf = Vec::new();
    let offer = |p: CollarPoint, centers: &mut Vec<CollarPoint>, caps: &mut Buckets, buf: &mut Vec<usize>| {
        // reject when p ∈ Q(u, t) for an accepted u
        caps.query(&p, t.sqrt(), t, buf);
        if buf.iter().any(|&i| cap_gauge(&centers[i], &p) < t) {
            return false;
        }
        caps.insert(&p, centers.len());
        centers.push(p);
        true
    };
    let mut offered = cfg.candidate_count;
    for _ in 0..cfg.candidate_count {
        let p = window.sample(&mut rng, n);
        offer(p, &mut centers, &mut caps, &mut buf);
    }
    let mut rounds = 0;
    loop {
        rounds += 1;
        let mut added = 0;
        offered += cfg.repair_samples;
        for _ in 0..cfg.repair_samples {
            let p = window.sample_inner(&mut rng, n);
            if offer(p, &mut centers, &mut caps, &mut buf) {
                added += 1;
            }
        }
        if added == 0 || rounds >= 64 {
            break;
        }
    }

    let rv = meet_radius(b);
    let mut conf = Buckets::new(0.5 * rv, window.full_circle);
    for (i, u) in centers.iter().enumerate() {
        conf.insert(u, i);
    }
    let mut classes = vec![u32::MAX; centers.len()];
    let mut inner_overlap = Vec::new();
    let mut max_overlap = 0;
    let mut used = Vec::new();
    for i in 0..centers.len() {
        conf.query(&centers[i], rv, 2.0 * b, &mut buf);
        used.clear();
        let mut count = 0;
        for &k in buf.iter() {
            if caps_may_meet(&centers[i], &centers[k], b) {
                count += 1;
                if classes[k] != u32::MAX {
                    used.push(classes[k]);
                }
            }
        }
        used.sort_unstable();
        used.dedup();
        let mut c = 0;
        for &x in &used {
            if x == c {
                c += 1;
            } else if x > c {
                break;
            }
        }
        classes[i] = c;
        max_overlap = max_overlap.max(count);
        if window.is_inner(&centers[i]) {
            inner_overlap.push((i, count));
        }
    }
    let rep_depth = depth_pow(m, j as f64 + 1.5);
    let representatives = centers.iter().map(|u| u.with_depth(rep_depth)).collect();
    let mut level = Level {
        j,
        d,
        a,
        b,
        pack: t,
        window,
        centers,
        representatives,
        classes,
        kappa: kappa_of(j),
        candidates: offered,
        repair_rounds: rounds,
        inner_overlap,
        max_overlap,
        buckets: None,
    };
    level.index();
    Ok(level)
}

/// Builds every level j = 1..=j_max of the cover of the unit ball or disc.
pub fn build_cover(dom: &DomainSpec, cfg: &CoverConfig) -> Result<Cover> {
    if !dom.is_unit_ball() {
        return Err(Error::InvalidDomain("the boundary covering is implemented for the unit ball and disc".into()));
    }
    if (cfg.m as f64) / 13.0 <= 4.0 {
        return Err(Error::InvalidArgument(format!("m = {} needs m/13 > 4", cfg.m)));
    }
    let n = dom.n;
    let c1_observed = fit_engulfing(n, scale_d(cfg.m, 1), 20_000, cfg.seed ^ 0xe9);
    let c1 = cfg.c1.unwrap_or((1.1 * c1_observed).ceil());
    let levels: Vec<Level> = (1..=cfg.j_max)
        .into_par_iter()
        .map(|j| build_level(n, cfg.m, j, c1, 1.05 * c1_observed, cfg))
        .collect::<Result<_>>()?;
    let n0 = levels.iter().map(|l| l.max_overlap).max().unwrap_or(1);
    Ok(Cover {
        n,
        m: cfg.m,
        c1,
        c1_observed,
        n0,
        levels,
        seed: cfg.seed,
        cache: BoundaryCache::default(),
    })
}

/// One row of the cover-map plot data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverMapRow {
    pub j: u32,
    pub u_index: usize,
    pub center_angle: f64,
    pub d: f64,
}

impl Cover {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut c: Cover = serde_json::from_str(s)?;
        for l in &mut c.levels {
            l.index();
        }
        Ok(c)
    }

    /// L = (m/13) − 4, the width of the cutoff ramp.
    pub fn ramp(&self) -> f64 {
        self.m as f64 / 13.0 - 4.0
    }

    pub fn classes(&self) -> usize {
        self.levels
            .iter()
            .flat_map(|l| l.classes.iter())
            .map(|&c| c as usize + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn cover_map(&self) -> Vec<CoverMapRow> {
        let mut out = Vec::new();
        for l in &self.levels {
            for (i, u) in l.centers.iter().enumerate() {
                out.push(CoverMapRow {
                    j: l.j,
                    u_index: i,
                    center_angle: u.theta,
                    d: l.d,
                });
            }
        }
        out
    }

    fn boundary_samples(&self, li: usize, i: usize) -> std::sync::Arc<Vec<CollarPoint>> {
        let key = (self.levels[li].j, i);
        let mut cache = self.cache.0.lock().expect("cache lock");
        cache
            .entry(key)
            .or_insert_with(|| {
                let l = &self.levels[li];
                std::sync::Arc::new(cap_boundary(&l.centers[i], l.a, self.seed ^ ((key.0 as u64) << 32) ^ i as u64))
            })
            .clone()
    }

    /// Lower bound on d(z, A_{m,j,u}) from the depth gap alone.
    fn depth_lower_bound(&self, li: usize, z: &CollarPoint) -> f64 {
        let (lo, hi) = self.levels[li].depth_a(self.m);
        let w = z.depth.clamp(lo, hi);
        let x = w / z.depth;
        let shrink = (1.0 - z.depth.max(hi)).max(1e-300);
        let om = (4.0 * x / (1.0 + x).powi(2) / (shrink * shrink)).min(1.0);
        -0.5 * om.ln()
    }

    /// Lower bound on d(z, A) from a lower bound on |D(ξ_z, η)| over feet η ∈ Q(u, a): the
    /// Korányi triangle inequality gives (|D(u,ξ)|^{1/2} − a^{1/2})², and expanding
    /// D(u,ξ) = D(u,η) + D(η,ξ) − ⟨u−η, ξ−η⟩ gives (gauge(u,ξ)^{1/2} − a^{1/2})²/3.
    fn lateral_lower_bound(&self, li: usize, i: usize, z: &CollarPoint) -> f64 {
        let l = &self.levels[li];
        let (_, hi) = l.depth_a(self.m);
        let (e2, d) = foot_delta(&l.centers[i], z);
        let sa = l.a.sqrt();
        let g = (d.norm().sqrt() - sa)
            .max(0.0)
            .powi(2)
            .max(((e2 + d.norm()).sqrt() - sa).max(0.0).powi(2) / 3.0);
        let lw = (1.0 - z.depth - hi) * g - (z.depth + hi);
        if lw <= 0.0 {
            return 0.0;
        }
        -0.5 * (z.depth.ln() + hi.ln() - 2.0 * lw.ln())
    }

    /// Upper estimate of d(z, A_{m,j,u}): exact when p(z) lies in Q(u, a) or beyond the ramp,
    /// otherwise the minimum over sampled boundary feet of Q(u, a).
    pub fn distance_to_a(&self, li: usize, i: usize, z: &CollarPoint) -> f64 {
        let l = &self.levels[li];
        let (lo, hi) = l.depth_a(self.m);
        if cap_gauge(&l.centers[i], z) < l.a {
            if z.depth >= lo && z.depth < hi {
                return 0.0;
            }
            return distance_to_fibre(z, &z.foot(), lo, hi);
        }
        let lb = self.depth_lower_bound(li, z).max(self.lateral_lower_bound(li, i, z));
        if lb >= self.ramp() {
            return lb;
        }
        self.boundary_samples(li, i)
            .iter()
            .map(|eta| distance_to_fibre(z, eta, lo, hi))
            .fold(f64::INFINITY, f64::min)
    }

    /// f_{m,j,u}(z) = f̃_m(d(z, A_{m,j,u})), with A-cell points mapped to 1 exactly.
    pub fn cutoff(&self, li: usize, i: usize, z: &CollarPoint) -> f64 {
        if self.levels[li].in_a(self.m, i, z) {
            return 1.0;
        }
        ftilde(self.m, self.distance_to_a(li, i, z))
    }

    /// All (j, u) with f_{m,j,u}(z) > 0.
    pub fn active(&self, z: &CollarPoint) -> Vec<Active> {
        let ramp = self.ramp();
        let mut out = Vec::new();
        for (li, l) in self.levels.iter().enumerate() {
            if self.depth_lower_bound(li, z) >= ramp {
                continue;
            }
            let (_, hi) = l.depth_a(self.m);
            let den = 1.0 - z.depth - hi;
            if den <= 0.1 {
                continue;
            }
            let gstar = (ramp.exp() * (z.depth * hi).sqrt() + z.depth + hi) / den;
            let reach = 3.0 * (l.a.sqrt() + gstar.sqrt()).powi(2);
            for i in l.centers_near(z, reach) {
                let f = self.cutoff(li, i, z);
                if f > 0.0 {
                    out.push(Active { level: li, index: i, f });
                }
            }
        }
        out
    }

    /// (ν, κ) of an index.
    pub fn class_of(&self, li: usize, i: usize) -> (u32, u32) {
        (self.levels[li].classes[i], self.levels[li].kappa)
    }

    /// f_I and F_I at z for every I = I^{(ν,κ)} that is nonzero there.
    pub fn class_sums(&self, z: &CollarPoint) -> BTreeMap<(u32, u32), (f64, f64)> {
        self.class_sums_of(&self.active(z))
    }

    pub fn class_sums_of(&self, active: &[Active]) -> BTreeMap<(u32, u32), (f64, f64)> {
        let mut out: BTreeMap<(u32, u32), (f64, f64)> = BTreeMap::new();
        for a in active {
            let e = out.entry(self.class_of(a.level, a.index)).or_default();
            e.0 += a.f;
            e.1 += a.f * a.f;
        }
        out
    }

    /// h = χ_{−r ≥ 2^{−2m}} + Σ_ω f_ω².
    pub fn h(&self, z: &CollarPoint) -> f64 {
        self.h_of(z, &self.active(z))
    }

    pub fn h_of(&self, z: &CollarPoint, active: &[Active]) -> f64 {
        let chi = if z.depth >= depth_pow(self.m, 2.0) { 1.0 } else { 0.0 };
        chi + active.iter().map(|a| a.f * a.f).sum::<f64>()
    }

    /// h at an absolute point of the ball. Points with −r ≥ 2^{−m} lie outside every B-cell;
    /// deeper points are only meaningful near ζ₀, where the level windows sit.
    pub fn h_at_point(&self, z: &[C]) -> f64 {
        let depth = 1.0 - cplx::norm_sq(z);
        if depth >= depth_pow(self.m, 1.0) {
            return 1.0;
        }
        self.h(&CollarPoint::from_point(&Point::from_slice(z)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scales_and_ramp() {
        assert_eq!(scale_d(8, 1), 0.03125);
        assert_eq!(ftilde(65, 0.0), 1.0);
        assert_eq!(ftilde(65, 1.0), 0.0);
        assert_eq!(ftilde(65, 7.0), 0.0);
        assert!((ftilde(65, 0.25) - 0.75).abs() < 1e-15);
        assert!((ftilde(78, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(depth_pow(8, 3.0), 2f64.powi(-24));
    }

    #[test]
    fn disc_cap_examples() {
        let one = CollarPoint::boundary(0.0, &[]);
        let xi = CollarPoint::boundary(0.01, &[]);
        assert!(cap_contains(&one, 0.02, &xi));
        assert!(!cap_contains(&one, 0.005, &xi));
        assert!(cap_contains(&one, 1e-300, &one));
        let dom = DomainSpec::disc();
        let z = Point::from_slice(&[C::new(1.0, 0.0)]);
        let w = Point::from_slice(&[C::from_polar(1.0, 0.01)]);
        assert!(cap_contains_point(&dom, &z, 0.02, &w));
        assert!(!cap_contains_point(&dom, &z, 0.005, &w));
    }

    #[test]
    fn collar_matches_absolute_coordinates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let v = uniform_v(&mut rng, 1, 0.4);
            let a = CollarPoint::boundary(rng.gen_range(-1.0..1.0), &v).with_depth(rng.gen_range(0.05..0.9));
            let v = uniform_v(&mut rng, 1, 0.4);
            let b = CollarPoint::boundary(rng.gen_range(-1.0..1.0), &v).with_depth(rng.gen_range(0.05..0.9));
            let (pa, pb) = (a.to_point(), b.to_point());
            let expect = crate::metric::ball_distance(&pa.0, &pb.0);
            assert!((collar_distance(&a, &b) - expect).abs() < 1e-9 * (1.0 + expect));
            let back = CollarPoint::from_point(&pa);
            assert!((back.depth - a.depth).abs() < 1e-12 && (back.theta - a.theta).abs() < 1e-12);
            let (fa, fb) = (a.foot().to_point(), b.foot().to_point());
            let direct = cplx::norm_sq(&fa.0.iter().zip(&fb.0).map(|(x, y)| x - y).collect::<CVec>());
            assert!((foot_delta(&a, &b).0 - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_scale_gives_single_center() {
        let cfg = CoverConfig {
            candidate_count: 200,
            repair_samples: 200,
            ..CoverConfig::default()
        };
        let l = build_level(1, 8, 1, 1000.0, 1000.0, &cfg).unwrap();
        assert!(l.window.full_circle);
        assert_eq!(l.centers.len(), 1);
        assert_eq!(l.classes, vec![0]);
    }

    #[test]
    fn cell_bands() {
        let cfg = CoverConfig {
            candidate_count: 2000,
            repair_samples: 2000,
            ..CoverConfig::default()
        };
        let l = build_level(1, 8, 1, 4.0, 4.0, &cfg).unwrap();
        assert_eq!(l.depth_a(8), (2f64.powi(-24), 2f64.powi(-16)));
        assert_eq!(l.depth_b(8), (2f64.powi(-32), 2f64.powi(-8)));
        for (i, z) in l.representatives.iter().enumerate() {
            assert!(l.in_a(8, i, z) && l.in_b(8, i, z));
        }
    }

    #[test]
    fn conflicting_disc_centers_get_distinct_classes() {
        let dom = DomainSpec::disc();
        let cfg = CoverConfig {
            j_max: 1,
            ..CoverConfig::default()
        };
        let cover = build_cover(&dom, &cfg).unwrap();
        let l = &cover.levels[0];
        let mut pairs = 0;
        for i in 0..l.centers.len() {
            for k in l.centers_meeting(&l.centers[i], l.b) {
                if k != i {
                    pairs += 1;
                    assert_ne!(l.classes[i], l.classes[k]);
                }
            }
        }
        assert!(pairs > 0);
    }

    #[test]
    fn cover_json_roundtrip() {
        let dom = DomainSpec::disc();
        let cfg = CoverConfig {
            j_max: 2,
            ..CoverConfig::default()
        };
        let cover = build_cover(&dom, &cfg).unwrap();
        let back = Cover::from_json(&cover.to_json().unwrap()).unwrap();
        assert_eq!(back.levels.len(), 2);
        assert_eq!(back.levels[1].centers, cover.levels[1].centers);
        assert_eq!(back.levels[1].classes, cover.levels[1].classes);
        let z = cover.levels[0].representatives[3].clone();
        assert_eq!(back.h(&z), cover.h(&z));
        assert!(back.levels[0].centers_near(&cover.levels[0].centers[0], 1e-300).contains(&0));
    }

    #[test]
    fn rejects_small_m_and_other_domains() {
        let cfg = CoverConfig { m: 52, ..CoverConfig::default() };
        assert!(build_cover(&DomainSpec::disc(), &cfg).is_err());
        let ell = DomainSpec::ellipsoid(&[1.0, 2.0]).unwrap();
        assert!(build_cover(&ell, &CoverConfig::default()).is_err());
    }
}
