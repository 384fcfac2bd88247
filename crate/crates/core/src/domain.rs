//! Bounded strongly pseudo-convex domains given by polynomial defining functions.

use crate::cplx::{self, CVec, Point, C};
use crate::error::{Error, Result};
use crate::poly::{Jet, Polynomial, Term};
use crate::roots;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Ball,
    Ellipsoid,
    Custom,
}

/// Domain Ω = {r < 0} with its pseudo-convexity data (c, θ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainJson", into = "DomainJson")]
pub struct DomainSpec {
    pub n: usize,
    poly: Polynomial,
    /// `2n` real intervals `[lo, hi]`, ordered `re z_1, im z_1, ...`
    pub bounding_box: Vec<[f64; 2]>,
    pub c: f64,
    pub theta: f64,
    pub tag: Tag,
    /// Star center used by ray samplers.
    pub center: Point,
    quadric: Option<Vec<f64>>,
}

type MonomialJson = ((Vec<u32>, Vec<u32>), (f64, f64));

#[derive(Clone, Debug, Serialize, Deserialize)]
struct DomainJson {
    n: usize,
    monomials: Vec<MonomialJson>,
    bounding_box: Vec<[f64; 2]>,
    theta: f64,
    c: f64,
    tag: Tag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    center: Option<Point>,
}

impl TryFrom<DomainJson> for DomainSpec {
    type Error = Error;
    fn try_from(j: DomainJson) -> Result<Self> {
        let terms = j
            .monomials
            .into_iter()
            .map(|((a, b), (re, im))| Term {
                alpha: a,
                beta: b,
                coeff: C::new(re, im),
            })
            .collect();
        let poly = Polynomial::new(j.n, terms)?;
        let center = j.center.unwrap_or_else(|| Point::zeros(j.n));
        DomainSpec::custom(poly, j.bounding_box, j.c, j.theta, j.tag, center)
    }
}

impl From<DomainSpec> for DomainJson {
    fn from(d: DomainSpec) -> Self {
        let zero = Point::zeros(d.n);
        DomainJson {
            n: d.n,
            monomials: d
                .poly
                .terms()
                .iter()
                .map(|t| ((t.alpha.clone(), t.beta.clone()), (t.coeff.re, t.coeff.im)))
                .collect(),
            bounding_box: d.bounding_box,
            theta: d.theta,
            c: d.c,
            tag: d.tag,
            center: if d.center == zero { None } else { Some(d.center) },
        }
    }
}

/// Output of [`DomainSpec::eval_geometry`].
#[derive(Clone, Debug)]
pub struct Geometry {
    pub r: f64,
    pub dbar_r: CVec,
    /// Entry in row j, column i is `∂_i∂̄_j r`.
    pub hessian: DMatrix<C>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub c_min: f64,
    pub grad_min: f64,
    pub theta_ok: bool,
    pub mesh_points: usize,
    pub witness: Option<Point>,
    pub witness_reason: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Projection {
    pub point: Point,
    /// `|z − p(z)|`
    pub distance: f64,
    /// `|z − p(z)| / |r(z)|`
    pub ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    Interior,
    /// `t1 ≤ −r ≤ t2`
    Shell(f64, f64),
    Boundary,
    /// `−r = ρ`
    Surface(f64),
}

impl DomainSpec {
    pub fn custom(
        poly: Polynomial,
        bounding_box: Vec<[f64; 2]>,
        c: f64,
        theta: f64,
        tag: Tag,
        center: Point,
    ) -> Result<Self> {
        let n = poly.n();
        if n == 0 {
            return Err(Error::InvalidDomain("n must be positive".into()));
        }
        if bounding_box.len() != 2 * n || bounding_box.iter().any(|b| !(b[0] < b[1])) {
            return Err(Error::InvalidDomain("bounding box must have 2n proper intervals".into()));
        }
        if !(theta > 0.0) || !(c > 0.0) {
            return Err(Error::InvalidDomain("theta and c must be positive".into()));
        }
        if center.n() != n {
            return Err(Error::InvalidDomain("center dimension mismatch".into()));
        }
        let quadric = poly.as_centered_quadric();
        let d = DomainSpec {
            n,
            poly,
            bounding_box,
            c,
            theta,
            tag,
            center,
            quadric,
        };
        if !(d.r(&d.center.0) < 0.0) {
            return Err(Error::InvalidDomain("center is not inside {r < 0}".into()));
        }
        Ok(d)
    }

    /// Unit ball of C^n, r = |z|^2 − 1.
    pub fn ball(n: usize) -> Self {
        Self::custom(
            Polynomial::diagonal_quadric(&vec![1.0; n], -1.0),
            vec![[-1.0, 1.0]; 2 * n],
            1.0,
            1.0,
            Tag::Ball,
            Point::zeros(n),
        )
        .expect("ball")
    }

    pub fn disc() -> Self {
        Self::ball(1)
    }

    /// r = Σ w_k |z_k|^2 − 1. c is the smallest weight.
    pub fn ellipsoid(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidDomain("ellipsoid weights must be positive".into()));
        }
        let n = weights.len();
        let bbox = weights
            .iter()
            .flat_map(|w| {
                let s = 1.0 / w.sqrt();
                [[-s, s], [-s, s]]
            })
            .collect();
        let c = weights.iter().cloned().fold(f64::INFINITY, f64::min);
        Self::custom(
            Polynomial::diagonal_quadric(weights, -1.0),
            bbox,
            c,
            1.0,
            Tag::Ellipsoid,
            Point::zeros(n),
        )
    }

    pub fn poly(&self) -> &Polynomial {
        &self.poly
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    /// True for the unit ball, where closed forms are available.
    pub fn is_unit_ball(&self) -> bool {
        self.tag == Tag::Ball
            && self.center == Point::zeros(self.n)
            && self
                .quadric
                .as_ref()
                .map(|w| w.iter().all(|&x| x == 1.0))
                .unwrap_or(false)
    }

    /// Weights when r = Σ w_k|z_k|^2 − 1 (centered at the origin).
    pub fn quadric_weights(&self) -> Option<&[f64]> {
        if self.center == Point::zeros(self.n) {
            self.quadric.as_deref()
        } else {
            None
        }
    }

    #[inline]
    pub fn r(&self, z: &[C]) -> f64 {
        self.poly.value(z)
    }

    #[inline]
    pub fn r_grad(&self, z: &[C]) -> (f64, CVec) {
        self.poly.value_grad(z)
    }

    #[inline]
    pub fn jet(&self, z: &[C]) -> Jet {
        self.poly.jet(z)
    }

    pub fn contains(&self, z: &Point) -> bool {
        self.r(&z.0) < 0.0
    }

    pub fn bbox_diameter(&self) -> f64 {
        self.bounding_box
            .iter()
            .map(|b| (b[1] - b[0]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn boundary_tol(&self) -> f64 {
        1e-10 * self.bbox_diameter()
    }

    pub fn in_bbox(&self, z: &Point) -> bool {
        (0..2 * self.n).all(|k| {
            let x = z.get_real(k);
            x >= self.bounding_box[k][0] && x <= self.bounding_box[k][1]
        })
    }

    pub fn eval_geometry(&self, z: &Point) -> Geometry {
        let jet = self.jet(&z.0);
        let n = self.n;
        let hessian = DMatrix::from_fn(n, n, |row, col| jet.levi[col * n + row]);
        Geometry {
            r: jet.r,
            dbar_r: jet.dbar(),
            hessian,
        }
    }

    /// `u_z = ∂̄r(z)/|∂̄r(z)|`
    pub fn normal_direction(&self, z: &Point) -> Result<CVec> {
        let (r, g) = self.r_grad(&z.0);
        if !(r < 0.0 && -r < self.theta) {
            return Err(Error::InvalidArgument(format!(
                "normal_direction needs 0 < -r < theta, got r = {r:e}"
            )));
        }
        self.unit_normal_unchecked(&g)
    }

    fn unit_normal_unchecked(&self, dr: &[C]) -> Result<CVec> {
        let nn = cplx::norm(dr);
        if nn < 1e-12 {
            return Err(Error::DegenerateGradient { norm: nn });
        }
        Ok(dr.iter().map(|x| x.conj() / nn).collect())
    }

    /// Outward unit normal direction `∂̄r/|∂̄r|` at any point with nonzero gradient.
    pub fn outward(&self, z: &[C]) -> Result<CVec> {
        let (_, g) = self.r_grad(z);
        self.unit_normal_unchecked(&g)
    }

    /// p(z): first root of t ↦ r(z + t u_z), t ≥ 0 (safeguarded Newton).
    /// Requires `−r(z) < 2^{-shell_j}`.
    pub fn boundary_project(&self, z: &Point, shell_j: u32) -> Result<Projection> {
        let (r0, g0) = self.r_grad(&z.0);
        if r0.abs() <= self.boundary_tol() {
            return Ok(Projection {
                point: z.clone(),
                distance: 0.0,
                ratio: 0.0,
            });
        }
        if !(r0 < 0.0) || -r0 >= 2f64.powi(-(shell_j as i32)) {
            return Err(Error::InvalidArgument(format!(
                "boundary_project needs 0 < -r < 2^-{shell_j}, got r = {r0:e}"
            )));
        }
        let u = self.unit_normal_unchecked(&g0)?;
        let f = |t: f64| {
            let x = z.offset(t, &u);
            let (v, g) = self.r_grad(&x.0);
            let d = 2.0 * g.iter().zip(u.iter()).map(|(a, b)| a * b).sum::<C>().re;
            (v, d)
        };
        // bracket: expand from the first-order guess
        let slope0 = f(0.0).1;
        let mut hi = (-r0 / slope0.max(1e-300)).max(1e-300);
        let mut lo = 0.0;
        let mut it = 0;
        while f(hi).0 < 0.0 {
            lo = hi;
            hi *= 2.0;
            it += 1;
            if it > 200 {
                return Err(Error::NoConvergence { iters: it });
            }
        }
        // refine the bracket to the first sign change
        let scan = 16;
        let mut prev = lo;
        for k in 1..=scan {
            let x = lo + (hi - lo) * k as f64 / scan as f64;
            if f(x).0 >= 0.0 {
                hi = x;
                lo = prev;
                break;
            }
            prev = x;
        }
        let t = roots::newton_bracketed(f, lo, hi, 1e-16, 200)?;
        let point = z.offset(t, &u);
        let distance = z.dist(&point);
        Ok(Projection {
            ratio: distance / r0.abs(),
            point,
            distance,
        })
    }

    /// Distance from the center to the bounding-box exit along unit direction ω.
    pub fn bbox_exit(&self, omega: &[C]) -> f64 {
        let mut s = f64::INFINITY;
        for k in 0..2 * self.n {
            let o = if k % 2 == 0 { omega[k / 2].re } else { omega[k / 2].im };
            let c0 = self.center.get_real(k);
            let [lo, hi] = self.bounding_box[k];
            if o > 0.0 {
                s = s.min((hi - c0) / o);
            } else if o < 0.0 {
                s = s.min((lo - c0) / o);
            }
        }
        s
    }

    /// First s > 0 with −r(center + s ω) = ρ, for a unit direction ω.
    pub fn ray_root(&self, omega: &[C], rho: f64) -> Option<f64> {
        if let Some(w) = self.quadric_weights() {
            let q: f64 = w.iter().zip(omega).map(|(a, o)| a * o.norm_sqr()).sum();
            return if rho < 1.0 { Some(((1.0 - rho) / q).sqrt()) } else { None };
        }
        let c0 = &self.center;
        let f = |s: f64| {
            let x = c0.offset(s, omega);
            let (v, g) = self.r_grad(&x.0);
            let d = 2.0 * g.iter().zip(omega.iter()).map(|(a, b)| a * b).sum::<C>().re;
            (v + rho, d)
        };
        if f(0.0).0 >= 0.0 {
            return None;
        }
        roots::first_root(f, self.bbox_exit(omega), 64, 1e-15)
    }

    /// The point `center + s ω` with −r = depth on the ray of unit direction ω.
    pub fn point_at_depth(&self, omega: &[C], depth: f64) -> Option<Point> {
        let s = self.ray_root(omega, depth)?;
        Some(self.center.offset(s, omega))
    }

    /// Random point on a random ray with −r log-uniform in [lo, hi].
    pub fn random_point_log_depth<R: Rng + ?Sized>(&self, rng: &mut R, lo: f64, hi: f64) -> Point {
        loop {
            let om = cplx::unit_sphere(rng, self.n);
            let depth = (lo.ln() + (hi.ln() - lo.ln()) * rng.gen::<f64>()).exp();
            if let Some(p) = self.point_at_depth(&om, depth) {
                return p;
            }
        }
    }

    /// Cosine between the ray direction and the outward normal at `x`.
    pub fn ray_cosine(&self, x: &[C], omega: &[C]) -> f64 {
        let (_, g) = self.r_grad(x);
        let dbar: CVec = g.iter().map(|v| v.conj()).collect();
        cplx::real_dot(omega, &dbar) / cplx::norm(&dbar)
    }

    /// Checks the Levi lower bound c on {−3θ < r < 0} and the gradient condition on a random mesh.
    pub fn certify_pseudoconvexity(&self, mesh_density: usize, seed: u64) -> Result<Certificate> {
        if mesh_density == 0 {
            return Err(Error::InvalidArgument("mesh_density must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let band = 3.0 * self.theta;
        let mut c_min = f64::INFINITY;
        let mut grad_min = f64::INFINITY;
        let mut witness = None;
        let mut reason = None;
        let mut accepted = 0usize;
        let mut attempts = 0usize;
        let max_attempts = mesh_density.saturating_mul(10_000).max(100_000);
        while accepted < mesh_density {
            attempts += 1;
            if attempts > max_attempts {
                return Err(Error::LowAcceptance {
                    rate: accepted as f64 / attempts as f64,
                });
            }
            let z = self.uniform_in_bbox(&mut rng);
            let jet = self.jet(&z.0);
            let in_hess = jet.r < 0.0 && jet.r > -band;
            let in_grad = jet.r.abs() <= band;
            if !in_hess && !in_grad {
                continue;
            }
            accepted += 1;
            if in_grad {
                let g = 2.0 * cplx::norm(&jet.dr);
                if g < grad_min {
                    grad_min = g;
                    if !(g > 0.0) && witness.is_none() {
                        witness = Some(z.clone());
                        reason = Some(format!("gradient vanishes: |grad r| = {g:e}"));
                    }
                }
            }
            if in_hess {
                let geo = self.eval_geometry(&z);
                let eig = geo.hessian.symmetric_eigenvalues();
                let e = eig.iter().cloned().fold(f64::INFINITY, f64::min);
                if e < c_min {
                    c_min = e;
                    if e < self.c / 2.0 {
                        witness = Some(z.clone());
                        reason = Some(format!("Levi eigenvalue {e} < c/2 = {}", self.c / 2.0));
                    }
                }
            }
        }
        let theta_ok = c_min >= self.c / 2.0 && grad_min > 0.0;
        Ok(Certificate {
            c_min,
            grad_min,
            theta_ok,
            mesh_points: accepted,
            witness: if theta_ok { None } else { witness },
            witness_reason: if theta_ok { None } else { reason },
        })
    }

    /// Largest θ = 2^{-k}, k = 0..=k_max, passing [`certify_pseudoconvexity`](Self::certify_pseudoconvexity).
    pub fn choose_theta(&self, k_max: u32, mesh_density: usize, seed: u64) -> Result<f64> {
        for k in 0..=k_max {
            let t = 2f64.powi(-(k as i32));
            let cand = self.clone().with_theta(t);
            if cand.certify_pseudoconvexity(mesh_density, seed)?.theta_ok {
                return Ok(t);
            }
        }
        Err(Error::CheckFailed(format!(
            "no theta in the dyadic grid down to 2^-{k_max} passes certification"
        )))
    }

    pub fn uniform_in_bbox<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let xs: Vec<f64> = self
            .bounding_box
            .iter()
            .map(|b| b[0] + (b[1] - b[0]) * rng.gen::<f64>())
            .collect();
        Point::from_reals(&xs)
    }

    /// Samples for the requested region, deterministic in `seed`. Interior samples are uniform
    /// (rejection from the bounding box); shell and surface samples are drawn along uniformly
    /// distributed rays from the star center.
    pub fn sample_region(&self, region: Region, count: usize, seed: u64) -> Result<Vec<Point>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        let check = |attempts: usize, got: usize| -> Result<()> {
            if attempts >= 10_000 && (got as f64) < 1e-4 * attempts as f64 {
                Err(Error::LowAcceptance {
                    rate: got as f64 / attempts as f64,
                })
            } else {
                Ok(())
            }
        };
        match region {
            Region::Interior => {
                while out.len() < count {
                    attempts += 1;
                    let z = self.uniform_in_bbox(&mut rng);
                    if self.r(&z.0) < 0.0 {
                        out.push(z);
                    }
                    check(attempts, out.len())?;
                }
            }
            Region::Shell(t1, t2) => {
                if !(t1 <= t2) || t1 < 0.0 {
                    return Err(Error::InvalidArgument("shell needs 0 ≤ t1 ≤ t2".into()));
                }
                while out.len() < count {
                    attempts += 1;
                    check(attempts, out.len())?;
                    let om = cplx::unit_sphere(&mut rng, self.n);
                    let (Some(s_in), Some(s_out)) = (self.ray_root(&om, t2), self.ray_root(&om, t1)) else {
                        continue;
                    };
                    // volume-proportional radius between the two level sets
                    let d2 = 2 * self.n;
                    let a = s_in.powi(d2 as i32);
                    let b = s_out.powi(d2 as i32);
                    let u: f64 = rng.gen();
                    let s = (a + u * (b - a)).powf(1.0 / d2 as f64);
                    let z = self.center.offset(s, &om);
                    let nr = -self.r(&z.0);
                    if nr >= t1 && nr <= t2 {
                        out.push(z);
                    }
                }
            }
            Region::Boundary | Region::Surface(_) => {
                let rho = if let Region::Surface(r) = region { r } else { 0.0 };
                let tol = self.boundary_tol();
                while out.len() < count {
                    attempts += 1;
                    check(attempts, out.len())?;
                    let om = cplx::unit_sphere(&mut rng, self.n);
                    let Some(s) = self.ray_root(&om, rho) else { continue };
                    let z = self.center.offset(s, &om);
                    if (-self.r(&z.0) - rho).abs() <= tol {
                        out.push(z);
                    }
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cplx::c;

    #[test]
    fn ball_geometry_at_origin() {
        let d = DomainSpec::ball(2);
        let g = d.eval_geometry(&Point::zeros(2));
        assert_eq!(g.r, -1.0);
        assert!(g.dbar_r.iter().all(|x| x.norm() == 0.0));
        assert_eq!(g.hessian, DMatrix::identity(2, 2));
    }

    #[test]
    fn disc_geometry_at_half() {
        let d = DomainSpec::disc();
        let g = d.eval_geometry(&Point::real(&[0.5]));
        assert_eq!(g.r, -0.75);
        assert_eq!(g.dbar_r[0], c(0.5, 0.0));
        assert_eq!(g.hessian[(0, 0)], c(1.0, 0.0));
    }

    #[test]
    fn ellipsoid_hessian() {
        let d = DomainSpec::ellipsoid(&[1.0, 2.0]).unwrap();
        let g = d.eval_geometry(&Point::zeros(2));
        assert_eq!(g.hessian[(0, 0)], c(1.0, 0.0));
        assert_eq!(g.hessian[(1, 1)], c(2.0, 0.0));
        assert_eq!(g.hessian[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn hessian_convention_row_j_col_i() {
        // r = |z1|^2 + |z2|^2 + 0.1 i z1 zbar2 − 0.1 i zbar1 z2 − 1: ∂_1∂̄_2 r = 0.1i
        let t = |a: [u32; 2], b: [u32; 2], co: C| Term {
            alpha: a.to_vec(),
            beta: b.to_vec(),
            coeff: co,
        };
        let p = Polynomial::new(
            2,
            vec![
                t([1, 0], [1, 0], c(1.0, 0.0)),
                t([0, 1], [0, 1], c(1.0, 0.0)),
                t([1, 0], [0, 1], c(0.0, 0.1)),
                t([0, 1], [1, 0], c(0.0, -0.1)),
                t([0, 0], [0, 0], c(-1.0, 0.0)),
            ],
        )
        .unwrap();
        let d = DomainSpec::custom(p, vec![[-2.0, 2.0]; 4], 0.5, 1.0, Tag::Custom, Point::zeros(2)).unwrap();
        let g = d.eval_geometry(&Point::zeros(2));
        assert_eq!(g.hessian[(1, 0)], c(0.0, 0.1));
        assert_eq!(g.hessian[(0, 1)], c(0.0, -0.1));
    }

    #[test]
    fn certify_ball_and_ellipsoid() {
        let cert = DomainSpec::ball(2).certify_pseudoconvexity(500, 1).unwrap();
        assert!(cert.theta_ok);
        assert!((cert.c_min - 1.0).abs() < 1e-12);
        let e = DomainSpec::ellipsoid(&[1.0, 2.0]).unwrap().with_theta(0.125);
        let cert = e.certify_pseudoconvexity(500, 2).unwrap();
        assert!(cert.theta_ok);
        assert!((cert.c_min - 1.0).abs() < 1e-12);
    }

    #[test]
    fn certify_rejects_non_pseudoconvex() {
        let t = |a: [u32; 2], b: [u32; 2], co: f64| Term {
            alpha: a.to_vec(),
            beta: b.to_vec(),
            coeff: c(co, 0.0),
        };
        let p = Polynomial::new(
            2,
            vec![t([1, 0], [1, 0], 1.0), t([0, 1], [0, 1], -1.0), t([0, 0], [0, 0], -1.0)],
        )
        .unwrap();
        let d = DomainSpec::custom(p, vec![[-1.5, 1.5]; 4], 1.0, 0.25, Tag::Custom, Point::zeros(2)).unwrap();
        let cert = d.certify_pseudoconvexity(200, 3).unwrap();
        assert!(!cert.theta_ok);
        assert!((cert.c_min + 1.0).abs() < 1e-12);
        let w = cert.witness.expect("witness");
        assert!(d.r(&w.0) > -3.0 * d.theta);
    }

    #[test]
    fn projection_examples() {
        let d = DomainSpec::disc();
        let p = d.boundary_project(&Point::real(&[0.9]), 1).unwrap();
        assert!((p.point.0[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((p.distance - 0.1).abs() < 1e-12);
        let b = DomainSpec::ball(2);
        let p = b.boundary_project(&Point::real(&[0.9, 0.0]), 1).unwrap();
        assert!(p.point.dist(&Point::real(&[1.0, 0.0])) < 1e-12);
        let on = Point::real(&[1.0, 0.0]);
        assert_eq!(b.boundary_project(&on, 1).unwrap().point, on);
    }

    #[test]
    fn normal_examples() {
        let d = DomainSpec::disc();
        let u = d.normal_direction(&Point::real(&[0.5])).unwrap();
        assert!((u[0] - c(1.0, 0.0)).norm() < 1e-15);
        let b = DomainSpec::ball(2);
        let u = b.normal_direction(&Point::real(&[0.0, 0.5])).unwrap();
        assert!((u[1] - c(1.0, 0.0)).norm() < 1e-15 && u[0].norm() == 0.0);
    }

    #[test]
    fn sampler_regions() {
        let d = DomainSpec::disc();
        let pts = d.sample_region(Region::Interior, 1000, 7).unwrap();
        assert!(pts.iter().all(|p| p.norm() < 1.0));
        let pts = d.sample_region(Region::Shell(0.25, 0.5), 500, 7).unwrap();
        assert!(pts.iter().all(|p| {
            let s = p.norm().powi(2);
            (0.5..=0.75).contains(&s)
        }));
        let b = DomainSpec::ball(2);
        let pts = b.sample_region(Region::Boundary, 300, 8).unwrap();
        assert!(pts.iter().all(|p| (p.norm().powi(2) - 1.0).abs() <= 1e-10));
        let again = b.sample_region(Region::Boundary, 300, 8).unwrap();
        assert_eq!(pts, again);
    }

    #[test]
    fn json_roundtrip() {
        let d = DomainSpec::ellipsoid(&[1.0, 2.0]).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        let e: DomainSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(d, e);
        assert!(s.contains("\"tag\":\"ellipsoid\""));
    }
}
