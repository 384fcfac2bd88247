//! Galerkin truncation of the Bergman space of the unit ball: Toeplitz and Hankel
//! matrices, Berezin transforms, cutoffs, discrete kernel sums and compactness tails.

use crate::cplx::{self, factorial, Point, C};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::kernel::{monomial, multi_indices};
use crate::metric::{ball_automorphism, ball_distance, Budget, DistanceOracle};
use crate::quadrature::{BallQuadrature, BallRuleSpec};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

/// Symbol function on the domain.
pub type Symbol<'a> = &'a (dyn Fn(&[C]) -> C + Sync);

/// Orthonormal monomials e_α = z^α/‖z^α‖, |α| ≤ N, on the unit ball of C^n.
#[derive(Clone, Debug)]
pub struct GalerkinSpace {
    pub n: usize,
    pub degree: u32,
    pub alphas: Vec<Vec<u32>>,
    pub norms: Vec<f64>,
    pub quad: BallQuadrature,
    /// `basis[(q, α)] = e_α(p_q)`
    basis: DMatrix<C>,
}

/// ‖z^α‖² = π^n α!/(n + |α|)!
pub fn monomial_norm_sq(alpha: &[u32]) -> f64 {
    let n = alpha.len();
    let total: u32 = alpha.iter().sum();
    let af: f64 = alpha.iter().map(|&a| factorial(a as usize)).product();
    PI.powi(n as i32) * af / factorial(n + total as usize)
}

/// Default rule: exact to degree 2N + 2(n+1) plus `margin` for non-polynomial symbols.
pub fn galerkin_rule(n: usize, degree: u32, margin: usize) -> BallRuleSpec {
    BallRuleSpec::exact_for(n, 2 * degree as usize + 2 * (n + 1) + margin)
}

pub fn build_galerkin(n: usize, degree: u32, rule: BallRuleSpec) -> Result<GalerkinSpace> {
    if n == 0 {
        return Err(Error::InvalidArgument("n = 0".into()));
    }
    let alphas = multi_indices(n, degree);
    let norms: Vec<f64> = alphas.iter().map(|a| monomial_norm_sq(a).sqrt()).collect();
    let quad = BallQuadrature::new(n, rule);
    let q = quad.len();
    let d = alphas.len();
    let mut basis = DMatrix::zeros(q, d);
    for (i, p) in quad.points.iter().enumerate() {
        for (k, a) in alphas.iter().enumerate() {
            basis[(i, k)] = monomial(p.as_slice(), a) / norms[k];
        }
    }
    let space = GalerkinSpace {
        n,
        degree,
        alphas,
        norms,
        quad,
        basis,
    };
    let gram = space.gram_defect();
    if gram > 1e-8 {
        return Err(Error::Resolution(format!(
            "Gram matrix off identity by {gram:e}: rule too coarse for degree {}",
            2 * degree
        )));
    }
    Ok(space)
}

impl GalerkinSpace {
    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    /// Dimension of the sub-basis with |α| ≤ m.
    pub fn sub_dim(&self, m: u32) -> usize {
        self.alphas.iter().filter(|a| a.iter().sum::<u32>() <= m).count()
    }

    /// max |G − I| entrywise.
    pub fn gram_defect(&self) -> f64 {
        let t = self.weighted(&|_| C::new(1.0, 0.0));
        let mut worst = 0.0f64;
        for i in 0..t.nrows() {
            for j in 0..t.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((t[(i, j)] - target).norm());
            }
        }
        worst
    }

    fn weighted(&self, f: Symbol) -> DMatrix<C> {
        let q = self.quad.len();
        let vals: Vec<C> = self
            .quad
            .points
            .par_iter()
            .zip(self.quad.weights.par_iter())
            .map(|(p, w)| f(p.as_slice()) * *w)
            .collect();
        let mut scaled = self.basis.clone();
        for i in 0..q {
            let v = vals[i];
            for k in 0..scaled.ncols() {
                scaled[(i, k)] *= v;
            }
        }
        self.basis.adjoint() * scaled
    }

    /// e_α(z) for every α.
    pub fn basis_at(&self, z: &[C]) -> DVector<C> {
        DVector::from_iterator(
            self.dim(),
            self.alphas
                .iter()
                .zip(&self.norms)
                .map(|(a, nrm)| monomial(z, a) / nrm),
        )
    }

    /// K(z, z) of the ball.
    pub fn kernel_diag(&self, z: &[C]) -> f64 {
        factorial(self.n) / PI.powi(self.n as i32) / (1.0 - cplx::norm_sq(z)).powi(self.n as i32 + 1)
    }

    /// Coordinates of the truncated normalized kernel: conj(e_α(z))/‖K_z‖.
    pub fn kernel_vector(&self, z: &[C]) -> DVector<C> {
        let s = self.kernel_diag(z).sqrt();
        self.basis_at(z).map(|x| x.conj() / s)
    }

    /// ‖k_z^{(N)}‖² = Σ|e_α(z)|²/K(z,z).
    pub fn truncation_ratio(&self, z: &[C]) -> f64 {
        self.basis_at(z).norm_squared() / self.kernel_diag(z)
    }

    /// Largest |z| with truncation ratio ≥ `level`.
    pub fn resolution_radius(&self, level: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0 - 1e-12);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let z = Point::axis(self.n, 0, C::new(mid, 0.0));
            if self.truncation_ratio(z.as_slice()) >= level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Dense operator on the Galerkin basis.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    pub label: String,
    pub n: usize,
    pub degree: u32,
    pub m: DMatrix<C>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub n: usize,
    #[serde(rename = "N")]
    pub degree: u32,
    pub label: String,
    pub dim: usize,
}

pub fn op_norm(m: &DMatrix<C>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub fn singular_values(m: &DMatrix<C>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().cloned().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// x ⊗ y: h ↦ ⟨h, y⟩ x.
pub fn rank_one(x: &DVector<C>, y: &DVector<C>) -> DMatrix<C> {
    x * y.adjoint()
}

impl OperatorMatrix {
    pub fn new(space: &GalerkinSpace, label: impl Into<String>, m: DMatrix<C>) -> Self {
        OperatorMatrix {
            label: label.into(),
            n: space.n,
            degree: space.degree,
            m,
        }
    }

    pub fn identity(space: &GalerkinSpace) -> Self {
        let d = space.dim();
        Self::new(space, "identity", DMatrix::identity(d, d))
    }

    pub fn norm(&self) -> f64 {
        op_norm(&self.m)
    }

    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            n: self.n,
            degree: self.degree,
            label: self.label.clone(),
            dim: self.m.nrows(),
        }
    }

    /// Row-major little-endian (re, im) f64 pairs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.m.len() * 16);
        for i in 0..self.m.nrows() {
            for j in 0..self.m.ncols() {
                let v = self.m[(i, j)];
                out.extend_from_slice(&v.re.to_le_bytes());
                out.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(side: &Sidecar, bytes: &[u8]) -> Result<Self> {
        let d = side.dim;
        if bytes.len() != d * d * 16 {
            return Err(Error::Io(format!("expected {} bytes, found {}", d * d * 16, bytes.len())));
        }
        let f = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("8 bytes"));
        let m = DMatrix::from_fn(d, d, |i, j| {
            let k = 2 * (i * d + j);
            C::new(f(k), f(k + 1))
        });
        Ok(OperatorMatrix {
            label: side.label.clone(),
            n: side.n,
            degree: side.degree,
            m,
        })
    }

    /// Writes `<stem>.bin` and `<stem>.json`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut f = std::fs::File::create(dir.join(format!("{stem}.bin")))?;
        f.write_all(&self.to_bytes())?;
        let side = serde_json::to_string_pretty(&self.sidecar())?;
        std::fs::write(dir.join(format!("{stem}.json")), side)?;
        Ok(())
    }

    pub fn read(dir: &Path, stem: &str) -> Result<Self> {
        let side: Sidecar = serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
        let bytes = std::fs::read(dir.join(format!("{stem}.bin")))?;
        Self::from_bytes(&side, &bytes)
    }
}

/// T_f with entries ⟨f e_β, e_α⟩.
pub fn toeplitz_matrix(space: &GalerkinSpace, f: Symbol) -> OperatorMatrix {
    OperatorMatrix::new(space, "toeplitz", space.weighted(f))
}

/// Enlarged L² truncation: orthonormal basis of span{z^α z̄^β : |α| + |β| ≤ M} whose
/// leading columns span the analytic monomials.
#[derive(Clone, Debug)]
pub struct EnlargedSpace {
    /// values of the orthonormal basis at the quadrature nodes, scaled by √w
    q: DMatrix<C>,
    analytic: usize,
}

pub const ENLARGED_MAX_DIM: usize = 1500;

pub fn enlarged_space(space: &GalerkinSpace, extra: u32) -> Result<EnlargedSpace> {
    let n = space.n;
    let m = space.degree + extra;
    let analytic = multi_indices(n, m);
    let mut mixed = Vec::new();
    for a in multi_indices(n, m) {
        let da: u32 = a.iter().sum();
        for b in multi_indices(n, m - da) {
            if b.iter().any(|&x| x > 0) {
                mixed.push((a.clone(), b));
            }
        }
    }
    let dim = analytic.len() + mixed.len();
    if dim > ENLARGED_MAX_DIM {
        return Err(Error::Resolution(format!("enlarged space dimension {dim} > {ENLARGED_MAX_DIM}")));
    }
    let quad = &space.quad;
    if quad.len() < 2 * dim {
        return Err(Error::Resolution(format!(
            "{} quadrature nodes for an enlarged space of dimension {dim}",
            quad.len()
        )));
    }
    let mut a = DMatrix::zeros(quad.len(), dim);
    for (i, (p, w)) in quad.points.iter().zip(&quad.weights).enumerate() {
        let sw = w.sqrt();
        let z = p.as_slice();
        for (k, al) in analytic.iter().enumerate() {
            a[(i, k)] = monomial(z, al) * sw;
        }
        for (k, (al, be)) in mixed.iter().enumerate() {
            let zb: Vec<C> = z.iter().map(|x| x.conj()).collect();
            a[(i, analytic.len() + k)] = monomial(z, al) * monomial(&zb, be) * sw;
        }
    }
    let q = a.qr().q();
    Ok(EnlargedSpace {
        q,
        analytic: analytic.len(),
    })
}

/// Block of H_f = (1 − P) M_f restricted to the Galerkin space, in the enlarged basis.
pub fn hankel_block(space: &GalerkinSpace, big: &EnlargedSpace, f: Symbol) -> DMatrix<C> {
    let quad = &space.quad;
    let mut fe = space.basis.clone();
    for (i, (p, w)) in quad.points.iter().zip(&quad.weights).enumerate() {
        let v = f(p.as_slice()) * w.sqrt();
        for k in 0..fe.ncols() {
            fe[(i, k)] *= v;
        }
    }
    let coeffs = big.q.adjoint() * fe;
    coeffs.rows(big.analytic, coeffs.nrows() - big.analytic).into_owned()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HankelNorms {
    pub hankel_norm: f64,
    pub commutator_norm: f64,
}

pub fn hankel_and_commutator(space: &GalerkinSpace, big: &EnlargedSpace, f: Symbol) -> HankelNorms {
    let h = op_norm(&hankel_block(space, big, f));
    let g = |z: &[C]| f(z).conj();
    let hc = op_norm(&hankel_block(space, big, &g));
    HankelNorms {
        hankel_norm: h,
        commutator_norm: h.max(hc),
    }
}

/// ⟨A k_z^{(N)}, k_z^{(N)}⟩ / ‖k_z^{(N)}‖².
pub fn berezin(space: &GalerkinSpace, a: &OperatorMatrix, z: &[C]) -> Result<C> {
    if cplx::norm_sq(z) >= 1.0 {
        return Err(Error::NotInterior { r: cplx::norm_sq(z) - 1.0 });
    }
    let ratio = space.truncation_ratio(z);
    if ratio < 1e-2 {
        return Err(Error::Resolution(format!("truncated kernel keeps {ratio:.2e} of ‖K_z‖²")));
    }
    let v = space.basis_at(z).map(|x| x.conj());
    let num = (v.adjoint() * &a.m * &v)[(0, 0)];
    Ok(num / v.norm_squared())
}

/// Sampled oscillation per depth shell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationProfile {
    /// (upper −r of the shell, sup |f(z) − f(w)| over pairs with d ≤ 1)
    pub levels: Vec<(f64, f64)>,
    pub diff: f64,
}

impl OscillationProfile {
    /// Shell sups decay (up to `slack`) and the last one is below `threshold`.
    pub fn vanishing(&self, threshold: f64, slack: f64) -> bool {
        let decays = self.levels.windows(2).all(|w| w[1].1 <= w[0].1 * slack + 1e-12);
        decays && self.levels.last().map(|l| l.1 < threshold).unwrap_or(true)
    }
}

/// Pair (z, w) with z in the depth shell and d_upper(z, w) ≤ 1, plus the distance.
fn unit_pair<R: Rng + ?Sized>(
    dom: &DomainSpec,
    rng: &mut R,
    lo: f64,
    hi: f64,
    oracle: &DistanceOracle,
) -> Result<Option<(Point, Point, f64)>> {
    let z = dom.random_point_log_depth(rng, lo, hi);
    if dom.is_unit_ball() {
        let t = rng.gen::<f64>();
        let zeta = cplx::scale(&cplx::unit_sphere(rng, dom.n), C::new(t.tanh(), 0.0));
        let w = Point(ball_automorphism(z.as_slice(), &zeta));
        let d = ball_distance(z.as_slice(), w.as_slice());
        return Ok(Some((z, w, d)));
    }
    let depth = -dom.r(z.as_slice());
    let step = depth.sqrt() * rng.gen::<f64>();
    let w = z.offset(step, &cplx::unit_sphere(rng, dom.n));
    if dom.r(w.as_slice()) >= 0.0 {
        return Ok(None);
    }
    let d = oracle.eval(dom, &z, &w)?;
    Ok((d <= 1.0).then_some((z, w, d)))
}

/// Dyadic shells −r ∈ [2^{−k−1}, 2^{−k}), k < `shells`.
pub fn oscillation_profile(
    dom: &DomainSpec,
    f: &(dyn Fn(&[C]) -> f64 + Sync),
    shells: usize,
    pairs_per_shell: usize,
    seed: u64,
) -> Result<OscillationProfile> {
    let oracle = DistanceOracle::for_domain(dom, Budget::fast());
    let mut levels = Vec::with_capacity(shells);
    for k in 0..shells {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64 + 1);
        let hi = 0.5f64.powi(k as i32);
        let lo = hi / 2.0;
        let mut sup = 0.0f64;
        let mut got = 0;
        let mut tries = 0;
        while got < pairs_per_shell && tries < 20 * pairs_per_shell {
            tries += 1;
            if let Some((z, w, _)) = unit_pair(dom, &mut rng, lo, hi, &oracle)? {
                got += 1;
                sup = sup.max((f(z.as_slice()) - f(w.as_slice())).abs());
            }
        }
        levels.push((hi, sup));
    }
    let diff = levels.iter().map(|l| l.1).fold(0.0, f64::max);
    Ok(OscillationProfile { levels, diff })
}

/// Profile from explicit pairs, binned into the same dyadic shells by the depth of z.
pub fn oscillation_on_pairs(
    dom: &DomainSpec,
    f: &(dyn Fn(&[C]) -> f64 + Sync),
    pairs: &[(Point, Point)],
    shells: usize,
) -> OscillationProfile {
    let mut levels: Vec<(f64, f64)> = (0..shells).map(|k| (0.5f64.powi(k as i32), 0.0)).collect();
    for (z, w) in pairs {
        let depth = -dom.r(z.as_slice());
        let k = (-depth.log2()).floor().max(0.0) as usize;
        if k < shells {
            levels[k].1 = levels[k].1.max((f(z.as_slice()) - f(w.as_slice())).abs());
        }
    }
    let diff = levels.iter().map(|l| l.1).fold(0.0, f64::max);
    OscillationProfile { levels, diff }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutoffKind {
    Lambda,
    Phi,
}

/// ψ_δ(d(z, Ω_t)) (lambda) or its complement (phi), with Ω_t = {−r ≥ t}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub kind: CutoffKind,
    pub t: f64,
    pub delta: f64,
}

/// Distance from z to Ω_t: exact on the ball, the depth-log surrogate elsewhere.
pub fn distance_to_core(dom: &DomainSpec, z: &[C], t: f64) -> f64 {
    let depth = -dom.r(z);
    if depth >= t {
        return 0.0;
    }
    if dom.is_unit_ball() {
        return cplx::norm(z).atanh() - (1.0 - t).sqrt().atanh();
    }
    0.5 * (t / depth).ln()
}

impl Cutoff {
    pub fn new(dom: &DomainSpec, kind: CutoffKind, t: f64, delta: f64) -> Result<Self> {
        if !(t > 0.0 && delta > 0.0) {
            return Err(Error::InvalidArgument(format!("t = {t}, delta = {delta}")));
        }
        // Ω_t is empty when no point is that deep; the center is the deepest point of a star domain
        if -dom.r(dom.center.as_slice()) < t {
            return Err(Error::InvalidArgument(format!("Ω_t empty for t = {t}")));
        }
        Ok(Cutoff { kind, t, delta })
    }

    pub fn profile(&self, x: f64) -> f64 {
        (1.0 - self.delta * x).max(0.0)
    }

    pub fn eval(&self, dom: &DomainSpec, z: &[C]) -> f64 {
        let g = self.profile(distance_to_core(dom, z, self.t));
        match self.kind {
            CutoffKind::Lambda => g,
            CutoffKind::Phi => 1.0 - g,
        }
    }

    /// Depth below which the lambda cutoff vanishes (ball only).
    pub fn vanishing_depth(&self) -> f64 {
        let x = ((1.0 - self.t).sqrt().atanh() + 1.0 / self.delta).tanh();
        1.0 - x * x
    }
}

/// Σ c · k_{φ} ⊗ k_{ψ} over (c, φ, ψ) triples.
pub fn discrete_sum_matrix(space: &GalerkinSpace, terms: &[(C, Point, Point)]) -> OperatorMatrix {
    let d = space.dim();
    let mut m = DMatrix::zeros(d, d);
    for (c, phi, psi) in terms {
        let x = space.kernel_vector(phi.as_slice());
        let y = space.kernel_vector(psi.as_slice());
        m += rank_one(&x, &y) * *c;
    }
    OperatorMatrix::new(space, "discrete_sum", m)
}

/// Σ_f T_f A T_f.
pub fn loc_assemble(space: &GalerkinSpace, a: &OperatorMatrix, cutoffs: &[Symbol]) -> OperatorMatrix {
    let d = space.dim();
    let mut m = DMatrix::zeros(d, d);
    for f in cutoffs {
        let t = toeplitz_matrix(space, *f).m;
        m += &t * &a.m * &t;
    }
    OperatorMatrix::new(space, "loc", m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitWitness {
    pub gamma: Vec<C>,
    pub subset: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub tried: usize,
}

pub const SPLIT_MAX: usize = 12;

/// Searches E ⊂ {0..ℓ} and γ_k ∈ {±1, ±i} with
/// ‖Σ_{j≠k} T_j A T_k‖ ≤ 4(‖T_{F'} A T_G‖ + ‖T_{G'} A T_F‖). The first γ is fixed to 1
/// since a common phase changes neither side.
pub fn offdiag_split_search(a: &DMatrix<C>, ts: &[DMatrix<C>]) -> Result<SplitWitness> {
    let l = ts.len();
    if l > SPLIT_MAX {
        return Err(Error::InvalidArgument(format!("{l} symbols, at most {SPLIT_MAX}")));
    }
    if l == 0 {
        return Ok(SplitWitness {
            gamma: vec![],
            subset: vec![],
            lhs: 0.0,
            rhs: 0.0,
            tried: 0,
        });
    }
    let d = a.nrows();
    let ta: Vec<DMatrix<C>> = ts.iter().map(|t| t * a).collect();
    let mut off = DMatrix::zeros(d, d);
    for j in 0..l {
        for k in 0..l {
            if j != k {
                off += &ta[j] * &ts[k];
            }
        }
    }
    let lhs = op_norm(&off);
    let units = [C::new(1.0, 0.0), C::new(0.0, 1.0), C::new(-1.0, 0.0), C::new(0.0, -1.0)];
    let mut tried = 0;
    for mask in 0u32..(1 << l) {
        let in_e = |k: usize| mask >> k & 1 == 1;
        let mut tf = DMatrix::zeros(d, d);
        let mut tg = DMatrix::zeros(d, d);
        for k in 0..l {
            if in_e(k) {
                tf += &ts[k];
            } else {
                tg += &ts[k];
            }
        }
        for code in 0..4usize.pow(l as u32 - 1) {
            tried += 1;
            let mut gamma = vec![units[0]; l];
            let mut c = code;
            for g in gamma.iter_mut().skip(1) {
                *g = units[c % 4];
                c /= 4;
            }
            let mut fa = DMatrix::zeros(d, d);
            let mut ga = DMatrix::zeros(d, d);
            for k in 0..l {
                if in_e(k) {
                    fa += &ta[k] * gamma[k];
                } else {
                    ga += &ta[k] * gamma[k];
                }
            }
            let rhs = 4.0 * (op_norm(&(&fa * &tg)) + op_norm(&(&ga * &tf)));
            if lhs <= rhs * (1.0 + 1e-12) + 1e-14 {
                return Ok(SplitWitness {
                    gamma,
                    subset: (0..l).filter(|&k| in_e(k)).collect(),
                    lhs,
                    rhs,
                    tried,
                });
            }
        }
    }
    Err(Error::CheckFailed(format!("no split witness among {tried} configurations (lhs {lhs:e})")))
}

/// Points on shells of the ball up to the truncation resolution of the space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGrid {
    /// shells ordered outward
    pub shells: Vec<Vec<Point>>,
    pub radii: Vec<f64>,
}

impl BoundaryGrid {
    /// Shells equally spaced in distance from 0 up to the radius where ‖k_z^{(N)}‖²/K(z,z) ≥ 0.99.
    pub fn for_space(space: &GalerkinSpace, shells: usize, per_shell: usize, seed: u64) -> Self {
        let rmax = space.resolution_radius(0.99);
        let dmax = rmax.atanh();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(shells);
        let mut radii = Vec::with_capacity(shells);
        for s in 1..=shells {
            let rad = (dmax * s as f64 / shells as f64).tanh();
            let pts = (0..per_shell)
                .map(|k| {
                    let om = if space.n == 1 {
                        let th = std::f64::consts::TAU * (k as f64 + 0.5) / per_shell as f64;
                        cplx::CVec::from_elem(C::from_polar(1.0, th), 1)
                    } else {
                        cplx::unit_sphere(&mut rng, space.n)
                    };
                    Point::from_slice(&cplx::scale(&om, C::new(rad, 0.0)))
                })
                .collect();
            out.push(pts);
            radii.push(rad);
        }
        BoundaryGrid { shells: out, radii }
    }

    pub fn outer(&self) -> &[Point] {
        self.shells.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompactnessReport {
    pub degree: u32,
    pub berezin_tail: f64,
    pub offdiag_tail: f64,
    pub sv_tail: f64,
    pub head: usize,
    pub outer_radius: f64,
}

/// Berezin, off-diagonal and singular-value tails of A.
pub fn compactness_report(
    space: &GalerkinSpace,
    a: &OperatorMatrix,
    grid: &BoundaryGrid,
    r_list: &[f64],
) -> Result<CompactnessReport> {
    let outer = grid.outer();
    for z in outer {
        if space.truncation_ratio(z.as_slice()) < 0.99 - 1e-9 {
            return Err(Error::Resolution("grid beyond the truncation resolution".into()));
        }
    }
    let mut btail = 0.0f64;
    for z in outer {
        btail = btail.max(berezin(space, a, z.as_slice())?.norm());
    }
    let rmax = r_list.iter().cloned().fold(0.0, f64::max);
    let all: Vec<&Point> = grid.shells.iter().flatten().collect();
    let mut otail = 0.0f64;
    for z in outer {
        let kz = space.kernel_vector(z.as_slice());
        let nz = kz.norm();
        for w in &all {
            let d = ball_distance(z.as_slice(), w.as_slice());
            if d <= 0.0 || d >= rmax {
                continue;
            }
            let kw = space.kernel_vector(w.as_slice());
            let v = (kz.adjoint() * &a.m * &kw)[(0, 0)].norm() / (nz * kw.norm());
            otail = otail.max(v);
        }
    }
    let sv = singular_values(&a.m);
    let head = space.sub_dim(space.degree - space.degree.div_ceil(2));
    let total: f64 = sv.iter().sum();
    let tail: f64 = sv.iter().skip(head).sum();
    Ok(CompactnessReport {
        degree: space.degree,
        berezin_tail: btail,
        offdiag_tail: otail,
        sv_tail: if total > 0.0 { tail / total } else { 0.0 },
        head,
        outer_radius: grid.radii.last().cloned().unwrap_or(0.0),
    })
}

/// T_h with spectral bounds [1, upper].
#[derive(Clone, Debug)]
pub struct PartitionToeplitz {
    pub t_h: OperatorMatrix,
    pub min_eig: f64,
    pub max_eig: f64,
    pub inv_norm: f64,
}

pub fn partition_toeplitz_h(space: &GalerkinSpace, h: Symbol, upper: f64, tol: f64) -> Result<PartitionToeplitz> {
    let t = toeplitz_matrix(space, h);
    let herm = (&t.m + t.m.adjoint()) * C::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let (mut lo, mut hi, mut arg) = (f64::INFINITY, f64::NEG_INFINITY, 0);
    for (k, &v) in eig.eigenvalues.iter().enumerate() {
        if v < lo {
            lo = v;
            arg = k;
        }
        hi = hi.max(v);
    }
    if lo < 1.0 - tol || hi > upper + tol {
        let vec: Vec<C> = eig.eigenvectors.column(arg).iter().cloned().collect();
        return Err(Error::CheckFailed(format!(
            "spectrum [{lo}, {hi}] outside [1, {upper}]; eigenvector {vec:?}"
        )));
    }
    Ok(PartitionToeplitz {
        t_h: OperatorMatrix {
            label: "T_h".into(),
            ..t
        },
        min_eig: lo,
        max_eig: hi,
        inv_norm: 1.0 / lo,
    })
}

/// Random Hermitian matrix with Gaussian entries, scaled to unit norm.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<C> {
    let g = random_matrix(rng, d);
    let h = (&g + g.adjoint()) * C::new(0.5, 0.0);
    let s = op_norm(&h);
    h / C::new(s, 0.0)
}

/// Gaussian matrix scaled to unit norm.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<C> {
    let g = DMatrix::from_fn(d, d, |_, _| {
        let (x, y) = cplx::gaussian_pair(rng);
        C::new(x, y)
    });
    let s = op_norm(&g);
    if s > 0.0 {
        g / C::new(s, 0.0)
    } else {
        g
    }
}

pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DVector<C> {
    let v = DVector::from_fn(d, |_, _| {
        let (x, y) = cplx::gaussian_pair(rng);
        C::new(x, y)
    });
    let s = v.norm();
    v / C::new(s, 0.0)
}

/// ‖[T, x⊗y]‖.
pub fn commutator_rank_one(t: &DMatrix<C>, x: &DVector<C>, y: &DVector<C>) -> f64 {
    let r = rank_one(x, y);
    op_norm(&(t * &r - &r * t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(n_deg: u32) -> GalerkinSpace {
        build_galerkin(1, n_deg, galerkin_rule(1, n_deg, 8)).unwrap()
    }

    #[test]
    fn dimensions() {
        assert_eq!(disc(0).dim(), 1);
        assert_eq!(disc(2).dim(), 3);
        let b = build_galerkin(2, 1, galerkin_rule(2, 1, 0)).unwrap();
        assert_eq!(b.dim(), 3);
        let e0 = disc(0).basis_at(&[C::new(0.2, 0.1)]);
        assert!((e0[0].re - 1.0 / PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn coarse_rule_is_rejected() {
        let r = build_galerkin(1, 6, BallRuleSpec { radial: 2, angular: 3 });
        assert!(matches!(r, Err(Error::Resolution(_))));
    }

    #[test]
    fn toeplitz_examples() {
        let s = disc(8);
        let one = toeplitz_matrix(&s, &|_| C::new(1.0, 0.0));
        assert!((one.m.clone() - DMatrix::identity(9, 9)).norm() < 1e-10);
        let c = toeplitz_matrix(&s, &|_| C::new(0.5, -2.0));
        assert!((c.m.clone() - DMatrix::identity(9, 9) * C::new(0.5, -2.0)).norm() < 1e-10);
        let t = toeplitz_matrix(&s, &|z| C::new(z[0].norm_sqr(), 0.0));
        for i in 0..9 {
            for j in 0..9 {
                let want = if i == j { (i as f64 + 1.0) / (i as f64 + 2.0) } else { 0.0 };
                assert!((t.m[(i, j)] - want).norm() < 1e-8);
            }
        }
        let z0 = berezin(&s, &t, &[C::new(0.0, 0.0)]).unwrap();
        assert!((z0.re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hankel_of_conj_matches_closed_form() {
        // ‖H e_k‖² = 1/((k+1)(k+2)) with orthogonal images, so ‖H‖ = 1/√2
        let s = disc(8);
        let big = enlarged_space(&s, 2).unwrap();
        let h = hankel_block(&s, &big, &|z| z[0].conj());
        let sv = singular_values(&h);
        let mut want: Vec<f64> = (0..9).map(|k| 1.0 / (((k + 1) * (k + 2)) as f64).sqrt()).collect();
        want.sort_by(|a, b| b.total_cmp(a));
        for (g, w) in sv.iter().zip(&want) {
            assert!((g - w).abs() < 1e-8, "{g} vs {w}");
        }
        let an = hankel_and_commutator(&s, &big, &|z| z[0] * z[0] - C::new(0.0, 3.0) * z[0]);
        assert!(an.hankel_norm < 1e-8);
        let one = hankel_and_commutator(&s, &big, &|_| C::new(1.0, 0.0));
        assert!(one.commutator_norm < 1e-10);
    }

    #[test]
    fn binary_roundtrip() {
        let s = disc(3);
        let t = toeplitz_matrix(&s, &|z| z[0] + C::new(0.0, 1.0) * z[0].norm_sqr());
        let side = t.sidecar();
        let back = OperatorMatrix::from_bytes(&side, &t.to_bytes()).unwrap();
        assert_eq!(back.m, t.m);
        let bytes = t.to_bytes();
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), t.m[(0, 1)].re);
    }

    #[test]
    fn discrete_sum_single_point() {
        let s = disc(30);
        let z = Point::from_slice(&[C::new(0.3, 0.1)]);
        let m = discrete_sum_matrix(&s, &[(C::new(1.0, 0.0), z.clone(), z.clone())]);
        assert!((m.norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn loc_examples() {
        let s = disc(5);
        let id = OperatorMatrix::identity(&s);
        let one = |_: &[C]| C::new(1.0, 0.0);
        let l = loc_assemble(&s, &id, &[&one]);
        assert!((l.m - DMatrix::identity(6, 6)).norm() < 1e-10);
        let zero = OperatorMatrix::new(&s, "zero", DMatrix::zeros(6, 6));
        assert_eq!(loc_assemble(&s, &zero, &[&one]).norm(), 0.0);
        // two disjoint bumps against a direct product assembly
        let b1 = |z: &[C]| C::new((0.25 - (z[0] - C::new(0.5, 0.0)).norm_sqr()).max(0.0), 0.0);
        let b2 = |z: &[C]| C::new((0.25 - (z[0] + C::new(0.5, 0.0)).norm_sqr()).max(0.0), 0.0);
        let a = toeplitz_matrix(&s, &|z| C::new(z[0].norm_sqr(), 0.0));
        let l = loc_assemble(&s, &a, &[&b1, &b2]);
        let (t1, t2) = (toeplitz_matrix(&s, &b1).m, toeplitz_matrix(&s, &b2).m);
        let direct = &t1 * &a.m * &t1 + &t2 * &a.m * &t2;
        assert!((l.m - direct).norm() < 1e-8);
    }

    #[test]
    fn split_search_small_cases() {
        let s = disc(6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f1 = |z: &[C]| C::new(if z[0].re > 0.0 { 1.0 } else { 0.0 }, 0.0);
        let f2 = |z: &[C]| C::new(if z[0].re <= 0.0 { 1.0 } else { 0.0 }, 0.0);
        let t1 = toeplitz_matrix(&s, &f1).m;
        let t2 = toeplitz_matrix(&s, &f2).m;
        let w = offdiag_split_search(&DMatrix::identity(7, 7), &[t1.clone()]).unwrap();
        assert_eq!(w.lhs, 0.0);
        let w = offdiag_split_search(&DMatrix::identity(7, 7), &[t1.clone(), t2.clone()]).unwrap();
        assert!(w.lhs <= w.rhs);
        let a = random_matrix(&mut rng, 7);
        assert!(offdiag_split_search(&a, &[t1, t2]).is_ok());
    }

    #[test]
    fn berezin_of_identity_and_rank_one() {
        let s = disc(10);
        let id = OperatorMatrix::identity(&s);
        let z = [C::new(0.4, -0.2)];
        assert!((berezin(&s, &id, &z).unwrap() - 1.0).norm() < 1e-12);
        let k0 = s.kernel_vector(&[C::new(0.0, 0.0)]);
        let p = OperatorMatrix::new(&s, "k0", rank_one(&k0, &k0));
        let near = berezin(&s, &p, &[C::new(0.1, 0.0)]).unwrap().re;
        let far = berezin(&s, &p, &[C::new(0.6, 0.0)]).unwrap().re;
        assert!(far < near);
    }

    #[test]
    fn cutoff_predicates() {
        let d = DomainSpec::disc();
        let g = Cutoff::new(&d, CutoffKind::Lambda, 0.1, 0.5).unwrap();
        assert_eq!(g.eval(&d, &[C::new(0.5, 0.0)]), 1.0);
        let tp = g.vanishing_depth();
        let x = (1.0 - tp * 0.9).sqrt();
        assert_eq!(g.eval(&d, &[C::new(x, 0.0)]), 0.0);
        let p = Cutoff::new(&d, CutoffKind::Phi, 0.1, 0.5).unwrap();
        assert_eq!(p.eval(&d, &[C::new(0.2, 0.3)]), 0.0);
        assert!(Cutoff::new(&d, CutoffKind::Lambda, 2.0, 0.5).is_err());
    }

    #[test]
    fn oscillation_examples() {
        let d = DomainSpec::disc();
        let c = oscillation_profile(&d, &|_| 0.7, 4, 50, 1).unwrap();
        assert_eq!(c.diff, 0.0);
        let r = oscillation_profile(&d, &|z| 1.0 - cplx::norm_sq(z), 8, 200, 1).unwrap();
        assert!(r.vanishing(0.05, 1.1), "{r:?}");
        // pairs x e^{±iε} straddle the jump of a half-plane step at every depth
        let pairs: Vec<(Point, Point)> = (0..8)
            .map(|k| {
                let x = (1.0 - 0.75 * 0.5f64.powi(k)).sqrt();
                let z = Point::from_slice(&[C::from_polar(x, 1e-3 * (1.0 - x))]);
                let w = Point::from_slice(&[z.0[0].conj()]);
                assert!(ball_distance(z.as_slice(), w.as_slice()) <= 1.0);
                (z, w)
            })
            .collect();
        let step = oscillation_on_pairs(&d, &|z| if z[0].im > 0.0 { 1.0 } else { 0.0 }, &pairs, 8);
        assert!(!step.vanishing(0.05, 1.1));
        assert_eq!(step.diff, 1.0);
    }

    #[test]
    fn partition_trivial() {
        let s = disc(12);
        let p = partition_toeplitz_h(&s, &|_| C::new(1.0, 0.0), 1.0, 1e-6).unwrap();
        assert!((p.inv_norm - 1.0).abs() < 1e-8);
        assert!(partition_toeplitz_h(&s, &|_| C::new(0.5, 0.0), 4.0, 1e-6).is_err());
    }
}
