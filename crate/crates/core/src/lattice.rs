//! a-separated sets and R-separated partitions under the distance estimator.

use crate::cplx::{self, Point, C};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::metric::{self, ball_automorphism, Budget, DistanceOracle};
use crate::report::Check;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Where candidates are drawn: −r log-uniform inside dyadic shells of [lo, hi].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthRange {
    pub lo: f64,
    pub hi: f64,
}

impl DepthRange {
    pub fn is_empty(&self) -> bool {
        !(self.lo > 0.0 && self.lo <= self.hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub a: f64,
    pub points: Vec<Point>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<DepthRange>,
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Distance used for separation certificates: closed form on the ball, coarse optimizer otherwise.
pub fn lattice_oracle(dom: &DomainSpec) -> DistanceOracle {
    DistanceOracle::for_domain(dom, Budget::fast())
}

/// Candidates with depths stratified over dyadic shells, interleaved shell by shell.
pub fn stratified_candidates(dom: &DomainSpec, region: DepthRange, count: usize, seed: u64) -> Vec<Point> {
    if region.is_empty() || count == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = region.hi.min(0.999 * -dom.r(&dom.center.0));
    let shells = ((top / region.lo).log2().ceil().max(1.0)) as usize;
    let mut per: Vec<Vec<Point>> = vec![Vec::new(); shells];
    for i in 0..count {
        let k = i % shells;
        let hi = top * 0.5f64.powi(k as i32);
        let lo = (hi / 2.0).max(region.lo);
        per[k].push(dom.random_point_log_depth(&mut rng, lo, hi));
    }
    for s in &mut per {
        s.shuffle(&mut rng);
    }
    // round robin over shells
    let mut out = Vec::with_capacity(count);
    let mut idx = 0;
    while out.len() < count {
        for s in &per {
            if let Some(p) = s.get(idx) {
                out.push(p.clone());
            }
        }
        idx += 1;
    }
    out
}

/// Lower bound on d(z,w) from the depth ratio, d ≥ ½|log(r(w)/r(z))|, valid when ψ ≡ 1 and
/// the Hessian is positive on all of Ω (centered quadrics with θ ≥ 1).
fn depth_lower_bound(dom: &DomainSpec, z: &Point, w: &Point) -> f64 {
    if dom.quadric_weights().is_none() || dom.theta < 1.0 {
        return 0.0;
    }
    0.5 * (dom.r(&w.0) / dom.r(&z.0)).ln().abs()
}

/// Greedy packing over a candidate stream: accept iff d_upper ≥ 2a to every accepted point.
pub fn build_separated(
    dom: &DomainSpec,
    candidates: &[Point],
    a: f64,
    seed: u64,
    oracle: &DistanceOracle,
) -> Result<Lattice> {
    if !(a > 0.0) {
        return Err(Error::InvalidArgument("separation a must be positive".into()));
    }
    let mut pts: Vec<Point> = Vec::new();
    for c in candidates {
        if !dom.contains(c) {
            continue;
        }
        let mut ok = true;
        for p in &pts {
            if depth_lower_bound(dom, c, p) >= 2.0 * a {
                continue;
            }
            if oracle.eval(dom, p, c)? < 2.0 * a {
                ok = false;
                break;
            }
        }
        if ok {
            pts.push(c.clone());
        }
    }
    Ok(Lattice {
        a,
        points: pts,
        seed,
        region: None,
    })
}

/// Stratified candidates followed by [`build_separated`].
pub fn build_separated_in(dom: &DomainSpec, region: DepthRange, a: f64, candidate_count: usize, seed: u64) -> Result<Lattice> {
    let cands = stratified_candidates(dom, region, candidate_count, seed);
    let mut lat = build_separated(dom, &cands, a, seed, &lattice_oracle(dom))?;
    lat.region = Some(region);
    Ok(lat)
}

/// Smallest pairwise d_upper and a pair realizing it.
pub fn min_pair_distance(dom: &DomainSpec, lat: &Lattice, oracle: &DistanceOracle) -> Result<(f64, Option<(usize, usize)>)> {
    let n = lat.points.len();
    let rows: Vec<Result<(f64, Option<(usize, usize)>)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::INFINITY, None);
            for j in (i + 1)..n {
                let d = oracle.eval(dom, &lat.points[i], &lat.points[j])?;
                if d < best.0 {
                    best = (d, Some((i, j)));
                }
            }
            Ok(best)
        })
        .collect();
    let mut best = (f64::INFINITY, None);
    for r in rows {
        let r = r?;
        if r.0 < best.0 {
            best = r;
        }
    }
    Ok(best)
}

/// Greedy coloring of {(u,v) : d_upper(u,v) ≤ 2R}; each class is R-separated.
pub fn partition_separated(dom: &DomainSpec, lat: &Lattice, big_r: f64, oracle: &DistanceOracle) -> Result<Vec<Lattice>> {
    if big_r < lat.a {
        return Err(Error::InvalidArgument("partition radius must be at least a".into()));
    }
    let n = lat.points.len();
    let adj: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut v = Vec::new();
            for j in 0..n {
                if i != j && oracle.eval(dom, &lat.points[i], &lat.points[j])? <= 2.0 * big_r {
                    v.push(j);
                }
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let mut color = vec![usize::MAX; n];
    let mut classes = 0;
    for i in 0..n {
        let used: Vec<usize> = adj[i].iter().map(|&j| color[j]).filter(|&c| c != usize::MAX).collect();
        let c = (0..).find(|c| !used.contains(c)).unwrap();
        color[i] = c;
        classes = classes.max(c + 1);
    }
    Ok((0..classes)
        .map(|c| Lattice {
            a: big_r,
            points: (0..n).filter(|&i| color[i] == c).map(|i| lat.points[i].clone()).collect(),
            seed: lat.seed,
            region: lat.region,
        })
        .collect())
}

/// card{u ∈ Γ : d_upper(u, z) ≤ R}.
pub fn count_neighbors(dom: &DomainSpec, lat: &Lattice, z: &Point, big_r: f64, oracle: &DistanceOracle) -> Result<usize> {
    let mut c = 0;
    for p in &lat.points {
        if p == z || oracle.eval(dom, p, z)? <= big_r {
            c += 1;
        }
    }
    Ok(c)
}

/// Samples each ball D(u, a) of a ball lattice and checks no sample lies in two balls.
pub fn packing_audit(dom: &DomainSpec, lat: &Lattice, per_ball: usize, seed: u64) -> Result<Check> {
    if !dom.is_unit_ball() {
        return Err(Error::InvalidArgument("packing audit samples balls through ball automorphisms".into()));
    }
    let n = dom.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = None;
    let mut total = 0;
    for (i, u) in lat.points.iter().enumerate() {
        for _ in 0..per_ball {
            let dir = cplx::unit_sphere(&mut rng, n);
            let rad = lat.a.tanh() * rng.gen::<f64>().powf(1.0 / (2 * n) as f64);
            let zeta: Vec<C> = dir.iter().map(|x| x * rad).collect();
            let w = ball_automorphism(&u.0, &zeta);
            total += 1;
            for (j, v) in lat.points.iter().enumerate() {
                if j != i && metric::ball_distance(&v.0, &w) < lat.a {
                    bad = Some((i, j, Point(w.clone())));
                }
            }
        }
    }
    Ok(Check::new("lattice.packing_disjoint", bad.is_none())
        .fit("samples", total as f64)
        .witness(bad))
}

/// Rotation-invariant separated set on the disc: shells at d = 2a·k around 0, each with the
/// largest equally spaced orbit whose neighbours are ≥ 2a apart. Stored as multiplicities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitLattice {
    pub a: f64,
    /// (radius in d, multiplicity, angular step)
    pub shells: Vec<(f64, f64, f64)>,
}

fn same_shell_distance(t: f64, dep: f64, theta: f64) -> f64 {
    let z = [C::new(t, 0.0)];
    let w = [C::from_polar(t, theta)];
    metric::ball_distance_with_depths(&z, &w, dep, dep)
}

impl OrbitLattice {
    pub fn disc(a: f64, max_d: f64) -> Self {
        let mut shells = vec![(0.0, 1.0, 0.0)];
        let mut k = 1;
        loop {
            let d = 2.0 * a * k as f64;
            if d > max_d {
                break;
            }
            let t = d.tanh();
            let dep = 1.0 / d.cosh().powi(2);
            // bisection for the angle at which neighbours are exactly 2a apart
            let (mut lo, mut hi) = (0.0f64, std::f64::consts::PI);
            if same_shell_distance(t, dep, hi) < 2.0 * a {
                shells.push((d, 1.0, 0.0));
            } else {
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if same_shell_distance(t, dep, mid) >= 2.0 * a {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let m = (std::f64::consts::TAU / hi).floor().max(1.0);
                shells.push((d, m, std::f64::consts::TAU / m));
            }
            k += 1;
        }
        OrbitLattice { a, shells }
    }

    /// Explicit points of the shells with d ≤ max_d (for audits).
    pub fn points(&self, max_d: f64) -> Vec<Point> {
        let mut out = Vec::new();
        for &(d, m, step) in &self.shells {
            if d > max_d {
                break;
            }
            for j in 0..m as usize {
                out.push(Point::from_slice(&[C::from_polar(d.tanh(), step * j as f64)]));
            }
        }
        out
    }

    /// |r(0)|^{−n/2−η} Σ_{d(0,w) ≥ R} |r(w)|^{n/2+η} (|r(0)|^{1/2}|r(w)|^{1/2}/F(0,w))^{n+1} with n = 1.
    pub fn schur_sum(&self, big_r: f64, eta: f64) -> f64 {
        let mut s = 0.0;
        for &(d, m, _) in &self.shells {
            if d < big_r {
                continue;
            }
            let dep = 1.0 / d.cosh().powi(2);
            let t2 = d.tanh().powi(2);
            // F(0,w) = |r(0)| + |r(w)| + |w|^2
            let f = 1.0 + dep + t2;
            s += m * dep.powf(0.5 + eta) * (dep.sqrt() / f).powi(2);
        }
        s
    }
}

/// The same weighted sum over an explicit point set at center z.
pub fn schur_sum(dom: &DomainSpec, pts: &[Point], z: &Point, big_r: f64, eta: f64, oracle: &DistanceOracle) -> Result<f64> {
    let n = dom.n as f64;
    let rz = -dom.r(&z.0);
    let mut s = 0.0;
    for w in pts {
        if oracle.eval(dom, z, w)? < big_r {
            continue;
        }
        let rw = -dom.r(&w.0);
        let f = crate::gauge::gauge_eval(dom, z, w).f;
        s += rw.powf(n / 2.0 + eta) * ((rz * rw).sqrt() / f).powf(n + 1.0);
    }
    Ok(s * rz.powf(-n / 2.0 - eta))
}

/// log2 of the Schur sum of the orbit lattice decays in R with slope ≤ −0.05.
pub fn check_schur_decay(a: f64, radii: &[f64], eta: f64) -> Check {
    let rmax = radii.iter().cloned().fold(0.0, f64::max);
    // shells far beyond the last radius contribute below double precision
    let lat = OrbitLattice::disc(a, rmax + 40.0);
    let vals: Vec<f64> = radii.iter().map(|&r| lat.schur_sum(r, eta)).collect();
    let y: Vec<f64> = vals.iter().map(|v| v.log2()).collect();
    let fit = crate::stats::linear_fit(radii, &y);
    Check::new("lattice.schur_decay", fit.slope <= -0.05 && vals.iter().all(|v| v.is_finite()))
        .fit("log2_slope", fit.slope)
        .fit("eta", eta)
        .witness(radii.iter().cloned().zip(vals).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_lattices() {
        let d = DomainSpec::disc();
        let o = lattice_oracle(&d);
        let empty = build_separated(&d, &[], 0.5, 0, &o).unwrap();
        assert!(empty.is_empty());
        let one = build_separated(&d, &[Point::real(&[0.2])], 0.5, 0, &o).unwrap();
        assert_eq!(one.len(), 1);
        let parts = partition_separated(&d, &one, 2.0, &o).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(count_neighbors(&d, &one, &one.points[0], 0.1, &o).unwrap(), 1);
        assert_eq!(count_neighbors(&d, &one, &Point::real(&[-0.99]), 0.1, &o).unwrap(), 0);
        let none = build_separated_in(&d, DepthRange { lo: 0.5, hi: 0.1 }, 0.5, 100, 1).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn disc_lattice_is_separated_and_partitions() {
        let d = DomainSpec::disc();
        let o = lattice_oracle(&d);
        let lat = build_separated_in(&d, DepthRange { lo: 1e-3, hi: 1.0 }, 0.5, 2000, 7).unwrap();
        assert!(lat.len() > 10);
        let (m, _) = min_pair_distance(&d, &lat, &o).unwrap();
        assert!(m >= 1.0);
        let parts = partition_separated(&d, &lat, 2.0, &o).unwrap();
        for p in &parts {
            let (m, _) = min_pair_distance(&d, p, &o).unwrap();
            assert!(m > 4.0);
        }
        let total: usize = parts.iter().map(|p| p.len()).sum();
        assert_eq!(total, lat.len());
        let back = Lattice::from_json(&lat.to_json().unwrap()).unwrap();
        assert_eq!(back, lat);
    }

    #[test]
    fn orbit_lattice_is_separated() {
        let d = DomainSpec::disc();
        let o = lattice_oracle(&d);
        let orb = OrbitLattice::disc(0.5, 4.0);
        let pts = orb.points(4.0);
        let lat = Lattice {
            a: 0.5,
            points: pts.clone(),
            seed: 0,
            region: None,
        };
        let (m, _) = min_pair_distance(&d, &lat, &o).unwrap();
        assert!(m >= 1.0 - 1e-9, "{m}");
        // explicit sum agrees with the multiplicity form on the truncated set
        let z = Point::zeros(1);
        let explicit = schur_sum(&d, &pts, &z, 2.5, 0.25, &o).unwrap();
        let trunc = OrbitLattice {
            a: 0.5,
            shells: orb.shells.iter().cloned().filter(|s| s.0 <= 4.0).collect(),
        };
        assert!((explicit / trunc.schur_sum(2.5, 0.25) - 1.0).abs() < 1e-9);
    }
}
