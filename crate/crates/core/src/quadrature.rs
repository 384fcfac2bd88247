//! Gauss rules (Golub-Welsch) and the product rule on the unit ball of C^n.

use crate::cplx::{Point, C};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Nodes and weights of a rule on [0, 1].
#[derive(Clone, Debug)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss-Jacobi rule for `∫_0^1 (1−u)^a g(u) du`, exact for polynomial g of degree ≤ 2q−1.
pub fn gauss_jacobi01(q: usize, a: f64) -> Rule1d {
    assert!(q >= 1 && a > -1.0);
    // Jacobi weight (1−x)^α (1+x)^β on [−1,1] with α = a, β = 0
    let (al, be) = (a, 0.0f64);
    let mut jm = DMatrix::<f64>::zeros(q, q);
    for k in 0..q {
        let kf = k as f64;
        let s = 2.0 * kf + al + be;
        let diag = if k == 0 {
            (be - al) / (al + be + 2.0)
        } else {
            (be * be - al * al) / (s * (s + 2.0))
        };
        jm[(k, k)] = diag;
        if k + 1 < q {
            let k1 = kf + 1.0;
            let s1 = 2.0 * k1 + al + be;
            let num = 4.0 * k1 * (k1 + al) * (k1 + be) * (k1 + al + be);
            let den = s1 * s1 * (s1 + 1.0) * (s1 - 1.0);
            let off = (num / den).sqrt();
            jm[(k, k + 1)] = off;
            jm[(k + 1, k)] = off;
        }
    }
    let eig = SymmetricEigen::new(jm);
    // ∫_0^1 (1−u)^a du = 1/(a+1)
    let mu0 = 1.0 / (a + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..q)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            ((x + 1.0) / 2.0, mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    Rule1d {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

pub fn gauss_legendre01(q: usize) -> Rule1d {
    gauss_jacobi01(q, 0.0)
}

/// 4-point Gauss-Legendre on [0, 1].
pub const GL4_NODES: [f64; 4] = [
    0.069_431_844_202_973_71,
    0.330_009_478_207_571_9,
    0.669_990_521_792_428_1,
    0.930_568_155_797_026_3,
];
pub const GL4_WEIGHTS: [f64; 4] = [
    0.173_927_422_568_726_93,
    0.326_072_577_431_273_07,
    0.326_072_577_431_273_07,
    0.173_927_422_568_726_93,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallRuleSpec {
    /// Gauss points per collapsed simplex coordinate
    pub radial: usize,
    /// trapezoid points per angle
    pub angular: usize,
}

impl BallRuleSpec {
    /// Rule exact for polynomials in (z, z̄) of total degree ≤ `deg`.
    pub fn exact_for(n: usize, deg: usize) -> Self {
        let _ = n;
        BallRuleSpec {
            radial: deg / 4 + 2,
            angular: deg + 1,
        }
    }
}

/// Product rule on the unit ball of C^n: collapsed simplex coordinates `t_k = |w_k|^2`
/// with Gauss-Jacobi weights, times uniform angles.
#[derive(Clone, Debug)]
pub struct BallQuadrature {
    pub n: usize,
    pub spec: BallRuleSpec,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl BallQuadrature {
    pub fn new(n: usize, spec: BallRuleSpec) -> Self {
        let rules: Vec<Rule1d> = (1..=n)
            .map(|k| gauss_jacobi01(spec.radial, (n - k) as f64))
            .collect();
        let m = spec.angular;
        let dth = std::f64::consts::TAU / m as f64;
        let base_w = 0.5f64.powi(n as i32) * dth.powi(n as i32);
        // enumerate simplex nodes
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
        for rule in &rules {
            let mut next = Vec::with_capacity(simplex.len() * spec.radial);
            for (us, w) in &simplex {
                for (u, wu) in rule.nodes.iter().zip(&rule.weights) {
                    let mut v = us.clone();
                    v.push(*u);
                    next.push((v, w * wu));
                }
            }
            simplex = next;
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let n_ang = m.pow(n as u32);
        for (us, w) in &simplex {
            // t_k = Π_{l<k}(1−u_l) u_k
            let mut rem = 1.0;
            let mut radii = Vec::with_capacity(n);
            for &u in us {
                let t = rem * u;
                radii.push(t.max(0.0).sqrt());
                rem *= 1.0 - u;
            }
            for a in 0..n_ang {
                let mut idx = a;
                let z: Vec<C> = radii
                    .iter()
                    .map(|&rho| {
                        let j = idx % m;
                        idx /= m;
                        C::from_polar(rho, dth * (j as f64 + 0.5))
                    })
                    .collect();
                points.push(Point::from_slice(&z));
                weights.push(w * base_w);
            }
        }
        BallQuadrature {
            n,
            spec,
            points,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate<F: Fn(&Point) -> C>(&self, f: F) -> C {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| f(p) * *w)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cplx::{ball_volume, factorial};

    #[test]
    fn jacobi_exactness() {
        for a in [0.0, 1.0, 2.0] {
            let r = gauss_jacobi01(5, a);
            for k in 0..10 {
                // ∫_0^1 (1−u)^a u^k du = B(k+1, a+1)
                let exact = factorial(k) * factorial(a as usize) / factorial(k + a as usize + 1);
                let q: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((q - exact).abs() < 1e-14, "a={a} k={k}");
            }
        }
    }

    #[test]
    fn gl4_matches_golub_welsch() {
        let r = gauss_legendre01(4);
        for i in 0..4 {
            assert!((r.nodes[i] - GL4_NODES[i]).abs() < 1e-14);
            assert!((r.weights[i] - GL4_WEIGHTS[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn ball_moments() {
        for n in 1..=3 {
            let q = BallQuadrature::new(n, BallRuleSpec { radial: 6, angular: 9 });
            let vol = q.integrate(|_| C::new(1.0, 0.0)).re;
            assert!((vol / ball_volume(n) - 1.0).abs() < 1e-12, "n={n} vol={vol}");
            // ∫ |z_1|^4 dv = π^n 2!/(n+2)!
            let m = q.integrate(|p| C::new(p.0[0].norm_sqr().powi(2), 0.0)).re;
            let exact = std::f64::consts::PI.powi(n as i32) * 2.0 / factorial(n + 2);
            assert!((m / exact - 1.0).abs() < 1e-12, "n={n}: {m} vs {exact}");
            // off-frequency monomials integrate to zero
            let z = q.integrate(|p| p.0[0] * p.0[0]);
            assert!(z.norm() < 1e-13);
        }
    }
}
