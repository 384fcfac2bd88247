//! Real polynomials in (z, z̄) with exact derivatives.

use crate::cplx::{CVec, C};
use crate::error::{Error, Result};
use smallvec::SmallVec;

/// One monomial `coeff · z^alpha · z̄^beta`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub coeff: C,
}

/// Polynomial `Σ c_{αβ} z^α z̄^β`. Real-valued: coefficients are conjugate symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: Vec<Term>,
}

/// Value and first/second derivatives of a real polynomial at a point.
#[derive(Clone, Debug)]
pub struct Jet {
    pub r: f64,
    /// `∂_i r`
    pub dr: CVec,
    /// `levi[i*n + j] = ∂_i ∂̄_j r`
    pub levi: SmallVec<[C; 16]>,
    /// `hol[j*n + k] = ∂_j ∂_k r`
    pub hol: SmallVec<[C; 16]>,
}

impl Jet {
    /// `∂̄_j r = conj(∂_j r)` since r is real.
    pub fn dbar(&self) -> CVec {
        self.dr.iter().map(|x| x.conj()).collect()
    }

    /// `⟨A ξ, ξ⟩ = Σ ∂_i∂̄_j r ξ_i ξ̄_j`
    pub fn levi_form(&self, xi: &[C]) -> f64 {
        let n = xi.len();
        let mut s = C::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                s += self.levi[i * n + j] * xi[i] * xi[j].conj();
            }
        }
        s.re
    }
}

impl Polynomial {
    pub fn new(n: usize, terms: Vec<Term>) -> Result<Self> {
        let mut merged: Vec<Term> = Vec::new();
        for t in terms {
            if t.alpha.len() != n || t.beta.len() != n {
                return Err(Error::InvalidDomain(format!(
                    "monomial exponent length differs from n = {n}"
                )));
            }
            if let Some(m) = merged
                .iter_mut()
                .find(|m| m.alpha == t.alpha && m.beta == t.beta)
            {
                m.coeff += t.coeff;
            } else {
                merged.push(t);
            }
        }
        merged.retain(|t| t.coeff.norm() > 0.0);
        for t in &merged {
            let partner = merged
                .iter()
                .find(|m| m.alpha == t.beta && m.beta == t.alpha)
                .map(|m| m.coeff)
                .unwrap_or(C::new(0.0, 0.0));
            let scale = t.coeff.norm().max(1.0);
            if (partner - t.coeff.conj()).norm() > 1e-12 * scale {
                return Err(Error::InvalidDomain(format!(
                    "polynomial is not real: coefficient of z^{:?} zbar^{:?} lacks its conjugate partner",
                    t.alpha, t.beta
                )));
            }
        }
        Ok(Polynomial { n, terms: merged })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.alpha.iter().sum::<u32>() + t.beta.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// `Σ_k w_k |z_k|^2 + constant`
    pub fn diagonal_quadric(weights: &[f64], constant: f64) -> Self {
        let n = weights.len();
        let mut terms = Vec::new();
        for (k, &w) in weights.iter().enumerate() {
            let mut a = vec![0; n];
            a[k] = 1;
            terms.push(Term {
                alpha: a.clone(),
                beta: a,
                coeff: C::new(w, 0.0),
            });
        }
        terms.push(Term {
            alpha: vec![0; n],
            beta: vec![0; n],
            coeff: C::new(constant, 0.0),
        });
        Polynomial::new(n, terms).expect("diagonal quadric is real")
    }

    /// If r = Σ w_k|z_k|^2 − 1 with all w_k > 0, returns the weights.
    pub fn as_centered_quadric(&self) -> Option<Vec<f64>> {
        let mut w = vec![0.0; self.n];
        let mut constant = 0.0;
        for t in &self.terms {
            let da: u32 = t.alpha.iter().sum();
            let db: u32 = t.beta.iter().sum();
            if da == 0 && db == 0 {
                constant = t.coeff.re;
            } else if da == 1 && db == 1 && t.alpha == t.beta && t.coeff.im == 0.0 {
                let k = t.alpha.iter().position(|&x| x == 1)?;
                w[k] = t.coeff.re;
            } else {
                return None;
            }
        }
        if constant == -1.0 && w.iter().all(|&x| x > 0.0) {
            Some(w)
        } else {
            None
        }
    }

    fn powers(&self, z: &[C]) -> (SmallVec<[C; 64]>, usize) {
        let deg = self
            .terms
            .iter()
            .flat_map(|t| t.alpha.iter().chain(t.beta.iter()))
            .copied()
            .max()
            .unwrap_or(0) as usize;
        let stride = deg + 1;
        // layout: [k][0..stride] = z_k^p, then conj
        let mut p: SmallVec<[C; 64]> = SmallVec::from_elem(C::new(0.0, 0.0), 2 * self.n * stride);
        for k in 0..self.n {
            let base = 2 * k * stride;
            let zc = z[k].conj();
            p[base] = C::new(1.0, 0.0);
            p[base + stride] = C::new(1.0, 0.0);
            for e in 1..stride {
                p[base + e] = p[base + e - 1] * z[k];
                p[base + stride + e] = p[base + stride + e - 1] * zc;
            }
        }
        (p, stride)
    }

    #[inline]
    fn pw(p: &[C], stride: usize, k: usize, a: u32, b: u32) -> C {
        let base = 2 * k * stride;
        p[base + a as usize] * p[base + stride + b as usize]
    }

    pub fn value(&self, z: &[C]) -> f64 {
        let (p, s) = self.powers(z);
        let mut acc = C::new(0.0, 0.0);
        for t in &self.terms {
            let mut m = t.coeff;
            for k in 0..self.n {
                m *= Self::pw(&p, s, k, t.alpha[k], t.beta[k]);
            }
            acc += m;
        }
        acc.re
    }

    /// `(r, ∂r)`
    pub fn value_grad(&self, z: &[C]) -> (f64, CVec) {
        let (p, s) = self.powers(z);
        let n = self.n;
        let mut acc = C::new(0.0, 0.0);
        let mut g: CVec = SmallVec::from_elem(C::new(0.0, 0.0), n);
        let mut f: SmallVec<[C; 4]> = SmallVec::from_elem(C::new(0.0, 0.0), n);
        for t in &self.terms {
            for k in 0..n {
                f[k] = Self::pw(&p, s, k, t.alpha[k], t.beta[k]);
            }
            let m: C = f.iter().fold(t.coeff, |a, b| a * b);
            acc += m;
            for i in 0..n {
                if t.alpha[i] == 0 {
                    continue;
                }
                let mut d = t.coeff * (t.alpha[i] as f64) * Self::pw(&p, s, i, t.alpha[i] - 1, t.beta[i]);
                for k in 0..n {
                    if k != i {
                        d *= f[k];
                    }
                }
                g[i] += d;
            }
        }
        (acc.re, g)
    }

    pub fn jet(&self, z: &[C]) -> Jet {
        let (p, s) = self.powers(z);
        let n = self.n;
        let zero = C::new(0.0, 0.0);
        let mut acc = zero;
        let mut g: CVec = SmallVec::from_elem(zero, n);
        let mut levi: SmallVec<[C; 16]> = SmallVec::from_elem(zero, n * n);
        let mut hol: SmallVec<[C; 16]> = SmallVec::from_elem(zero, n * n);
        let mut f: SmallVec<[C; 4]> = SmallVec::from_elem(zero, n);
        let mut da: SmallVec<[C; 4]> = SmallVec::from_elem(zero, n);
        let mut db: SmallVec<[C; 4]> = SmallVec::from_elem(zero, n);
        for t in &self.terms {
            for k in 0..n {
                let (a, b) = (t.alpha[k], t.beta[k]);
                f[k] = Self::pw(&p, s, k, a, b);
                da[k] = if a > 0 {
                    Self::pw(&p, s, k, a - 1, b) * a as f64
                } else {
                    zero
                };
                db[k] = if b > 0 {
                    Self::pw(&p, s, k, a, b - 1) * b as f64
                } else {
                    zero
                };
            }
            let prod_except = |skip1: usize, skip2: usize| -> C {
                let mut m = t.coeff;
                for k in 0..n {
                    if k != skip1 && k != skip2 {
                        m *= f[k];
                    }
                }
                m
            };
            acc += prod_except(usize::MAX, usize::MAX);
            for i in 0..n {
                let (a, b) = (t.alpha[i], t.beta[i]);
                if a > 0 {
                    g[i] += da[i] * prod_except(i, usize::MAX);
                }
                for j in 0..n {
                    if i == j {
                        if a > 0 && b > 0 {
                            let dd = Self::pw(&p, s, i, a - 1, b - 1) * (a * b) as f64;
                            levi[i * n + i] += dd * prod_except(i, usize::MAX);
                        }
                        if a > 1 {
                            let dd = Self::pw(&p, s, i, a - 2, b) * (a * (a - 1)) as f64;
                            hol[i * n + i] += dd * prod_except(i, usize::MAX);
                        }
                    } else {
                        let pe = prod_except(i, j);
                        levi[i * n + j] += da[i] * db[j] * pe;
                        hol[i * n + j] += da[i] * da[j] * pe;
                    }
                }
            }
        }
        Jet {
            r: acc.re,
            dr: g,
            levi,
            hol,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cplx::c;

    fn sample_poly() -> Polynomial {
        // |z1|^4 + 0.3 (z1 z2bar + z1bar z2) + i z1^2 zbar2 - i z1bar^2 z2 + 2|z2|^2 - 1
        let t = |a: [u32; 2], b: [u32; 2], co: C| Term {
            alpha: a.to_vec(),
            beta: b.to_vec(),
            coeff: co,
        };
        Polynomial::new(
            2,
            vec![
                t([2, 0], [2, 0], c(1.0, 0.0)),
                t([1, 0], [0, 1], c(0.3, 0.0)),
                t([0, 1], [1, 0], c(0.3, 0.0)),
                t([2, 0], [0, 1], c(0.0, 1.0)),
                t([0, 1], [2, 0], c(0.0, -1.0)),
                t([0, 1], [0, 1], c(2.0, 0.0)),
                t([0, 0], [0, 0], c(-1.0, 0.0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn rejects_non_real() {
        let bad = Polynomial::new(
            1,
            vec![Term {
                alpha: vec![1],
                beta: vec![0],
                coeff: c(1.0, 0.0),
            }],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn jet_matches_finite_differences() {
        let p = sample_poly();
        let z = [c(0.3, -0.2), c(-0.1, 0.4)];
        let jet = p.jet(&z);
        let h = 1e-5;
        // ∂_i = (∂_x − i ∂_y)/2
        for i in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[i] += c(h, 0.0);
            zm[i] -= c(h, 0.0);
            let dx = (p.value(&zp) - p.value(&zm)) / (2.0 * h);
            let mut zp = z;
            let mut zm = z;
            zp[i] += c(0.0, h);
            zm[i] -= c(0.0, h);
            let dy = (p.value(&zp) - p.value(&zm)) / (2.0 * h);
            let d = c(dx, -dy) * 0.5;
            assert!((d - jet.dr[i]).norm() < 1e-8, "{d} vs {}", jet.dr[i]);
        }
        // ∂_i∂̄_j via finite differences of the exact gradient
        for i in 0..2 {
            for j in 0..2 {
                let mut zp = z;
                let mut zm = z;
                zp[j] += c(h, 0.0);
                zm[j] -= c(h, 0.0);
                let gx = (p.value_grad(&zp).1[i] - p.value_grad(&zm).1[i]) / (2.0 * h);
                let mut zp = z;
                let mut zm = z;
                zp[j] += c(0.0, h);
                zm[j] -= c(0.0, h);
                let gy = (p.value_grad(&zp).1[i] - p.value_grad(&zm).1[i]) / (2.0 * h);
                let dbar = (gx + c(0.0, 1.0) * gy) * 0.5;
                let d = (gx - c(0.0, 1.0) * gy) * 0.5;
                assert!((dbar - jet.levi[i * 2 + j]).norm() < 1e-7);
                assert!((d - jet.hol[i * 2 + j]).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn centered_quadric_detection() {
        let p = Polynomial::diagonal_quadric(&[1.0, 2.0], -1.0);
        assert_eq!(p.as_centered_quadric(), Some(vec![1.0, 2.0]));
        assert_eq!(sample_poly().as_centered_quadric(), None);
    }
}
