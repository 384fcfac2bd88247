//! Points of C^n and small complex-vector helpers.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

pub type C = Complex64;
pub type CVec = SmallVec<[C; 4]>;

pub const I: C = C::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// A point of C^n. Serialized as 2n reals `[re_1, im_1, ..., re_n, im_n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(pub CVec);

impl Point {
    pub fn zeros(n: usize) -> Self {
        Point(SmallVec::from_elem(C::new(0.0, 0.0), n))
    }

    pub fn from_slice(z: &[C]) -> Self {
        Point(SmallVec::from_slice(z))
    }

    pub fn real(xs: &[f64]) -> Self {
        Point(xs.iter().map(|&x| C::new(x, 0.0)).collect())
    }

    /// `x·e_k` in C^n.
    pub fn axis(n: usize, k: usize, x: C) -> Self {
        let mut p = Point::zeros(n);
        p.0[k] = x;
        p
    }

    pub fn from_reals(xs: &[f64]) -> Self {
        Point(xs.chunks(2).map(|p| C::new(p[0], p[1])).collect())
    }

    pub fn to_reals(&self) -> Vec<f64> {
        self.0.iter().flat_map(|z| [z.re, z.im]).collect()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn get_real(&self, k: usize) -> f64 {
        let z = self.0[k / 2];
        if k % 2 == 0 {
            z.re
        } else {
            z.im
        }
    }

    #[inline]
    pub fn add_real(&mut self, k: usize, h: f64) {
        let z = &mut self.0[k / 2];
        if k % 2 == 0 {
            z.re += h
        } else {
            z.im += h
        }
    }

    pub fn as_slice(&self) -> &[C] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn sub(&self, o: &Point) -> Point {
        Point(sub(&self.0, &o.0))
    }

    pub fn add(&self, o: &[C]) -> Point {
        Point(self.0.iter().zip(o).map(|(a, b)| a + b).collect())
    }

    /// `self + t·v`
    pub fn offset(&self, t: f64, v: &[C]) -> Point {
        Point(self.0.iter().zip(v).map(|(a, b)| a + b * t).collect())
    }

    pub fn lerp(&self, o: &Point, t: f64) -> Point {
        Point(
            self.0
                .iter()
                .zip(o.0.iter())
                .map(|(a, b)| a + (b - a) * t)
                .collect(),
        )
    }

    pub fn dist(&self, o: &Point) -> f64 {
        self.0
            .iter()
            .zip(o.0.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_reals().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        if v.len() % 2 != 0 {
            return Err(serde::de::Error::custom("odd number of real coordinates"));
        }
        Ok(Point::from_reals(&v))
    }
}

/// Hermitian inner product, linear in the first slot: `Σ a_i conj(b_i)`.
#[inline]
pub fn inner(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

#[inline]
pub fn norm_sq(a: &[C]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

#[inline]
pub fn norm(a: &[C]) -> f64 {
    norm_sq(a).sqrt()
}

#[inline]
pub fn sub(a: &[C], b: &[C]) -> CVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub fn scale(a: &[C], s: C) -> CVec {
    a.iter().map(|x| x * s).collect()
}

pub fn normalized(a: &[C]) -> CVec {
    let nn = norm(a);
    a.iter().map(|x| x / nn).collect()
}

/// Real inner product of `a` and `b` viewed as vectors of R^{2n}.
#[inline]
pub fn real_dot(a: &[C], b: &[C]) -> f64 {
    inner(a, b).re
}

/// Standard complex Gaussian vector (E|z_i|^2 = 1).
pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    (0..n)
        .map(|_| {
            let (a, b) = gaussian_pair(rng);
            C::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect()
}

/// Uniform point on the unit sphere of C^n.
pub fn unit_sphere<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    loop {
        let g = gaussian_vec(rng, n);
        let nn = norm(&g);
        if nn > 1e-300 {
            return g.iter().map(|x| x / nn).collect();
        }
    }
}

/// Two independent standard normals (Box-Muller).
pub fn gaussian_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    let rad = (-2.0 * u1.ln()).sqrt();
    let th = std::f64::consts::TAU * u2;
    (rad * th.cos(), rad * th.sin())
}

/// Surface area of the unit sphere S^{2n-1} in C^n = R^{2n}: 2π^n/(n-1)!.
pub fn sphere_area(n: usize) -> f64 {
    let mut f = 1.0;
    for k in 1..n {
        f *= k as f64;
    }
    2.0 * std::f64::consts::PI.powi(n as i32) / f
}

/// Volume of the unit ball of C^n: π^n/n!.
pub fn ball_volume(n: usize) -> f64 {
    let mut f = 1.0;
    for k in 1..=n {
        f *= k as f64;
    }
    std::f64::consts::PI.powi(n as i32) / f
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |a, b| a * b as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_roundtrip() {
        let p = Point(smallvec::smallvec![c(0.5, -0.25), c(0.0, 1.0)]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[0.5,-0.25,0.0,1.0]");
        let q: Point = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn inner_is_linear_in_first_slot() {
        let a = [c(1.0, 1.0)];
        let b = [c(0.0, 1.0)];
        assert_eq!(inner(&a, &b), c(1.0, 1.0) * c(0.0, -1.0));
    }

    #[test]
    fn sphere_constants() {
        assert!((sphere_area(1) - std::f64::consts::TAU).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-13);
        assert!((ball_volume(2) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-14);
    }
}
