//! Sampled audits of the boundary covering: packing, coverage, overlap counts, cells,
//! cutoffs and the index partition.
//!
//! At m = 65 a hyperbolic step of size O(m) moves a foot by far less than one ulp of its
//! collar coordinates, so nearby pairs differ essentially in depth. Lateral pairs are still
//! drawn, but most of them collapse onto the same foot.

use crate::covering::*;
use crate::cplx::{self, CVec, C};
use crate::domain::DomainSpec;
use crate::error::Result;
use crate::report::Check;
use crate::stats::linear_fit;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::collections::BTreeMap;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Inner centers of a level, nearest to the window center first.
fn inner_centers(l: &Level) -> Vec<usize> {
    let mut v: Vec<usize> = l.inner_overlap.iter().map(|x| x.0).collect();
    let key = |i: usize| l.centers[i].theta.abs() + cplx::norm(&l.centers[i].v);
    v.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
    v
}

/// Random point whose depth differs from z by a factor up to e^{±2ρ}; half of the draws
/// also move the foot by at most the hyperbolic scale e^ρ at that depth.
fn nearby<R: Rng + ?Sized>(rng: &mut R, z: &CollarPoint, rho: f64) -> CollarPoint {
    let x = (2.0 * rng.gen::<f64>() - 1.0) * 2.0 * rho;
    let depth = (z.depth * x.exp()).min(0.5);
    if rng.gen::<bool>() {
        return z.with_depth(depth);
    }
    let s = rho.exp() * rng.gen::<f64>();
    let dtheta = z.depth * s * (2.0 * rng.gen::<f64>() - 1.0);
    let dv = uniform_v(rng, z.v.len(), z.depth.sqrt() * s);
    let v: CVec = z.v.iter().zip(&dv).map(|(a, b)| a + b).collect();
    CollarPoint::boundary(z.theta + dtheta, &v).with_depth(depth)
}

/// Sampled point of A_{m,j,u}.
fn sample_a<R: Rng + ?Sized>(rng: &mut R, cover: &Cover, li: usize, u: usize) -> CollarPoint {
    let l = &cover.levels[li];
    let (lo, hi) = l.depth_a(cover.m);
    sample_in_cap(rng, &l.centers[u], l.a).with_depth(log_uniform(rng, lo, hi))
}

pub fn check_engulfing(cover: &Cover, label: &str) -> Check {
    Check::new(format!("covering.engulfing.{label}"), cover.c1_observed <= cover.c1)
        .fit("c1", cover.c1)
        .fit("c1_observed", cover.c1_observed)
}

/// Q(u,d) ∩ Q(v,d) = ∅ for nearest-neighbor pairs of inner centers, on samples of both caps.
pub fn check_disjointness(cover: &Cover, cfg: &CoverConfig, label: &str) -> Check {
    let mut pairs = 0;
    let mut min_ratio = f64::INFINITY;
    let mut witness = None;
    'levels: for (li, l) in cover.levels.iter().enumerate() {
        let mut rng = rng_for(cfg.seed ^ 0xd15, li as u64);
        for &u in inner_centers(l).iter().take(cfg.audit_pairs) {
            let cu = &l.centers[u];
            let mut near = l.centers_near(cu, 4.0 * l.a);
            if near.len() < 2 {
                near = l.centers_near(cu, 16.0 * l.a);
            }
            let Some(v) = near
                .into_iter()
                .filter(|&v| v != u)
                .min_by(|&x, &y| cap_gauge(cu, &l.centers[x]).total_cmp(&cap_gauge(cu, &l.centers[y])))
            else {
                continue;
            };
            min_ratio = min_ratio.min(cap_gauge(cu, &l.centers[v]) / l.d);
            pairs += 1;
            for (x, y) in [(u, v), (v, u)] {
                for _ in 0..cfg.audit_samples {
                    let p = sample_in_cap(&mut rng, &l.centers[x], l.d);
                    if cap_contains(&l.centers[y], l.d, &p) {
                        witness = Some(json!({"j": l.j, "u": x, "v": y, "point": p}));
                        break 'levels;
                    }
                }
            }
        }
    }
    let mut c = Check::new(format!("covering.disjoint.{label}"), witness.is_none() && pairs > 0)
        .fit("pairs", pairs as f64)
        .fit("samples_per_cap", cfg.audit_samples as f64)
        .fit("min_gauge_over_d", min_ratio);
    if let Some(w) = witness {
        c = c.witness(w);
    }
    c
}

/// Every sampled point of each inner region lies in some Q(u, a).
pub fn check_coverage(cover: &Cover, cfg: &CoverConfig, label: &str) -> Check {
    let mut witness = None;
    let mut total = 0;
    for (li, l) in cover.levels.iter().enumerate() {
        let mut rng = rng_for(cfg.seed ^ 0xc0, li as u64);
        for _ in 0..cfg.audit_samples {
            let p = l.window.sample_inner(&mut rng, cover.n);
            total += 1;
            if l.centers_near(&p, l.a).is_empty() {
                witness = Some(json!({"j": l.j, "point": p}));
                break;
            }
        }
        if witness.is_some() {
            break;
        }
    }
    let mut c = Check::new(format!("covering.coverage.{label}"), witness.is_none()).fit("samples", total as f64);
    if let Some(w) = witness {
        c = c.witness(w);
    }
    c
}

/// Neighbor counts card{x : Q(x,Rd) ∩ Q(ζ,Rd) ≠ ∅} for R ∈ {1,2,4,8}; the log-log slope is
/// bounded by n + 0.3, and C = max count/R^n is the fitted count constant.
pub fn check_growth(cover: &Cover, cfg: &CoverConfig, label: &str) -> (Check, f64) {
    let rs = [1.0, 2.0, 4.0, 8.0];
    let n = cover.n as i32;
    let mut sums = [0.0; 4];
    let mut count = 0;
    let mut growth_c: f64 = 0.0;
    for (li, l) in cover.levels.iter().enumerate() {
        let mut rng = rng_for(cfg.seed ^ 0x83, li as u64);
        for _ in 0..cfg.cell_samples {
            let zeta = l.window.sample_inner(&mut rng, cover.n);
            for (k, r) in rs.iter().enumerate() {
                let c = l.centers_meeting(&zeta, r * l.d).len() as f64;
                sums[k] += c;
                growth_c = growth_c.max(c / r.powi(n));
            }
            count += 1;
        }
    }
    let x: Vec<f64> = rs.iter().map(|r| r.log2()).collect();
    let y: Vec<f64> = sums.iter().map(|s| (s / count as f64).max(1e-300).log2()).collect();
    let fit = linear_fit(&x, &y);
    let mut c = Check::new(
        format!("covering.growth.{label}"),
        count > 0 && fit.slope.is_finite() && fit.slope <= cover.n as f64 + 0.3,
    )
    .fit("slope", fit.slope)
    .fit("growth_constant", growth_c);
    for (k, r) in rs.iter().enumerate() {
        c = c.fit(&format!("mean_count_r{r}"), sums[k] / count.max(1) as f64);
    }
    (c, growth_c)
}

/// Overlap counts card{v : Q(v,b) ∩ Q(u,b) ≠ ∅} ≤ N₀, at most N₀ classes, and no two centers of
/// one class with intersecting b-caps.
pub fn check_overlap(cover: &Cover, growth_c: f64, label: &str) -> Check {
    let mut max_inner = 0;
    let mut witness = None;
    for l in &cover.levels {
        for &(i, count) in &l.inner_overlap {
            max_inner = max_inner.max(count);
            if count > cover.n0 && witness.is_none() {
                witness = Some(json!({"j": l.j, "u": i, "count": count}));
            }
            for k in l.centers_meeting(&l.centers[i], l.b) {
                if k != i && l.classes[k] == l.classes[i] && witness.is_none() {
                    witness = Some(json!({"j": l.j, "u": i, "v": k, "class": l.classes[i]}));
                }
            }
        }
    }
    let classes = cover.classes();
    let apriori = growth_c * cover.c1.powi(2 * cover.n as i32);
    let mut c = Check::new(
        format!("covering.overlap.{label}"),
        witness.is_none() && classes <= cover.n0,
    )
    .fit("n0", cover.n0 as f64)
    .fit("n0_apriori", apriori)
    .fit("max_inner_overlap", max_inner as f64)
    .fit("classes", classes as f64);
    if let Some(w) = witness {
        c = c.witness(w);
    }
    c
}

/// z_rep ∈ A, sampled A points lie in B.
pub fn check_cells(cover: &Cover, cfg: &CoverConfig, label: &str) -> Check {
    let mut witness = None;
    let mut tested = 0;
    for (li, l) in cover.levels.iter().enumerate() {
        let mut rng = rng_for(cfg.seed ^ 0xce, li as u64);
        for &u in inner_centers(l).iter().take(cfg.cell_samples) {
            tested += 1;
            if !l.in_a(cover.m, u, &l.representatives[u]) {
                witness = Some(json!({"j": l.j, "u": u, "representative": l.representatives[u]}));
                break;
            }
            let z = sample_a(&mut rng, cover, li, u);
            if !l.in_a(cover.m, u, &z) || !l.in_b(cover.m, u, &z) {
                witness = Some(json!({"j": l.j, "u": u, "point": z}));
                break;
            }
        }
        if witness.is_some() {
            break;
        }
    }
    let mut c = Check::new(format!("covering.cells.{label}"), witness.is_none() && tested > 0).fit("centers", tested as f64);
    if let Some(w) = witness {
        c = c.witness(w);
    }
    c
}

/// Points within distance m/13 of an A-cell lie in the B-cell.
pub fn check_separation(cover: &Cover, cfg: &CoverConfig, label: &str) -> Check {
    let limit = cover.m as f64 / 13.0;
    let mut pairs = 0;
    let mut witness = None;
    for (li, l) in cover.levels.iter().enumerate() {
        let mut rng = rng_for(cfg.seed ^ 0x5e, li as u64);
        let inner = inner_centers(l);
        for _ in 0..cfg.cell_samples {
            let u = inner[rng.gen_range(0..inner.len())];
            let z = sample_a(&mut rng, cover, li, u);
            let w = nearby(&mut rng, &z, limit);
            if collar_distance(&z, &w) >= limit {
                continue;
            }
            pairs += 1;
            if !l.in_b(cover.m, u, &w) {
                witness = Some(json!({"j": l.j, "u": u, "z": z, "w": w}));
                break;
            }
        }
        if witness.is_some() {
            break;
        }
    }
    let mut c = Check::new(format!("covering.separation.{label}"), witness.is_none() && pairs > 0).fit("pairs", pairs as f64);
    if let Some(w) = witness {
        c = c.witness(w);
    }
    c
}

/// B-cell samples lie within C·(1 + 7m) of the representative; passes when the fitted C ≤ 1.
pub fn check_radius(cover: &Cover, cfg: &CoverConfig, label: &str) -> Check {
    let scale = 1.0 + 7.0 * cover.m as f64;
    let mut worst: f64 = 0.0;
    for (li, l) in cover.levels.iter().enumerate() {
        let mut rng = rng_for(cfg.seed ^ 0x87, li as u64);
        let (lo, hi) = l.depth_b(cover.m);
        for &u in inner_centers(l).iter().take(8) {
            for k in 0..cfg.cell_samples / 8 {
                let depth = match k {
                    0 => lo * (1.0 + 1e-12),
                    1 => hi * (1.0 - 1e-12),
                    _ => log_uniform(&mut rng, lo, hi),
                };
                let w = sample_in_cap(&mut rng, &l.centers[u], l.b).with_depth(depth.min(0.5));
                worst = worst.max(collar_distance(&l.representatives[u], &w));
            }
        }
    }
    let c_fit = worst / scale;
    Check::new(format!("covering.radius.{label}"), c_fit.is_finite() && c_fit <= 1.0)
        .fit("c", c_fit)
        .fit("max_distance", worst)
}

/// Cutoff properties: values in [0,1], 1 on A, support in B, Lipschitz 1/L on radial and
/// same-shadow pairs, and points within 4 of the support lie in B.
pub fn check_cutoffs(cover: &Cover, cfg: &CoverConfig, label: &str) -> Check {
    let l_ramp = cover.ramp();
    let mut witness = None;
    let (mut lip_pairs, mut near_pairs, mut positive) = (0, 0, 0);
    let mut lip_ratio: f64 = 0.0;
    for (li, l) in cover.levels.iter().enumerate() {
        let mut rng = rng_for(cfg.seed ^ 0xf0, li as u64);
        let inner = inner_centers(l);
        let (lo, hi) = l.depth_a(cover.m);
        let spread = (2.0 * l_ramp + 1.0).exp();
        for _ in 0..cfg.cell_samples {
            let u = inner[rng.gen_range(0..inner.len())];
            let cu = &l.centers[u];
            let t = if rng.gen::<bool>() { l.a } else { 1.5 * l.a };
            let z = sample_in_cap(&mut rng, cu, t).with_depth(log_uniform(&mut rng, lo / spread, (hi * spread).min(0.5)));
            let f = cover.cutoff(li, u, &z);
            let bad = if !(0.0..=1.0).contains(&f) {
                Some("range")
            } else if l.in_a(cover.m, u, &z) && (f != 1.0 || cover.distance_to_a(li, u, &z) != 0.0) {
                Some("one on A")
            } else if f > 0.0 && !l.in_b(cover.m, u, &z) {
                Some("support")
            } else {
                None
            };
            if let Some(kind) = bad {
                witness = Some(json!({"kind": kind, "j": l.j, "u": u, "z": z, "f": f}));
                break;
            }
            if f > 0.0 {
                positive += 1;
                let w = nearby(&mut rng, &z, 4.0);
                if collar_distance(&z, &w) < 4.0 {
                    near_pairs += 1;
                    if !l.in_b(cover.m, u, &w) {
                        witness = Some(json!({"kind": "near support", "j": l.j, "u": u, "z": z, "w": w}));
                        break;
                    }
                }
            }
            let w = nearby(&mut rng, &z, 1.0);
            let same_foot = w.theta == z.theta && w.v == z.v;
            if same_foot || (cap_gauge(cu, &z) < l.a && cap_gauge(cu, &w) < l.a) {
                let d = collar_distance(&z, &w);
                let df = (f - cover.cutoff(li, u, &w)).abs();
                lip_pairs += 1;
                if d > 0.0 {
                    lip_ratio = lip_ratio.max(df * l_ramp / d);
                }
                if df > d / l_ramp + 1e-9 {
                    witness = Some(json!({"kind": "lipschitz", "j": l.j, "u": u, "z": z, "w": w, "df": df, "d": d}));
                    break;
                }
            }
        }
        if witness.is_some() {
            break;
        }
    }
    let mut c = Check::new(format!("covering.cutoffs.{label}"), witness.is_none() && lip_pairs > 0 && positive > 0)
        .fit("lipschitz_pairs", lip_pairs as f64)
        .fit("max_lipschitz_ratio", lip_ratio)
        .fit("support_pairs", near_pairs as f64);
    if let Some(w) = witness {
        c = c.witness(w);
    }
    c
}

/// Samples for the partition audits: feet in the inner region of level min(j+1, J), depths
/// log-uniform over [2^{−(j+2)m}, min(2^{−(j−1)m}, 1/2)).
fn partition_points(cover: &Cover, cfg: &CoverConfig) -> Vec<CollarPoint> {
    let last = cover.levels.len() - 1;
    let mut out = Vec::new();
    for li in 0..cover.levels.len() {
        let mut rng = rng_for(cfg.seed ^ 0x9a, li as u64);
        let w = &cover.levels[(li + 1).min(last)].window;
        let j = cover.levels[li].j as f64;
        let lo = depth_pow(cover.m, j + 2.0);
        let hi = depth_pow(cover.m, j - 1.0).min(0.5);
        for _ in 0..cfg.cell_samples {
            out.push(w.sample_inner(&mut rng, cover.n).with_depth(log_uniform(&mut rng, lo, hi)));
        }
    }
    out
}

/// A-cell coverage of H_{2^{−2m}} down to the truncation depth, B-cell disjointness within each
/// I^{(ν,κ)}, the Φ(2^{−m}; 1/L) predicates for f_I, and 1 ≤ h ≤ 3N₀ + 1.
pub fn partition_audit(cover: &Cover, cfg: &CoverConfig, label: &str) -> Vec<Check> {
    let pts = partition_points(cover, cfg);
    let m = cover.m;
    let l_ramp = cover.ramp();
    let h_max = 3.0 * cover.n0 as f64 + 1.0;
    let mut cov_witness = None;
    let mut disj_witness = None;
    let mut mem_witness = None;
    let mut h_witness = None;
    let (mut h_lo, mut h_hi) = (f64::INFINITY, 0.0f64);
    let (mut fi_max, mut diff_max, mut diff_pairs, mut zero_tests) = (0.0f64, 0.0f64, 0, 0);
    let mut max_b_hits = 0;
    let mut rng = rng_for(cfg.seed ^ 0x9b, 0);
    for z in &pts {
        // some A-cell contains z
        if z.depth < depth_pow(m, 2.0) && cov_witness.is_none() {
            let hit = cover.levels.iter().any(|l| {
                let (lo, hi) = l.depth_a(m);
                z.depth >= lo && z.depth < hi && l.centers_near(z, l.a).into_iter().any(|i| l.in_a(m, i, z))
            });
            if !hit {
                cov_witness = Some(json!({"point": z}));
            }
        }
        // B-cells of one class are disjoint
        let mut groups: BTreeMap<(u32, u32), Vec<(u32, usize)>> = BTreeMap::new();
        let mut hits = 0;
        for (li, l) in cover.levels.iter().enumerate() {
            let (lo, hi) = l.depth_b(m);
            if z.depth <= lo || z.depth >= hi {
                continue;
            }
            for i in l.centers_near(z, l.b) {
                if l.in_b(m, i, z) {
                    hits += 1;
                    groups.entry(cover.class_of(li, i)).or_default().push((l.j, i));
                }
            }
        }
        max_b_hits = max_b_hits.max(hits);
        if disj_witness.is_none() {
            if let Some((k, v)) = groups.iter().find(|(_, v)| v.len() > 1) {
                disj_witness = Some(json!({"class": k, "cells": v, "point": z}));
            }
        }
        // f_I ∈ Φ(2^{−m}; 1/L)
        let active = cover.active(z);
        let sums = cover.class_sums_of(&active);
        let x = 2.0 * rng.gen::<f64>() - 1.0;
        let w = z.with_depth((z.depth * (2.0 * x).exp()).min(0.5));
        let d = collar_distance(z, &w);
        let sums_w = cover.class_sums(&w);
        for (k, &(fi, _)) in &sums {
            fi_max = fi_max.max(fi);
            if (fi > 1.0 + 1e-12 || fi < 0.0) && mem_witness.is_none() {
                mem_witness = Some(json!({"kind": "range", "class": k, "f": fi, "point": z}));
            }
        }
        if z.depth >= depth_pow(m, 1.0) {
            zero_tests += 1;
            if let Some((k, _)) = sums.iter().find(|(_, v)| v.0 != 0.0) {
                if mem_witness.is_none() {
                    mem_witness = Some(json!({"kind": "zero", "class": k, "point": z}));
                }
            }
        }
        if d <= 1.0 {
            diff_pairs += 1;
            let keys: std::collections::BTreeSet<_> = sums.keys().chain(sums_w.keys()).collect();
            for k in keys {
                let a = sums.get(k).map_or(0.0, |v| v.0);
                let b = sums_w.get(k).map_or(0.0, |v| v.0);
                diff_max = diff_max.max((a - b).abs());
                if (a - b).abs() > 1.0 / l_ramp + 1e-12 && mem_witness.is_none() {
                    mem_witness = Some(json!({"kind": "diff", "class": k, "z": z, "w": w}));
                }
            }
        }
        // 1 ≤ h ≤ 3N₀ + 1
        let h = cover.h_of(z, &active);
        h_lo = h_lo.min(h);
        h_hi = h_hi.max(h);
        if !(1.0..=h_max).contains(&h) && h_witness.is_none() {
            h_witness = Some(json!({"h": h, "point": z}));
        }
    }
    let finish = |c: Check, w: Option<serde_json::Value>| match w {
        Some(w) => c.witness(w),
        None => c,
    };
    vec![
        finish(
            Check::new(format!("covering.depth_coverage.{label}"), cov_witness.is_none()).fit("points", pts.len() as f64),
            cov_witness,
        ),
        finish(
            Check::new(format!("covering.class_disjoint.{label}"), disj_witness.is_none()).fit("max_b_hits", max_b_hits as f64),
            disj_witness,
        ),
        finish(
            Check::new(format!("covering.membership.{label}"), mem_witness.is_none() && zero_tests > 0 && diff_pairs > 0)
                .fit("max_f_i", fi_max)
                .fit("max_diff", diff_max)
                .fit("diff_pairs", diff_pairs as f64)
                .fit("zero_tests", zero_tests as f64),
            mem_witness,
        ),
        finish(
            Check::new(format!("covering.h_bounds.{label}"), h_witness.is_none())
                .fit("h_min", h_lo)
                .fit("h_max", h_hi)
                .fit("bound", h_max),
            h_witness,
        ),
    ]
}

/// Fitted transport constant C in
/// ρ(z', w') ≤ 3ρ(z, w) + C(|z − z'| + |w − w'|) on the closed unit ball,
/// against the bound 3·diam + sup|∂̄r| + diam·Lip(∂̄r) = 9.
pub fn check_gauge_transport(dom: &DomainSpec, samples: usize, seed: u64, label: &str) -> Check {
    let n = dom.n;
    let mut rng = rng_for(seed ^ 0x84, 0);
    let point = |rng: &mut ChaCha8Rng, on_boundary: bool| -> CVec {
        let dir = cplx::unit_sphere(rng, n);
        let s = if on_boundary { 1.0 } else { rng.gen::<f64>().powf(1.0 / (2 * n) as f64) };
        dir.iter().map(|x| x * s).collect()
    };
    let mut c_fit: f64 = 0.0;
    for k in 0..samples {
        let z = point(&mut rng, k % 2 == 0);
        let w = point(&mut rng, k % 3 == 0);
        let eps = 10f64.powf(-3.0 * rng.gen::<f64>());
        let perturb = |rng: &mut ChaCha8Rng, x: &CVec| -> CVec {
            let g = cplx::gaussian_vec(rng, n);
            let y: CVec = x.iter().zip(&g).map(|(a, b)| a + b * eps).collect();
            let r = cplx::norm(&y);
            if r > 1.0 {
                y.iter().map(|a| a / r).collect()
            } else {
                y
            }
        };
        let z2 = perturb(&mut rng, &z);
        let w2 = perturb(&mut rng, &w);
        let lhs = crate::gauge::gauge_rho(dom, &z2, &w2);
        let rhs = 3.0 * crate::gauge::gauge_rho(dom, &z, &w);
        let moved = cplx::norm(&sub(&z, &z2)) + cplx::norm(&sub(&w, &w2));
        if moved > 0.0 {
            c_fit = c_fit.max((lhs - rhs) / moved);
        }
    }
    Check::new(format!("covering.gauge_transport.{label}"), c_fit <= 9.0)
        .fit("C", c_fit)
        .fit("samples", samples as f64)
}

fn sub(a: &[C], b: &[C]) -> CVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Builds the cover of the unit ball or disc and runs every audit.
pub fn covering_suite(dom: &DomainSpec, cfg: &CoverConfig, label: &str) -> Result<(Vec<Check>, Cover)> {
    let cover = build_cover(dom, cfg)?;
    let (growth, growth_c) = check_growth(&cover, cfg, label);
    let mut checks = vec![
        check_engulfing(&cover, label),
        check_disjointness(&cover, cfg, label),
        check_coverage(&cover, cfg, label),
        growth,
        check_overlap(&cover, growth_c, label),
        check_cells(&cover, cfg, label),
        check_separation(&cover, cfg, label),
        check_radius(&cover, cfg, label),
        check_cutoffs(&cover, cfg, label),
    ];
    checks.extend(partition_audit(&cover, cfg, label));
    checks.push(check_gauge_transport(dom, cfg.audit_samples, cfg.seed, label));
    Ok((checks, cover))
}
