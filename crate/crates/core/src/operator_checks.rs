//! Invariant scans for the Galerkin operators.

use crate::cplx::{self, Point, C};
use crate::domain::DomainSpec;
use crate::error::Result;
use crate::lattice::OrbitLattice;
use crate::metric::{ball_automorphism, ball_distance};
use crate::operators::*;
use crate::quadrature::{BallQuadrature, BallRuleSpec};
use crate::report::Check;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Slack on inequalities with the sampled diff on the right.
pub const DIFF_SLACK: f64 = 1.25;

fn disc_space(degree: u32) -> Result<GalerkinSpace> {
    build_galerkin(1, degree, galerkin_rule(1, degree, 8))
}

/// ‖[T, x⊗x]‖ = ‖(T − ⟨Tx,x⟩)x‖ on random Hermitian T.
pub fn check_commutator_identity(trials: usize, max_dim: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut dims = Vec::new();
    for _ in 0..trials {
        let d = rng.gen_range(2..=max_dim);
        dims.push(d);
        let t = random_hermitian(&mut rng, d);
        let x = random_unit(&mut rng, d);
        let lhs = commutator_rank_one(&t, &x, &x);
        let tx = &t * &x;
        let mean = x.dotc(&tx);
        let rhs = (tx - &x * mean).norm();
        worst = worst.max((lhs - rhs).abs());
    }
    Check::new("operators.commutator_identity", worst <= 1e-10)
        .fit("max_abs_error", worst)
        .fit("trials", trials as f64)
        .fit("max_dim", dims.iter().cloned().max().unwrap_or(0) as f64)
}

/// |⟨Tx,x⟩ − ⟨Ty,y⟩| ≤ ‖[T,x⊗y]‖ + ‖[T,x⊗x]‖ + ‖[T,y⊗y]‖.
pub fn check_berezin_commutator_bound(trials: usize, max_dim: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let d = rng.gen_range(2..=max_dim);
        let t = random_hermitian(&mut rng, d);
        let x = random_unit(&mut rng, d);
        let y = random_unit(&mut rng, d);
        let lhs = (x.dotc(&(&t * &x)) - y.dotc(&(&t * &y))).norm();
        let rhs = commutator_rank_one(&t, &x, &y) + commutator_rank_one(&t, &x, &x) + commutator_rank_one(&t, &y, &y);
        worst = worst.min(rhs - lhs);
    }
    Check::new("operators.berezin_commutator_bound", worst >= -1e-12).fit("min_margin", worst)
}

/// T_1 = I on the disc and the ball, and the disc T_{|w|²} diagonal (k+1)/(k+2).
pub fn check_toeplitz_basics(degree: u32) -> Check {
    let run = || -> Result<(f64, f64, f64)> {
        let s = disc_space(degree)?;
        let d = s.dim();
        let one = toeplitz_matrix(&s, &|_| C::new(1.0, 0.0));
        let e1 = (one.m - DMatrix::identity(d, d)).camax();
        let t = toeplitz_matrix(&s, &|z| C::new(z[0].norm_sqr(), 0.0));
        let mut e2 = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { (i as f64 + 1.0) / (i as f64 + 2.0) } else { 0.0 };
                e2 = e2.max((t.m[(i, j)] - want).norm());
            }
        }
        let b = build_galerkin(2, 4, galerkin_rule(2, 4, 0))?;
        let db = b.dim();
        let oneb = toeplitz_matrix(&b, &|_| C::new(1.0, 0.0));
        let e3 = (oneb.m - DMatrix::identity(db, db)).camax();
        Ok((e1, e2, e3))
    };
    match run() {
        Ok((e1, e2, e3)) => Check::new("operators.toeplitz_basics", e1 <= 1e-8 && e3 <= 1e-8 && e2 <= 1e-8)
            .fit("identity_error_disc", e1)
            .fit("identity_error_ball2", e3)
            .fit("radial_diagonal_error", e2),
        Err(e) => Check::from_error("operators.toeplitz_basics", &e),
    }
}

/// Separated orbit-lattice points on the disc inside the truncation resolution of `s`.
fn resolved_lattice(s: &GalerkinSpace, a: f64, level: f64) -> Vec<Point> {
    let rmax = s.resolution_radius(level);
    OrbitLattice::disc(a, rmax.atanh())
        .points(rmax.atanh())
}

fn unimodular<R: Rng + ?Sized>(rng: &mut R) -> C {
    C::from_polar(1.0, std::f64::consts::TAU * rng.gen::<f64>())
}

/// ε(δ) = sup ‖Σ c k_z⊗k_z − Σ c k_{φ'(z)}⊗k_{ψ'(z)}‖ / sup|c| for perturbations with
/// d ≤ δ; ε must decrease with δ.
pub fn perturbation_profile(deltas: &[f64], trials: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    let s = disc_space(24)?;
    let pts = resolved_lattice(&s, 0.5, 0.999);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // fixed draws reused at every δ: directions and fractions of the radius
    let draws: Vec<(Vec<C>, Vec<(C, f64, C, f64)>)> = (0..trials)
        .map(|_| {
            let c: Vec<C> = pts.iter().map(|_| unimodular(&mut rng)).collect();
            let moves = pts
                .iter()
                .map(|_| (unimodular(&mut rng), rng.gen::<f64>(), unimodular(&mut rng), rng.gen::<f64>()))
                .collect();
            (c, moves)
        })
        .collect();
    let base_terms = |c: &[C]| -> Vec<(C, Point, Point)> {
        pts.iter().zip(c).map(|(z, &cz)| (cz, z.clone(), z.clone())).collect()
    };
    let mut out = Vec::new();
    for &delta in deltas {
        let mut eps = 0.0f64;
        for (c, moves) in &draws {
            let base = discrete_sum_matrix(&s, &base_terms(c));
            let moved: Vec<(C, Point, Point)> = pts
                .iter()
                .zip(c)
                .zip(moves)
                .map(|((z, &cz), &(u1, f1, u2, f2))| {
                    let p = Point(ball_automorphism(z.as_slice(), &[u1 * (delta * f1).tanh()]));
                    let q = Point(ball_automorphism(z.as_slice(), &[u2 * (delta * f2).tanh()]));
                    (cz, p, q)
                })
                .collect();
            let pert = discrete_sum_matrix(&s, &moved);
            eps = eps.max(op_norm(&(base.m - pert.m)));
        }
        out.push((delta, eps));
    }
    Ok(out)
}

pub fn check_perturbation_monotone(deltas: &[f64], trials: usize, seed: u64) -> Check {
    let name = "operators.perturbation_continuity";
    match perturbation_profile(deltas, trials, seed) {
        Ok(rows) => {
            let mut sorted = rows.clone();
            sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
            let mono = sorted.windows(2).all(|w| w[1].1 <= w[0].1);
            Check::new(name, mono && sorted.iter().all(|r| r.1.is_finite()))
                .fit("epsilon_smallest_delta", sorted.last().map(|r| r.1).unwrap_or(f64::NAN))
                .witness(rows)
        }
        Err(e) => Check::from_error(name, &e),
    }
}

/// ‖Σ c_z k_z ⊗ e_z‖ for growing orbit lattices; the norm saturates.
pub fn check_discrete_sum_bound(seed: u64) -> Check {
    let name = "operators.discrete_sum_bound";
    let run = || -> Result<Vec<(usize, f64)>> {
        let lat = OrbitLattice::disc(0.5, 8.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut shell_d: Vec<f64> = lat.shells.iter().map(|s| s.0).collect();
        shell_d.dedup();
        for &dm in &shell_d {
            let pts = lat.points(dm);
            if pts.len() > 900 {
                break;
            }
            let c: Vec<C> = pts.iter().map(|_| unimodular(&mut rng)).collect();
            // ‖Σ c_z k_z⊗e_z‖² is the top eigenvalue of the weighted Gram matrix, exact on the disc
            let g = DMatrix::from_fn(pts.len(), pts.len(), |i, j| {
                let (z, w) = (pts[i].0[0], pts[j].0[0]);
                let k = (1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr()) / (C::new(1.0, 0.0) - z * w.conj()).powi(2);
                c[i].conj() * c[j] * k.conj()
            });
            let top = g.symmetric_eigen().eigenvalues.iter().cloned().fold(0.0, f64::max);
            rows.push((pts.len(), top.sqrt()));
        }
        Ok(rows)
    };
    match run() {
        Ok(rows) => {
            let c = rows.iter().map(|r| r.1).fold(0.0, f64::max);
            let first_multi = rows.iter().find(|r| r.0 > 1).map(|r| r.1).unwrap_or(c);
            Check::new(name, rows.len() >= 3 && c.is_finite() && c <= 2.0 * first_multi.max(1.0))
                .fit("C", c)
                .witness(rows)
        }
        Err(e) => Check::from_error(name, &e),
    }
}

/// ‖T_φ − Σ c k_z⊗k_z‖ for φ = Σ c χ_{D(z,δ)}/μ̃(D(z,δ)) as δ shrinks.
pub fn averaged_toeplitz_profile(deltas: &[f64], seed: u64) -> Result<Vec<(f64, f64)>> {
    let s = disc_space(20)?;
    let pts = resolved_lattice(&s, 1.0, 0.999);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<C> = pts.iter().map(|_| unimodular(&mut rng)).collect();
    let terms: Vec<(C, Point, Point)> = pts.iter().zip(&c).map(|(z, &cz)| (cz, z.clone(), z.clone())).collect();
    let target = discrete_sum_matrix(&s, &terms).m;
    let local = BallQuadrature::new(1, BallRuleSpec { radial: 10, angular: 24 });
    let d = s.dim();
    let mut out = Vec::new();
    for &delta in deltas {
        let rho = delta.tanh();
        let mut t_phi = DMatrix::zeros(d, d);
        for (z, &cz) in pts.iter().zip(&c) {
            // μ̃ = K dv is invariant, so the average over D(z,δ) pulls back to B(0, tanh δ)
            let mut acc = DMatrix::zeros(d, d);
            let mut mass = 0.0;
            for (p, w) in local.points.iter().zip(&local.weights) {
                let zeta = [p.0[0] * rho];
                let wt = w / (1.0 - zeta[0].norm_sqr()).powi(2);
                let img = ball_automorphism(z.as_slice(), &zeta);
                let k = s.kernel_vector(&img);
                acc += rank_one(&k, &k) * C::new(wt, 0.0);
                mass += wt;
            }
            t_phi += acc * (cz / mass);
        }
        out.push((delta, op_norm(&(t_phi - &target))));
    }
    Ok(out)
}

pub fn check_averaged_toeplitz(seed: u64) -> Check {
    let name = "operators.averaged_toeplitz";
    match averaged_toeplitz_profile(&[0.4, 0.2, 0.1, 0.05], seed) {
        Ok(rows) => {
            let mono = rows.windows(2).all(|w| w[1].1 <= w[0].1);
            let last = rows.last().map(|r| r.1).unwrap_or(f64::NAN);
            Check::new(name, mono && last <= 0.25 * rows[0].1)
                .fit("gap_smallest_delta", last)
                .witness(rows)
        }
        Err(e) => Check::from_error(name, &e),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompactnessScan {
    pub label: String,
    pub rows: Vec<CompactnessReport>,
}

/// Smooth bump supported in {|w|² < 1/2}, modulated to break rotation symmetry.
pub fn interior_bump(z: &[C]) -> C {
    let s = 2.0 * cplx::norm_sq(z);
    if s >= 1.0 {
        return C::new(0.0, 0.0);
    }
    let b = (1.0 - 1.0 / (1.0 - s * s)).exp();
    C::new(b * (1.0 + 0.5 * z[0].re), 0.0)
}

/// Compactness tails over a degree scan for the operator built by `make`.
pub fn compactness_scan(
    label: &str,
    degrees: &[u32],
    make: &dyn Fn(&GalerkinSpace) -> OperatorMatrix,
    seed: u64,
) -> Result<CompactnessScan> {
    let mut rows = Vec::new();
    for &n in degrees {
        let s = disc_space(n)?;
        let a = make(&s);
        let grid = BoundaryGrid::for_space(&s, 6, 16, seed);
        rows.push(compactness_report(&s, &a, &grid, &[1.0, 2.0])?);
    }
    Ok(CompactnessScan {
        label: label.into(),
        rows,
    })
}

/// Tails must not increase by more than `noise` relative.
fn decreasing(xs: &[f64], noise: f64) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0] * (1.0 + noise) + 1e-15) && xs.last() < xs.first()
}

pub fn check_compactness(degrees: &[u32], seed: u64) -> (Check, Vec<CompactnessScan>) {
    let name = "operators.compactness_proxy";
    let run = || -> Result<(Vec<CompactnessScan>, f64)> {
        let bump = compactness_scan(
            "bump",
            degrees,
            &|s| {
                let mut t = toeplitz_matrix(s, &interior_bump);
                t.label = "T_bump".into();
                t
            },
            seed,
        )?;
        let rank = compactness_scan(
            "k0_rank_one",
            degrees,
            &|s| {
                let k = s.kernel_vector(&[C::new(0.0, 0.0)]);
                OperatorMatrix::new(s, "k0xk0", rank_one(&k, &k))
            },
            seed,
        )?;
        let s = disc_space(*degrees.last().unwrap_or(&10))?;
        let grid = BoundaryGrid::for_space(&s, 6, 16, seed);
        let id = compactness_report(&s, &OperatorMatrix::identity(&s), &grid, &[1.0, 2.0])?;
        Ok((vec![bump, rank], id.berezin_tail))
    };
    match run() {
        Ok((scans, id_tail)) => {
            let mut ok = id_tail >= 0.99;
            let mut c = Check::new(name, true).fit("identity_berezin_tail", id_tail);
            for sc in &scans {
                let b: Vec<f64> = sc.rows.iter().map(|r| r.berezin_tail).collect();
                let o: Vec<f64> = sc.rows.iter().map(|r| r.offdiag_tail).collect();
                let v: Vec<f64> = sc.rows.iter().map(|r| r.sv_tail).collect();
                let sv_ok = decreasing(&v, 0.1) || v.iter().all(|x| *x <= 1e-12);
                ok &= decreasing(&b, 0.1) && decreasing(&o, 0.1) && sv_ok;
                c = c
                    .fit(&format!("{}_berezin_tail_last", sc.label), *b.last().unwrap_or(&f64::NAN))
                    .fit(&format!("{}_offdiag_tail_last", sc.label), *o.last().unwrap_or(&f64::NAN))
                    .fit(&format!("{}_sv_tail_last", sc.label), *v.last().unwrap_or(&f64::NAN));
            }
            c.passed = ok;
            (c.witness(&scans), scans)
        }
        Err(e) => (Check::from_error(name, &e), Vec::new()),
    }
}

/// Disjoint angular sectors of the disc, smoothed inside each sector.
pub fn sector_symbols(l: usize) -> Vec<Box<dyn Fn(&[C]) -> C + Sync + Send>> {
    (0..l)
        .map(|k| {
            let w = std::f64::consts::TAU / l as f64;
            let lo = -std::f64::consts::PI + w * k as f64;
            Box::new(move |z: &[C]| {
                let th = z[0].arg();
                let x = (th - lo) / w;
                if (0.0..1.0).contains(&x) {
                    C::new((std::f64::consts::PI * x).sin().powi(2) * z[0].norm_sqr(), 0.0)
                } else {
                    C::new(0.0, 0.0)
                }
            }) as Box<dyn Fn(&[C]) -> C + Sync + Send>
        })
        .collect()
}

/// Split witnesses for ℓ ∈ ls and `count` random A each.
pub fn check_offdiag_split(ls: &[usize], count: usize, seed: u64) -> Check {
    let name = "operators.offdiag_split";
    let run = || -> Result<(usize, usize, f64, Vec<SplitWitness>)> {
        let s = disc_space(8)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut failures = 0;
        let mut total = 0;
        let mut slack = f64::INFINITY;
        let mut examples = Vec::new();
        for &l in ls {
            let fs = sector_symbols(l);
            let ts: Vec<DMatrix<C>> = fs.iter().map(|f| toeplitz_matrix(&s, f.as_ref()).m).collect();
            for i in 0..count {
                let a = random_matrix(&mut rng, s.dim());
                total += 1;
                match offdiag_split_search(&a, &ts) {
                    Ok(w) => {
                        if w.lhs > 0.0 {
                            slack = slack.min(w.rhs / w.lhs);
                        }
                        if i == 0 {
                            examples.push(w);
                        }
                    }
                    Err(_) => failures += 1,
                }
            }
        }
        Ok((failures, total, slack, examples))
    };
    match run() {
        Ok((fail, total, slack, ex)) => Check::new(name, fail == 0)
            .fit("failures", fail as f64)
            .fit("configurations", total as f64)
            .fit("min_rhs_over_lhs", slack)
            .witness(ex),
        Err(e) => Check::from_error(name, &e),
    }
}

/// ‖(f − f(z)) k_z^{(N)}‖ along the boundary grid for a vanishing-oscillation symbol.
pub fn localization_profile(f: &(dyn Fn(&[C]) -> f64 + Sync), degree: u32, seed: u64) -> Result<Vec<(f64, f64)>> {
    let s = disc_space(degree)?;
    let grid = BoundaryGrid::for_space(&s, 8, 8, seed);
    let mut out = Vec::new();
    for (pts, rad) in grid.shells.iter().zip(&grid.radii) {
        let mut sup = 0.0f64;
        for z in pts {
            let fz = f(z.as_slice());
            let g = |w: &[C]| C::new((f(w) - fz).powi(2), 0.0);
            let t = toeplitz_matrix(&s, &g);
            let k = s.kernel_vector(z.as_slice());
            sup = sup.max(k.dotc(&(&t.m * &k)).re.max(0.0).sqrt());
        }
        out.push((*rad, sup));
    }
    Ok(out)
}

pub fn check_localization(seed: u64) -> Check {
    let name = "operators.vo_localization";
    let f = |z: &[C]| 1.0 - cplx::norm_sq(z);
    match localization_profile(&f, 40, seed) {
        Ok(rows) => {
            let tail: Vec<f64> = rows.iter().skip(rows.len() / 2).map(|r| r.1).collect();
            let ok = decreasing(&tail, 0.1) && rows.last().map(|r| r.1).unwrap_or(1.0) <= 0.5 * rows.iter().map(|r| r.1).fold(0.0, f64::max);
            Check::new(name, ok).witness(rows)
        }
        Err(e) => Check::from_error(name, &e),
    }
}

/// Random pairs on the disc with d(z, w) ≤ k.
fn pairs_within(k: f64, count: usize, seed: u64) -> Vec<(Point, Point, f64)> {
    let disc = DomainSpec::disc();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let z = disc.random_point_log_depth(&mut rng, 1e-6, 1.0);
            let t = k * rng.gen::<f64>();
            let zeta = [C::from_polar(t.tanh(), std::f64::consts::TAU * rng.gen::<f64>())];
            let w = Point(ball_automorphism(z.as_slice(), &zeta));
            let d = ball_distance(z.as_slice(), w.as_slice());
            (z, w, d)
        })
        .collect()
}

/// |f(z) − f(w)| ≤ (k+1) diff(f) for d(z,w) ≤ k.
pub fn check_telescoping(seed: u64) -> Check {
    let name = "operators.oscillation_telescoping";
    let disc = DomainSpec::disc();
    let run = || -> Result<f64> {
        let g = Cutoff::new(&disc, CutoffKind::Lambda, 0.5, 0.5)?;
        let symbols: Vec<Box<dyn Fn(&[C]) -> f64 + Sync>> = vec![
            Box::new(move |z: &[C]| g.eval(&DomainSpec::disc(), z)),
            Box::new(|z: &[C]| (1.0 - cplx::norm_sq(z)).sqrt()),
        ];
        let mut worst = 0.0f64;
        for f in &symbols {
            let diff = oscillation_profile(&disc, f.as_ref(), 16, 200, seed)?.diff;
            for k in [2.0, 3.0, 4.0] {
                for (z, w, _) in pairs_within(k, 2000, seed + k as u64) {
                    let lhs = (f(z.as_slice()) - f(w.as_slice())).abs();
                    worst = worst.max(lhs / ((k + 1.0) * diff * DIFF_SLACK));
                }
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(w) => Check::new(name, w <= 1.0).fit("max_ratio", w).fit("slack", DIFF_SLACK),
        Err(e) => Check::from_error(name, &e),
    }
}

/// commutator_norm / diff over a family of Lipschitz cutoffs.
pub fn check_commutator_vs_diff(seed: u64) -> Check {
    let name = "operators.commutator_vs_diff";
    let disc = DomainSpec::disc();
    let run = || -> Result<Vec<(f64, f64, f64)>> {
        let s = disc_space(10)?;
        let big = enlarged_space(&s, 2)?;
        let mut rows = Vec::new();
        for delta in [1.0, 0.5, 0.25, 0.125] {
            let g = Cutoff::new(&disc, CutoffKind::Lambda, 0.5, delta)?;
            let f = |z: &[C]| g.eval(&disc, z);
            let diff = oscillation_profile(&disc, &f, 12, 200, seed)?.diff;
            let cf = |z: &[C]| C::new(f(z), 0.0);
            let hc = hankel_and_commutator(&s, &big, &cf);
            rows.push((delta, diff, hc.commutator_norm));
        }
        Ok(rows)
    };
    match run() {
        Ok(rows) => {
            let ratios: Vec<f64> = rows.iter().filter(|r| r.1 > 0.0).map(|r| r.2 / (r.1 * DIFF_SLACK)).collect();
            let c = ratios.iter().cloned().fold(0.0, f64::max);
            Check::new(name, c.is_finite() && !ratios.is_empty()).soft().fit("C", c).witness(rows)
        }
        Err(e) => Check::from_error(name, &e).soft(),
    }
}

/// Tents in arctanh|z| with supports more than 1 apart: diff of the sum ≤ sup of the diffs.
pub fn check_disjoint_shells(seed: u64) -> Check {
    let name = "operators.disjoint_shells";
    let disc = DomainSpec::disc();
    let centers = [1.5, 4.5, 7.5];
    let tent = |c: f64, z: &[C]| (1.0 - (cplx::norm(z).atanh() - c).abs()).max(0.0);
    let run = || -> Result<(f64, f64)> {
        let mut sup_k = 0.0f64;
        for &c in &centers {
            let f = move |z: &[C]| tent(c, z);
            sup_k = sup_k.max(oscillation_profile(&disc, &f, 24, 200, seed)?.diff);
        }
        // pairs that cross the gap between consecutive supports
        let mut lhs = 0.0f64;
        for (z, w, d) in pairs_within(1.0, 20000, seed + 7) {
            if d > 1.0 || -disc.r(z.as_slice()) < 1e-12 {
                continue;
            }
            let h = |x: &[C]| centers.iter().map(|&c| tent(c, x)).sum::<f64>();
            lhs = lhs.max((h(z.as_slice()) - h(w.as_slice())).abs());
        }
        Ok((lhs, sup_k))
    };
    match run() {
        Ok((lhs, sup_k)) => Check::new(name, lhs <= sup_k * DIFF_SLACK)
            .fit("diff_sum", lhs)
            .fit("sup_diff_parts", sup_k),
        Err(e) => Check::from_error(name, &e),
    }
}

/// ‖H_{w̄}‖ on the disc against the dense SVD of the explicitly computed block.
pub fn check_hankel_oracle() -> Check {
    let name = "operators.hankel_svd";
    let run = || -> Result<(f64, f64)> {
        let s = disc_space(8)?;
        let big = enlarged_space(&s, 2)?;
        let hc = hankel_and_commutator(&s, &big, &|z| z[0].conj());
        // images of e_k are orthogonal with norms 1/√((k+1)(k+2))
        Ok((hc.hankel_norm, 0.5f64.sqrt()))
    };
    match run() {
        Ok((got, want)) => Check::new(name, (got - want).abs() <= 1e-8)
            .fit("hankel_norm", got)
            .fit("closed_form", want),
        Err(e) => Check::from_error(name, &e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_support() {
        assert_eq!(interior_bump(&[C::new(0.75, 0.0)]).re, 0.0);
        assert!(interior_bump(&[C::new(0.1, 0.0)]).re > 0.5);
    }

    #[test]
    fn sectors_are_disjoint() {
        let fs = sector_symbols(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let z = [C::from_polar(rng.gen::<f64>(), 7.0 * rng.gen::<f64>())];
            let nz = fs.iter().filter(|f| f(&z).norm() > 0.0).count();
            assert!(nz <= 1);
        }
    }
}

/// Spectrum of T_h for the partition weight of a disc cover lies in [1 − 10⁻⁶, 3N₀ + 1].
pub fn check_partition_h(cover: &crate::covering::Cover, degree: u32) -> Check {
    let name = "operators.partition_h";
    let space = match build_galerkin(cover.n, degree, galerkin_rule(cover.n, degree, 8)) {
        Ok(s) => s,
        Err(e) => return Check::from_error(name, &e),
    };
    let upper = 3.0 * cover.n0 as f64 + 1.0;
    match partition_toeplitz_h(&space, &|z: &[C]| C::new(cover.h_at_point(z), 0.0), upper, 1e-6) {
        Ok(p) => Check::new(name, true)
            .fit("eig_min", p.min_eig)
            .fit("eig_max", p.max_eig)
            .fit("inv_norm", p.inv_norm)
            .fit("upper", upper),
        Err(e) => Check::from_error(name, &e),
    }
}
