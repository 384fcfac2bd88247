use imbergman::covering::{cap_gauge, caps_may_meet, collar_distance, ftilde, sample_in_cap, CollarPoint};
use imbergman::gauge::gauge_rho;
use imbergman::lattice::Lattice;
use imbergman::metric::{ball_automorphism, ball_distance};
use imbergman::operators::{commutator_rank_one, random_hermitian, random_unit, OperatorMatrix};
use imbergman::plan::blob_hash;
use imbergman::{DomainSpec, Point, C};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cplx() -> impl Strategy<Value = C> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C::new(a, b))
}

/// Interior point of the unit ball in C^n with |z| ≤ 0.95.
fn ball_point(n: usize) -> impl Strategy<Value = Vec<C>> {
    (prop::collection::vec(cplx(), n), 0.0f64..0.95).prop_map(|(v, t)| {
        let s: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt().max(1e-12);
        v.into_iter().map(|x| x * (t / s)).collect()
    })
}

fn collar(n: usize) -> impl Strategy<Value = CollarPoint> {
    (-3.1f64..3.1, prop::collection::vec(cplx(), n - 1), 0.0f64..0.6, -12.0f64..-1.0).prop_map(|(th, v, r, ld)| {
        let s: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt().max(1e-12);
        let v: Vec<C> = v.into_iter().map(|x| x * (r / s)).collect();
        CollarPoint::boundary(th, &v).with_depth(10f64.powf(ld))
    })
}

fn hyperbolic(z: &[C], w: &[C]) -> f64 {
    let zz: f64 = z.iter().map(|x| x.norm_sqr()).sum();
    let ww: f64 = w.iter().map(|x| x.norm_sqr()).sum();
    hyperbolic_with_depths(z, w, 1.0 - zz, 1.0 - ww)
}

/// arctanh|φ_z(w)| from 1 − |φ_z(w)|² = (1−|z|²)(1−|w|²)/|1−⟨z,w⟩|², kept in the form ½ln((1+φ)²/q).
fn hyperbolic_with_depths(z: &[C], w: &[C], dz: f64, dw: f64) -> f64 {
    let zw: C = z.iter().zip(w).map(|(a, b)| a * b.conj()).sum();
    let q = (dz * dw / (C::new(1.0, 0.0) - zw).norm_sqr()).min(1.0);
    let phi = (1.0 - q).sqrt();
    0.5 * ((1.0 + phi).powi(2) / q).ln()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ball_distance_matches_closed_form(z in ball_point(2), w in ball_point(2)) {
        let d = ball_distance(&z, &w);
        let want = hyperbolic(&z, &w);
        prop_assert!((d - want).abs() <= 1e-8 * (1.0 + want), "{d} vs {want}");
        prop_assert!((d - ball_distance(&w, &z)).abs() <= 1e-9 * (1.0 + d));
    }

    #[test]
    fn ball_distance_triangle(x in ball_point(2), y in ball_point(2), z in ball_point(2)) {
        let (xy, yz, xz) = (ball_distance(&x, &y), ball_distance(&y, &z), ball_distance(&x, &z));
        prop_assert!(xz <= xy + yz + 1e-9 * (1.0 + xy + yz));
    }

    #[test]
    fn automorphism_moves_origin_to_center(z in ball_point(2), w in ball_point(2)) {
        let zero = vec![C::new(0.0, 0.0); 2];
        let img = ball_automorphism(&z, &zero);
        let e: f64 = img.iter().zip(&z).map(|(a, b)| (a - b).norm()).sum();
        prop_assert!(e <= 1e-12);
        // φ_z(w) stays in the ball and d(z, φ_z(w)) = d(0, w)
        let pw = ball_automorphism(&z, &w);
        prop_assert!(pw.iter().map(|x| x.norm_sqr()).sum::<f64>() < 1.0);
        let d0 = ball_distance(&zero, &w);
        prop_assert!((ball_distance(&z, &pw) - d0).abs() <= 1e-6 * (1.0 + d0));
    }

    #[test]
    fn gauge_vanishes_on_diagonal_and_is_nonnegative(z in ball_point(2), w in ball_point(2)) {
        let b = DomainSpec::ball(2);
        prop_assert_eq!(gauge_rho(&b, &z, &z), 0.0);
        let g = gauge_rho(&b, &z, &w);
        let e2: f64 = z.iter().zip(&w).map(|(a, c)| (a - c).norm_sqr()).sum();
        prop_assert!(g >= e2 - 1e-15);
    }

    #[test]
    fn cap_conflict_test_is_symmetric(u in collar(2), v in collar(2), ls in -8.0f64..0.0) {
        let s = 10f64.powf(ls);
        prop_assert_eq!(caps_may_meet(&u.foot(), &v.foot(), s), caps_may_meet(&v.foot(), &u.foot(), s));
    }

    #[test]
    fn cap_samples_meet_the_conflict_test(u in collar(2), v in collar(2), ls in -6.0f64..-1.0, seed in 0u64..1000) {
        let s = 10f64.powf(ls);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (u, v) = (u.foot(), v.foot());
        // a point of Q(u,s) ∩ Q(v,s) forces the necessary test to accept the pair
        for _ in 0..20 {
            let x = sample_in_cap(&mut rng, &u, s);
            prop_assert!(cap_gauge(&u, &x) < s * (1.0 + 1e-9));
            if cap_gauge(&v, &x) < s {
                prop_assert!(caps_may_meet(&u, &v, s));
            }
        }
    }

    #[test]
    fn collar_distance_matches_absolute_coordinates(z in collar(2), w in collar(2)) {
        let (pz, pw) = (z.to_point(), w.to_point());
        let want = hyperbolic_with_depths(&pz.0, &pw.0, z.depth, w.depth);
        let d = collar_distance(&z, &w);
        prop_assert!((d - want).abs() <= 1e-6 * (1.0 + want), "{d} vs {want}");
    }

    #[test]
    fn ftilde_is_a_lipschitz_ramp(m in 53u32..200, x in 0.0f64..30.0, y in 0.0f64..30.0) {
        let (fx, fy) = (ftilde(m, x), ftilde(m, y));
        prop_assert!((0.0..=1.0).contains(&fx));
        let l = m as f64 / 13.0 - 4.0;
        prop_assert!((fx - fy).abs() <= (x - y).abs() / l + 1e-12);
        prop_assert_eq!(ftilde(m, 0.0), 1.0);
    }

    #[test]
    fn commutator_with_rank_one_projection(seed in 0u64..10_000, d in 2usize..45) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_hermitian(&mut rng, d);
        let x = random_unit(&mut rng, d);
        let tx = &t * &x;
        let rhs = (&tx - &x * x.dotc(&tx)).norm();
        prop_assert!((commutator_rank_one(&t, &x, &x) - rhs).abs() <= 1e-10);
    }

    #[test]
    fn operator_bytes_roundtrip(seed in 0u64..1000, d in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_hermitian(&mut rng, d);
        let op = OperatorMatrix { label: "h".into(), n: 1, degree: d as u32 - 1, m };
        let back = OperatorMatrix::from_bytes(&op.sidecar(), &op.to_bytes()).unwrap();
        prop_assert_eq!(&back.m, &op.m);
        prop_assert_eq!(op.to_bytes().len(), 16 * d * d);
    }

    #[test]
    fn lattice_json_roundtrip(pts in prop::collection::vec(ball_point(2), 0..8), a in 0.1f64..2.0, seed in any::<u64>()) {
        let lat = Lattice { a, points: pts.iter().map(|p| Point::from_slice(p)).collect(), seed, region: None };
        prop_assert_eq!(Lattice::from_json(&lat.to_json().unwrap()).unwrap(), lat);
    }

    #[test]
    fn blob_hash_separates_contents(a in prop::collection::vec(any::<u8>(), 0..64), b in prop::collection::vec(any::<u8>(), 0..64)) {
        prop_assert_eq!(blob_hash(&a).len(), 64);
        prop_assert_eq!(blob_hash(&a) == blob_hash(&b), a == b);
    }
}

#[test]
fn empty_blob_hash_matches_sha256_of_header() {
    // sha256("blob 0\0")
    assert_eq!(blob_hash(b""), "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813");
}
