use hyperrigid::barycenter::{barycenter, SolverConfig};
use hyperrigid::dilog::bloch_wigner;
use hyperrigid::hyperbolic::{busemann, distance, exp_map, log_map, BoundaryPoint, HPoint, Isometry};
use hyperrigid::measure::{pushforward, BoundaryMeasure};
use hyperrigid::spd::{psi, psi_max, psi_simplex, SimplexPoint, TraceOneSpd};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A point of the unit ball of dimension `k`, at most `0.95` from the center.
fn ball_point(k: usize) -> impl Strategy<Value = HPoint> {
    (prop::collection::vec(-1.0f64..1.0, k), 0.0f64..0.95).prop_filter_map("zero direction", |(v, r)| {
        let v = DVector::from_vec(v);
        let n = v.norm();
        (n > 1e-3).then(|| HPoint::new(v * (r / n)).unwrap())
    })
}

fn direction(k: usize) -> impl Strategy<Value = BoundaryPoint> {
    prop::collection::vec(-1.0f64..1.0, k)
        .prop_filter_map("zero direction", |v| BoundaryPoint::normalized(DVector::from_vec(v)).ok())
}

fn isometry(k: usize) -> impl Strategy<Value = Isometry> {
    any::<u64>().prop_map(move |s| Isometry::random(k, 2.0, &mut ChaCha8Rng::seed_from_u64(s)))
}

fn simplex(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3f64..1.0, k).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_a_metric_preserved_by_isometries(
        x in ball_point(3), y in ball_point(3), z in ball_point(3), g in isometry(3),
    ) {
        let dxy = distance(&x, &y).unwrap();
        prop_assert!((dxy - distance(&y, &x).unwrap()).abs() <= 1e-10 * (1.0 + dxy));
        prop_assert!(dxy <= distance(&x, &z).unwrap() + distance(&z, &y).unwrap() + 1e-9);
        let moved = distance(&g.act(&x).unwrap(), &g.act(&y).unwrap()).unwrap();
        prop_assert!((moved - dxy).abs() <= 1e-8 * (1.0 + dxy));
    }

    #[test]
    fn busemann_differences_are_one_lipschitz_and_equivariant(
        x in ball_point(3), y in ball_point(3), t in direction(3), g in isometry(3),
    ) {
        let diff = busemann(&x, &t).unwrap() - busemann(&y, &t).unwrap();
        prop_assert!(diff.abs() <= distance(&x, &y).unwrap() + 1e-9);
        // B_θ(x) - B_θ(y) depends only on the horosphere pair, so isometries keep it
        let gt = g.act_boundary(&t).unwrap();
        let moved = busemann(&g.act(&x).unwrap(), &gt).unwrap() - busemann(&g.act(&y).unwrap(), &gt).unwrap();
        prop_assert!((moved - diff).abs() <= 1e-8 * (1.0 + diff.abs()));
    }

    #[test]
    fn exp_inverts_log(x in ball_point(4), y in ball_point(4)) {
        let v = log_map(&x, &y).unwrap();
        prop_assert!((v.norm() - distance(&x, &y).unwrap()).abs() <= 1e-9);
        let back = exp_map(&x, &v).unwrap();
        prop_assert!(distance(&back, &y).unwrap() <= 1e-8);
    }

    #[test]
    fn barycenter_commutes_with_isometries(
        dirs in prop::collection::vec(direction(3), 3..6),
        raw in prop::collection::vec(1.0f64..1.5, 6),
        g in isometry(3),
    ) {
        let total: f64 = raw[..dirs.len()].iter().sum();
        let beta = BoundaryMeasure::atomic(
            dirs.iter().zip(&raw).map(|(d, w)| (w / total, d.clone())).collect(),
        ).unwrap();
        let cfg = SolverConfig::default();
        let b = barycenter(&beta, &cfg).unwrap();
        let moved = pushforward(&beta, |t| g.act_boundary(t)).unwrap();
        let bm = barycenter(&moved, &cfg).unwrap();
        if let (Some(p), Some(q)) = (b.interior(), bm.interior()) {
            prop_assert!(distance(&g.act(p).unwrap(), q).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn psi_is_bounded_by_its_isotropic_value(a3 in simplex(3), a4 in simplex(4), a5 in simplex(5)) {
        for a in [a3, a4, a5] {
            let k = a.len();
            let v = psi_simplex(&SimplexPoint::new(a).unwrap());
            prop_assert!(v <= psi_max(k) + 1e-12, "k = {k}: {v}");
        }
    }

    #[test]
    fn psi_depends_only_on_the_spectrum(a in simplex(3), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = hyperrigid::hyperbolic::random_orthogonal(3, &mut rng);
        let sp = SimplexPoint::new(a.clone()).unwrap();
        let h = TraceOneSpd::from_spectrum(&sp, &q);
        let diag = TraceOneSpd::new(DMatrix::from_diagonal(&DVector::from_vec(a))).unwrap();
        let (x, y) = (psi(&h), psi(&diag));
        prop_assert!((x - y).abs() <= 1e-10 * (1.0 + y));
    }

    #[test]
    fn bloch_wigner_symmetries(re in -4.0f64..4.0, im in -4.0f64..4.0) {
        let z = Complex64::new(re, im);
        prop_assume!(z.norm() > 1e-3 && (z - 1.0).norm() > 1e-3);
        let one = Complex64::new(1.0, 0.0);
        let d = bloch_wigner(z).unwrap();
        prop_assert!((bloch_wigner(one - one / z).unwrap() - d).abs() <= 1e-10);
        prop_assert!((bloch_wigner(z.conj()).unwrap() + d).abs() <= 1e-10);
        prop_assert!(d.abs() <= 1.0149416064096536 + 1e-12);
    }
}
