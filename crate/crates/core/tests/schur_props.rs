mod common;

use faer::Mat;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_matrix, resolvent_norm, sample_member};
use ruelle::ball::{BallMatrix, BallScalar};
use ruelle::schur::{certify_schur, eigenvalue_disks, pseudospectrum_gate, resolvent_transfer};
use ruelle::svd::smallest_sv_lower;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transferred_resolvent_bounds_members(seed in any::<u64>(), n in 2usize..10, rad in prop_oneof![Just(0.0), 0.0..1e-10f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = BallMatrix::new(random_matrix(n, n, &mut rng), Mat::from_fn(n, n, |_, _| rad)).unwrap();
        let cs = certify_schur(&m).unwrap();
        prop_assert!(cs.epsilon < 1e-8, "{}", cs.epsilon);
        let t = cs.t_ball();
        for _ in 0..4 {
            let z = Complex64::from_polar(rng.gen_range(0.0..3.0), rng.gen_range(0.0..std::f64::consts::TAU));
            let Ok(s) = smallest_sv_lower(&t.shifted_negation(BallScalar::exact(z)).unwrap()) else { continue };
            if !(s > 0.0) {
                continue;
            }
            let r_t = 1.0 / s * (1.0 + 1e-15);
            let Ok(bound) = resolvent_transfer(&cs, z, r_t) else { continue };
            let oracle = resolvent_norm(&sample_member(&m, &mut rng), z);
            prop_assert!(oracle <= bound, "{oracle} > {bound}");
        }
    }

    #[test]
    fn gate_is_monotone(seed in any::<u64>(), n in 2usize..8, scale in 1.0..1e6f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = BallMatrix::from_exact(random_matrix(n, n, &mut rng));
        let cs = certify_schur(&m).unwrap();
        let d0 = 1e-6;
        let a = pseudospectrum_gate(&cs, d0).unwrap();
        let b = pseudospectrum_gate(&cs, d0 * scale).unwrap();
        prop_assert!(a <= b);
        prop_assert!(a <= d0 / 4.0);
        prop_assert!(pseudospectrum_gate(&cs, 0.0).is_err());
    }
}

#[test]
fn triangular_diagonal_matches_known_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 6;
    let eig: Vec<Complex64> = (0..n).map(|k| Complex64::new(k as f64 * 0.3, 0.1 * k as f64)).collect();
    let q = {
        // a unitary from the QR of a random matrix
        let a = random_matrix(n, n, &mut rng);
        a.qr().compute_Q()
    };
    let d = Mat::from_fn(n, n, |i, j| if i == j { eig[i] } else if j > i { Complex64::new(0.2, 0.0) } else { Complex64::new(0.0, 0.0) });
    let m = &q * &d * q.adjoint();
    let cs = certify_schur(&BallMatrix::from_exact(m)).unwrap();
    let disks = eigenvalue_disks(&cs);
    for e in &eig {
        assert!(disks.iter().any(|b| (b.mid - e).norm() < 1e-10), "{e}");
    }
}
