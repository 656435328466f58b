mod common;

use faer::Mat;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{dd_inside, sample_member, singular_values, Cdd, Dd};
use ruelle::ball::{dump, BallMatrix, BallScalar};

fn ball() -> impl Strategy<Value = BallScalar> {
    (-1e3..1e3f64, -1e3..1e3f64, prop_oneof![Just(0.0), 0.0..1e-9f64, 0.0..1e-2f64])
        .prop_map(|(re, im, r)| BallScalar::try_new(Complex64::new(re, im), r).unwrap())
}

/// A point strictly inside `b`, given polar coordinates in [0, 1).
fn member(b: BallScalar, s: f64, t: f64) -> Complex64 {
    b.mid + Complex64::from_polar(0.999 * b.rad * s, std::f64::consts::TAU * t)
}

proptest! {
    #[test]
    fn add_sub_mul_enclose(a in ball(), b in ball(), s in (0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64)) {
        let x = Cdd::from_c(member(a, s.0, s.1));
        let y = Cdd::from_c(member(b, s.2, s.3));
        let sum = a + b;
        let diff = a - b;
        let prod = a * b;
        prop_assert!(dd_inside(sum.mid, sum.rad, x.add(y)));
        prop_assert!(dd_inside(diff.mid, diff.rad, x.sub(y)));
        prop_assert!(dd_inside(prod.mid, prod.rad, x.mul(y)));
    }

    #[test]
    fn division_encloses(a in ball(), b in ball(), s in (0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64)) {
        prop_assume!(b.abs_lower() > 1e-3);
        let q = a.div(b).unwrap();
        let x = Cdd::from_c(member(a, s.0, s.1));
        let y = Cdd::from_c(member(b, s.2, s.3));
        // x / y = x conj(y) / |y|^2
        let n = y.norm_sqr();
        let num = x.mul(y.conj());
        let exact = Cdd { re: num.re.div(n), im: num.im.div(n) };
        prop_assert!(dd_inside(q.mid, q.rad, exact));
    }

    #[test]
    fn exp_and_powers_enclose(re in -20.0..20.0f64, im in -20.0..20.0f64, r in 0.0..1e-6f64, s in 0.0..1.0f64, t in 0.0..1.0f64, n in -6i64..7) {
        let a = BallScalar::try_new(Complex64::new(re, im), r).unwrap();
        let x = member(a, 0.5 * s, t);
        let e = a.exp().unwrap();
        prop_assert!(e.contains(x.exp()), "{e} vs {}", x.exp());
        let small = BallScalar::try_new(Complex64::new(re, im) / 20.0, r).unwrap();
        prop_assume!(small.abs_lower() > 0.1);
        let y = member(small, 0.5 * s, t);
        let p = small.powi(n).unwrap();
        let mut exact = Cdd::from_c(Complex64::new(1.0, 0.0));
        let step = if n >= 0 { Cdd::from_c(y) } else {
            let c = Cdd::from_c(y);
            let m = c.norm_sqr();
            Cdd { re: c.re.div(m), im: c.im.neg().div(m) }
        };
        for _ in 0..n.unsigned_abs() {
            exact = exact.mul(step);
        }
        prop_assert!(dd_inside(p.mid, p.rad, exact), "{p} {:?}", exact.to_c());
    }

    #[test]
    fn matmul_encloses(seed in any::<u64>(), n in 1usize..8, k in 1usize..8, m in 1usize..8, rad in prop_oneof![Just(0.0), 0.0..1e-6f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = BallMatrix::new(common::random_matrix(n, k, &mut rng), Mat::from_fn(n, k, |_, _| rad)).unwrap();
        let b = BallMatrix::new(common::random_matrix(k, m, &mut rng), Mat::from_fn(k, m, |_, _| rad)).unwrap();
        let p = a.matmul(&b).unwrap();
        let x = sample_member(&a, &mut rng);
        let y = sample_member(&b, &mut rng);
        for i in 0..n {
            for j in 0..m {
                let exact = (0..k).fold(Cdd::default(), |s, l| s.add(Cdd::from_c(x[(i, l)]).mul(Cdd::from_c(y[(l, j)]))));
                prop_assert!(dd_inside(p.centers()[(i, j)], p.radii()[(i, j)], exact));
            }
        }
    }

    #[test]
    fn spectral_norm_is_an_upper_bound(seed in any::<u64>(), n in 1usize..12, rad in 0.0..1e-3f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = BallMatrix::new(common::random_matrix(n, n, &mut rng), Mat::from_fn(n, n, |_, _| rad)).unwrap();
        let bound = a.spectral_norm_upper(None).unwrap();
        let weighted = a.spectral_norm_upper(Some(&a.perron_weights(20))).unwrap();
        for _ in 0..4 {
            let x = sample_member(&a, &mut rng);
            let top = singular_values(&x)[0];
            prop_assert!(top <= bound && top <= weighted, "{top} {bound} {weighted}");
        }
    }

    #[test]
    fn dumps_round_trip(seed in any::<u64>(), n in 1usize..6, m in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = BallMatrix::new(common::random_matrix(n, m, &mut rng), Mat::from_fn(n, m, |i, j| (i * 7 + j) as f64 * 1e-17)).unwrap();
        let meta = vec![("k".to_string(), "v".to_string())];
        let mut text = Vec::new();
        dump::write_text(&mut text, &a, &meta).unwrap();
        let (back, meta_back) = dump::read_text(&text[..]).unwrap();
        prop_assert_eq!(back.hash_hex(), a.hash_hex());
        prop_assert_eq!(&meta_back, &meta);
        let mut bin = Vec::new();
        dump::write_binary(&mut bin, &a, &meta).unwrap();
        let (back, _) = dump::read_binary(&bin[..]).unwrap();
        prop_assert_eq!(back.hash_hex(), a.hash_hex());
    }
}

#[test]
fn dd_oracle_sanity() {
    let third = Dd::new(1.0).div(Dd::new(3.0));
    let back = third.mul(Dd::new(3.0)).sub(Dd::new(1.0));
    assert!(back.to_f64().abs() < 1e-31);
    let two = Dd::new(2.0).sqrt();
    assert!(two.mul(two).sub(Dd::new(2.0)).to_f64().abs() < 1e-30);
}
