//! Test-only oracles: double-double arithmetic, a one-sided Jacobi SVD in
//! double-double, and member sampling for ball matrices.
#![allow(dead_code)]

use faer::Mat;
use num_complex::Complex64;
use rand::Rng;
use ruelle::ball::BallMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let r = quick(s, e + t);
        quick(r.hi, r.lo + f)
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        quick(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::new(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::new(q2)));
        let q3 = r.hi / o.hi;
        quick(q1, q2).add(Dd::new(q3))
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let x = self.hi.sqrt();
        let r = self.sub(Dd::new(x).mul(Dd::new(x)));
        quick(x, r.hi / (2.0 * x))
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            self.neg()
        } else {
            self
        }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub fn from_c(z: Complex64) -> Self {
        Cdd { re: Dd::new(z.re), im: Dd::new(z.im) }
    }

    pub fn add(self, o: Cdd) -> Cdd {
        Cdd { re: self.re.add(o.re), im: self.im.add(o.im) }
    }

    pub fn sub(self, o: Cdd) -> Cdd {
        Cdd { re: self.re.sub(o.re), im: self.im.sub(o.im) }
    }

    pub fn mul(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re.mul(o.re).sub(self.im.mul(o.im)),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    pub fn conj(self) -> Cdd {
        Cdd { re: self.re, im: self.im.neg() }
    }

    pub fn scale(self, s: Dd) -> Cdd {
        Cdd { re: self.re.mul(s), im: self.im.mul(s) }
    }

    pub fn norm_sqr(self) -> Dd {
        self.re.mul(self.re).add(self.im.mul(self.im))
    }

    pub fn to_c(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

/// Is the exact value `z` within distance `rad` of `mid`? Decided in
/// double-double, independent of the library's rounding helpers.
pub fn dd_inside(mid: Complex64, rad: f64, z: Cdd) -> bool {
    let d = z.sub(Cdd::from_c(mid)).norm_sqr();
    let r2 = Dd::new(rad).mul(Dd::new(rad));
    d.sub(r2).hi <= 0.0
}

/// Singular values (descending) of a dense matrix given in double-double,
/// by one-sided Jacobi rotations.
pub fn singular_values_dd(rows: usize, cols: usize, entry: impl Fn(usize, usize) -> Cdd) -> Vec<f64> {
    let mut a: Vec<Vec<Cdd>> = (0..cols).map(|j| (0..rows).map(|i| entry(i, j)).collect()).collect();
    let norm2 = |c: &[Cdd]| c.iter().fold(Dd::ZERO, |s, x| s.add(x.norm_sqr()));
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = norm2(&a[p]);
                let beta = norm2(&a[q]);
                let gamma = a[p].iter().zip(&a[q]).fold(Cdd::default(), |s, (x, y)| s.add(x.conj().mul(*y)));
                let g = gamma.norm_sqr().sqrt();
                if g.hi == 0.0 || g.hi <= 1e-31 * (alpha.hi * beta.hi).sqrt() {
                    continue;
                }
                rotated = true;
                // rotate column q by the phase of gamma so that <a_p, a_q> is real
                let phase = gamma.conj().scale(Dd::new(1.0).div(g));
                for x in a[q].iter_mut() {
                    *x = x.mul(phase);
                }
                let zeta = beta.sub(alpha).div(g.add(g));
                let root = Dd::new(1.0).add(zeta.mul(zeta)).sqrt();
                let mut t = Dd::new(1.0).div(zeta.abs().add(root));
                if zeta.hi < 0.0 {
                    t = t.neg();
                }
                let c = Dd::new(1.0).div(Dd::new(1.0).add(t.mul(t)).sqrt());
                let s = c.mul(t);
                for i in 0..rows {
                    let xp = a[p][i];
                    let xq = a[q][i];
                    a[p][i] = xp.scale(c).sub(xq.scale(s));
                    a[q][i] = xp.scale(s).add(xq.scale(c));
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = a.iter().map(|c| norm2(c).sqrt().to_f64()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

pub fn singular_values(m: &Mat<Complex64>) -> Vec<f64> {
    singular_values_dd(m.nrows(), m.ncols(), |i, j| Cdd::from_c(m[(i, j)]))
}

/// `||(z - m)^{-1}||_2` with the shift formed exactly in double-double.
pub fn resolvent_norm(m: &Mat<Complex64>, z: Complex64) -> f64 {
    let n = m.nrows();
    let sv = singular_values_dd(n, n, |i, j| {
        let e = Cdd::from_c(m[(i, j)]).conj().conj();
        if i == j {
            Cdd::from_c(z).sub(e)
        } else {
            Cdd::default().sub(e)
        }
    });
    1.0 / sv[n - 1]
}

/// A random member of the ball matrix, strictly inside every entry disk.
pub fn sample_member(b: &BallMatrix, rng: &mut impl Rng) -> Mat<Complex64> {
    Mat::from_fn(b.nrows(), b.ncols(), |i, j| {
        let c = b.centers()[(i, j)];
        let r = b.radii()[(i, j)] * 0.999;
        let rho = r * rng.gen::<f64>().sqrt();
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        c + Complex64::from_polar(rho, theta)
    })
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Mat<Complex64> {
    Mat::from_fn(rows, cols, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Can every point be assigned to a distinct interval containing it?
/// Greedy by smallest upper end is optimal for points against intervals.
pub fn matches_intervals(points: &[f64], intervals: &[(f64, f64)]) -> bool {
    let mut pts = points.to_vec();
    pts.sort_by(f64::total_cmp);
    let mut used = vec![false; intervals.len()];
    for p in pts {
        let pick = intervals
            .iter()
            .enumerate()
            .filter(|(k, (lo, hi))| !used[*k] && *lo <= p && p <= *hi)
            .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            .map(|(k, _)| k);
        match pick {
            Some(k) => used[k] = true,
            None => return false,
        }
    }
    true
}
