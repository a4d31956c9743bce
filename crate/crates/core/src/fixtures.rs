//! Seeded random test systems.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::RMat;
use crate::system::DescriptorSystem;

/// Pole placement knobs for [`random_modal`].
#[derive(Clone, Debug)]
pub struct ModalSpec {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    /// Range of `-Re(λ)`.
    pub damping: (f64, f64),
    /// Range of `|Im(λ)|` for complex pairs.
    pub freq: (f64, f64),
    /// Fraction of states in complex pairs.
    pub complex_fraction: f64,
    /// Use a random nonsingular `E` instead of the identity.
    pub descriptor: bool,
    /// Apply a random similarity so `A` is dense.
    pub dense: bool,
    pub with_d: bool,
}

impl ModalSpec {
    pub fn new(n: usize, m: usize, p: usize) -> Self {
        Self {
            n,
            m,
            p,
            damping: (0.05, 1.0),
            freq: (0.2, 5.0),
            complex_fraction: 0.8,
            descriptor: false,
            dense: true,
            with_d: false,
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn random_normal(rng: &mut ChaCha8Rng, r: usize, c: usize) -> RMat {
    Mat::from_fn(r, c, |_, _| normal(rng))
}

/// Random orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> RMat {
    let g = random_normal(rng, n, n);
    g.qr().compute_Q()
}

/// Block-diagonal modal `A` with the requested poles, optionally hidden
/// behind a well-conditioned similarity and a nonsingular `E`.
pub fn random_modal(spec: &ModalSpec, seed: u64) -> DescriptorSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n;
    let mut a = RMat::zeros(n, n);
    let mut i = 0;
    while i < n {
        let sigma = rng.random_range(spec.damping.0..=spec.damping.1);
        if i + 1 < n && rng.random::<f64>() < spec.complex_fraction {
            let w = rng.random_range(spec.freq.0..=spec.freq.1);
            a[(i, i)] = -sigma;
            a[(i + 1, i + 1)] = -sigma;
            a[(i, i + 1)] = w;
            a[(i + 1, i)] = -w;
            i += 2;
        } else {
            a[(i, i)] = -sigma;
            i += 1;
        }
    }
    if spec.dense {
        // T = Q1 diag(d) Q2 with condition number at most 4.
        let q1 = random_orthogonal(&mut rng, n);
        let q2 = random_orthogonal(&mut rng, n);
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let t = Mat::from_fn(n, n, |r, c| q1[(r, c)] * d[c]) * &q2;
        let tinv = q2.transpose() * Mat::from_fn(n, n, |r, c| q1[(c, r)] / d[r]);
        a = &t * &a * &tinv;
    }
    let b = random_normal(&mut rng, n, spec.m);
    let c = random_normal(&mut rng, spec.p, n);
    let d = if spec.with_d {
        random_normal(&mut rng, spec.p, spec.m)
    } else {
        RMat::zeros(spec.p, spec.m)
    };
    let e = if spec.descriptor {
        let q = random_orthogonal(&mut rng, n);
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        Mat::from_fn(n, n, |r, c| q[(r, c)] * s[c])
    } else {
        RMat::identity(n, n)
    };
    // E x' = (E A) x keeps the poles of A.
    let a = &e * &a;
    let b = &e * &b;
    DescriptorSystem::new(e, a, b, c, d).expect("fixture dimensions are consistent")
}

/// Random stable standard-form system with default pole ranges.
pub fn random_stable(seed: u64, n: usize, m: usize, p: usize) -> DescriptorSystem {
    random_modal(&ModalSpec::new(n, m, p), seed)
}

/// Random stable descriptor system with nonsingular `E`.
pub fn random_stable_descriptor(seed: u64, n: usize, m: usize, p: usize) -> DescriptorSystem {
    let mut spec = ModalSpec::new(n, m, p);
    spec.descriptor = true;
    random_modal(&spec, seed)
}

/// `k / (s + a)` as a one-state system.
pub fn one_pole(k: f64, a: f64) -> DescriptorSystem {
    DescriptorSystem::standard(
        Mat::from_fn(1, 1, |_, _| -a),
        Mat::from_fn(1, 1, |_, _| 1.0),
        Mat::from_fn(1, 1, |_, _| k),
        Mat::zeros(1, 1),
    )
    .expect("scalar system")
}

/// Lightly damped oscillator `w^2 / (s^2 + 2 ζ w s + w^2)`.
pub fn oscillator(w: f64, zeta: f64) -> DescriptorSystem {
    let a = Mat::from_fn(2, 2, |i, j| [[0.0, 1.0], [-w * w, -2.0 * zeta * w]][i][j]);
    DescriptorSystem::standard(
        a,
        Mat::from_fn(2, 1, |i, _| [0.0, 1.0][i]),
        Mat::from_fn(1, 2, |_, j| [w * w, 0.0][j]),
        Mat::zeros(1, 1),
    )
    .expect("oscillator")
}
