//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nodes and weights of the `k`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Quadrature {
    pub fn new() -> Self {
        let (nodes, weights) = gauss_legendre(20);
        Quadrature { nodes, weights }
    }

    fn rule<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        h * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
    }

    /// Adaptive bisection until halves agree with the whole to `tol`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, tol: f64) -> f64 {
        self.step(f, a, b, self.rule(f, a, b), tol, 0)
    }

    fn step<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (self.rule(f, a, m), self.rule(f, m, b));
        if (l + r - whole).abs() <= tol || depth > 20 {
            l + r
        } else {
            self.step(f, a, m, l, tol, depth + 1) + self.step(f, m, b, r, tol, depth + 1)
        }
    }
}

pub fn erf_by_quadrature(q: &Quadrature, x: f64) -> f64 {
    let f = |t: f64| (-t * t).exp();
    2.0 / std::f64::consts::PI.sqrt() * q.integrate(&f, 0.0, x, 1e-15)
}

/// Exact inverse-erf series coefficients.
pub fn rational_coeffs(order: usize) -> Vec<BigRational> {
    let mut c: Vec<BigRational> = vec![BigRational::one()];
    for k in 1..=order {
        let mut s = BigRational::zero();
        for m in 0..k {
            let d = BigInt::from(((m + 1) * (2 * m + 1)) as u64);
            s += &c[m] * &c[k - 1 - m] / BigRational::from_integer(d);
        }
        c.push(s);
    }
    c
}

/// The order-`M` truncated quantile series with coefficients from exact
/// rationals, summed term by term.
pub struct SeriesQuantile {
    weights: Vec<f64>,
}

impl SeriesQuantile {
    pub fn new(order: usize) -> Self {
        let weights = rational_coeffs(order)
            .iter()
            .enumerate()
            .map(|(k, c)| c.to_f64().unwrap() / (2 * k + 1) as f64)
            .collect();
        SeriesQuantile { weights }
    }

    pub fn eval(&self, p: f64) -> f64 {
        let y = 0.5 * std::f64::consts::PI.sqrt() * (2.0 * p - 1.0);
        let mut term = y;
        let mut s = 0.0;
        for w in &self.weights {
            s += w * term;
            term *= y * y;
        }
        std::f64::consts::SQRT_2 * s
    }

    /// Largest `p` in `[0, 1]` with `eval(p) <= v`, by bisection.
    pub fn inverse(&self, v: f64) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        if self.eval(1.0) <= v {
            return 1.0;
        }
        if self.eval(0.0) > v {
            return 0.0;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) <= v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

pub fn factorial(n: u64) -> u128 {
    (1..=n as u128).product()
}

/// `n! / (a! b! c!)` as a float, exact for `n <= 25`.
pub fn multinomial(n: u64, a: u64, b: u64) -> f64 {
    let c = n - a - b;
    (factorial(n) / (factorial(a) * factorial(b) * factorial(c))) as f64
}

/// Mass of all `(x1, x2)` with `x1 + x2 <= n` that satisfy `event`.
pub fn enumerate<F: Fn(u64, u64) -> bool>(q: [f64; 3], n: u64, event: F) -> f64 {
    let mut total = 0.0;
    for x1 in 0..=n {
        for x2 in 0..=(n - x1) {
            if event(x1, x2) {
                let x3 = n - x1 - x2;
                total += multinomial(n, x1, x2)
                    * q[0].powi(x1 as i32)
                    * q[1].powi(x2 as i32)
                    * q[2].powi(x3 as i32);
            }
        }
    }
    total
}

/// Uniform draw from the 2-simplex.
pub fn simplex3<R: Rng>(rng: &mut R) -> [f64; 3] {
    let e: [f64; 3] = std::array::from_fn(|_| -rng.random::<f64>().ln());
    let s: f64 = e.iter().sum();
    [e[0] / s, e[1] / s, e[2] / s]
}

pub fn sample_multinomial<R: Rng>(rng: &mut R, q: &[f64], n: u64) -> Vec<u64> {
    let mut counts = vec![0u64; q.len()];
    for _ in 0..n {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = q.len() - 1;
        for (j, p) in q.iter().enumerate() {
            acc += p;
            if u < acc {
                k = j;
                break;
            }
        }
        counts[k] += 1;
    }
    counts
}

/// Binomial standard error of a miscoverage estimate at nominal `alpha`.
pub fn standard_error(alpha: f64, reps: usize) -> f64 {
    (alpha * (1.0 - alpha) / reps as f64).sqrt()
}

pub fn simplex3_strategy() -> impl proptest::strategy::Strategy<Value = [f64; 3]> {
    use proptest::strategy::Strategy;
    (0.001f64..1.0, 0.001f64..1.0, 0.001f64..1.0).prop_map(|(a, b, c)| {
        let s = a + b + c;
        [a / s, b / s, c / s]
    })
}
