//! One-dimensional quadrature rules: Gauss–Legendre and adaptive Gauss–Kronrod (7/15).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Value of an integral with an error estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

impl std::ops::Add for Integral {
    type Output = Integral;
    fn add(self, o: Integral) -> Integral {
        Integral {
            value: self.value + o.value,
            error: self.error + o.error,
            evals: self.evals + o.evals,
        }
    }
}

impl std::iter::Sum for Integral {
    fn sum<I: Iterator<Item = Integral>>(iter: I) -> Integral {
        iter.fold(Integral::default(), |a, b| a + b)
    }
}

/// Absolute and relative error targets; the looser one wins.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            max_intervals: 400,
        }
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }
}

/// One 15-point Kronrod panel; the error is the Kronrod/Gauss difference.
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Integral {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let pair = f(c - h * x) + f(c + h * x);
        k += w * pair;
        if j % 2 == 1 {
            g += WG[j / 2] * pair;
        }
    }
    Integral {
        value: k * h,
        error: ((k - g) * h).abs(),
        evals: 15,
    }
}

struct Panel {
    a: f64,
    b: f64,
    result: Integral,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.result.error == other.result.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.result.error.total_cmp(&other.result.error)
    }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// Bisects the panel with the largest error until the summed error meets the tolerance or
/// the panel budget is exhausted; the returned error is then the honest remaining estimate.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Integral {
    if a == b {
        return Integral::default();
    }
    let first = gk15(&mut f, a, b);
    let mut total = first;
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        result: first,
    });
    while heap.len() < tol.max_intervals {
        if total.error <= tol.abs.max(tol.rel * total.value.abs()) || !total.error.is_finite() {
            break;
        }
        let worst = heap.pop().expect("non-empty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a.min(worst.b) || m >= worst.a.max(worst.b) {
            heap.push(worst);
            break;
        }
        let left = gk15(&mut f, worst.a, m);
        let right = gk15(&mut f, m, worst.b);
        total.value += left.value + right.value - worst.result.value;
        total.error += left.error + right.error - worst.result.error;
        total.evals += left.evals + right.evals;
        heap.push(Panel {
            a: worst.a,
            b: m,
            result: left,
        });
        heap.push(Panel {
            a: m,
            b: worst.b,
            result: right,
        });
    }
    // Recompute from panels to shed accumulated update round-off.
    let mut value = 0.0;
    let mut error = 0.0;
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    for p in &panels {
        value += p.result.value;
        error += p.result.error;
    }
    Integral {
        value,
        error,
        evals: total.evals,
    }
}

/// Adaptive integration over consecutive breakpoints.
pub fn adaptive_breaks<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], tol: Tolerance) -> Integral {
    let mut out = Integral::default();
    let n = breaks.len().saturating_sub(1).max(1) as f64;
    let local = Tolerance {
        abs: tol.abs / n,
        ..tol
    };
    for w in breaks.windows(2) {
        out = out + adaptive(&mut f, w[0], w[1], local);
    }
    out
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// A fixed rule `Σ w_i f(x_i)` on `[a, b]`.
#[derive(Clone, Debug, Default)]
pub struct FixedRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl FixedRule {
    /// Composite Gauss–Legendre rule on `[0, 1]` with dyadic panels graded towards 0.
    pub fn graded_unit(levels: usize, order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let mut rule = FixedRule::default();
        let mut push = |a: f64, b: f64| {
            let c = 0.5 * (a + b);
            let h = 0.5 * (b - a);
            for (xi, wi) in x.iter().zip(&w) {
                rule.nodes.push(c + h * xi);
                rule.weights.push(h * wi);
            }
        };
        let mut hi = 1.0;
        for _ in 0..levels {
            push(0.5 * hi, hi);
            hi *= 0.5;
        }
        push(0.0, hi);
        rule
    }

    /// Gauss–Legendre rule mapped to `[a, b]`.
    pub fn gauss(order: usize, a: f64, b: f64) -> Self {
        let (x, w) = gauss_legendre(order);
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        FixedRule {
            nodes: x.iter().map(|xi| c + h * xi).collect(),
            weights: w.iter().map(|wi| h * wi).collect(),
        }
    }

    pub fn apply(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * n - 1;
            let s: f64 = x
                .iter()
                .zip(&w)
                .map(|(x, w)| w * x.powi(deg as i32 - 1))
                .sum();
            let exact = if (deg - 1) % 2 == 0 {
                2.0 / deg as f64
            } else {
                0.0
            };
            assert!((s - exact).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let r = adaptive(
            |x: f64| x.powf(-0.5),
            0.0,
            1.0,
            Tolerance::new(1e-10, 1e-10),
        );
        assert!((r.value - 2.0).abs() < 1e-8, "{r:?}");
        let smooth = adaptive(
            f64::sin,
            0.0,
            std::f64::consts::PI,
            Tolerance::new(1e-14, 1e-14),
        );
        assert!((smooth.value - 2.0).abs() < 1e-13);
    }

    #[test]
    fn graded_rule_weights() {
        let rule = FixedRule::graded_unit(6, 6);
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let v = rule.apply(|t| t.powf(0.3));
        assert!((v - 1.0 / 1.3).abs() < 1e-4);
    }
}
