//! Gauss-Legendre rules and globally adaptive Gauss-Kronrod integration.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::PI;
use std::sync::Arc;

use once_cell::sync::Lazy;
use parking_lot::RwLock;

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

static GL_CACHE: Lazy<RwLock<HashMap<usize, Arc<GaussLegendre>>>> =
    Lazy::new(|| RwLock::new(HashMap::new()));

impl GaussLegendre {
    /// Cached rule of order `n`.
    pub fn get(n: usize) -> Arc<GaussLegendre> {
        if let Some(r) = GL_CACHE.read().get(&n) {
            return r.clone();
        }
        let rule = Arc::new(Self::compute(n));
        GL_CACHE.write().entry(n).or_insert(rule).clone()
    }

    /// Newton iteration on `P_n` from the Chebyshev-like initial guesses.
    pub fn compute(n: usize) -> GaussLegendre {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Composite rule on `[a, b]` with `panels` equal panels.
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
        let width = (b - a) / panels as f64;
        let half = 0.5 * width;
        let mut xs = Vec::with_capacity(panels * self.nodes.len());
        let mut ws = Vec::with_capacity(panels * self.nodes.len());
        for k in 0..panels {
            let mid = a + (k as f64 + 0.5) * width;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                xs.push(mid + half * x);
                ws.push(half * w);
            }
        }
        (xs, ws)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

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

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut res_abs = k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        fv1[j] = f1;
        fv2[j] = f2;
        k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = k * h;
    let res_abs = res_abs * h.abs();
    let res_asc = res_asc * h.abs();
    let mut err = ((k - g) * h).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (1.0f64).min((200.0 * err / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment {
        a,
        b,
        value,
        error: err,
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Globally adaptive G7-K15 integration over the partition given by
/// `breakpoints` (sorted, at least two entries).
///
/// Stops when the summed error estimate is below
/// `max(abs_tol, rel_tol * |value|)` or after `max_segments` segments.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    breakpoints: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Integral {
    assert!(breakpoints.len() >= 2);
    let mut heap = BinaryHeap::new();
    let mut evals = 0;
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&mut f, w[0], w[1]));
            evals += 15;
        }
    }
    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        let target = abs_tol.max(rel_tol * value.abs());
        if error <= target {
            return Integral {
                value,
                error,
                converged: true,
                evaluations: evals,
            };
        }
        if heap.len() >= max_segments {
            return Integral {
                value,
                error,
                converged: false,
                evaluations: evals,
            };
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Segment at floating-point resolution; keep it and stop refining.
            heap.push(Segment {
                error: 0.0,
                ..worst
            });
            let (value, error) = heap
                .iter()
                .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
            return Integral {
                value,
                error: error + worst.error,
                converged: false,
                evaluations: evals,
            };
        }
        heap.push(gk15(&mut f, worst.a, mid));
        heap.push(gk15(&mut f, mid, worst.b));
        evals += 30;
    }
}
