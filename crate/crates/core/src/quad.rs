//! Adaptive Gauss–Kronrod quadrature on finite intervals.

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
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by globally
/// adaptive bisection of the interval with the largest error estimate.
/// Integrable endpoint singularities are handled by repeated bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut heap = BinaryHeap::new();
    let (v, e) = gk15(&f, a, b);
    let mut err_total = e;
    heap.push(Piece { lo: a, hi: b, val: v, err: e });
    let mut frozen = Vec::new();
    let mut iterations = 0usize;
    while err_total > tol && iterations < 100_000 {
        let Some(p) = heap.pop() else { break };
        iterations += 1;
        let mid = 0.5 * (p.lo + p.hi);
        let width = (p.hi - p.lo).abs();
        if width < 1e-100 * (b - a).abs() || width < 8.0 * f64::EPSILON * p.lo.abs().max(p.hi.abs()) {
            // cannot split further; keep the value and drop its error
            err_total -= p.err;
            frozen.push(p.val);
            continue;
        }
        let (lv, le) = gk15(&f, p.lo, mid);
        let (rv, re) = gk15(&f, mid, p.hi);
        err_total += le + re - p.err;
        heap.push(Piece { lo: p.lo, hi: mid, val: lv, err: le });
        heap.push(Piece { lo: mid, hi: p.hi, val: rv, err: re });
    }
    let mut vals: Vec<f64> = heap.into_iter().map(|p| p.val).chain(frozen).collect();
    vals.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    vals.into_iter().sum()
}

struct Piece {
    lo: f64,
    hi: f64,
    val: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Integrates over consecutive pieces split at `breaks` (which must be sorted
/// and lie inside `[a, b]`).
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut nodes = vec![a];
    nodes.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    nodes.push(b);
    nodes
        .windows(2)
        .map(|w| integrate(&f, w[0], w[1], tol / (nodes.len() as f64)))
        .sum()
}
