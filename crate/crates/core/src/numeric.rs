//! Quadrature, root finding and small statistical helpers.

use std::collections::BinaryHeap;

/// Two-sided 97.5% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

// Gauss-Kronrod 7/15 nodes on [-1, 1] (positive half, centre last).
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
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
}

/// Adaptive Gauss-Kronrod integration of `f` over the finite interval `[a, b]`
/// with the given interior breakpoints.
pub fn integrate_with<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Quad {
    if !(b > a) {
        return Quad {
            value: 0.0,
            error: 0.0,
        };
    }
    let mut pts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    pts.extend(inner);
    pts.push(b);

    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    for w in pts.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(&mut f, w[0], w[1]);
            total += v;
            err += e;
            heap.push(Piece {
                a: w[0],
                b: w[1],
                val: v,
                err: e,
            });
        }
    }
    let mut iters = 0;
    while err > abs_tol.max(rel_tol * total.abs()) && iters < 4000 {
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(&mut f, p.a, m);
        let (v2, e2) = gk15(&mut f, m, p.b);
        total += v1 + v2 - p.val;
        err += e1 + e2 - p.err;
        heap.push(Piece {
            a: p.a,
            b: m,
            val: v1,
            err: e1,
        });
        heap.push(Piece {
            a: m,
            b: p.b,
            val: v2,
            err: e2,
        });
        iters += 1;
    }
    // Re-sum to shed accumulated rounding from the running updates.
    let value: f64 = heap.iter().map(|p| p.val).sum();
    let error: f64 = heap.iter().map(|p| p.err).sum();
    Quad { value, error }
}

pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    integrate_with(f, a, b, &[], 1e-11, 1e-300).value
}

/// Integral of `f` over `[a, inf)` through the substitution `x = a + t/(1-t)`.
/// `scale` sets where the bulk of the mass sits so the map resolves it.
pub fn integrate_to_inf<F: FnMut(f64) -> f64>(mut f: F, a: f64, scale: f64, breaks: &[f64]) -> f64 {
    let s = scale.max(1e-300);
    let tb: Vec<f64> = breaks
        .iter()
        .filter(|&&x| x > a)
        .map(|&x| {
            let u = (x - a) / s;
            u / (1.0 + u)
        })
        .collect();
    integrate_with(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let u = t / (1.0 - t);
            let v = f(a + s * u);
            if v == 0.0 {
                0.0
            } else {
                v * s / ((1.0 - t) * (1.0 - t))
            }
        },
        0.0,
        1.0,
        &tb,
        1e-11,
        1e-300,
    )
    .value
}

/// Bisection for a sign change of `f` on `[lo, hi]`. Returns the midpoint of the
/// final bracket, shrunk until its width is below `tol` (absolute, relative to
/// the bracket magnitude).
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol * (1.0 + mid.abs()) || mid == lo || mid == hi {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Expands `hi` geometrically from `lo` until `pred(hi)` holds; `None` after
/// `max_doublings`.
pub fn expand_until<F: FnMut(f64) -> bool>(lo: f64, mut pred: F, max_doublings: usize) -> Option<f64> {
    let mut step = 1.0_f64.max(lo.abs());
    for _ in 0..max_doublings {
        let x = lo + step;
        if pred(x) {
            return Some(x);
        }
        step *= 2.0;
    }
    None
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z95 * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// `ln(1 + x) - x`, accurate for small `x`.
pub fn log1p_minus(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        -x2 / 2.0 + x2 * x / 3.0 - x2 * x2 / 4.0
    } else {
        x.ln_1p() - x
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `lo:hi:steps` evenly spaced grid, inclusive of both ends.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![lo],
        _ => (0..steps)
            .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}

/// Geometric grid with both ends exact.
pub fn geomspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    let mut v: Vec<f64> = linspace(lo.ln(), hi.ln(), steps).into_iter().map(f64::exp).collect();
    if let Some(f) = v.first_mut() {
        *f = lo;
    }
    if steps > 1 {
        v[steps - 1] = hi;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_ends_are_exact() {
        let g = geomspace(9.0, 10.0, 2);
        assert_eq!(g, vec![9.0, 10.0]);
        let g = geomspace(5.0, 150.0, 8);
        assert_eq!((g[0], g[7]), (5.0, 150.0));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0);
        assert_relative_eq!(v, 8.0, max_relative = 1e-13);
    }

    #[test]
    fn infinite_range() {
        let v = integrate_to_inf(|x| (1.0 + x).powi(-2), 0.0, 1.0, &[]);
        assert_relative_eq!(v, 1.0, max_relative = 1e-10);
        let w = integrate_to_inf(|x| (-x).exp(), 3.0, 1.0, &[]);
        assert_relative_eq!(w, (-3.0f64).exp(), max_relative = 1e-10);
    }

    #[test]
    fn kink_with_breakpoint() {
        let v = integrate_with(|x: f64| x.abs(), -1.0, 2.0, &[0.0], 1e-12, 0.0).value;
        assert_relative_eq!(v, 2.5, max_relative = 1e-13);
    }

    #[test]
    fn bisect_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14);
        assert_relative_eq!(r, 2f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn wilson_brackets_and_zero() {
        let (lo, hi) = wilson(50, 100);
        assert!(lo < 0.5 && hi > 0.5);
        assert_relative_eq!(lo + hi, 1.0, max_relative = 1e-12);
        let (lo0, hi0) = wilson(0, 1000);
        assert_eq!(lo0, 0.0);
        assert!(hi0 > 1e-3 && hi0 < 5e-3);
    }
}
