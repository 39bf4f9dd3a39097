//! Adaptive Gauss-Kronrod quadrature for complex, vector-valued integrands
//! plus a few deterministic summation helpers.

use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<const N: usize> {
    pub value: [Complex64; N],
    pub error: [f64; N],
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-300, rel: 1e-11, max_intervals: 4000 }
    }
}

fn gk15<const N: usize, F>(f: &F, a: f64, b: f64) -> ([Complex64; N], [f64; N])
where
    F: Fn(f64) -> [Complex64; N],
{
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let zero = Complex64::new(0.0, 0.0);
    let fc = f(c);
    let mut k = [zero; N];
    let mut g = [zero; N];
    for i in 0..N {
        k[i] = fc[i] * WGK[7];
        g[i] = fc[i] * WG[3];
    }
    for j in 0..7 {
        let dx = hw * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for i in 0..N {
            let s = f1[i] + f2[i];
            k[i] += s * WGK[j];
            if j % 2 == 1 {
                g[i] += s * WG[j / 2];
            }
        }
    }
    let mut err = [0.0; N];
    for i in 0..N {
        k[i] *= hw;
        g[i] *= hw;
        err[i] = (k[i] - g[i]).norm();
    }
    (k, err)
}

struct Segment<const N: usize> {
    a: f64,
    b: f64,
    value: [Complex64; N],
    error: [f64; N],
    key: f64,
}

impl<const N: usize> PartialEq for Segment<N> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl<const N: usize> Eq for Segment<N> {}
impl<const N: usize> PartialOrd for Segment<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Segment<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key).then(other.a.total_cmp(&self.a))
    }
}

/// Globally adaptive G7-K15 over `[a, b]`, split first at `breaks`.
///
/// Each component must meet `err <= max(abs, rel * |value|)`; the scale for
/// the relative test is the largest component magnitude so that a component
/// which is identically small does not stall refinement.
pub fn integrate<const N: usize, F>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<QuadResult<N>>
where
    F: Fn(f64) -> [Complex64; N],
{
    let mut pts: Vec<f64> = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|x| *x > a && *x < b).collect();
    inner.sort_by(|x, y| x.total_cmp(y));
    inner.dedup();
    pts.extend(inner);
    pts.push(b);

    let zero = Complex64::new(0.0, 0.0);
    let mut heap: BinaryHeap<Segment<N>> = BinaryHeap::new();
    let mut total = [zero; N];
    let mut total_err = [0.0; N];
    let mut evals = 0usize;
    for w in pts.windows(2) {
        let (v, e) = gk15(&f, w[0], w[1]);
        evals += 15;
        for i in 0..N {
            total[i] += v[i];
            total_err[i] += e[i];
        }
        heap.push(Segment { a: w[0], b: w[1], value: v, error: e, key: max_of(&e) });
    }

    let converged = |tot: &[Complex64; N], err: &[f64; N]| {
        let scale = tot.iter().map(|z| z.norm()).fold(0.0, f64::max);
        err.iter().all(|e| *e <= tol.abs.max(tol.rel * scale))
    };

    while !converged(&total, &total_err) {
        if heap.len() >= tol.max_intervals {
            return Err(Error::Quadrature {
                detail: format!("adaptive GK15 hit {} intervals on [{a}, {b}]", heap.len()),
                estimate: max_of(&total_err),
            });
        }
        let seg = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            return Err(Error::Quadrature {
                detail: format!("interval underflow near {mid}"),
                estimate: max_of(&total_err),
            });
        }
        let (v1, e1) = gk15(&f, seg.a, mid);
        let (v2, e2) = gk15(&f, mid, seg.b);
        evals += 30;
        for i in 0..N {
            total[i] += v1[i] + v2[i] - seg.value[i];
            total_err[i] += e1[i] + e2[i] - seg.error[i];
        }
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1, key: max_of(&e1) });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2, key: max_of(&e2) });
    }

    // Re-sum in interval order so the result does not depend on heap history.
    let mut segs: Vec<Segment<N>> = heap.into_vec();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = [zero; N];
    let mut error = [0.0; N];
    for i in 0..N {
        let vals: Vec<Complex64> = segs.iter().map(|s| s.value[i]).collect();
        value[i] = pairwise_sum(&vals);
        error[i] = segs.iter().map(|s| s.error[i]).sum();
    }
    Ok(QuadResult { value, error, evaluations: evals })
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate1<F>(f: F, a: f64, b: f64, breaks: &[f64], tol: Tolerance) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Complex64,
{
    let r = integrate(|x| [f(x)], a, b, breaks, tol)?;
    Ok((r.value[0], r.error[0]))
}

/// Integral over `[a, inf)` through the map `x = a + s/(1-s)`.
pub fn integrate1_semi_infinite<F>(f: F, a: f64, tol: Tolerance) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Complex64,
{
    integrate1(
        |s| {
            if s >= 1.0 {
                return Complex64::new(0.0, 0.0);
            }
            let d = 1.0 - s;
            f(a + s / d) / (d * d)
        },
        0.0,
        1.0,
        &[0.5],
        tol,
    )
}

fn max_of<const N: usize>(e: &[f64; N]) -> f64 {
    e.iter().copied().fold(0.0, f64::max)
}

/// Fixed-order pairwise summation. The association pattern depends only on
/// the slice length, so results are reproducible across thread counts.
pub fn pairwise_sum<T>(xs: &[T]) -> T
where
    T: Copy + std::ops::Add<Output = T> + Default,
{
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        let mut acc = T::default();
        for x in xs {
            acc = acc + *x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Trapezoid weights for a strictly increasing, possibly non-uniform grid.
pub fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (x[i + 1] - x[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// Maximizer of a unimodal function on `[a, b]` by golden-section search.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Root of a continuous function with `f(lo)` and `f(hi)` of opposite sign.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rtol: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= rtol * mid.abs().max(f64::MIN_POSITIVE) {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
