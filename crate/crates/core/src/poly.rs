//! Dense polynomials in a local power basis, `p(x) = Σ c_i x^i`, together with
//! the Bernstein-hull machinery used for certified extrema on an interval.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

pub fn eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

pub fn derivative(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(i, &a)| a * i as f64)
        .collect()
}

/// Antiderivative vanishing at `x = 0`.
pub fn integral(c: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(c.len() + 1);
    out.push(0.0);
    out.extend(c.iter().enumerate().map(|(i, &a)| a / (i + 1) as f64));
    out
}

/// Coefficients of `x ↦ p(x + d)`.
pub fn taylor_shift(c: &[f64], d: f64) -> Vec<f64> {
    let mut a = c.to_vec();
    if d == 0.0 {
        return a;
    }
    let n = a.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            a[j] += d * a[j + 1];
        }
    }
    a
}

/// Coefficients of `x ↦ p(s·x)`.
pub fn rescale(c: &[f64], s: f64) -> Vec<f64> {
    let mut f = 1.0;
    c.iter()
        .map(|&a| {
            let v = a * f;
            f *= s;
            v
        })
        .collect()
}

pub fn add_assign(acc: &mut Vec<f64>, c: &[f64], scale: f64) {
    if acc.len() < c.len() {
        acc.resize(c.len(), 0.0);
    }
    for (a, &b) in acc.iter_mut().zip(c) {
        *a += scale * b;
    }
}

/// Drop trailing zero coefficients (keeps at least one).
pub fn trim(c: &mut Vec<f64>) {
    while c.len() > 1 && c[c.len() - 1] == 0.0 {
        c.pop();
    }
}

/// Cheap bound of `sup_{[0,len]} |p|`.
pub fn abs_bound(c: &[f64], len: f64) -> f64 {
    let mut f = 1.0;
    let mut s = 0.0;
    for &a in c {
        s += a.abs() * f;
        f *= len;
    }
    s
}

/// Bernstein coefficients of `p` on `[0, len]`.
pub fn to_bernstein(c: &[f64], len: f64) -> Vec<f64> {
    let a = rescale(c, len);
    let d = a.len() - 1;
    let mut b = vec![0.0; d + 1];
    // b_k = Σ_{i≤k} C(k,i)/C(d,i) a_i
    for (k, bk) in b.iter_mut().enumerate() {
        let mut s = 0.0;
        // ratio C(k,i)/C(d,i), built incrementally in i
        let mut r = 1.0;
        for (i, &ai) in a.iter().enumerate().take(k + 1) {
            if i > 0 {
                r *= (k + 1 - i) as f64 / (d + 1 - i) as f64;
            }
            s += r * ai;
        }
        *bk = s;
    }
    b
}

/// Split a Bernstein coefficient vector at the midpoint (de Casteljau).
pub fn bernstein_split(b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = b.len();
    let mut work = b.to_vec();
    let mut left = Vec::with_capacity(n);
    let mut right = vec![0.0; n];
    left.push(work[0]);
    right[n - 1] = work[n - 1];
    for r in 1..n {
        for i in 0..n - r {
            work[i] = 0.5 * (work[i] + work[i + 1]);
        }
        left.push(work[0]);
        right[n - 1 - r] = work[n - 1 - r];
    }
    (left, right)
}

#[derive(Debug)]
struct Node {
    upper: f64,
    piece: usize,
    depth: u32,
    bern: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.upper.total_cmp(&other.upper) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper.total_cmp(&other.upper)
    }
}

/// Enclosure `[lo, hi]` of `max_i max_{[0, len_i]} p_i` over a family of polynomial pieces.
///
/// Branch and bound on Bernstein hulls; `tol` is the absolute target width.
/// Rounding in the basis conversion is accounted for by a relative slack.
pub fn max_of_pieces(pieces: &[(&[f64], f64)], tol: f64) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut heap = BinaryHeap::new();
    let mut slack: f64 = 0.0;
    for (idx, &(c, len)) in pieces.iter().enumerate() {
        let b = to_bernstein(c, len);
        let scale = abs_bound(c, len);
        slack = slack.max(4.0 * f64::EPSILON * (c.len() as f64 + 1.0) * scale);
        lo = lo.max(b[0]).max(b[b.len() - 1]);
        let upper = b.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        heap.push(Node {
            upper,
            piece: idx,
            depth: 0,
            bern: b,
        });
    }
    if heap.is_empty() {
        return (0.0, 0.0);
    }
    let mut hi = lo;
    while let Some(node) = heap.pop() {
        if node.upper <= lo + tol || node.bern.len() <= 2 || node.depth >= 52 {
            hi = hi.max(node.upper);
            // every remaining node is bounded by this one
            if node.upper <= lo + tol {
                break;
            }
            continue;
        }
        let _ = node.piece;
        let (l, r) = bernstein_split(&node.bern);
        lo = lo.max(l[l.len() - 1]);
        for b in [l, r] {
            let upper = b.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if upper > lo + tol {
                heap.push(Node {
                    upper,
                    piece: node.piece,
                    depth: node.depth + 1,
                    bern: b,
                });
            } else {
                hi = hi.max(upper);
            }
        }
    }
    hi = hi.max(lo);
    (lo - slack, hi + slack)
}

/// Real roots of `p` in `(0, len)`, isolated by Bernstein sign variation and refined by bisection.
pub fn roots_in(c: &[f64], len: f64) -> Vec<f64> {
    let mut c = c.to_vec();
    trim(&mut c);
    if c.len() <= 1 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let b = to_bernstein(&c, len);
    let scale = abs_bound(&c, len).max(f64::MIN_POSITIVE);
    isolate(&c, &b, 0.0, len, scale, 0, &mut out);
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-13 * len.max(1e-300));
    out
}

fn isolate(c: &[f64], b: &[f64], a: f64, z: f64, scale: f64, depth: u32, out: &mut Vec<f64>) {
    let changes = b
        .windows(2)
        .filter(|w| (w[0] > 0.0 && w[1] < 0.0) || (w[0] < 0.0 && w[1] > 0.0))
        .count();
    let noise = 64.0 * f64::EPSILON * scale;
    let all_small = b.iter().all(|v| v.abs() <= noise);
    if changes == 0 && !all_small {
        return;
    }
    let fa = eval(c, a);
    let fz = eval(c, z);
    if changes == 1 || depth >= 48 || all_small {
        if fa == 0.0 {
            out.push(a);
        }
        if (fa < 0.0) != (fz < 0.0) && fa != 0.0 && fz != 0.0 {
            out.push(bisect(c, a, z, fa));
        } else if depth >= 48 || all_small {
            out.push(0.5 * (a + z));
        }
        return;
    }
    let m = 0.5 * (a + z);
    let (l, r) = bernstein_split(b);
    isolate(c, &l, a, m, scale, depth + 1, out);
    isolate(c, &r, m, z, scale, depth + 1, out);
}

fn bisect(c: &[f64], mut a: f64, mut z: f64, fa: f64) -> f64 {
    let neg = fa < 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + z);
        if m <= a || m >= z {
            break;
        }
        let fm = eval(c, m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == neg {
            a = m;
        } else {
            z = m;
        }
    }
    0.5 * (a + z)
}

/// `∫_0^len |p(x)| dx`, exact up to root location.
pub fn abs_integral(c: &[f64], len: f64) -> f64 {
    let prim = integral(c);
    let mut pts = vec![0.0];
    pts.extend(roots_in(c, len));
    pts.push(len);
    pts.windows(2)
        .map(|w| (eval(&prim, w[1]) - eval(&prim, w[0])).abs())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_matches_direct_evaluation() {
        let c = [1.0, -2.0, 0.5, 3.0];
        let s = taylor_shift(&c, 0.3);
        for x in [-1.0, 0.0, 0.25, 0.9] {
            assert!((eval(&s, x) - eval(&c, x + 0.3)).abs() < 1e-13);
        }
    }

    #[test]
    fn bernstein_endpoints_are_values() {
        let c = [0.2, -1.0, 4.0, -2.5];
        let b = to_bernstein(&c, 0.7);
        assert!((b[0] - eval(&c, 0.0)).abs() < 1e-14);
        assert!((b[3] - eval(&c, 0.7)).abs() < 1e-14);
        let (l, r) = bernstein_split(&b);
        assert!((l[3] - eval(&c, 0.35)).abs() < 1e-14);
        assert!((r[0] - eval(&c, 0.35)).abs() < 1e-14);
    }

    #[test]
    fn max_of_parabola() {
        // 1 - (x - 0.3)^2 on [0, 1]: max 1 at 0.3
        let c = [1.0 - 0.09, 0.6, -1.0];
        let (lo, hi) = max_of_pieces(&[(&c, 1.0)], 1e-13);
        assert!(lo <= 1.0 && hi >= 1.0 && hi - lo < 1e-12, "{lo} {hi}");
    }

    #[test]
    fn roots_of_cubic() {
        // (x-0.1)(x-0.5)(x-0.8)
        let c = [-0.04, 0.53, -1.4, 1.0];
        let r = roots_in(&c, 1.0);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([0.1, 0.5, 0.8]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn abs_integral_of_line() {
        // |x - 0.5| on [0,1] integrates to 1/4
        assert!((abs_integral(&[-0.5, 1.0], 1.0) - 0.25).abs() < 1e-14);
    }
}
