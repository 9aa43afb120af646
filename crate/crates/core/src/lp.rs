//! Dense simplex for weighted epigraph minimax problems
//!
//! `min_c Σ_b w_b max_{i∈b} |y_i − A_i c|`
//!
//! solved through its dual `max Σ y_i μ_i` subject to `Σ A_iᵀ μ_i = 0` and
//! `Σ_{i∈b} |μ_i| ≤ w_b` (split `μ = μ⁺ − μ⁻`). The dual has one row per basis function
//! and per block, which keeps the tableau short even for fine grids. The primal
//! coefficients are the simplex multipliers of the equality rows.
//!
//! Adding sample rows adds dual columns, so an optimal basis stays feasible and later
//! solves are warm-started: the new columns are priced through `B⁻¹`, which the tableau
//! carries in the columns of the initial identity.

use crate::error::{Error, Result};

/// One sampled constraint `|target − coeffs·c| ≤ e_b`.
#[derive(Debug, Clone)]
pub struct Row {
    pub t: f64,
    pub target: f64,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Block {
    pub weight: f64,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub struct EpigraphSolution {
    pub coeffs: Vec<f64>,
    /// Optimal value of the discretized problem.
    pub value: f64,
    /// `max_{i∈b} |y_i − A_i c|` per block at the returned coefficients.
    pub block_errors: Vec<f64>,
    pub iterations: usize,
}

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-11;
const DEGENERATE_STREAK: usize = 50;
const REINVERT_EVERY: usize = 200;
/// Iterations without relative objective progress before the solve is treated as stalled.
const STALL_WINDOW: usize = 300;
const STALL_RTOL: f64 = 1e-13;

/// Incremental epigraph LP.
///
/// Tableau columns: artificials (`p`), block slacks (`nb`), then `μ⁺, μ⁻` pairs per row.
pub struct EpigraphLp {
    /// Coefficients with zero magnitude are fixed at 0; `active` maps LP rows to them.
    active: Vec<usize>,
    full: usize,
    p: usize,
    weights: Vec<f64>,
    scale: Vec<f64>,
    rows: Vec<(usize, f64, Vec<f64>)>,
    /// Rows already present as tableau columns.
    priced: usize,
    /// `(p + nb + 1) × (cols + 1)`, objective row last (`π A_j − c_j`), rhs column last.
    a: Vec<f64>,
    cols: usize,
    basis: Vec<usize>,
    crashed: bool,
    iterations: usize,
}

impl EpigraphLp {
    /// `magnitude[j]` is the size of basis function `j` on the grid (columns are scaled by it).
    pub fn new(p: usize, weights: &[f64], magnitude: &[f64]) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("basis must have at least one function".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument(format!("block weight {w} must be > 0")));
        }
        if magnitude.len() != p {
            return Err(Error::InvalidArgument("magnitude length must equal the basis size".into()));
        }
        let full = p;
        let active: Vec<usize> = (0..p).filter(|&j| magnitude[j] > 0.0).collect();
        let p = active.len();
        let nb = weights.len();
        let rows = p + nb;
        let cols = p + nb;
        let w = cols + 1;
        let mut a = vec![0.0; (rows + 1) * w];
        for r in 0..rows {
            a[r * w + r] = 1.0;
        }
        for (bi, &wt) in weights.iter().enumerate() {
            a[(p + bi) * w + cols] = wt;
        }
        Ok(EpigraphLp {
            p,
            weights: weights.to_vec(),
            scale: active.iter().map(|&j| 1.0 / magnitude[j]).collect(),
            active,
            full,
            rows: Vec::new(),
            priced: 0,
            a,
            cols,
            basis: (0..rows).collect(),
            crashed: false,
            iterations: 0,
        })
    }

    fn nrows(&self) -> usize {
        self.p + self.weights.len()
    }

    pub fn add_row(&mut self, block: usize, target: f64, coeffs: Vec<f64>) -> Result<()> {
        if block >= self.weights.len() || coeffs.len() != self.full || !target.is_finite() {
            return Err(Error::InvalidArgument("malformed epigraph row".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite basis value".into()));
        }
        let coeffs = self.active.iter().map(|&j| coeffs[j]).collect();
        self.rows.push((block, target, coeffs));
        Ok(())
    }

    /// Append tableau columns for rows added since the last solve.
    fn price_new_rows(&mut self) {
        let new = self.rows.len() - self.priced;
        if new == 0 {
            return;
        }
        let (p, nb, rows) = (self.p, self.weights.len(), self.nrows());
        let old_w = self.cols + 1;
        let cols = self.cols + 2 * new;
        let w = cols + 1;
        let mut a = vec![0.0; (rows + 1) * w];
        for r in 0..=rows {
            a[r * w..r * w + self.cols].copy_from_slice(&self.a[r * old_w..r * old_w + self.cols]);
            a[r * w + cols] = self.a[r * old_w + self.cols];
        }
        for (k, (block, target, coeffs)) in self.rows[self.priced..].iter().enumerate() {
            let c_plus = self.cols + 2 * k;
            let v: Vec<f64> = coeffs.iter().zip(&self.scale).map(|(x, s)| x * s).collect();
            // tableau column = B⁻¹ [±v; e_b]; B⁻¹ sits in the first p + nb columns
            for r in 0..=rows {
                let row = &self.a[r * old_w..r * old_w + p + nb];
                let lin: f64 = row[..p].iter().zip(&v).map(|(x, y)| x * y).sum();
                let slack = row[p + block];
                let (cp, cm) = if r == rows { (-target, *target) } else { (0.0, 0.0) };
                a[r * w + c_plus] = lin + slack + cp;
                a[r * w + c_plus + 1] = -lin + slack + cm;
            }
        }
        self.a = a;
        self.cols = cols;
        self.priced = self.rows.len();
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * (self.cols + 1) + c]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let p = self.at(pr, pc);
        let (before, rest) = self.a.split_at_mut(pr * w);
        let (prow, after) = rest.split_at_mut(w);
        for v in prow.iter_mut() {
            *v /= p;
        }
        prow[pc] = 1.0;
        let elim = |row: &mut [f64]| {
            let f = row[pc];
            if f != 0.0 {
                for (x, &y) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * y;
                }
                row[pc] = 0.0;
            }
        };
        before.chunks_mut(w).for_each(elim);
        after.chunks_mut(w).for_each(elim);
        self.basis[pr] = pc;
        self.iterations += 1;
    }

    /// Drive the artificials (all at level zero) out of the basis, one equality row at a
    /// time, pivoting on the largest entry of the row.
    fn crash(&mut self) {
        let first = self.p + self.weights.len();
        for r in 0..self.p {
            if self.basis[r] >= self.p {
                continue;
            }
            let mut best = (PIVOT_EPS, None);
            for c in first..self.cols {
                let v = self.at(r, c).abs();
                if v > best.0 {
                    best = (v, Some(c));
                }
            }
            if let Some(c) = best.1 {
                self.pivot(r, c);
            }
        }
        self.crashed = true;
    }

    /// Entering column by steepest edge: largest `d_j² / (1 + ‖B⁻¹a_j‖²)`.
    fn steepest_edge(&self, first: usize) -> Option<usize> {
        let rows = self.nrows();
        let w = self.cols + 1;
        let obj = rows * w;
        let mut norms = vec![1.0f64; self.cols];
        for r in 0..rows {
            let row = &self.a[r * w..r * w + self.cols];
            for (n, &x) in norms.iter_mut().zip(row) {
                *n += x * x;
            }
        }
        let mut best = 0.0;
        let mut pc = None;
        for j in first..self.cols {
            let d = self.a[obj + j];
            if d < -COST_EPS {
                let score = d * d / norms[j];
                if score > best {
                    best = score;
                    pc = Some(j);
                }
            }
        }
        pc
    }

    /// Original (scaled) column `j` as `(entries, cost)`; `μ` columns are sparse in the
    /// block part, returned densely here.
    fn original_column(&self, j: usize) -> (Vec<f64>, f64) {
        let rows = self.nrows();
        let mut col = vec![0.0; rows];
        let fixed = self.p + self.weights.len();
        if j < fixed {
            col[j] = 1.0;
            return (col, 0.0);
        }
        let k = (j - fixed) / 2;
        let sign = if (j - fixed) % 2 == 0 { 1.0 } else { -1.0 };
        let (block, target, coeffs) = &self.rows[k];
        for (i, (x, s)) in coeffs.iter().zip(&self.scale).enumerate() {
            col[i] = sign * x * s;
        }
        col[self.p + block] = 1.0;
        (col, sign * target)
    }

    /// Rebuild the tableau from the original data for the current basis.
    fn reinvert(&mut self) -> Result<()> {
        let rows = self.nrows();
        let mut bmat = vec![0.0; rows * rows];
        let mut cb = vec![0.0; rows];
        for (r, &j) in self.basis.iter().enumerate() {
            let (col, cost) = self.original_column(j);
            for i in 0..rows {
                bmat[i * rows + r] = col[i];
            }
            cb[r] = cost;
        }
        let binv = match invert(bmat.clone(), rows) {
            Ok(b) => b,
            Err(_) => {
                // swap numerically dependent columns for unit columns of uncovered rows
                for (pos, row) in dependent_columns(&bmat, rows) {
                    self.basis[pos] = row;
                    for i in 0..rows {
                        bmat[i * rows + pos] = if i == row { 1.0 } else { 0.0 };
                    }
                    cb[pos] = self.original_column(row).1;
                }
                invert(bmat, rows)?
            }
        };
        // π_i = Σ_r c_B[r] B⁻¹[r][i]
        let mut pi = vec![0.0; rows];
        for r in 0..rows {
            if cb[r] != 0.0 {
                for i in 0..rows {
                    pi[i] += cb[r] * binv[r * rows + i];
                }
            }
        }
        let w = self.cols + 1;
        let mut a = vec![0.0; (rows + 1) * w];
        for j in 0..self.cols {
            let (col, cost) = self.original_column(j);
            let nz: Vec<usize> = (0..rows).filter(|&i| col[i] != 0.0).collect();
            for r in 0..rows {
                a[r * w + j] = nz.iter().map(|&i| binv[r * rows + i] * col[i]).sum();
            }
            a[rows * w + j] = nz.iter().map(|&i| pi[i] * col[i]).sum::<f64>() - cost;
        }
        for r in 0..rows {
            let v: f64 = (0..self.weights.len())
                .map(|b| binv[r * rows + self.p + b] * self.weights[b])
                .sum();
            a[r * w + self.cols] = v.max(0.0);
        }
        a[rows * w + self.cols] = (0..self.weights.len()).map(|b| pi[self.p + b] * self.weights[b]).sum();
        for (r, &j) in self.basis.iter().enumerate() {
            for rr in 0..=rows {
                a[rr * w + j] = if rr == r { 1.0 } else { 0.0 };
            }
        }
        self.a = a;
        Ok(())
    }

    pub fn solve(&mut self) -> Result<EpigraphSolution> {
        self.price_new_rows();
        if self.rows.is_empty() {
            return Ok(EpigraphSolution {
                coeffs: vec![0.0; self.full],
                value: 0.0,
                block_errors: vec![0.0; self.weights.len()],
                iterations: 0,
            });
        }
        if !self.crashed {
            self.crash();
        }
        let rows = self.nrows();
        let w = self.cols + 1;
        let obj = rows * w;
        let first = self.p;
        let start = self.iterations;
        let max_iter = (40 * rows).max(5000);
        let mut degenerate = 0usize;
        let mut since_reinvert = 0usize;
        let (mut best_obj, mut best_at) = (self.a[obj + self.cols], 0usize);
        loop {
            if since_reinvert >= REINVERT_EVERY {
                self.reinvert()?;
                since_reinvert = 0;
            }
            let bland = degenerate >= DEGENERATE_STREAK;
            let pc = if bland {
                (first..self.cols).find(|&j| self.a[obj + j] < -COST_EPS)
            } else {
                self.steepest_edge(first)
            };
            let Some(pc) = pc else {
                if since_reinvert > 0 {
                    // confirm optimality on a freshly inverted tableau
                    self.reinvert()?;
                    since_reinvert = 0;
                    continue;
                }
                break;
            };
            // ratio test; a basic artificial sits at zero and blocks at ratio 0
            let colmax = (0..rows).map(|r| self.at(r, pc).abs()).fold(0.0, f64::max);
            let tiny = PIVOT_EPS.max(1e-9 * colmax);
            let mut pr: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            let mut best_piv = 0.0;
            for r in 0..rows {
                let v = self.at(r, pc);
                let artificial = self.basis[r] < self.p;
                if !(v > tiny || (artificial && v.abs() > tiny)) {
                    continue;
                }
                let ratio = if artificial { 0.0 } else { self.at(r, self.cols) / v };
                let better = match pr {
                    None => true,
                    Some(q) => {
                        ratio < best_ratio - 1e-14
                            || (ratio <= best_ratio + 1e-14
                                && if bland { self.basis[r] < self.basis[q] } else { v.abs() > best_piv })
                    }
                };
                if better {
                    pr = Some(r);
                    best_ratio = ratio;
                    best_piv = v.abs();
                }
            }
            let Some(pr) = pr else {
                // every column has a +1 in its block row, so a ray means drift
                if since_reinvert > 0 {
                    self.reinvert()?;
                    since_reinvert = 0;
                    continue;
                }
                return Err(Error::Solver("dual unbounded: primal infeasible".into()));
            };
            if best_ratio <= 1e-14 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(pr, pc);
            since_reinvert += 1;
            let value = self.a[obj + self.cols];
            if value > best_obj + STALL_RTOL * best_obj.abs().max(1e-300) {
                (best_obj, best_at) = (value, self.iterations - start);
            }
            if self.iterations - start > max_iter || self.iterations - start - best_at > STALL_WINDOW {
                // stalled on noise-level reduced costs: the basis is still dual feasible,
                // so the objective remains a valid bound
                self.reinvert()?;
                break;
            }
        }
        let reduced: Vec<f64> = (0..self.p).map(|j| self.a[obj + j] * self.scale[j]).collect();
        if reduced.iter().any(|c| !c.is_finite()) {
            return Err(Error::DegenerateBasis("non-finite multipliers".into()));
        }
        let value = self.a[obj + self.cols];
        let mut block_errors = vec![0.0f64; self.weights.len()];
        for (b, target, row) in &self.rows {
            let e = (target - dot(row, &reduced)).abs();
            block_errors[*b] = block_errors[*b].max(e);
        }
        let mut coeffs = vec![0.0; self.full];
        for (&j, c) in self.active.iter().zip(reduced) {
            coeffs[j] = c;
        }
        Ok(EpigraphSolution {
            coeffs,
            value,
            block_errors,
            iterations: self.iterations - start,
        })
    }
}

/// Basis magnitudes over a set of blocks (for column scaling).
pub fn magnitudes(p: usize, blocks: &[Block]) -> Vec<f64> {
    let mut m = vec![0.0f64; p];
    for r in blocks.iter().flat_map(|b| &b.rows) {
        for (s, &a) in m.iter_mut().zip(&r.coeffs) {
            *s = s.max(a.abs());
        }
    }
    m
}

/// Solve the weighted epigraph problem with `p` coefficients from scratch.
pub fn solve_epigraph(p: usize, blocks: &[Block]) -> Result<EpigraphSolution> {
    let weights: Vec<f64> = blocks.iter().map(|b| b.weight).collect();
    let mut lp = EpigraphLp::new(p, &weights, &magnitudes(p, blocks))?;
    for (bi, b) in blocks.iter().enumerate() {
        for r in &b.rows {
            lp.add_row(bi, r.target, r.coeffs.clone())?;
        }
    }
    lp.solve()
}

/// Gauss–Jordan inverse with partial pivoting (row-major `n × n`).
fn invert(mut m: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for c in 0..n {
        let pr = (c..n)
            .max_by(|&x, &y| m[x * n + c].abs().total_cmp(&m[y * n + c].abs()))
            .unwrap();
        let piv = m[pr * n + c];
        if piv.abs() < 1e-14 {
            return Err(Error::DegenerateBasis("singular simplex basis".into()));
        }
        if pr != c {
            for k in 0..n {
                m.swap(pr * n + k, c * n + k);
                inv.swap(pr * n + k, c * n + k);
            }
        }
        for k in 0..n {
            m[c * n + k] /= piv;
            inv[c * n + k] /= piv;
        }
        for r in 0..n {
            if r != c {
                let f = m[r * n + c];
                if f != 0.0 {
                    for k in 0..n {
                        m[r * n + k] -= f * m[c * n + k];
                        inv[r * n + k] -= f * inv[c * n + k];
                    }
                }
            }
        }
    }
    Ok(inv)
}

/// Basis positions whose column is numerically dependent on the earlier ones, each
/// paired with a row left without a pivot.
fn dependent_columns(m: &[f64], n: usize) -> Vec<(usize, usize)> {
    let mut m = m.to_vec();
    let mut used = vec![false; n];
    let mut dead = Vec::new();
    for c in 0..n {
        let scale = (0..n).map(|i| m[i * n + c].abs()).fold(0.0, f64::max);
        let pr = (0..n)
            .filter(|&r| !used[r])
            .max_by(|&x, &y| m[x * n + c].abs().total_cmp(&m[y * n + c].abs()));
        let Some(pr) = pr.filter(|&r| m[r * n + c].abs() > 1e-10 * scale.max(1.0)) else {
            dead.push(c);
            continue;
        };
        used[pr] = true;
        let piv = m[pr * n + c];
        for r in 0..n {
            if r != pr && !used[r] {
                let f = m[r * n + c] / piv;
                if f != 0.0 {
                    for k in c..n {
                        m[r * n + k] -= f * m[pr * n + k];
                    }
                }
            }
        }
    }
    let free: Vec<usize> = (0..n).filter(|&r| !used[r]).collect();
    dead.into_iter().zip(free).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / n as f64).collect()
    }

    #[test]
    fn constant_fit_to_cosine() {
        let rows = grid(64)
            .into_iter()
            .map(|t| Row {
                t,
                target: (2.0 * PI * t).cos(),
                coeffs: vec![1.0],
            })
            .collect();
        let s = solve_epigraph(1, &[Block { weight: 1.0, rows }]).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        assert!(s.coeffs[0].abs() < 1e-12);
    }

    #[test]
    fn target_in_span() {
        let rows = grid(40)
            .into_iter()
            .map(|t| Row {
                t,
                target: 0.3 + 2.0 * (2.0 * PI * t).sin(),
                coeffs: vec![1.0, (2.0 * PI * t).cos(), (2.0 * PI * t).sin()],
            })
            .collect();
        let s = solve_epigraph(3, &[Block { weight: 1.0, rows }]).unwrap();
        assert!(s.value.abs() < 1e-12);
        assert!((s.coeffs[0] - 0.3).abs() < 1e-10 && (s.coeffs[2] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn single_point_grid() {
        let rows = vec![Row {
            t: 0.2,
            target: 5.0,
            coeffs: vec![2.0],
        }];
        let s = solve_epigraph(1, &[Block { weight: 1.0, rows }]).unwrap();
        assert!(s.value.abs() < 1e-12 && (s.coeffs[0] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn two_block_objective() {
        // min |1 − c| + λ|c| over c: value min(1, λ)
        for lam in [0.3, 2.0] {
            let blocks = vec![
                Block {
                    weight: 1.0,
                    rows: vec![Row { t: 0.0, target: 1.0, coeffs: vec![1.0] }],
                },
                Block {
                    weight: lam,
                    rows: vec![Row { t: 0.0, target: 0.0, coeffs: vec![1.0] }],
                },
            ];
            let s = solve_epigraph(1, &blocks).unwrap();
            assert!((s.value - f64::min(1.0, lam)).abs() < 1e-12, "{lam} {}", s.value);
            let recomputed = s.block_errors[0] + lam * s.block_errors[1];
            assert!((recomputed - s.value).abs() < 1e-12);
        }
    }

    #[test]
    fn lp_matches_brute_force_on_small_problem() {
        // best line a + b·x to |x| on 11 points of [−1,1]: value 1/2
        let rows = (0..11)
            .map(|i| {
                let x = -1.0 + 0.2 * i as f64;
                Row { t: x, target: x.abs(), coeffs: vec![1.0, x] }
            })
            .collect();
        let s = solve_epigraph(2, &[Block { weight: 1.0, rows }]).unwrap();
        assert!((s.value - 0.5).abs() < 1e-12);
        assert!((s.block_errors[0] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn warm_start_matches_cold_solve() {
        let f = |t: f64| (2.0 * PI * t).cos().powi(3) + 0.3 * (6.0 * PI * t).sin().abs();
        let basis = |t: f64| vec![1.0, (2.0 * PI * t).cos(), (2.0 * PI * t).sin()];
        let coarse = grid(16);
        let fine: Vec<f64> = (0..97).map(|i| (i as f64 + 0.5) / 97.0).collect();
        let mut lp = EpigraphLp::new(3, &[1.0], &[1.0; 3]).unwrap();
        for &t in &coarse {
            lp.add_row(0, f(t), basis(t)).unwrap();
        }
        let first = lp.solve().unwrap();
        for &t in &fine {
            lp.add_row(0, f(t), basis(t)).unwrap();
        }
        let warm = lp.solve().unwrap();
        let rows = coarse
            .iter()
            .chain(&fine)
            .map(|&t| Row { t, target: f(t), coeffs: basis(t) })
            .collect();
        let cold = solve_epigraph(3, &[Block { weight: 1.0, rows }]).unwrap();
        assert!(first.value <= warm.value + 1e-12);
        assert!((warm.value - cold.value).abs() < 1e-12, "{} {}", warm.value, cold.value);
    }

    #[test]
    fn zero_equality_row_is_harmless() {
        // the second basis function vanishes on the grid; its coefficient is reported as 0
        let rows = grid(8)
            .into_iter()
            .map(|t| Row { t, target: 1.0 + t, coeffs: vec![1.0, 0.0] })
            .collect();
        let s = solve_epigraph(2, &[Block { weight: 1.0, rows }]).unwrap();
        assert!((s.value - 0.4375).abs() < 1e-12);
        assert_eq!(s.coeffs[1], 0.0);
    }
}
