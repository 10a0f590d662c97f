//! Dense-inverse revised dual simplex for covering LPs
//! `min c·x  s.t.  A x >= 1,  x >= 0` with a 0/1 matrix `A` and `c >= 0`.
//!
//! The all-surplus basis is dual feasible whenever `c >= 0`, so no phase 1
//! is needed. The basis inverse is updated in product form on a dense
//! `m x m` array and refactorized every [`REFACTOR_EVERY`] pivots.

use super::LpError;

const REFACTOR_EVERY: usize = 50;
const PRIMAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
/// Consecutive dual-degenerate pivots before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 60;

/// A covering LP in compressed column form.
#[derive(Clone, Debug, Default)]
pub struct CoverMatrix {
    num_rows: usize,
    col_start: Vec<usize>,
    row_index: Vec<u32>,
    costs: Vec<f64>,
}

impl CoverMatrix {
    pub fn new(num_rows: usize) -> Self {
        Self { num_rows, col_start: vec![0], row_index: Vec::new(), costs: Vec::new() }
    }

    /// Adds a column covering `rows` (no duplicates) at cost `cost >= 0`.
    pub fn push_column(&mut self, rows: impl IntoIterator<Item = usize>, cost: f64) {
        debug_assert!(cost >= 0.0);
        for r in rows {
            debug_assert!(r < self.num_rows);
            self.row_index.push(r as u32);
        }
        self.col_start.push(self.row_index.len());
        self.costs.push(cost);
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_columns(&self) -> usize {
        self.costs.len()
    }

    pub fn column(&self, j: usize) -> &[u32] {
        &self.row_index[self.col_start[j]..self.col_start[j + 1]]
    }

    pub fn cost(&self, j: usize) -> f64 {
        self.costs[j]
    }

    pub fn uncovered_rows(&self) -> Vec<usize> {
        let mut covered = vec![false; self.num_rows];
        for &r in &self.row_index {
            covered[r as usize] = true;
        }
        covered.iter().enumerate().filter(|(_, &c)| !c).map(|(i, _)| i).collect()
    }
}

/// Optimal primal and dual vectors of a covering LP.
#[derive(Clone, Debug)]
pub struct LpOutcome {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

struct DualSimplex<'a> {
    a: &'a CoverMatrix,
    m: usize,
    n: usize,
    /// Variable in each basis row; `j >= n` is the surplus of row `j - n`.
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    d: Vec<f64>,
    rho: Vec<f64>,
    alpha: Vec<f64>,
    col: Vec<f64>,
}

impl<'a> DualSimplex<'a> {
    fn new(a: &'a CoverMatrix) -> Self {
        let m = a.num_rows;
        let n = a.num_columns();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = -1.0;
        }
        let mut in_basis = vec![false; n + m];
        for flag in &mut in_basis[n..] {
            *flag = true;
        }
        let mut d = a.costs.clone();
        d.extend(std::iter::repeat(0.0).take(m));
        Self {
            a,
            m,
            n,
            basis: (n..n + m).collect(),
            in_basis,
            binv,
            xb: vec![-1.0; m],
            d,
            rho: vec![0.0; m],
            alpha: vec![0.0; n + m],
            col: vec![0.0; m],
        }
    }

    fn var_cost(&self, j: usize) -> f64 {
        if j < self.n {
            self.a.costs[j]
        } else {
            0.0
        }
    }

    /// Rebuilds the inverse from the basis columns, then `x_B`, `y` and `d`.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut b = vec![0.0f64; m * m];
        for (k, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                for &r in self.a.column(j) {
                    b[r as usize * m + k] = 1.0;
                }
            } else {
                b[(j - self.n) * m + k] = -1.0;
            }
        }
        let mut inv = vec![0.0f64; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        // Gauss-Jordan with partial pivoting.
        for c in 0..m {
            let p = (c..m)
                .max_by(|&i, &k| b[i * m + c].abs().total_cmp(&b[k * m + c].abs()).then(k.cmp(&i)))
                .unwrap();
            let piv = b[p * m + c];
            if piv.abs() < 1e-12 {
                return Err(LpError::Numerical("singular basis".into()));
            }
            if p != c {
                for k in 0..m {
                    b.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let inv_piv = 1.0 / piv;
            for k in 0..m {
                b[c * m + k] *= inv_piv;
                inv[c * m + k] *= inv_piv;
            }
            for i in 0..m {
                if i == c {
                    continue;
                }
                let f = b[i * m + c];
                if f != 0.0 {
                    for k in 0..m {
                        b[i * m + k] -= f * b[c * m + k];
                        inv[i * m + k] -= f * inv[c * m + k];
                    }
                }
            }
        }
        // B^{-1} maps original rows to basis positions; `inv` was computed for
        // B with rows as original rows and columns as basis positions, so
        // inv = B^{-1} with rows indexed by basis position.
        self.binv = inv;
        for k in 0..m {
            self.xb[k] = self.binv[k * m..(k + 1) * m].iter().sum();
        }
        let mut y = vec![0.0; m];
        for (k, &j) in self.basis.iter().enumerate() {
            let cb = self.var_cost(j);
            if cb != 0.0 {
                for i in 0..m {
                    y[i] += cb * self.binv[k * m + i];
                }
            }
        }
        for j in 0..self.n {
            let dot: f64 = self.a.column(j).iter().map(|&r| y[r as usize]).sum();
            self.d[j] = if self.in_basis[j] { 0.0 } else { self.a.costs[j] - dot };
        }
        for i in 0..m {
            self.d[self.n + i] = if self.in_basis[self.n + i] { 0.0 } else { y[i] };
        }
        Ok(())
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (k, &j) in self.basis.iter().enumerate() {
            let cb = self.var_cost(j);
            if cb != 0.0 {
                for i in 0..m {
                    y[i] += cb * self.binv[k * m + i];
                }
            }
        }
        y
    }

    fn solve(mut self) -> Result<LpOutcome, LpError> {
        let (m, n) = (self.m, self.n);
        let max_pivots = 50 * (m + n) + 1000;
        let mut pivots = 0;
        let mut since_refactor = 0;
        let mut degenerate_run = 0;

        loop {
            let bland = degenerate_run >= DEGENERATE_LIMIT;
            let leave = if bland {
                (0..m)
                    .filter(|&k| self.xb[k] < -PRIMAL_TOL)
                    .min_by_key(|&k| self.basis[k])
            } else {
                (0..m)
                    .filter(|&k| self.xb[k] < -PRIMAL_TOL)
                    .min_by(|&a, &b| self.xb[a].total_cmp(&self.xb[b]).then(a.cmp(&b)))
            };
            let Some(r) = leave else {
                if since_refactor > 0 {
                    self.refactor()?;
                    since_refactor = 0;
                    continue;
                }
                break;
            };
            if pivots >= max_pivots {
                return Err(LpError::IterationLimit(pivots));
            }

            // Pivot row: alpha_j = rho . a_j with rho = row r of B^{-1}.
            self.rho.copy_from_slice(&self.binv[r * m..(r + 1) * m]);
            let mut best: Option<(usize, f64, f64)> = None;
            for j in 0..n + m {
                if self.in_basis[j] {
                    continue;
                }
                let aj = if j < n {
                    self.a.column(j).iter().map(|&i| self.rho[i as usize]).sum::<f64>()
                } else {
                    -self.rho[j - n]
                };
                self.alpha[j] = aj;
                if aj >= -PIVOT_TOL {
                    continue;
                }
                let ratio = self.d[j].max(0.0) / -aj;
                best = match best {
                    None => Some((j, ratio, aj)),
                    Some((bj, br, ba)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                        let better = if bland {
                            ratio < br && !tie
                        } else if tie {
                            aj.abs() > ba.abs() * (1.0 + 1e-9)
                        } else {
                            ratio < br
                        };
                        if better { Some((j, ratio, aj)) } else { Some((bj, br, ba)) }
                    }
                };
            }
            let Some((q, _, alpha_rq)) = best else {
                if since_refactor > 0 {
                    self.refactor()?;
                    since_refactor = 0;
                    continue;
                }
                return Err(LpError::Infeasible(Vec::new()));
            };

            // Entering column in basis coordinates.
            if q < n {
                self.col.iter_mut().for_each(|v| *v = 0.0);
                for &i in self.a.column(q) {
                    let i = i as usize;
                    for k in 0..m {
                        self.col[k] += self.binv[k * m + i];
                    }
                }
            } else {
                let i = q - n;
                for k in 0..m {
                    self.col[k] = -self.binv[k * m + i];
                }
            }
            let piv = self.col[r];
            if (piv - alpha_rq).abs() > 1e-7 * (1.0 + piv.abs()) || piv.abs() < PIVOT_TOL {
                // Row and column disagree: the inverse has drifted.
                self.refactor()?;
                since_refactor = 0;
                continue;
            }

            let theta_d = self.d[q] / piv;
            degenerate_run = if theta_d.abs() <= 1e-12 { degenerate_run + 1 } else { 0 };
            for j in 0..n + m {
                if !self.in_basis[j] {
                    self.d[j] -= theta_d * self.alpha[j];
                }
            }
            let leaving = self.basis[r];
            self.d[q] = 0.0;
            self.d[leaving] = -theta_d;

            let theta_p = self.xb[r] / piv;
            for k in 0..m {
                self.xb[k] -= theta_p * self.col[k];
            }
            self.xb[r] = theta_p;

            let inv_piv = 1.0 / piv;
            for k in 0..m {
                self.binv[r * m + k] *= inv_piv;
            }
            let (head, rest) = self.binv.split_at_mut(r * m);
            let (prow, tail) = rest.split_at_mut(m);
            for (k, row) in head.chunks_exact_mut(m).enumerate() {
                let f = self.col[k];
                if f != 0.0 {
                    row.iter_mut().zip(prow.iter()).for_each(|(v, p)| *v -= f * p);
                }
            }
            for (k, row) in tail.chunks_exact_mut(m).enumerate() {
                let f = self.col[r + 1 + k];
                if f != 0.0 {
                    row.iter_mut().zip(prow.iter()).for_each(|(v, p)| *v -= f * p);
                }
            }

            self.in_basis[leaving] = false;
            self.in_basis[q] = true;
            self.basis[r] = q;
            pivots += 1;
            since_refactor += 1;
            if since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
                since_refactor = 0;
            }
        }

        let mut x = vec![0.0; n];
        for (k, &j) in self.basis.iter().enumerate() {
            if j < n {
                x[j] = self.xb[k].max(0.0);
            }
        }
        let y: Vec<f64> = self.duals().into_iter().map(|v| v.max(0.0)).collect();
        let objective = x.iter().zip(&self.a.costs).map(|(x, c)| x * c).sum();
        Ok(LpOutcome { x, y, objective, pivots })
    }
}

/// Solves the covering LP to optimality.
pub fn solve_cover(a: &CoverMatrix) -> Result<LpOutcome, LpError> {
    if a.num_rows == 0 {
        return Ok(LpOutcome { x: vec![0.0; a.num_columns()], y: Vec::new(), objective: 0.0, pivots: 0 });
    }
    let uncovered = a.uncovered_rows();
    if !uncovered.is_empty() {
        return Err(LpError::Infeasible(uncovered));
    }
    DualSimplex::new(a).solve()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: usize, cols: &[(&[usize], f64)]) -> CoverMatrix {
        let mut a = CoverMatrix::new(rows);
        for (r, c) in cols {
            a.push_column(r.iter().copied(), *c);
        }
        a
    }

    /// Brute force over all bases of the standard-form LP would be the
    /// textbook oracle; for these 2-row instances enumerating the vertices
    /// of {x : A x >= 1, x >= 0} by hand is simpler.
    #[test]
    fn picks_cheaper_combined_column() {
        let a = matrix(2, &[(&[0], 10.0), (&[1], 10.0), (&[0, 1], 15.0)]);
        let out = solve_cover(&a).unwrap();
        assert!((out.objective - 15.0).abs() < 1e-9);
        assert!((out.x[2] - 1.0).abs() < 1e-9);
        assert!((out.y.iter().sum::<f64>() - 15.0).abs() < 1e-9);
    }

    #[test]
    fn fractional_triangle() {
        // Odd cycle: optimum x = 1/2 on each edge, value 1.5.
        let a = matrix(3, &[(&[0, 1], 1.0), (&[1, 2], 1.0), (&[0, 2], 1.0)]);
        let out = solve_cover(&a).unwrap();
        assert!((out.objective - 1.5).abs() < 1e-9);
        for v in &out.x {
            assert!((v - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn uncovered_row_is_infeasible() {
        let a = matrix(3, &[(&[0, 1], 1.0)]);
        match solve_cover(&a) {
            Err(LpError::Infeasible(rows)) => assert_eq!(rows, vec![2]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_cost_columns() {
        let a = matrix(2, &[(&[0], 0.0), (&[0, 1], 5.0), (&[1], 3.0)]);
        let out = solve_cover(&a).unwrap();
        assert!((out.objective - 3.0).abs() < 1e-9);
        assert!(out.y[0].abs() < 1e-9);
    }
}
