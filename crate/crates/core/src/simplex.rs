//! Two-phase primal simplex for `min cᵀx  s.t.  Ax = b, x ≥ 0`.
//!
//! The basis inverse is held densely and updated by elementary row
//! operations; structural columns are produced on demand by a
//! [`ColumnSource`], so wide problems with cheap implicit columns (one per
//! deterministic strategy) never materialize the full matrix. Every row
//! gets a phase-1 artificial. Rows found linearly dependent after phase 1
//! keep their artificial basic and frozen at zero.

use crate::error::{Error, Result};

pub trait ColumnSource {
    fn num_rows(&self) -> usize;
    fn num_cols(&self) -> usize;
    /// Writes the nonzeros of column `j` into `out` (cleared first).
    fn column(&self, j: usize, out: &mut Vec<(usize, f64)>);
    fn cost(&self, j: usize) -> f64;
    /// `yᵀ a_j`. Override when a cheaper path than [`ColumnSource::column`]
    /// exists.
    fn dot(&self, j: usize, y: &[f64], scratch: &mut Vec<(usize, f64)>) -> f64 {
        self.column(j, scratch);
        scratch.iter().map(|&(i, v)| y[i] * v).sum()
    }
    /// Column minimizing the reduced cost `c_j − yᵀa_j` (with `c = 0` when
    /// `with_costs` is false) and that reduced cost. `None` means no fast
    /// path, and the solver scans every column instead.
    fn best_reduced_cost(&self, _y: &[f64], _with_costs: bool) -> Option<(usize, f64)> {
        None
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    /// Residual `max |b − Ax|` below which phase 1 declares feasibility.
    pub feasibility_tol: f64,
    /// Reduced costs above `−optimality_tol` count as non-improving.
    pub optimality_tol: f64,
    /// Smallest pivot element accepted in ratio tests and drive-out.
    pub pivot_tol: f64,
    /// Pivots between drift checks of the basis inverse; it is rebuilt when
    /// `‖B x_B − b‖∞` exceeds `feasibility_tol / 100`.
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-10,
            pivot_tol: 1e-9,
            refactor_every: 64,
            bland_after: 50,
            max_iterations: 2_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    /// Dense primal values of the structural columns.
    pub x: Vec<f64>,
    pub objective: f64,
    /// `max_i |b_i − (Ax)_i|` at the returned point.
    pub residual: f64,
    pub iterations: usize,
    /// Rows detected as linearly dependent on the others.
    pub redundant_rows: usize,
    /// Final basis, reusable as a warm start for a new right-hand side.
    pub basis: Basis,
}

/// Snapshot of an optimal basis. Only the right-hand side may change
/// between the solve that produced it and [`minimize_from`].
#[derive(Clone, Debug)]
pub struct Basis {
    vars: Vec<usize>,
    row_sign: Vec<f64>,
    frozen: Vec<bool>,
    num_cols: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

struct Solver<'a, P: ColumnSource> {
    problem: &'a P,
    opts: SimplexOptions,
    m: usize,
    n: usize,
    /// Row `i` of the stored system is `row_sign[i]` times the input row.
    row_sign: Vec<f64>,
    rhs: Vec<f64>,
    /// Variable in each basis position; ids `>= n` are artificials.
    basis: Vec<usize>,
    /// Basis position of each variable, if basic.
    position: Vec<Option<usize>>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    frozen: Vec<bool>,
    iterations: usize,
    since_refactor: usize,
    scratch: Vec<(usize, f64)>,
}

impl<'a, P: ColumnSource> Solver<'a, P> {
    fn new(problem: &'a P, b: &[f64], opts: SimplexOptions) -> Result<Self> {
        let m = problem.num_rows();
        let n = problem.num_cols();
        if b.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "{} right-hand-side entries for {m} rows",
                b.len()
            )));
        }
        let row_sign: Vec<f64> = b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        let rhs: Vec<f64> = b.iter().zip(&row_sign).map(|(v, s)| v * s).collect();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        let mut position = vec![None; n + m];
        for i in 0..m {
            position[n + i] = Some(i);
        }
        Ok(Solver {
            problem,
            opts,
            m,
            n,
            row_sign,
            xb: rhs.clone(),
            rhs,
            basis: (n..n + m).collect(),
            position,
            binv,
            frozen: vec![false; m],
            iterations: 0,
            since_refactor: 0,
            scratch: Vec::new(),
        })
    }

    /// Sign-adjusted sparse column of any variable.
    fn column(&mut self, var: usize, out: &mut Vec<(usize, f64)>) {
        if var >= self.n {
            out.clear();
            out.push((var - self.n, 1.0));
        } else {
            self.problem.column(var, out);
            for e in out.iter_mut() {
                e.1 *= self.row_sign[e.0];
            }
        }
    }

    fn cost(&self, var: usize, phase: Phase) -> f64 {
        match (phase, var >= self.n) {
            (Phase::One, true) => 1.0,
            (Phase::One, false) => 0.0,
            (Phase::Two, true) => 0.0,
            (Phase::Two, false) => self.problem.cost(var),
        }
    }

    /// `B⁻¹ a`
    fn ftran(&self, col: &[(usize, f64)]) -> Vec<f64> {
        let m = self.m;
        let mut u = vec![0.0; m];
        for &(r, v) in col {
            for (i, ui) in u.iter_mut().enumerate() {
                *ui += self.binv[i * m + r] * v;
            }
        }
        u
    }

    /// Simplex multipliers `c_Bᵀ B⁻¹`, returned in input-row sign.
    fn duals(&self, phase: Phase) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (k, &var) in self.basis.iter().enumerate() {
            let c = self.cost(var, phase);
            if c != 0.0 {
                let row = &self.binv[k * m..(k + 1) * m];
                for (yi, bi) in y.iter_mut().zip(row) {
                    *yi += c * bi;
                }
            }
        }
        for (yi, s) in y.iter_mut().zip(&self.row_sign) {
            *yi *= s;
        }
        y
    }

    fn pivot(&mut self, r: usize, entering: usize, u: &[f64]) {
        let m = self.m;
        let theta = self.xb[r] / u[r];
        for (i, (x, &ui)) in self.xb.iter_mut().zip(u).enumerate() {
            if i != r && ui != 0.0 {
                *x -= theta * ui;
            }
        }
        self.xb[r] = theta;

        let inv = 1.0 / u[r];
        let (head, tail) = self.binv.split_at_mut(r * m);
        let (pivot_row, rest) = tail.split_at_mut(m);
        for v in pivot_row.iter_mut() {
            *v *= inv;
        }
        for (i, &ui) in u.iter().enumerate() {
            if i == r || ui == 0.0 {
                continue;
            }
            let row = if i < r {
                &mut head[i * m..(i + 1) * m]
            } else {
                &mut rest[(i - r - 1) * m..(i - r) * m]
            };
            for (a, p) in row.iter_mut().zip(pivot_row.iter()) {
                *a -= ui * p;
            }
        }

        let leaving = self.basis[r];
        self.position[leaving] = None;
        self.position[entering] = Some(r);
        self.basis[r] = entering;
        self.iterations += 1;
        self.since_refactor += 1;
        if self.since_refactor >= self.opts.refactor_every {
            if self.basis_drift() > self.opts.feasibility_tol * 1e-2 {
                // A failed refactorization keeps the updated inverse.
                let _ = self.refactor();
            } else {
                self.since_refactor = 0;
            }
        }
    }

    /// `‖B x_B − b‖∞` in stored row signs.
    fn basis_drift(&mut self) -> f64 {
        let mut r = self.rhs.clone();
        let mut col = Vec::new();
        for k in 0..self.m {
            let var = self.basis[k];
            let xk = self.xb[k];
            if xk != 0.0 {
                self.column(var, &mut col);
                for &(i, v) in &col {
                    r[i] -= v * xk;
                }
            }
        }
        r.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Recomputes `B⁻¹` by Gauss-Jordan elimination and `x_B = B⁻¹ b`.
    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut bmat = vec![0.0; m * m];
        let mut col = Vec::new();
        for k in 0..m {
            let var = self.basis[k];
            self.column(var, &mut col);
            for &(i, v) in &col {
                bmat[i * m + k] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let (p, best) =
                (c..m)
                    .map(|i| (i, bmat[i * m + c].abs()))
                    .fold((c, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            if best < 1e-14 {
                return Err(Error::NonConvergence {
                    rotations: self.iterations,
                    residual: best,
                });
            }
            if p != c {
                for j in 0..m {
                    bmat.swap(p * m + j, c * m + j);
                    inv.swap(p * m + j, c * m + j);
                }
            }
            let d = 1.0 / bmat[c * m + c];
            for j in 0..m {
                bmat[c * m + j] *= d;
                inv[c * m + j] *= d;
            }
            for i in 0..m {
                if i == c {
                    continue;
                }
                let f = bmat[i * m + c];
                if f == 0.0 {
                    continue;
                }
                for j in 0..m {
                    bmat[i * m + j] -= f * bmat[c * m + j];
                    inv[i * m + j] -= f * inv[c * m + j];
                }
            }
        }
        self.binv = inv;
        for i in 0..m {
            self.xb[i] = (0..m).map(|j| self.binv[i * m + j] * self.rhs[j]).sum();
        }
        self.since_refactor = 0;
        Ok(())
    }

    /// Chooses the entering variable by Dantzig's rule, or Bland's rule
    /// when `bland` is set. Only structural columns may enter.
    fn price(&mut self, phase: Phase, bland: bool) -> Option<usize> {
        let y = self.duals(phase);
        let tol = self.opts.optimality_tol;
        if !bland {
            if let Some((j, dj)) = self.problem.best_reduced_cost(&y, phase == Phase::Two) {
                if dj >= -tol {
                    return None;
                }
                if self.position[j].is_none() {
                    return Some(j);
                }
            }
        }
        let mut best: Option<(usize, f64)> = None;
        let mut scratch = std::mem::take(&mut self.scratch);
        for j in 0..self.n {
            if self.position[j].is_some() {
                continue;
            }
            let dj = self.cost(j, phase) - self.problem.dot(j, &y, &mut scratch);
            if dj < -tol {
                if bland {
                    best = Some((j, dj));
                    break;
                }
                if best.is_none_or(|(_, b)| dj < b) {
                    best = Some((j, dj));
                }
            }
        }
        self.scratch = scratch;
        best.map(|(j, _)| j)
    }

    /// Harris-style two-pass ratio test. Returns the leaving position.
    fn ratio_test(&self, u: &[f64], bland: bool) -> Option<usize> {
        let tol = self.opts.pivot_tol;
        let slack = self.opts.feasibility_tol * 1e-2;
        let mut bound = f64::INFINITY;
        for ((&ui, &x), &frozen) in u.iter().zip(&self.xb).zip(&self.frozen) {
            if !frozen && ui > tol {
                bound = bound.min((x.max(0.0) + slack) / ui);
            }
        }
        if !bound.is_finite() {
            return None;
        }
        let mut choice: Option<usize> = None;
        for i in 0..self.m {
            if self.frozen[i] || u[i] <= tol || self.xb[i].max(0.0) / u[i] > bound {
                continue;
            }
            choice = match choice {
                None => Some(i),
                Some(c) if bland => {
                    if self.basis[i] < self.basis[c] {
                        Some(i)
                    } else {
                        Some(c)
                    }
                }
                Some(c) => {
                    if u[i] > u[c] {
                        Some(i)
                    } else {
                        Some(c)
                    }
                }
            };
        }
        choice
    }

    fn run(&mut self, phase: Phase) -> Result<()> {
        let mut degenerate_run = 0usize;
        let mut col = Vec::new();
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Err(Error::IterationLimit(self.iterations));
            }
            let bland = degenerate_run >= self.opts.bland_after;
            let Some(q) = self.price(phase, bland) else {
                return Ok(());
            };
            self.column(q, &mut col);
            let u = self.ftran(&col);
            let Some(r) = self.ratio_test(&u, bland) else {
                return Err(Error::Unbounded);
            };
            if self.xb[r].max(0.0) / u[r] <= 1e-14 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            if self.xb[r] < 0.0 {
                self.xb[r] = 0.0;
            }
            self.pivot(r, q, &u);
            for v in &mut self.xb {
                if *v < 0.0 && *v > -self.opts.feasibility_tol {
                    *v = 0.0;
                }
            }
        }
    }

    /// Pivots basic artificials out where any structural column has a
    /// usable entry in their row; freezes the rest.
    fn drive_out_artificials(&mut self) {
        let m = self.m;
        let mut scratch = Vec::new();
        let mut col = Vec::new();
        for r in 0..m {
            if self.basis[r] < self.n || self.frozen[r] {
                continue;
            }
            let rho: Vec<f64> = (0..m).map(|i| self.binv[r * m + i] * self.row_sign[i]).collect();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.n {
                if self.position[j].is_some() {
                    continue;
                }
                let a = self.problem.dot(j, &rho, &mut scratch);
                if a.abs() > self.opts.pivot_tol && best.is_none_or(|(_, b)| a.abs() > b.abs()) {
                    best = Some((j, a));
                }
            }
            match best {
                Some((j, _)) => {
                    self.column(j, &mut col);
                    let u = self.ftran(&col);
                    self.pivot(r, j, &u);
                }
                None => self.frozen[r] = true,
            }
        }
        let _ = self.refactor();
    }

    fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (k, &var) in self.basis.iter().enumerate() {
            if var < self.n {
                x[var] = self.xb[k].max(0.0);
            }
        }
        x
    }

    /// `max_i |b_i − (Ax)_i|` in the input row signs.
    fn residual(&mut self, x: &[f64]) -> f64 {
        let mut r: Vec<f64> = self.rhs.iter().zip(&self.row_sign).map(|(v, s)| v * s).collect();
        let mut col = Vec::new();
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                self.problem.column(j, &mut col);
                for &(i, v) in &col {
                    r[i] -= v * xj;
                }
            }
        }
        r.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Dual simplex from a dual-feasible basis until `x_B ≥ 0`.
    fn run_dual(&mut self) -> Result<()> {
        let m = self.m;
        let tol = self.opts.pivot_tol;
        let mut col = Vec::new();
        let mut scratch = Vec::new();
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Err(Error::IterationLimit(self.iterations));
            }
            let leave = (0..m)
                .filter(|&i| !self.frozen[i] && self.xb[i] < -self.opts.feasibility_tol)
                .min_by(|&a, &b| self.xb[a].total_cmp(&self.xb[b]));
            let Some(r) = leave else {
                return Ok(());
            };
            let rho: Vec<f64> = (0..m).map(|i| self.binv[r * m + i] * self.row_sign[i]).collect();
            let y = self.duals(Phase::Two);
            let mut best: Option<(usize, f64, f64)> = None;
            for j in 0..self.n {
                if self.position[j].is_some() {
                    continue;
                }
                let alpha = self.problem.dot(j, &rho, &mut scratch);
                if alpha >= -tol {
                    continue;
                }
                let dj = (self.problem.cost(j) - self.problem.dot(j, &y, &mut scratch)).max(0.0);
                let ratio = dj / -alpha;
                let better = match best {
                    None => true,
                    Some((_, br, ba)) => ratio < br - 1e-12 || (ratio <= br + 1e-12 && -alpha > -ba),
                };
                if better {
                    best = Some((j, ratio, alpha));
                }
            }
            let Some((q, _, _)) = best else {
                return Err(Error::Infeasible { residual: -self.xb[r] });
            };
            self.column(q, &mut col);
            let u = self.ftran(&col);
            if u[r] >= -tol {
                return Err(Error::NonConvergence {
                    rotations: self.iterations,
                    residual: u[r],
                });
            }
            self.pivot(r, q, &u);
        }
    }

    fn snapshot(&self) -> Basis {
        Basis {
            vars: self.basis.clone(),
            row_sign: self.row_sign.clone(),
            frozen: self.frozen.clone(),
            num_cols: self.n,
        }
    }

    fn from_basis(problem: &'a P, b: &[f64], opts: SimplexOptions, start: &Basis) -> Result<Self> {
        let mut s = Solver::new(problem, b, opts)?;
        if start.num_cols != s.n || start.vars.len() != s.m {
            return Err(Error::DimensionMismatch(format!(
                "warm-start basis for {}x{} does not fit {}x{}",
                start.vars.len(),
                start.num_cols,
                s.m,
                s.n
            )));
        }
        s.rhs = b.iter().zip(&start.row_sign).map(|(v, g)| v * g).collect();
        s.row_sign = start.row_sign.clone();
        s.frozen = start.frozen.clone();
        s.position = vec![None; s.n + s.m];
        for (k, &var) in start.vars.iter().enumerate() {
            s.position[var] = Some(k);
        }
        s.basis = start.vars.clone();
        s.refactor()?;
        Ok(s)
    }

    fn finish(mut self) -> Result<LpSolution> {
        self.refactor()?;
        let x = self.primal();
        let residual = self.residual(&x);
        if residual > self.opts.feasibility_tol {
            return Err(Error::Infeasible { residual });
        }
        let objective = x.iter().enumerate().map(|(j, v)| self.problem.cost(j) * v).sum();
        Ok(LpSolution {
            x,
            objective,
            residual,
            iterations: self.iterations,
            redundant_rows: self.frozen.iter().filter(|f| **f).count(),
            basis: self.snapshot(),
        })
    }

    fn phase_one(&mut self) -> Result<f64> {
        self.run(Phase::One)?;
        self.refactor()?;
        let x = self.primal();
        let residual = self.residual(&x);
        if residual > self.opts.feasibility_tol {
            return Err(Error::Infeasible { residual });
        }
        Ok(residual)
    }
}

/// Minimizes `cᵀx` subject to `Ax = b`, `x ≥ 0`.
pub fn minimize<P: ColumnSource>(problem: &P, b: &[f64], opts: SimplexOptions) -> Result<LpSolution> {
    let mut s = Solver::new(problem, b, opts)?;
    s.phase_one()?;
    s.drive_out_artificials();
    s.run(Phase::Two)?;
    s.finish()
}

/// Re-solves a problem whose right-hand side changed, starting from an
/// optimal basis of the previous solve. Runs dual simplex and falls back
/// to [`minimize`] if the warm start breaks down numerically.
pub fn minimize_from<P: ColumnSource>(
    problem: &P,
    b: &[f64],
    opts: SimplexOptions,
    start: &Basis,
) -> Result<LpSolution> {
    let warm = Solver::from_basis(problem, b, opts, start).and_then(|mut s| {
        s.run_dual()?;
        s.run(Phase::Two)?;
        s.finish()
    });
    match warm {
        Ok(sol) => Ok(sol),
        Err(Error::DimensionMismatch(msg)) => Err(Error::DimensionMismatch(msg)),
        Err(_) => minimize(problem, b, opts),
    }
}

/// Phase 1 only: a point of `{Ax = b, x ≥ 0}` or [`Error::Infeasible`].
pub fn find_feasible<P: ColumnSource>(problem: &P, b: &[f64], opts: SimplexOptions) -> Result<LpSolution> {
    let mut s = Solver::new(problem, b, opts)?;
    let residual = s.phase_one()?;
    let x = s.primal();
    Ok(LpSolution {
        objective: x.iter().enumerate().map(|(j, v)| problem.cost(j) * v).sum(),
        x,
        residual,
        iterations: s.iterations,
        redundant_rows: 0,
        basis: s.snapshot(),
    })
}

/// Explicit dense column-major problem; convenient for small systems.
#[derive(Clone, Debug)]
pub struct DenseProblem {
    pub rows: usize,
    pub columns: Vec<Vec<f64>>,
    pub costs: Vec<f64>,
}

impl ColumnSource for DenseProblem {
    fn num_rows(&self) -> usize {
        self.rows
    }

    fn num_cols(&self) -> usize {
        self.columns.len()
    }

    fn column(&self, j: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        out.extend(
            self.columns[j]
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v)),
        );
    }

    fn cost(&self, j: usize) -> f64 {
        self.costs[j]
    }
}
