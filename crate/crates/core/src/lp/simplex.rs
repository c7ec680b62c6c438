//! Dense bounded-variable primal simplex.
//!
//! The input box LP is rewritten into standard form
//! `A'x' = b'`, `0 ≤ x' ≤ u'`, `b' ≥ 0`: finite lower bounds are shifted to
//! zero, variables bounded only above are reflected, free variables are split.
//! Rows are scaled to unit max-norm and sign-flipped so that the all-artificial
//! basis is feasible. Phase one minimizes the sum of artificials; its optimal
//! duals are a Farkas certificate whenever that sum is positive.
//!
//! Pricing is Dantzig's rule, switching to Bland's rule after a run of
//! degenerate pivots until progress resumes. Every choice is index-ordered, so
//! a given input always produces the same pivot sequence.

use super::BoxLp;

pub(crate) const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-11;
const DEGENERATE_STEP: f64 = 1e-13;
const DEGENERATE_RUN_BEFORE_BLAND: usize = 30;
/// Pivots between rebuilds of the tableau from the basis matrix.
const REINVERT_EVERY: usize = 64;

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = lower + x'`
    Shift { col: usize, lower: f64 },
    /// `x = upper − x'`
    Reflect { col: usize, upper: f64 },
    /// `x = x'⁺ − x'⁻`
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
}

pub(crate) enum PhaseOne {
    Feasible(Vec<f64>),
    /// Phase-one optimum and dual vector in original row space.
    Infeasible { duals: Vec<f64>, infeasibility: f64 },
}

pub(crate) enum Optimum {
    Optimal(Vec<f64>),
    Unbounded,
}

pub(crate) struct Simplex<'a> {
    lp: &'a BoxLp,
    m: usize,
    /// Structural columns in standard form.
    n: usize,
    map: Vec<VarMap>,
    /// Row multipliers: standard row i = row_mult[i] · original row i.
    row_mult: Vec<f64>,
    /// Standard-form matrix, row-major m × n (artificials are implicit).
    a: Vec<f64>,
    b: Vec<f64>,
    /// Tableau B⁻¹[A' | I], row-major m × (n + m).
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<Status>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    blocked: Vec<bool>,
    pub(crate) iterations: usize,
    max_iterations: usize,
}

pub(crate) enum Failure {
    IterationLimit,
    Singular,
}

impl<'a> Simplex<'a> {
    pub(crate) fn new(lp: &'a BoxLp) -> Self {
        let m = lp.n_rows();
        let mut map = Vec::with_capacity(lp.n_vars);
        let mut col_upper = Vec::new();
        for j in 0..lp.n_vars {
            let (l, u) = (lp.lower[j], lp.upper[j]);
            let col = col_upper.len();
            if l.is_finite() {
                map.push(VarMap::Shift { col, lower: l });
                col_upper.push(u - l);
            } else if u.is_finite() {
                map.push(VarMap::Reflect { col, upper: u });
                col_upper.push(f64::INFINITY);
            } else {
                map.push(VarMap::Split { pos: col, neg: col + 1 });
                col_upper.push(f64::INFINITY);
                col_upper.push(f64::INFINITY);
            }
        }
        let n = col_upper.len();

        let mut a = vec![0.0; m * n];
        let mut b = lp.eq_rhs.clone();
        for i in 0..m {
            let row = lp.row(i);
            for (j, vm) in map.iter().enumerate() {
                let v = row[j];
                if v == 0.0 {
                    continue;
                }
                match *vm {
                    VarMap::Shift { col, lower } => {
                        a[i * n + col] = v;
                        b[i] -= v * lower;
                    }
                    VarMap::Reflect { col, upper } => {
                        a[i * n + col] = -v;
                        b[i] -= v * upper;
                    }
                    VarMap::Split { pos, neg } => {
                        a[i * n + pos] = v;
                        a[i * n + neg] = -v;
                    }
                }
            }
        }

        let mut row_mult = vec![1.0; m];
        for i in 0..m {
            let scale = a[i * n..(i + 1) * n].iter().fold(0.0f64, |s, v| s.max(v.abs()));
            let mut mult = if scale > 0.0 { 1.0 / scale } else { 1.0 };
            if b[i] * mult < 0.0 {
                mult = -mult;
            }
            row_mult[i] = mult;
            for v in &mut a[i * n..(i + 1) * n] {
                *v *= mult;
            }
            b[i] *= mult;
        }

        let width = n + m;
        let mut t = vec![0.0; m * width];
        for i in 0..m {
            t[i * width..i * width + n].copy_from_slice(&a[i * n..(i + 1) * n]);
            t[i * width + n + i] = 1.0;
        }
        let mut upper = col_upper;
        upper.extend(std::iter::repeat_n(f64::INFINITY, m));
        let mut status = vec![Status::AtLower; width];
        for i in 0..m {
            status[n + i] = Status::Basic;
        }

        Simplex {
            lp,
            m,
            n,
            map,
            row_mult,
            a,
            beta: b.clone(),
            b,
            t,
            basis: (n..n + m).collect(),
            status,
            upper,
            cost: vec![0.0; width],
            d: vec![0.0; width],
            blocked: vec![false; width],
            iterations: 0,
            max_iterations: 20_000 + 50 * (width + m),
        }
    }

    fn width(&self) -> usize {
        self.n + self.m
    }

    fn set_cost(&mut self, cost: Vec<f64>) {
        let w = self.width();
        self.cost = cost;
        let mut d = self.cost.clone();
        for (r, &bv) in self.basis.iter().enumerate() {
            let cb = self.cost[bv];
            if cb != 0.0 {
                let row = &self.t[r * w..(r + 1) * w];
                for (dj, tj) in d.iter_mut().zip(row) {
                    *dj -= cb * tj;
                }
            }
        }
        for &bv in &self.basis {
            d[bv] = 0.0;
        }
        self.d = d;
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            Status::AtUpper => self.upper[j],
            _ => 0.0,
        }
    }

    /// Runs pivots until optimal or unbounded for the current cost vector.
    fn optimize(&mut self) -> Result<bool, Failure> {
        let w = self.width();
        let mut degenerate_run = 0usize;
        let mut since_reinvert = 0usize;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(Failure::IterationLimit);
            }
            if since_reinvert >= REINVERT_EVERY {
                self.reinvert()?;
                since_reinvert = 0;
            }
            let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;

            // pricing
            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..w {
                if self.blocked[j] || self.status[j] == Status::Basic {
                    continue;
                }
                let dj = self.d[j];
                let dir = match self.status[j] {
                    Status::AtLower if dj < -OPT_TOL => 1.0,
                    Status::AtUpper if dj > OPT_TOL => -1.0,
                    _ => continue,
                };
                if bland {
                    entering = Some((j, dir));
                    break;
                }
                if dj.abs() > best {
                    best = dj.abs();
                    entering = Some((j, dir));
                }
            }
            let Some((q, dir)) = entering else {
                // confirm optimality on a freshly factored tableau
                if since_reinvert > 0 {
                    self.reinvert()?;
                    since_reinvert = 0;
                    continue;
                }
                return Ok(true);
            };

            // ratio test
            let mut theta = f64::INFINITY;
            let mut leave: Option<usize> = None;
            let mut leave_alpha = 0.0;
            for i in 0..self.m {
                let alpha = dir * self.t[i * w + q];
                let limit = if alpha > PIVOT_TOL {
                    (self.beta[i] / alpha).max(0.0)
                } else if alpha < -PIVOT_TOL && self.upper[self.basis[i]].is_finite() {
                    ((self.upper[self.basis[i]] - self.beta[i]) / -alpha).max(0.0)
                } else {
                    continue;
                };
                let better = match leave {
                    None => limit < theta,
                    Some(r) => {
                        if limit < theta - 1e-12 {
                            true
                        } else if limit <= theta + 1e-12 {
                            if bland {
                                self.basis[i] < self.basis[r]
                            } else {
                                alpha.abs() > leave_alpha
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    theta = limit;
                    leave = Some(i);
                    leave_alpha = alpha.abs();
                }
            }

            let flip = self.upper[q].is_finite() && self.upper[q] <= theta;
            if !flip && leave.is_none() {
                return Ok(false);
            }
            self.iterations += 1;
            since_reinvert += 1;
            if flip {
                theta = self.upper[q];
            }
            if theta <= DEGENERATE_STEP {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }

            for i in 0..self.m {
                self.beta[i] -= dir * self.t[i * w + q] * theta;
            }
            if flip {
                self.status[q] = if dir > 0.0 { Status::AtUpper } else { Status::AtLower };
                continue;
            }

            let r = leave.expect("checked above");
            let alpha_r = dir * self.t[r * w + q];
            let old = self.basis[r];
            self.status[old] = if alpha_r > 0.0 { Status::AtLower } else { Status::AtUpper };
            self.beta[r] = if dir > 0.0 { theta } else { self.upper[q] - theta };
            self.pivot(r, q);
            self.basis[r] = q;
            self.status[q] = Status::Basic;
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width();
        let p = self.t[r * w + q];
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + q];
            if f == 0.0 {
                continue;
            }
            for (v, pr) in self.t[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
            self.t[i * w + q] = 0.0;
        }
        let f = self.d[q];
        if f != 0.0 {
            for (v, pr) in self.d.iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
        }
        self.d[q] = 0.0;
    }

    /// Rebuilds `B⁻¹[A' | I]`, the basic values and the reduced costs from
    /// the basis alone, discarding error accumulated by tableau updates.
    fn reinvert(&mut self) -> Result<(), Failure> {
        let (m, n, w) = (self.m, self.n, self.width());
        let mut bmat = vec![0.0; m * m];
        for (r, &bv) in self.basis.iter().enumerate() {
            for (i, c) in self.column(bv).into_iter().enumerate() {
                bmat[i * m + r] = c;
            }
        }
        let binv = invert(bmat, m).ok_or(Failure::Singular)?;
        let mut t = vec![0.0; m * w];
        for i in 0..m {
            let bi = &binv[i * m..(i + 1) * m];
            let row = &mut t[i * w..(i + 1) * w];
            for (k, &f) in bi.iter().enumerate() {
                if f == 0.0 {
                    continue;
                }
                for (v, a) in row[..n].iter_mut().zip(&self.a[k * n..(k + 1) * n]) {
                    *v += f * a;
                }
            }
            row[n..].copy_from_slice(bi);
        }
        for (r, &bv) in self.basis.iter().enumerate() {
            for i in 0..m {
                t[i * w + bv] = if i == r { 1.0 } else { 0.0 };
            }
        }
        self.t = t;
        let x = self.fresh_values()?;
        self.beta = self.basis.iter().map(|&bv| x[bv]).collect();
        let cost = std::mem::take(&mut self.cost);
        self.set_cost(cost);
        Ok(())
    }

    /// Column `j` of the standard-form matrix `[A' | I]`.
    fn column(&self, j: usize) -> Vec<f64> {
        if j < self.n {
            (0..self.m).map(|i| self.a[i * self.n + j]).collect()
        } else {
            let mut e = vec![0.0; self.m];
            e[j - self.n] = 1.0;
            e
        }
    }

    /// Recomputes basic values from scratch: solves `B x_B = b' − N x_N`.
    fn fresh_values(&self) -> Result<Vec<f64>, Failure> {
        let w = self.width();
        let mut rhs = self.b.clone();
        for j in 0..w {
            if self.status[j] == Status::Basic {
                continue;
            }
            let v = self.nonbasic_value(j);
            if v != 0.0 {
                for (i, c) in self.column(j).iter().enumerate() {
                    rhs[i] -= c * v;
                }
            }
        }
        let mut bmat = vec![0.0; self.m * self.m];
        for (r, &bv) in self.basis.iter().enumerate() {
            for (i, c) in self.column(bv).into_iter().enumerate() {
                bmat[i * self.m + r] = c;
            }
        }
        let xb = lu_solve(bmat, rhs, self.m, false).ok_or(Failure::Singular)?;
        let mut x = vec![0.0; w];
        for j in 0..w {
            x[j] = self.nonbasic_value(j);
        }
        for (r, &bv) in self.basis.iter().enumerate() {
            x[bv] = xb[r];
        }
        Ok(x)
    }

    /// Dual vector `y'` with `B^T y' = c_B`, mapped back to original rows.
    fn duals(&self) -> Result<Vec<f64>, Failure> {
        let mut bmat = vec![0.0; self.m * self.m];
        for (r, &bv) in self.basis.iter().enumerate() {
            for (i, c) in self.column(bv).into_iter().enumerate() {
                bmat[i * self.m + r] = c;
            }
        }
        let cb: Vec<f64> = self.basis.iter().map(|&bv| self.cost[bv]).collect();
        let y = lu_solve(bmat, cb, self.m, true).ok_or(Failure::Singular)?;
        Ok(y.iter().zip(&self.row_mult).map(|(v, s)| v * s).collect())
    }

    fn to_original(&self, xs: &[f64]) -> Vec<f64> {
        self.map
            .iter()
            .enumerate()
            .map(|(j, vm)| {
                let v = match *vm {
                    VarMap::Shift { col, lower } => lower + xs[col],
                    VarMap::Reflect { col, upper } => upper - xs[col],
                    VarMap::Split { pos, neg } => xs[pos] - xs[neg],
                };
                // snap tiny bound overshoots from round-off
                let (l, u) = (self.lp.lower[j], self.lp.upper[j]);
                if v < l && l - v <= 1e-12 * (1.0 + l.abs()) {
                    l
                } else if v > u && v - u <= 1e-12 * (1.0 + u.abs()) {
                    u
                } else {
                    v
                }
            })
            .collect()
    }

    pub(crate) fn phase_one(&mut self, feas_tol: f64) -> Result<PhaseOne, Failure> {
        let w = self.width();
        let mut cost = vec![0.0; w];
        for c in &mut cost[self.n..] {
            *c = 1.0;
        }
        self.set_cost(cost);
        self.optimize()?;

        let infeasibility: f64 = self
            .basis
            .iter()
            .zip(&self.beta)
            .filter(|(bv, _)| **bv >= self.n)
            .map(|(_, v)| v.max(0.0))
            .sum();

        if infeasibility <= feas_tol {
            // park artificials at zero for the rest of the solve
            for j in self.n..w {
                self.blocked[j] = true;
                self.upper[j] = 0.0;
            }
            let xs = self.fresh_values()?;
            Ok(PhaseOne::Feasible(self.to_original(&xs[..self.n])))
        } else {
            Ok(PhaseOne::Infeasible {
                duals: self.duals()?,
                infeasibility,
            })
        }
    }

    /// Phase two on the original objective; call after a feasible phase one.
    pub(crate) fn phase_two(&mut self, objective: &[f64]) -> Result<Optimum, Failure> {
        let w = self.width();
        let mut cost = vec![0.0; w];
        for (j, vm) in self.map.iter().enumerate() {
            let c = objective[j];
            match *vm {
                VarMap::Shift { col, .. } => cost[col] = c,
                VarMap::Reflect { col, .. } => cost[col] = -c,
                VarMap::Split { pos, neg } => {
                    cost[pos] = c;
                    cost[neg] = -c;
                }
            }
        }
        self.set_cost(cost);
        if !self.optimize()? {
            return Ok(Optimum::Unbounded);
        }
        let xs = self.fresh_values()?;
        Ok(Optimum::Optimal(self.to_original(&xs[..self.n])))
    }
}

/// Dense LU with partial pivoting. Solves `M x = rhs`, or `Mᵀ x = rhs` when
/// `transpose` is set. Returns `None` on a numerically singular matrix.
/// Gauss–Jordan inverse with partial pivoting; `None` when singular.
fn invert(mut mat: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    let scale = mat.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if n > 0 && scale == 0.0 {
        return None;
    }
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for k in 0..n {
        let (p, pv) = (k..n)
            .map(|i| (i, mat[i * n + k].abs()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pv <= 1e-14 * scale {
            return None;
        }
        if p != k {
            for j in 0..n {
                mat.swap(k * n + j, p * n + j);
                inv.swap(k * n + j, p * n + j);
            }
        }
        let piv = mat[k * n + k];
        for j in 0..n {
            mat[k * n + j] /= piv;
            inv[k * n + j] /= piv;
        }
        for i in 0..n {
            if i == k {
                continue;
            }
            let f = mat[i * n + k];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                mat[i * n + j] -= f * mat[k * n + j];
                inv[i * n + j] -= f * inv[k * n + j];
            }
        }
    }
    Some(inv)
}

pub(crate) fn lu_solve(mut mat: Vec<f64>, mut rhs: Vec<f64>, n: usize, transpose: bool) -> Option<Vec<f64>> {
    if transpose {
        let mut tr = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                tr[j * n + i] = mat[i * n + j];
            }
        }
        mat = tr;
    }
    let scale = mat.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if n == 0 {
        return Some(rhs);
    }
    if scale == 0.0 {
        return None;
    }
    for k in 0..n {
        let (p, pv) = (k..n)
            .map(|i| (i, mat[i * n + k].abs()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pv <= 1e-14 * scale {
            return None;
        }
        if p != k {
            for j in 0..n {
                mat.swap(k * n + j, p * n + j);
            }
            rhs.swap(k, p);
        }
        let piv = mat[k * n + k];
        for i in (k + 1)..n {
            let f = mat[i * n + k] / piv;
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                mat[i * n + j] -= f * mat[k * n + j];
            }
            rhs[i] -= f * rhs[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for j in (k + 1)..n {
            s -= mat[k * n + j] * x[j];
        }
        x[k] = s / mat[k * n + k];
    }
    Some(x)
}
