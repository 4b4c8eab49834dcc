//! Solver-agnostic formulation and solution of the convex cone programs
//! behind every other module: LP, SOCP, SDP, power-cone and geometric-mean
//! problems.
//!
//! A [`ConeProgram`] is a plain description (variables, one linear
//! objective, a list of cone constraints). [`solve`] currently lowers it to
//! Clarabel, but nothing solver-specific leaks out: callers only see
//! [`Solution`] and re-check feasibility through [`verify_solution`], which
//! recomputes every constraint residual from scratch. Acceptance of any
//! downstream result requires that independent verify pass, never solver
//! status alone.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::DMatrix;
use thiserror::Error;

pub const DEFAULT_FEAS_TOL: f64 = 1e-8;
pub const DEFAULT_GAP_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("constraint references variable {var} but program has {nvars}")]
    UnknownVariable { var: usize, nvars: usize },
    #[error("PSD block expects {expected} upper-triangle entries, got {got}")]
    BadPsdBlock { expected: usize, got: usize },
    #[error("power cone exponent must lie in (0, 1), got {0}")]
    BadPowerExponent(f64),
    #[error("solver reported numerical failure: {0}")]
    NumericalFailure(String),
}

/// A sparse affine expression `constant + sum coef * x[var]`.
#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        LinExpr { constant: c, terms: Vec::new() }
    }

    pub fn var(index: usize) -> Self {
        LinExpr { constant: 0.0, terms: vec![(index, 1.0)] }
    }

    pub fn term(index: usize, coef: f64) -> Self {
        LinExpr { constant: 0.0, terms: vec![(index, coef)] }
    }

    pub fn plus(mut self, index: usize, coef: f64) -> Self {
        if coef != 0.0 {
            self.terms.push((index, coef));
        }
        self
    }

    pub fn plus_const(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn plus_expr(mut self, other: &LinExpr, scale: f64) -> Self {
        self.constant += scale * other.constant;
        self.terms
            .extend(other.terms.iter().map(|&(i, c)| (i, scale * c)));
        self
    }

    pub fn scaled(mut self, scale: f64) -> Self {
        self.constant *= scale;
        for t in &mut self.terms {
            t.1 *= scale;
        }
        self
    }

    pub fn negated(self) -> Self {
        self.scaled(-1.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
    }

    fn max_var(&self) -> Option<usize> {
        self.terms.iter().map(|&(i, _)| i).max()
    }
}

/// One cone constraint over affine expressions of the program variables.
#[derive(Debug, Clone)]
pub enum Constraint {
    /// Every expression equals zero.
    Zero(Vec<LinExpr>),
    /// Every expression is nonnegative.
    Nonneg(Vec<LinExpr>),
    /// `(t, x...)`: the 2-norm of the tail is at most the head.
    SecondOrder(Vec<LinExpr>),
    /// Symmetric matrix is positive semidefinite; entries are the upper
    /// triangle in column-major order (`(0,0), (0,1), (1,1), (0,2), ...`).
    PsdTriangle { dim: usize, entries: Vec<LinExpr> },
    /// `(x1, x2, x3)` with `x1^alpha * x2^(1-alpha) >= |x3|`, `x1, x2 >= 0`.
    Power { alpha: f64, entries: [LinExpr; 3] },
    /// Hypograph of the geometric mean: `hypo <= (prod factors)^(1/k)`,
    /// all factors nonnegative.
    GeoMean { hypo: LinExpr, factors: Vec<LinExpr> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Contiguous block of scalar variables.
#[derive(Debug, Clone, Copy)]
pub struct VarBlock {
    pub start: usize,
    pub len: usize,
}

impl VarBlock {
    pub fn index(&self, i: usize) -> usize {
        assert!(i < self.len);
        self.start + i
    }
}

/// Column-major matrix block of scalar variables.
#[derive(Debug, Clone, Copy)]
pub struct MatBlock {
    pub start: usize,
    pub rows: usize,
    pub cols: usize,
}

impl MatBlock {
    pub fn index(&self, r: usize, c: usize) -> usize {
        assert!(r < self.rows && c < self.cols);
        self.start + c * self.rows + r
    }
}

#[derive(Debug, Clone)]
pub struct ConeProgram {
    nvars: usize,
    names: Vec<(String, usize, usize)>,
    pub sense: Sense,
    pub objective: LinExpr,
    pub constraints: Vec<Constraint>,
}

impl ConeProgram {
    pub fn new(sense: Sense) -> Self {
        ConeProgram {
            nvars: 0,
            names: Vec::new(),
            sense,
            objective: LinExpr::default(),
            constraints: Vec::new(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn scalar(&mut self, name: &str) -> usize {
        let idx = self.nvars;
        self.names.push((name.to_string(), idx, 1));
        self.nvars += 1;
        idx
    }

    pub fn vector(&mut self, name: &str, len: usize) -> VarBlock {
        let start = self.nvars;
        self.names.push((name.to_string(), start, len));
        self.nvars += len;
        VarBlock { start, len }
    }

    pub fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> MatBlock {
        let start = self.nvars;
        self.names.push((name.to_string(), start, rows * cols));
        self.nvars += rows * cols;
        MatBlock { start, rows, cols }
    }

    pub fn set_objective(&mut self, expr: LinExpr) {
        self.objective = expr;
    }

    pub fn eq_zero(&mut self, exprs: Vec<LinExpr>) {
        if !exprs.is_empty() {
            self.constraints.push(Constraint::Zero(exprs));
        }
    }

    pub fn nonneg(&mut self, exprs: Vec<LinExpr>) {
        if !exprs.is_empty() {
            self.constraints.push(Constraint::Nonneg(exprs));
        }
    }

    /// `||tail||_2 <= head` for `exprs = [head, tail...]`.
    pub fn second_order(&mut self, exprs: Vec<LinExpr>) {
        self.constraints.push(Constraint::SecondOrder(exprs));
    }

    /// PSD constraint from a dense symmetric expression matrix given
    /// row-by-row (only the upper triangle is read).
    pub fn psd_from_rows(&mut self, rows: Vec<Vec<LinExpr>>) -> Result<(), ConicError> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * (dim + 1) / 2);
        for j in 0..dim {
            if rows[j].len() != dim {
                return Err(ConicError::BadPsdBlock { expected: dim, got: rows[j].len() });
            }
            for i in 0..=j {
                entries.push(rows[i][j].clone());
            }
        }
        self.constraints.push(Constraint::PsdTriangle { dim, entries });
        Ok(())
    }

    pub fn power(&mut self, alpha: f64, entries: [LinExpr; 3]) -> Result<(), ConicError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ConicError::BadPowerExponent(alpha));
        }
        self.constraints.push(Constraint::Power { alpha, entries });
        Ok(())
    }

    pub fn geomean_hypograph(&mut self, hypo: LinExpr, factors: Vec<LinExpr>) {
        self.constraints.push(Constraint::GeoMean { hypo, factors });
    }

    /// Adds the epigraph of a p-norm: `||exprs||_p <= bound`. Auxiliary
    /// variables are created as needed for finite `p` other than 1 and 2.
    pub fn pnorm_epigraph(
        &mut self,
        exprs: &[LinExpr],
        p: crate::norms::Exponent,
        bound: LinExpr,
    ) {
        use crate::norms::Exponent;
        match p {
            Exponent::Infinity => {
                let mut rows = Vec::with_capacity(2 * exprs.len());
                for e in exprs {
                    rows.push(bound.clone().plus_expr(e, -1.0));
                    rows.push(bound.clone().plus_expr(e, 1.0));
                }
                self.nonneg(rows);
            }
            Exponent::One => {
                let aux = self.vector("abs", exprs.len());
                let mut rows = Vec::with_capacity(2 * exprs.len());
                let mut sum = bound.clone();
                for (k, e) in exprs.iter().enumerate() {
                    rows.push(LinExpr::var(aux.index(k)).plus_expr(e, -1.0));
                    rows.push(LinExpr::var(aux.index(k)).plus_expr(e, 1.0));
                    sum = sum.plus(aux.index(k), -1.0);
                }
                rows.push(sum);
                self.nonneg(rows);
            }
            _ if p.is_two() => {
                let mut soc = Vec::with_capacity(exprs.len() + 1);
                soc.push(bound);
                soc.extend(exprs.iter().cloned());
                self.second_order(soc);
            }
            Exponent::Finite(_) => {
                // (r_k, t, e_k) in Pow(1/p) gives r_k t^(p-1) >= |e_k|^p;
                // summing r_k <= t then yields ||e||_p <= t.
                let pf = p.as_f64();
                let aux = self.vector("pnorm", exprs.len());
                let mut sum = bound.clone();
                for (k, e) in exprs.iter().enumerate() {
                    sum = sum.plus(aux.index(k), -1.0);
                    self.power(
                        1.0 / pf,
                        [LinExpr::var(aux.index(k)), bound.clone(), e.clone()],
                    )
                    .expect("1/p lies in (0,1) for finite p > 1");
                }
                self.nonneg(vec![sum]);
            }
        }
    }

    fn check_wellformed(&self) -> Result<(), ConicError> {
        let check = |e: &LinExpr| -> Result<(), ConicError> {
            if let Some(v) = e.max_var() {
                if v >= self.nvars {
                    return Err(ConicError::UnknownVariable { var: v, nvars: self.nvars });
                }
            }
            Ok(())
        };
        check(&self.objective)?;
        for c in &self.constraints {
            match c {
                Constraint::Zero(es) | Constraint::Nonneg(es) | Constraint::SecondOrder(es) => {
                    for e in es {
                        check(e)?;
                    }
                }
                Constraint::PsdTriangle { dim, entries } => {
                    if entries.len() != dim * (dim + 1) / 2 {
                        return Err(ConicError::BadPsdBlock {
                            expected: dim * (dim + 1) / 2,
                            got: entries.len(),
                        });
                    }
                    for e in entries {
                        check(e)?;
                    }
                }
                Constraint::Power { entries, .. } => {
                    for e in entries {
                        check(e)?;
                    }
                }
                Constraint::GeoMean { hypo, factors } => {
                    check(hypo)?;
                    for e in factors {
                        check(e)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// One-constraint-per-line sparse text dump for offline debugging.
    pub fn dump(&self) -> String {
        let fmt_expr = |e: &LinExpr| -> String {
            let mut s = String::new();
            for &(i, c) in &e.terms {
                s.push_str(&format!("{:+}*x{} ", c, i));
            }
            s.push_str(&format!("{:+}", e.constant));
            s
        };
        let mut out = String::new();
        out.push_str(&format!(
            "program vars={} sense={}\n",
            self.nvars,
            match self.sense {
                Sense::Minimize => "min",
                Sense::Maximize => "max",
            }
        ));
        for (name, start, len) in &self.names {
            out.push_str(&format!("var {} x{}..x{}\n", name, start, start + len - 1));
        }
        out.push_str(&format!("objective: {}\n", fmt_expr(&self.objective)));
        for c in &self.constraints {
            match c {
                Constraint::Zero(es) => {
                    for e in es {
                        out.push_str(&format!("zero: {}\n", fmt_expr(e)));
                    }
                }
                Constraint::Nonneg(es) => {
                    for e in es {
                        out.push_str(&format!("nonneg: {}\n", fmt_expr(e)));
                    }
                }
                Constraint::SecondOrder(es) => {
                    let parts: Vec<String> = es.iter().map(&fmt_expr).collect();
                    out.push_str(&format!("soc[{}]: {}\n", es.len(), parts.join("; ")));
                }
                Constraint::PsdTriangle { dim, entries } => {
                    let parts: Vec<String> = entries.iter().map(&fmt_expr).collect();
                    out.push_str(&format!("psd[{}]: {}\n", dim, parts.join("; ")));
                }
                Constraint::Power { alpha, entries } => {
                    let parts: Vec<String> = entries.iter().map(&fmt_expr).collect();
                    out.push_str(&format!("power[{}]: {}\n", alpha, parts.join("; ")));
                }
                Constraint::GeoMean { hypo, factors } => {
                    let parts: Vec<String> = factors.iter().map(&fmt_expr).collect();
                    out.push_str(&format!("geomean: {} <= gm({})\n", fmt_expr(hypo), parts.join("; ")));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolveStatus,
    /// Values of the declared program variables (lowering aux stripped).
    pub primal: Vec<f64>,
    /// Dual values per constraint, in constraint order; rows as emitted.
    pub duals: Vec<Vec<f64>>,
    /// Objective in the program's own sense.
    pub objective: f64,
    pub dual_objective: f64,
    /// Largest constraint violation, recomputed independently of the solver.
    pub primal_residual: f64,
    /// Relative primal-dual gap.
    pub gap: f64,
    pub iterations: u32,
}

impl Solution {
    pub fn value(&self, index: usize) -> f64 {
        self.primal[index]
    }

    pub fn vector(&self, block: VarBlock) -> Vec<f64> {
        self.primal[block.start..block.start + block.len].to_vec()
    }

    pub fn matrix(&self, block: MatBlock) -> DMatrix<f64> {
        DMatrix::from_column_slice(
            block.rows,
            block.cols,
            &self.primal[block.start..block.start + block.rows * block.cols],
        )
    }
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub constraint: usize,
    pub kind: String,
    pub magnitude: f64,
}

struct Lowering {
    ncols: usize,
    triplets: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
    nrows: usize,
    // (constraint index, row range) for dual extraction
    blocks: Vec<(usize, std::ops::Range<usize>)>,
}

impl Lowering {
    fn push_rows(&mut self, exprs: &[LinExpr], scale_row: Option<&[f64]>) {
        for (k, e) in exprs.iter().enumerate() {
            let s = scale_row.map_or(1.0, |sc| sc[k]);
            for &(var, coef) in &e.terms {
                self.triplets.push((self.nrows, var, -s * coef));
            }
            self.b.push(s * e.constant);
            self.nrows += 1;
        }
    }

    fn aux(&mut self) -> usize {
        let idx = self.ncols;
        self.ncols += 1;
        idx
    }
}

/// Solves the program with the requested feasibility and gap tolerances.
///
/// `Optimal` is only reported when the returned point independently passes
/// the residual check at `feas_tol`; a solver claim of optimality that does
/// not re-verify comes back as `NumericalFailure`.
pub fn solve(program: &ConeProgram, feas_tol: f64, gap_tol: f64) -> Result<Solution, ConicError> {
    program.check_wellformed()?;
    let mut low = Lowering {
        ncols: program.nvars,
        triplets: Vec::new(),
        b: Vec::new(),
        cones: Vec::new(),
        nrows: 0,
        blocks: Vec::new(),
    };

    for (ci, c) in program.constraints.iter().enumerate() {
        let row_start = low.nrows;
        match c {
            Constraint::Zero(es) => {
                low.push_rows(es, None);
                low.cones.push(SupportedConeT::ZeroConeT(es.len()));
            }
            Constraint::Nonneg(es) => {
                low.push_rows(es, None);
                low.cones.push(SupportedConeT::NonnegativeConeT(es.len()));
            }
            Constraint::SecondOrder(es) => {
                low.push_rows(es, None);
                low.cones.push(SupportedConeT::SecondOrderConeT(es.len()));
            }
            Constraint::PsdTriangle { dim, entries } => {
                let r2 = 2.0f64.sqrt();
                let mut scales = Vec::with_capacity(entries.len());
                let mut k = 0;
                for j in 0..*dim {
                    for i in 0..=j {
                        scales.push(if i == j { 1.0 } else { r2 });
                        k += 1;
                    }
                }
                debug_assert_eq!(k, entries.len());
                low.push_rows(entries, Some(&scales));
                low.cones.push(SupportedConeT::PSDTriangleConeT(*dim));
            }
            Constraint::Power { alpha, entries } => {
                low.push_rows(entries.as_slice(), None);
                low.cones.push(SupportedConeT::PowerConeT(*alpha));
            }
            Constraint::GeoMean { hypo, factors } => {
                lower_geomean(&mut low, hypo, factors);
            }
        }
        low.blocks.push((ci, row_start..low.nrows));
    }

    let q = {
        let mut q = vec![0.0; low.ncols];
        let sgn = if program.sense == Sense::Maximize { -1.0 } else { 1.0 };
        for &(i, c) in &program.objective.terms {
            q[i] += sgn * c;
        }
        q
    };

    let a = csc_from_triplets(low.nrows, low.ncols, &low.triplets);
    let p = CscMatrix::zeros((low.ncols, low.ncols));
    // Solve tighter than the caller's tolerance so the independent residual
    // check below passes at face value.
    let inner_tol = (feas_tol.min(gap_tol) * 0.1).clamp(1e-12, 1e-9);
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_feas(inner_tol)
        .tol_gap_abs(inner_tol)
        .tol_gap_rel(inner_tol)
        .max_iter(200)
        .build()
        .expect("static settings are valid");
    let mut solver = DefaultSolver::new(&p, &q, &a, &low.b, &low.cones, settings)
        .map_err(|e| ConicError::NumericalFailure(format!("{e:?}")))?;
    solver.solve();

    let sgn = if program.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let obj = sgn * solver.solution.obj_val + program.objective.constant;
    let dual_obj = sgn * solver.solution.obj_val_dual + program.objective.constant;
    let primal: Vec<f64> = solver.solution.x[..program.nvars].to_vec();
    let duals: Vec<Vec<f64>> = low
        .blocks
        .iter()
        .map(|(_, range)| solver.solution.z[range.clone()].to_vec())
        .collect();
    let gap = {
        let denom = obj.abs().max(1.0);
        (obj - dual_obj).abs() / denom
    };

    let status = match solver.solution.status {
        SolverStatus::Solved
        | SolverStatus::AlmostSolved
        | SolverStatus::MaxIterations
        | SolverStatus::InsufficientProgress => {
            let probe = Solution {
                status: SolveStatus::Optimal,
                primal: primal.clone(),
                duals: duals.clone(),
                objective: obj,
                dual_objective: dual_obj,
                primal_residual: 0.0,
                gap,
                iterations: solver.solution.iterations,
            };
            if verify_solution(program, &probe, feas_tol).is_empty() && gap <= gap_tol {
                SolveStatus::Optimal
            } else {
                SolveStatus::NumericalFailure
            }
        }
        SolverStatus::PrimalInfeasible => SolveStatus::Infeasible,
        SolverStatus::DualInfeasible => SolveStatus::Unbounded,
        _ => SolveStatus::NumericalFailure,
    };

    let mut solution = Solution {
        status,
        primal,
        duals,
        objective: obj,
        dual_objective: dual_obj,
        primal_residual: 0.0,
        gap,
        iterations: solver.solution.iterations,
    };
    if solution.status == SolveStatus::Optimal {
        solution.primal_residual = verify_solution(program, &solution, 0.0)
            .iter()
            .map(|v| v.magnitude)
            .fold(0.0f64, f64::max);
    }
    Ok(solution)
}

/// Lower `hypo <= geomean(factors)` to a balanced binary tree of
/// `u <= sqrt(a b)` power cones, padding odd levels with the hypograph
/// expression itself (which leaves the constraint unchanged).
fn lower_geomean(low: &mut Lowering, hypo: &LinExpr, factors: &[LinExpr]) {
    if factors.is_empty() {
        return;
    }
    if factors.len() == 1 {
        low.push_rows(&[factors[0].clone().plus_expr(hypo, -1.0)], None);
        low.cones.push(SupportedConeT::NonnegativeConeT(1));
        return;
    }
    let mut level: Vec<LinExpr> = factors.to_vec();
    let target = factors.len().next_power_of_two();
    while level.len() < target {
        level.push(hypo.clone());
    }
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len() / 2);
        for pair in level.chunks(2) {
            let u = low.aux();
            // (a, b, u) in Pow(1/2): sqrt(a b) >= |u|
            low.push_rows(&[pair[0].clone(), pair[1].clone(), LinExpr::var(u)], None);
            low.cones.push(SupportedConeT::PowerConeT(0.5));
            next.push(LinExpr::var(u));
        }
        level = next;
    }
    // hypo <= root
    low.push_rows(&[level[0].clone().plus_expr(hypo, -1.0)], None);
    low.cones.push(SupportedConeT::NonnegativeConeT(1));
}

fn csc_from_triplets(m: usize, n: usize, triplets: &[(usize, usize, f64)]) -> CscMatrix<f64> {
    let mut order: Vec<usize> = (0..triplets.len()).collect();
    order.sort_by_key(|&k| (triplets[k].1, triplets[k].0));
    let mut colptr = vec![0usize; n + 1];
    let mut rowval = Vec::with_capacity(triplets.len());
    let mut nzval = Vec::with_capacity(triplets.len());
    let mut prev: Option<(usize, usize)> = None;
    for &k in &order {
        let (r, c, v) = triplets[k];
        if prev == Some((c, r)) {
            // merge duplicates
            let last = nzval.len() - 1;
            nzval[last] += v;
        } else {
            colptr[c + 1] += 1;
            rowval.push(r);
            nzval.push(v);
            prev = Some((c, r));
        }
    }
    for c in 0..n {
        colptr[c + 1] += colptr[c];
    }
    CscMatrix::new(m, n, colptr, rowval, nzval)
}

/// Recomputes every constraint residual from the primal values alone; PSD
/// blocks are checked through their smallest eigenvalue.
pub fn verify_solution(program: &ConeProgram, solution: &Solution, tol: f64) -> Vec<Violation> {
    let x = &solution.primal;
    let mut out = Vec::new();
    let mut push = |ci: usize, kind: &str, violation: f64| {
        if violation > tol {
            out.push(Violation { constraint: ci, kind: kind.to_string(), magnitude: violation });
        }
    };
    for (ci, c) in program.constraints.iter().enumerate() {
        match c {
            Constraint::Zero(es) => {
                for e in es {
                    push(ci, "equality", e.eval(x).abs());
                }
            }
            Constraint::Nonneg(es) => {
                for e in es {
                    push(ci, "nonneg", -e.eval(x));
                }
            }
            Constraint::SecondOrder(es) => {
                let head = es[0].eval(x);
                let tail: f64 = es[1..].iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt();
                push(ci, "soc", tail - head);
            }
            Constraint::PsdTriangle { dim, entries } => {
                let mut m = DMatrix::zeros(*dim, *dim);
                let mut k = 0;
                for j in 0..*dim {
                    for i in 0..=j {
                        let v = entries[k].eval(x);
                        m[(i, j)] = v;
                        m[(j, i)] = v;
                        k += 1;
                    }
                }
                let eig = m.symmetric_eigenvalues();
                push(ci, "psd", -eig.min());
            }
            Constraint::Power { alpha, entries } => {
                let x1 = entries[0].eval(x);
                let x2 = entries[1].eval(x);
                let x3 = entries[2].eval(x);
                push(ci, "power-nonneg", -x1);
                push(ci, "power-nonneg", -x2);
                if x1 >= 0.0 && x2 >= 0.0 {
                    push(ci, "power", x3.abs() - x1.powf(*alpha) * x2.powf(1.0 - *alpha));
                }
            }
            Constraint::GeoMean { hypo, factors } => {
                let h = hypo.eval(x);
                let k = factors.len() as f64;
                let mut prod_ok = true;
                let mut log_sum = 0.0;
                for f in factors {
                    let v = f.eval(x);
                    push(ci, "geomean-nonneg", -v);
                    if v <= 0.0 {
                        prod_ok = false;
                    } else {
                        log_sum += v.ln();
                    }
                }
                if prod_ok {
                    push(ci, "geomean", h - (log_sum / k).exp());
                } else {
                    push(ci, "geomean", h);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lp_min_x_subject_to_x_ge_1() {
        let mut p = ConeProgram::new(Sense::Minimize);
        let x = p.scalar("x");
        p.set_objective(LinExpr::var(x));
        p.nonneg(vec![LinExpr::var(x).plus_const(-1.0)]);
        let s = solve(&p, DEFAULT_FEAS_TOL, DEFAULT_GAP_TOL).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_relative_eq!(s.value(x), 1.0, epsilon = 1e-7);
        assert!(verify_solution(&p, &s, 1e-7).is_empty());
    }

    #[test]
    fn sdp_min_trace_above_identity() {
        let mut p = ConeProgram::new(Sense::Minimize);
        let x = p.matrix("X", 2, 2);
        p.set_objective(LinExpr::var(x.index(0, 0)).plus(x.index(1, 1), 1.0));
        // X - I >= 0
        p.psd_from_rows(vec![
            vec![
                LinExpr::var(x.index(0, 0)).plus_const(-1.0),
                LinExpr::var(x.index(0, 1)),
            ],
            vec![
                LinExpr::var(x.index(0, 1)),
                LinExpr::var(x.index(1, 1)).plus_const(-1.0),
            ],
        ])
        .unwrap();
        let s = solve(&p, DEFAULT_FEAS_TOL, DEFAULT_GAP_TOL).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_relative_eq!(s.objective, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn sdp_3x3_nontrivial_bound() {
        // min tr(X) s.t. X >= M for M with known eigenvalues: optimum is
        // tr(M_+) with negative eigenvalues clipped at the PSD boundary;
        // for M psd it is exactly tr(M).
        let mut p = ConeProgram::new(Sense::Minimize);
        let x = p.matrix("X", 3, 3);
        let m = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.5], [0.0, 0.5, 1.0]];
        p.set_objective(
            LinExpr::var(x.index(0, 0))
                .plus(x.index(1, 1), 1.0)
                .plus(x.index(2, 2), 1.0),
        );
        let rows: Vec<Vec<LinExpr>> = (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| {
                        let (a, b) = if i <= j { (i, j) } else { (j, i) };
                        LinExpr::var(x.index(a, b)).plus_const(-m[i][j])
                    })
                    .collect()
            })
            .collect();
        p.psd_from_rows(rows).unwrap();
        let s = solve(&p, DEFAULT_FEAS_TOL, DEFAULT_GAP_TOL).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_relative_eq!(s.objective, 5.0, epsilon = 1e-6);
        assert!(verify_solution(&p, &s, 1e-6).is_empty());
    }

    #[test]
    fn geomean_am_gm() {
        // max sqrt(s1 s2) s.t. s1 + s2 <= 2, s >= 0  ->  1 at s = (1,1)
        let mut p = ConeProgram::new(Sense::Maximize);
        let s = p.vector("s", 2);
        let t = p.scalar("t");
        p.set_objective(LinExpr::var(t));
        p.nonneg(vec![
            LinExpr::constant(2.0)
                .plus(s.index(0), -1.0)
                .plus(s.index(1), -1.0),
            LinExpr::var(s.index(0)),
            LinExpr::var(s.index(1)),
        ]);
        p.geomean_hypograph(
            LinExpr::var(t),
            vec![LinExpr::var(s.index(0)), LinExpr::var(s.index(1))],
        );
        let sol = solve(&p, DEFAULT_FEAS_TOL, DEFAULT_GAP_TOL).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_relative_eq!(sol.objective, 1.0, epsilon = 1e-6);
        // The split between s1 and s2 is second-order flat at the optimum.
        assert_relative_eq!(sol.value(s.index(0)), 1.0, epsilon = 1e-3);
    }

    #[test]
    fn geomean_three_factors() {
        // max (s1 s2 s3)^(1/3) s.t. s <= (1, 2, 4): optimum 2 at the bound.
        let mut p = ConeProgram::new(Sense::Maximize);
        let s = p.vector("s", 3);
        let t = p.scalar("t");
        p.set_objective(LinExpr::var(t));
        let caps = [1.0, 2.0, 4.0];
        p.nonneg(
            (0..3)
                .map(|i| LinExpr::constant(caps[i]).plus(s.index(i), -1.0))
                .chain((0..3).map(|i| LinExpr::var(s.index(i))))
                .collect(),
        );
        p.geomean_hypograph(
            LinExpr::var(t),
            (0..3).map(|i| LinExpr::var(s.index(i))).collect(),
        );
        let sol = solve(&p, DEFAULT_FEAS_TOL, DEFAULT_GAP_TOL).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_relative_eq!(sol.objective, 2.0, epsilon = 1e-5);
        assert!(verify_solution(&p, &sol, 1e-6).is_empty());
    }

    #[test]
    fn infeasible_and_unbounded_statuses() {
        let mut p = ConeProgram::new(Sense::Minimize);
        let x = p.scalar("x");
        p.set_objective(LinExpr::var(x));
        p.nonneg(vec![LinExpr::var(x).plus_const(-1.0)]);
        p.nonneg(vec![LinExpr::var(x).negated()]);
        let s = solve(&p, DEFAULT_FEAS_TOL, DEFAULT_GAP_TOL).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);

        let mut p = ConeProgram::new(Sense::Maximize);
        let x = p.scalar("x");
        p.set_objective(LinExpr::var(x));
        p.nonneg(vec![LinExpr::var(x)]);
        let s = solve(&p, DEFAULT_FEAS_TOL, DEFAULT_GAP_TOL).unwrap();
        assert_eq!(s.status, SolveStatus::Unbounded);
    }

    #[test]
    fn verify_reports_psd_violation() {
        let mut p = ConeProgram::new(Sense::Minimize);
        let x = p.matrix("X", 2, 2);
        p.psd_from_rows(vec![
            vec![LinExpr::var(x.index(0, 0)), LinExpr::var(x.index(0, 1))],
            vec![LinExpr::var(x.index(0, 1)), LinExpr::var(x.index(1, 1))],
        ])
        .unwrap();
        let fake = Solution {
            status: SolveStatus::Optimal,
            primal: vec![1.0, 0.0, 0.0, -1.0],
            duals: vec![],
            objective: 0.0,
            dual_objective: 0.0,
            primal_residual: 0.0,
            gap: 0.0,
            iterations: 0,
        };
        let report = verify_solution(&p, &fake, 1e-8);
        assert_eq!(report.len(), 1);
        assert_relative_eq!(report[0].magnitude, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn verify_passes_small_equality_residual() {
        let mut p = ConeProgram::new(Sense::Minimize);
        let x = p.scalar("x");
        p.eq_zero(vec![LinExpr::var(x).plus_const(-1.0)]);
        let fake = Solution {
            status: SolveStatus::Optimal,
            primal: vec![1.0 + 1e-12],
            duals: vec![],
            objective: 0.0,
            dual_objective: 0.0,
            primal_residual: 0.0,
            gap: 0.0,
            iterations: 0,
        };
        assert!(verify_solution(&p, &fake, 1e-8).is_empty());
    }

    #[test]
    fn weak_duality_on_solved_instances() {
        // min of a small LP and the SDP above: dual obj <= primal obj + tol.
        let mut p = ConeProgram::new(Sense::Minimize);
        let x = p.vector("x", 2);
        p.set_objective(LinExpr::var(x.index(0)).plus(x.index(1), 2.0));
        p.nonneg(vec![
            LinExpr::var(x.index(0)).plus(x.index(1), 1.0).plus_const(-1.0),
            LinExpr::var(x.index(0)),
            LinExpr::var(x.index(1)),
        ]);
        let s = solve(&p, DEFAULT_FEAS_TOL, DEFAULT_GAP_TOL).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!(s.dual_objective <= s.objective + DEFAULT_GAP_TOL * s.objective.abs().max(1.0));
        assert_relative_eq!(s.objective, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn pnorm_epigraph_general_p() {
        // min t s.t. ||(3, 4)||_3 <= t
        let mut p = ConeProgram::new(Sense::Minimize);
        let t = p.scalar("t");
        p.set_objective(LinExpr::var(t));
        let exprs = vec![LinExpr::constant(3.0), LinExpr::constant(4.0)];
        p.pnorm_epigraph(&exprs, crate::norms::Exponent::new(3.0).unwrap(), LinExpr::var(t));
        let s = solve(&p, DEFAULT_FEAS_TOL, DEFAULT_GAP_TOL).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        let expect = (27.0f64 + 64.0).powf(1.0 / 3.0);
        assert_relative_eq!(s.objective, expect, epsilon = 1e-6);
    }

    #[test]
    fn dump_is_one_constraint_per_line() {
        let mut p = ConeProgram::new(Sense::Minimize);
        let x = p.scalar("x");
        p.set_objective(LinExpr::var(x));
        p.nonneg(vec![LinExpr::var(x).plus_const(-1.0)]);
        let text = p.dump();
        assert!(text.contains("nonneg: +1*x0 -1"));
        assert!(text.lines().count() >= 3);
    }
}
