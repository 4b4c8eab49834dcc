//! Matrices and vectors whose entries are affine functions of the decision
//! variables, keyed by a flat layout `(c_T, s, U_0.., c_{u,0}..)`.
//!
//! The parametric reach model propagates these through the step recursion,
//! so the terminal zonotope arrives in exactly the affine form the conic
//! program needs.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::conic::LinExpr;

/// Flat index layout of the synthesis decision variables.
#[derive(Debug, Clone)]
pub struct DecisionLayout {
    pub n_x: usize,
    pub n_u: usize,
    /// Template scaling count (= number of `s` entries).
    pub m: usize,
    /// Columns of each input block `U_i`.
    pub m_u: usize,
    pub n_steps: usize,
    pub total: usize,
}

impl DecisionLayout {
    pub fn new(n_x: usize, n_u: usize, m: usize, m_u: usize, n_steps: usize) -> Self {
        let total = n_x + m + n_steps * n_u * m_u + n_steps * n_u;
        DecisionLayout { n_x, n_u, m, m_u, n_steps, total }
    }

    pub fn c_t(&self, r: usize) -> usize {
        debug_assert!(r < self.n_x);
        r
    }

    pub fn s(&self, j: usize) -> usize {
        debug_assert!(j < self.m);
        self.n_x + j
    }

    /// Entry `(r, c)` of `U_i`, column-major.
    pub fn u(&self, i: usize, r: usize, c: usize) -> usize {
        debug_assert!(i < self.n_steps && r < self.n_u && c < self.m_u);
        self.n_x + self.m + i * self.n_u * self.m_u + c * self.n_u + r
    }

    pub fn c_u(&self, i: usize, r: usize) -> usize {
        debug_assert!(i < self.n_steps && r < self.n_u);
        self.n_x + self.m + self.n_steps * self.n_u * self.m_u + i * self.n_u + r
    }
}

/// Matrix with affine entries: a constant page plus one page per decision
/// variable that actually occurs. Page maps iterate in key order, keeping
/// every downstream construction deterministic.
#[derive(Debug, Clone)]
pub struct AffineMatrix {
    pub rows: usize,
    pub cols: usize,
    pub constant: DMatrix<f64>,
    pub pages: BTreeMap<usize, DMatrix<f64>>,
}

impl AffineMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        AffineMatrix { rows, cols, constant: DMatrix::zeros(rows, cols), pages: BTreeMap::new() }
    }

    pub fn constant(m: DMatrix<f64>) -> Self {
        AffineMatrix { rows: m.nrows(), cols: m.ncols(), constant: m, pages: BTreeMap::new() }
    }

    pub fn add_page(&mut self, var: usize, page: DMatrix<f64>) {
        debug_assert_eq!(page.shape(), (self.rows, self.cols));
        match self.pages.get_mut(&var) {
            Some(existing) => *existing += page,
            None => {
                self.pages.insert(var, page);
            }
        }
    }

    /// `F * self` for a constant `F`.
    pub fn left_mul(&self, f: &DMatrix<f64>) -> AffineMatrix {
        let mut out = AffineMatrix {
            rows: f.nrows(),
            cols: self.cols,
            constant: f * &self.constant,
            pages: BTreeMap::new(),
        };
        for (&var, page) in &self.pages {
            out.pages.insert(var, f * page);
        }
        out
    }

    pub fn add(&self, other: &AffineMatrix) -> AffineMatrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        out.constant += &other.constant;
        for (&var, page) in &other.pages {
            out.add_page(var, page.clone());
        }
        out
    }

    pub fn scale(&self, factor: f64) -> AffineMatrix {
        let mut out = self.clone();
        out.constant *= factor;
        for page in out.pages.values_mut() {
            *page *= factor;
        }
        out
    }

    pub fn sub(&self, other: &AffineMatrix) -> AffineMatrix {
        self.add(&other.scale(-1.0))
    }

    pub fn column(&self, j: usize) -> AffineVector {
        let mut out = AffineVector::zeros(self.rows);
        out.constant = self.constant.column(j).into_owned();
        for (&var, page) in &self.pages {
            let col = page.column(j).into_owned();
            if col.iter().any(|&v| v != 0.0) {
                out.pages.insert(var, col);
            }
        }
        out
    }

    /// Affine expression of entry `(r, c)` in terms of program variables,
    /// assuming the decision block starts at program index 0.
    pub fn entry_expr(&self, r: usize, c: usize) -> LinExpr {
        let mut e = LinExpr::constant(self.constant[(r, c)]);
        for (&var, page) in &self.pages {
            let coef = page[(r, c)];
            if coef != 0.0 {
                e = e.plus(var, coef);
            }
        }
        e
    }

    pub fn eval(&self, theta: &[f64]) -> DMatrix<f64> {
        let mut out = self.constant.clone();
        for (&var, page) in &self.pages {
            out += page * theta[var];
        }
        out
    }
}

/// Vector with affine entries; same page layout as [`AffineMatrix`].
#[derive(Debug, Clone)]
pub struct AffineVector {
    pub len: usize,
    pub constant: DVector<f64>,
    pub pages: BTreeMap<usize, DVector<f64>>,
}

impl AffineVector {
    pub fn zeros(len: usize) -> Self {
        AffineVector { len, constant: DVector::zeros(len), pages: BTreeMap::new() }
    }

    pub fn constant(v: DVector<f64>) -> Self {
        AffineVector { len: v.len(), constant: v, pages: BTreeMap::new() }
    }

    pub fn add_page(&mut self, var: usize, page: DVector<f64>) {
        debug_assert_eq!(page.len(), self.len);
        match self.pages.get_mut(&var) {
            Some(existing) => *existing += page,
            None => {
                self.pages.insert(var, page);
            }
        }
    }

    pub fn left_mul(&self, f: &DMatrix<f64>) -> AffineVector {
        let mut out = AffineVector {
            len: f.nrows(),
            constant: f * &self.constant,
            pages: BTreeMap::new(),
        };
        for (&var, page) in &self.pages {
            out.pages.insert(var, f * page);
        }
        out
    }

    pub fn add(&self, other: &AffineVector) -> AffineVector {
        debug_assert_eq!(self.len, other.len);
        let mut out = self.clone();
        out.constant += &other.constant;
        for (&var, page) in &other.pages {
            out.add_page(var, page.clone());
        }
        out
    }

    pub fn add_constant(&self, v: &DVector<f64>) -> AffineVector {
        let mut out = self.clone();
        out.constant += v;
        out
    }

    pub fn scale(&self, factor: f64) -> AffineVector {
        let mut out = self.clone();
        out.constant *= factor;
        for page in out.pages.values_mut() {
            *page *= factor;
        }
        out
    }

    pub fn sub(&self, other: &AffineVector) -> AffineVector {
        self.add(&other.scale(-1.0))
    }

    pub fn entry_expr(&self, r: usize) -> LinExpr {
        let mut e = LinExpr::constant(self.constant[r]);
        for (&var, page) in &self.pages {
            let coef = page[r];
            if coef != 0.0 {
                e = e.plus(var, coef);
            }
        }
        e
    }

    pub fn eval(&self, theta: &[f64]) -> DVector<f64> {
        let mut out = self.constant.clone();
        for (&var, page) in &self.pages {
            out += page * theta[var];
        }
        out
    }
}

/// Zonotope whose center and leading generator block depend affinely on the
/// decision variables; trailing disturbance generators are constant.
#[derive(Debug, Clone)]
pub struct AffineZonotope {
    pub center: AffineVector,
    pub affine_cols: AffineMatrix,
    pub const_cols: DMatrix<f64>,
}

impl AffineZonotope {
    pub fn generator_count(&self) -> usize {
        self.affine_cols.cols + self.const_cols.ncols()
    }

    pub fn eval(&self, theta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let center = self.center.eval(theta);
        let affine = self.affine_cols.eval(theta);
        let mut g = DMatrix::zeros(center.len(), self.generator_count());
        g.view_mut((0, 0), (affine.nrows(), affine.ncols())).copy_from(&affine);
        g.view_mut((0, affine.ncols()), (self.const_cols.nrows(), self.const_cols.ncols()))
            .copy_from(&self.const_cols);
        (center, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_indices_are_disjoint_and_total() {
        let layout = DecisionLayout::new(2, 1, 3, 3, 2);
        let mut seen = std::collections::HashSet::new();
        for r in 0..2 {
            assert!(seen.insert(layout.c_t(r)));
        }
        for j in 0..3 {
            assert!(seen.insert(layout.s(j)));
        }
        for i in 0..2 {
            for r in 0..1 {
                for c in 0..3 {
                    assert!(seen.insert(layout.u(i, r, c)));
                }
                assert!(seen.insert(layout.c_u(i, r)));
            }
        }
        assert_eq!(seen.len(), layout.total);
        assert_eq!(*seen.iter().max().unwrap(), layout.total - 1);
    }

    #[test]
    fn affine_algebra_round_trips_through_eval() {
        let layout = DecisionLayout::new(2, 1, 2, 2, 1);
        let mut m = AffineMatrix::zeros(2, 2);
        m.constant[(0, 0)] = 1.0;
        m.add_page(layout.s(0), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]));
        let f = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let lm = m.left_mul(&f);
        let mut theta = vec![0.0; layout.total];
        theta[layout.s(0)] = 0.5;
        assert_eq!(lm.eval(&theta), &f * m.eval(&theta));

        let sum = m.add(&lm).scale(2.0);
        assert_eq!(sum.eval(&theta), 2.0 * (m.eval(&theta) + &f * m.eval(&theta)));

        let expr = m.entry_expr(1, 1);
        assert_eq!(expr.eval(&theta), m.eval(&theta)[(1, 1)]);
    }
}
