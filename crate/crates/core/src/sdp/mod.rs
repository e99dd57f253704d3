//! Dense multi-block semidefinite programs in LMI form.
//!
//! A problem has free scalar variables `x`, a linear objective `cᵀx`, affine
//! equalities `Ax = b` and blocks `F_b(x) = F_b0 + Σ_k x_k F_bk ⪰ 0`. The
//! associated dual is
//!
//! ```text
//! max  bᵀy − Σ_b ⟨F_b0, Z_b⟩   s.t.  Aᵀy + Σ_b F_b*(Z_b) = c,  Z_b ⪰ 0
//! ```
//!
//! with `F_b*(Z)_k = ⟨F_bk, Z⟩`. Maximization problems are solved as the
//! minimization of `−cᵀx`, and their duals are reported for that form.

mod refine;
mod solver;

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use nalgebra::DMatrix;

use crate::error::{bail, Result};
use crate::matalg::SYMMETRY_TOL;

pub use refine::{refine_rank_one, REFINE_BAND};
pub use solver::solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    fn sign(self) -> f64 {
        match self {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }
}

/// One linear matrix inequality `F0 + Σ_k x_k F_k ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiBlock {
    constant: DMatrix<f64>,
    terms: BTreeMap<usize, DMatrix<f64>>,
}

impl LmiBlock {
    pub fn new(order: usize) -> Self {
        Self { constant: DMatrix::zeros(order, order), terms: BTreeMap::new() }
    }

    pub fn order(&self) -> usize {
        self.constant.nrows()
    }

    pub fn constant(&self) -> &DMatrix<f64> {
        &self.constant
    }

    /// Coefficient matrices keyed by variable index.
    pub fn terms(&self) -> &BTreeMap<usize, DMatrix<f64>> {
        &self.terms
    }

    pub fn set_constant(&mut self, m: DMatrix<f64>) -> Result<()> {
        self.constant = self.checked(m)?;
        Ok(())
    }

    /// Adds `m` to the coefficient of variable `var`.
    pub fn add_term(&mut self, var: usize, m: DMatrix<f64>) -> Result<()> {
        let m = self.checked(m)?;
        match self.terms.get_mut(&var) {
            Some(existing) => *existing += m,
            None => {
                self.terms.insert(var, m);
            }
        }
        Ok(())
    }

    /// `F0 + Σ_k x_k F_k`.
    pub fn evaluate(&self, x: &[f64]) -> DMatrix<f64> {
        let mut out = self.constant.clone();
        for (&k, f) in &self.terms {
            out += f * x[k];
        }
        out
    }

    fn checked(&self, m: DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.order();
        if m.nrows() != n || m.ncols() != n {
            bail!(Dimension, "block of order {n} given a {}x{} matrix", m.nrows(), m.ncols());
        }
        let asym = (&m - m.transpose()).amax();
        if asym > SYMMETRY_TOL * m.norm().max(f64::MIN_POSITIVE) && asym > 0.0 {
            bail!(Argument, "coefficient matrix is not symmetric (max asymmetry {asym:e})");
        }
        let t = m.transpose();
        Ok((m + t) * 0.5)
    }
}

/// A semidefinite program over free scalar variables.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    objective: Vec<f64>,
    sense: Sense,
    blocks: Vec<LmiBlock>,
    equalities: Vec<(Vec<(usize, f64)>, f64)>,
    refine_vars: Range<usize>,
}

impl SdpProblem {
    pub fn new(n_vars: usize, sense: Sense) -> Self {
        Self {
            objective: vec![0.0; n_vars],
            sense,
            blocks: Vec::new(),
            equalities: Vec::new(),
            refine_vars: 0..n_vars,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn set_objective(&mut self, var: usize, coef: f64) -> Result<()> {
        if var >= self.n_vars() {
            bail!(Dimension, "variable {var} out of range");
        }
        self.objective[var] = coef;
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn blocks(&self) -> &[LmiBlock] {
        &self.blocks
    }

    pub fn add_block(&mut self, block: LmiBlock) -> Result<usize> {
        if let Some((&k, _)) = block.terms.iter().next_back() {
            if k >= self.n_vars() {
                bail!(Dimension, "block references variable {k} of {}", self.n_vars());
            }
        }
        self.blocks.push(block);
        Ok(self.blocks.len() - 1)
    }

    /// Equalities as sparse rows `(Σ coef·x_var, rhs)`.
    pub fn equalities(&self) -> &[(Vec<(usize, f64)>, f64)] {
        &self.equalities
    }

    pub fn add_equality(&mut self, row: Vec<(usize, f64)>, rhs: f64) -> Result<usize> {
        if let Some(&(k, _)) = row.iter().find(|(k, _)| *k >= self.n_vars()) {
            bail!(Dimension, "equality references variable {k} of {}", self.n_vars());
        }
        self.equalities.push((row, rhs));
        Ok(self.equalities.len() - 1)
    }

    /// Variables whose values the rank-reduction re-solve randomizes over.
    pub fn refine_vars(&self) -> Range<usize> {
        self.refine_vars.clone()
    }

    pub fn set_refine_vars(&mut self, vars: Range<usize>) -> Result<()> {
        if vars.end > self.n_vars() || vars.start > vars.end {
            bail!(Dimension, "refinement range {vars:?} out of bounds");
        }
        self.refine_vars = vars;
        Ok(())
    }

    /// Largest violation at `x` among the equalities (absolute residual) and
    /// the blocks (negative part of the smallest eigenvalue).
    pub fn primal_violation(&self, x: &[f64]) -> f64 {
        let eq = self
            .equalities
            .iter()
            .map(|(row, rhs)| (row.iter().map(|&(k, v)| v * x[k]).sum::<f64>() - rhs).abs())
            .fold(0.0, f64::max);
        let psd = self
            .blocks
            .iter()
            .map(|b| {
                let e = b.evaluate(x).symmetric_eigenvalues();
                -e.iter().fold(f64::INFINITY, |a, &v| a.min(v))
            })
            .fold(0.0, f64::max);
        eq.max(psd)
    }

    /// Dense equality matrix.
    pub fn equality_matrix(&self) -> (DMatrix<f64>, Vec<f64>) {
        let mut a = DMatrix::zeros(self.equalities.len(), self.n_vars());
        let mut b = Vec::with_capacity(self.equalities.len());
        for (i, (row, rhs)) in self.equalities.iter().enumerate() {
            for &(k, v) in row {
                a[(i, k)] += v;
            }
            b.push(*rhs);
        }
        (a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-8, feas_tol: 1e-8, max_iter: 200 }
    }
}

/// Per-iteration record, in the minimization form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iterate {
    pub pcost: f64,
    pub dcost: f64,
    /// `Σ_b ⟨S_b, Z_b⟩`.
    pub complementarity: f64,
    /// `r_dᵀx − yᵀr_p + Σ_b ⟨r_b, Z_b⟩`, so that
    /// `pcost − dcost = complementarity + residual_correction`.
    pub residual_correction: f64,
    pub pres: f64,
    pub dres: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub x: Vec<f64>,
    /// `S_b = F_b(x)` for every block.
    pub slacks: Vec<DMatrix<f64>>,
    /// Dual matrices `Z_b ⪰ 0`.
    pub duals: Vec<DMatrix<f64>>,
    /// Equality multipliers, one per original equality row.
    pub y: Vec<f64>,
    /// Primal objective in the problem's own sense.
    pub objective: f64,
    /// Dual objective in the problem's own sense.
    pub dual_objective: f64,
    /// Relative duality gap.
    pub gap: f64,
    pub pres: f64,
    pub dres: f64,
    pub status: Status,
    pub iterations: usize,
    pub trace: Vec<Iterate>,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}
