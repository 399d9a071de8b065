//! Constant-coefficient differential operators, their Fourier symbols and
//! the kernel projector of a constraint set.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::LatticeSpec;

/// Default relative singular-value cut for kernel decisions.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-10;

/// One term `M_alpha d^alpha` of a differential operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorTerm {
    /// Derivative order along each spatial axis.
    pub multi_index: Vec<u32>,
    /// `rows x K` coefficient matrix, row-major.
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffOperator {
    pub name: String,
    pub terms: Vec<OperatorTerm>,
}

fn unit_index(dim: usize, axis: usize, order: u32) -> Vec<u32> {
    let mut a = vec![0; dim];
    a[axis] = order;
    a
}

impl DiffOperator {
    pub fn new(name: impl Into<String>, terms: Vec<OperatorTerm>) -> Result<Self> {
        let op = DiffOperator {
            name: name.into(),
            terms,
        };
        op.validate()?;
        Ok(op)
    }

    /// `kappa = sum_j d_j phi_j` for `K = D`.
    pub fn divergence(dim: usize) -> Self {
        let terms = (0..dim)
            .map(|j| {
                let mut row = vec![0.0; dim];
                row[j] = 1.0;
                OperatorTerm {
                    multi_index: unit_index(dim, j, 1),
                    matrix: vec![row],
                }
            })
            .collect();
        DiffOperator {
            name: "divergence".into(),
            terms,
        }
    }

    /// `kappa = phi`.
    pub fn identity(dim: usize, components: usize) -> Self {
        let matrix = (0..components)
            .map(|r| (0..components).map(|c| if r == c { 1.0 } else { 0.0 }).collect())
            .collect();
        DiffOperator {
            name: "identity".into(),
            terms: vec![OperatorTerm {
                multi_index: vec![0; dim],
                matrix,
            }],
        }
    }

    /// `kappa = nabla^2 phi`, componentwise.
    pub fn laplacian(dim: usize, components: usize) -> Self {
        let eye: Vec<Vec<f64>> = (0..components)
            .map(|r| (0..components).map(|c| if r == c { 1.0 } else { 0.0 }).collect())
            .collect();
        DiffOperator {
            name: "laplacian".into(),
            terms: (0..dim)
                .map(|j| OperatorTerm {
                    multi_index: unit_index(dim, j, 2),
                    matrix: eye.clone(),
                })
                .collect(),
        }
    }

    /// Two-dimensional scalar curl `d_1 phi_2 - d_2 phi_1`.
    pub fn curl_2d() -> Self {
        DiffOperator {
            name: "curl".into(),
            terms: vec![
                OperatorTerm {
                    multi_index: vec![1, 0],
                    matrix: vec![vec![0.0, 1.0]],
                },
                OperatorTerm {
                    multi_index: vec![0, 1],
                    matrix: vec![vec![-1.0, 0.0]],
                },
            ],
        }
    }

    pub fn rows(&self) -> usize {
        self.terms.first().map_or(0, |t| t.matrix.len())
    }

    pub fn components(&self) -> usize {
        self.terms
            .first()
            .and_then(|t| t.matrix.first())
            .map_or(0, |r| r.len())
    }

    pub fn dim(&self) -> usize {
        self.terms.first().map_or(0, |t| t.multi_index.len())
    }

    /// Highest total derivative order.
    pub fn order(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.multi_index.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidParameter {
            name: "constraint operator",
            reason: format!("{}: {reason}", self.name),
        };
        let first = self.terms.first().ok_or_else(|| bad("no terms".into()))?;
        let (rows, cols, dim) = (self.rows(), self.components(), first.multi_index.len());
        if rows == 0 || cols == 0 || dim == 0 {
            return Err(bad("empty coefficient matrix or multi-index".into()));
        }
        for t in &self.terms {
            if t.multi_index.len() != dim {
                return Err(bad("multi-indices of different lengths".into()));
            }
            if t.matrix.len() != rows || t.matrix.iter().any(|r| r.len() != cols) {
                return Err(bad(format!("every coefficient matrix must be {rows} x {cols}")));
            }
            if t.matrix.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("constraint coefficient"));
            }
        }
        Ok(())
    }
}

/// `sum_alpha M_alpha (i p)^alpha`, a `rows x K` matrix.
pub fn symbol_matrix(op: &DiffOperator, p: &[f64]) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(op.rows(), op.components());
    for t in &op.terms {
        let mut c = Complex64::new(1.0, 0.0);
        for (pj, &a) in p.iter().zip(&t.multi_index) {
            c *= Complex64::new(0.0, *pj).powu(a);
        }
        for (r, row) in t.matrix.iter().enumerate() {
            for (k, m) in row.iter().enumerate() {
                out[(r, k)] += c * m;
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub ops: Vec<DiffOperator>,
    #[serde(default = "default_tau")]
    pub tau: f64,
}

fn default_tau() -> f64 {
    DEFAULT_RANK_TOLERANCE
}

/// Kernel projector at one momentum, with a flag raised when a singular
/// value sits within a factor ten of the rank cut.
#[derive(Debug, Clone)]
pub struct Projection {
    pub matrix: DMatrix<Complex64>,
    pub rank: usize,
    pub near_cut: bool,
}

impl ConstraintSet {
    pub fn new(ops: Vec<DiffOperator>) -> Result<Self> {
        let cs = ConstraintSet {
            ops,
            tau: DEFAULT_RANK_TOLERANCE,
        };
        cs.validate()?;
        Ok(cs)
    }

    pub fn empty() -> Self {
        ConstraintSet {
            ops: vec![],
            tau: DEFAULT_RANK_TOLERANCE,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 1e-6) {
            return Err(Error::InvalidParameter {
                name: "tau",
                reason: format!("rank tolerance must lie in (0, 1e-6], got {}", self.tau),
            });
        }
        for op in &self.ops {
            op.validate()?;
        }
        if let Some(first) = self.ops.first() {
            for op in &self.ops[1..] {
                if op.components() != first.components() {
                    return Err(Error::DimensionMismatch {
                        expected: first.components(),
                        actual: op.components(),
                    });
                }
                if op.dim() != first.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: first.dim(),
                        actual: op.dim(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Checks the set against a spatial dimension and component count.
    pub fn check_shape(&self, dim: usize, components: usize) -> Result<()> {
        for op in &self.ops {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: op.dim(),
                });
            }
            if op.components() != components {
                return Err(Error::DimensionMismatch {
                    expected: components,
                    actual: op.components(),
                });
            }
        }
        Ok(())
    }

    /// Total constraint rows `sum_i rows(D_i)`.
    pub fn rows(&self) -> usize {
        self.ops.iter().map(|o| o.rows()).sum()
    }

    /// The symbols stacked vertically.
    pub fn stacked_symbol(&self, p: &[f64], components: usize) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.rows(), components);
        let mut r0 = 0;
        for op in &self.ops {
            let s = symbol_matrix(op, p);
            out.view_mut((r0, 0), (s.nrows(), s.ncols())).copy_from(&s);
            r0 += s.nrows();
        }
        out
    }

    /// `sum_i D_i(p)^dagger D_i(p)`.
    pub fn gram(&self, p: &[f64], components: usize) -> DMatrix<Complex64> {
        let s = self.stacked_symbol(p, components);
        s.adjoint() * s
    }

    pub fn projection(&self, p: &[f64], components: usize) -> Projection {
        let eye = DMatrix::identity(components, components);
        if self.ops.is_empty() {
            return Projection {
                matrix: eye,
                rank: 0,
                near_cut: false,
            };
        }
        let s = self.stacked_symbol(p, components);
        let svd = s.svd(false, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        if smax == 0.0 {
            return Projection {
                matrix: eye,
                rank: 0,
                near_cut: false,
            };
        }
        let cut = self.tau * smax;
        let v_t = svd.v_t.expect("right singular vectors requested");
        let mut m = eye;
        let mut rank = 0;
        let mut near_cut = false;
        for (i, &sv) in svd.singular_values.iter().enumerate() {
            if sv > 0.0 && sv >= 0.1 * cut && sv <= 10.0 * cut {
                near_cut = true;
            }
            if sv > cut {
                let row = v_t.row(i);
                m -= row.adjoint() * row;
                rank += 1;
            }
        }
        Projection {
            matrix: m,
            rank,
            near_cut,
        }
    }
}

/// Orthogonal projector onto the intersection of the symbol kernels.
pub fn projector(cs: &ConstraintSet, p: &[f64], components: usize) -> DMatrix<Complex64> {
    cs.projection(p, components).matrix
}

/// Stacked symbols on every grid mode in the layout expected by
/// [`apply_matrix_multiplier`](crate::spectral::apply_matrix_multiplier).
pub fn grid_symbol(cs: &ConstraintSet, spec: &LatticeSpec) -> Vec<Complex64> {
    let rows = cs.rows();
    let k = spec.components;
    let mut out = Vec::with_capacity(spec.num_sites() * rows * k);
    for flat in 0..spec.num_sites() {
        let s = cs.stacked_symbol(&spec.momentum(flat), k);
        for r in 0..rows {
            for c in 0..k {
                out.push(s[(r, c)]);
            }
        }
    }
    out
}
