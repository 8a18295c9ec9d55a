//! QR-based preconditioning `P = (Q̃R)^{-1}` with `Q̃_ij = log(exp(Q_ij) + 1/cond(G))`,
//! condition diagnostics, and the dense solve.

use nalgebra::{DMatrix, DVector, LU, QR, SVD};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("condition number must be at least 1, got {0}")]
    Condition(f64),
    #[error("Q̃R is numerically singular (cond(G) = {cond_before:e})")]
    SingularPreconditioner { cond_before: f64 },
    #[error("system matrix is numerically singular (cond(G) = {cond_before:e}, cond(G̃) = {cond_after:e})")]
    Singular { cond_before: f64, cond_after: f64 },
    #[error("right-hand side has length {got}, expected {expected}")]
    Length { got: usize, expected: usize },
}

fn check_square(g: &DMatrix<f64>) -> Result<(), SolveError> {
    if !g.is_square() {
        return Err(SolveError::NotSquare(g.nrows(), g.ncols()));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::NonFinite);
    }
    Ok(())
}

/// Householder QR without pivoting, signs chosen so that `diag(R) >= 0`.
pub fn qr_factor(g: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>), SolveError> {
    check_square(g)?;
    let qr = QR::new(g.clone());
    let (mut q, mut r) = (qr.q(), qr.r());
    for k in 0..r.nrows() {
        if r[(k, k)] < 0.0 {
            r.row_mut(k).neg_mut();
            q.column_mut(k).neg_mut();
        }
    }
    Ok((q, r))
}

/// 2-norm condition number `σ_max / σ_min`; `inf` when `σ_min = 0`.
pub fn condition_number(g: &DMatrix<f64>) -> Result<f64, SolveError> {
    check_square(g)?;
    if g.is_empty() {
        return Ok(1.0);
    }
    let sv = SVD::new(g.clone(), false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    Ok(if min == 0.0 { f64::INFINITY } else { max / min })
}

/// `P = (Q̃R)^{-1}`, held as an LU factorization of `Q̃R`.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    q_tilde: DMatrix<f64>,
}

/// `Q̃_ij = log(exp(Q_ij) + 1/cond)`. With `|Q_ij| <= 1` nothing overflows.
pub fn regularized_q(q: &DMatrix<f64>, cond: f64) -> DMatrix<f64> {
    let shift = 1.0 / cond;
    q.map(|v| (v.exp() + shift).ln())
}

/// Builds `P` from the QR factors of `G` and `cond(G)`; `cond = inf` gives `Q̃ = Q`.
pub fn build_preconditioner(
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    cond: f64,
) -> Result<Preconditioner, SolveError> {
    if cond.is_nan() || cond < 1.0 {
        return Err(SolveError::Condition(cond));
    }
    check_square(q)?;
    check_square(r)?;
    let q_tilde = regularized_q(q, cond);
    let lu = (&q_tilde * r).lu();
    if !lu.is_invertible() || lu.u().diagonal().iter().any(|d| !d.is_finite()) {
        return Err(SolveError::SingularPreconditioner { cond_before: cond });
    }
    Ok(Preconditioner { lu, q_tilde })
}

impl Preconditioner {
    pub fn q_tilde(&self) -> &DMatrix<f64> {
        &self.q_tilde
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.lu.solve(v).expect("factorization checked invertible")
    }

    pub fn apply_matrix(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.lu.solve(m).expect("factorization checked invertible")
    }

    /// Explicit `P`, for diagnostics only.
    pub fn explicit(&self) -> DMatrix<f64> {
        self.lu
            .try_inverse()
            .expect("factorization checked invertible")
    }
}

/// How `P` reaches `G` and `U`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreconditionerForm {
    /// Triangular solves against the LU factors of `Q̃R`.
    #[default]
    Factored,
    /// `P` formed as a dense inverse and multiplied in. Rounding in the product
    /// grows the residual with `cond(Q̃R)`; for diagnostics.
    Explicit,
}

/// Condition diagnostics of one system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreconditionReport {
    pub cond_before: f64,
    pub cond_after: f64,
    pub ratio: f64,
    pub preconditioned: bool,
}

/// `G` factored once for repeated right-hand sides.
#[derive(Debug, Clone)]
pub struct FactoredSystem {
    g: DMatrix<f64>,
    preconditioner: Option<Preconditioner>,
    explicit: Option<DMatrix<f64>>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    report: PreconditionReport,
}

impl FactoredSystem {
    pub fn new(g: &DMatrix<f64>, precondition: bool) -> Result<Self, SolveError> {
        Self::with_form(g, precondition.then_some(PreconditionerForm::Factored))
    }

    /// `form = None` solves `G` directly.
    pub fn with_form(
        g: &DMatrix<f64>,
        form: Option<PreconditionerForm>,
    ) -> Result<Self, SolveError> {
        let precondition = form.is_some();
        let cond_before = condition_number(g)?;
        let (preconditioner, explicit, system) = match form {
            Some(form) => {
                let (q, r) = qr_factor(g)?;
                let p = build_preconditioner(&q, &r, cond_before)?;
                if form == PreconditionerForm::Explicit {
                    let dense = p.explicit();
                    let g_tilde = &dense * g;
                    (Some(p), Some(dense), g_tilde)
                } else {
                    let g_tilde = p.apply_matrix(g);
                    (Some(p), None, g_tilde)
                }
            }
            None => (None, None, g.clone()),
        };
        let cond_after = if precondition {
            condition_number(&system)?
        } else {
            cond_before
        };
        let lu = system.lu();
        if !lu.is_invertible() {
            return Err(SolveError::Singular {
                cond_before,
                cond_after,
            });
        }
        Ok(Self {
            g: g.clone(),
            preconditioner,
            explicit,
            lu,
            report: PreconditionReport {
                cond_before,
                cond_after,
                ratio: cond_after / cond_before,
                preconditioned: precondition,
            },
        })
    }

    pub fn report(&self) -> PreconditionReport {
        self.report
    }

    pub fn preconditioner(&self) -> Option<&Preconditioner> {
        self.preconditioner.as_ref()
    }

    /// `Λ` with `G̃Λ = PU` (or `GΛ = U`), and `‖GΛ - U‖₂` against the original system.
    pub fn solve(&self, u: &DVector<f64>) -> Result<(DVector<f64>, f64), SolveError> {
        if u.len() != self.g.nrows() {
            return Err(SolveError::Length {
                got: u.len(),
                expected: self.g.nrows(),
            });
        }
        let rhs = match (&self.explicit, &self.preconditioner) {
            (Some(dense), _) => dense * u,
            (None, Some(p)) => p.apply(u),
            (None, None) => u.clone(),
        };
        let singular = || SolveError::Singular {
            cond_before: self.report.cond_before,
            cond_after: self.report.cond_after,
        };
        let lambda = self.lu.solve(&rhs).ok_or_else(singular)?;
        if lambda.iter().any(|v| !v.is_finite()) {
            return Err(singular());
        }
        let residual = (&self.g * &lambda - u).norm();
        Ok((lambda, residual))
    }
}

/// Result of a one-off solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub coefficients: DVector<f64>,
    pub precondition: PreconditionReport,
    pub residual: f64,
}

/// Factors `G` and solves a single right-hand side.
pub fn solve(
    g: &DMatrix<f64>,
    u: &DVector<f64>,
    precondition: bool,
) -> Result<SolveReport, SolveError> {
    let system = FactoredSystem::new(g, precondition)?;
    let (coefficients, residual) = system.solve(u)?;
    Ok(SolveReport {
        coefficients,
        precondition: system.report(),
        residual,
    })
}
