//! Least-squares adapter over the `levenberg-marquardt` solver with a
//! central-difference Jacobian.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{DMatrix, DVector, Dyn, Owned};

use crate::error::{CarlError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmOptions {
    /// Evaluation budget in units of `n + 1` residual calls.
    pub patience: usize,
    pub tolerance: f64,
    /// Relative finite-difference step.
    pub step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions { patience: 200, tolerance: 1e-12, step: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmReport {
    pub params: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub cost: f64,
    pub evaluations: usize,
}

struct Problem<F> {
    f: F,
    p: DVector<f64>,
    m: usize,
    step: f64,
}

impl<F: Fn(&[f64], &mut [f64])> Problem<F> {
    fn eval(&self, p: &[f64]) -> DVector<f64> {
        let mut r = DVector::zeros(self.m);
        (self.f)(p, r.as_mut_slice());
        r
    }
}

impl<F: Fn(&[f64], &mut [f64])> LeastSquaresProblem<f64, Dyn, Dyn> for Problem<F> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.p.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.p.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let r = self.eval(self.p.as_slice());
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let n = self.p.len();
        let mut jac = DMatrix::zeros(self.m, n);
        let mut q = self.p.as_slice().to_vec();
        for j in 0..n {
            let h = self.step * q[j].abs().max(self.step);
            let keep = q[j];
            q[j] = keep + h;
            let up = self.eval(&q);
            q[j] = keep - h;
            let down = self.eval(&q);
            q[j] = keep;
            jac.set_column(j, &((up - down) / (2.0 * h)));
        }
        jac.iter().all(|v| v.is_finite()).then_some(jac)
    }
}

/// Minimizes `Σ r_i(p)²` from `p0`. `residuals` fills its second argument,
/// which has `n_residuals` entries.
pub fn levenberg_marquardt<F>(residuals: F, p0: &[f64], n_residuals: usize, opts: LmOptions) -> Result<LmReport>
where
    F: Fn(&[f64], &mut [f64]),
{
    let problem = Problem { f: residuals, p: DVector::from_column_slice(p0), m: n_residuals, step: opts.step };
    let (problem, report) = LevenbergMarquardt::new()
        .with_tol(opts.tolerance)
        .with_patience(opts.patience)
        .minimize(problem);
    let cost = problem.eval(problem.p.as_slice()).norm_squared();
    if !report.termination.was_successful() || !cost.is_finite() {
        return Err(CarlError::FitFailure { iterations: report.number_of_evaluations, residual: cost });
    }
    Ok(LmReport { params: problem.p.as_slice().to_vec(), cost, evaluations: report.number_of_evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_an_exponential() {
        let ts: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 2.5 * (-1.3 * t).exp() + 0.2).collect();
        let rep = levenberg_marquardt(
            |p, r| {
                for (i, t) in ts.iter().enumerate() {
                    r[i] = p[0] * (-p[1] * t).exp() + p[2] - ys[i];
                }
            },
            &[1.0, 0.5, 0.0],
            ts.len(),
            LmOptions::default(),
        )
        .unwrap();
        assert!((rep.params[0] - 2.5).abs() < 1e-6);
        assert!((rep.params[1] - 1.3).abs() < 1e-6);
        assert!((rep.params[2] - 0.2).abs() < 1e-6);
    }

    #[test]
    fn rosenbrock_minimum() {
        let rep = levenberg_marquardt(
            |p, r| {
                r[0] = 10.0 * (p[1] - p[0] * p[0]);
                r[1] = 1.0 - p[0];
            },
            &[-1.2, 1.0],
            2,
            LmOptions::default(),
        )
        .unwrap();
        assert!((rep.params[0] - 1.0).abs() < 1e-5 && (rep.params[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn exhausted_budget_reports_failure() {
        let opts = LmOptions { patience: 1, tolerance: 1e-15, ..LmOptions::default() };
        let err = levenberg_marquardt(
            |p, r| {
                r[0] = 10.0 * (p[1] - p[0] * p[0]);
                r[1] = 1.0 - p[0];
                r[2] = 0.1 * (p[0] * p[1]).sin();
            },
            &[-1.2, 1.0],
            3,
            opts,
        );
        assert!(matches!(err, Err(CarlError::FitFailure { .. })));
    }
}
