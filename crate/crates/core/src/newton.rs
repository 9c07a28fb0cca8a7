//! Damped Newton iteration with dense linear algebra.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Sup-norm target for the residual.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tolerance: 1e-10,
            max_iter: 50,
        }
    }
}

impl NewtonOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub residual_sup: f64,
    pub resolution: usize,
    /// Residual sup norm before the first step and after every accepted step.
    pub diagnostics: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

const MIN_STEP: f64 = 1.0 / 1_048_576.0;

fn sup(r: &DVector<f64>) -> f64 {
    r.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Solves `J dx = -r`; square systems by LU, tall ones in the least-squares sense.
fn newton_step(jac: DMatrix<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
    let rhs = -r;
    let step = if jac.nrows() == jac.ncols() {
        jac.lu().solve(&rhs)?
    } else {
        let qr = jac.qr();
        let qtb = qr.q().transpose() * rhs;
        qr.r().solve_upper_triangular(&qtb)?
    };
    step.iter().all(|x| x.is_finite()).then_some(step)
}

/// Full step when the residual 2-norm decreases, otherwise halving down to `2^-20`.
pub(crate) fn damped_newton<R, J>(
    x0: DVector<f64>,
    residual: R,
    jacobian: J,
    options: &NewtonOptions,
    resolution: usize,
) -> Result<(DVector<f64>, SolveReport)>
where
    R: Fn(&DVector<f64>) -> Result<DVector<f64>>,
    J: Fn(&DVector<f64>) -> Result<DMatrix<f64>>,
{
    options.validate()?;
    let mut x = x0;
    let mut r = residual(&x)?;
    let mut history = vec![sup(&r)];
    let mut failure = None;
    let mut iterations = 0;
    while !(sup(&r) <= options.tolerance) {
        if iterations == options.max_iter {
            failure = Some(format!("no convergence in {} iterations", options.max_iter));
            break;
        }
        if !sup(&r).is_finite() {
            failure = Some("residual is not finite".into());
            break;
        }
        let Some(dx) = newton_step(jacobian(&x)?, &r) else {
            failure = Some("singular Jacobian".into());
            break;
        };
        let norm0 = r.norm();
        let mut t = 1.0;
        let accepted = loop {
            let trial = &x + &dx * t;
            let rt = residual(&trial)?;
            if rt.norm() < norm0 {
                break Some((trial, rt));
            }
            t *= 0.5;
            if t < MIN_STEP {
                break None;
            }
        };
        iterations += 1;
        match accepted {
            Some((xt, rt)) => {
                x = xt;
                r = rt;
                history.push(sup(&r));
            }
            None => {
                failure = Some("line search stagnated".into());
                break;
            }
        }
    }
    let residual_sup = sup(&r);
    Ok((
        x,
        SolveReport {
            converged: failure.is_none(),
            iterations,
            residual_sup,
            resolution,
            diagnostics: history,
            failure,
        },
    ))
}
