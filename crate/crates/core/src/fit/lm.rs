//! Bounded Levenberg-Marquardt least squares.
//!
//! Minimises `Σ rᵢ(p)²` for weighted residuals `rᵢ = (yᵢ − f(xᵢ; p))/σᵢ`.
//! Jacobians are central finite differences, the damping is scaled by the
//! diagonal of `JᵀJ` (Marquardt), and box bounds are enforced by projecting
//! each trial step. The reported covariance is `(JᵀJ)⁻¹` at the solution.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::FitError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop when `max_j |(Jᵀr)_j| / (‖J_j‖ ‖r‖)` falls below this.
    pub gtol: f64,
    /// Stop when the relative parameter step falls below this.
    pub xtol: f64,
    /// Stop when the relative cost decrease of an accepted step falls below
    /// this.
    pub ftol: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
    /// Smallest eigenvalue of the column-normalised `JᵀJ` accepted as
    /// identifiable.
    pub rank_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            gtol: 1e-10,
            xtol: 1e-12,
            ftol: 1e-15,
            fd_step: 1e-6,
            rank_tol: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Gradient,
    StepSize,
    CostChange,
    /// Exactly zero residual.
    Exact,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmResult {
    pub params: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub residuals: Vec<f64>,
    pub chi2: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Cost after every accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
}

impl LmResult {
    pub fn std_errs(&self) -> Vec<f64> {
        (0..self.params.len())
            .map(|i| self.covariance[(i, i)].max(0.0).sqrt())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Problem<'a> {
    pub names: &'a [&'a str],
    pub initial: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Typical magnitude of each parameter for the finite-difference step;
    /// defaults to the magnitude of the initial value.
    pub scale: Option<Vec<f64>>,
}

impl<'a> Problem<'a> {
    pub fn unbounded(names: &'a [&'a str], initial: Vec<f64>) -> Self {
        let n = initial.len();
        Self {
            names,
            initial,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            scale: None,
        }
    }

    pub fn bounded(names: &'a [&'a str], initial: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            names,
            initial,
            lower,
            upper,
            scale: None,
        }
    }
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

fn eval<F>(f: &F, x: &[f64]) -> Result<DVector<f64>, FitError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let r = DVector::from_vec(f(x));
    if r.iter().all(|v| v.is_finite()) {
        Ok(r)
    } else {
        Err(FitError::NonFinite)
    }
}

fn jacobian<F>(f: &F, x: &[f64], steps: &[f64], m: usize) -> Result<DMatrix<f64>, FitError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = steps[j];
        xp[j] = x[j] + h;
        let rp = eval(f, &xp)?;
        xp[j] = x[j] - h;
        let rm = eval(f, &xp)?;
        xp[j] = x[j];
        let col = (rp - rm) / (2.0 * h);
        jac.set_column(j, &col);
    }
    Ok(jac)
}

/// Inverts `JᵀJ`, failing with [`FitError::Unidentifiable`] when it is
/// numerically rank deficient. The test is done on the column-normalised
/// matrix so that parameter units do not matter.
pub(crate) fn covariance(jtj: &DMatrix<f64>, names: &[&str], rank_tol: f64) -> Result<DMatrix<f64>, FitError> {
    let n = jtj.nrows();
    let d: Vec<f64> = (0..n).map(|i| jtj[(i, i)]).collect();
    if let Some(i) = d.iter().position(|&v| !(v > 0.0)) {
        return Err(FitError::Unidentifiable {
            parameter: names.get(i).unwrap_or(&"?").to_string(),
        });
    }
    let s: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
    let normalised = DMatrix::from_fn(n, n, |i, j| jtj[(i, j)] * s[i] * s[j]);
    let eig = SymmetricEigen::new(normalised.clone());
    let (k, &min_eig) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one parameter");
    if min_eig < rank_tol {
        let v = eig.eigenvectors.column(k);
        let worst = (0..n)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
            .expect("at least one parameter");
        return Err(FitError::Unidentifiable {
            parameter: names.get(worst).unwrap_or(&"?").to_string(),
        });
    }
    let inv = normalised
        .try_inverse()
        .ok_or_else(|| FitError::Unidentifiable {
            parameter: names.join(", "),
        })?;
    Ok(DMatrix::from_fn(n, n, |i, j| inv[(i, j)] * s[i] * s[j]))
}

/// Runs the optimiser on the residual function `f`.
pub fn levenberg_marquardt<F>(f: F, problem: &Problem<'_>, options: &LmOptions) -> Result<LmResult, FitError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = problem.initial.len();
    if problem.lower.len() != n || problem.upper.len() != n || problem.names.len() != n {
        return Err(FitError::InvalidInput("parameter vectors differ in length".into()));
    }
    let mut x = problem.initial.clone();
    project(&mut x, &problem.lower, &problem.upper);
    let scale: Vec<f64> = match &problem.scale {
        Some(s) => s.clone(),
        None => x.iter().map(|v| if *v != 0.0 { v.abs() } else { 1.0 }).collect(),
    };
    let mut r = eval(&f, &x)?;
    let m = r.len();
    if m < n {
        return Err(FitError::InvalidInput(format!(
            "{m} residuals for {n} parameters"
        )));
    }
    let mut cost = r.norm_squared();
    let mut history = vec![cost];
    let mut lambda = 1e-3;
    let mut diag = DVector::<f64>::zeros(n);
    let steps_for = |x: &[f64]| -> Vec<f64> {
        x.iter()
            .zip(&scale)
            .map(|(v, s)| options.fd_step * v.abs().max(*s))
            .collect()
    };
    let mut jac = jacobian(&f, &x, &steps_for(&x), m)?;
    let mut termination = None;
    let mut iterations = 0;

    while iterations < options.max_iter {
        iterations += 1;
        if cost == 0.0 {
            termination = Some(Termination::Exact);
            break;
        }
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        // Relative gradient, ignoring components pushing against an active
        // bound.
        let rnorm = cost.sqrt();
        let gmax = (0..n)
            .filter(|&j| {
                let at_lo = x[j] <= problem.lower[j] && grad[j] > 0.0;
                let at_hi = x[j] >= problem.upper[j] && grad[j] < 0.0;
                !(at_lo || at_hi)
            })
            .map(|j| {
                let cn = jtj[(j, j)].sqrt();
                if cn == 0.0 {
                    0.0
                } else {
                    grad[j].abs() / (cn * rnorm)
                }
            })
            .fold(0.0, f64::max);
        if gmax < options.gtol {
            termination = Some(Termination::Gradient);
            break;
        }
        for j in 0..n {
            diag[j] = diag[j].max(jtj[(j, j)]).max(1e-300);
        }

        let mut accepted = false;
        while lambda < 1e20 {
            let mut a = jtj.clone();
            for j in 0..n {
                a[(j, j)] += lambda * diag[j];
            }
            let Some(delta) = a.cholesky().map(|c| c.solve(&(-&grad))) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            project(&mut trial, &problem.lower, &problem.upper);
            let r_trial = match eval(&f, &trial) {
                Ok(v) => v,
                Err(_) => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let cost_trial = r_trial.norm_squared();
            if cost_trial < cost {
                let step: f64 = trial
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let xnorm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let decrease = (cost - cost_trial) / cost;
                x = trial;
                r = r_trial;
                cost = cost_trial;
                history.push(cost);
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                jac = jacobian(&f, &x, &steps_for(&x), m)?;
                if step <= options.xtol * (xnorm + options.xtol) {
                    termination = Some(Termination::StepSize);
                } else if decrease <= options.ftol {
                    termination = Some(Termination::CostChange);
                }
                break;
            }
            lambda *= 4.0;
        }
        if termination.is_some() {
            break;
        }
        if !accepted {
            // No descent direction at machine precision: a minimum.
            termination = Some(Termination::CostChange);
            break;
        }
    }
    let termination = termination.ok_or(FitError::NonConvergence {
        iterations: options.max_iter,
    })?;
    let jtj = jac.transpose() * &jac;
    let cov = covariance(&jtj, problem.names, options.rank_tol)?;
    Ok(LmResult {
        params: x,
        covariance: cov,
        residuals: r.iter().copied().collect(),
        chi2: cost,
        iterations,
        termination,
        cost_history: history,
    })
}
