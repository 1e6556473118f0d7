//! Iteratively reweighted least squares for the log link.
//!
//! With a log link the working response is `eta - offset + (y - mu)/mu` and
//! the working weight is `w * mu` for Poisson and `w` for Gamma. The normal
//! equations are accumulated sparsely: a row only touches the intercept and
//! one dummy column per factor.

use super::{DesignView, Family, GlmError};
use nalgebra::{Cholesky, DMatrix, DVector};

pub(super) struct IrlsOutcome {
    pub beta: Vec<f64>,
    pub mu: Vec<f64>,
    pub deviance: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(super) fn run(
    design: &DesignView,
    family: Family,
    max_iterations: usize,
    tolerance: f64,
) -> Result<IrlsOutcome, GlmError> {
    let n = design.n_rows_used();
    let p = design.n_cols();
    let y = design.response();
    let offset = design.offset();
    let w = design.weights();

    // per-row active columns besides the intercept, precomputed
    let active: Vec<Vec<u32>> = (0..n)
        .map(|row| design.active_cols(row).map(|c| c as u32).collect())
        .collect();

    let mut mu: Vec<f64> = match family {
        Family::Poisson => y.iter().map(|&v| v + 0.1).collect(),
        Family::Gamma => y.to_vec(),
    };
    let mut eta: Vec<f64> = mu.iter().map(|&m| m.ln()).collect();
    let mut deviance = super::family::deviance(family, y, &mu, w);
    let mut beta = vec![0.0; p];
    let mut have_beta = false;
    let mut converged = false;
    let mut iterations = 0;

    let mut xtwx = DMatrix::<f64>::zeros(p, p);
    let mut xtwz = DVector::<f64>::zeros(p);

    while iterations < max_iterations {
        iterations += 1;
        xtwx.fill(0.0);
        xtwz.fill(0.0);
        for row in 0..n {
            let wi = match family {
                Family::Poisson => w[row] * mu[row],
                Family::Gamma => w[row],
            };
            if wi <= 0.0 {
                continue;
            }
            let zi = (eta[row] - offset[row]) + (y[row] - mu[row]) / mu[row];
            let cols = &active[row];
            // intercept
            xtwx[(0, 0)] += wi;
            xtwz[0] += wi * zi;
            for (a, &ca) in cols.iter().enumerate() {
                let ca = ca as usize;
                xtwx[(0, ca)] += wi;
                xtwz[ca] += wi * zi;
                for &cb in &cols[a..] {
                    let cb = cb as usize;
                    xtwx[(ca, cb)] += wi;
                }
            }
        }
        // mirror the upper triangle
        for i in 0..p {
            for j in (i + 1)..p {
                xtwx[(j, i)] = xtwx[(i, j)];
            }
        }
        let chol = match Cholesky::new(xtwx.clone()) {
            Some(c) => c,
            None => {
                let factor = diagnose_singular(&xtwx, design);
                return Err(GlmError::RankDeficient { factor });
            }
        };
        let proposal = chol.solve(&xtwz);

        // step-halve toward the previous coefficients if the deviance
        // degrades or turns non-finite
        let mut accepted = false;
        let mut step = 1.0;
        for _ in 0..12 {
            let trial: Vec<f64> = if have_beta {
                beta.iter()
                    .zip(proposal.iter())
                    .map(|(&old, &new)| old + step * (new - old))
                    .collect()
            } else {
                proposal.iter().copied().collect()
            };
            let (trial_eta, trial_mu) = predictor(&trial, &active, offset, n);
            let trial_dev = super::family::deviance(family, y, &trial_mu, w);
            if trial_dev.is_finite() && (!have_beta || trial_dev <= deviance * (1.0 + 1e-12) + 1e-12)
            {
                let rel = (deviance - trial_dev).abs() / (trial_dev.abs() + 0.1);
                let full_step = step == 1.0;
                beta = trial;
                eta = trial_eta;
                mu = trial_mu;
                deviance = trial_dev;
                have_beta = true;
                accepted = true;
                // a halved step with tiny improvement is not a fixed point
                if rel < tolerance && iterations > 1 && full_step {
                    converged = true;
                }
                break;
            }
            if !have_beta {
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // no usable step; report the best point reached so far
            break;
        }
        if converged {
            break;
        }
    }

    Ok(IrlsOutcome {
        beta,
        mu,
        deviance,
        iterations,
        converged,
    })
}

fn predictor(
    beta: &[f64],
    active: &[Vec<u32>],
    offset: &[f64],
    n: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut eta = Vec::with_capacity(n);
    let mut mu = Vec::with_capacity(n);
    for row in 0..n {
        let mut e = beta[0] + offset[row];
        for &c in &active[row] {
            e += beta[c as usize];
        }
        eta.push(e);
        mu.push(e.exp());
    }
    (eta, mu)
}

fn diagnose_singular(xtwx: &DMatrix<f64>, design: &DesignView) -> String {
    let p = xtwx.nrows();
    let mut worst = (0usize, f64::INFINITY);
    for i in 0..p {
        let d = xtwx[(i, i)];
        if d < worst.1 {
            worst = (i, d);
        }
    }
    design
        .factor_of_col(worst.0)
        .unwrap_or("(intercept)")
        .to_string()
}
