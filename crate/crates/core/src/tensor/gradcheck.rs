// SPDX-License-Identifier: Apache-2.0
//! Central finite-difference check of analytic gradients.

use super::{Gradients, ParamStore, TensorError};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckConfig {
    pub eps: f64,
    pub tol: f64,
    /// Entries sampled per parameter tensor; all entries if the tensor is smaller.
    pub samples_per_param: usize,
    /// Denominator floor for the relative error.
    pub floor: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            eps: 1e-5,
            tol: 1e-3,
            samples_per_param: 8,
            floor: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckEntry {
    pub param: String,
    pub row: usize,
    pub col: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub max_rel_error: f64,
    pub tol: f64,
    pub passed: bool,
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} entries, max relative error {:.3e} (tol {:.1e}): {}",
            self.entries.len(),
            self.max_rel_error,
            self.tol,
            if self.passed { "ok" } else { "FAILED" }
        )?;
        for e in self.entries.iter().filter(|e| e.rel_error > self.tol) {
            writeln!(
                f,
                "  {}[{},{}] analytic {:.6e} numeric {:.6e} rel {:.3e}",
                e.param, e.row, e.col, e.analytic, e.numeric, e.rel_error
            )?;
        }
        Ok(())
    }
}

/// Compares the gradients returned by `f` against central differences of
/// its loss at sampled coordinates of every parameter.
///
/// Relative error is |a − n| / max(|a|, |n|, floor).
pub fn grad_check<F>(store: &ParamStore, f: F, cfg: &GradCheckConfig) -> Result<GradCheckReport, TensorError>
where
    F: Fn(&ParamStore) -> Result<(f64, Gradients), TensorError>,
{
    let (loss, grads) = f(store)?;
    if !loss.is_finite() || !grads.is_finite() {
        return Err(TensorError::NonFinite("grad_check base point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut work = store.clone();
    let mut entries = Vec::new();
    for id in store.ids() {
        let (rows, cols) = store.get(id).dim();
        let n = rows * cols;
        let picks = sample(&mut rng, n, cfg.samples_per_param.min(n)).into_vec();
        for flat in picks {
            let (r, c) = (flat / cols, flat % cols);
            let orig = store.get(id)[[r, c]];
            work.get_mut(id)[[r, c]] = orig + cfg.eps;
            let plus = f(&work)?.0;
            work.get_mut(id)[[r, c]] = orig - cfg.eps;
            let minus = f(&work)?.0;
            work.get_mut(id)[[r, c]] = orig;
            let numeric = (plus - minus) / (2.0 * cfg.eps);
            if !numeric.is_finite() {
                return Err(TensorError::NonFinite(format!(
                    "finite difference of {}",
                    store.name(id)
                )));
            }
            let analytic = grads.get(id).map_or(0.0, |g| g[[r, c]]);
            let denom = analytic.abs().max(numeric.abs()).max(cfg.floor);
            entries.push(GradCheckEntry {
                param: store.name(id).to_string(),
                row: r,
                col: c,
                analytic,
                numeric,
                rel_error: (analytic - numeric).abs() / denom,
            });
        }
    }
    let max_rel_error = entries.iter().map(|e| e.rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        passed: max_rel_error <= cfg.tol,
        max_rel_error,
        tol: cfg.tol,
        entries,
    })
}
