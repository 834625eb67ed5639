//! Central finite-difference verification of analytic gradients.

use alloc::vec::Vec;

/// Entries smaller than this are compared on an absolute scale.
pub const DEFAULT_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Offender {
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub tol: f64,
    pub max_rel_err: f64,
    pub checked: usize,
    /// Coordinates whose ±h probes landed on different linear pieces.
    pub skipped_nonsmooth: usize,
    /// Up to five worst coordinates, worst first.
    pub worst: Vec<Offender>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.checked > 0 && self.max_rel_err < self.tol
    }
}

/// `|a − n| / max(|a|, |n|, floor)`
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares `analytic` against central differences of `loss_fn` at `params`.
pub fn finite_diff_check(
    mut loss_fn: impl FnMut(&[f64]) -> f64,
    params: &[f64],
    analytic: &[f64],
    h: f64,
    tol: f64,
) -> GradCheckReport {
    check_indices(
        |p| (loss_fn(p), 0),
        params,
        analytic,
        h,
        tol,
        DEFAULT_FLOOR,
        0..params.len(),
    )
}

/// Finite-difference check for piecewise-smooth losses.
///
/// `loss_fn` returns the loss together with a signature of the active linear
/// piece (for example a hash of ReLU on/off states). Coordinates whose
/// probes change the signature straddle a kink and are skipped.
pub fn check_indices(
    mut loss_fn: impl FnMut(&[f64]) -> (f64, u64),
    params: &[f64],
    analytic: &[f64],
    h: f64,
    tol: f64,
    floor: f64,
    indices: impl IntoIterator<Item = usize>,
) -> GradCheckReport {
    assert_eq!(params.len(), analytic.len(), "gradient length");
    let mut p = params.to_vec();
    let (_, center) = loss_fn(&p);
    let mut offenders = Vec::new();
    let mut skipped = 0;
    for i in indices {
        let orig = p[i];
        p[i] = orig + h;
        let (plus, sig_plus) = loss_fn(&p);
        p[i] = orig - h;
        let (minus, sig_minus) = loss_fn(&p);
        p[i] = orig;
        if sig_plus != center || sig_minus != center {
            skipped += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * h);
        offenders.push(Offender {
            index: i,
            analytic: analytic[i],
            numeric,
            rel_err: relative_error(analytic[i], numeric, floor),
        });
    }
    let checked = offenders.len();
    offenders.sort_by(|a, b| b.rel_err.total_cmp(&a.rel_err));
    let max_rel_err = offenders.first().map_or(0.0, |o| o.rel_err);
    offenders.truncate(5);
    GradCheckReport {
        tol,
        max_rel_err,
        checked,
        skipped_nonsmooth: skipped,
        worst: offenders,
    }
}
