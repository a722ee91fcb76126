//! Central-difference gradient checking.

use super::{AutodiffError, Gradients};
use crate::params::{ParamId, ParamStore};

/// Below this magnitude both slopes count as zero and the coordinate is scored
/// by absolute error, keeping rounding noise out of the ratio.
const FLAT: f64 = 1e-5;

/// `|a − n| / (|a| + |n| + 1e-12)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs() + 1e-12)
}

/// Maximum relative error between `grads` and central differences of `f` over
/// every coordinate of `ids`.
///
/// A coordinate whose one-sided differences disagree sharply sits on a kink
/// (a ReLU input at exactly zero, or within `eps` of it) and is skipped, since
/// the central difference there is not a derivative.
pub fn finite_diff_check<F>(
    store: &mut ParamStore,
    ids: &[ParamId],
    grads: &Gradients,
    eps: f64,
    f: F,
) -> Result<f64, AutodiffError>
where
    F: FnMut(&ParamStore) -> Result<f64, AutodiffError>,
{
    finite_diff_check_masked(store, ids, grads, eps, &[], f)
}

/// [`finite_diff_check`] with an explicit list of `(parameter, flat index)`
/// coordinates to leave out.
pub fn finite_diff_check_masked<F>(
    store: &mut ParamStore,
    ids: &[ParamId],
    grads: &Gradients,
    eps: f64,
    skip: &[(ParamId, usize)],
    mut f: F,
) -> Result<f64, AutodiffError>
where
    F: FnMut(&ParamStore) -> Result<f64, AutodiffError>,
{
    assert!(eps > 0.0, "eps must be positive");
    let center = f(store)?;
    let mut worst: f64 = 0.0;
    for &id in ids {
        for k in 0..store.value(id).len() {
            if skip.contains(&(id, k)) {
                continue;
            }
            let analytic = grads.get(id).map_or(0.0, |g| g.data()[k]);
            let orig = store.value(id).data()[k];
            store.value_mut(id).data_mut()[k] = orig + eps;
            let plus = f(store);
            store.value_mut(id).data_mut()[k] = orig - eps;
            let minus = f(store);
            store.value_mut(id).data_mut()[k] = orig;
            let (plus, minus) = (plus?, minus?);

            let forward = (plus - center) / eps;
            let backward = (center - minus) / eps;
            if (forward - backward).abs() > 1e-3 * (forward.abs() + backward.abs()) + 1e-4 {
                continue;
            }
            let numeric = (plus - minus) / (2.0 * eps);
            let err = if analytic.abs() < FLAT && numeric.abs() < FLAT {
                (analytic - numeric).abs()
            } else {
                relative_error(analytic, numeric)
            };
            worst = worst.max(err);
        }
    }
    Ok(worst)
}
