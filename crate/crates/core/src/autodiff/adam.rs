use serde::{Deserialize, Serialize};

use super::{Array2, AutodiffError, Gradients};
use crate::params::{ParamId, ParamStore};

/// Step size and decay rates for [`Adam`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub b1: f64,
    pub b2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 5e-4,
            b1: 0.9,
            b2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam over a subset of a [`ParamStore`].
///
/// Moment arrays are created lazily on the first update of each parameter.
/// The step counter advances once per [`Adam::update`] call; bias correction
/// uses the number of updates each parameter has actually received, so a
/// parameter left out of some calls is not over-corrected.
#[derive(Clone, Debug)]
pub struct Adam {
    pub config: AdamConfig,
    t: u64,
    moments: Vec<Option<(Array2, Array2, u64)>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            t: 0,
            moments: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// First and second moments of a parameter, if it has been updated.
    pub fn moments(&self, id: ParamId) -> Option<(&Array2, &Array2)> {
        self.moments
            .get(id.index())
            .and_then(|m| m.as_ref())
            .map(|(m, v, _)| (m, v))
    }

    /// Applies one step to every parameter in `ids`; each must have a gradient.
    pub fn update(
        &mut self,
        store: &mut ParamStore,
        ids: &[ParamId],
        grads: &Gradients,
    ) -> Result<(), AutodiffError> {
        for &id in ids {
            let grad = grads.get(id).ok_or_else(|| AutodiffError::MissingGradient {
                name: store.get(id).name.clone(),
            })?;
            let shape = store.value(id).shape();
            if grad.shape() != shape {
                return Err(AutodiffError::shape("adam_update", shape, grad.shape()));
            }
        }
        if self.moments.len() < store.len() {
            self.moments.resize_with(store.len(), || None);
        }
        self.t += 1;
        let AdamConfig { lr, b1, b2, eps } = self.config;
        for &id in ids {
            let grad = grads.get(id).expect("checked above");
            let param = store.value_mut(id);
            let (m, v, t) = self.moments[id.index()].get_or_insert_with(|| {
                (
                    Array2::zeros(param.rows(), param.cols()),
                    Array2::zeros(param.rows(), param.cols()),
                    0,
                )
            });
            *t += 1;
            let c1 = 1.0 - b1.powi(*t as i32);
            let c2 = 1.0 - b2.powi(*t as i32);
            for (((p, &g), m), v) in param
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Role;

    fn one_param(value: f64) -> (ParamStore, ParamId) {
        let mut store = ParamStore::new();
        let id = store.add(Role::F, "w", Array2::scalar(value));
        (store, id)
    }

    fn grad_of(id: ParamId, g: f64) -> Gradients {
        let mut grads = Gradients::default();
        grads.insert(id, Array2::scalar(g));
        grads
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let (mut store, id) = one_param(1.5);
        let mut adam = Adam::new(AdamConfig::default());
        for _ in 0..3 {
            adam.update(&mut store, &[id], &grad_of(id, 0.0)).unwrap();
        }
        assert_eq!(store.value(id).item(), 1.5);
        assert_eq!(adam.step_count(), 3);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let (mut store, id) = one_param(1.0);
        let mut adam = Adam::new(AdamConfig::default());
        adam.update(&mut store, &[id], &grad_of(id, 0.5)).unwrap();
        assert!((store.value(id).item() - (1.0 - 5e-4)).abs() < 1e-10);
    }

    #[test]
    fn three_steps_match_hand_unrolled_recurrence() {
        // f(w) = (w − 2)², w₀ = 0
        let (mut store, id) = one_param(0.0);
        let mut adam = Adam::new(AdamConfig::default());
        for _ in 0..3 {
            let w = store.value(id).item();
            adam.update(&mut store, &[id], &grad_of(id, 2.0 * (w - 2.0))).unwrap();
        }

        let (lr, b1, b2, eps) = (5e-4_f64, 0.9_f64, 0.999_f64, 1e-8_f64);
        let mut w = 0.0_f64;
        let (mut m, mut v) = (0.0_f64, 0.0_f64);
        // step 1
        let g = 2.0 * (w - 2.0);
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        w -= lr * (m / (1.0 - b1)) / ((v / (1.0 - b2)).sqrt() + eps);
        // step 2
        let g = 2.0 * (w - 2.0);
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        w -= lr * (m / (1.0 - b1 * b1)) / ((v / (1.0 - b2 * b2)).sqrt() + eps);
        // step 3
        let g = 2.0 * (w - 2.0);
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        w -= lr * (m / (1.0 - b1 * b1 * b1)) / ((v / (1.0 - b2 * b2 * b2)).sqrt() + eps);

        assert!((store.value(id).item() - w).abs() < 1e-12);
    }

    #[test]
    fn late_parameter_gets_first_step_correction() {
        let mut store = ParamStore::new();
        let a = store.add(Role::F, "a", Array2::scalar(0.0));
        let b = store.add(Role::H, "b", Array2::scalar(1.0));
        let mut adam = Adam::new(AdamConfig::default());
        for _ in 0..5 {
            adam.update(&mut store, &[a], &grad_of(a, 1.0)).unwrap();
        }
        adam.update(&mut store, &[b], &grad_of(b, 0.5)).unwrap();
        assert_eq!(adam.step_count(), 6);
        assert!((store.value(b).item() - (1.0 - 5e-4)).abs() < 1e-10);
    }

    #[test]
    fn missing_gradient_is_an_error() {
        let (mut store, id) = one_param(1.0);
        let mut adam = Adam::new(AdamConfig::default());
        let err = adam
            .update(&mut store, &[id], &Gradients::default())
            .unwrap_err();
        assert!(matches!(err, AutodiffError::MissingGradient { .. }));
        assert_eq!(adam.step_count(), 0);
    }

    #[test]
    fn moments_mirror_parameter_shapes() {
        let mut store = ParamStore::new();
        let id = store.add(Role::D, "w", Array2::zeros(3, 2));
        let mut grads = Gradients::default();
        grads.insert(id, Array2::filled(3, 2, 1.0));
        let mut adam = Adam::new(AdamConfig::default());
        adam.update(&mut store, &[id], &grads).unwrap();
        let (m, v) = adam.moments(id).unwrap();
        assert_eq!(m.shape(), (3, 2));
        assert_eq!(v.shape(), (3, 2));
    }
}
