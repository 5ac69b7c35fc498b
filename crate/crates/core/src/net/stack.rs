use super::layer::FFLayerParams;
use super::ops::l2_normalize;
use crate::error::{Error, Result};

/// A fixed, non-trainable map applied to a stage's normalized activations.
pub trait StageHook: Send + Sync {
    fn apply(&self, features: &[f64]) -> Result<Vec<f64>>;

    fn name(&self) -> String;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityHook;

impl StageHook for IdentityHook {
    fn apply(&self, features: &[f64]) -> Result<Vec<f64>> {
        Ok(features.to_vec())
    }

    fn name(&self) -> String {
        "identity".into()
    }
}

/// `l2_normalize(relu(conv(rep)))`: what a block hands to the next stage.
pub fn normalized_activations(rep: &[f64], layer: &FFLayerParams) -> Result<Vec<f64>> {
    l2_normalize(&layer.activations(rep))
}

pub fn stage_forward(rep: &[f64], layer: &FFLayerParams, hook: &dyn StageHook) -> Result<Vec<f64>> {
    hook.apply(&normalized_activations(rep, layer)?)
}

/// All stage representations of one sample, starting with the input itself.
pub fn forward_stack(sample: &[f64], layers: &[FFLayerParams], hooks: &[&dyn StageHook]) -> Result<Vec<Vec<f64>>> {
    if hooks.len() != layers.len() {
        return Err(Error::DimensionMismatch {
            expected: layers.len(),
            got: hooks.len(),
        });
    }
    let mut reps = Vec::with_capacity(layers.len() + 1);
    reps.push(sample.to_vec());
    for (layer, hook) in layers.iter().zip(hooks) {
        let next = stage_forward(reps.last().expect("non-empty"), layer, *hook)?;
        reps.push(next);
    }
    Ok(reps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::ops::l2_norm;

    fn sample() -> Vec<f64> {
        (0..1024).map(|i| ((i * 7) % 13) as f64 / 13.0).collect()
    }

    #[test]
    fn no_layers() {
        let s = sample();
        assert_eq!(forward_stack(&s, &[], &[]).unwrap(), vec![s]);
    }

    #[test]
    fn two_identity_stages_are_unit_norm() {
        let layers = [FFLayerParams::init(1, 4, 2.0), FFLayerParams::init(2, 4, 2.0)];
        let hooks: [&dyn StageHook; 2] = [&IdentityHook, &IdentityHook];
        let reps = forward_stack(&sample(), &layers, &hooks).unwrap();
        assert_eq!(reps.len(), 3);
        for r in &reps[1..] {
            assert!((l2_norm(r) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn per_sample_pure() {
        let layers = [FFLayerParams::init(1, 4, 2.0)];
        let hooks: [&dyn StageHook; 1] = [&IdentityHook];
        let a = forward_stack(&sample(), &layers, &hooks).unwrap();
        let _other = forward_stack(&vec![0.3; 1024], &layers, &hooks).unwrap();
        assert_eq!(a, forward_stack(&sample(), &layers, &hooks).unwrap());
    }

    #[test]
    fn hook_count_must_match() {
        let layers = [FFLayerParams::init(1, 4, 2.0)];
        assert!(matches!(
            forward_stack(&sample(), &layers, &[]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dead_layer_reports_degenerate_norm() {
        let layers = [FFLayerParams::new([0.0; 25], -1.0, 4, 2.0)];
        let hooks: [&dyn StageHook; 1] = [&IdentityHook];
        assert!(matches!(
            forward_stack(&sample(), &layers, &hooks),
            Err(Error::DegenerateNorm(_))
        ));
    }
}
