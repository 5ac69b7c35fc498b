use crate::error::Result;
use crate::fiber::FiberSystem;
use crate::net::{l2_normalize, StageHook};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// The simulated fiber as a stage hook. Output images are rescaled to unit
/// norm so every stage hands the next block a unit vector.
#[derive(Debug, Clone)]
pub struct FiberHook {
    system: Arc<FiberSystem>,
}

impl FiberHook {
    pub fn new(system: Arc<FiberSystem>) -> Self {
        Self { system }
    }

    pub fn system(&self) -> &FiberSystem {
        &self.system
    }
}

impl StageHook for FiberHook {
    fn apply(&self, features: &[f64]) -> Result<Vec<f64>> {
        l2_normalize(&self.system.transform(features)?)
    }

    fn name(&self) -> String {
        format!("fiber:{}", &self.system.fingerprint()[..16])
    }
}

/// Wraps a hook and counts its invocations.
pub struct CountingHook<H> {
    inner: H,
    calls: AtomicU64,
}

impl<H: StageHook> CountingHook<H> {
    pub fn new(inner: H) -> Self {
        Self {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &H {
        &self.inner
    }
}

impl<H: StageHook> StageHook for CountingHook<H> {
    fn apply(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.apply(features)
    }

    fn name(&self) -> String {
        self.inner.name()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::IdentityHook;

    #[test]
    fn counts_every_call() {
        let h = CountingHook::new(IdentityHook);
        for _ in 0..5 {
            assert_eq!(h.apply(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        }
        assert_eq!(h.calls(), 5);
        assert_eq!(h.name(), "identity");
    }
}
