use core::sync::atomic::{AtomicBool, Ordering};

/// Binary wake-up signal between an interrupt-side task and a consumer.
///
/// Raising an already raised signal has no further effect; the consumer
/// clears it with [`take`](Self::take).
#[derive(Debug, Default)]
pub struct Signal(AtomicBool);

impl Signal {
    pub const fn new() -> Self {
        Signal(AtomicBool::new(false))
    }

    pub fn raise(&self) {
        self.0.store(true, Ordering::Release);
    }

    /// Returns whether the signal was raised, clearing it.
    pub fn take(&self) -> bool {
        self.0.swap(false, Ordering::Acquire)
    }

    pub fn is_raised(&self) -> bool {
        self.0.load(Ordering::Acquire)
    }
}
