//! Process-wide accounting of bytes held by tensor value buffers.

use std::sync::atomic::{AtomicUsize, Ordering};

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

pub struct Storage<F> {
    data: Vec<F>,
}

impl<F> Storage<F> {
    pub(crate) fn new(data: Vec<F>) -> Self {
        let bytes = data.len() * std::mem::size_of::<F>();
        let now = CURRENT.fetch_add(bytes, Ordering::Relaxed) + bytes;
        PEAK.fetch_max(now, Ordering::Relaxed);
        Storage { data }
    }

    pub(crate) fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub(crate) fn len(&self) -> usize {
        self.data.len()
    }
}

impl<F> Drop for Storage<F> {
    fn drop(&mut self) {
        CURRENT.fetch_sub(self.data.len() * std::mem::size_of::<F>(), Ordering::Relaxed);
    }
}

/// Bytes currently held by live tensors.
pub fn current_bytes() -> usize {
    CURRENT.load(Ordering::Relaxed)
}

/// High-water mark since the last [`reset_peak`].
pub fn peak_bytes() -> usize {
    PEAK.load(Ordering::Relaxed)
}

pub fn reset_peak() {
    PEAK.store(CURRENT.load(Ordering::Relaxed), Ordering::Relaxed);
}
