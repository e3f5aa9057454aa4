//! Element contributions evaluated on scoped worker threads.

use std::num::NonZeroUsize;
use std::thread;

use polyvem_core::system::{Assemble, ElementContribution, SystemError};

/// Splits the cells into contiguous blocks, one per thread, and concatenates
/// the blocks in cell order. The scattered matrix is therefore identical to
/// the serial one, bit for bit.
#[derive(Clone, Copy, Debug)]
pub struct ThreadedAssembly {
    pub threads: NonZeroUsize,
}

impl ThreadedAssembly {
    pub fn new(threads: usize) -> Self {
        Self { threads: NonZeroUsize::new(threads).unwrap_or(NonZeroUsize::MIN) }
    }

    /// One thread per available core.
    pub fn available() -> Self {
        Self { threads: thread::available_parallelism().unwrap_or(NonZeroUsize::MIN) }
    }
}

impl Assemble for ThreadedAssembly {
    fn contributions(
        &self,
        n_cells: usize,
        element: &(dyn Fn(usize) -> Result<ElementContribution, SystemError> + Sync),
    ) -> Result<Vec<ElementContribution>, SystemError> {
        let threads = self.threads.get().min(n_cells.max(1));
        let block = n_cells.div_ceil(threads);
        let blocks: Vec<Result<Vec<ElementContribution>, SystemError>> = thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let range = (t * block).min(n_cells)..((t + 1) * block).min(n_cells);
                    s.spawn(move || range.map(element).collect())
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("assembly worker panicked")).collect()
        });
        let mut out = Vec::with_capacity(n_cells);
        for b in blocks {
            out.extend(b?);
        }
        Ok(out)
    }
}
