use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

/// Node budget shared by the exhaustive solvers.
///
/// Every search node calls [`Budget::tick`]; once the limit is passed the search
/// aborts with [`Error::BudgetExhausted`] instead of returning a partial answer.
/// The counter is atomic so one budget can be shared by parallel workers.
#[derive(Debug)]
pub struct Budget {
    limit: u64,
    used: AtomicU64,
    context: &'static str,
}

impl Budget {
    pub const DEFAULT_NODES: u64 = 50_000_000;

    pub fn new(limit: u64) -> Self {
        Self::with_context(limit, "search")
    }

    pub fn with_context(limit: u64, context: &'static str) -> Self {
        Budget {
            limit,
            used: AtomicU64::new(0),
            context,
        }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::Relaxed)
    }

    #[inline]
    pub fn tick(&self) -> Result<()> {
        let used = self.used.fetch_add(1, Ordering::Relaxed) + 1;
        if used > self.limit {
            Err(Error::BudgetExhausted {
                context: self.context.to_string(),
                limit: self.limit,
            })
        } else {
            Ok(())
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::new(Self::DEFAULT_NODES)
    }
}
