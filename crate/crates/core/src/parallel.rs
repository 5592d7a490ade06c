use rayon::prelude::*;

use crate::error::Result;

/// Maps `f` over `items` in parallel, keeping input order and the first error.
pub(crate) fn map<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    items.par_iter().map(f).collect()
}
