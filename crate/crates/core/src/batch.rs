//! Order-preserving bulk evaluation over independent inputs.
//!
//! With the `parallel` feature enabled the work fans out over the rayon
//! thread pool; otherwise the same code runs as a plain sequential map.
//! Outputs are always in input order, so results are identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `op` to every input.
#[cfg(feature = "parallel")]
pub fn map<I, O, F>(inputs: &[I], op: F) -> Vec<O>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> O + Sync + Send,
{
    inputs.par_iter().map(op).collect()
}

/// Applies `op` to every input.
#[cfg(not(feature = "parallel"))]
pub fn map<I, O, F>(inputs: &[I], op: F) -> Vec<O>
where
    F: Fn(&I) -> O,
{
    inputs.iter().map(op).collect()
}

/// Applies a fallible `op` to every input, stopping at the first error.
#[cfg(feature = "parallel")]
pub fn try_map<I, O, E, F>(inputs: &[I], op: F) -> Result<Vec<O>, E>
where
    I: Sync,
    O: Send,
    E: Send,
    F: Fn(&I) -> Result<O, E> + Sync + Send,
{
    inputs.par_iter().map(op).collect()
}

/// Applies a fallible `op` to every input, stopping at the first error.
#[cfg(not(feature = "parallel"))]
pub fn try_map<I, O, E, F>(inputs: &[I], op: F) -> Result<Vec<O>, E>
where
    F: Fn(&I) -> Result<O, E>,
{
    inputs.iter().map(op).collect()
}
