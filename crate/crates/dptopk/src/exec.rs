//! Trial execution: data-parallel by default, sequential behind the same API.
//!
//! Work units derive their own RNG streams, so results do not depend on which
//! path ran or in what order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn map_trials<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_trials<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_trials_seq(n, f)
}

/// Sequential reference path; kept available unconditionally so the two can
/// be compared on the same build.
pub fn map_trials_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn parallel_and_sequential_agree() {
        let work = |t: usize| stream(99, &[t as u64]).random::<u64>();
        assert_eq!(map_trials(64, work), map_trials_seq(64, work));
    }
}
