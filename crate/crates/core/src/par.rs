//! Data-parallel map over independent work items.
//!
//! With the `parallel` feature (on by default) `Exec::Parallel` fans out on
//! the rayon pool; without it every map runs sequentially. Results always
//! come back in input order, and randomized trials draw from a ChaCha stream
//! keyed by (seed, trial index), so both modes produce identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Exec::Sequential => items.iter().map(f).collect(),
            Exec::Parallel => par_map(items, f),
        }
    }

    /// Run `trials` independent closures, each with its own rng.
    pub fn trials<R, F>(self, seed: u64, trials: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize, &mut ChaCha8Rng) -> R + Sync + Send,
    {
        let idx: Vec<usize> = (0..trials).collect();
        self.map(&idx, |&i| {
            let mut rng = trial_rng(seed, i);
            f(i, &mut rng)
        })
    }
}

/// The rng for trial `i` of a campaign seeded with `seed`.
pub fn trial_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

#[cfg(feature = "parallel")]
fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn modes_agree() {
        let a = Exec::Sequential.trials(7, 64, |_, rng| rng.gen::<f64>());
        let b = Exec::Parallel.trials(7, 64, |_, rng| rng.gen::<f64>());
        assert_eq!(a, b);
        let c = Exec::Parallel.trials(8, 64, |_, rng| rng.gen::<f64>());
        assert_ne!(a, c);
    }

    #[test]
    fn order_is_kept() {
        let v: Vec<usize> = (0..1000).collect();
        assert_eq!(Exec::Parallel.map(&v, |x| x * 2), v.iter().map(|x| x * 2).collect::<Vec<_>>());
    }
}
