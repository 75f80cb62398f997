//! Order-preserving map over independent work items.
//!
//! With the `parallel` feature the work is spread over the rayon pool; without
//! it (or with [`Exec::Sequential`]) items run one after another. Either way
//! results come back in input order, so outputs do not depend on scheduling.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

pub fn map_ordered<T, R, F>(items: &[T], exec: Exec, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = map_ordered(&xs, Exec::Sequential, |x| x * x);
        let b = map_ordered(&xs, Exec::Parallel, |x| x * x);
        assert_eq!(a, b);
        assert_eq!(a[999], 998001);
    }
}
