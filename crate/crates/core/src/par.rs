//! Runtime choice between sequential and rayon-backed execution.
//!
//! Results never depend on the choice: work is split into indexed units
//! with their own RNG streams and reassembled in index order.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    #[default]
    Rayon,
}

impl Parallelism {
    /// `Rayon` when the `parallel` feature is compiled in.
    pub fn available() -> Self {
        if cfg!(feature = "parallel") {
            Self::Rayon
        } else {
            Self::Sequential
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Self::Rayon
    }

    /// Maps `f` over `0..n`, returning results in index order.
    pub fn map_indexed<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Self::Rayon {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }
}

impl std::str::FromStr for Parallelism {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "sequential" | "seq" => Ok(Self::Sequential),
            "rayon" | "parallel" => Ok(Self::Rayon),
            other => Err(crate::Error::Config(format!("unknown parallelism '{other}'"))),
        }
    }
}
