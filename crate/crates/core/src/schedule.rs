use alloc::vec::Vec;

/// Index-addressed sequence of per-step values.
///
/// A constant schedule answers every index with the same value, so LTI and
/// LTV data look the same to callers of [`Schedule::at`].
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule<T> {
    Constant(T),
    Varying(Vec<T>),
}

impl<T> Schedule<T> {
    /// Value at index `k`. A varying schedule shorter than `k + 1` returns `None`.
    pub fn get(&self, k: usize) -> Option<&T> {
        match self {
            Schedule::Constant(v) => Some(v),
            Schedule::Varying(vs) => vs.get(k),
        }
    }

    /// Value at index `k`.
    ///
    /// Panics when a varying schedule is too short; callers validate lengths
    /// against the horizon first.
    pub fn at(&self, k: usize) -> &T {
        match self {
            Schedule::Constant(v) => v,
            Schedule::Varying(vs) => &vs[k],
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Schedule::Constant(_))
    }

    /// Number of stored entries; `None` for a constant schedule.
    pub fn stored_len(&self) -> Option<usize> {
        match self {
            Schedule::Constant(_) => None,
            Schedule::Varying(vs) => Some(vs.len()),
        }
    }

    /// Iterates over every stored entry (one for a constant schedule).
    pub fn entries(&self) -> impl Iterator<Item = (Option<usize>, &T)> {
        let (one, many) = match self {
            Schedule::Constant(v) => (Some(v), None),
            Schedule::Varying(vs) => (None, Some(vs)),
        };
        one.into_iter().map(|v| (None, v)).chain(
            many.into_iter()
                .flat_map(|vs| vs.iter().enumerate().map(|(i, v)| (Some(i), v))),
        )
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Schedule<U> {
        match self {
            Schedule::Constant(v) => Schedule::Constant(f(v)),
            Schedule::Varying(vs) => Schedule::Varying(vs.iter().map(f).collect()),
        }
    }

    /// Expands into an explicit list of `len` entries.
    pub fn expand(&self, len: usize) -> Schedule<T>
    where
        T: Clone,
    {
        Schedule::Varying((0..len).map(|k| self.at(k).clone()).collect())
    }
}

impl<T> From<T> for Schedule<T> {
    fn from(v: T) -> Self {
        Schedule::Constant(v)
    }
}
