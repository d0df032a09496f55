use std::ops::{Index, IndexMut};

/// One value per lane.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lanes<T>(Vec<T>);

impl<T> Lanes<T> {
    pub fn from_fn(lanes: usize, f: impl FnMut(usize) -> T) -> Self {
        Lanes((0..lanes).map(f).collect())
    }

    pub fn from_vec(v: Vec<T>) -> Self {
        Lanes(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Lanes<U> {
        Lanes(self.0.iter().map(f).collect())
    }
}

impl<T: Clone> Lanes<T> {
    pub fn splat(lanes: usize, v: T) -> Self {
        Lanes(vec![v; lanes])
    }
}

impl<T> Index<usize> for Lanes<T> {
    type Output = T;

    #[inline]
    fn index(&self, lane: usize) -> &T {
        &self.0[lane]
    }
}

impl<T> IndexMut<usize> for Lanes<T> {
    #[inline]
    fn index_mut(&mut self, lane: usize) -> &mut T {
        &mut self.0[lane]
    }
}

impl<'a, T> IntoIterator for &'a Lanes<T> {
    type Item = &'a T;
    type IntoIter = std::slice::Iter<'a, T>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}
