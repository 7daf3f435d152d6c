//! Dense hidden-by-visible connection masks.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which `W_j^k` entries may be non-zero, stored row-major `F × K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectionMask {
    n_hidden: usize,
    n_visible: usize,
    keep: Vec<bool>,
}

impl ConnectionMask {
    pub fn full(n_hidden: usize, n_visible: usize) -> Self {
        ConnectionMask {
            n_hidden,
            n_visible,
            keep: vec![true; n_hidden * n_visible],
        }
    }

    pub fn from_pairs(n_hidden: usize, n_visible: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut keep = vec![false; n_hidden * n_visible];
        for &(j, k) in pairs {
            if j >= n_hidden || k >= n_visible {
                return Err(Error::Structure(format!("mask pair ({j}, {k}) out of range")));
            }
            keep[j * n_visible + k] = true;
        }
        Ok(ConnectionMask {
            n_hidden,
            n_visible,
            keep,
        })
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn n_visible(&self) -> usize {
        self.n_visible
    }

    #[inline]
    pub fn is_kept(&self, j: usize, k: usize) -> bool {
        self.keep[j * self.n_visible + k]
    }

    pub fn set(&mut self, j: usize, k: usize, keep: bool) {
        self.keep[j * self.n_visible + k] = keep;
    }

    /// Surviving connections of hidden unit `j`.
    pub fn unit_count(&self, j: usize) -> usize {
        self.row(j).iter().filter(|&&b| b).count()
    }

    pub fn row(&self, j: usize) -> &[bool] {
        &self.keep[j * self.n_visible..(j + 1) * self.n_visible]
    }

    pub fn total(&self) -> usize {
        self.keep.iter().filter(|&&b| b).count()
    }

    /// Kept `(j, k)` pairs in row-major order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.keep
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| (i / self.n_visible, i % self.n_visible))
            .collect()
    }

    /// Zero every masked entry of a row-major `F × K` matrix.
    pub fn apply<T: Scalar>(&self, weights: &mut [T]) {
        debug_assert_eq!(weights.len(), self.keep.len());
        for (w, &k) in weights.iter_mut().zip(&self.keep) {
            if !k {
                *w = T::zero();
            }
        }
    }
}
