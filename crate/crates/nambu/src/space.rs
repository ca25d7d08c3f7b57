//! Phase-space descriptions: named coordinates plus optional canonical pairing.

use crate::error::{Error, Result};

/// A finite-dimensional phase space with named coordinates, optionally
/// organized into canonical (q, p) pairs.
///
/// Canonical structure is what Poisson brackets and canonical flows consume.
/// Two layouts cover every system shipped here:
///
/// * interleaved `(q1, p1, q2, p2, ...)` — each even index is a q paired with
///   the following odd index;
/// * split `(q1, ..., qn, p1, ..., pn)` — coordinate `i` pairs with `i + n`.
///
/// A space built with [`PhaseSpace::new`] carries no canonical structure and
/// supports Jacobian-determinant brackets only.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpace {
    names: Vec<String>,
    pairs: Vec<(usize, usize)>,
}

impl PhaseSpace {
    /// A space with no canonical pairing.
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        Self::build(names, Vec::new())
    }

    /// A canonical space laid out `(q1, p1, q2, p2, ...)`.
    pub fn canonical_interleaved<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        if !names.len().is_multiple_of(2) || names.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "canonical space needs a positive even dimension, got {}",
                names.len()
            )));
        }
        let pairs = (0..names.len() / 2).map(|i| (2 * i, 2 * i + 1)).collect();
        Self::build(names, pairs)
    }

    /// A canonical space laid out `(q1, ..., qn, p1, ..., pn)`.
    pub fn canonical_split<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        if !names.len().is_multiple_of(2) || names.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "canonical space needs a positive even dimension, got {}",
                names.len()
            )));
        }
        let n = names.len() / 2;
        let pairs = (0..n).map(|i| (i, i + n)).collect();
        Self::build(names, pairs)
    }

    fn build<S: AsRef<str>>(names: &[S], pairs: Vec<(usize, usize)>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidArgument(
                "phase space needs at least one coordinate".into(),
            ));
        }
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "coordinate {i} has an empty name"
                )));
            }
            if names[..i].contains(n) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate coordinate name `{n}`"
                )));
            }
        }
        Ok(PhaseSpace { names, pairs })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Canonical (q, p) index pairs, or `None` for a space without canonical
    /// structure.
    pub fn canonical_pairs(&self) -> Option<&[(usize, usize)]> {
        if self.pairs.is_empty() {
            None
        } else {
            Some(&self.pairs)
        }
    }

    pub fn is_canonical(&self) -> bool {
        !self.pairs.is_empty()
    }

    /// Errors unless `x` has exactly this space's dimension.
    pub fn check_state(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}
