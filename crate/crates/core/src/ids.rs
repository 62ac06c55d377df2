//! Dense integer identifiers.
//!
//! Entities, base relations and types are numbered in first-seen order while
//! loading. A graph with `|R|` base relations has `2|R|` edge labels: label
//! `r` is the forward direction of relation `r`, label `r + |R|` its inverse.

use std::fmt;

use smallvec::SmallVec;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId(pub u32);

/// A base relation as it appears in the triple files.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationId(pub u32);

/// A traversable relation: either a base relation or its inverse.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeLabel(pub u32);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeId(pub u32);

/// A relation path `[r1, r2, ...]` over edge labels.
pub type RelationPath = SmallVec<[EdgeLabel; 6]>;

impl EntityId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Forward edge label of this relation.
    #[inline]
    pub fn forward(self) -> EdgeLabel {
        EdgeLabel(self.0)
    }

    #[inline]
    pub fn backward(self, relation_count: usize) -> EdgeLabel {
        EdgeLabel(self.0 + relation_count as u32)
    }
}

impl EdgeLabel {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn inverse(self, relation_count: usize) -> EdgeLabel {
        let r = relation_count as u32;
        if self.0 < r {
            EdgeLabel(self.0 + r)
        } else {
            EdgeLabel(self.0 - r)
        }
    }

    #[inline]
    pub fn is_inverse(self, relation_count: usize) -> bool {
        self.0 as usize >= relation_count
    }

    /// The base relation this label traverses, in either direction.
    #[inline]
    pub fn base(self, relation_count: usize) -> RelationId {
        RelationId(self.0 % relation_count as u32)
    }
}

impl TypeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for TypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
