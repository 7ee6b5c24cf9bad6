//! Quadtrees and octrees over face centroids.
//!
//! Each node owns a contiguous range of a global permutation of the faces,
//! so every node's index set is `perm[range]` and sibling ranges partition
//! their parent's range.

use std::ops::Range;

use crate::mesh::TriangleMesh;
use crate::Vec3;

pub const DEFAULT_MIN_LEAF: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TreeKind {
    Quad,
    Oct,
}

impl TreeKind {
    pub fn arity(&self) -> usize {
        match self {
            TreeKind::Quad => 4,
            TreeKind::Oct => 8,
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            TreeKind::Quad => 0,
            TreeKind::Oct => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(TreeKind::Quad),
            1 => Some(TreeKind::Oct),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub range: Range<usize>,
    pub children: Vec<usize>,
    /// Bounds of the node's centroids.
    pub lo: Vec3,
    pub hi: Vec3,
    pub depth: usize,
}

impl TreeNode {
    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SpatialTree {
    kind: TreeKind,
    perm: Vec<usize>,
    nodes: Vec<TreeNode>,
    max_depth: usize,
}

impl SpatialTree {
    pub fn build(mesh: &TriangleMesh, kind: TreeKind, max_depth: usize, min_leaf: usize) -> Self {
        Self::from_points(mesh.centroids(), kind, max_depth, min_leaf)
    }

    /// Splits every node at the midpoint of its points' extents until
    /// `max_depth` is reached or a node holds at most `min_leaf` points.
    /// Coordinates equal to the midpoint go to the upper half.
    pub fn from_points(points: &[Vec3], kind: TreeKind, max_depth: usize, min_leaf: usize) -> Self {
        assert!(max_depth >= 1, "max_depth must be at least 1");
        let mut tree = Self {
            kind,
            perm: (0..points.len()).collect(),
            nodes: Vec::new(),
            max_depth,
        };
        tree.split(points, 0..points.len(), 0, min_leaf);
        tree
    }

    fn split(&mut self, points: &[Vec3], range: Range<usize>, depth: usize, min_leaf: usize) -> usize {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for &p in &self.perm[range.clone()] {
            lo = lo.inf(&points[p]);
            hi = hi.sup(&points[p]);
        }
        let index = self.nodes.len();
        self.nodes.push(TreeNode {
            range: range.clone(),
            children: Vec::new(),
            lo,
            hi,
            depth,
        });
        if depth >= self.max_depth || range.len() <= min_leaf {
            return index;
        }
        let mid = (lo + hi) / 2.0;
        let dims = match self.kind {
            TreeKind::Quad => 2,
            TreeKind::Oct => 3,
        };
        let child_of = |p: &Vec3| (0..dims).fold(0, |code, a| (code << 1) | (p[a] >= mid[a]) as usize);
        let slice = &mut self.perm[range.clone()];
        slice.sort_by_key(|&p| child_of(&points[p]));
        let mut start = range.start;
        let mut children = Vec::new();
        for code in 0..self.kind.arity() {
            let len = self.perm[start..range.end]
                .iter()
                .take_while(|&&p| child_of(&points[p]) == code)
                .count();
            if len > 0 {
                children.push(self.split(points, start..start + len, depth + 1, min_leaf));
                start += len;
            }
        }
        self.nodes[index].children = children;
        index
    }

    pub fn kind(&self) -> TreeKind {
        self.kind
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// Global permutation: position `k` in tree order holds face `perm[k]`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Face ids of a node.
    pub fn indices(&self, node: usize) -> &[usize] {
        &self.perm[self.nodes[node].range.clone()]
    }

    /// Node ids at the given depth.
    pub fn level(&self, depth: usize) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].depth == depth)
            .collect()
    }
}
