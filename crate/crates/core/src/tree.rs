//! Rooted ordered (plane) trees in canonical preorder-outdegree form.
//!
//! A tree with `n` vertices is stored as the outdegrees `(d_1, ..., d_n)` of its
//! vertices in depth-first preorder. The encoding is canonical, so equality and
//! ordering are plain sequence comparison.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct PlaneTree {
    code: Vec<usize>,
}

impl PlaneTree {
    /// Validates a preorder outdegree sequence.
    pub fn from_code(code: Vec<usize>) -> Result<Self> {
        if code.is_empty() {
            return Err(Error::InvalidCode { code, reason: "empty code" });
        }
        // open child slots still waiting for a vertex
        let mut slots: usize = 1;
        for (i, &d) in code.iter().enumerate() {
            if slots == 0 {
                return Err(Error::InvalidCode {
                    code,
                    reason: "prefix closes the tree before the last vertex",
                });
            }
            slots = slots - 1 + d;
            if slots > code.len() - i - 1 {
                return Err(Error::InvalidCode {
                    code,
                    reason: "more children announced than vertices remain",
                });
            }
        }
        debug_assert_eq!(slots, 0);
        Ok(Self { code })
    }

    pub fn single() -> Self {
        Self { code: vec![0] }
    }

    /// The path with `n` vertices.
    pub fn path(n: usize) -> Self {
        assert!(n >= 1);
        let mut code = vec![1; n];
        code[n - 1] = 0;
        Self { code }
    }

    pub fn code(&self) -> &[usize] {
        &self.code
    }

    pub fn size(&self) -> usize {
        self.code.len()
    }

    pub fn max_outdegree(&self) -> usize {
        self.code.iter().copied().max().unwrap_or(0)
    }

    /// Parent index of every vertex (preorder indices); the root maps to `None`.
    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut parents = Vec::with_capacity(self.size());
        // (vertex, children still to be visited)
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for (i, &d) in self.code.iter().enumerate() {
            parents.push(stack.last().map(|&(p, _)| p));
            if let Some(top) = stack.last_mut() {
                top.1 -= 1;
            }
            stack.push((i, d));
            while matches!(stack.last(), Some(&(_, 0))) {
                stack.pop();
            }
        }
        parents
    }

    pub fn depths(&self) -> Vec<usize> {
        let parents = self.parents();
        let mut depths = vec![0; self.size()];
        for i in 1..self.size() {
            // preorder: the parent always precedes the child
            depths[i] = depths[parents[i].expect("non-root has a parent")] + 1;
        }
        depths
    }

    pub fn height(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0)
    }

    /// Profile `(W_0, ..., W_height)`: number of vertices at each distance from the root.
    pub fn profile(&self) -> Vec<usize> {
        let depths = self.depths();
        let mut w = vec![0; depths.iter().copied().max().unwrap_or(0) + 1];
        for d in depths {
            w[d] += 1;
        }
        w
    }

    /// `W_k`, zero beyond the height.
    pub fn level_width(&self, k: usize) -> usize {
        self.depths().into_iter().filter(|&d| d == k).count()
    }

    fn children(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.size()];
        for (i, p) in self.parents().into_iter().enumerate() {
            if let Some(p) = p {
                children[p].push(i);
            }
        }
        children
    }

    fn from_children(children: &[Vec<usize>], root: usize) -> Self {
        let mut code = Vec::with_capacity(children.len());
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            code.push(children[v].len());
            stack.extend(children[v].iter().rev());
        }
        Self { code }
    }

    /// Builds a tree from outdegrees listed in breadth-first order.
    pub fn from_bfs_degrees(degrees: &[usize]) -> Result<Self> {
        let invalid = |reason| Error::InvalidCode { code: degrees.to_vec(), reason };
        if degrees.is_empty() {
            return Err(invalid("empty code"));
        }
        let mut children = vec![Vec::new(); degrees.len()];
        let mut next = 1;
        for (v, &d) in degrees.iter().enumerate() {
            if v >= next {
                return Err(invalid("breadth-first sequence disconnects"));
            }
            if next + d > degrees.len() {
                return Err(invalid("more children announced than vertices remain"));
            }
            children[v].extend(next..next + d);
            next += d;
        }
        if next != degrees.len() {
            return Err(invalid("outdegrees do not sum to n - 1"));
        }
        Ok(Self::from_children(&children, 0))
    }

    /// Builds a tree from a Dyck path (`true` = step down to a new child,
    /// `false` = step back up). Vertices are created in preorder.
    pub fn from_dyck(steps: &[bool]) -> Result<Self> {
        let mut code = vec![0];
        let mut stack = vec![0];
        for &down in steps {
            if down {
                let parent = *stack.last().expect("root stays on the stack");
                code[parent] += 1;
                stack.push(code.len());
                code.push(0);
            } else {
                stack.pop();
                if stack.is_empty() {
                    return Err(Error::InvalidCode { code, reason: "Dyck path goes below zero" });
                }
            }
        }
        if stack.len() != 1 {
            return Err(Error::InvalidCode { code, reason: "Dyck path does not return to zero" });
        }
        Ok(Self { code })
    }

    /// Every tree obtained by inserting a new leaf into one of the `2n - 1` gaps,
    /// with multiplicity, in (vertex, position) order.
    pub fn gap_insertions(&self) -> Vec<PlaneTree> {
        self.gap_insertions_filtered(None)
    }

    fn gap_insertions_filtered(&self, dmax: Option<usize>) -> Vec<PlaneTree> {
        let children = self.children();
        let fresh = self.size();
        let mut out = Vec::with_capacity(2 * self.size() - 1);
        for (v, kids) in children.iter().enumerate() {
            if dmax.is_some_and(|m| kids.len() + 1 > m) {
                continue;
            }
            for pos in 0..=kids.len() {
                let mut grown = children.clone();
                grown[v].insert(pos, fresh);
                grown.push(Vec::new());
                out.push(Self::from_children(&grown, 0));
            }
        }
        out
    }

    /// Distinct trees with one more vertex containing `self` as a leaf-deleted subtree,
    /// restricted to outdegrees `<= dmax`.
    pub fn extensions(&self, dmax: Option<usize>) -> BTreeSet<PlaneTree> {
        self.gap_insertions_filtered(dmax)
            .into_iter()
            .filter(|t| dmax.is_none_or(|m| t.max_outdegree() <= m))
            .collect()
    }

    /// Distinct trees obtained by deleting one leaf.
    pub fn deletions(&self) -> Result<BTreeSet<PlaneTree>> {
        if self.size() < 2 {
            return Err(Error::SingleVertex);
        }
        let parents = self.parents();
        let mut out = BTreeSet::new();
        for (leaf, &d) in self.code.iter().enumerate() {
            if d != 0 || leaf == 0 {
                continue;
            }
            let parent = parents[leaf].expect("leaf of a tree with >= 2 vertices has a parent");
            let mut code = self.code.clone();
            code[parent] -= 1;
            code.remove(leaf);
            out.insert(Self { code });
        }
        Ok(out)
    }
}

impl TryFrom<Vec<usize>> for PlaneTree {
    type Error = Error;

    fn try_from(code: Vec<usize>) -> Result<Self> {
        Self::from_code(code)
    }
}

impl From<PlaneTree> for Vec<usize> {
    fn from(t: PlaneTree) -> Self {
        t.code
    }
}

impl fmt::Debug for PlaneTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PlaneTree{:?}", self.code)
    }
}

impl fmt::Display for PlaneTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, d) in self.code.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}")?;
        }
        f.write_str("]")
    }
}

/// All plane trees with `n` vertices and every outdegree `<= dmax`, in
/// lexicographic order of their codes.
pub fn enumerate(n: usize, dmax: Option<usize>) -> Vec<PlaneTree> {
    enumerate_with(n, |d| dmax.is_none_or(|m| d <= m))
}

/// All plane trees with `n` vertices whose outdegrees all satisfy `allowed`,
/// in lexicographic order. Disallowed outdegrees are pruned during generation.
pub fn enumerate_with(n: usize, allowed: impl Fn(usize) -> bool) -> Vec<PlaneTree> {
    fn grow(
        n: usize,
        slots: usize,
        code: &mut Vec<usize>,
        allowed: &dyn Fn(usize) -> bool,
        out: &mut Vec<PlaneTree>,
    ) {
        let remaining_after = n - code.len() - 1;
        if remaining_after == 0 {
            // last vertex must be a leaf closing the final slot
            if slots == 1 && allowed(0) {
                code.push(0);
                out.push(PlaneTree { code: code.clone() });
                code.pop();
            }
            return;
        }
        // after placing d: slots - 1 + d in [1, remaining_after]
        let lo = 2usize.saturating_sub(slots);
        let hi = remaining_after + 1 - slots;
        for d in lo..=hi {
            if !allowed(d) {
                continue;
            }
            code.push(d);
            grow(n, slots - 1 + d, code, allowed, out);
            code.pop();
        }
    }

    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut code = Vec::with_capacity(n);
    grow(n, 1, &mut code, &allowed, &mut out);
    out
}

/// Leaf-insertion pairs between trees of size `n` and `n + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InsertionRelation {
    pub n: usize,
    pub pairs: BTreeSet<(PlaneTree, PlaneTree)>,
}

impl InsertionRelation {
    pub fn build(n: usize, dmax: Option<usize>) -> Self {
        let pairs = enumerate(n, dmax)
            .into_iter()
            .flat_map(|t| {
                t.extensions(dmax)
                    .into_iter()
                    .map(move |big| (t.clone(), big))
            })
            .collect();
        Self { n, pairs }
    }

    pub fn contains(&self, small: &PlaneTree, big: &PlaneTree) -> bool {
        self.pairs.contains(&(small.clone(), big.clone()))
    }
}
