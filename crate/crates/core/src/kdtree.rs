//! Exact k-d tree for the all-points nearest-neighbor query.
//!
//! Splits on the coordinate of widest spread at the median, stops at
//! [`LEAF_SIZE`] points, and prunes with the per-axis gap between the query
//! and each node's bounding box. The gap bound holds for both norms, and it
//! never exceeds the rounded distance to any point in the box, so the result
//! is bit-identical to brute force.

use crate::geometry::{distance_unchecked, NormKind};
use crate::nn::SampleSet;

pub const LEAF_SIZE: usize = 16;

const NO_CHILD: usize = usize::MAX;

struct Node {
    start: usize,
    end: usize,
    left: usize,
    right: usize,
}

pub struct KdTree {
    dim: usize,
    norm: NormKind,
    /// Points in tree order, row-major.
    points: Vec<f64>,
    /// Original row index of each point in tree order.
    ids: Vec<usize>,
    nodes: Vec<Node>,
    /// Per node: `dim` lower corners then `dim` upper corners.
    bounds: Vec<f64>,
}

impl KdTree {
    pub fn build(s: &SampleSet) -> Self {
        let dim = s.dim();
        let mut order: Vec<usize> = (0..s.len()).collect();
        let mut tree = KdTree {
            dim,
            norm: s.norm(),
            points: Vec::new(),
            ids: Vec::new(),
            nodes: Vec::new(),
            bounds: Vec::new(),
        };
        if !order.is_empty() {
            tree.build_node(s, &mut order, 0);
        }
        tree.points = Vec::with_capacity(s.data().len());
        for &i in &order {
            tree.points.extend_from_slice(s.row(i));
        }
        tree.ids = order;
        tree
    }

    fn build_node(&mut self, s: &SampleSet, order: &mut [usize], offset: usize) -> usize {
        let dim = self.dim;
        let id = self.nodes.len();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in order.iter() {
            for (k, &c) in s.row(i).iter().enumerate() {
                lo[k] = lo[k].min(c);
                hi[k] = hi[k].max(c);
            }
        }
        self.bounds.extend_from_slice(&lo);
        self.bounds.extend_from_slice(&hi);
        self.nodes.push(Node {
            start: offset,
            end: offset + order.len(),
            left: NO_CHILD,
            right: NO_CHILD,
        });
        if order.len() <= LEAF_SIZE {
            return id;
        }
        let axis = (0..dim)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        if hi[axis] <= lo[axis] {
            // all points coincide; nothing to split on
            return id;
        }
        let mid = order.len() / 2;
        order.select_nth_unstable_by(mid, |&a, &b| s.row(a)[axis].total_cmp(&s.row(b)[axis]));
        let (left_part, right_part) = order.split_at_mut(mid);
        let left = self.build_node(s, left_part, offset);
        let right = self.build_node(s, right_part, offset + mid);
        self.nodes[id].left = left;
        self.nodes[id].right = right;
        id
    }

    /// Lower bound on the distance from `q` to any point in node `node`.
    #[inline]
    fn box_gap(&self, node: usize, q: &[f64]) -> f64 {
        let base = node * 2 * self.dim;
        let lo = &self.bounds[base..base + self.dim];
        let hi = &self.bounds[base + self.dim..base + 2 * self.dim];
        match self.norm {
            NormKind::Euclidean => {
                let mut acc = 0.0;
                for k in 0..self.dim {
                    let g = gap(q[k], lo[k], hi[k]);
                    acc += g * g;
                }
                acc.sqrt()
            }
            NormKind::Chebyshev => {
                let mut m: f64 = 0.0;
                for k in 0..self.dim {
                    m = m.max(gap(q[k], lo[k], hi[k]));
                }
                m
            }
        }
    }

    /// Distance from `q` to its nearest tree point other than row `exclude`.
    pub fn nearest_excluding(&self, q: &[f64], exclude: usize) -> f64 {
        let mut best = f64::INFINITY;
        if !self.nodes.is_empty() {
            self.search(0, q, exclude, &mut best);
        }
        best
    }

    fn search(&self, node: usize, q: &[f64], exclude: usize, best: &mut f64) {
        let n = &self.nodes[node];
        if n.left == NO_CHILD {
            for slot in n.start..n.end {
                if self.ids[slot] == exclude {
                    continue;
                }
                let p = &self.points[slot * self.dim..(slot + 1) * self.dim];
                let dist = distance_unchecked(q, p, self.norm);
                if dist < *best {
                    *best = dist;
                }
            }
            return;
        }
        let gl = self.box_gap(n.left, q);
        let gr = self.box_gap(n.right, q);
        let (first, g1, second, g2) = if gl <= gr {
            (n.left, gl, n.right, gr)
        } else {
            (n.right, gr, n.left, gl)
        };
        if g1 <= *best {
            self.search(first, q, exclude, best);
        }
        if g2 <= *best {
            self.search(second, q, exclude, best);
        }
    }
}

#[inline]
fn gap(q: f64, lo: f64, hi: f64) -> f64 {
    if q < lo {
        lo - q
    } else if q > hi {
        q - hi
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_coincident_points_do_not_recurse_forever() {
        let s = SampleSet::new(vec![1.5; 3 * 200], 3, NormKind::Euclidean).unwrap();
        let tree = KdTree::build(&s);
        assert_eq!(tree.nearest_excluding(s.row(7), 7), 0.0);
    }

    #[test]
    fn box_gap_never_exceeds_true_distance() {
        let data: Vec<f64> = (0..400)
            .map(|i| ((i * 7919) % 401) as f64 / 37.0 - 5.0)
            .collect();
        for norm in [NormKind::Euclidean, NormKind::Chebyshev] {
            let s = SampleSet::new(data.clone(), 4, norm).unwrap();
            let tree = KdTree::build(&s);
            let q = [0.3, -1.2, 2.5, 0.0];
            for node in 0..tree.nodes.len() {
                let g = tree.box_gap(node, &q);
                let n = &tree.nodes[node];
                for slot in n.start..n.end {
                    let p = &tree.points[slot * 4..(slot + 1) * 4];
                    assert!(g <= distance_unchecked(&q, p, norm));
                }
            }
        }
    }
}
