//! Exact kd-tree over a flat row-major point buffer.
//!
//! Radius queries return exactly the brute-force set `{j : |p_j - q|^2 <= r^2}`;
//! the tree only prunes nodes whose bounding box is provably outside.

use crate::model::squared_distance;

const LEAF_SIZE: usize = 24;

#[derive(Debug, Clone)]
struct Node {
    start: usize,
    end: usize,
    /// Child node indices; `None` for leaves.
    children: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct KdTree<'a> {
    dim: usize,
    points: &'a [f64],
    order: Vec<usize>,
    /// Rows copied in `order`, so leaf scans read contiguous memory.
    packed: Vec<f64>,
    nodes: Vec<Node>,
    /// Per node: `dim` mins then `dim` maxs.
    boxes: Vec<f64>,
}

impl<'a> KdTree<'a> {
    pub fn new(points: &'a [f64], dim: usize) -> Self {
        assert!(dim > 0 && points.len() % dim == 0);
        let n = points.len() / dim;
        let mut tree = Self {
            dim,
            points,
            order: (0..n).collect(),
            packed: Vec::new(),
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1),
            boxes: Vec::new(),
        };
        if n > 0 {
            tree.build(0, n);
        }
        tree.packed = tree.order.iter().flat_map(|&i| &points[i * dim..(i + 1) * dim]).copied().collect();
        tree
    }

    /// Row at tree position `pos`.
    #[inline]
    fn packed_row(&self, pos: usize) -> &[f64] {
        &self.packed[pos * self.dim..(pos + 1) * self.dim]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let dim = self.dim;
        let id = self.nodes.len();
        self.nodes.push(Node {
            start,
            end,
            children: None,
        });
        let base = self.boxes.len();
        self.boxes.extend(std::iter::repeat_n(f64::INFINITY, dim));
        self.boxes.extend(std::iter::repeat_n(f64::NEG_INFINITY, dim));
        for &i in &self.order[start..end] {
            let p = &self.points[i * dim..(i + 1) * dim];
            for j in 0..dim {
                self.boxes[base + j] = self.boxes[base + j].min(p[j]);
                self.boxes[base + dim + j] = self.boxes[base + dim + j].max(p[j]);
            }
        }
        if end - start <= LEAF_SIZE {
            return id;
        }
        let (split, extent) = (0..dim)
            .map(|j| (j, self.boxes[base + dim + j] - self.boxes[base + j]))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if extent <= 0.0 {
            return id;
        }
        let mid = start + (end - start) / 2;
        let points = self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a * dim + split].total_cmp(&points[b * dim + split])
        });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id].children = Some((left, right));
        id
    }

    #[inline]
    fn box_distance_sq(&self, node: usize, q: &[f64]) -> f64 {
        self.box_distance_sq_capped(node, q, f64::INFINITY)
    }

    /// Box distance, or any value above `cap` once the partial sum exceeds it.
    #[inline]
    fn box_distance_sq_capped(&self, node: usize, q: &[f64], cap: f64) -> f64 {
        let base = node * 2 * self.dim;
        let mut acc = 0.0;
        for j in 0..self.dim {
            let lo = self.boxes[base + j];
            let hi = self.boxes[base + self.dim + j];
            let x = q[j];
            let gap = if x < lo {
                lo - x
            } else if x > hi {
                x - hi
            } else {
                0.0
            };
            acc += gap * gap;
            if acc > cap {
                return acc;
            }
        }
        acc
    }

    /// Calls `visit(index, squared_distance)` for every point within `radius` of `q`.
    pub fn for_each_within<F: FnMut(usize, f64)>(&self, q: &[f64], radius: f64, mut visit: F) {
        if self.nodes.is_empty() {
            return;
        }
        let r2 = radius * radius;
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            if self.box_distance_sq_capped(node, q, r2) > r2 {
                continue;
            }
            let n = &self.nodes[node];
            match n.children {
                Some((l, r)) => {
                    stack.push(l);
                    stack.push(r);
                }
                None => {
                    for pos in n.start..n.end {
                        let d2 = squared_distance(self.packed_row(pos), q);
                        if d2 <= r2 {
                            visit(self.order[pos], d2);
                        }
                    }
                }
            }
        }
    }

    /// Nearest point to `q` other than `exclude`, as `(index, squared_distance)`.
    pub fn nearest_excluding(&self, q: &[f64], exclude: Option<usize>) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        let mut stack = vec![(0usize, 0.0f64)];
        while let Some((node, bound)) = stack.pop() {
            if best.is_some_and(|(_, b)| bound > b) {
                continue;
            }
            let n = &self.nodes[node];
            match n.children {
                Some((l, r)) => {
                    let dl = self.box_distance_sq(l, q);
                    let dr = self.box_distance_sq(r, q);
                    // Push the farther child first so the nearer one is explored first.
                    if dl <= dr {
                        stack.push((r, dr));
                        stack.push((l, dl));
                    } else {
                        stack.push((l, dl));
                        stack.push((r, dr));
                    }
                }
                None => {
                    for pos in n.start..n.end {
                        let i = self.order[pos];
                        if Some(i) == exclude {
                            continue;
                        }
                        let d2 = squared_distance(self.packed_row(pos), q);
                        let better = match best {
                            None => true,
                            Some((bi, bd)) => d2 < bd || (d2 == bd && i < bi),
                        };
                        if better {
                            best = Some((i, d2));
                        }
                    }
                }
            }
        }
        best
    }
}
