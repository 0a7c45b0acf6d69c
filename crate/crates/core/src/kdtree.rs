//! Small kd-tree over fixed-dimension points, used for nearest-neighbor
//! metric evaluation (3D) and for lateral radius queries when smoothing
//! point-cloud z-values (2D).

/// Balanced kd-tree storing indices into the caller's point list.
pub struct KdTree<const K: usize> {
    points: Vec<[f64; K]>,
    /// node order: a flattened balanced tree over sorted index slices
    nodes: Vec<Node>,
    root: Option<usize>,
}

struct Node {
    index: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

impl<const K: usize> KdTree<K> {
    pub fn build(points: Vec<[f64; K]>) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::with_capacity(points.len());
        let root = Self::build_rec(&points, &mut order[..], 0, &mut nodes);
        Self { points, nodes, root }
    }

    fn build_rec(
        points: &[[f64; K]],
        order: &mut [usize],
        depth: usize,
        nodes: &mut Vec<Node>,
    ) -> Option<usize> {
        if order.is_empty() {
            return None;
        }
        let axis = depth % K;
        order.sort_by(|&a, &b| {
            points[a][axis]
                .partial_cmp(&points[b][axis])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mid = order.len() / 2;
        let index = order[mid];
        let slot = nodes.len();
        nodes.push(Node {
            index,
            axis,
            left: None,
            right: None,
        });
        let (lo, rest) = order.split_at_mut(mid);
        let hi = &mut rest[1..];
        let left = Self::build_rec(points, lo, depth + 1, nodes);
        let right = Self::build_rec(points, hi, depth + 1, nodes);
        nodes[slot].left = left;
        nodes[slot].right = right;
        Some(slot)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index and squared distance of the nearest stored point.
    pub fn nearest(&self, query: &[f64; K]) -> Option<(usize, f64)> {
        let root = self.root?;
        let mut best = (self.nodes[root].index, f64::INFINITY);
        self.nearest_rec(root, query, &mut best);
        Some(best)
    }

    fn nearest_rec(&self, node_id: usize, query: &[f64; K], best: &mut (usize, f64)) {
        let node = &self.nodes[node_id];
        let d2 = dist2(&self.points[node.index], query);
        if d2 < best.1 || (d2 == best.1 && node.index < best.0) {
            *best = (node.index, d2);
        }
        let delta = query[node.axis] - self.points[node.index][node.axis];
        let (near, far) = if delta <= 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        if let Some(n) = near {
            self.nearest_rec(n, query, best);
        }
        if delta * delta <= best.1 {
            if let Some(f) = far {
                self.nearest_rec(f, query, best);
            }
        }
    }

    /// Indices of all points within `radius` of the query, in ascending
    /// index order.
    pub fn within_radius(&self, query: &[f64; K], radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if let Some(root) = self.root {
            self.radius_rec(root, query, radius * radius, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn radius_rec(&self, node_id: usize, query: &[f64; K], r2: f64, out: &mut Vec<usize>) {
        let node = &self.nodes[node_id];
        if dist2(&self.points[node.index], query) <= r2 {
            out.push(node.index);
        }
        let delta = query[node.axis] - self.points[node.index][node.axis];
        let (near, far) = if delta <= 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        if let Some(n) = near {
            self.radius_rec(n, query, r2, out);
        }
        if delta * delta <= r2 {
            if let Some(f) = far {
                self.radius_rec(f, query, r2, out);
            }
        }
    }
}

#[inline]
fn dist2<const K: usize>(a: &[f64; K], b: &[f64; K]) -> f64 {
    let mut s = 0.0;
    for i in 0..K {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}
