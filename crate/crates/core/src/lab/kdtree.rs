//! Static k-d tree for k-nearest-neighbour distances in low dimension.

const LEAF_SIZE: usize = 12;

enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

pub struct KdTree<'a> {
    dim: usize,
    points: &'a [f64],
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> KdTree<'a> {
    /// `points` is row-major, `points.len() / dim` rows.
    pub fn new(points: &'a [f64], dim: usize) -> Self {
        assert!(dim > 0 && points.len() % dim == 0);
        let n = points.len() / dim;
        let mut tree = Self {
            dim,
            points,
            order: (0..n).collect(),
            nodes: Vec::new(),
        };
        if n > 0 {
            tree.build(0, n);
        }
        tree
    }

    fn coord(&self, i: usize, d: usize) -> f64 {
        self.points[i * self.dim + d]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let dim = (0..self.dim)
            .map(|d| {
                let (lo, hi) = self.order[start..end].iter().fold((f64::MAX, f64::MIN), |(lo, hi), &i| {
                    let v = self.coord(i, d);
                    (lo.min(v), hi.max(v))
                });
                (d, hi - lo)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(d, _)| d)
            .unwrap_or(0);
        let mid = (start + end) / 2;
        let (points, stride) = (self.points, self.dim);
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a * stride + dim].total_cmp(&points[b * stride + dim])
        });
        let value = self.coord(self.order[mid], dim);
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            dim,
            value,
            left,
            right,
        };
        id
    }

    /// Squared distance from row `query` to its `k`-th nearest other row.
    pub fn kth_neighbor_dist2(&self, query: usize, k: usize) -> f64 {
        let q = &self.points[query * self.dim..(query + 1) * self.dim];
        let mut best: Vec<f64> = Vec::with_capacity(k + 1);
        self.search(0, q, query, k, &mut best);
        best.last().copied().unwrap_or(f64::INFINITY)
    }

    fn search(&self, node: usize, q: &[f64], skip: usize, k: usize, best: &mut Vec<f64>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if i == skip {
                        continue;
                    }
                    let row = &self.points[i * self.dim..(i + 1) * self.dim];
                    let d2: f64 = row.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                    if best.len() < k || d2 < best[k - 1] {
                        let pos = best.partition_point(|&b| b <= d2);
                        best.insert(pos, d2);
                        best.truncate(k);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, skip, k, best);
                if best.len() < k || diff * diff < best[k - 1] {
                    self.search(far, q, skip, k, best);
                }
            }
        }
    }
}
