//! Keypoint selection and reference/distorted pairing.
//!
//! Keypoints are mesh vertices chosen by seeded random sampling or greedy
//! farthest-point sampling. Pairing finds, for each keypoint, the exact
//! Euclidean nearest vertex in both meshes; exactness (not speed) is the
//! contract, and ties always resolve to the smallest vertex index.

use nalgebra::Point3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Keypoints plus their nearest-vertex indices in the two meshes.
#[derive(Debug, Clone)]
pub struct KeypointSet {
    pub keypoints: Vec<Point3<f64>>,
    /// `(reference vertex index, distorted vertex index)` per keypoint.
    pub pairs: Vec<(usize, usize)>,
}

/// Sample `kn` distinct vertex positions uniformly without replacement.
///
/// If `kn >= vertex count`, every vertex is returned in index order.
pub fn sample_random(mesh: &Mesh, kn: usize, seed: u64) -> Result<Vec<Point3<f64>>> {
    check_sampling_inputs(mesh, kn)?;
    if kn >= mesh.vertex_count() {
        return Ok(mesh.vertices.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = rand::seq::index::sample(&mut rng, mesh.vertex_count(), kn);
    Ok(chosen.iter().map(|i| mesh.vertices[i]).collect())
}

/// Greedy farthest-point sampling starting from vertex 0.
///
/// Each step adds the vertex maximizing the minimum distance to the chosen
/// set; ties break to the smallest index, making the order deterministic.
pub fn sample_fps(mesh: &Mesh, kn: usize) -> Result<Vec<Point3<f64>>> {
    check_sampling_inputs(mesh, kn)?;
    let n = mesh.vertex_count();
    let count = kn.min(n);

    let mut chosen = Vec::with_capacity(count);
    let mut min_dist2 = vec![f64::INFINITY; n];
    let mut current = 0usize;
    min_dist2[current] = f64::NEG_INFINITY;
    chosen.push(mesh.vertices[current]);

    for _ in 1..count {
        let p = mesh.vertices[current];
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for (i, d2) in min_dist2.iter_mut().enumerate() {
            let cand = (mesh.vertices[i] - p).norm_squared();
            if cand < *d2 {
                *d2 = cand;
            }
            if *d2 > best.0 {
                best = (*d2, i);
            }
        }
        current = best.1;
        min_dist2[current] = f64::NEG_INFINITY; // never re-selected
        chosen.push(mesh.vertices[current]);
    }
    Ok(chosen)
}

fn check_sampling_inputs(mesh: &Mesh, kn: usize) -> Result<()> {
    if kn == 0 {
        return Err(Error::InvalidParameter("keypoint count must be >= 1".into()));
    }
    if mesh.vertices.is_empty() {
        return Err(Error::InvalidParameter("cannot sample an empty mesh".into()));
    }
    Ok(())
}

/// Pair each keypoint with its exact nearest vertex in both meshes.
pub fn pair_keypoints(
    keypoints: &[Point3<f64>],
    reference: &Mesh,
    distorted: &Mesh,
) -> Result<KeypointSet> {
    if reference.vertices.is_empty() || distorted.vertices.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot pair keypoints against an empty mesh".into(),
        ));
    }
    let ref_tree = KdTree::build(&reference.vertices);
    let dist_tree = KdTree::build(&distorted.vertices);
    let pairs: Vec<(usize, usize)> = keypoints
        .par_iter()
        .map(|k| (ref_tree.nearest(k), dist_tree.nearest(k)))
        .collect();
    Ok(KeypointSet {
        keypoints: keypoints.to_vec(),
        pairs,
    })
}

/// Static k-d tree over vertex positions with exact nearest-neighbor
/// queries. A far subtree is only pruned when its splitting plane is
/// strictly farther than the best hit, so equal-distance candidates are
/// always visited and the smallest-index tie-break is honored.
struct KdTree<'a> {
    points: &'a [Point3<f64>],
    /// Vertex indices permuted into tree order.
    order: Vec<usize>,
    nodes: Vec<KdNode>,
}

#[derive(Debug, Clone, Copy)]
enum KdNode {
    Leaf {
        start: usize,
        len: usize,
    },
    Split {
        axis: usize,
        value: f64,
        /// Index of the right child; the left child is the next node.
        right: usize,
    },
}

const KD_LEAF_SIZE: usize = 16;

impl<'a> KdTree<'a> {
    fn build(points: &'a [Point3<f64>]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::new();
        Self::build_node(points, &mut order, 0, points.len(), &mut nodes);
        KdTree {
            points,
            order,
            nodes,
        }
    }

    fn build_node(
        points: &[Point3<f64>],
        order: &mut [usize],
        start: usize,
        len: usize,
        nodes: &mut Vec<KdNode>,
    ) -> usize {
        let my_index = nodes.len();
        if len <= KD_LEAF_SIZE {
            nodes.push(KdNode::Leaf { start, len });
            return my_index;
        }

        let slice = &mut order[start..start + len];
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for &i in slice.iter() {
            for a in 0..3 {
                min[a] = min[a].min(points[i][a]);
                max[a] = max[a].max(points[i][a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (max[a] - min[a]).total_cmp(&(max[b] - min[b])))
            .unwrap();

        let mid = len / 2;
        slice.select_nth_unstable_by(mid, |&a, &b| {
            points[a][axis]
                .total_cmp(&points[b][axis])
                .then(a.cmp(&b))
        });
        let value = points[slice[mid]][axis];

        nodes.push(KdNode::Split {
            axis,
            value,
            right: 0,
        });
        Self::build_node(points, order, start, mid, nodes);
        let right = Self::build_node(points, order, start + mid, len - mid, nodes);
        if let KdNode::Split { right: slot, .. } = &mut nodes[my_index] {
            *slot = right;
        }
        my_index
    }

    /// Index of the exact nearest vertex to `query` (smallest index on ties).
    fn nearest(&self, query: &Point3<f64>) -> usize {
        let mut best = (f64::INFINITY, usize::MAX);
        self.search(0, query, &mut best);
        best.1
    }

    fn search(&self, node: usize, query: &Point3<f64>, best: &mut (f64, usize)) {
        match self.nodes[node] {
            KdNode::Leaf { start, len } => {
                for &i in &self.order[start..start + len] {
                    let d2 = (self.points[i] - query).norm_squared();
                    if d2 < best.0 || (d2 == best.0 && i < best.1) {
                        *best = (d2, i);
                    }
                }
            }
            KdNode::Split { axis, value, right } => {
                let delta = query[axis] - value;
                let (near, far) = if delta < 0.0 {
                    (node + 1, right)
                } else {
                    (right, node + 1)
                };
                self.search(near, query, best);
                if delta * delta <= best.0 {
                    self.search(far, query, best);
                }
            }
        }
    }
}

/// Brute-force nearest vertex; the oracle the k-d tree is validated against.
pub fn nearest_brute_force(vertices: &[Point3<f64>], query: &Point3<f64>) -> usize {
    let mut best = (f64::INFINITY, usize::MAX);
    for (i, v) in vertices.iter().enumerate() {
        let d2 = (v - query).norm_squared();
        if d2 < best.0 || (d2 == best.0 && i < best.1) {
            best = (d2, i);
        }
    }
    best.1
}
