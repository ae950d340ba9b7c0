//! Built-in skeleton topologies.

use crate::graph::Graph;

/// 20-joint Kinect v1 skeleton (hip centre = 0, spine, shoulder centre,
/// head, left arm 4..=7, right arm 8..=11, left leg 12..=15, right leg 16..=19).
pub const KINECT20_EDGES: [(usize, usize); 19] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (2, 4),
    (4, 5),
    (5, 6),
    (6, 7),
    (2, 8),
    (8, 9),
    (9, 10),
    (10, 11),
    (0, 12),
    (12, 13),
    (13, 14),
    (14, 15),
    (0, 16),
    (16, 17),
    (17, 18),
    (18, 19),
];

pub fn kinect20() -> Graph {
    let edges: Vec<_> = KINECT20_EDGES.iter().map(|&(i, j)| (i, j, 1.0)).collect();
    Graph::from_edges(20, &edges).expect("static skeleton is valid")
}

/// Mirror map swapping left and right limbs; an automorphism of [`kinect20`].
pub fn kinect20_mirror() -> Vec<usize> {
    let mut p: Vec<usize> = (0..20).collect();
    for k in 0..4 {
        p.swap(4 + k, 8 + k);
        p.swap(12 + k, 16 + k);
    }
    p
}
