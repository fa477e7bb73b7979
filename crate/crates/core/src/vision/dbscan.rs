//! Density clustering of feature points into bounding boxes.

use serde::{Deserialize, Serialize};

/// Inclusive axis-aligned pixel box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: u16,
    pub y0: u16,
    pub x1: u16,
    pub y1: u16,
}

impl BBox {
    pub fn contains(&self, x: u16, y: u16) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    pub fn area(&self) -> u64 {
        (self.x1 - self.x0 + 1) as u64 * (self.y1 - self.y0 + 1) as u64
    }
}

fn neighbors(points: &[(u16, u16)], i: usize, eps2: f64) -> Vec<usize> {
    let (xi, yi) = (points[i].0 as f64, points[i].1 as f64);
    (0..points.len())
        .filter(|&j| {
            let (dx, dy) = (points[j].0 as f64 - xi, points[j].1 as f64 - yi);
            dx * dx + dy * dy <= eps2
        })
        .collect()
}

/// DBSCAN labels: `Some(cluster)` or `None` for noise. A point is core when at least
/// `min_pts` points, itself included, lie within Euclidean `eps`.
pub fn dbscan(points: &[(u16, u16)], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let eps2 = eps * eps;
    let mut labels: Vec<Option<usize>> = vec![None; points.len()];
    let mut visited = vec![false; points.len()];
    let mut next = 0;
    for i in 0..points.len() {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        let seeds = neighbors(points, i, eps2);
        if seeds.len() < min_pts {
            continue;
        }
        let cluster = next;
        next += 1;
        labels[i] = Some(cluster);
        let mut queue = seeds;
        while let Some(j) = queue.pop() {
            if labels[j].is_none() {
                labels[j] = Some(cluster);
            }
            if visited[j] {
                continue;
            }
            visited[j] = true;
            let reach = neighbors(points, j, eps2);
            if reach.len() >= min_pts {
                queue.extend(reach);
            }
        }
    }
    labels
}

/// Bounding boxes of DBSCAN clusters, ordered by cluster discovery.
pub fn cluster_features(points: &[(u16, u16)], eps: f64, min_pts: usize) -> Vec<BBox> {
    let labels = dbscan(points, eps, min_pts);
    let count = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let mut boxes: Vec<Option<BBox>> = vec![None; count];
    for (&(x, y), label) in points.iter().zip(&labels) {
        if let Some(c) = label {
            let b = boxes[*c].get_or_insert(BBox { x0: x, y0: y, x1: x, y1: y });
            b.x0 = b.x0.min(x);
            b.y0 = b.y0.min(y);
            b.x1 = b.x1.max(x);
            b.y1 = b.y1.max(y);
        }
    }
    boxes.into_iter().flatten().collect()
}
