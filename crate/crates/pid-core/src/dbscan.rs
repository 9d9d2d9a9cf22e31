//! Minimal DBSCAN over 2D points. `min_pts` counts the point itself, so
//! `min_pts = 2` clusters any pair within `eps`. Returns one label per
//! point; `-1` marks noise. O(n^2), which is fine at sheet scale.

pub fn dbscan(points: &[(f64, f64)], eps: f64, min_pts: usize) -> Vec<i32> {
    let n = points.len();
    let mut labels = vec![i32::MIN; n]; // MIN = unvisited, -1 = noise
    let eps2 = eps * eps;
    let neighbors = |i: usize| -> Vec<usize> {
        (0..n)
            .filter(|&j| {
                let dx = points[i].0 - points[j].0;
                let dy = points[i].1 - points[j].1;
                dx * dx + dy * dy <= eps2
            })
            .collect()
    };
    let mut cluster = 0i32;
    for i in 0..n {
        if labels[i] != i32::MIN {
            continue;
        }
        let nb = neighbors(i);
        if nb.len() < min_pts {
            labels[i] = -1;
            continue;
        }
        labels[i] = cluster;
        let mut queue: Vec<usize> = nb;
        let mut qi = 0;
        while qi < queue.len() {
            let j = queue[qi];
            qi += 1;
            if labels[j] == -1 {
                labels[j] = cluster; // border point
            }
            if labels[j] != i32::MIN {
                continue;
            }
            labels[j] = cluster;
            let nb2 = neighbors(j);
            if nb2.len() >= min_pts {
                queue.extend(nb2);
            }
        }
        cluster += 1;
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_clusters_with_min_pts_two() {
        let pts = [(0.0, 0.0), (3.0, 0.0), (100.0, 0.0)];
        let labels = dbscan(&pts, 5.0, 2);
        assert_eq!(labels[0], labels[1]);
        assert_eq!(labels[2], -1);
    }

    #[test]
    fn chain_forms_single_cluster() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64 * 4.0, 0.0)).collect();
        let labels = dbscan(&pts, 5.0, 2);
        assert!(labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn empty_input() {
        assert!(dbscan(&[], 1.0, 2).is_empty());
    }
}
