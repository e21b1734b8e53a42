use crate::topology::{cpa_metrics, heading_delta, VesselState};

/// Single-linkage merge thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterThresholds {
    pub tcpa_s: f64,
    pub dcpa_m: f64,
    pub bearing_deg: f64,
}

impl Default for ClusterThresholds {
    fn default() -> Self {
        Self {
            tcpa_s: 30.0,
            dcpa_m: 20.0,
            bearing_deg: 30.0,
        }
    }
}

/// Partition of obstacles into clusters of similar encounter geometry.
///
/// Clusters hold indices into the obstacle slice they were built from,
/// sorted by obstacle id; clusters are ordered by their smallest id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusterSet {
    pub clusters: Vec<Vec<usize>>,
}

impl ClusterSet {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Every obstacle in its own cluster.
    pub fn singletons(n: usize, obstacles: &[VesselState]) -> Self {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by_key(|&i| obstacles[i].id);
        Self {
            clusters: idx.into_iter().map(|i| vec![i]).collect(),
        }
    }

    pub fn ids(&self, obstacles: &[VesselState]) -> Vec<Vec<u32>> {
        self.clusters
            .iter()
            .map(|c| c.iter().map(|&i| obstacles[i].id).collect())
            .collect()
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Groups obstacles whose TCPA, DCPA and relative bearing with respect to the
/// ego are pairwise within the thresholds, closing transitively.
pub fn cluster_obstacles(obstacles: &[VesselState], ego: &VesselState, th: &ClusterThresholds) -> ClusterSet {
    let n = obstacles.len();
    let cpa: Vec<_> = obstacles.iter().map(|o| cpa_metrics(ego, o)).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            let close = (cpa[i].tcpa - cpa[j].tcpa).abs() <= th.tcpa_s
                && (cpa[i].dcpa - cpa[j].dcpa).abs() <= th.dcpa_m
                && heading_delta(cpa[i].rel_bearing_deg, cpa[j].rel_bearing_deg).abs() <= th.bearing_deg;
            if close {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut clusters: Vec<Vec<usize>> = groups
        .into_values()
        .map(|mut c| {
            c.sort_by_key(|&i| (obstacles[i].id, i));
            c
        })
        .collect();
    clusters.sort_by_key(|c| (obstacles[c[0]].id, c[0]));
    ClusterSet { clusters }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec2;

    fn ego() -> VesselState {
        VesselState::new(0, 0.0, Vec2::zeros(), 0.0, 2.0)
    }

    #[test]
    fn empty() {
        assert!(cluster_obstacles(&[], &ego(), &ClusterThresholds::default()).is_empty());
    }

    #[test]
    fn opposite_sides_stay_apart() {
        let a = VesselState::new(1, 0.0, Vec2::new(50.0, 40.0), 270.0, 1.0);
        let b = VesselState::new(2, 0.0, Vec2::new(-50.0, 40.0), 90.0, 1.0);
        let c = cluster_obstacles(&[a, b], &ego(), &ClusterThresholds::default());
        assert_eq!(c.clusters, vec![vec![0], vec![1]]);
    }

    #[test]
    fn abeam_pair_merges() {
        let a = VesselState::new(5, 0.0, Vec2::new(40.0, 50.0), 270.0, 1.5);
        let b = VesselState::new(3, 0.0, Vec2::new(40.0, 55.0), 270.0, 1.5);
        let c = cluster_obstacles(&[a, b], &ego(), &ClusterThresholds::default());
        assert_eq!(c.ids(&[a, b]), vec![vec![3, 5]]);
    }

    #[test]
    fn single_linkage_is_transitive() {
        // a~b and b~c in bearing, but a and c are 40 deg apart.
        let th = ClusterThresholds::default();
        let mk = |id, brg: f64| {
            let u = crate::topology::heading_unit(brg);
            VesselState::new(id, 0.0, u * 50.0, 0.0, 0.0)
        };
        let obs = [mk(1, 10.0), mk(2, 30.0), mk(3, 50.0)];
        let e = VesselState::new(0, 0.0, Vec2::zeros(), 0.0, 0.0);
        assert_eq!(cluster_obstacles(&obs, &e, &th).clusters, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn order_independent() {
        let th = ClusterThresholds::default();
        let obs: Vec<VesselState> = (0..12)
            .map(|i| {
                let f = i as f64;
                VesselState::new(
                    i as u32 + 1,
                    0.0,
                    Vec2::new(10.0 * f - 60.0, 30.0 + 5.0 * (f * 1.3).sin() * 10.0),
                    f * 37.0,
                    1.0,
                )
            })
            .collect();
        let mut rev = obs.clone();
        rev.reverse();
        let a = cluster_obstacles(&obs, &ego(), &th).ids(&obs);
        let b = cluster_obstacles(&rev, &ego(), &th).ids(&rev);
        assert_eq!(a, b);
    }
}
