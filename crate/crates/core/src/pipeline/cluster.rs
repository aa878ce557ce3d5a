use serde::{Deserialize, Serialize};

use crate::monitor::AlarmRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    /// Refined estimate of the cluster's first alarm.
    pub start: Option<usize>,
    /// Indices into the alarm list, in time order.
    pub members: Vec<usize>,
    /// Whether any member survived confirmation (or confirmation was off).
    pub confirmed: bool,
}

/// Groups time-ordered alarms: a gap in `t_hat` larger than `omega` opens a new cluster.
pub fn cluster_alarms(alarms: &[AlarmRecord], omega: usize) -> Vec<Cluster> {
    let mut out: Vec<Cluster> = Vec::new();
    for (i, a) in alarms.iter().enumerate() {
        let joins = i > 0 && a.t_hat - alarms[i - 1].t_hat <= omega;
        if !joins {
            out.push(Cluster {
                id: out.len(),
                start: a.refined,
                members: Vec::new(),
                confirmed: false,
            });
        }
        let c = out.last_mut().expect("cluster opened above");
        c.members.push(i);
        c.confirmed |= a.confirmed != Some(false);
    }
    out
}

/// Counts of a one-to-one matching between estimates and true change points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl MatchCounts {
    /// `2TP / (2TP + FP + FN)`; 1 when there is nothing to find and nothing was found.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.true_positives + self.false_positives + self.false_negatives;
        if denom == 0 {
            1.0
        } else {
            2.0 * self.true_positives as f64 / denom as f64
        }
    }
}

/// Each true point takes the nearest unused estimate within `tolerance`.
pub fn match_change_points(estimates: &[usize], truth: &[usize], tolerance: usize) -> MatchCounts {
    let mut used = vec![false; estimates.len()];
    let mut tp = 0;
    for &t in truth {
        let best = estimates
            .iter()
            .enumerate()
            .filter(|(i, e)| !used[*i] && e.abs_diff(t) <= tolerance)
            .min_by_key(|(_, e)| e.abs_diff(t));
        if let Some((i, _)) = best {
            used[i] = true;
            tp += 1;
        }
    }
    MatchCounts {
        true_positives: tp,
        false_positives: estimates.len() - tp,
        false_negatives: truth.len() - tp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alarm(t_hat: usize) -> AlarmRecord {
        AlarmRecord {
            t_hat,
            last_read: t_hat + 22,
            statistic: 5.0,
            refined: Some(t_hat + 3),
            confirmed: Some(true),
            cluster: None,
        }
    }

    fn times(clusters: &[Cluster], alarms: &[AlarmRecord]) -> Vec<Vec<usize>> {
        clusters
            .iter()
            .map(|c| c.members.iter().map(|&i| alarms[i].t_hat).collect())
            .collect()
    }

    #[test]
    fn empty() {
        assert!(cluster_alarms(&[], 22).is_empty());
    }

    #[test]
    fn gap_rule_is_strict() {
        let a: Vec<_> = [100, 105, 200].map(alarm).to_vec();
        assert_eq!(times(&cluster_alarms(&a, 22), &a), vec![vec![100, 105], vec![200]]);
        let a: Vec<_> = [100, 122, 144].map(alarm).to_vec();
        let c = cluster_alarms(&a, 22);
        assert_eq!(times(&c, &a), vec![vec![100, 122, 144]]);
        assert_eq!(c[0].start, Some(103));
    }

    #[test]
    fn clusters_partition_the_alarms() {
        let a: Vec<_> = [3, 4, 30, 90, 91, 92, 400].map(alarm).to_vec();
        let c = cluster_alarms(&a, 10);
        let flat: Vec<usize> = c.iter().flat_map(|c| c.members.clone()).collect();
        assert_eq!(flat, (0..a.len()).collect::<Vec<_>>());
    }

    #[test]
    fn dismissed_clusters() {
        let mut a: Vec<_> = [10, 200].map(alarm).to_vec();
        a[0].confirmed = Some(false);
        let c = cluster_alarms(&a, 5);
        assert_eq!((c[0].confirmed, c[1].confirmed), (false, true));
    }

    #[test]
    fn f1_counts() {
        let m = match_change_points(&[2295, 2312, 4601, 3000], &[2300, 4600], 10);
        assert_eq!((m.true_positives, m.false_positives, m.false_negatives), (2, 2, 0));
        assert!((m.f1() - 4.0 / 6.0).abs() < 1e-15);
        // one estimate cannot serve two change points
        let m = match_change_points(&[105], &[100, 110], 10);
        assert_eq!(m.true_positives, 1);
        assert_eq!(match_change_points(&[], &[2300], 10).f1(), 0.0);
        assert_eq!(match_change_points(&[], &[], 10).f1(), 1.0);
    }
}
