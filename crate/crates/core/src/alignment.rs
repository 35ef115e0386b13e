//! Unweighted aggregate political alignment π and political relevance, with
//! ranking tables and summary statistics.
//!
//! π = 2·(C/(C+L) − 0.5) maps the conservative fraction of an interest's
//! partisan audience onto [−1, +1]; the metric is symmetric, so only the
//! conservatively-oriented value is computed.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::reach::{DemographicSubgroup, IdeologyBucket, ReachTable};
use crate::stats;

/// Per-interest unweighted alignment and relevance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentRecord {
    pub interest_id: String,
    pub interest_name: String,
    /// Conservatively-oriented alignment in [−1, +1].
    pub pi: f64,
    /// Fraction of the total audience that is liberal or conservative.
    pub relevance: f64,
    pub liberal: u64,
    pub conservative: u64,
    pub total: u64,
}

/// Conservatively-oriented political alignment: 2·(C/(C+L) − 0.5).
pub fn political_alignment(liberal: u64, conservative: u64) -> Result<f64> {
    let partisan = liberal + conservative;
    if partisan == 0 {
        return Err(Error::UndefinedAlignment);
    }
    Ok(2.0 * (conservative as f64 / partisan as f64 - 0.5))
}

/// Fraction of the total audience that is partisan: (L+C)/total.
pub fn political_relevance(liberal: u64, conservative: u64, total: u64) -> Result<f64> {
    if total == 0 {
        return Err(Error::UndefinedRelevance("total audience is zero".into()));
    }
    let partisan = liberal + conservative;
    if partisan > total {
        return Err(Error::UndefinedRelevance(format!(
            "partisan count {partisan} exceeds total {total}"
        )));
    }
    Ok(partisan as f64 / total as f64)
}

/// Build alignment records for every interest in a binarized table, using
/// the marginal (demographic-unconditioned) slice. Interests whose marginal
/// `any` count is missing fall back to L+C as the total, with a warning left
/// to the caller via the returned fallback count.
pub fn alignment_records(table: &ReachTable) -> Result<(Vec<AlignmentRecord>, usize)> {
    if !table.is_binarized() {
        return Err(Error::InvalidParam("reach table is not binarized".into()));
    }
    let marginal = DemographicSubgroup::marginal();
    let mut records = Vec::with_capacity(table.interest_count());
    let mut total_fallbacks = 0usize;
    for id in table.interest_ids() {
        let Some((l, c)) = table.lc(id, marginal) else {
            continue;
        };
        if l + c == 0 {
            continue;
        }
        let total = match table.count(id, IdeologyBucket::Any, marginal) {
            Some(t) if t >= l + c => t,
            _ => {
                total_fallbacks += 1;
                l + c
            }
        };
        records.push(AlignmentRecord {
            interest_id: id.to_string(),
            interest_name: table.interest_name(id).unwrap_or("").to_string(),
            pi: political_alignment(l, c)?,
            relevance: political_relevance(l, c, total)?,
            liberal: l,
            conservative: c,
            total,
        });
    }
    Ok((records, total_fallbacks))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RankDirection {
    Liberal,
    Conservative,
}

/// Top-k interests by alignment: ascending π for liberal, descending for
/// conservative; ties broken by interest id ascending. The result is stable
/// under any permutation of the input.
pub fn rank_interests(
    records: &[AlignmentRecord],
    k: usize,
    direction: RankDirection,
) -> Result<Vec<AlignmentRecord>> {
    if records.is_empty() {
        return Err(Error::EmptyInput("rank_interests on empty record set"));
    }
    if k == 0 {
        return Err(Error::InvalidParam("k must be at least 1".into()));
    }
    let mut sorted: Vec<&AlignmentRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        let ord = a.pi.total_cmp(&b.pi).then_with(|| a.interest_id.cmp(&b.interest_id));
        match direction {
            RankDirection::Liberal => ord,
            RankDirection::Conservative => b
                .pi
                .total_cmp(&a.pi)
                .then_with(|| a.interest_id.cmp(&b.interest_id)),
        }
    });
    Ok(sorted.into_iter().take(k).cloned().collect())
}

/// Sample mean, sample standard deviation (n−1), and the central 95% mass
/// interval (nearest-rank 2.5th/97.5th percentiles).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub sd: f64,
    pub central95_low: f64,
    pub central95_high: f64,
    pub n: usize,
}

pub fn summary_stats(values: &[f64]) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::EmptyInput("summary_stats on empty sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(SummaryStats {
        mean: stats::mean(values),
        sd: stats::sample_sd(values),
        central95_low: stats::percentile_nearest_rank(&sorted, 2.5)?,
        central95_high: stats::percentile_nearest_rank(&sorted, 97.5)?,
        n: values.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, pi: f64) -> AlignmentRecord {
        AlignmentRecord {
            interest_id: id.to_string(),
            interest_name: String::new(),
            pi,
            relevance: 1.0,
            liberal: 0,
            conservative: 0,
            total: 0,
        }
    }

    #[test]
    fn alignment_even_split_is_zero() {
        assert_eq!(political_alignment(50, 50).unwrap(), 0.0);
    }

    #[test]
    fn alignment_pure_conservative_is_one() {
        assert_eq!(political_alignment(0, 7).unwrap(), 1.0);
        assert_eq!(political_alignment(7, 0).unwrap(), -1.0);
    }

    #[test]
    fn alignment_matches_most_conservative_interest() {
        // 2*(1991/2000 - 0.5) = 0.991
        let pi = political_alignment(9, 1991).unwrap();
        assert!((pi - 0.991).abs() < 1e-12);
    }

    #[test]
    fn alignment_undefined_without_partisans() {
        assert!(matches!(
            political_alignment(0, 0),
            Err(Error::UndefinedAlignment)
        ));
    }

    #[test]
    fn relevance_cases() {
        assert!((political_relevance(40, 35, 100).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(political_relevance(0, 0, 10).unwrap(), 0.0);
        assert_eq!(political_relevance(5, 5, 10).unwrap(), 1.0);
        assert!(political_relevance(5, 6, 10).is_err());
        assert!(political_relevance(1, 1, 0).is_err());
    }

    #[test]
    fn rank_interests_both_directions() {
        let records = vec![record("A", -0.9), record("B", 0.2), record("C", -0.5)];
        let liberal = rank_interests(&records, 2, RankDirection::Liberal).unwrap();
        assert_eq!(
            liberal.iter().map(|r| r.interest_id.as_str()).collect::<Vec<_>>(),
            ["A", "C"]
        );
        let conservative = rank_interests(&records, 1, RankDirection::Conservative).unwrap();
        assert_eq!(conservative[0].interest_id, "B");
    }

    #[test]
    fn rank_interests_tie_breaks_by_id() {
        let records = vec![record("zz", -0.9), record("aa", -0.9), record("mm", 0.0)];
        let top = rank_interests(&records, 2, RankDirection::Liberal).unwrap();
        assert_eq!(top[0].interest_id, "aa");
        assert_eq!(top[1].interest_id, "zz");
    }

    #[test]
    fn rank_interests_rejects_empty() {
        assert!(rank_interests(&[], 3, RankDirection::Liberal).is_err());
    }

    #[test]
    fn rank_is_permutation_stable() {
        let a = vec![record("x", 0.1), record("y", -0.4), record("z", 0.1)];
        let mut b = a.clone();
        b.reverse();
        let ra = rank_interests(&a, 3, RankDirection::Conservative).unwrap();
        let rb = rank_interests(&b, 3, RankDirection::Conservative).unwrap();
        let ids = |v: &[AlignmentRecord]| {
            v.iter().map(|r| r.interest_id.clone()).collect::<Vec<_>>()
        };
        assert_eq!(ids(&ra), ids(&rb));
    }

    #[test]
    fn summary_constant_sample() {
        let s = summary_stats(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.sd, 0.0);
    }

    #[test]
    fn summary_two_point_sample() {
        let s = summary_stats(&[-1.0, 1.0]).unwrap();
        assert_eq!(s.mean, 0.0);
        assert!((s.sd - 1.4142135623730951).abs() < 1e-12);
        assert_eq!(s.central95_low, -1.0);
        assert_eq!(s.central95_high, 1.0);
    }

    #[test]
    fn antisymmetry_and_scale_invariance() {
        for (l, c) in [(1u64, 2u64), (10, 0), (3, 3), (120, 7)] {
            let pi = political_alignment(l, c).unwrap();
            let swapped = political_alignment(c, l).unwrap();
            assert!((pi + swapped).abs() < 1e-15);
            for scale in [2u64, 10, 1000] {
                let scaled = political_alignment(l * scale, c * scale).unwrap();
                assert!((pi - scaled).abs() < 1e-15);
            }
            assert!(pi.abs() <= 1.0);
            assert_eq!(pi.abs() == 1.0, l == 0 || c == 0);
        }
    }
}
