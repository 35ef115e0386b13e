//! Demographic deconfounding of political alignment.
//!
//! For each interest and demographic category, the adjusted alignment is the
//! weighted average of per-subgroup differences between the subgroup's
//! conservative share within the interest and that subgroup's global
//! baseline:
//!
//!   μ = Σ_i [P(C|D_i ∩ I) − P(C|D_i)] · P(D_i|I)
//!
//! summed over subgroups with a partisan audience for the interest, with
//! weights renormalized over that same set. μ is bounded in [−1, +1].

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::reach::{DemographicCategory, DemographicSubgroup, IdeologyBucket, ReachTable};

/// How subgroup baselines P(C|D_i) are estimated across interests.
///
/// The printed estimator sums per-interest fractions without normalization,
/// which exceeds 1; `MeanOfFractions` inserts the missing 1/N and is the
/// default. `Pooled` aggregates counts before dividing. `Pinned` marks
/// baselines supplied directly rather than estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineEstimator {
    MeanOfFractions,
    Pooled,
    Pinned,
}

/// Which per-subgroup count feeds the audience weights P(D_i|I):
/// the total (any-ideology) reach when available, or the partisan L+C count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightBasis {
    TotalReach,
    Partisan,
}

/// A demographic subgroup's overall conservative share across interests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubgroupBaseline {
    pub category: DemographicCategory,
    pub label: &'static str,
    pub baseline: f64,
    pub n_interests_used: usize,
    pub estimator: BaselineEstimator,
}

/// Baselines for one category, indexed by subgroup.
#[derive(Debug, Clone, Serialize)]
pub struct BaselineSet {
    pub category: DemographicCategory,
    pub baselines: Vec<SubgroupBaseline>,
}

impl BaselineSet {
    pub fn get(&self, subgroup: DemographicSubgroup) -> Option<f64> {
        self.baselines
            .iter()
            .find(|b| b.label == subgroup.label())
            .map(|b| b.baseline)
    }

    /// Every subgroup of the category pinned at one value. Used for the
    /// degenerate-case identity and for oracle tests with generator-known
    /// baselines.
    pub fn pinned(category: DemographicCategory, value: f64) -> Self {
        let baselines = DemographicSubgroup::in_category(category)
            .into_iter()
            .map(|s| SubgroupBaseline {
                category,
                label: s.label(),
                baseline: value,
                n_interests_used: 0,
                estimator: BaselineEstimator::Pinned,
            })
            .collect();
        BaselineSet {
            category,
            baselines,
        }
    }

    /// Pinned per-subgroup values, e.g. generator ground truth.
    pub fn from_values(
        category: DemographicCategory,
        values: &[(DemographicSubgroup, f64)],
    ) -> Self {
        let baselines = values
            .iter()
            .map(|&(s, v)| SubgroupBaseline {
                category,
                label: s.label(),
                baseline: v,
                n_interests_used: 0,
                estimator: BaselineEstimator::Pinned,
            })
            .collect();
        BaselineSet {
            category,
            baselines,
        }
    }
}

/// Per-subgroup breakdown of one deconfounded alignment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubgroupContribution {
    pub label: &'static str,
    /// P(C|D_i ∩ I), the subgroup's conservative share within the interest.
    pub division: f64,
    /// P(D_i|I), renormalized over the subgroups used.
    pub weight: f64,
    /// P(C|D_i), the subgroup's global baseline.
    pub baseline: f64,
}

/// One interest's deconfounded alignment for one demographic category.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeconfoundResult {
    pub interest_id: String,
    pub category: DemographicCategory,
    /// Deconfounded alignment in [−1, +1].
    pub mu: f64,
    /// The unweighted alignment π for comparison.
    pub pi: f64,
    /// Signed percent change of magnitude; `None` when π = 0.
    pub delta_pct: Option<f64>,
    pub subgroups_used: Vec<SubgroupContribution>,
    /// Subgroups present for the interest but skipped for lack of partisan
    /// audience.
    pub skipped: Vec<&'static str>,
}

/// Conservative share within a subgroup-interest intersection: C/(C+L).
/// An empty intersection (L+C = 0) is the signal for the caller to skip the
/// subgroup.
pub fn subgroup_division(liberal: u64, conservative: u64) -> Result<f64> {
    let partisan = liberal + conservative;
    if partisan == 0 {
        return Err(Error::UndefinedAlignment);
    }
    Ok(conservative as f64 / partisan as f64)
}

/// Estimate P(C|D_i) for every subgroup of `category` over all interests in
/// the table with a partisan audience in that subgroup. Subgroups with no
/// usable interest are omitted; an error is returned only when the whole
/// category has no usable data.
pub fn subgroup_baselines(
    table: &ReachTable,
    category: DemographicCategory,
    estimator: BaselineEstimator,
) -> Result<BaselineSet> {
    if !table.is_binarized() {
        return Err(Error::InvalidParam("reach table is not binarized".into()));
    }
    if estimator == BaselineEstimator::Pinned {
        return Err(Error::InvalidParam(
            "pinned baselines are constructed, not estimated".into(),
        ));
    }
    let ids: Vec<&str> = table.interest_ids().collect();
    let mut baselines = Vec::new();
    for subgroup in DemographicSubgroup::in_category(category) {
        let mut n_used = 0usize;
        let mut fraction_sum = 0.0;
        let mut pooled_c = 0u64;
        let mut pooled_partisan = 0u64;
        for &id in &ids {
            let Some((l, c)) = table.lc(id, subgroup) else {
                continue;
            };
            if l + c == 0 {
                continue;
            }
            n_used += 1;
            fraction_sum += c as f64 / (l + c) as f64;
            pooled_c += c;
            pooled_partisan += l + c;
        }
        if n_used == 0 {
            continue;
        }
        let baseline = match estimator {
            BaselineEstimator::MeanOfFractions => fraction_sum / n_used as f64,
            BaselineEstimator::Pooled => pooled_c as f64 / pooled_partisan as f64,
            BaselineEstimator::Pinned => unreachable!(),
        };
        baselines.push(SubgroupBaseline {
            category,
            label: subgroup.label(),
            baseline,
            n_interests_used: n_used,
            estimator,
        });
    }
    if baselines.is_empty() {
        return Err(Error::InvalidParam(format!(
            "category {category} has no subgroup with a usable interest"
        )));
    }
    Ok(BaselineSet {
        category,
        baselines,
    })
}

/// Audience weights P(D_i|I) over the subgroups of `category` present for
/// the interest. The basis count is the subgroup's total (any-ideology)
/// reach when available and positive, falling back to L+C; zero-basis
/// subgroups are excluded and the rest renormalized.
pub fn subgroup_weights(
    table: &ReachTable,
    interest_id: &str,
    category: DemographicCategory,
    basis: WeightBasis,
) -> Result<Vec<(DemographicSubgroup, f64)>> {
    if !table.contains(interest_id) {
        return Err(Error::UnknownInterest(interest_id.to_string()));
    }
    let mut raw = Vec::new();
    for subgroup in table.subgroups_present(interest_id, category) {
        let value = basis_count(table, interest_id, subgroup, basis);
        if value > 0 {
            raw.push((subgroup, value as f64));
        }
    }
    if raw.is_empty() {
        return Err(Error::NoUsableSubgroup {
            interest: interest_id.to_string(),
            category: category.label().to_string(),
        });
    }
    let total: f64 = raw.iter().map(|&(_, v)| v).sum();
    Ok(raw.into_iter().map(|(s, v)| (s, v / total)).collect())
}

fn basis_count(
    table: &ReachTable,
    interest_id: &str,
    subgroup: DemographicSubgroup,
    basis: WeightBasis,
) -> u64 {
    let partisan = table
        .lc(interest_id, subgroup)
        .map(|(l, c)| l + c)
        .unwrap_or(0);
    match basis {
        WeightBasis::TotalReach => match table.count(interest_id, IdeologyBucket::Any, subgroup) {
            Some(any) if any > 0 => any,
            _ => partisan,
        },
        WeightBasis::Partisan => partisan,
    }
}

/// Deconfound one interest against one category, using the supplied
/// baselines. Subgroups without a partisan audience are skipped and the
/// weights renormalized over the remainder.
pub fn deconfounded_alignment(
    table: &ReachTable,
    interest_id: &str,
    category: DemographicCategory,
    baselines: &BaselineSet,
    basis: WeightBasis,
) -> Result<DeconfoundResult> {
    if !table.is_binarized() {
        return Err(Error::InvalidParam("reach table is not binarized".into()));
    }
    let (ml, mc) = table
        .lc(interest_id, DemographicSubgroup::marginal())
        .ok_or_else(|| Error::UnknownInterest(interest_id.to_string()))?;
    let pi = crate::alignment::political_alignment(ml, mc)?;

    let mut used: Vec<(DemographicSubgroup, f64, f64)> = Vec::new(); // (subgroup, division, raw basis)
    let mut skipped = Vec::new();
    for subgroup in table.subgroups_present(interest_id, category) {
        let (l, c) = table.lc(interest_id, subgroup).unwrap_or((0, 0));
        match subgroup_division(l, c) {
            Ok(division) => {
                let basis_value = basis_count(table, interest_id, subgroup, basis);
                used.push((subgroup, division, basis_value as f64));
            }
            Err(_) => skipped.push(subgroup.label()),
        }
    }
    if used.is_empty() {
        return Err(Error::NoUsableSubgroup {
            interest: interest_id.to_string(),
            category: category.label().to_string(),
        });
    }
    let basis_total: f64 = used.iter().map(|&(_, _, b)| b).sum();
    let mut mu = 0.0;
    let mut contributions = Vec::with_capacity(used.len());
    for (subgroup, division, basis_value) in used {
        let weight = basis_value / basis_total;
        let baseline = baselines.get(subgroup).ok_or_else(|| {
            Error::InvalidParam(format!(
                "no baseline for subgroup {subgroup} in category {category}"
            ))
        })?;
        mu += (division - baseline) * weight;
        contributions.push(SubgroupContribution {
            label: subgroup.label(),
            division,
            weight,
            baseline,
        });
    }
    Ok(DeconfoundResult {
        interest_id: interest_id.to_string(),
        category,
        mu,
        pi,
        delta_pct: delta_pct(pi, mu).ok(),
        subgroups_used: contributions,
        skipped,
    })
}

/// Signed percent change of alignment magnitude: 100·(|μ| − |π|)/|π|.
/// Negative means the interest moved toward the political center.
pub fn delta_pct(pi: f64, mu: f64) -> Result<f64> {
    if pi == 0.0 {
        return Err(Error::UndefinedDelta);
    }
    Ok(100.0 * (mu.abs() - pi.abs()) / pi.abs())
}

/// Baselines plus per-interest results for one category.
#[derive(Debug, Clone, Serialize)]
pub struct CategoryDeconfound {
    pub category: DemographicCategory,
    pub estimator: BaselineEstimator,
    pub basis: WeightBasis,
    pub baselines: BaselineSet,
    pub results: Vec<DeconfoundResult>,
    /// Interests with no usable subgroup in this category.
    pub no_result: Vec<String>,
}

/// Deconfound every politically-relevant interest in the table against one
/// category. Baselines are estimated once; per-interest computations are
/// pure and evaluated in parallel.
pub fn deconfound_category(
    table: &ReachTable,
    category: DemographicCategory,
    estimator: BaselineEstimator,
    basis: WeightBasis,
) -> Result<CategoryDeconfound> {
    let baselines = subgroup_baselines(table, category, estimator)?;
    deconfound_category_with(table, category, baselines, estimator, basis)
}

/// As [`deconfound_category`] but with caller-supplied baselines.
pub fn deconfound_category_with(
    table: &ReachTable,
    category: DemographicCategory,
    baselines: BaselineSet,
    estimator: BaselineEstimator,
    basis: WeightBasis,
) -> Result<CategoryDeconfound> {
    let ids: Vec<&str> = table.interest_ids().collect();
    let outcomes: Vec<(Option<DeconfoundResult>, Option<String>)> = ids
        .par_iter()
        .map(|&id| {
            let marginal = table.lc(id, DemographicSubgroup::marginal());
            match marginal {
                Some((l, c)) if l + c > 0 => {}
                _ => return (None, None), // not politically relevant
            }
            match deconfounded_alignment(table, id, category, &baselines, basis) {
                Ok(result) => (Some(result), None),
                Err(Error::NoUsableSubgroup { .. }) => (None, Some(id.to_string())),
                Err(_) => (None, Some(id.to_string())),
            }
        })
        .collect();
    let mut results = Vec::new();
    let mut no_result = Vec::new();
    for (res, missing) in outcomes {
        if let Some(r) = res {
            results.push(r);
        } else if let Some(id) = missing {
            no_result.push(id);
        }
    }
    Ok(CategoryDeconfound {
        category,
        estimator,
        basis,
        baselines,
        results,
        no_result,
    })
}
