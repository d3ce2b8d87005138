use std::collections::BTreeMap;

use crate::grid::{CellAddress, FormatCategory};

use super::{GroupBounds, NormalizationMode, NormalizationPolicy};

fn group_key(policy: &NormalizationPolicy, category: FormatCategory) -> Option<FormatCategory> {
    match policy.mode {
        NormalizationMode::Uniform => None,
        NormalizationMode::PerFormatGroup => Some(category),
    }
}

/// Min/max per normalization group, ordered by group.
pub fn group_bounds(values: &[(CellAddress, f64, FormatCategory)], policy: &NormalizationPolicy) -> Vec<GroupBounds> {
    let mut groups: BTreeMap<Option<FormatCategory>, GroupBounds> = BTreeMap::new();
    for &(_, v, cat) in values {
        let key = group_key(policy, cat);
        let g = groups.entry(key).or_insert(GroupBounds {
            group: key,
            v_min: v,
            v_max: v,
            count: 0,
        });
        g.v_min = g.v_min.min(v);
        g.v_max = g.v_max.max(v);
        g.count += 1;
    }
    groups.into_values().collect()
}

/// Height of one value inside its group.
///
/// Unsigned: `h_max * (v - min) / (max - min)`. Signed baseline with a group
/// straddling zero: `h_max * v / max(|min|, |max|)`. A flat group sits at
/// `h_max / 2` so present-but-constant data is distinguishable from absent.
pub fn scale_value(v: f64, bounds: &GroupBounds, policy: &NormalizationPolicy) -> f64 {
    let h_max = policy.height_max;
    let (lo, hi) = (bounds.v_min, bounds.v_max);
    if hi == lo {
        return h_max / 2.0;
    }
    // the ratio is formed first so the group extremes land exactly on 0 and h_max
    if policy.signed_baseline && lo < 0.0 && hi > 0.0 {
        h_max * (v / lo.abs().max(hi.abs()))
    } else {
        h_max * ((v - lo) / (hi - lo))
    }
}

pub(crate) fn lookup<'a>(
    groups: &'a [GroupBounds],
    policy: &NormalizationPolicy,
    category: FormatCategory,
) -> Option<&'a GroupBounds> {
    let key = group_key(policy, category);
    groups.iter().find(|g| g.group == key)
}

/// Heights for every value, in input order.
pub fn normalize(
    values: &[(CellAddress, f64, FormatCategory)],
    policy: &NormalizationPolicy,
) -> Vec<(CellAddress, f64)> {
    let groups = group_bounds(values, policy);
    values
        .iter()
        .map(|&(addr, v, cat)| {
            let bounds = lookup(&groups, policy, cat).expect("every value belongs to a group");
            (addr, scale_value(v, bounds, policy))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vals(vs: &[f64], cat: FormatCategory) -> Vec<(CellAddress, f64, FormatCategory)> {
        vs.iter()
            .enumerate()
            .map(|(i, &v)| (CellAddress::new(0, i), v, cat))
            .collect()
    }

    fn heights(values: &[(CellAddress, f64, FormatCategory)], policy: &NormalizationPolicy) -> Vec<f64> {
        normalize(values, policy).into_iter().map(|(_, h)| h).collect()
    }

    #[test]
    fn uniform_min_max() {
        let p = NormalizationPolicy::default();
        assert_eq!(
            heights(&vals(&[0.0, 5.0, 10.0], FormatCategory::General), &p),
            [0.0, 0.5, 1.0]
        );
        assert_eq!(
            heights(&vals(&[7.0, 7.0, 7.0], FormatCategory::General), &p),
            [0.5, 0.5, 0.5]
        );
    }

    #[test]
    fn per_format_groups_scale_separately() {
        let p = NormalizationPolicy {
            mode: NormalizationMode::PerFormatGroup,
            ..NormalizationPolicy::default()
        };
        let mut v = vals(&[0.1, 0.2], FormatCategory::Percent);
        v.extend(vals(&[100.0, 300.0], FormatCategory::Currency));
        assert_eq!(heights(&v, &p), [0.0, 1.0, 0.0, 1.0]);
        let groups = group_bounds(&v, &p);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].group, Some(FormatCategory::Currency));

        // the same values under uniform mode share one scale
        let u = NormalizationPolicy::default();
        let h = heights(&v, &u);
        assert_eq!(h[3], 1.0);
        assert!(h[0] < 0.01 && h[1] < 0.01);
    }

    #[test]
    fn signed_baseline() {
        let p = NormalizationPolicy {
            signed_baseline: true,
            ..NormalizationPolicy::default()
        };
        assert_eq!(
            heights(&vals(&[-4.0, 0.0, 2.0], FormatCategory::General), &p),
            [-1.0, 0.0, 0.5]
        );
        // no zero crossing: falls back to min-max
        assert_eq!(heights(&vals(&[2.0, 4.0], FormatCategory::General), &p), [0.0, 1.0]);
    }
}
