use rand::seq::SliceRandom;

use super::{CorpusError, Dataset};
use crate::rng;

/// Fold index for every record, aligned with dataset order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldAssignment {
    k: usize,
    ids: Vec<String>,
    folds: Vec<usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Fold of the record at dataset position `index`.
    pub fn fold_of_index(&self, index: usize) -> usize {
        self.folds[index]
    }

    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|i| i == id).map(|p| self.folds[p])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.folds
    }

    /// Dataset positions held out in `fold`, ascending.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len()).filter(|&i| self.folds[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len()).filter(|&i| self.folds[i] != fold).collect()
    }
}

/// Assign `k` folds stratified by `strata`.
///
/// Within each stratum (ascending stratum value) record positions are sorted
/// by id, shuffled with the SplitMix64 stream `mix(seed, stratum)`, then dealt
/// round-robin into folds. The dealing position carries over between strata
/// so fold sizes stay within one of each other as well.
pub fn kfold_assign(ids: &[&str], strata: &[usize], k: usize, seed: u64) -> Result<Vec<usize>, CorpusError> {
    assert_eq!(ids.len(), strata.len());
    if k < 2 {
        return Err(CorpusError::InvalidFoldCount(k));
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, &s) in strata.iter().enumerate() {
        match groups.iter_mut().find(|(g, _)| *g == s) {
            Some((_, members)) => members.push(i),
            None => groups.push((s, vec![i])),
        }
    }
    groups.sort_by_key(|(s, _)| *s);
    for (s, members) in &groups {
        if members.len() < k {
            return Err(CorpusError::TooFewInClass {
                class: stratum_name(*s, groups.len()),
                count: members.len(),
                k,
            });
        }
    }
    let mut folds = vec![0; ids.len()];
    let mut next = 0usize;
    for (s, mut members) in groups {
        members.sort_by(|&a, &b| ids[a].cmp(ids[b]).then(a.cmp(&b)));
        let mut rng = rng::stream(rng::mix(seed, s as u64));
        members.shuffle(&mut rng);
        for i in members {
            folds[i] = next % k;
            next += 1;
        }
    }
    Ok(folds)
}

fn stratum_name(s: usize, n_groups: usize) -> String {
    match (n_groups, s) {
        (1, _) => "all".to_string(),
        (_, 0) => "negative".to_string(),
        (_, 1) => "positive".to_string(),
        (_, other) => format!("stratum {other}"),
    }
}

/// Folds stratified by diagnosis label.
pub fn stratified_folds(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment, CorpusError> {
    let mut strata = Vec::with_capacity(dataset.len());
    for r in dataset {
        let label = r
            .diagnosis
            .ok_or_else(|| CorpusError::MissingLabel(r.id.clone()))?;
        strata.push(usize::from(label));
    }
    let ids: Vec<&str> = dataset.iter().map(|r| r.id.as_str()).collect();
    let folds = kfold_assign(&ids, &strata, k, seed)?;
    Ok(FoldAssignment {
        k,
        ids: ids.iter().map(|s| s.to_string()).collect(),
        folds,
    })
}

/// Same-size resample with replacement. Ids repeat in the output.
pub fn bootstrap_sample(dataset: &Dataset, seed: u64) -> Result<Dataset, CorpusError> {
    if dataset.is_empty() {
        return Err(CorpusError::EmptyDataset);
    }
    let recs = dataset.records();
    let picked = rng::bootstrap_indices(recs.len(), seed)
        .into_iter()
        .map(|i| recs[i].clone())
        .collect();
    Ok(Dataset::resampled(
        format!("{}#bootstrap({seed})", dataset.name()),
        picked,
    ))
}

#[cfg(test)]
fn fold_counts(folds: &[usize], strata: &[usize], k: usize) -> std::collections::HashMap<usize, Vec<usize>> {
    let mut out: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
    for (&f, &s) in folds.iter().zip(strata) {
        out.entry(s).or_insert_with(|| vec![0; k])[f] += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TranscriptRecord;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn labeled(pos: usize, neg: usize) -> Dataset {
        let mut recs = Vec::new();
        for i in 0..pos {
            recs.push(TranscriptRecord::new(format!("p{i:03}"), "x").with_diagnosis(true));
        }
        for i in 0..neg {
            recs.push(TranscriptRecord::new(format!("n{i:03}"), "x").with_diagnosis(false));
        }
        Dataset::new("t", recs).unwrap()
    }

    fn strata_of(d: &Dataset) -> Vec<usize> {
        d.iter().map(|r| usize::from(r.diagnosis.unwrap())).collect()
    }

    #[test]
    fn exact_stratification_two_folds() {
        let d = labeled(10, 10);
        let f = stratified_folds(&d, 2, 1).unwrap();
        let counts = fold_counts(f.as_slice(), &strata_of(&d), 2);
        assert_eq!(counts[&1], vec![5, 5]);
        assert_eq!(counts[&0], vec![5, 5]);
    }

    #[test]
    fn three_folds_of_nine() {
        let d = labeled(9, 9);
        let f = stratified_folds(&d, 3, 99).unwrap();
        // brute-force tally
        for fold in 0..3 {
            let pos = d
                .iter()
                .enumerate()
                .filter(|(i, r)| f.fold_of_index(*i) == fold && r.diagnosis == Some(true))
                .count();
            let neg = d
                .iter()
                .enumerate()
                .filter(|(i, r)| f.fold_of_index(*i) == fold && r.diagnosis == Some(false))
                .count();
            assert_eq!((pos, neg), (3, 3));
        }
    }

    #[test]
    fn deterministic() {
        let d = labeled(13, 8);
        assert_eq!(stratified_folds(&d, 4, 5).unwrap(), stratified_folds(&d, 4, 5).unwrap());
        assert_ne!(
            stratified_folds(&d, 4, 5).unwrap().as_slice(),
            stratified_folds(&d, 4, 6).unwrap().as_slice()
        );
    }

    #[test]
    fn too_few_members() {
        let d = labeled(2, 10);
        let err = stratified_folds(&d, 3, 0).unwrap_err();
        assert_eq!(err.to_string(), "class positive has 2 members, fewer than k = 3");
        assert!(matches!(stratified_folds(&d, 1, 0), Err(CorpusError::InvalidFoldCount(1))));
    }

    #[test]
    fn unlabeled_record_rejected() {
        let d = Dataset::new("t", vec![TranscriptRecord::new("a", "x")]).unwrap();
        assert!(matches!(stratified_folds(&d, 2, 0), Err(CorpusError::MissingLabel(_))));
    }

    #[test]
    fn bootstrap_single_record() {
        let d = labeled(1, 0);
        let b = bootstrap_sample(&d, 42).unwrap();
        assert_eq!(b.records(), d.records());
    }

    #[test]
    fn bootstrap_size_and_errors() {
        let d = labeled(50, 50);
        assert_eq!(bootstrap_sample(&d, 1).unwrap().len(), 100);
        let empty = Dataset::new("e", vec![]).unwrap();
        assert!(matches!(bootstrap_sample(&empty, 1), Err(CorpusError::EmptyDataset)));
    }

    #[test]
    fn bootstrap_distinct_fraction_matches_analytic() {
        let d = labeled(50, 50);
        let expected = 1.0 - (1.0f64 - 1.0 / 100.0).powi(100);
        let mut total = 0.0;
        for seed in 0..1000u64 {
            let b = bootstrap_sample(&d, seed).unwrap();
            let distinct: HashSet<_> = b.iter().map(|r| r.id.clone()).collect();
            total += distinct.len() as f64 / 100.0;
        }
        let mean = total / 1000.0;
        assert!((mean - expected).abs() < 0.02, "mean {mean} vs {expected}");
    }

    proptest! {
        #[test]
        fn folds_partition_and_balance(pos in 3usize..30, neg in 3usize..30, k in 2usize..4, seed: u64) {
            let d = labeled(pos, neg);
            let f = stratified_folds(&d, k, seed).unwrap();
            prop_assert_eq!(f.as_slice().len(), d.len());
            let mut seen = vec![false; d.len()];
            for fold in 0..k {
                for i in f.test_indices(fold) {
                    prop_assert!(!seen[i]);
                    seen[i] = true;
                }
            }
            prop_assert!(seen.iter().all(|&s| s));
            let counts = fold_counts(f.as_slice(), &strata_of(&d), k);
            for c in counts.values() {
                let lo = *c.iter().min().unwrap();
                let hi = *c.iter().max().unwrap();
                prop_assert!(hi - lo <= 1);
            }
        }

        #[test]
        fn bootstrap_ids_drawn_from_input(n in 1usize..60, seed: u64) {
            let d = labeled(n, 0);
            let ids: HashSet<_> = d.iter().map(|r| r.id.clone()).collect();
            let b = bootstrap_sample(&d, seed).unwrap();
            prop_assert_eq!(b.len(), n);
            prop_assert!(b.iter().all(|r| ids.contains(&r.id)));
        }
    }
}
