//! Source-stratified subsampling and train/validation/test splitting.
//!
//! All randomness comes from [`SeededRng`], so membership is a function of
//! the input order and the seed only.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl::{self, TextRecord};
use crate::rng::{self, SeededRng};
use crate::segmenter::Sentence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    #[serde(default = "default_stratify")]
    pub stratify_by_source: bool,
}

fn default_stratify() -> bool {
    true
}

impl SplitSpec {
    pub fn sizes(&self) -> [usize; 3] {
        [self.train_size, self.val_size, self.test_size]
    }

    pub fn total(&self) -> usize {
        self.sizes().iter().sum()
    }

    fn validate(&self, available: usize) -> Result<()> {
        if self.sizes().contains(&0) {
            return Err(Error::SplitSizes(format!(
                "every part needs a positive size, got {:?}",
                self.sizes()
            )));
        }
        if self.total() > available {
            return Err(Error::SplitSizes(format!(
                "sizes {:?} sum to {} but only {available} sentences are available",
                self.sizes(),
                self.total()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<Sentence>,
    pub validation: Vec<Sentence>,
    pub test: Vec<Sentence>,
}

impl DatasetSplit {
    pub fn parts(&self) -> [(&'static str, &[Sentence]); 3] {
        [
            ("train", &self.train),
            ("validation", &self.validation),
            ("test", &self.test),
        ]
    }
}

/// Distributes `n` units over `weights` proportionally: each share gets the
/// floor of its exact quota and the leftover units go to the largest
/// fractional remainders, earlier entries first on ties.
pub fn largest_remainder(n: usize, weights: &[usize]) -> Vec<usize> {
    let total: u128 = weights.iter().map(|&w| w as u128).sum();
    if total == 0 {
        return vec![0; weights.len()];
    }
    let mut quotas = Vec::with_capacity(weights.len());
    let mut remainders = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let exact = n as u128 * w as u128;
        quotas.push((exact / total) as usize);
        remainders.push((exact % total, i));
    }
    let leftover = n - quotas.iter().sum::<usize>();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take(leftover) {
        quotas[i] += 1;
    }
    quotas
}

/// Groups item indices by source id, sources in order of first appearance.
fn group_by_source(items: &[Sentence]) -> Vec<(String, Vec<usize>)> {
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    let mut position = std::collections::HashMap::new();
    for (i, s) in items.iter().enumerate() {
        let slot = *position.entry(s.source_id.as_str()).or_insert_with(|| {
            groups.push((s.source_id.clone(), Vec::new()));
            groups.len() - 1
        });
        groups[slot].1.push(i);
    }
    groups
}

/// Draws `n` sentences with per-source quotas proportional to each source's
/// share of `corpus`. Survivors keep their original relative order.
pub fn stratified_sample(corpus: &[Sentence], n: usize, seed: u64) -> Result<Vec<Sentence>> {
    if n > corpus.len() {
        return Err(Error::SampleTooLarge {
            requested: n,
            available: corpus.len(),
        });
    }
    let groups = group_by_source(corpus);
    let counts: Vec<usize> = groups.iter().map(|g| g.1.len()).collect();
    let quotas = largest_remainder(n, &counts);
    let mut rng = SeededRng::new(seed);
    let mut picked = Vec::with_capacity(n);
    for ((_, members), quota) in groups.iter().zip(quotas) {
        for j in rng.choose_indices(members.len(), quota) {
            picked.push(members[j]);
        }
    }
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| corpus[i].clone()).collect())
}

/// Per-source, per-part allocation for a stratified split.
fn stratified_allocation(counts: &[usize], sizes: [usize; 3]) -> Vec<[usize; 3]> {
    let columns: Vec<Vec<usize>> = sizes.iter().map(|&s| largest_remainder(s, counts)).collect();
    let mut alloc: Vec<[usize; 3]> = (0..counts.len())
        .map(|s| [columns[0][s], columns[1][s], columns[2][s]])
        .collect();
    // Independent rounding of the three columns can overshoot a small
    // source by a unit or two; move the excess to a source with room.
    for s in 0..counts.len() {
        while alloc[s].iter().sum::<usize>() > counts[s] {
            let part = (0..3).max_by_key(|&p| (alloc[s][p], std::cmp::Reverse(p))).unwrap();
            let Some(r) = (0..counts.len()).find(|&r| alloc[r].iter().sum::<usize>() < counts[r]) else {
                break;
            };
            alloc[s][part] -= 1;
            alloc[r][part] += 1;
        }
    }
    alloc
}

pub fn split(subset: &[Sentence], spec: &SplitSpec) -> Result<DatasetSplit> {
    spec.validate(subset.len())?;
    let sizes = spec.sizes();
    let mut rng = SeededRng::new(spec.seed);
    let mut parts: [Vec<usize>; 3] = Default::default();
    if spec.stratify_by_source {
        let groups = group_by_source(subset);
        let counts: Vec<usize> = groups.iter().map(|g| g.1.len()).collect();
        let alloc = stratified_allocation(&counts, sizes);
        for ((_, members), quota) in groups.iter().zip(&alloc) {
            let mut members = members.clone();
            rng.shuffle(&mut members);
            let mut rest = members.as_slice();
            for (part, &take) in parts.iter_mut().zip(quota) {
                let (head, tail) = rest.split_at(take);
                part.extend_from_slice(head);
                rest = tail;
            }
        }
        for part in parts.iter_mut() {
            rng.shuffle(part);
        }
    } else {
        let mut order: Vec<usize> = (0..subset.len()).collect();
        rng.shuffle(&mut order);
        let mut rest = order.as_slice();
        for (part, &take) in parts.iter_mut().zip(&sizes) {
            let (head, tail) = rest.split_at(take);
            part.extend_from_slice(head);
            rest = tail;
        }
    }
    let [train, validation, test] = parts.map(|idx| idx.into_iter().map(|i| subset[i].clone()).collect());
    Ok(DatasetSplit {
        train,
        validation,
        test,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceCounts {
    pub source_id: String,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

/// Sidecar describing how a split was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub toolkit_version: String,
    pub generator: String,
    pub seed: u64,
    pub stratify_by_source: bool,
    pub sizes: PartSizes,
    pub per_source: Vec<SourceCounts>,
}

impl SplitManifest {
    pub fn describe(split: &DatasetSplit, spec: &SplitSpec) -> Self {
        let mut per_source: Vec<SourceCounts> = Vec::new();
        for (part, sentences) in split.parts() {
            for s in sentences {
                let entry = match per_source.iter().position(|c| c.source_id == s.source_id) {
                    Some(i) => &mut per_source[i],
                    None => {
                        per_source.push(SourceCounts {
                            source_id: s.source_id.clone(),
                            train: 0,
                            validation: 0,
                            test: 0,
                        });
                        per_source.last_mut().unwrap()
                    }
                };
                match part {
                    "train" => entry.train += 1,
                    "validation" => entry.validation += 1,
                    _ => entry.test += 1,
                }
            }
        }
        per_source.sort_by(|a, b| a.source_id.cmp(&b.source_id));
        SplitManifest {
            toolkit_version: crate::VERSION.to_string(),
            generator: rng::GENERATOR_NAME.to_string(),
            seed: spec.seed,
            stratify_by_source: spec.stratify_by_source,
            sizes: PartSizes {
                train: split.train.len(),
                validation: split.validation.len(),
                test: split.test.len(),
            },
            per_source,
        }
    }
}

/// Writes `train.jsonl`, `validation.jsonl`, `test.jsonl` and
/// `split_manifest.json` into `dir`.
pub fn write_split(dir: &Path, split: &DatasetSplit, spec: &SplitSpec) -> Result<SplitManifest> {
    std::fs::create_dir_all(dir)?;
    for (name, sentences) in split.parts() {
        let records: Vec<TextRecord> = sentences
            .iter()
            .map(|s| TextRecord {
                text: s.text.clone(),
                source_id: s.source_id.clone(),
            })
            .collect();
        jsonl::write_all(dir.join(format!("{name}.jsonl")), &records)?;
    }
    let manifest = SplitManifest::describe(split, spec);
    jsonl::write_json(dir.join("split_manifest.json"), &manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dedup::canonical_key;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn corpus(shares: &[(&str, usize)]) -> Vec<Sentence> {
        let mut out = Vec::new();
        for (source, n) in shares {
            for i in 0..*n {
                out.push(Sentence {
                    text: format!("{source} {i}."),
                    source_id: source.to_string(),
                    doc_index: i as u64,
                    sent_index: 0,
                    terminated: true,
                });
            }
        }
        out
    }

    fn count_source(items: &[Sentence], source: &str) -> usize {
        items.iter().filter(|s| s.source_id == source).count()
    }

    #[test]
    fn largest_remainder_hand_cases() {
        assert_eq!(largest_remainder(10, &[70, 30]), vec![7, 3]);
        // 10 * (5, 3, 2) / 10 is exact
        assert_eq!(largest_remainder(10, &[5, 3, 2]), vec![5, 3, 2]);
        // exact quotas 7 * (4, 4, 2) / 10 = 2.8, 2.8, 1.4: floors 2, 2, 1 and
        // the two leftover units go to the 0.8 remainders
        assert_eq!(largest_remainder(7, &[4, 4, 2]), vec![3, 3, 1]);
        // 5 * (1, 1, 1) / 3 = 1.67 each: floors 1, leftovers to the first two
        assert_eq!(largest_remainder(5, &[1, 1, 1]), vec![2, 2, 1]);
        assert_eq!(largest_remainder(3, &[0, 0]), vec![0, 0]);
    }

    #[test]
    fn stratified_sample_proportions() {
        let c = corpus(&[("a", 70), ("b", 30)]);
        let s = stratified_sample(&c, 10, 1).unwrap();
        assert_eq!((count_source(&s, "a"), count_source(&s, "b")), (7, 3));
        assert_eq!(stratified_sample(&c, 100, 1).unwrap(), c);
        assert_eq!(stratified_sample(&c, 10, 1).unwrap(), s);
        assert!(matches!(stratified_sample(&c, 101, 1), Err(Error::SampleTooLarge { .. })));
    }

    #[test]
    fn stratified_sample_fractional_quotas() {
        let c = corpus(&[("a", 4), ("b", 4), ("c", 2)]);
        let s = stratified_sample(&c, 7, 9).unwrap();
        assert_eq!(
            (count_source(&s, "a"), count_source(&s, "b"), count_source(&s, "c")),
            (3, 3, 1)
        );
    }

    #[test]
    fn split_sizes_and_errors() {
        let c = corpus(&[("a", 600), ("b", 400)]);
        let spec = SplitSpec {
            seed: 5,
            train_size: 989,
            val_size: 10,
            test_size: 1,
            stratify_by_source: true,
        };
        let parts = split(&c, &spec).unwrap();
        assert_eq!((parts.train.len(), parts.validation.len(), parts.test.len()), (989, 10, 1));
        assert_eq!(split(&c, &spec).unwrap(), parts);

        for bad in [(0, 1, 1), (1, 0, 1), (1, 1, 0), (999, 1, 1)] {
            let spec = SplitSpec {
                train_size: bad.0,
                val_size: bad.1,
                test_size: bad.2,
                ..spec
            };
            assert!(matches!(split(&c, &spec), Err(Error::SplitSizes(_))), "{bad:?}");
        }
    }

    #[test]
    fn stratified_split_keeps_source_shares() {
        let c = corpus(&[("a", 500), ("b", 300), ("c", 200)]);
        let spec = SplitSpec {
            seed: 42,
            train_size: 700,
            val_size: 200,
            test_size: 100,
            stratify_by_source: true,
        };
        let parts = split(&c, &spec).unwrap();
        for (part, want) in [(&parts.train, [350, 210, 140]), (&parts.validation, [100, 60, 40]), (&parts.test, [50, 30, 20])] {
            for (source, w) in ["a", "b", "c"].iter().zip(want) {
                let got = count_source(part, source) as i64;
                assert!((got - w).abs() <= 1, "{source}: {got} vs {w}");
            }
        }
    }

    #[test]
    fn allocation_repair_respects_capacity() {
        // tiny sources whose independently rounded quotas overshoot
        let counts = [1, 1, 1, 1, 1];
        let alloc = stratified_allocation(&counts, [3, 1, 1]);
        for (s, row) in alloc.iter().enumerate() {
            assert!(row.iter().sum::<usize>() <= counts[s]);
        }
        let totals: Vec<usize> = (0..3).map(|p| alloc.iter().map(|r| r[p]).sum()).collect();
        assert_eq!(totals, [3, 1, 1]);
    }

    #[test]
    fn manifest_counts_per_source() {
        let c = corpus(&[("a", 60), ("b", 40)]);
        let spec = SplitSpec {
            seed: 1,
            train_size: 80,
            val_size: 10,
            test_size: 10,
            stratify_by_source: true,
        };
        let parts = split(&c, &spec).unwrap();
        let m = SplitManifest::describe(&parts, &spec);
        assert_eq!(m.sizes, PartSizes { train: 80, validation: 10, test: 10 });
        assert_eq!(m.per_source.len(), 2);
        assert_eq!(m.per_source[0].train + m.per_source[1].train, 80);
        assert_eq!(m.per_source[0].source_id, "a");
        assert_eq!(m.per_source[0].validation, 6);
    }

    proptest! {
        #[test]
        fn parts_disjoint_and_exact(
            a in 1usize..40, b in 0usize..40, seed in any::<u64>(),
            t in 1usize..20, v in 1usize..10, te in 1usize..10, stratify in any::<bool>()
        ) {
            let c = corpus(&[("a", a), ("b", b)]);
            let spec = SplitSpec { seed, train_size: t, val_size: v, test_size: te, stratify_by_source: stratify };
            match split(&c, &spec) {
                Ok(parts) => {
                    prop_assert_eq!(parts.train.len(), t);
                    prop_assert_eq!(parts.validation.len(), v);
                    prop_assert_eq!(parts.test.len(), te);
                    let mut keys = HashSet::new();
                    for (_, p) in parts.parts() {
                        for s in p {
                            prop_assert!(keys.insert(canonical_key(&s.text)));
                        }
                    }
                }
                Err(Error::SplitSizes(_)) => prop_assert!(t + v + te > a + b),
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
        }
    }
}
