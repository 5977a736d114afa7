use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::types::{ClusterId, CoreferenceChain, DatasetSplit, Mention, SplitName};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: DatasetSplit,
    pub dev: DatasetSplit,
    pub test: DatasetSplit,
}

impl Splits {
    pub fn get(&self, name: SplitName) -> &DatasetSplit {
        match name {
            SplitName::Train => &self.train,
            SplitName::Dev => &self.dev,
            SplitName::Test => &self.test,
        }
    }

    /// Split each cluster id was assigned to.
    pub fn assignment(&self, cluster_id: ClusterId) -> Option<SplitName> {
        SplitName::ALL
            .into_iter()
            .find(|&n| self.get(n).chains.iter().any(|c| c.cluster_id == cluster_id))
    }
}

/// Samples `n_eval_clusters` chains uniformly without replacement (seeded),
/// assigns them in sampling order to dev until dev holds `dev_fraction` of the
/// sampled mentions, the rest to test. Everything else is train.
pub fn make_splits(
    chains: Vec<CoreferenceChain>,
    n_eval_clusters: usize,
    dev_fraction: f64,
    seed: u64,
) -> Result<Splits> {
    if !(0.0..=1.0).contains(&dev_fraction) {
        return Err(Error::Config(format!("dev fraction {dev_fraction} outside [0, 1]")));
    }
    if n_eval_clusters > 0 && n_eval_clusters >= chains.len() {
        return Err(Error::Config(format!(
            "cannot draw {n_eval_clusters} evaluation clusters from {} chains",
            chains.len()
        )));
    }
    let mut chains = chains;
    chains.sort_by_key(|c| c.cluster_id);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampled = rand::seq::index::sample(&mut rng, chains.len(), n_eval_clusters).into_vec();

    let eval_mentions: usize = sampled.iter().map(|&i| chains[i].mentions.len()).sum();
    let dev_target = (dev_fraction * eval_mentions as f64).round() as usize;
    let mut dev_idx = BTreeSet::new();
    let mut test_idx = BTreeSet::new();
    let mut dev_count = 0;
    for &i in &sampled {
        if dev_count < dev_target {
            dev_count += chains[i].mentions.len();
            dev_idx.insert(i);
        } else {
            test_idx.insert(i);
        }
    }

    let (mut train, mut dev, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (i, chain) in chains.into_iter().enumerate() {
        if dev_idx.contains(&i) {
            dev.push(chain);
        } else if test_idx.contains(&i) {
            test.push(chain);
        } else {
            train.push(chain);
        }
    }
    Ok(Splits {
        train: DatasetSplit {
            name: SplitName::Train,
            chains: train,
        },
        dev: DatasetSplit {
            name: SplitName::Dev,
            chains: dev,
        },
        test: DatasetSplit {
            name: SplitName::Test,
            chains: test,
        },
    })
}

/// Drops every train mention whose source article also contributed a
/// validated evaluation mention. Chains left empty are removed.
pub fn purge_train_leakage<'a, I>(train: &DatasetSplit, validated_eval: I) -> (DatasetSplit, usize)
where
    I: IntoIterator<Item = &'a Mention>,
{
    let sources: BTreeSet<&str> = validated_eval.into_iter().map(|m| m.source_title.as_str()).collect();
    let mut removed = 0;
    let chains = train
        .chains
        .iter()
        .filter_map(|c| {
            let mentions: Vec<Mention> = c
                .mentions
                .iter()
                .filter(|m| {
                    let leak = sources.contains(m.source_title.as_str());
                    removed += leak as usize;
                    !leak
                })
                .cloned()
                .collect();
            (!mentions.is_empty()).then(|| CoreferenceChain {
                cluster_id: c.cluster_id,
                pivot_title: c.pivot_title.clone(),
                mentions,
            })
        })
        .collect();
    (
        DatasetSplit {
            name: train.name,
            chains,
        },
        removed,
    )
}
