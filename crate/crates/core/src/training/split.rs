use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Example, TrainConfig};
use crate::error::{Error, Result};

/// Indices into the dataset, each side in ascending order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

const SPLIT_STREAM: u64 = 1;

/// Seeded shuffle-and-cut, done separately for every speaker so that each
/// speaker contributes the same train/test ratio. With `group_by_script`
/// the units being shuffled are scripts (records sharing a transcript), so
/// all renditions of one script land on the same side.
pub fn split_dataset(data: &[Example], cfg: &TrainConfig) -> Result<Split> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(SPLIT_STREAM);

    let mut by_speaker: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, ex) in data.iter().enumerate() {
        by_speaker.entry(ex.speaker.as_str()).or_default().push(i);
    }

    let mut split = Split::default();
    for members in by_speaker.values() {
        let mut units: Vec<Vec<usize>> = if cfg.group_by_script {
            let mut scripts: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for &i in members {
                scripts.entry(data[i].script.as_str()).or_default().push(i);
            }
            scripts.into_values().collect()
        } else {
            members.iter().map(|&i| vec![i]).collect()
        };
        units.shuffle(&mut rng);
        let target = (cfg.split_ratio * members.len() as f64).round() as usize;
        let mut taken = 0;
        for unit in units {
            if taken < target {
                taken += unit.len();
                split.train.extend(unit);
            } else {
                split.test.extend(unit);
            }
        }
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::Config(format!(
            "split of {} records at ratio {} leaves an empty side",
            data.len(),
            cfg.split_ratio
        )));
    }
    Ok(split)
}
