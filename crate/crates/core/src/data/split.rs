use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::nn::Label;
use crate::rng::rng_from_seed;

/// Train/test row indices, each ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Holds out `round(n * test_fraction)` rows (per class when stratified).
pub fn split(labels: &[Label], test_fraction: f64, seed: u64, stratified: bool) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction {test_fraction} is outside (0, 1)"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut test = Vec::new();
    if stratified {
        let mut by_class: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            by_class.entry(l).or_default().push(i);
        }
        for (label, mut idx) in by_class {
            if idx.len() < 2 {
                return Err(Error::Data(format!(
                    "class {} has {} sample(s); stratification needs at least 2",
                    label.as_str(),
                    idx.len()
                )));
            }
            idx.shuffle(&mut rng);
            let take = (idx.len() as f64 * test_fraction).round() as usize;
            test.extend_from_slice(&idx[..take]);
        }
    } else {
        let mut idx: Vec<usize> = (0..labels.len()).collect();
        idx.shuffle(&mut rng);
        let take = (labels.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&idx[..take]);
    }
    test.sort_unstable();
    let mut is_test = vec![false; labels.len()];
    test.iter().for_each(|&i| is_test[i] = true);
    let train = (0..labels.len()).filter(|&i| !is_test[i]).collect();
    Ok(SplitIndices { train, test })
}
