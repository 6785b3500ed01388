use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DataError, Dataset, Result, Sex};

/// Subject-disjoint, class-stratified fold assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, subject_id: &str) -> Option<usize> {
        self.assignments.get(subject_id).copied()
    }

    pub fn subjects_in(&self, fold: usize) -> impl Iterator<Item = &str> {
        self.assignments.iter().filter(move |(_, &f)| f == fold).map(|(s, _)| s.as_str())
    }
}

/// Shuffles each class's subjects with a seeded generator and deals them round-robin.
/// The second class continues where the first stopped, so fold sizes differ by at most
/// one subject and per-fold class counts are `floor` or `ceil` of `n_class / k`.
pub fn make_folds(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    let subjects = dataset.subjects();
    let by_class = |sex| subjects.iter().filter(|(_, s)| *s == sex).map(|(id, _)| *id).collect::<Vec<_>>();
    let mut female = by_class(Sex::Female);
    let mut male = by_class(Sex::Male);
    let minority = female.len().min(male.len());
    if k == 0 || (k > 1 && k > minority) {
        return Err(DataError::TooFewSubjects { k, minority });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    female.shuffle(&mut rng);
    male.shuffle(&mut rng);
    let mut assignments = BTreeMap::new();
    for (pos, id) in female.iter().chain(male.iter()).enumerate() {
        assignments.insert(id.to_string(), pos % k);
    }
    Ok(FoldPlan { k, assignments })
}
