//! Decision-tree classifier that predicts the building type from meter
//! count, volume and the PV/heat-pump flags.

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::town::{Building, BuildingType};

pub const FEATURE_COUNT: usize = 4;
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = ["meter_count", "volume_m3", "has_pv", "has_heat_pump"];

const CLASS_COUNT: usize = 3;

/// A labeled training record for the building-type classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBuildingExample {
    pub meter_count: u32,
    pub volume_m3: f64,
    pub has_pv: bool,
    pub has_heat_pump: bool,
    pub label: BuildingType,
}

impl LabeledBuildingExample {
    pub fn features(&self) -> [f64; FEATURE_COUNT] {
        [
            f64::from(self.meter_count),
            self.volume_m3,
            f64::from(u8::from(self.has_pv)),
            f64::from(u8::from(self.has_heat_pump)),
        ]
    }
}

/// Feature vector of a building in the order the tree was trained on.
pub fn building_features<S: Scalar>(b: &Building<S>) -> [f64; FEATURE_COUNT] {
    [
        f64::from(b.meter_count),
        b.volume_m3.as_f64(),
        f64::from(u8::from(b.has_pv)),
        f64::from(u8::from(b.has_heat_pump)),
    ]
}

#[derive(Debug, Clone)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        label: BuildingType,
        counts: [usize; CLASS_COUNT],
    },
}

impl Node {
    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// Binary classification tree grown by greedy Gini-impurity splitting.
#[derive(Debug, Clone)]
pub struct DecisionTree {
    root: Node,
    training_accuracy: f64,
}

impl DecisionTree {
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Share of training examples the grown tree classifies correctly.
    pub fn training_accuracy(&self) -> f64 {
        self.training_accuracy
    }

    pub fn classify(&self, features: [f64; FEATURE_COUNT]) -> BuildingType {
        self.classify_with_counts(features).0
    }

    /// Predicted label plus the training-class frequencies of the leaf
    /// the input lands in.
    pub fn classify_with_counts(
        &self,
        features: [f64; FEATURE_COUNT],
    ) -> (BuildingType, [usize; CLASS_COUNT]) {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label, counts } => return (*label, *counts),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if features[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn classify_building<S: Scalar>(&self, building: &Building<S>) -> BuildingType {
        self.classify(building_features(building))
    }
}

/// Gini impurity of a class-count vector.
pub fn gini(counts: &[usize; CLASS_COUNT]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            p * p
        })
        .sum::<f64>()
}

fn class_counts(examples: &[&LabeledBuildingExample]) -> [usize; CLASS_COUNT] {
    let mut counts = [0usize; CLASS_COUNT];
    for ex in examples {
        counts[ex.label.index()] += 1;
    }
    counts
}

fn majority(counts: &[usize; CLASS_COUNT]) -> BuildingType {
    let mut best = 0;
    for (i, c) in counts.iter().enumerate() {
        if *c > counts[best] {
            best = i;
        }
    }
    BuildingType::from_index(best)
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    weighted_gini: f64,
}

/// Scan every (feature, midpoint-threshold) split; ties keep the first
/// candidate in feature order, thresholds ascending.
fn best_split(examples: &[&LabeledBuildingExample], min_leaf: usize) -> Option<BestSplit> {
    let n = examples.len() as f64;
    let mut best: Option<BestSplit> = None;
    for feature in 0..FEATURE_COUNT {
        let mut values: Vec<f64> = examples.iter().map(|ex| ex.features()[feature]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite features"));
        values.dedup();
        for pair in values.windows(2) {
            let threshold = (pair[0] + pair[1]) / 2.0;
            let mut left = [0usize; CLASS_COUNT];
            let mut right = [0usize; CLASS_COUNT];
            for ex in examples {
                if ex.features()[feature] <= threshold {
                    left[ex.label.index()] += 1;
                } else {
                    right[ex.label.index()] += 1;
                }
            }
            let nl: usize = left.iter().sum();
            let nr: usize = right.iter().sum();
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let weighted = (nl as f64 * gini(&left) + nr as f64 * gini(&right)) / n;
            let better = match &best {
                None => true,
                Some(b) => weighted < b.weighted_gini - 1e-12,
            };
            if better {
                best = Some(BestSplit {
                    feature,
                    threshold,
                    weighted_gini: weighted,
                });
            }
        }
    }
    best
}

fn grow(examples: &[&LabeledBuildingExample], depth_left: usize, min_leaf: usize) -> Node {
    let counts = class_counts(examples);
    let node_gini = gini(&counts);
    if depth_left == 0 || node_gini == 0.0 {
        return Node::Leaf {
            label: majority(&counts),
            counts,
        };
    }
    let split = match best_split(examples, min_leaf) {
        Some(s) if s.weighted_gini < node_gini - 1e-12 => s,
        _ => {
            return Node::Leaf {
                label: majority(&counts),
                counts,
            }
        }
    };
    let (left, right): (Vec<_>, Vec<_>) = examples
        .iter()
        .partition(|ex| ex.features()[split.feature] <= split.threshold);
    Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow(&left, depth_left - 1, min_leaf)),
        right: Box::new(grow(&right, depth_left - 1, min_leaf)),
    }
}

/// Train a tree by greedy recursive partitioning on Gini impurity.
pub fn train_tree(
    examples: &[LabeledBuildingExample],
    max_depth: usize,
    min_leaf: usize,
) -> Result<DecisionTree> {
    if examples.is_empty() {
        return Err(CoreError::Training("empty training set".into()));
    }
    let refs: Vec<&LabeledBuildingExample> = examples.iter().collect();
    let root = grow(&refs, max_depth, min_leaf.max(1));
    let mut tree = DecisionTree {
        root,
        training_accuracy: 0.0,
    };
    let correct = examples
        .iter()
        .filter(|ex| tree.classify(ex.features()) == ex.label)
        .count();
    tree.training_accuracy = correct as f64 / examples.len() as f64;
    Ok(tree)
}

/// Classifier used by the synthesis pipeline: a trained tree, or the
/// meter-count rule when no training data is available.
#[derive(Debug, Clone)]
pub enum BuildingClassifier {
    Tree(DecisionTree),
    /// 1 meter → single-family, 2 → two-family, 3+ → apartment tower.
    MeterRule,
}

impl BuildingClassifier {
    pub fn classify_building<S: Scalar>(&self, building: &Building<S>) -> BuildingType {
        match self {
            BuildingClassifier::Tree(tree) => tree.classify_building(building),
            BuildingClassifier::MeterRule => match building.meter_count {
                0 | 1 => BuildingType::SingleFamily,
                2 => BuildingType::TwoFamily,
                _ => BuildingType::ApartmentTower,
            },
        }
    }

    pub fn training_accuracy(&self) -> Option<f64> {
        match self {
            BuildingClassifier::Tree(tree) => Some(tree.training_accuracy()),
            BuildingClassifier::MeterRule => None,
        }
    }
}
