use crate::config::{Depth, Variant};

/// Where an action comes from when acting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActSource {
    /// Sample from the network's policy prior.
    PriorSample,
    /// Use the search policy: sampled during training, most visited in evaluation.
    SearchPolicy,
}

/// What each ablation turns on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VariantPreset {
    /// Tree depth of the search that produces learning targets.
    pub learn_d_tree: Depth,
    pub act_train: ActSource,
    pub act_eval: ActSource,
    pub unroll_k: u32,
}

impl VariantPreset {
    pub fn of(variant: Variant) -> Self {
        use ActSource::*;
        let (learn_d_tree, act_train, act_eval, unroll_k) = match variant {
            Variant::OneStep => (Depth::Limited(1), PriorSample, PriorSample, 1),
            Variant::Learn => (Depth::Unbounded, PriorSample, PriorSample, 5),
            Variant::Data => (Depth::Limited(1), SearchPolicy, PriorSample, 5),
            Variant::LearnData => (Depth::Unbounded, SearchPolicy, PriorSample, 5),
            Variant::LearnDataEval => (Depth::Unbounded, SearchPolicy, SearchPolicy, 5),
        };
        Self {
            learn_d_tree,
            act_train,
            act_eval,
            unroll_k,
        }
    }

    /// Depth of the target search given the configured tree depth.
    pub fn target_depth(&self, configured: Depth) -> Depth {
        self.learn_d_tree.min(configured)
    }

    /// True when acting needs a second, full-depth search next to the target search.
    pub fn separate_acting_search(&self, configured: Depth) -> bool {
        self.act_train == ActSource::SearchPolicy && self.target_depth(configured) != configured
    }
}
