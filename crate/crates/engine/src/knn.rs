//! Incrementally trained k-nearest-neighbour classifier.
//!
//! Samples are kept in insertion order in a bounded FIFO; classification is a
//! linear scan, which is plenty at the default capacity of 10 000.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::EngineError;
use crate::features::FeatureVector;
use radaa_token::RiskClass;

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_CAPACITY: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    samples: VecDeque<(FeatureVector, RiskClass)>,
    k: usize,
    max_samples: usize,
}

impl Default for KnnModel {
    fn default() -> Self {
        Self::new(DEFAULT_K, DEFAULT_CAPACITY).expect("defaults are valid")
    }
}

impl KnnModel {
    /// `k` should be odd; even values are accepted and resolve vote ties toward higher risk.
    pub fn new(k: usize, max_samples: usize) -> Result<Self, EngineError> {
        if k == 0 {
            return Err(EngineError::InvalidKnn("k must be positive"));
        }
        if max_samples == 0 {
            return Err(EngineError::InvalidKnn("capacity must be positive"));
        }
        Ok(Self {
            samples: VecDeque::new(),
            k,
            max_samples,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn capacity(&self) -> usize {
        self.max_samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = &(FeatureVector, RiskClass)> {
        self.samples.iter()
    }

    /// Appends a labelled sample, evicting the oldest when over capacity.
    pub fn observe(&mut self, f: FeatureVector, label: RiskClass) {
        self.samples.push_back((f, label));
        while self.samples.len() > self.max_samples {
            self.samples.pop_front();
        }
    }

    /// Majority label among the `min(k, len)` nearest samples.
    ///
    /// Equal distances keep insertion order; equal vote counts go to the
    /// riskier class.
    pub fn classify(&self, f: &FeatureVector) -> Result<RiskClass, EngineError> {
        if self.samples.is_empty() {
            return Err(EngineError::EmptyModel);
        }
        let mut ranked: Vec<(f64, usize, RiskClass)> = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, (s, label))| (s.distance(f), i, *label))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let k = self.k.min(ranked.len());
        let mut votes = [0usize; 3];
        for (_, _, label) in &ranked[..k] {
            votes[*label as usize] += 1;
        }
        let best = *votes.iter().max().expect("three classes");
        Ok(RiskClass::ALL
            .iter()
            .rev()
            .copied()
            .find(|c| votes[*c as usize] == best)
            .expect("some class holds the max"))
    }

    /// Samples as a JSON-friendly list of `(vector, label)` pairs.
    pub fn snapshot(&self) -> Vec<(FeatureVector, RiskClass)> {
        self.samples.iter().copied().collect()
    }

    /// Rebuilds a model from a snapshot, keeping only the newest `max_samples`.
    pub fn from_snapshot(
        k: usize,
        max_samples: usize,
        samples: Vec<(FeatureVector, RiskClass)>,
    ) -> Result<Self, EngineError> {
        let mut m = Self::new(k, max_samples)?;
        for (f, l) in samples {
            m.observe(f, l);
        }
        Ok(m)
    }
}

/// On-disk form of a model: the sample list only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KnnSnapshot(pub Vec<(FeatureVector, RiskClass)>);
