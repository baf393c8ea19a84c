//! Base classifiers `f̄`: the black boxes the smoothed classifier queries.

pub mod builtin;
pub mod external;
pub mod rules;

use std::sync::Arc;

use crate::error::Result;

pub use builtin::{train_builtin, BuiltinModel, DEFAULT_SAMPLES_PER_INSTANCE};
pub use external::{ExternalClassifier, TransportError};
pub use rules::{ConstantClassifier, KeywordClassifier, RuleClassifier};

/// A deterministic text classifier. Randomness belongs to the smoothing
/// mechanism, never to the classifier.
pub trait BaseClassifier: Send + Sync {
    fn num_classes(&self) -> usize;

    /// One label per text, in order.
    fn classify_batch(&self, texts: &[String]) -> Result<Vec<usize>>;

    fn classify(&self, text: &str) -> Result<usize> {
        Ok(self.classify_batch(&[text.to_owned()])?[0])
    }
}

impl<T: BaseClassifier + ?Sized> BaseClassifier for &T {
    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }

    fn classify_batch(&self, texts: &[String]) -> Result<Vec<usize>> {
        (**self).classify_batch(texts)
    }
}

impl<T: BaseClassifier + ?Sized> BaseClassifier for Box<T> {
    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }

    fn classify_batch(&self, texts: &[String]) -> Result<Vec<usize>> {
        (**self).classify_batch(texts)
    }
}

impl<T: BaseClassifier + ?Sized> BaseClassifier for Arc<T> {
    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }

    fn classify_batch(&self, texts: &[String]) -> Result<Vec<usize>> {
        (**self).classify_batch(texts)
    }
}

/// Index of the largest value, ties toward the lowest index.
pub(crate) fn argmax_lowest<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
