//! Fixed-rule classifiers, mostly useful as exact test doubles.

use super::BaseClassifier;
use crate::error::Result;

/// Always predicts the same class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstantClassifier {
    pub class: usize,
    pub num_classes: usize,
}

impl ConstantClassifier {
    pub fn new(class: usize, num_classes: usize) -> Self {
        assert!(class < num_classes);
        Self { class, num_classes }
    }
}

impl BaseClassifier for ConstantClassifier {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn classify_batch(&self, texts: &[String]) -> Result<Vec<usize>> {
        Ok(vec![self.class; texts.len()])
    }
}

/// Class 1 if any whitespace token equals the keyword, else class 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordClassifier {
    pub keyword: String,
}

impl KeywordClassifier {
    pub fn new(keyword: impl Into<String>) -> Self {
        Self {
            keyword: keyword.into(),
        }
    }
}

impl BaseClassifier for KeywordClassifier {
    fn num_classes(&self) -> usize {
        2
    }

    fn classify_batch(&self, texts: &[String]) -> Result<Vec<usize>> {
        Ok(texts
            .iter()
            .map(|t| usize::from(t.split_whitespace().any(|w| w == self.keyword)))
            .collect())
    }
}

/// Classifier defined by a closure over the whitespace tokens of a text.
pub struct RuleClassifier<F> {
    rule: F,
    num_classes: usize,
}

impl<F> RuleClassifier<F>
where
    F: Fn(&[&str]) -> usize + Send + Sync,
{
    pub fn new(num_classes: usize, rule: F) -> Self {
        Self { rule, num_classes }
    }
}

impl<F> BaseClassifier for RuleClassifier<F>
where
    F: Fn(&[&str]) -> usize + Send + Sync,
{
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn classify_batch(&self, texts: &[String]) -> Result<Vec<usize>> {
        Ok(texts
            .iter()
            .map(|t| {
                let tokens: Vec<&str> = t.split_whitespace().collect();
                let c = (self.rule)(&tokens);
                debug_assert!(c < self.num_classes);
                c
            })
            .collect())
    }
}
