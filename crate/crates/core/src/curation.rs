//! Training-class curation: remove training classes whose semantic distance
//! to any test class is at or below a threshold tau, and report the
//! nearest-test-class distances.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Result, ZslError};
use crate::math::Scalar;
use crate::wordvec::{cosine_distance, ClassName, SemanticEmbedding};

/// Named set of classes with their semantic embeddings.
#[derive(Debug, Clone)]
pub struct ClassSet<F> {
    name: String,
    classes: Vec<(ClassName, SemanticEmbedding<F>)>,
}

impl<F: Scalar> ClassSet<F> {
    pub fn new(name: impl Into<String>, classes: Vec<(ClassName, SemanticEmbedding<F>)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut dim = None;
        for (c, e) in &classes {
            if !seen.insert(c.raw().to_string()) {
                return Err(ZslError::Invalid(format!(
                    "duplicate class '{}' in set",
                    c.raw()
                )));
            }
            match dim {
                None => dim = Some(e.dim()),
                Some(d) if d != e.dim() => {
                    return Err(ZslError::DimensionMismatch {
                        expected: d,
                        got: e.dim(),
                    })
                }
                _ => {}
            }
        }
        Ok(ClassSet {
            name: name.into(),
            classes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.classes.first().map(|(_, e)| e.dim())
    }

    pub fn classes(&self) -> &[(ClassName, SemanticEmbedding<F>)] {
        &self.classes
    }

    pub fn class(&self, i: usize) -> &(ClassName, SemanticEmbedding<F>) {
        &self.classes[i]
    }

    pub fn index_of(&self, raw: &str) -> Option<usize> {
        self.classes.iter().position(|(c, _)| c.raw() == raw)
    }

    /// Union of two sets; duplicate raw names keep the first occurrence.
    pub fn union(&self, other: &ClassSet<F>) -> Result<ClassSet<F>> {
        let mut classes = self.classes.clone();
        let seen: HashSet<String> = classes.iter().map(|(c, _)| c.raw().to_string()).collect();
        for (c, e) in &other.classes {
            if !seen.contains(c.raw()) {
                classes.push((c.clone(), e.clone()));
            }
        }
        ClassSet::new(format!("{}+{}", self.name, other.name), classes)
    }

    pub fn scaled(&self, factor: F) -> ClassSet<F> {
        ClassSet {
            name: self.name.clone(),
            classes: self
                .classes
                .iter()
                .map(|(c, e)| (c.clone(), e.scaled(factor)))
                .collect(),
        }
    }
}

/// One removed training class with the test class that triggered removal.
#[derive(Debug, Clone)]
pub struct RemovedClass {
    pub train_class: ClassName,
    pub nearest_test_class: ClassName,
    pub distance: f64,
}

/// Result of filtering a training class set against a test union.
#[derive(Debug, Clone)]
pub struct CurationResult<F> {
    pub kept: ClassSet<F>,
    pub removed: Vec<RemovedClass>,
    pub tau: f64,
}

/// Eq. of the class metric: cosine distance between the two embeddings.
pub fn class_distance<F: Scalar>(
    c1: &SemanticEmbedding<F>,
    c2: &SemanticEmbedding<F>,
) -> Result<F> {
    cosine_distance(c1.as_slice(), c2.as_slice())
}

fn nearest_test<F: Scalar>(
    embedding: &SemanticEmbedding<F>,
    test: &ClassSet<F>,
) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, (_, te)) in test.classes().iter().enumerate() {
        let d = class_distance(embedding, te)?.to_f64_lossy();
        // ties broken by lowest test-class index: strict < keeps the first
        match best {
            Some((_, bd)) if d >= bd => {}
            _ => best = Some((j, d)),
        }
    }
    best.ok_or_else(|| ZslError::EmptyInput("test class set".into()))
}

/// Keep training classes whose nearest-test-class distance is strictly
/// greater than tau; removed classes are reported sorted ascending by
/// distance.
pub fn filter_training_classes<F: Scalar>(
    train: &ClassSet<F>,
    test_union: &ClassSet<F>,
    tau: f64,
) -> Result<CurationResult<F>> {
    if train.is_empty() {
        return Err(ZslError::EmptyInput("training class set".into()));
    }
    if test_union.is_empty() {
        return Err(ZslError::EmptyInput("test class set".into()));
    }
    if tau < 0.0 {
        return Err(ZslError::InvalidConfig("tau must be >= 0".into()));
    }
    let (td, ud) = (train.dim().unwrap(), test_union.dim().unwrap());
    if td != ud {
        return Err(ZslError::DimensionMismatch {
            expected: td,
            got: ud,
        });
    }

    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for (c, e) in train.classes() {
        let (j, d) = nearest_test(e, test_union)?;
        if d > tau {
            kept.push((c.clone(), e.clone()));
        } else {
            removed.push(RemovedClass {
                train_class: c.clone(),
                nearest_test_class: test_union.class(j).0.clone(),
                distance: d,
            });
        }
    }
    removed.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    Ok(CurationResult {
        kept: ClassSet::new(format!("{}-curated", train.name()), kept)?,
        removed,
        tau,
    })
}

/// The `top_n` training classes nearest to the test set, ascending by
/// distance. `top_n` is clamped to the training set size.
pub fn nearest_test_class_report<F: Scalar>(
    train: &ClassSet<F>,
    test: &ClassSet<F>,
    top_n: usize,
) -> Result<Vec<RemovedClass>> {
    if train.is_empty() || test.is_empty() {
        return Err(ZslError::EmptyInput("class set".into()));
    }
    let mut all: Vec<RemovedClass> = Vec::with_capacity(train.len());
    for (c, e) in train.classes() {
        let (j, d) = nearest_test(e, test)?;
        all.push(RemovedClass {
            train_class: c.clone(),
            nearest_test_class: test.class(j).0.clone(),
            distance: d,
        });
    }
    all.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    all.truncate(top_n.min(train.len()));
    Ok(all)
}

/// Class lists: UTF-8 text, one class name per line, order preserved.
pub fn load_class_list(path: &Path) -> Result<Vec<ClassName>> {
    let file = File::open(path).map_err(|e| ZslError::io(path, e))?;
    let mut names = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ZslError::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        names.push(
            ClassName::parse(trimmed).map_err(|e| ZslError::parse(path, idx + 1, e.to_string()))?,
        );
    }
    if names.is_empty() {
        return Err(ZslError::EmptyInput(format!(
            "class list {}",
            path.display()
        )));
    }
    Ok(names)
}
