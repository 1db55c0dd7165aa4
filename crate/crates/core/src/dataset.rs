//! Speech Commands V1 ingestion: word directories, the standard
//! `validation_list.txt` / `testing_list.txt` split lists, the 11-class label
//! map and the feature cache.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::frontend::{decode_wav, mfcc, read_feature_cache, write_feature_cache, FeatureMatrix};
use crate::numerics::Tensor;

/// Keywords in class-index order.
pub const KEYWORDS: [&str; 10] = [
    "down", "go", "left", "no", "off", "on", "right", "stop", "up", "yes",
];

pub const FILLERS: [&str; 20] = [
    "bed", "bird", "cat", "dog", "happy", "house", "marvin", "sheila", "tree", "wow", "zero",
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
];

/// Class shared by every filler word.
pub const FILLER_CLASS: usize = 10;
pub const NUM_CLASSES: usize = 11;

pub const VALIDATION_LIST: &str = "validation_list.txt";
pub const TESTING_LIST: &str = "testing_list.txt";

pub fn label_of(word: &str) -> Result<usize> {
    if let Some(i) = KEYWORDS.iter().position(|&k| k == word) {
        Ok(i)
    } else if FILLERS.contains(&word) {
        Ok(FILLER_CLASS)
    } else {
        Err(Error::UnknownWord(word.to_string()))
    }
}

/// Printable name of a class: the keyword, or `"unknown"` for the filler class.
pub fn class_name(class: usize) -> &'static str {
    KEYWORDS.get(class).copied().unwrap_or("unknown")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            _ => Err(Error::Dataset(format!("unknown split {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub path: PathBuf,
    /// Path relative to the dataset root with `/` separators, e.g. `yes/0a7c2a8d_nohash_0.wav`.
    pub id: String,
    pub word: String,
    pub label: usize,
    pub split: Split,
}

#[derive(Debug, Clone)]
pub struct SplitManifest {
    pub root: PathBuf,
    pub examples: Vec<Example>,
    /// Directories skipped because their name is not one of the 30 words.
    pub skipped_dirs: Vec<String>,
}

impl SplitManifest {
    pub fn split(&self, split: Split) -> Vec<&Example> {
        self.examples.iter().filter(|e| e.split == split).collect()
    }

    /// Example counts in (train, dev, test) order.
    pub fn counts(&self) -> (usize, usize, usize) {
        let count = |s| self.examples.iter().filter(|e| e.split == s).count();
        (count(Split::Train), count(Split::Dev), count(Split::Test))
    }

    /// Keep only examples of the given words.
    pub fn restrict_to_words(&self, words: &[&str]) -> Result<Self> {
        for w in words {
            label_of(w)?;
        }
        Ok(Self {
            root: self.root.clone(),
            examples: self
                .examples
                .iter()
                .filter(|e| words.contains(&e.word.as_str()))
                .cloned()
                .collect(),
            skipped_dirs: self.skipped_dirs.clone(),
        })
    }
}

fn read_list(root: &Path, name: &str) -> Result<HashSet<String>> {
    let path = root.join(name);
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::Dataset(format!("cannot read split list {}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

/// Enumerate a Speech Commands V1 directory and assign the standard splits.
/// Directories starting with `_` (background noise) are ignored.
pub fn ingest(root: &Path) -> Result<SplitManifest> {
    if !root.is_dir() {
        return Err(Error::Dataset(format!(
            "{} is not a directory",
            root.display()
        )));
    }
    let validation = read_list(root, VALIDATION_LIST)?;
    let testing = read_list(root, TESTING_LIST)?;

    let mut dirs: Vec<(String, PathBuf)> = fs::read_dir(root)
        .map_err(|e| Error::from(e).at(root))?
        .filter_map(|entry| entry.ok())
        .filter(|entry| entry.path().is_dir())
        .map(|entry| {
            (
                entry.file_name().to_string_lossy().into_owned(),
                entry.path(),
            )
        })
        .collect();
    dirs.sort();

    let mut examples = Vec::new();
    let mut skipped_dirs = Vec::new();
    for (word, dir) in dirs {
        if word.starts_with('_') {
            continue;
        }
        let label = match label_of(&word) {
            Ok(label) => label,
            Err(_) => {
                warn!("skipping unknown word directory {}", dir.display());
                skipped_dirs.push(word);
                continue;
            }
        };
        let mut files: Vec<PathBuf> = WalkDir::new(&dir)
            .max_depth(1)
            .into_iter()
            .filter_map(|e| e.ok())
            .map(|e| e.into_path())
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "wav"))
            .collect();
        files.sort();
        for path in files {
            let file = path.file_name().unwrap().to_string_lossy();
            let id = format!("{word}/{file}");
            let split = if testing.contains(&id) {
                Split::Test
            } else if validation.contains(&id) {
                Split::Dev
            } else {
                Split::Train
            };
            examples.push(Example {
                path,
                id,
                word: word.clone(),
                label,
                split,
            });
        }
    }
    if examples.is_empty() {
        return Err(Error::Dataset(format!(
            "no keyword recordings found under {}",
            root.display()
        )));
    }
    Ok(SplitManifest {
        root: root.to_path_buf(),
        examples,
        skipped_dirs,
    })
}

/// Cache file of an example: `<cache>/<word>/<file>.stcf`.
pub fn cache_path(cache_dir: &Path, example: &Example) -> PathBuf {
    cache_dir.join(format!("{}.stcf", example.id))
}

/// Features of one recording at `f32` precision, read from the cache when
/// present and written to it otherwise.
pub fn features_for(example: &Example, cache_dir: Option<&Path>) -> Result<FeatureMatrix> {
    let cached = cache_dir.map(|dir| cache_path(dir, example));
    if let Some(path) = cached.as_deref().filter(|p| p.is_file()) {
        return read_feature_cache(path);
    }
    let features = compute_features(&example.path)?;
    if let Some(path) = cached {
        write_feature_cache(&path, &features)?;
    }
    Ok(features)
}

/// Decode and featurize a WAV file at `f32` precision.
pub fn compute_features(path: &Path) -> Result<FeatureMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::from(e).at(path))?;
    let wave = decode_wav(&bytes).map_err(|e| e.at(path))?;
    Ok(mfcc(&wave).map_err(|e| e.at(path))?.to_f32_precision())
}

/// Seeded permutation of `0..n` for one epoch.
pub fn epoch_order(n: usize, seed: u64, epoch: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

/// In-memory labeled features stored at `f32` precision.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureSet {
    frames: usize,
    coefficients: usize,
    data: Vec<f32>,
    labels: Vec<usize>,
    ids: Vec<String>,
}

impl FeatureSet {
    pub fn new(frames: usize, coefficients: usize) -> Self {
        Self {
            frames,
            coefficients,
            ..Self::default()
        }
    }

    pub fn push(
        &mut self,
        id: impl Into<String>,
        features: &FeatureMatrix,
        label: usize,
    ) -> Result<()> {
        let t = features.tensor();
        if t.shape() != [self.frames, self.coefficients] {
            return Err(Error::shape(
                "feature set",
                t.shape(),
                &[self.frames, self.coefficients],
            ));
        }
        self.data.extend(t.to_f32_vec());
        self.labels.push(label);
        self.ids.push(id.into());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn features(&self, i: usize) -> Result<FeatureMatrix> {
        let n = self.frames * self.coefficients;
        FeatureMatrix::new(Tensor::from_f32(
            vec![self.frames, self.coefficients],
            &self.data[i * n..(i + 1) * n],
        )?)
    }

    /// Stack the given examples into `[B, T, F]` with their labels.
    pub fn batch(&self, indices: &[usize]) -> Result<(Tensor, Vec<usize>)> {
        let n = self.frames * self.coefficients;
        let mut data = Vec::with_capacity(indices.len() * n);
        for &i in indices {
            data.extend(self.data[i * n..(i + 1) * n].iter().map(|&v| f64::from(v)));
        }
        let x = Tensor::new(vec![indices.len(), self.frames, self.coefficients], data)?;
        Ok((x, indices.iter().map(|&i| self.labels[i]).collect()))
    }

    pub fn epoch_order(&self, seed: u64, epoch: u64) -> Vec<usize> {
        epoch_order(self.len(), seed, epoch)
    }
}

/// Load every example of a split, in manifest order.
pub fn load_split(
    manifest: &SplitManifest,
    split: Split,
    cache_dir: Option<&Path>,
) -> Result<FeatureSet> {
    let mut set = FeatureSet::new(99, 40);
    for example in manifest.split(split) {
        let f = features_for(example, cache_dir)?;
        set.push(example.id.clone(), &f, example.label)?;
    }
    if set.is_empty() {
        return Err(Error::EmptySplit(split.name()));
    }
    Ok(set)
}

/// Lazily featurized mini-batches of one split in seeded epoch order.
pub struct Batches<'a> {
    examples: Vec<&'a Example>,
    order: Vec<usize>,
    batch_size: usize,
    next: usize,
    cache_dir: Option<PathBuf>,
}

impl Iterator for Batches<'_> {
    type Item = Result<(Tensor, Vec<usize>)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.order.len() {
            return None;
        }
        let end = (self.next + self.batch_size).min(self.order.len());
        let chunk = &self.order[self.next..end];
        self.next = end;
        let mut set = FeatureSet::new(99, 40);
        for &i in chunk {
            let example = self.examples[i];
            let f = match features_for(example, self.cache_dir.as_deref()) {
                Ok(f) => f,
                Err(e) => return Some(Err(e)),
            };
            if let Err(e) = set.push(example.id.clone(), &f, example.label) {
                return Some(Err(e));
            }
        }
        let all: Vec<usize> = (0..set.len()).collect();
        Some(set.batch(&all))
    }
}

pub fn batches<'a>(
    manifest: &'a SplitManifest,
    split: Split,
    batch_size: usize,
    seed: u64,
    epoch: u64,
    cache_dir: Option<&Path>,
) -> Result<Batches<'a>> {
    let examples = manifest.split(split);
    if examples.is_empty() {
        return Err(Error::EmptySplit(split.name()));
    }
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let order = epoch_order(examples.len(), seed, epoch);
    Ok(Batches {
        examples,
        order,
        batch_size,
        next: 0,
        cache_dir: cache_dir.map(Path::to_path_buf),
    })
}
