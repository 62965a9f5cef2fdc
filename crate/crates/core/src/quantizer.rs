//! Codebook training by repeated splitting with random mutation, interleaved
//! with Lloyd passes (nearest-centroid assignment, then migration of every
//! centroid to the mean of its members).
//!
//! Training starts from the global mean. Each round keeps every centroid and
//! appends a perturbed copy of it, so a codebook of size `2^T` takes `T`
//! rounds. Cells left without members after an assignment are re-seeded from
//! the cell carrying the most distortion.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::pixelgrid::{BlockVector, BLOCK_DIM};
use crate::rng::SplitMix64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("codebook size {0} is not a power of two >= 2")]
    BadTargetSize(usize),
    #[error("perturbation width must be finite and positive, got {0}")]
    BadDelta(f64),
    #[error("inner_iters must be at least 1")]
    ZeroInnerIters,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodebookError {
    #[error("a codebook needs at least one centroid")]
    Empty,
    #[error("centroid {index} has a component outside [0, 255]")]
    OutOfRange { index: usize },
}

/// An ordered set of centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    centroids: Vec<BlockVector>,
}

impl Codebook {
    pub fn new(centroids: Vec<BlockVector>) -> Result<Self, CodebookError> {
        if centroids.is_empty() {
            return Err(CodebookError::Empty);
        }
        if let Some(index) = centroids.iter().position(|c| !c.is_feasible()) {
            return Err(CodebookError::OutOfRange { index });
        }
        Ok(Self { centroids })
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn centroids(&self) -> &[BlockVector] {
        &self.centroids
    }

    pub fn get(&self, index: usize) -> Option<&BlockVector> {
        self.centroids.get(index)
    }
}

/// Owning centroid of every training vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Membership {
    owner: Vec<usize>,
}

impl Membership {
    pub fn owners(&self) -> &[usize] {
        &self.owner
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    /// Member count of each of the `cells` centroids.
    pub fn populations(&self, cells: usize) -> Vec<usize> {
        let mut counts = vec![0; cells];
        for &j in &self.owner {
            counts[j] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    /// Final codebook size; a power of two, at least 2.
    pub target_size: usize,
    /// Half-width of the uniform mutation noise, in intensity units.
    pub delta: f64,
    pub seed: u64,
    /// Lloyd passes after each doubling.
    pub inner_iters: usize,
    /// Extra Lloyd passes once the target size is reached.
    pub refine_iters: usize,
}

impl TrainerConfig {
    pub fn new(target_size: usize) -> Self {
        Self {
            target_size,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.target_size < 2 || !self.target_size.is_power_of_two() {
            return Err(TrainError::BadTargetSize(self.target_size));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(TrainError::BadDelta(self.delta));
        }
        if self.inner_iters == 0 {
            return Err(TrainError::ZeroInnerIters);
        }
        Ok(())
    }

    /// Number of doubling rounds, `log2(target_size)`.
    pub fn rounds(&self) -> u32 {
        self.target_size.trailing_zeros()
    }
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            target_size: 64,
            delta: 1.0,
            seed: 0,
            inner_iters: 1,
            refine_iters: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassRecord {
    pub codebook_size: usize,
    /// Mean squared error per pixel component after the pass.
    pub distortion: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerReport {
    pub rounds: Vec<PassRecord>,
    pub elapsed: Duration,
}

impl TrainerReport {
    pub fn final_distortion(&self) -> Option<f64> {
        self.rounds.last().map(|p| p.distortion)
    }
}

/// Source of the random centroid mutations.
#[derive(Debug, Clone)]
pub struct Mutator {
    rng: SplitMix64,
    delta: f64,
}

impl Mutator {
    /// `delta` may be zero here, which makes every mutation the identity.
    pub fn new(seed: u64, delta: f64) -> Self {
        Self {
            rng: SplitMix64::new(seed),
            delta,
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Adds independent uniform noise in `[-delta, delta]` to each component
    /// and clamps to `[0, 255]`. Consumes exactly four draws.
    pub fn perturb_center(&mut self, center: &BlockVector) -> BlockVector {
        let mut out = *center;
        for v in out.0.iter_mut() {
            *v = (*v + self.rng.next_symmetric(self.delta)).clamp(0.0, 255.0);
        }
        out
    }
}

/// Size-1 codebook holding the component-wise mean of `vectors`.
pub fn init_codebook(vectors: &[BlockVector]) -> Result<Codebook, TrainError> {
    if vectors.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let mut sum = [0.0; BLOCK_DIM];
    for v in vectors {
        for (s, x) in sum.iter_mut().zip(v.0.iter()) {
            *s += x;
        }
    }
    let n = vectors.len() as f64;
    Ok(Codebook {
        centroids: vec![mean_of(sum, n)],
    })
}

#[inline]
fn mean_of(sum: [f64; BLOCK_DIM], count: f64) -> BlockVector {
    // Rounding can push a mean of in-range values a hair past the bounds.
    BlockVector(sum.map(|s| (s / count).clamp(0.0, 255.0)))
}

/// Keeps every centroid in place and appends a mutated copy of each, in order.
pub fn double_codebook(codebook: &Codebook, mutator: &mut Mutator) -> Codebook {
    let mut centroids = Vec::with_capacity(codebook.len() * 2);
    centroids.extend_from_slice(&codebook.centroids);
    for c in &codebook.centroids {
        centroids.push(mutator.perturb_center(c));
    }
    Codebook { centroids }
}

/// Index of the nearest centroid; the lowest index wins ties.
pub fn find_match(vector: &BlockVector, codebook: &Codebook) -> usize {
    nearest(vector, &codebook.centroids).0
}

#[inline]
fn nearest(vector: &BlockVector, centroids: &[BlockVector]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let e = vector.squared_error(c);
        if e < best.1 {
            best = (j, e);
        }
    }
    best
}

/// Assigns every vector to its nearest centroid and returns the membership
/// with the mean squared error per component, `sum_i min_j e_ij / (4N)`.
pub fn assign_members(vectors: &[BlockVector], codebook: &Codebook) -> (Membership, f64) {
    let mut owner = Vec::with_capacity(vectors.len());
    let mut total = 0.0;
    for v in vectors {
        let (j, e) = nearest(v, &codebook.centroids);
        owner.push(j);
        total += e;
    }
    let distortion = if vectors.is_empty() {
        0.0
    } else {
        total / (BLOCK_DIM * vectors.len()) as f64
    };
    (Membership { owner }, distortion)
}

/// Moves each centroid to the mean of its members.
///
/// Empty cells are visited in ascending order; each is replaced by a mutated
/// copy of the centroid whose cell has the largest summed error, after which
/// that donor's recorded error is halved so later empty cells can pick a
/// different donor. When even the worst cell has zero error the copy is
/// exact and draws nothing from the generator.
pub fn recalc_centroids(
    vectors: &[BlockVector],
    membership: &Membership,
    codebook: &Codebook,
    mutator: &mut Mutator,
) -> Codebook {
    let cells = codebook.len();
    let mut sums = vec![[0.0; BLOCK_DIM]; cells];
    let mut counts = vec![0usize; cells];
    for (v, &j) in vectors.iter().zip(&membership.owner) {
        for (s, x) in sums[j].iter_mut().zip(v.0.iter()) {
            *s += x;
        }
        counts[j] += 1;
    }

    let mut centroids: Vec<BlockVector> = codebook
        .centroids
        .iter()
        .enumerate()
        .map(|(j, old)| {
            if counts[j] > 0 {
                mean_of(sums[j], counts[j] as f64)
            } else {
                *old
            }
        })
        .collect();

    if counts.contains(&0) {
        let mut cell_error = vec![0.0; cells];
        for (v, &j) in vectors.iter().zip(&membership.owner) {
            cell_error[j] += v.squared_error(&centroids[j]);
        }
        for empty in (0..cells).filter(|&j| counts[j] == 0) {
            let donor = (0..cells).filter(|&j| counts[j] > 0).fold(
                None,
                |best: Option<usize>, j| match best {
                    Some(b) if cell_error[b] >= cell_error[j] => Some(b),
                    _ => Some(j),
                },
            );
            if let Some(donor) = donor {
                // A donor with zero error cannot be split any further.
                centroids[empty] = if cell_error[donor] > 0.0 {
                    mutator.perturb_center(&centroids[donor])
                } else {
                    centroids[donor]
                };
                cell_error[donor] *= 0.5;
            }
        }
    }

    Codebook { centroids }
}

/// Trains a codebook of `config.target_size` centroids.
///
/// Output depends only on `vectors` and `config`.
pub fn train_codebook(
    vectors: &[BlockVector],
    config: &TrainerConfig,
) -> Result<(Codebook, TrainerReport), TrainError> {
    config.validate()?;
    let start = Instant::now();
    let mut codebook = init_codebook(vectors)?;
    let mut mutator = Mutator::new(config.seed, config.delta);
    let mut rounds = Vec::new();

    let mut lloyd =
        |codebook: &mut Codebook, membership: &mut Membership, mutator: &mut Mutator| {
            *codebook = recalc_centroids(vectors, membership, codebook, mutator);
            let (next, distortion) = assign_members(vectors, codebook);
            *membership = next;
            rounds.push(PassRecord {
                codebook_size: codebook.len(),
                distortion,
            });
        };

    let mut membership;
    for _ in 0..config.rounds() {
        codebook = double_codebook(&codebook, &mut mutator);
        membership = assign_members(vectors, &codebook).0;
        for _ in 0..config.inner_iters {
            lloyd(&mut codebook, &mut membership, &mut mutator);
        }
        if codebook.len() == config.target_size {
            for _ in 0..config.refine_iters {
                lloyd(&mut codebook, &mut membership, &mut mutator);
            }
        }
    }

    Ok((
        codebook,
        TrainerReport {
            rounds,
            elapsed: start.elapsed(),
        },
    ))
}
