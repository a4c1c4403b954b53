//! Reproducible uniform seeds, the max-power coarsening that couples levels,
//! and the affine maps from seeds to physical parameters.
//!
//! Every sample owns independent ChaCha streams selected by
//! `(sample_id, level, tag)`, so a sample is a pure function of its key no
//! matter which worker evaluates it.

use crate::error::{Error, Result};
use crate::levels::LevelSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Independent seed families consumed by one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamTag {
    Param,
    ConvectionRho,
    ConvectionL,
    Relaxation,
}

impl StreamTag {
    fn code(self) -> u64 {
        match self {
            StreamTag::Param => 0,
            StreamTag::ConvectionRho => 1,
            StreamTag::ConvectionL => 2,
            StreamTag::Relaxation => 3,
        }
    }
}

const SAMPLE_BITS: u32 = 48;
const LEVEL_BITS: u32 = 8;
const TAG_BITS: u32 = 4;
/// Sample ids at or above this bit are reserved for retry keys.
pub const RETRY_BIT: u64 = 1 << (SAMPLE_BITS - 1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SampleKey {
    pub master_seed: u64,
    pub sample_id: u64,
    pub level_index: usize,
    pub stream_tag: StreamTag,
}

impl SampleKey {
    pub fn new(master_seed: u64, sample_id: u64, level_index: usize) -> Self {
        Self {
            master_seed,
            sample_id,
            level_index,
            stream_tag: StreamTag::Param,
        }
    }

    pub fn with_tag(self, stream_tag: StreamTag) -> Self {
        Self { stream_tag, ..self }
    }

    /// Key used for the single retry of a failed sample.
    pub fn retry(self) -> Self {
        Self {
            sample_id: self.sample_id | RETRY_BIT,
            ..self
        }
    }

    fn stream_id(&self) -> u64 {
        assert!(
            self.sample_id < 1 << SAMPLE_BITS,
            "sample id {} exceeds 48 bits",
            self.sample_id
        );
        assert!(self.level_index < 1 << LEVEL_BITS, "level index too large");
        (self.sample_id << (LEVEL_BITS + TAG_BITS))
            | ((self.level_index as u64) << TAG_BITS)
            | self.stream_tag.code()
    }

    /// Fresh stream positioned at the start of this key's sequence.
    pub fn stream(&self) -> SeedStream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id());
        SeedStream { rng }
    }
}

/// Sequential reader over one key's uniforms.
#[derive(Debug, Clone)]
pub struct SeedStream {
    rng: ChaCha8Rng,
}

impl SeedStream {
    #[inline]
    pub fn next_seed(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for s in out {
            *s = self.rng.random::<f64>();
        }
    }
}

/// Shape of a seed array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedLayout {
    Time { len: usize },
    Space { len: usize },
    /// Step-major: entry `n * cells + i`.
    SpaceTime { cells: usize, steps: usize },
}

impl SeedLayout {
    pub fn white_noise_time(level: &LevelSpec) -> Self {
        SeedLayout::Time { len: level.n_steps }
    }

    pub fn white_noise_space(level: &LevelSpec) -> Self {
        SeedLayout::Space { len: level.n_cells }
    }

    pub fn spacetime(level: &LevelSpec) -> Self {
        SeedLayout::SpaceTime {
            cells: level.n_cells,
            steps: level.n_steps,
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            SeedLayout::Time { len } | SeedLayout::Space { len } => len,
            SeedLayout::SpaceTime { cells, steps } => cells * steps,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedArray {
    pub seeds: Vec<f64>,
    pub layout: SeedLayout,
    pub level_index: usize,
}

impl SeedArray {
    pub fn new(seeds: Vec<f64>, layout: SeedLayout, level_index: usize) -> Result<Self> {
        if seeds.len() != layout.len() {
            return Err(Error::Argument(format!(
                "{} seeds do not fill layout {layout:?}",
                seeds.len()
            )));
        }
        if let Some(s) = seeds.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::Argument(format!("seed {s} outside [0, 1]")));
        }
        Ok(Self {
            seeds,
            layout,
            level_index,
        })
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }
}

/// Draws the seeds for `key` in the given layout.
pub fn draw_seeds(key: SampleKey, layout: SeedLayout) -> SeedArray {
    let mut seeds = vec![0.0; layout.len()];
    key.stream().fill(&mut seeds);
    SeedArray {
        seeds,
        layout,
        level_index: key.level_index,
    }
}

/// `(max of the block)^power`.
#[inline]
pub fn max_power<I: IntoIterator<Item = f64>>(block: I, power: i32) -> f64 {
    block.into_iter().fold(0.0, f64::max).powi(power)
}

/// Coarsens a one-dimensional (time or space) seed array by Γ.
pub fn coarsen_seeds_time(fine: &SeedArray, gamma: usize) -> Result<SeedArray> {
    let layout = match fine.layout {
        SeedLayout::Time { len } if len % gamma == 0 => SeedLayout::Time { len: len / gamma },
        SeedLayout::Space { len } if len % gamma == 0 => SeedLayout::Space { len: len / gamma },
        SeedLayout::SpaceTime { .. } => {
            return Err(Error::Argument(
                "space-time seeds need coarsen_seeds_spacetime".into(),
            ))
        }
        other => {
            return Err(Error::Argument(format!(
                "{} seeds are not divisible by {gamma}",
                other.len()
            )))
        }
    };
    let seeds = fine
        .seeds
        .chunks_exact(gamma)
        .map(|c| max_power(c.iter().copied(), gamma as i32))
        .collect();
    Ok(SeedArray {
        seeds,
        layout,
        level_index: fine.level_index.saturating_sub(1),
    })
}

/// Coarsens Γ consecutive fine rows of `cells` seeds into one coarse row,
/// one value `(block max)^{Γ²}` per Γ×Γ block.
pub fn coarsen_rows(fine_rows: &[f64], cells: usize, gamma: usize, out: &mut [f64]) {
    debug_assert_eq!(fine_rows.len(), cells * gamma);
    debug_assert_eq!(out.len() * gamma, cells);
    let power = (gamma * gamma) as i32;
    for (ic, o) in out.iter_mut().enumerate() {
        let mut m = 0.0f64;
        for row in fine_rows.chunks_exact(cells) {
            for &s in &row[ic * gamma..(ic + 1) * gamma] {
                m = m.max(s);
            }
        }
        *o = m.powi(power);
    }
}

/// Coarsens a space-time seed array over strided Γ×Γ blocks.
pub fn coarsen_seeds_spacetime(fine: &SeedArray, gamma: usize) -> Result<SeedArray> {
    let SeedLayout::SpaceTime { cells, steps } = fine.layout else {
        return Err(Error::Argument("expected space-time seeds".into()));
    };
    if cells % gamma != 0 || steps % gamma != 0 {
        return Err(Error::Argument(format!(
            "space-time extents {cells}x{steps} not divisible by {gamma}"
        )));
    }
    let coarse_cells = cells / gamma;
    let mut seeds = vec![0.0; coarse_cells * (steps / gamma)];
    for (rows, out) in fine
        .seeds
        .chunks_exact(cells * gamma)
        .zip(seeds.chunks_exact_mut(coarse_cells))
    {
        coarsen_rows(rows, cells, gamma, out);
    }
    Ok(SeedArray {
        seeds,
        layout: SeedLayout::SpaceTime {
            cells: coarse_cells,
            steps: steps / gamma,
        },
        level_index: fine.level_index.saturating_sub(1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    PiecewiseK,
    WhiteNoiseTime,
    WhiteNoiseSpace,
}

/// How a seed maps to a parameter value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterLaw {
    /// `base + amplitude (2s - 1)`, uniform on `[base - amplitude, base + amplitude]`.
    Symmetric,
    /// `base + amplitude s`, uniform on `[base, base + amplitude]`.
    OneSided,
}

impl ParameterLaw {
    #[inline]
    pub fn apply(self, seed: f64, base: f64, amplitude: f64) -> f64 {
        match self {
            ParameterLaw::Symmetric => base + amplitude * (2.0 * seed - 1.0),
            ParameterLaw::OneSided => base + amplitude * seed,
        }
    }
}

/// Piecewise-constant physical parameter over `K` equal intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterPath {
    pub kind: PathKind,
    pub k: usize,
    pub base: f64,
    pub amplitude: f64,
    pub law: ParameterLaw,
    pub values: Vec<f64>,
}

impl ParameterPath {
    /// Constant path (all perturbations zero).
    pub fn constant(value: f64, k: usize, kind: PathKind) -> Self {
        Self {
            kind,
            k,
            base: value,
            amplitude: 0.0,
            law: ParameterLaw::Symmetric,
            values: vec![value; k],
        }
    }

    /// Value on the interval containing grid index `n` out of `total`
    /// (time step `n` of `M`, or cell `n` of `X`).
    #[inline]
    pub fn value_at_index(&self, n: usize, total: usize) -> f64 {
        if self.k == total {
            self.values[n]
        } else {
            self.values[(n * self.k) / total]
        }
    }

    /// Value at fraction `s` in `[0, 1)` of the span.
    pub fn value_at_fraction(&self, s: f64) -> f64 {
        let k = ((s * self.k as f64).floor() as usize).min(self.k - 1);
        self.values[k]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.k as f64
    }
}

/// Maps seeds to a physical parameter path.
pub fn seeds_to_path(
    seeds: &SeedArray,
    kind: PathKind,
    base: f64,
    amplitude: f64,
    law: ParameterLaw,
    k: usize,
) -> Result<ParameterPath> {
    if seeds.len() != k || k == 0 {
        return Err(Error::Argument(format!(
            "expected {k} seeds for the path, got {}",
            seeds.len()
        )));
    }
    match (kind, seeds.layout) {
        (_, SeedLayout::SpaceTime { .. }) => {
            return Err(Error::Argument("parameter paths are one-dimensional".into()))
        }
        (PathKind::WhiteNoiseTime, SeedLayout::Space { .. })
        | (PathKind::WhiteNoiseSpace, SeedLayout::Time { .. }) => {
            return Err(Error::Argument(format!(
                "{kind:?} path from {:?} seeds",
                seeds.layout
            )))
        }
        _ => {}
    }
    Ok(ParameterPath {
        kind,
        k,
        base,
        amplitude,
        law,
        values: seeds
            .seeds
            .iter()
            .map(|&s| law.apply(s, base, amplitude))
            .collect(),
    })
}
