//! Synthetic two-glyph images with a controllable label/background bias.
//!
//! Each image is a square grid. The top half shows a background glyph
//! chosen by the background type `g`, the bottom half a low-contrast
//! foreground glyph chosen by the label `y`. Groups are indexed `2y + g`,
//! so the four counts of a [`GroupSpec`] read `(y=0,g=0), (y=0,g=1),
//! (y=1,g=0), (y=1,g=1)`.

mod probe;

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use probe::{group_accuracies, train_probe, Balance, GroupAccuracies, ProbeConfig, ProbeParams};

pub const GROUPS: usize = 4;

pub fn group_id(y: usize, g: usize) -> usize {
    2 * y + g
}

/// Samples per group, indexed by [`group_id`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub counts: [usize; GROUPS],
}

impl GroupSpec {
    pub fn new(counts: [usize; GROUPS]) -> Result<Self> {
        if counts.iter().sum::<usize>() == 0 {
            return Err(Error::InvalidArgument("group spec has no samples".into()));
        }
        Ok(Self { counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn count(&self, y: usize, g: usize) -> usize {
        self.counts[group_id(y, g)]
    }
}

/// Train/test group counts of the built-in dataset shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    WaterbirdLike,
    Dominoes1,
    Dominoes2,
}

impl Preset {
    pub fn train(self) -> GroupSpec {
        GroupSpec {
            counts: match self {
                Preset::WaterbirdLike => [3498, 184, 56, 1057],
                Preset::Dominoes1 => [3750, 1250, 1250, 3750],
                Preset::Dominoes2 => [3000, 500, 1250, 3000],
            },
        }
    }

    pub fn test(self) -> GroupSpec {
        GroupSpec {
            counts: match self {
                Preset::WaterbirdLike => [2255, 2255, 642, 642],
                Preset::Dominoes1 => [473, 507, 507, 473],
                Preset::Dominoes2 => [245, 490, 245, 490],
            },
        }
    }
}

/// Dataset-level mitigation applied before measurement and training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantTag {
    Unbalanced,
    Balanced,
    Addition,
    Concatenation,
}

impl VariantTag {
    pub const ALL: [VariantTag; 4] = [
        VariantTag::Unbalanced,
        VariantTag::Balanced,
        VariantTag::Addition,
        VariantTag::Concatenation,
    ];
}

macro_rules! kebab_names {
    ($ty:ty { $($variant:ident => $name:literal),* $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(<$ty>::$variant),)*
                    other => Err(Error::InvalidArgument(format!(
                        concat!("unknown ", stringify!($ty), " {:?}"), other
                    ))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(<$ty>::$variant => $name,)* })
            }
        }
    };
}

kebab_names!(Preset { WaterbirdLike => "waterbird-like", Dominoes1 => "dominoes1", Dominoes2 => "dominoes2" });
kebab_names!(VariantTag {
    Unbalanced => "unbalanced",
    Balanced => "balanced",
    Addition => "addition",
    Concatenation => "concatenation",
});
kebab_names!(MixMode { Addition => "addition", Concatenation => "concatenation" });

/// Glyph geometry and intensities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Style {
    /// Image side length; must be even.
    pub side: usize,
    /// Intensity gap between a foreground glyph's cab and body.
    pub foreground_contrast: f64,
}

impl Default for Style {
    fn default() -> Self {
        Self {
            side: 16,
            foreground_contrast: 0.04,
        }
    }
}

impl Style {
    fn pixels(&self) -> usize {
        self.side * self.side
    }

    /// Foreground is the bottom half.
    pub fn mask(&self) -> Vec<bool> {
        (0..self.pixels()).map(|p| p / self.side >= self.side / 2).collect()
    }

    /// Noise-free top half for background type `g`: a ring for 0, a bar
    /// for 1. Rows are relative to the top half.
    fn background_value(&self, g: usize, row: usize, col: usize) -> f64 {
        let h = self.side / 2;
        let (top, bottom, left, right) = (1, h - 2, self.side / 4, self.side - 1 - self.side / 4);
        let inside = (top..=bottom).contains(&row) && (left..=right).contains(&col);
        let on = match g {
            0 => inside && (row == top || row == bottom || col == left || col == right),
            _ => inside && (col == self.side / 2 - 1 || col == self.side / 2),
        };
        if on {
            0.9
        } else {
            0.1
        }
    }

    /// Noise-free bottom half for label `y`: a body block, plus a raised
    /// cab for label 1. Rows are relative to the bottom half.
    fn foreground_value(&self, y: usize, row: usize, col: usize) -> f64 {
        let h = self.side / 2;
        let body = (h / 2..h - 1).contains(&row) && (1..self.side - 1).contains(&col);
        let cab = y == 1 && (1..h / 2).contains(&row) && (self.side / 2..self.side - 2).contains(&col);
        if body {
            0.5
        } else if cab {
            0.2 + self.foreground_contrast
        } else {
            0.2
        }
    }

    /// Full noise-free image of group `(y, g)`.
    pub fn template(&self, y: usize, g: usize) -> Vec<f64> {
        let h = self.side / 2;
        (0..self.pixels())
            .map(|p| {
                let (row, col) = (p / self.side, p % self.side);
                if row < h {
                    self.background_value(g, row, col)
                } else {
                    self.foreground_value(y, row - h, col)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticImage {
    /// Row-major grid in `[0, 1]`.
    pub pixels: Vec<f64>,
    pub y: usize,
    pub g: usize,
}

impl SyntheticImage {
    pub fn group(&self) -> usize {
        group_id(self.y, self.g)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub style: Style,
    /// `true` marks foreground pixels; shared by all images.
    pub mask: Vec<bool>,
    pub images: Vec<SyntheticImage>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn group_counts(&self) -> [usize; GROUPS] {
        let mut c = [0; GROUPS];
        for im in &self.images {
            c[im.group()] += 1;
        }
        c
    }

    pub fn labels(&self) -> Vec<usize> {
        self.images.iter().map(|im| im.y).collect()
    }

    fn select(&self, foreground: bool) -> DMatrix<f64> {
        let cols: Vec<usize> = (0..self.mask.len()).filter(|&p| self.mask[p] == foreground).collect();
        DMatrix::from_fn(self.len(), cols.len(), |i, j| self.images[i].pixels[cols[j]])
    }

    /// Masked foreground pixels, one row per image.
    pub fn foreground(&self) -> DMatrix<f64> {
        self.select(true)
    }

    pub fn background(&self) -> DMatrix<f64> {
        self.select(false)
    }

    /// All pixels, one row per image.
    pub fn pixels(&self) -> DMatrix<f64> {
        let d = self.mask.len();
        DMatrix::from_fn(self.len(), d, |i, j| self.images[i].pixels[j])
    }
}

/// Renders every group's count of images with additive Gaussian noise
/// clipped to `[0, 1]`, in shuffled order.
pub fn generate_dataset(spec: &GroupSpec, sigma: f64, seed: u64) -> Result<Dataset> {
    generate_with_style(spec, sigma, seed, Style::default())
}

pub fn generate_with_style(spec: &GroupSpec, sigma: f64, seed: u64, style: Style) -> Result<Dataset> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("noise sigma must be finite and >= 0, got {sigma}")));
    }
    if style.side < 4 || !style.side.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("image side must be even and >= 4, got {}", style.side)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut images = Vec::with_capacity(spec.total());
    for y in 0..2 {
        for g in 0..2 {
            let template = style.template(y, g);
            for _ in 0..spec.count(y, g) {
                let pixels = template
                    .iter()
                    .map(|&v| if sigma > 0.0 { (v + noise.sample(&mut rng)).clamp(0.0, 1.0) } else { v })
                    .collect();
                images.push(SyntheticImage { pixels, y, g });
            }
        }
    }
    images.shuffle(&mut rng);
    Ok(Dataset {
        mask: style.mask(),
        style,
        images,
    })
}

/// Downsamples every group without replacement to the smallest group size.
pub fn rebalance(dataset: &Dataset, seed: u64) -> Result<Dataset> {
    let counts = dataset.group_counts();
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidArgument(format!("group {empty:02b} is empty; cannot rebalance")));
    }
    let target = *counts.iter().min().expect("four groups");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; dataset.len()];
    for group in 0..GROUPS {
        let members: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.images[i].group() == group).collect();
        for k in index::sample(&mut rng, members.len(), target) {
            keep[members[k]] = true;
        }
    }
    Ok(Dataset {
        images: dataset.images.iter().zip(&keep).filter(|(_, &k)| k).map(|(im, _)| im.clone()).collect(),
        ..dataset.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixMode {
    /// Pixel-wise mean of both background templates.
    Addition,
    /// Left half from type 0, right half from type 1.
    Concatenation,
}

/// Replaces every background region with the same mixture of both
/// background templates; foreground pixels are untouched.
pub fn mix_backgrounds(dataset: &Dataset, mode: MixMode) -> Dataset {
    let style = dataset.style;
    let (t0, t1) = (style.template(0, 0), style.template(0, 1));
    let mixed: Vec<f64> = (0..t0.len())
        .map(|p| match mode {
            MixMode::Addition => 0.5 * (t0[p] + t1[p]),
            MixMode::Concatenation if p % style.side < style.side / 2 => t0[p],
            MixMode::Concatenation => t1[p],
        })
        .collect();
    let images = dataset
        .images
        .iter()
        .map(|im| SyntheticImage {
            pixels: im
                .pixels
                .iter()
                .enumerate()
                .map(|(p, &v)| if dataset.mask[p] { v } else { mixed[p] })
                .collect(),
            ..*im
        })
        .collect();
    Dataset {
        images,
        ..dataset.clone()
    }
}

/// Applies `variant` to a training set; `seed` drives the downsampling.
pub fn apply_variant(dataset: &Dataset, variant: VariantTag, seed: u64) -> Result<Dataset> {
    match variant {
        VariantTag::Unbalanced => Ok(dataset.clone()),
        VariantTag::Balanced => rebalance(dataset, seed),
        VariantTag::Addition => Ok(mix_backgrounds(dataset, MixMode::Addition)),
        VariantTag::Concatenation => Ok(mix_backgrounds(dataset, MixMode::Concatenation)),
    }
}

fn pixel_header(d: usize) -> Vec<String> {
    (0..d).map(|p| format!("pixel_{p}")).collect()
}

/// `pixel_0, …, pixel_{d−1}, y, g`, one image per row.
pub fn write_dataset(dataset: &Dataset, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = pixel_header(dataset.mask.len());
    header.extend(["y".to_string(), "g".to_string()]);
    w.write_record(&header)?;
    for im in &dataset.images {
        let mut rec: Vec<String> = im.pixels.iter().map(|v| v.to_string()).collect();
        rec.extend([im.y.to_string(), im.g.to_string()]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One row of 0/1 flags under the pixel header; 1 marks foreground.
pub fn write_mask(dataset: &Dataset, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(pixel_header(dataset.mask.len()))?;
    w.write_record(dataset.mask.iter().map(|&m| if m { "1" } else { "0" }))?;
    w.flush()?;
    Ok(())
}

/// Writes `matrix` with a pixel-style header.
pub fn write_matrix(matrix: &DMatrix<f64>, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(pixel_header(matrix.ncols()))?;
    for row in matrix.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_labels(labels: &[usize], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["y"])?;
    for y in labels {
        w.write_record([y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset written by [`write_dataset`] and [`write_mask`].
pub fn read_dataset(data: impl AsRef<Path>, mask: impl AsRef<Path>) -> Result<Dataset> {
    let table = crate::table::load_matrix(data)?;
    let flags = crate::table::load_matrix(mask)?;
    let d = flags.ncols();
    if table.ncols() != d + 2 {
        return Err(Error::DimensionMismatch {
            expected: d + 2,
            found: table.ncols(),
        });
    }
    let side = (d as f64).sqrt().round() as usize;
    if side * side != d {
        return Err(Error::InvalidArgument(format!("{d} pixels do not form a square image")));
    }
    let label = |v: f64, line: usize| -> Result<usize> {
        if v == 0.0 || v == 1.0 {
            Ok(v as usize)
        } else {
            Err(Error::Parse {
                line,
                message: format!("label {v} is not 0 or 1"),
            })
        }
    };
    let images = table
        .row_iter()
        .enumerate()
        .map(|(i, row)| {
            Ok(SyntheticImage {
                pixels: row.iter().take(d).copied().collect(),
                y: label(row[d], i + 2)?,
                g: label(row[d + 1], i + 2)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        style: Style {
            side,
            ..Style::default()
        },
        mask: flags.row(0).iter().map(|&v| v != 0.0).collect(),
        images,
    })
}
