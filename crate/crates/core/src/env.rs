//! Synthetic sensory streams: 5x5 letter glyphs and YUV pixels.
//!
//! Streams are seekable: the frame for a given tick depends only on the
//! stream config and the tick, so a restored engine sees the same frames as
//! one that never stopped.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::vm::FeatureVector;

pub const GLYPH_SIDE: usize = 5;
pub const GLYPH_COUNT: usize = 25;
/// The letter left out of the glyph set.
pub const OMITTED_LETTER: char = 'W';

const GLYPH_ASSET: &str = include_str!("../assets/glyphs.txt");
const ENV_STREAM: u64 = 1;
const WORDS_PER_FRAME: u128 = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("glyph asset line {line}: {message}")]
    BadGlyphs { line: usize, message: String },
    #[error("letter weights must be {GLYPH_COUNT} finite non-negative values with a positive sum")]
    BadWeights,
    #[error("scripted pixel sequence is empty")]
    EmptyScript,
    #[error("unknown environment `{0}` (expected letters or pixels)")]
    UnknownEnvironment(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Glyph {
    pub letter: char,
    bitmap: FeatureVector,
}

impl Glyph {
    /// Row-major 0/1 pixels.
    pub fn bitmap(&self) -> &FeatureVector {
        &self.bitmap
    }

    pub fn pixel(&self, row: usize, col: usize) -> bool {
        self.bitmap.as_slice()[row * GLYPH_SIDE + col] == 1
    }

    /// Whether some column is all ones.
    pub fn has_vertical_bar(&self) -> bool {
        (0..GLYPH_SIDE).any(|col| (0..GLYPH_SIDE).all(|row| self.pixel(row, col)))
    }
}

/// Parses blocks of a letter line followed by five rows of `0`/`1`.
/// Blank lines and `#` comments are ignored.
pub fn parse_glyphs(text: &str) -> Result<Vec<Glyph>, EnvError> {
    let bad = |line: usize, message: &str| EnvError::BadGlyphs {
        line,
        message: message.into(),
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut glyphs: Vec<Glyph> = Vec::new();
    while let Some((n, head)) = lines.next() {
        let mut chars = head.chars();
        let letter = match (chars.next(), chars.next()) {
            (Some(c), None) if c.is_ascii_uppercase() => c,
            _ => return Err(bad(n, "expected a single capital letter")),
        };
        if glyphs.iter().any(|g| g.letter == letter) {
            return Err(bad(n, "duplicate letter"));
        }
        let mut pixels = Vec::with_capacity(GLYPH_SIDE * GLYPH_SIDE);
        for _ in 0..GLYPH_SIDE {
            let (n, row) = lines
                .next()
                .ok_or_else(|| bad(n, "glyph has fewer than 5 rows"))?;
            if row.len() != GLYPH_SIDE || !row.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(bad(n, "rows must be five 0/1 characters"));
            }
            pixels.extend(row.bytes().map(|b| i16::from(b - b'0')));
        }
        let bitmap = FeatureVector::new(pixels).expect("25 elements fit");
        glyphs.push(Glyph { letter, bitmap });
    }
    if glyphs.len() != GLYPH_COUNT {
        return Err(bad(
            0,
            &format!("expected {GLYPH_COUNT} glyphs, found {}", glyphs.len()),
        ));
    }
    Ok(glyphs)
}

/// The shipped glyph set, in letter order.
pub fn glyphs() -> &'static [Glyph] {
    static GLYPHS: OnceLock<Vec<Glyph>> = OnceLock::new();
    GLYPHS.get_or_init(|| parse_glyphs(GLYPH_ASSET).expect("shipped glyph asset is well-formed"))
}

pub fn vertical_bar_subset() -> BTreeSet<char> {
    glyphs()
        .iter()
        .filter(|g| g.has_vertical_bar())
        .map(|g| g.letter)
        .collect()
}

fn rng_at(seed: u64, tick: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ENV_STREAM);
    rng.set_word_pos(u128::from(tick) * WORDS_PER_FRAME);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct LetterStreamConfig {
    /// One weight per glyph, in the order of [`glyphs`].
    pub weights: Vec<f64>,
    pub seed: u64,
}

impl LetterStreamConfig {
    pub fn uniform(seed: u64) -> Self {
        LetterStreamConfig {
            weights: vec![1.0; GLYPH_COUNT],
            seed,
        }
    }

    pub fn only(letter: char, seed: u64) -> Self {
        let weights = glyphs()
            .iter()
            .map(|g| f64::from(u8::from(g.letter == letter)))
            .collect();
        LetterStreamConfig { weights, seed }
    }

    fn distribution(&self) -> Result<WeightedIndex<f64>, EnvError> {
        if self.weights.len() != GLYPH_COUNT || self.weights.iter().any(|w| !w.is_finite()) {
            return Err(EnvError::BadWeights);
        }
        WeightedIndex::new(&self.weights).map_err(|_| EnvError::BadWeights)
    }
}

/// Draws one glyph according to the configured weights.
pub fn letter_frame<R: Rng + ?Sized>(
    cfg: &LetterStreamConfig,
    rng: &mut R,
) -> Result<(char, FeatureVector), EnvError> {
    let glyph = &glyphs()[cfg.distribution()?.sample(rng)];
    Ok((glyph.letter, glyph.bitmap.clone()))
}

#[derive(Debug, Clone)]
pub struct LetterStream {
    cfg: LetterStreamConfig,
    dist: WeightedIndex<f64>,
}

impl LetterStream {
    pub fn new(cfg: LetterStreamConfig) -> Result<Self, EnvError> {
        let dist = cfg.distribution()?;
        Ok(LetterStream { cfg, dist })
    }

    pub fn config(&self) -> &LetterStreamConfig {
        &self.cfg
    }

    pub fn frame(&self, tick: u64) -> (char, FeatureVector) {
        let glyph = &glyphs()[self.dist.sample(&mut rng_at(self.cfg.seed, tick))];
        (glyph.letter, glyph.bitmap.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PixelMode {
    /// Y, U and V uniform over 0..=255.
    Uniform,
    /// Cycles through the given pixels.
    Scripted(Vec<[u8; 3]>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelStreamConfig {
    pub mode: PixelMode,
    pub seed: u64,
}

impl PixelStreamConfig {
    pub fn check(&self) -> Result<(), EnvError> {
        match &self.mode {
            PixelMode::Scripted(s) if s.is_empty() => Err(EnvError::EmptyScript),
            _ => Ok(()),
        }
    }
}

fn yuv(p: [u8; 3]) -> FeatureVector {
    FeatureVector::new(p.iter().map(|&c| i16::from(c)).collect()).expect("3 elements fit")
}

/// One `(Y, U, V)` pixel. Scripted streams use `tick` to pick their
/// position in the cycle.
pub fn pixel_frame<R: Rng + ?Sized>(
    cfg: &PixelStreamConfig,
    tick: u64,
    rng: &mut R,
) -> Result<FeatureVector, EnvError> {
    cfg.check()?;
    Ok(match &cfg.mode {
        PixelMode::Uniform => yuv(rng.random()),
        PixelMode::Scripted(seq) => yuv(seq[(tick % seq.len() as u64) as usize]),
    })
}

#[derive(Debug, Clone)]
pub struct PixelStream {
    cfg: PixelStreamConfig,
}

impl PixelStream {
    pub fn new(cfg: PixelStreamConfig) -> Result<Self, EnvError> {
        cfg.check()?;
        Ok(PixelStream { cfg })
    }

    pub fn config(&self) -> &PixelStreamConfig {
        &self.cfg
    }

    pub fn frame(&self, tick: u64) -> FeatureVector {
        pixel_frame(&self.cfg, tick, &mut rng_at(self.cfg.seed, tick)).expect("config checked")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnvKind {
    #[default]
    Letters,
    Pixels,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Letters => "letters",
            EnvKind::Pixels => "pixels",
        }
    }
}

impl std::str::FromStr for EnvKind {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, EnvError> {
        match s {
            "letters" => Ok(EnvKind::Letters),
            "pixels" => Ok(EnvKind::Pixels),
            other => Err(EnvError::UnknownEnvironment(other.to_string())),
        }
    }
}

/// A sensory environment with one channel.
#[derive(Debug, Clone)]
pub enum Environment {
    Letters(LetterStream),
    Pixels(PixelStream),
}

impl Environment {
    pub fn kind(&self) -> EnvKind {
        match self {
            Environment::Letters(_) => EnvKind::Letters,
            Environment::Pixels(_) => EnvKind::Pixels,
        }
    }

    pub fn channels(&self) -> usize {
        1
    }

    /// Length of the vectors on each channel.
    pub fn frame_len(&self) -> usize {
        match self {
            Environment::Letters(_) => GLYPH_SIDE * GLYPH_SIDE,
            Environment::Pixels(_) => 3,
        }
    }

    pub fn frame(&self, tick: u64) -> Vec<FeatureVector> {
        match self {
            Environment::Letters(s) => vec![s.frame(tick).1],
            Environment::Pixels(s) => vec![s.frame(tick)],
        }
    }
}
