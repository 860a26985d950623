//! The binary inflation family `0 -> 0 1^m`, `1 -> 0` and its geometric
//! realization: words, bi-infinite fixed points, substitution matrix
//! eigendata, tile displacement sets and Delone point sets.

use crate::arith::{ArithError, QuadInt, RingContext};
use bitvec::prelude::*;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use thiserror::Error;

/// Letters per side are capped; beyond this the patch would not fit desk scale.
const MAX_LETTERS: u128 = 1 << 28;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InflationError {
    #[error("legality check failed: '00' does not occur in any small image of 0")]
    LegalityFailure,
    #[error("patch has no points inside its window")]
    EmptyPatch,
    #[error("requested word of about {letters} letters exceeds the budget of {max}")]
    WordTooLarge { letters: u128, max: u128 },
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// The two interval types: type 0 has length `lambda`, type 1 has length 1.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum TileType {
    Zero,
    One,
}

impl TileType {
    pub const BOTH: [TileType; 2] = [TileType::Zero, TileType::One];

    pub fn index(self) -> usize {
        match self {
            TileType::Zero => 0,
            TileType::One => 1,
        }
    }

    pub fn from_index(i: usize) -> TileType {
        match i {
            0 => TileType::Zero,
            1 => TileType::One,
            _ => panic!("tile type index out of range: {i}"),
        }
    }

    fn from_bit(bit: bool) -> TileType {
        if bit {
            TileType::One
        } else {
            TileType::Zero
        }
    }

    fn bit(self) -> bool {
        self == TileType::One
    }
}

impl fmt::Display for TileType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// A finite word over `{0, 1}`, stored as a packed bit array.
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct Word {
    bits: BitVec<u64, Lsb0>,
}

impl Word {
    pub fn new() -> Self {
        Word::default()
    }

    pub fn with_capacity(letters: usize) -> Self {
        Word {
            bits: BitVec::with_capacity(letters),
        }
    }

    pub fn from_letters(letters: &[TileType]) -> Self {
        let mut w = Word::with_capacity(letters.len());
        for &l in letters {
            w.push(l);
        }
        w
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn push(&mut self, letter: TileType) {
        self.bits.push(letter.bit());
    }

    pub fn get(&self, i: usize) -> TileType {
        TileType::from_bit(self.bits[i])
    }

    pub fn letters(&self) -> impl Iterator<Item = TileType> + '_ {
        self.bits.iter().by_vals().map(TileType::from_bit)
    }

    /// Letter counts `(n0, n1)`.
    pub fn counts(&self) -> (u64, u64) {
        let ones = self.bits.count_ones() as u64;
        (self.len() as u64 - ones, ones)
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        self.len() <= other.len() && self.bits == other.bits[..self.len()]
    }

    pub fn reversed(&self) -> Word {
        Word {
            bits: self.bits.iter().by_vals().rev().collect(),
        }
    }

    fn extend_from(&mut self, other: &Word) {
        self.bits.extend_from_bitslice(&other.bits);
    }

    /// True if `00` occurs as a factor.
    fn contains_adjacent_zeros(&self) -> bool {
        let mut prev_zero = false;
        for bit in self.bits.iter().by_vals() {
            let zero = !bit;
            if zero && prev_zero {
                return true;
            }
            prev_zero = zero;
        }
        false
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for bit in self.bits.iter().by_vals() {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut w = Word::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => w.push(TileType::Zero),
                '1' => w.push(TileType::One),
                _ => return Err(format!("invalid letter {c:?} in word")),
            }
        }
        Ok(w)
    }
}

/// The substitution `0 -> 0 1^m`, `1 -> 0` together with its ring context
/// and natural tile lengths (`lambda` for type 0, `1` for type 1).
#[derive(Clone, Debug)]
pub struct InflationRule {
    ctx: RingContext,
    image_zero: Word,
    image_one: Word,
    image_zero_rev: Word,
    image_one_rev: Word,
}

impl InflationRule {
    pub fn new(m: u32) -> Self {
        let ctx = RingContext::new(m);
        let mut image_zero = Word::with_capacity(m as usize + 1);
        image_zero.push(TileType::Zero);
        for _ in 0..m {
            image_zero.push(TileType::One);
        }
        let image_one = Word::from_letters(&[TileType::Zero]);
        let image_zero_rev = image_zero.reversed();
        let image_one_rev = image_one.reversed();
        InflationRule {
            ctx,
            image_zero,
            image_one,
            image_zero_rev,
            image_one_rev,
        }
    }

    pub fn m(&self) -> u32 {
        self.ctx.m()
    }

    pub fn ctx(&self) -> &RingContext {
        &self.ctx
    }

    pub fn image(&self, letter: TileType) -> &Word {
        match letter {
            TileType::Zero => &self.image_zero,
            TileType::One => &self.image_one,
        }
    }

    /// Substitution matrix `M[i][j]` = number of letters `i` in the image of `j`.
    pub fn matrix(&self) -> [[u64; 2]; 2] {
        [[1, 1], [u64::from(self.m()), 0]]
    }

    /// Natural length of a tile, in normal form for the ring.
    pub fn tile_length(&self, letter: TileType) -> QuadInt {
        let raw = match letter {
            TileType::Zero => QuadInt::LAMBDA,
            TileType::One => QuadInt::ONE,
        };
        // normalization of (0,1)/(1,0) cannot overflow
        self.ctx.normalize(raw).expect("tile length normalization")
    }

    /// Letterwise image concatenation.
    pub fn apply(&self, word: &Word) -> Word {
        let (n0, n1) = word.counts();
        let cap = n0 as usize * (self.m() as usize + 1) + n1 as usize;
        let mut out = Word::with_capacity(cap);
        for letter in word.letters() {
            out.extend_from(self.image(letter));
        }
        out
    }

    /// Image concatenation on a reversed word: feeding the reversed word in
    /// order and appending reversed images yields the reversal of the image
    /// of the original word. Used to grow the left half of a fixed point.
    pub fn apply_reversed(&self, word_rev: &Word) -> Word {
        let (n0, n1) = word_rev.counts();
        let cap = n0 as usize * (self.m() as usize + 1) + n1 as usize;
        let mut out = Word::with_capacity(cap);
        for letter in word_rev.letters() {
            out.extend_from(match letter {
                TileType::Zero => &self.image_zero_rev,
                TileType::One => &self.image_one_rev,
            });
        }
        out
    }
}

/// Letterwise image concatenation, iterated `times` times.
pub fn substitute(word: &Word, rule: &InflationRule, times: u32) -> Word {
    let mut w = word.clone();
    for _ in 0..times {
        w = rule.apply(&w);
    }
    w
}

/// Eigendata of the substitution matrix `M = [[1,1],[m,0]]`.
#[derive(Clone, Copy, Debug)]
pub struct EigenData {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// Frequency-normalised right eigenvector `(1, lambda-1)/lambda`.
    pub pf_right: [f64; 2],
    /// Left eigenvector `(lambda, 1)`: the natural tile lengths.
    pub pf_left: [f64; 2],
}

/// Closed-form eigenvalues `(1 +- sqrt(4m+1))/2` and PF eigenvectors.
pub fn eigen_data(m: u32) -> EigenData {
    let ctx = RingContext::new(m);
    let lp = ctx.lambda_plus();
    EigenData {
        lambda_plus: lp,
        lambda_minus: ctx.lambda_minus(),
        pf_right: [1.0 / lp, (lp - 1.0) / lp],
        pf_left: [lp, 1.0],
    }
}

/// Letter frequencies `(f0, f1)` in closed form.
pub fn frequencies_closed_form(m: u32) -> (f64, f64) {
    let e = eigen_data(m);
    (e.pf_right[0], e.pf_right[1])
}

/// Point density `lambda/(2 lambda - 1) = (lambda + 2m)/(4m + 1)`.
pub fn density_closed_form(m: u32) -> f64 {
    let lp = RingContext::new(m).lambda_plus();
    lp / (2.0 * lp - 1.0)
}

/// The two halves of a bi-infinite word around the marker `|`. The left half
/// is stored reversed (index 0 is the letter adjacent to the marker) so that
/// central extension is prefix extension on both halves.
#[derive(Clone, Debug)]
pub struct FixedPointWords {
    m: u32,
    pub left_rev: Word,
    pub right: Word,
}

impl FixedPointWords {
    pub fn new(m: u32, left_rev: Word, right: Word) -> Self {
        FixedPointWords { m, left_rev, right }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn total_letters(&self) -> usize {
        self.left_rev.len() + self.right.len()
    }
}

impl fmt::Display for FixedPointWords {
    /// Natural reading order `...left|right...`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.left_rev.reversed(), self.right)
    }
}

fn check_legal_seed(rule: &InflationRule) -> Result<(), InflationError> {
    let mut w = Word::from_letters(&[TileType::Zero]);
    for _ in 0..4 {
        w = rule.apply(&w);
        if w.contains_adjacent_zeros() {
            return Ok(());
        }
    }
    Err(InflationError::LegalityFailure)
}

/// Expected letters on one side after `iterations` applications of the
/// square of the substitution, starting from a single `0`.
fn side_letters(m: u32, iterations: u32) -> u128 {
    let m = u128::from(m);
    let (mut n0, mut n1) = (1u128, 0u128);
    for _ in 0..2 * iterations {
        let next0 = n0.saturating_add(n1);
        let next1 = n0.saturating_mul(m);
        n0 = next0;
        n1 = next1;
    }
    n0.saturating_add(n1)
}

/// Iterates the square of the substitution on the legal seed `0|0`,
/// growing both halves as central extensions. `iterations = 0` returns the
/// seed itself.
pub fn fixed_point_patch(m: u32, iterations: u32) -> Result<FixedPointWords, InflationError> {
    let rule = InflationRule::new(m);
    check_legal_seed(&rule)?;
    let expected = side_letters(m, iterations);
    if expected > MAX_LETTERS {
        return Err(InflationError::WordTooLarge {
            letters: expected,
            max: MAX_LETTERS,
        });
    }
    let mut left_rev = Word::from_letters(&[TileType::Zero]);
    let mut right = Word::from_letters(&[TileType::Zero]);
    for _ in 0..iterations {
        right = rule.apply(&rule.apply(&right));
        left_rev = rule.apply_reversed(&rule.apply_reversed(&left_rev));
    }
    Ok(FixedPointWords::new(m, left_rev, right))
}

/// An ordered finite patch of the tiling: tile left endpoints with types,
/// exact positions in `Z[lambda]` plus their real embeddings.
#[derive(Clone, Debug)]
pub struct TilingPatch {
    ctx: RingContext,
    positions: Vec<QuadInt>,
    values: Vec<f64>,
    types: BitVec<u64, Lsb0>,
    marker_index: usize,
    left_extent: f64,
    right_extent: f64,
}

impl TilingPatch {
    pub fn ctx(&self) -> &RingContext {
        &self.ctx
    }

    pub fn m(&self) -> u32 {
        self.ctx.m()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[QuadInt] {
        &self.positions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn position(&self, i: usize) -> QuadInt {
        self.positions[i]
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn tile_type(&self, i: usize) -> TileType {
        TileType::from_bit(self.types[i])
    }

    pub fn marker_index(&self) -> usize {
        self.marker_index
    }

    /// Half of the covered span; for a patch grown symmetrically from the
    /// seed both halves have equal length and this is the exact one-sided
    /// window extent.
    pub fn radius(&self) -> f64 {
        (self.left_extent + self.right_extent) / 2.0
    }

    pub fn left_extent(&self) -> f64 {
        self.left_extent
    }

    pub fn right_extent(&self) -> f64 {
        self.right_extent
    }

    /// Index range of points with value in `[-r, r)`.
    pub fn window_range(&self, r: f64) -> Range<usize> {
        let start = self.values.partition_point(|&v| v < -r);
        let end = self.values.partition_point(|&v| v < r);
        start..end
    }

    pub fn iter(&self) -> impl Iterator<Item = (QuadInt, TileType)> + '_ {
        self.positions
            .iter()
            .copied()
            .zip(self.types.iter().by_vals().map(TileType::from_bit))
    }
}

/// Geometric realization: cumulative tile lengths rightwards from the
/// marker, negative cumulative lengths leftwards. The marker tile sits at 0.
pub fn to_point_set(words: &FixedPointWords) -> Result<TilingPatch, InflationError> {
    let rule = InflationRule::new(words.m());
    let ctx = *rule.ctx();
    let total = words.total_letters();
    let mut positions = Vec::with_capacity(total);
    let mut types: BitVec<u64, Lsb0> = BitVec::with_capacity(total);

    // left half: walk outward from the marker, then reverse into order
    let mut left: Vec<(QuadInt, TileType)> = Vec::with_capacity(words.left_rev.len());
    let mut pos = QuadInt::ZERO;
    for letter in words.left_rev.letters() {
        pos = ctx.sub(pos, rule.tile_length(letter))?;
        left.push((pos, letter));
    }
    let left_extent = -ctx.value(pos);
    for &(p, t) in left.iter().rev() {
        positions.push(p);
        types.push(t.bit());
    }
    let marker_index = positions.len();

    // right half: cumulative sums starting at 0
    let mut pos = QuadInt::ZERO;
    for letter in words.right.letters() {
        positions.push(pos);
        types.push(letter.bit());
        pos = ctx.add(pos, rule.tile_length(letter))?;
    }
    let right_extent = ctx.value(pos);

    let values: Vec<f64> = positions.iter().map(|&p| ctx.value(p)).collect();
    debug_assert!(values.windows(2).all(|w| w[0] < w[1]));
    Ok(TilingPatch {
        ctx,
        positions,
        values,
        types,
        marker_index,
        left_extent,
        right_extent,
    })
}

/// Relative positions `T[i][j]` of type-`i` tiles inside an inflated
/// type-`j` tile: the inflated type 0 interval (length `lambda^2`) carries
/// one 0 at the origin and `m` type-1 tiles at `lambda + k`; the inflated
/// type 1 interval (length `lambda`) carries a single 0 at the origin.
#[derive(Clone, Debug)]
pub struct DisplacementSets {
    sets: [[Vec<QuadInt>; 2]; 2],
}

impl DisplacementSets {
    pub fn get(&self, i: TileType, j: TileType) -> &[QuadInt] {
        &self.sets[i.index()][j.index()]
    }
}

pub fn displacement_sets(m: u32) -> DisplacementSets {
    let ctx = RingContext::new(m);
    let norm = |q: QuadInt| ctx.normalize(q).expect("displacement normalization");
    let t00 = vec![QuadInt::ZERO];
    let t01 = vec![QuadInt::ZERO];
    let t10 = (0..i128::from(m)).map(|k| norm(QuadInt::new(k, 1))).collect();
    let t11 = Vec::new();
    DisplacementSets {
        sets: [[t00, t01], [t10, t11]],
    }
}

/// Point count over the window `[-r, r)`, divided by `2r`.
pub fn density(patch: &TilingPatch) -> Result<f64, InflationError> {
    let r = patch.radius();
    if r <= 0.0 {
        return Err(InflationError::EmptyPatch);
    }
    let n = patch.window_range(r).len();
    if n == 0 {
        return Err(InflationError::EmptyPatch);
    }
    Ok(n as f64 / (2.0 * r))
}

/// Empirical letter frequencies `(f0, f1)` over the window `[-r, r)`.
pub fn letter_frequencies(patch: &TilingPatch) -> Result<(f64, f64), InflationError> {
    let range = patch.window_range(patch.radius());
    if range.is_empty() {
        return Err(InflationError::EmptyPatch);
    }
    let mut n1 = 0usize;
    for i in range.clone() {
        if patch.tile_type(i) == TileType::One {
            n1 += 1;
        }
    }
    let total = range.len() as f64;
    Ok(((total - n1 as f64) / total, n1 as f64 / total))
}

/// Inflates every tile by `lambda` and fills the stretched intervals per the
/// displacement sets, returning the resulting point set sorted exactly.
pub fn inflate_points(
    ctx: &RingContext,
    points: &[(QuadInt, TileType)],
) -> Result<Vec<(QuadInt, TileType)>, InflationError> {
    let disp = displacement_sets(ctx.m());
    let mut out = Vec::new();
    for &(x, j) in points {
        let scaled = ctx.mul(x, QuadInt::LAMBDA)?;
        for i in TileType::BOTH {
            for &t in disp.get(i, j) {
                out.push((ctx.add(scaled, t)?, i));
            }
        }
    }
    out.sort_by(|p, q| ctx.cmp(p.0, q.0).then(p.1.cmp(&q.1)));
    Ok(out)
}

/// Smallest fixed-point iterate with at least `min_tiles` letters in total.
pub fn patch_with_min_tiles(m: u32, min_tiles: u64) -> Result<TilingPatch, InflationError> {
    let mut iterations = 0;
    while 2 * side_letters(m, iterations) < u128::from(min_tiles) {
        iterations += 1;
        if side_letters(m, iterations) > MAX_LETTERS {
            return Err(InflationError::WordTooLarge {
                letters: side_letters(m, iterations),
                max: MAX_LETTERS,
            });
        }
    }
    to_point_set(&fixed_point_patch(m, iterations)?)
}

/// Smallest fixed-point iterate whose window radius reaches `min_radius`.
pub fn patch_with_min_radius(m: u32, min_radius: f64) -> Result<TilingPatch, InflationError> {
    assert!(min_radius > 0.0, "radius must be positive");
    // letters needed: radius / mean tile length, mean >= 1
    let mut iterations = 0;
    loop {
        let patch = to_point_set(&fixed_point_patch(m, iterations)?)?;
        if patch.radius() >= min_radius {
            return Ok(patch);
        }
        iterations += 1;
        if side_letters(m, iterations) > MAX_LETTERS {
            return Err(InflationError::WordTooLarge {
                letters: side_letters(m, iterations),
                max: MAX_LETTERS,
            });
        }
    }
}
