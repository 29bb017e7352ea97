//! Ring configurations and the synchronous update of the deterministic
//! Fukui-Ishibashi rule.
//!
//! A [`Configuration`] is a ring of `L` binary sites (1 = car) stored as
//! packed 64-bit words. Cars move towards increasing site index. Every step
//! each car advances `min(gap, m)` sites, where `gap` is the number of empty
//! sites before the next car ahead.
//!
//! Two update routes are provided. [`step`] works on the car list; it is the
//! one used for simulation. [`step_local`] applies a radius-(m, 1) local
//! function to every site window and exists so the two can be checked
//! against each other. [`iterate_open`] evolves a finite, open-boundary word
//! and keeps track of which sites are still determined by the word alone.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

const WORD_BITS: usize = 64;

/// Seedable generator used for every random initial condition.
pub type ModelRng = ChaCha8Rng;

/// Generator for replica `stream` of a run seeded with `seed`.
///
/// Streams are independent ChaCha streams, so the result does not depend on
/// how replicas are scheduled across threads.
pub fn rng_for(seed: u64, stream: u64) -> ModelRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Model parameters: maximum speed, lattice size and car density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub max_speed: u32,
    pub lattice_size: usize,
    pub density: f64,
}

impl ModelParams {
    pub fn new(max_speed: u32, lattice_size: usize, density: f64) -> Result<Self> {
        if max_speed == 0 {
            return Err(invalid("maximum speed must be at least 1"));
        }
        if lattice_size == 0 {
            return Err(invalid("lattice size must be at least 1"));
        }
        if !(0.0..=1.0).contains(&density) {
            return Err(invalid(format!("density {density} outside [0, 1]")));
        }
        Ok(Self {
            max_speed,
            lattice_size,
            density,
        })
    }
}

/// A ring of binary sites, bit-packed. Bits past `len` are always zero.
///
/// Rings have at least one site, so there is no `is_empty`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    len: usize,
    words: Vec<u64>,
}

#[allow(clippy::len_without_is_empty)]
impl Configuration {
    /// All-empty ring of `len` sites.
    pub fn empty(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(invalid("lattice size must be at least 1"));
        }
        Ok(Self::zeros(len))
    }

    fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(WORD_BITS)],
        }
    }

    /// Builds a ring from 0/1 cell values, site 0 first.
    pub fn from_cells(cells: &[u8]) -> Result<Self> {
        let mut config = Self::empty(cells.len())?;
        for (i, &c) in cells.iter().enumerate() {
            match c {
                0 => {}
                1 => config.set(i),
                other => return Err(invalid(format!("cell value {other} is not 0 or 1"))),
            }
        }
        Ok(config)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn get(&self, site: usize) -> bool {
        debug_assert!(site < self.len);
        self.words[site / WORD_BITS] >> (site % WORD_BITS) & 1 == 1
    }

    /// Cell at a cyclic offset from site 0.
    #[inline]
    pub fn get_cyclic(&self, site: isize) -> bool {
        self.get(site.rem_euclid(self.len as isize) as usize)
    }

    #[inline]
    fn set(&mut self, site: usize) {
        self.words[site / WORD_BITS] |= 1 << (site % WORD_BITS);
    }

    pub fn car_count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Realized density `N / L`.
    pub fn density(&self) -> f64 {
        self.car_count() as f64 / self.len as f64
    }

    pub fn cells(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    /// Occupied sites in increasing order.
    pub fn car_positions(&self) -> CarPositions<'_> {
        CarPositions {
            words: &self.words,
            index: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    /// `(position, gap)` for every car, where `gap` counts the empty sites up
    /// to the next car ahead, cyclically. A lone car has gap `L - 1`.
    pub fn gaps(&self) -> Gaps<'_> {
        let mut positions = self.car_positions();
        let first = positions.next();
        Gaps {
            positions,
            first,
            prev: first,
            len: self.len,
        }
    }

    /// Bit-packed form: an 8-byte little-endian site count followed by
    /// `ceil(L / 8)` bytes, site `i` in bit `i % 8` of byte `i / 8`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.len.div_ceil(8));
        out.extend_from_slice(&(self.len as u64).to_le_bytes());
        let body = self.words.iter().flat_map(|w| w.to_le_bytes());
        out.extend(body.take(self.len.div_ceil(8)));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header: [u8; 8] = bytes
            .get(..8)
            .and_then(|h| h.try_into().ok())
            .ok_or_else(|| Error::Parse("missing 8-byte length header".into()))?;
        let len = usize::try_from(u64::from_le_bytes(header))
            .map_err(|_| Error::Parse("length does not fit in memory".into()))?;
        let body = &bytes[8..];
        if body.len() != len.div_ceil(8) {
            return Err(Error::Parse(format!(
                "expected {} payload bytes for {len} sites, found {}",
                len.div_ceil(8),
                body.len()
            )));
        }
        let mut config = Self::empty(len)?;
        for (chunk, word) in body.chunks(8).zip(config.words.iter_mut()) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            *word = u64::from_le_bytes(buf);
        }
        if config.words.last().copied().unwrap_or(0) & !config.tail_mask() != 0 {
            return Err(Error::Parse(
                "padding bits past the last site are set".into(),
            ));
        }
        Ok(config)
    }

    fn tail_mask(&self) -> u64 {
        match self.len % WORD_BITS {
            0 => u64::MAX,
            r => (1u64 << r) - 1,
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 128 {
            write!(f, "Configuration({self})")
        } else {
            write!(f, "Configuration(L={}, N={})", self.len, self.car_count())
        }
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_cells(&parse_bits(s)?)
    }
}

fn parse_bits(s: &str) -> Result<Vec<u8>> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::Parse(format!("unexpected character {other:?}"))),
        })
        .collect()
}

pub struct CarPositions<'a> {
    words: &'a [u64],
    index: usize,
    current: u64,
}

impl Iterator for CarPositions<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        while self.current == 0 {
            self.index += 1;
            self.current = *self.words.get(self.index)?;
        }
        let bit = self.current.trailing_zeros() as usize;
        self.current &= self.current - 1;
        Some(self.index * WORD_BITS + bit)
    }
}

pub struct Gaps<'a> {
    positions: CarPositions<'a>,
    first: Option<usize>,
    prev: Option<usize>,
    len: usize,
}

impl Iterator for Gaps<'_> {
    type Item = (usize, usize);

    #[inline]
    fn next(&mut self) -> Option<(usize, usize)> {
        let prev = self.prev?;
        match self.positions.next() {
            Some(pos) => {
                self.prev = Some(pos);
                Some((prev, pos - prev - 1))
            }
            None => {
                self.prev = None;
                let first = self.first?;
                Some((prev, first + self.len - prev - 1))
            }
        }
    }
}

/// Independent Bernoulli(ρ) occupation of every site.
pub fn init_bernoulli(params: &ModelParams, seed: u64) -> Configuration {
    init_bernoulli_with(params.lattice_size, params.density, &mut rng_for(seed, 0))
}

pub fn init_bernoulli_with<R: Rng + ?Sized>(
    lattice_size: usize,
    density: f64,
    rng: &mut R,
) -> Configuration {
    assert!(lattice_size > 0, "lattice size must be at least 1");
    assert!((0.0..=1.0).contains(&density), "density outside [0, 1]");
    let mut config = Configuration::zeros(lattice_size);
    for site in 0..lattice_size {
        if rng.gen_bool(density) {
            config.set(site);
        }
    }
    config
}

/// Exactly `cars` cars placed on a uniformly random subset of sites.
pub fn init_fixed_count(lattice_size: usize, cars: usize, seed: u64) -> Result<Configuration> {
    init_fixed_count_with(lattice_size, cars, &mut rng_for(seed, 0))
}

pub fn init_fixed_count_with<R: Rng + ?Sized>(
    lattice_size: usize,
    cars: usize,
    rng: &mut R,
) -> Result<Configuration> {
    if cars > lattice_size {
        return Err(invalid(format!(
            "{cars} cars do not fit on {lattice_size} sites"
        )));
    }
    let mut config = Configuration::empty(lattice_size)?;
    for site in index::sample(rng, lattice_size, cars) {
        config.set(site);
    }
    Ok(config)
}

/// One synchronous update: every car advances `min(gap, m)` sites.
///
/// # Panics
///
/// If `m == 0`.
pub fn step(config: &Configuration, m: u32) -> Configuration {
    let mut out = Configuration::zeros(config.len);
    step_into(config, m, &mut out);
    out
}

/// [`step`] writing into a caller-owned buffer of the same length.
pub fn step_into(config: &Configuration, m: u32, out: &mut Configuration) {
    assert!(m >= 1, "maximum speed must be at least 1");
    assert_eq!(config.len, out.len, "buffer length mismatch");
    out.words.fill(0);
    let len = config.len;
    let m = m as usize;
    for (pos, gap) in config.gaps() {
        let target = pos + gap.min(m);
        out.set(if target >= len { target - len } else { target });
    }
}

/// Local function of the rule with left radius `m` and right radius 1.
///
/// `window` holds `s(i-m), ..., s(i), s(i+1)`. An occupied site stays
/// occupied iff its right neighbour is occupied. An empty site becomes
/// occupied iff the nearest car within `m` sites to its left is exactly `m`
/// away, or that car exists and site `i+1` is occupied (the car stops at `i`).
#[inline]
pub fn local_rule(window: &[u8], m: usize) -> u8 {
    debug_assert_eq!(window.len(), m + 2);
    let centre = window[m];
    let right = window[m + 1];
    if centre == 1 {
        return right;
    }
    match window[..m].iter().rev().position(|&c| c == 1) {
        Some(offset) => u8::from(offset + 1 == m || right == 1),
        None => 0,
    }
}

/// One synchronous update through the site-local rule; agrees with [`step`].
pub fn step_local(config: &Configuration, m: u32) -> Configuration {
    assert!(m >= 1, "maximum speed must be at least 1");
    let m = m as usize;
    let len = config.len;
    let cells = config.cells();
    let mut window = vec![0u8; m + 2];
    let mut out = Configuration::zeros(len);
    for i in 0..len {
        for (k, slot) in window.iter_mut().enumerate() {
            // offset k corresponds to site i - m + k
            *slot = cells[(i + k + len * (m / len + 1) - m) % len];
        }
        if local_rule(&window, m) == 1 {
            out.set(i);
        }
    }
    out
}

/// A finite word over {0, 1} with open boundaries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryString {
    symbols: Vec<u8>,
}

#[allow(clippy::len_without_is_empty)]
impl BinaryString {
    pub fn new(symbols: Vec<u8>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(invalid("binary string must have at least one symbol"));
        }
        if let Some(bad) = symbols.iter().find(|&&s| s > 1) {
            return Err(invalid(format!("symbol {bad} is not 0 or 1")));
        }
        Ok(Self { symbols })
    }

    /// `0^len`.
    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(vec![0; len])
    }

    /// Word whose symbol `i` is bit `i` of `index`.
    pub fn from_index(index: u64, len: usize) -> Result<Self> {
        if len > 64 {
            return Err(invalid("word index limited to 64 symbols"));
        }
        Self::new((0..len).map(|i| (index >> i & 1) as u8).collect())
    }

    /// Inverse of [`BinaryString::from_index`]; `None` past 64 symbols.
    pub fn to_index(&self) -> Option<u64> {
        (self.symbols.len() <= 64).then(|| {
            self.symbols
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &s)| acc | (s as u64) << i)
        })
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn ones(&self) -> usize {
        self.symbols.iter().filter(|&&s| s == 1).count()
    }
}

impl fmt::Display for BinaryString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.symbols {
            f.write_str(if s == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BinaryString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(parse_bits(s)?)
    }
}

/// Tri-state open-boundary evolution: `None` marks a site whose state depends
/// on cells outside the word.
///
/// Returns the full-width row after `t` steps. Sites outside the light cone
/// of the word are `None`; for a word of length `p` the determined sites are
/// exactly the offsets `m*t .. p - t`.
pub fn evolve_open(word: &BinaryString, m: u32, t: usize) -> Vec<Option<u8>> {
    assert!(m >= 1, "maximum speed must be at least 1");
    let mut row: Vec<Option<u8>> = word.symbols.iter().map(|&s| Some(s)).collect();
    let mut evolver = OpenEvolver::new(m as usize, row.len());
    for _ in 0..t {
        evolver.advance(&mut row);
    }
    row
}

/// Determined cells of the word after `t` open-boundary steps.
///
/// The result has length `len - (m + 1) * t` and corresponds to offsets
/// `m*t .. len - t` of the input.
pub fn iterate_open(word: &BinaryString, m: u32, t: usize) -> Result<BinaryString> {
    if m == 0 {
        return Err(invalid("maximum speed must be at least 1"));
    }
    let shrink = (m as usize + 1)
        .checked_mul(t)
        .filter(|&s| s < word.len())
        .ok_or_else(|| {
            invalid(format!(
                "word of length {} is too short for {t} steps at m = {m}",
                word.len()
            ))
        })?;
    let row = evolve_open(word, m, t);
    let known: Vec<u8> = row.iter().flatten().copied().collect();
    debug_assert_eq!(known.len(), word.len() - shrink);
    debug_assert!(row[m as usize * t..word.len() - t]
        .iter()
        .all(Option::is_some));
    BinaryString::new(known)
}

/// Reusable scratch for tri-state evolution of many words of one length.
pub(crate) struct OpenEvolver {
    m: usize,
    next: Vec<Option<u8>>,
    window: Vec<u8>,
}

impl OpenEvolver {
    pub(crate) fn new(m: usize, len: usize) -> Self {
        Self {
            m,
            next: vec![None; len],
            window: vec![0; m + 2],
        }
    }

    pub(crate) fn advance(&mut self, row: &mut Vec<Option<u8>>) {
        let m = self.m;
        let len = row.len();
        self.next.resize(len, None);
        for i in 0..len {
            self.next[i] = if i < m || i + 1 >= len {
                None
            } else {
                let mut known = true;
                for (slot, cell) in self.window.iter_mut().zip(&row[i - m..=i + 1]) {
                    match cell {
                        Some(c) => *slot = *c,
                        None => {
                            known = false;
                            break;
                        }
                    }
                }
                known.then(|| local_rule(&self.window, m))
            };
        }
        std::mem::swap(row, &mut self.next);
    }
}
