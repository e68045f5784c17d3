//! Label grids, image stacks and per-pixel seasonal compositing.
//!
//! Both grid types have a flat little-endian file layout used for test
//! fixtures:
//!
//! ```text
//! u32 height | u32 width | u32 bands | u32 dates
//! label grid  (bands = dates = 1): height*width u8 codes
//! image stack: dates x u32 date stamps (YYYYMMDD),
//!              dates*bands*height*width f32 values ([date][band][row][col]),
//!              dates*height*width u8 validity flags (1 = valid)
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use crate::domain::{ClassId, Fractions};
use crate::error::{Error, Result};

/// A per-pixel land-cover code raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelGrid {
    height: usize,
    width: usize,
    codes: Vec<u8>,
}

impl LabelGrid {
    /// Builds a grid, rejecting codes outside `map`'s code set.
    pub fn new(height: usize, width: usize, codes: Vec<u8>, map: &CodeMap) -> Result<Self> {
        if codes.len() != height * width {
            return Err(Error::DimensionMismatch {
                expected: height * width,
                found: codes.len(),
            });
        }
        if let Some(bad) = codes.iter().find(|c| !map.is_declared(**c)) {
            return Err(Error::InvalidInput(format!("code {bad} not in the declared code set")));
        }
        Ok(LabelGrid { height, width, codes })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn read(path: &Path, map: &CodeMap) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cur = Cursor::new(&bytes);
        let [h, w, bands, dates] = cur.header()?;
        if bands != 1 || dates != 1 {
            return Err(Error::Format("label grid must have one band and one date".into()));
        }
        let codes = cur.take(h * w)?.to_vec();
        cur.finish()?;
        LabelGrid::new(h, w, codes, map)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = header_bytes(self.height, self.width, 1, 1);
        out.extend_from_slice(&self.codes);
        write_file(path, &out)
    }
}

/// Product code set: which raw codes exist, which of them map to one of the
/// seven task classes, and the no-data sentinel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeMap {
    classes: HashMap<u8, Option<ClassId>>,
    nodata: u8,
}

impl CodeMap {
    pub fn new(classes: HashMap<u8, Option<ClassId>>, nodata: u8) -> Self {
        CodeMap { classes, nodata }
    }

    /// ESA WorldCover: eleven product codes, seven of which are task
    /// classes. Code 0 is no-data.
    pub fn worldcover() -> Self {
        let classes = [
            (10, Some(ClassId::TreeCover)),
            (20, Some(ClassId::Shrubland)),
            (30, Some(ClassId::Grassland)),
            (40, Some(ClassId::Cropland)),
            (50, Some(ClassId::Builtup)),
            (60, Some(ClassId::BareSparseVegetation)),
            (70, None), // snow and ice
            (80, Some(ClassId::PermanentWater)),
            (90, None),  // herbaceous wetland
            (95, None),  // mangroves
            (100, None), // moss and lichen
        ]
        .into_iter()
        .collect();
        CodeMap { classes, nodata: 0 }
    }

    pub fn nodata(&self) -> u8 {
        self.nodata
    }

    pub fn is_declared(&self, code: u8) -> bool {
        code == self.nodata || self.classes.contains_key(&code)
    }

    pub fn class_of(&self, code: u8) -> Option<ClassId> {
        self.classes.get(&code).copied().flatten()
    }

    /// Raw code for `class`, lowest first if several map to it.
    pub fn code_of(&self, class: ClassId) -> Option<u8> {
        self.classes
            .iter()
            .filter(|(_, c)| **c == Some(class))
            .map(|(code, _)| *code)
            .min()
    }
}

/// Fraction of valid (non-no-data) pixels carrying each task class.
pub fn compute_class_fractions(grid: &LabelGrid, map: &CodeMap) -> Result<Fractions> {
    if grid.codes.is_empty() {
        return Err(Error::InvalidInput("empty label grid".into()));
    }
    let mut histogram = [0u64; 256];
    for &code in &grid.codes {
        histogram[code as usize] += 1;
    }
    let valid: u64 = grid.codes.len() as u64 - histogram[map.nodata as usize];
    if valid == 0 {
        return Err(Error::NoValidPixels);
    }
    let mut counts = [0u64; ClassId::COUNT];
    for (code, &n) in histogram.iter().enumerate() {
        if code as u8 == map.nodata || n == 0 {
            continue;
        }
        match map.classes.get(&(code as u8)) {
            Some(Some(class)) => counts[*class as usize] += n,
            Some(None) => {}
            None => return Err(Error::InvalidInput(format!("code {code} not in the declared code set"))),
        }
    }
    let mut out = Fractions::default();
    for class in ClassId::ALL {
        out[class] = counts[class as usize] as f64 / valid as f64;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Season {
    Winter,
    Spring,
    Summer,
    Fall,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Winter, Season::Spring, Season::Summer, Season::Fall];

    /// Northern-hemisphere meteorological season of a calendar month.
    pub fn of_month(month: u32) -> Option<Season> {
        match month {
            12 | 1 | 2 => Some(Season::Winter),
            3..=5 => Some(Season::Spring),
            6..=8 => Some(Season::Summer),
            9..=11 => Some(Season::Fall),
            _ => None,
        }
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Season::Winter => "winter",
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Fall => "fall",
        })
    }
}

/// Assignment of acquisition dates (YYYYMMDD) to seasons.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeasonCalendar {
    map: BTreeMap<u32, Season>,
}

impl SeasonCalendar {
    pub fn new(map: BTreeMap<u32, Season>) -> Self {
        SeasonCalendar { map }
    }

    /// Meteorological seasons by month for each of `dates`.
    pub fn meteorological(dates: &[u32]) -> Self {
        let map = dates
            .iter()
            .filter_map(|&d| Season::of_month((d / 100) % 100).map(|s| (d, s)))
            .collect();
        SeasonCalendar { map }
    }

    pub fn season(&self, date: u32) -> Option<Season> {
        self.map.get(&date).copied()
    }
}

/// Multi-date, multi-band image stack with a per-date per-pixel validity
/// mask.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageStack {
    height: usize,
    width: usize,
    bands: usize,
    dates: Vec<u32>,
    /// `[date][band][pixel]`
    values: Vec<f32>,
    /// `[date][pixel]`
    valid: Vec<bool>,
}

impl ImageStack {
    pub fn new(
        height: usize,
        width: usize,
        bands: usize,
        dates: Vec<u32>,
        values: Vec<f32>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let px = height * width;
        if values.len() != dates.len() * bands * px {
            return Err(Error::DimensionMismatch {
                expected: dates.len() * bands * px,
                found: values.len(),
            });
        }
        if valid.len() != dates.len() * px {
            return Err(Error::DimensionMismatch {
                expected: dates.len() * px,
                found: valid.len(),
            });
        }
        Ok(ImageStack {
            height,
            width,
            bands,
            dates,
            values,
            valid,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn dates(&self) -> &[u32] {
        &self.dates
    }

    fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn value(&self, date: usize, band: usize, pixel: usize) -> f32 {
        self.values[(date * self.bands + band) * self.pixels() + pixel]
    }

    pub fn is_valid(&self, date: usize, pixel: usize) -> bool {
        self.valid[date * self.pixels() + pixel]
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cur = Cursor::new(&bytes);
        let [h, w, bands, n_dates] = cur.header()?;
        let dates = cur
            .take(n_dates * 4)?
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let values = cur
            .take(n_dates * bands * h * w * 4)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let valid = cur.take(n_dates * h * w)?.iter().map(|&b| b != 0).collect();
        cur.finish()?;
        ImageStack::new(h, w, bands, dates, values, valid)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = header_bytes(self.height, self.width, self.bands, self.dates.len());
        for d in &self.dates {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend(self.valid.iter().map(|&v| v as u8));
        write_file(path, &out)
    }
}

/// Per-season, per-band median grids. No-data pixels are NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct SeasonalComposite {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    /// Indexed by `Season as usize`, each `[band][pixel]`.
    pub grids: [Vec<f32>; 4],
}

impl SeasonalComposite {
    pub fn value(&self, season: Season, band: usize, pixel: usize) -> f32 {
        self.grids[season as usize][band * self.height * self.width + pixel]
    }
}

/// Median of each pixel's valid values within each season. An even number
/// of values yields the mean of the two middle ones; a pixel with no valid
/// value in a season is NaN.
pub fn seasonal_median_composite(stack: &ImageStack, calendar: &SeasonCalendar) -> Result<SeasonalComposite> {
    let mut by_season: [Vec<usize>; 4] = Default::default();
    for (i, &date) in stack.dates.iter().enumerate() {
        let season = calendar
            .season(date)
            .ok_or_else(|| Error::InvalidInput(format!("date {date} has no season")))?;
        by_season[season as usize].push(i);
    }
    if let Some(empty) = Season::ALL.iter().find(|s| by_season[**s as usize].is_empty()) {
        return Err(Error::EmptySeason(*empty));
    }

    let px = stack.pixels();
    let mut buf = Vec::new();
    let grids = Season::ALL.map(|season| {
        let dates = &by_season[season as usize];
        let mut grid = vec![f32::NAN; stack.bands * px];
        for band in 0..stack.bands {
            for pixel in 0..px {
                buf.clear();
                buf.extend(
                    dates
                        .iter()
                        .filter(|&&d| stack.is_valid(d, pixel))
                        .map(|&d| stack.value(d, band, pixel)),
                );
                if let Some(m) = median(&mut buf) {
                    grid[band * px + pixel] = m;
                }
            }
        }
        grid
    });
    Ok(SeasonalComposite {
        height: stack.height,
        width: stack.width,
        bands: stack.bands,
        grids,
    })
}

fn median(values: &mut [f32]) -> Option<f32> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let (_, &mut upper, _) = values.select_nth_unstable_by(n / 2, f32::total_cmp);
    if n % 2 == 1 {
        return Some(upper);
    }
    // the lower middle is the max of the left partition
    let lower = values[..n / 2].iter().copied().max_by(f32::total_cmp).unwrap();
    Some(((lower as f64 + upper as f64) / 2.0) as f32)
}

fn header_bytes(h: usize, w: usize, bands: usize, dates: usize) -> Vec<u8> {
    [h, w, bands, dates]
        .iter()
        .flat_map(|&v| (v as u32).to_le_bytes())
        .collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Cursor { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("truncated grid file".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn header(&mut self) -> Result<[usize; 4]> {
        let raw = self.take(16)?;
        Ok(std::array::from_fn(|i| {
            u32::from_le_bytes(raw[i * 4..i * 4 + 4].try_into().unwrap()) as usize
        }))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format("trailing bytes in grid file".into()));
        }
        Ok(())
    }
}
