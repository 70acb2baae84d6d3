//! Spectral-cube data model, the MSIC binary container, and the
//! preprocessing chain: dark-current removal, windowed filtering, and
//! window cropping into spectral signatures.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signatures::SignatureSet;

/// Default peak wavelengths (nm) of the nine-band acquisition plan.
pub const DEFAULT_PEAKS_NM: [f64; 9] = [405.0, 430.0, 500.0, 610.0, 660.0, 740.0, 850.0, 890.0, 950.0];

/// Default bit depth of the monochrome sensor.
pub const DEFAULT_BIT_DEPTH: u16 = 10;

/// Ordered band list: index and peak wavelength per band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPlan {
    peaks_nm: Vec<f64>,
}

impl BandPlan {
    /// Band indices run 0..B-1 with strictly increasing peak wavelengths.
    pub fn new(peaks_nm: Vec<f64>) -> Result<Self> {
        if peaks_nm.is_empty() {
            return Err(Error::InvalidInput("band plan needs at least one band".into()));
        }
        for w in &peaks_nm {
            if !w.is_finite() || *w <= 0.0 {
                return Err(Error::InvalidInput(format!("bad peak wavelength {w}")));
            }
        }
        for pair in peaks_nm.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidInput(
                    "peak wavelengths must be strictly increasing".into(),
                ));
            }
        }
        Ok(BandPlan { peaks_nm })
    }

    pub fn count(&self) -> usize {
        self.peaks_nm.len()
    }

    pub fn peak_nm(&self, band: usize) -> f64 {
        self.peaks_nm[band]
    }

    pub fn peaks(&self) -> &[f64] {
        &self.peaks_nm
    }
}

impl Default for BandPlan {
    fn default() -> Self {
        BandPlan::new(DEFAULT_PEAKS_NM.to_vec()).unwrap()
    }
}

/// Processing stage of a cube. Raw captures must be dark-subtracted before
/// filtering, and only filtered cubes are cropped into signatures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Raw,
    DarkSubtracted,
    Filtered,
}

impl Provenance {
    pub fn code(self) -> u8 {
        match self {
            Provenance::Raw => 0,
            Provenance::DarkSubtracted => 1,
            Provenance::Filtered => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Provenance::Raw),
            1 => Ok(Provenance::DarkSubtracted),
            2 => Ok(Provenance::Filtered),
            other => Err(Error::Format(format!("unknown provenance code {other}"))),
        }
    }
}

/// H x W x B stack of band images for one oil sample.
///
/// Pixels are stored band-major `(band, row, col)` as nonnegative real
/// intensities. Raw cubes are bounded by the sensor bit depth; filtered
/// cubes keep real values (no re-quantization).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCube {
    width: usize,
    height: usize,
    band_plan: BandPlan,
    bit_depth: u16,
    provenance: Provenance,
    pixels: Vec<f64>,
}

impl SpectralCube {
    pub fn new(
        width: usize,
        height: usize,
        band_plan: BandPlan,
        bit_depth: u16,
        provenance: Provenance,
        pixels: Vec<f64>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("cube dimensions must be positive".into()));
        }
        let expect = width * height * band_plan.count();
        if pixels.len() != expect {
            return Err(Error::DimensionMismatch(format!(
                "pixel count {} does not match {}x{}x{}",
                pixels.len(),
                height,
                width,
                band_plan.count()
            )));
        }
        let max_raw = ((1u32 << bit_depth) - 1) as f64;
        for &v in &pixels {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!("pixel value {v} out of range")));
            }
            if provenance == Provenance::Raw && v > max_raw {
                return Err(Error::InvalidInput(format!(
                    "raw pixel value {v} exceeds bit depth {bit_depth}"
                )));
            }
        }
        Ok(SpectralCube {
            width,
            height,
            band_plan,
            bit_depth,
            provenance,
            pixels,
        })
    }

    /// Constant-valued cube, mostly for tests and synthetic captures.
    pub fn constant(
        width: usize,
        height: usize,
        band_plan: BandPlan,
        value: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        let n = width * height * band_plan.count();
        SpectralCube::new(width, height, band_plan, DEFAULT_BIT_DEPTH, provenance, vec![value; n])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bands(&self) -> usize {
        self.band_plan.count()
    }

    pub fn band_plan(&self) -> &BandPlan {
        &self.band_plan
    }

    pub fn bit_depth(&self) -> u16 {
        self.bit_depth
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    #[inline]
    fn index(&self, band: usize, row: usize, col: usize) -> usize {
        (band * self.height + row) * self.width + col
    }

    #[inline]
    pub fn pixel(&self, band: usize, row: usize, col: usize) -> f64 {
        self.pixels[self.index(band, row, col)]
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    fn require_stage(&self, stage: Provenance, op: &str) -> Result<()> {
        if self.provenance != stage {
            return Err(Error::InvalidInput(format!(
                "{op} expects a {stage:?} cube, got {:?}",
                self.provenance
            )));
        }
        Ok(())
    }
}

/// One dark capture (zero illumination) per band acquisition session.
#[derive(Debug, Clone, PartialEq)]
pub struct DarkFrame {
    width: usize,
    height: usize,
    bands: usize,
    pixels: Vec<f64>,
}

impl DarkFrame {
    pub fn new(width: usize, height: usize, bands: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height * bands {
            return Err(Error::DimensionMismatch("dark frame pixel count".into()));
        }
        if pixels.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("dark frame values must be nonnegative".into()));
        }
        Ok(DarkFrame {
            width,
            height,
            bands,
            pixels,
        })
    }

    pub fn constant(width: usize, height: usize, bands: usize, value: f64) -> Result<Self> {
        DarkFrame::new(width, height, bands, vec![value; width * height * bands])
    }

    /// Interpret a raw cube capture as the session's dark frame.
    pub fn from_cube(cube: &SpectralCube) -> DarkFrame {
        DarkFrame {
            width: cube.width,
            height: cube.height,
            bands: cube.bands(),
            pixels: cube.pixels.clone(),
        }
    }
}

/// Square crop window; the default side of 30 yields 900 signatures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub row: usize,
    pub col: usize,
    pub side: usize,
}

impl WindowSpec {
    pub const DEFAULT_SIDE: usize = 30;

    pub fn new(row: usize, col: usize, side: usize) -> Self {
        WindowSpec { row, col, side }
    }

    pub fn centered(height: usize, width: usize, side: usize) -> Self {
        WindowSpec {
            row: (height.saturating_sub(side)) / 2,
            col: (width.saturating_sub(side)) / 2,
            side,
        }
    }

    fn check_bounds(&self, height: usize, width: usize) -> Result<()> {
        if self.side == 0 {
            return Err(Error::InvalidInput("window side must be positive".into()));
        }
        if self.row + self.side > height || self.col + self.side > width {
            return Err(Error::InvalidInput(format!(
                "window {}x{} at ({},{}) exceeds image bounds {}x{}",
                self.side, self.side, self.row, self.col, height, width
            )));
        }
        Ok(())
    }
}

/// Filtering mode for the windowed noise filter. The moving average is the
/// default; the median variant is kept for parity with the alternative
/// description of the same step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    Mean,
    Median,
}

impl std::str::FromStr for FilterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(FilterMode::Mean),
            "median" => Ok(FilterMode::Median),
            other => Err(Error::InvalidInput(format!("unknown filter mode {other:?}"))),
        }
    }
}

/// Remove the sensor dark current: `P = max(S - D, 0)` per band and pixel.
/// Negative differences clamp to zero since intensities are physical.
pub fn subtract_dark(cube: &SpectralCube, dark: &DarkFrame) -> Result<SpectralCube> {
    cube.require_stage(Provenance::Raw, "dark-current subtraction")?;
    if dark.width != cube.width || dark.height != cube.height || dark.bands != cube.bands() {
        return Err(Error::DimensionMismatch(format!(
            "dark frame {}x{}x{} does not match cube {}x{}x{}",
            dark.height,
            dark.width,
            dark.bands,
            cube.height,
            cube.width,
            cube.bands()
        )));
    }
    let pixels = cube
        .pixels
        .iter()
        .zip(dark.pixels.iter())
        .map(|(s, d)| (s - d).max(0.0))
        .collect();
    Ok(SpectralCube {
        width: cube.width,
        height: cube.height,
        band_plan: cube.band_plan.clone(),
        bit_depth: cube.bit_depth,
        provenance: Provenance::DarkSubtracted,
        pixels,
    })
}

/// Replace each pixel by the mean (or median) over its `(2w+1)^2`
/// neighborhood. Borders truncate the neighborhood to in-bounds pixels and
/// normalize by the in-bounds count.
pub fn window_filter(cube: &SpectralCube, half_width: usize, mode: FilterMode) -> Result<SpectralCube> {
    cube.require_stage(Provenance::DarkSubtracted, "window filtering")?;
    let k = 2 * half_width + 1;
    if k > cube.height.min(cube.width) {
        return Err(Error::InvalidInput(format!(
            "filter window {k}x{k} larger than image {}x{}",
            cube.height, cube.width
        )));
    }
    let (h, w) = (cube.height, cube.width);
    let mut out = vec![0.0_f64; cube.pixels.len()];
    match mode {
        FilterMode::Mean => {
            // Summed-area table per band; exact truncated-neighborhood means.
            let mut sat = vec![0.0_f64; (h + 1) * (w + 1)];
            for band in 0..cube.bands() {
                for r in 0..h {
                    for c in 0..w {
                        sat[(r + 1) * (w + 1) + (c + 1)] = cube.pixel(band, r, c)
                            + sat[r * (w + 1) + (c + 1)]
                            + sat[(r + 1) * (w + 1) + c]
                            - sat[r * (w + 1) + c];
                    }
                }
                for r in 0..h {
                    let r0 = r.saturating_sub(half_width);
                    let r1 = (r + half_width).min(h - 1);
                    for c in 0..w {
                        let c0 = c.saturating_sub(half_width);
                        let c1 = (c + half_width).min(w - 1);
                        let sum = sat[(r1 + 1) * (w + 1) + (c1 + 1)]
                            - sat[r0 * (w + 1) + (c1 + 1)]
                            - sat[(r1 + 1) * (w + 1) + c0]
                            + sat[r0 * (w + 1) + c0];
                        let count = ((r1 - r0 + 1) * (c1 - c0 + 1)) as f64;
                        out[(band * h + r) * w + c] = (sum / count).max(0.0);
                    }
                }
            }
        }
        FilterMode::Median => {
            let mut neigh = Vec::with_capacity(k * k);
            for band in 0..cube.bands() {
                for r in 0..h {
                    let r0 = r.saturating_sub(half_width);
                    let r1 = (r + half_width).min(h - 1);
                    for c in 0..w {
                        let c0 = c.saturating_sub(half_width);
                        let c1 = (c + half_width).min(w - 1);
                        neigh.clear();
                        for rr in r0..=r1 {
                            for cc in c0..=c1 {
                                neigh.push(cube.pixel(band, rr, cc));
                            }
                        }
                        neigh.sort_by(|a, b| a.partial_cmp(b).unwrap());
                        let n = neigh.len();
                        let med = if n % 2 == 1 {
                            neigh[n / 2]
                        } else {
                            0.5 * (neigh[n / 2 - 1] + neigh[n / 2])
                        };
                        out[(band * h + r) * w + c] = med;
                    }
                }
            }
        }
    }
    Ok(SpectralCube {
        width: cube.width,
        height: cube.height,
        band_plan: cube.band_plan.clone(),
        bit_depth: cube.bit_depth,
        provenance: Provenance::Filtered,
        pixels: out,
    })
}

/// Crop a window into per-pixel spectral signatures, row-major over the
/// window. Each signature reads across all bands at one pixel.
pub fn crop_signatures(cube: &SpectralCube, window: WindowSpec) -> Result<SignatureSet> {
    cube.require_stage(Provenance::Filtered, "signature cropping")?;
    window.check_bounds(cube.height, cube.width)?;
    let bands = cube.bands();
    let mut set = SignatureSet::new(bands);
    let mut sig = vec![0.0_f64; bands];
    for r in window.row..window.row + window.side {
        for c in window.col..window.col + window.side {
            for (b, v) in sig.iter_mut().enumerate() {
                *v = cube.pixel(b, r, c);
            }
            set.push(&sig, 0, 0)?;
        }
    }
    Ok(set)
}

// ---------------------------------------------------------------------------
// MSIC binary container
// ---------------------------------------------------------------------------

const MSIC_MAGIC: &[u8; 4] = b"MSIC";
const MSIC_VERSION: u16 = 1;

/// Write a cube to the MSIC container: magic, u16 version, u32 H, u32 W,
/// u16 B, u16 bit depth, u8 provenance code, B f32 peak wavelengths, then
/// H*W*B f32 intensities band-major. All integers and floats little-endian.
pub fn write_msic<W: Write>(cube: &SpectralCube, mut w: W) -> Result<()> {
    w.write_all(MSIC_MAGIC)?;
    w.write_all(&MSIC_VERSION.to_le_bytes())?;
    w.write_all(&(cube.height as u32).to_le_bytes())?;
    w.write_all(&(cube.width as u32).to_le_bytes())?;
    w.write_all(&(cube.bands() as u16).to_le_bytes())?;
    w.write_all(&cube.bit_depth.to_le_bytes())?;
    w.write_all(&[cube.provenance.code()])?;
    for band in 0..cube.bands() {
        w.write_all(&(cube.band_plan.peak_nm(band) as f32).to_le_bytes())?;
    }
    for &v in &cube.pixels {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn save_msic<P: AsRef<Path>>(cube: &SpectralCube, path: P) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_msic(cube, std::io::BufWriter::new(file))
}

pub fn read_msic<R: Read>(mut r: R) -> Result<SpectralCube> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MSIC_MAGIC {
        return Err(Error::Format("not an MSIC file (bad magic)".into()));
    }
    let mut b2 = [0u8; 2];
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b2)?;
    let version = u16::from_le_bytes(b2);
    if version != MSIC_VERSION {
        return Err(Error::Format(format!("unsupported MSIC version {version}")));
    }
    r.read_exact(&mut b4)?;
    let height = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let width = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b2)?;
    let bands = u16::from_le_bytes(b2) as usize;
    r.read_exact(&mut b2)?;
    let bit_depth = u16::from_le_bytes(b2);
    let mut code = [0u8; 1];
    r.read_exact(&mut code)?;
    let provenance = Provenance::from_code(code[0])?;
    let mut peaks = Vec::with_capacity(bands);
    for _ in 0..bands {
        r.read_exact(&mut b4)?;
        peaks.push(f32::from_le_bytes(b4) as f64);
    }
    let plan = BandPlan::new(peaks)?;
    let count = height
        .checked_mul(width)
        .and_then(|hw| hw.checked_mul(bands))
        .ok_or_else(|| Error::Format("MSIC dimensions overflow".into()))?;
    let mut pixels = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut b4)?;
        pixels.push(f32::from_le_bytes(b4) as f64);
    }
    // Reject trailing garbage.
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::Format("MSIC file has trailing bytes".into()));
    }
    SpectralCube::new(width, height, plan, bit_depth, provenance, pixels)
}

pub fn load_msic<P: AsRef<Path>>(path: P) -> Result<SpectralCube> {
    let file = std::fs::File::open(path)?;
    read_msic(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(bands: usize) -> BandPlan {
        BandPlan::new((0..bands).map(|b| 400.0 + 50.0 * b as f64).collect()).unwrap()
    }

    fn raw_cube(width: usize, height: usize, bands: usize, fill: impl Fn(usize, usize, usize) -> f64) -> SpectralCube {
        let mut pixels = vec![0.0; width * height * bands];
        for b in 0..bands {
            for r in 0..height {
                for c in 0..width {
                    pixels[(b * height + r) * width + c] = fill(b, r, c);
                }
            }
        }
        SpectralCube::new(width, height, plan(bands), DEFAULT_BIT_DEPTH, Provenance::Raw, pixels).unwrap()
    }

    #[test]
    fn default_band_plan_matches_hardware() {
        let p = BandPlan::default();
        assert_eq!(p.count(), 9);
        assert_eq!(p.peak_nm(0), 405.0);
        assert_eq!(p.peak_nm(8), 950.0);
    }

    #[test]
    fn band_plan_rejects_unsorted_peaks() {
        assert!(BandPlan::new(vec![500.0, 400.0]).is_err());
        assert!(BandPlan::new(vec![]).is_err());
        assert!(BandPlan::new(vec![-1.0]).is_err());
    }

    #[test]
    fn raw_cube_rejects_overflow_values() {
        let pixels = vec![1024.0; 4];
        assert!(SpectralCube::new(2, 2, plan(1), 10, Provenance::Raw, pixels).is_err());
        let pixels = vec![1023.0; 4];
        assert!(SpectralCube::new(2, 2, plan(1), 10, Provenance::Raw, pixels).is_ok());
    }

    #[test]
    fn subtract_dark_basic_arithmetic() {
        let cube = raw_cube(2, 2, 1, |_, _, _| 100.0);
        let dark = DarkFrame::constant(2, 2, 1, 10.0).unwrap();
        let out = subtract_dark(&cube, &dark).unwrap();
        assert!(out.pixels().iter().all(|&v| v == 90.0));
        assert_eq!(out.provenance(), Provenance::DarkSubtracted);
    }

    #[test]
    fn subtract_dark_clamps_negative_to_zero() {
        let cube = raw_cube(1, 1, 1, |_, _, _| 5.0);
        let dark = DarkFrame::constant(1, 1, 1, 10.0).unwrap();
        let out = subtract_dark(&cube, &dark).unwrap();
        assert_eq!(out.pixel(0, 0, 0), 0.0);
    }

    #[test]
    fn subtract_zero_dark_is_identity() {
        let cube = raw_cube(3, 2, 2, |b, r, c| (b * 10 + r * 3 + c) as f64);
        let dark = DarkFrame::constant(3, 2, 2, 0.0).unwrap();
        let out = subtract_dark(&cube, &dark).unwrap();
        assert_eq!(out.pixels(), cube.pixels());
    }

    #[test]
    fn subtract_dark_checks_stage_and_dims() {
        let cube = raw_cube(2, 2, 1, |_, _, _| 1.0);
        let dark = DarkFrame::constant(3, 2, 1, 0.0).unwrap();
        assert!(subtract_dark(&cube, &dark).is_err());
        let dark_ok = DarkFrame::constant(2, 2, 1, 0.0).unwrap();
        let once = subtract_dark(&cube, &dark_ok).unwrap();
        assert!(subtract_dark(&once, &dark_ok).is_err());
    }

    #[test]
    fn subtract_dark_is_monotone_in_signal() {
        let low = raw_cube(2, 2, 1, |_, r, c| (r * 2 + c) as f64);
        let high = raw_cube(2, 2, 1, |_, r, c| (r * 2 + c) as f64 + 3.0);
        let dark = DarkFrame::constant(2, 2, 1, 2.0).unwrap();
        let a = subtract_dark(&low, &dark).unwrap();
        let b = subtract_dark(&high, &dark).unwrap();
        for (x, y) in a.pixels().iter().zip(b.pixels()) {
            assert!(y >= x);
        }
    }

    #[test]
    fn filter_constant_image_is_fixed_point() {
        let cube = raw_cube(8, 8, 2, |_, _, _| 7.25);
        let dark = DarkFrame::constant(8, 8, 2, 0.0).unwrap();
        let ds = subtract_dark(&cube, &dark).unwrap();
        for mode in [FilterMode::Mean, FilterMode::Median] {
            let f = window_filter(&ds, 2, mode).unwrap();
            assert!(f.pixels().iter().all(|&v| v == 7.25), "mode {mode:?}");
            assert_eq!(f.provenance(), Provenance::Filtered);
        }
    }

    #[test]
    fn filter_center_of_one_to_nine() {
        // 3x3 image 1..9 row-major: center mean and median are both 5.
        let cube = raw_cube(3, 3, 1, |_, r, c| (r * 3 + c + 1) as f64);
        let dark = DarkFrame::constant(3, 3, 1, 0.0).unwrap();
        let ds = subtract_dark(&cube, &dark).unwrap();
        let mean = window_filter(&ds, 1, FilterMode::Mean).unwrap();
        assert!((mean.pixel(0, 1, 1) - 5.0).abs() < 1e-12);
        let med = window_filter(&ds, 1, FilterMode::Median).unwrap();
        assert_eq!(med.pixel(0, 1, 1), 5.0);
    }

    #[test]
    fn filter_border_truncates_neighborhood() {
        let cube = raw_cube(3, 3, 1, |_, r, c| (r * 3 + c + 1) as f64);
        let dark = DarkFrame::constant(3, 3, 1, 0.0).unwrap();
        let ds = subtract_dark(&cube, &dark).unwrap();
        let mean = window_filter(&ds, 1, FilterMode::Mean).unwrap();
        // Top-left corner sees {1,2,4,5}: mean 3.
        assert!((mean.pixel(0, 0, 0) - 3.0).abs() < 1e-12);
        // Median of {1,2,4,5} with even count: midpoint 3.
        let med = window_filter(&ds, 1, FilterMode::Median).unwrap();
        assert_eq!(med.pixel(0, 0, 0), 3.0);
    }

    #[test]
    fn filter_rejects_oversized_window() {
        let cube = raw_cube(3, 3, 1, |_, _, _| 1.0);
        let dark = DarkFrame::constant(3, 3, 1, 0.0).unwrap();
        let ds = subtract_dark(&cube, &dark).unwrap();
        assert!(window_filter(&ds, 2, FilterMode::Mean).is_err());
    }

    #[test]
    fn mean_filter_preserves_linear_ramp_interior() {
        // On a linear ramp the symmetric window mean equals the center value.
        let cube = raw_cube(9, 9, 1, |_, r, _| 10.0 * r as f64);
        let dark = DarkFrame::constant(9, 9, 1, 0.0).unwrap();
        let ds = subtract_dark(&cube, &dark).unwrap();
        let f = window_filter(&ds, 2, FilterMode::Mean).unwrap();
        for r in 2..7 {
            for c in 2..7 {
                assert!(
                    (f.pixel(0, r, c) - 10.0 * r as f64).abs() < 1e-9,
                    "interior ramp value changed at ({r},{c})"
                );
            }
        }
    }

    #[test]
    fn crop_default_window_yields_900_signatures() {
        let cube = raw_cube(40, 40, 3, |b, _, _| b as f64);
        let dark = DarkFrame::constant(40, 40, 3, 0.0).unwrap();
        let filtered = window_filter(&subtract_dark(&cube, &dark).unwrap(), 1, FilterMode::Mean).unwrap();
        let set = crop_signatures(&filtered, WindowSpec::new(5, 5, WindowSpec::DEFAULT_SIDE)).unwrap();
        assert_eq!(set.len(), 900);
        assert_eq!(set.dim(), 3);
    }

    #[test]
    fn crop_single_pixel_window() {
        let cube = raw_cube(4, 4, 2, |b, r, c| (100 * b + 10 * r + c) as f64);
        let dark = DarkFrame::constant(4, 4, 2, 0.0).unwrap();
        let filtered = window_filter(&subtract_dark(&cube, &dark).unwrap(), 0, FilterMode::Mean).unwrap();
        let set = crop_signatures(&filtered, WindowSpec::new(2, 3, 1)).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.signature(0), &[23.0, 123.0]);
    }

    #[test]
    fn crop_disjoint_windows_on_constant_cube_agree() {
        let cube = SpectralCube::constant(20, 20, plan(2), 4.5, Provenance::Filtered).unwrap();
        let a = crop_signatures(&cube, WindowSpec::new(0, 0, 5)).unwrap();
        let b = crop_signatures(&cube, WindowSpec::new(10, 12, 5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn crop_rejects_out_of_bounds_and_raw_cubes() {
        let cube = SpectralCube::constant(10, 10, plan(1), 1.0, Provenance::Filtered).unwrap();
        assert!(crop_signatures(&cube, WindowSpec::new(5, 5, 6)).is_err());
        let raw = SpectralCube::constant(10, 10, plan(1), 1.0, Provenance::Raw).unwrap();
        assert!(crop_signatures(&raw, WindowSpec::new(0, 0, 5)).is_err());
    }

    #[test]
    fn crop_then_filter_commutes_with_filter_then_crop_in_interior() {
        let w = 2usize;
        let cube = raw_cube(16, 16, 1, |_, r, c| ((r * 31 + c * 17) % 23) as f64);
        let dark = DarkFrame::constant(16, 16, 1, 0.0).unwrap();
        let ds = subtract_dark(&cube, &dark).unwrap();

        // Route A: filter the whole cube, then crop the inner window.
        let window = WindowSpec::new(5, 6, 4);
        let route_a = crop_signatures(&window_filter(&ds, w, FilterMode::Mean).unwrap(), window).unwrap();

        // Route B: crop a region expanded by w, filter it, then take the
        // interior that corresponds to the original window.
        let exp_row = window.row - w;
        let exp_col = window.col - w;
        let exp_side = window.side + 2 * w;
        let mut region = Vec::new();
        for r in exp_row..exp_row + exp_side {
            for c in exp_col..exp_col + exp_side {
                region.push(ds.pixel(0, r, c));
            }
        }
        let sub = SpectralCube::new(exp_side, exp_side, plan(1), DEFAULT_BIT_DEPTH, Provenance::DarkSubtracted, region).unwrap();
        let sub_f = window_filter(&sub, w, FilterMode::Mean).unwrap();
        let route_b = crop_signatures(&sub_f, WindowSpec::new(w, w, window.side)).unwrap();

        assert_eq!(route_a.len(), route_b.len());
        for i in 0..route_a.len() {
            for b in 0..1 {
                assert!(
                    (route_a.signature(i)[b] - route_b.signature(i)[b]).abs() < 1e-9,
                    "signature {i} band {b} differs"
                );
            }
        }
    }

    #[test]
    fn preprocessing_is_deterministic() {
        let cube = raw_cube(12, 12, 2, |b, r, c| ((b + 1) * (r + 2) * (c + 3) % 801) as f64);
        let dark = DarkFrame::constant(12, 12, 2, 1.5).unwrap();
        let run = || {
            let f = window_filter(&subtract_dark(&cube, &dark).unwrap(), 2, FilterMode::Mean).unwrap();
            crop_signatures(&f, WindowSpec::new(3, 3, 6)).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn msic_round_trip() {
        let cube = raw_cube(5, 4, 3, |b, r, c| (b * 100 + r * 10 + c) as f64);
        let mut buf = Vec::new();
        write_msic(&cube, &mut buf).unwrap();
        assert_eq!(&buf[0..4], b"MSIC");
        let back = read_msic(&buf[..]).unwrap();
        assert_eq!(back, cube);
    }

    #[test]
    fn msic_header_layout_is_frozen() {
        let cube = SpectralCube::new(2, 1, plan(1), 10, Provenance::Filtered, vec![1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        write_msic(&cube, &mut buf).unwrap();
        // magic, version=1, H=1, W=2, B=1, depth=10, provenance=2
        assert_eq!(&buf[0..4], b"MSIC");
        assert_eq!(u16::from_le_bytes([buf[4], buf[5]]), 1);
        assert_eq!(u32::from_le_bytes([buf[6], buf[7], buf[8], buf[9]]), 1);
        assert_eq!(u32::from_le_bytes([buf[10], buf[11], buf[12], buf[13]]), 2);
        assert_eq!(u16::from_le_bytes([buf[14], buf[15]]), 1);
        assert_eq!(u16::from_le_bytes([buf[16], buf[17]]), 10);
        assert_eq!(buf[18], 2);
        assert_eq!(buf.len(), 19 + 4 + 8);
    }

    #[test]
    fn msic_rejects_corrupt_input() {
        assert!(read_msic(&b"NOPE"[..]).is_err());
        let cube = raw_cube(2, 2, 1, |_, _, _| 1.0);
        let mut buf = Vec::new();
        write_msic(&cube, &mut buf).unwrap();
        buf.truncate(buf.len() - 2);
        assert!(read_msic(&buf[..]).is_err());
        let mut long = Vec::new();
        write_msic(&cube, &mut long).unwrap();
        long.push(0);
        assert!(read_msic(&long[..]).is_err());
    }
}
