//! Transverse LP-mode fields of the few-mode fiber.
//!
//! Mode shapes use the Laguerre-Gauss approximation of weakly guiding LP
//! modes with a single waist `w`; all lengths below are in units of `w`:
//!
//! * LP01  ∝ exp(-r²)
//! * LP11a ∝ r exp(-r²) cos θ
//! * LP11b ∝ r exp(-r²) sin θ
//!
//! Each basis field is normalised on the grid before it is combined, so the
//! synthesised field of a normalised [`SpatialQubit`] carries unit power.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;

/// `amp0 |LP11a⟩ + amp1 |LP11b⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialQubit {
    pub amp0: Complex64,
    pub amp1: Complex64,
}

impl SpatialQubit {
    pub fn new(amp0: Complex64, amp1: Complex64) -> Result<Self> {
        let q = SpatialQubit { amp0, amp1 };
        q.check_normalized()?;
        Ok(q)
    }

    /// Rescales an arbitrary nonzero pair onto the unit sphere.
    pub fn normalized(amp0: Complex64, amp1: Complex64) -> Result<Self> {
        let n = (amp0.norm_sqr() + amp1.norm_sqr()).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Normalization { norm: n * n });
        }
        Ok(SpatialQubit {
            amp0: amp0 / n,
            amp1: amp1 / n,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp0.norm_sqr() + self.amp1.norm_sqr()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL || !n.is_finite() {
            return Err(Error::Normalization { norm: n });
        }
        Ok(())
    }

    /// Removes the global phase so that `amp0` is real and non-negative
    /// (or, when `amp0 == 0`, so that `amp1` is).
    pub fn canonical(&self) -> Self {
        let pivot = if self.amp0.norm() > 1e-15 {
            self.amp0
        } else {
            self.amp1
        };
        if pivot.norm() == 0.0 {
            return *self;
        }
        let phase = pivot.conj() / pivot.norm();
        SpatialQubit {
            amp0: self.amp0 * phase,
            amp1: self.amp1 * phase,
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &SpatialQubit) -> Complex64 {
        self.amp0.conj() * other.amp0 + self.amp1.conj() * other.amp1
    }

    /// `|⟨self|other⟩|²`; 1 means equal up to a global phase.
    pub fn fidelity(&self, other: &SpatialQubit) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Projection probabilities onto `(LP11a, LP11b)`.
    pub fn populations(&self) -> [f64; 2] {
        [self.amp0.norm_sqr(), self.amp1.norm_sqr()]
    }
}

/// Fiber modes and the named LP11 superpositions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeBasis {
    Lp01,
    Lp11a,
    Lp11b,
    LpPlus,
    LpMinus,
    OamPlus,
    OamMinus,
}

impl ModeBasis {
    /// Eigenstates of the three mutually unbiased LP11 bases.
    pub const MUB_STATES: [ModeBasis; 6] = [
        ModeBasis::Lp11a,
        ModeBasis::Lp11b,
        ModeBasis::LpPlus,
        ModeBasis::LpMinus,
        ModeBasis::OamPlus,
        ModeBasis::OamMinus,
    ];

    /// The state as an LP11 qubit; `None` for LP01, which lies outside the
    /// qubit space.
    pub fn qubit(self) -> Option<SpatialQubit> {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let (a, b) = match self {
            ModeBasis::Lp01 => return None,
            ModeBasis::Lp11a => (one, zero),
            ModeBasis::Lp11b => (zero, one),
            ModeBasis::LpPlus => (h, h),
            ModeBasis::LpMinus => (h, -h),
            ModeBasis::OamPlus => (h, h * Complex64::from_polar(1.0, PI / 2.0)),
            ModeBasis::OamMinus => (h, h * Complex64::from_polar(1.0, -PI / 2.0)),
        };
        Some(SpatialQubit { amp0: a, amp1: b })
    }

    /// Index of the basis the state belongs to (0: LP11a/b, 1: LP±, 2: OAM±).
    pub fn mub_index(self) -> Option<usize> {
        match self {
            ModeBasis::Lp01 => None,
            ModeBasis::Lp11a | ModeBasis::Lp11b => Some(0),
            ModeBasis::LpPlus | ModeBasis::LpMinus => Some(1),
            ModeBasis::OamPlus | ModeBasis::OamMinus => Some(2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModeBasis::Lp01 => "lp01",
            ModeBasis::Lp11a => "lp11a",
            ModeBasis::Lp11b => "lp11b",
            ModeBasis::LpPlus => "lp_plus",
            ModeBasis::LpMinus => "lp_minus",
            ModeBasis::OamPlus => "oam_plus",
            ModeBasis::OamMinus => "oam_minus",
        }
    }
}

/// Sampling of the transverse plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Pixels per side.
    pub size: usize,
    /// Half-width of the field of view in units of the mode waist.
    pub extent: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            size: 256,
            extent: 3.0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.size < 16 {
            return Err(Error::param(format!("grid size {} < 16", self.size)));
        }
        if !(self.extent.is_finite() && self.extent > 0.0) {
            return Err(Error::param(format!("grid extent {} must be positive", self.extent)));
        }
        Ok(())
    }

    /// Pixel pitch.
    pub fn step(&self) -> f64 {
        2.0 * self.extent / self.size as f64
    }

    /// Coordinate of pixel index `i`; index `size / 2` sits on the axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.size / 2) as f64) * self.step()
    }

    pub fn pixel_area(&self) -> f64 {
        self.step() * self.step()
    }
}

/// Complex field samples, row-major with rows along `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid {
    pub spec: GridSpec,
    pub values: Vec<Complex64>,
}

impl FieldGrid {
    pub fn zeros(spec: GridSpec) -> Self {
        FieldGrid {
            spec,
            values: vec![Complex64::new(0.0, 0.0); spec.size * spec.size],
        }
    }

    fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let n = spec.size;
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            let y = spec.coord(j);
            for i in 0..n {
                values.push(f(spec.coord(i), y));
            }
        }
        FieldGrid { spec, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[j * self.spec.size + i]
    }

    /// `Σ |E|² ΔA`.
    pub fn power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.spec.pixel_area()
    }

    /// Discrete `⟨self|other⟩ = Σ conj(E₁) E₂ ΔA`.
    pub fn inner(&self, other: &FieldGrid) -> Result<Complex64> {
        if self.spec.size != other.spec.size {
            return Err(Error::param("grid size mismatch"));
        }
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.spec.pixel_area())
    }

    pub fn scale(&self, c: Complex64) -> FieldGrid {
        FieldGrid {
            spec: self.spec,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &FieldGrid) -> Result<FieldGrid> {
        if self.spec.size != other.spec.size {
            return Err(Error::param("grid size mismatch"));
        }
        Ok(FieldGrid {
            spec: self.spec,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn intensity(&self) -> Image {
        Image {
            spec: self.spec,
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    /// Bilinear interpolation at continuous coordinates (units of `w`).
    pub fn sample(&self, x: f64, y: f64) -> Complex64 {
        let n = self.spec.size;
        let step = self.spec.step();
        let fx = x / step + (n / 2) as f64;
        let fy = y / step + (n / 2) as f64;
        if fx < 0.0 || fy < 0.0 || fx > (n - 1) as f64 || fy > (n - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let i0 = (fx.floor() as usize).min(n - 2);
        let j0 = (fy.floor() as usize).min(n - 2);
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        self.at(i0, j0) * ((1.0 - tx) * (1.0 - ty))
            + self.at(i0 + 1, j0) * (tx * (1.0 - ty))
            + self.at(i0, j0 + 1) * ((1.0 - tx) * ty)
            + self.at(i0 + 1, j0 + 1) * (tx * ty)
    }

    /// Accumulated phase of the field around a centred circle of `radius`
    /// (units of `w`), from `samples` bilinear samples.
    pub fn phase_winding(&self, radius: f64, samples: usize) -> f64 {
        let pts: Vec<Complex64> = (0..samples)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / samples as f64;
                self.sample(radius * t.cos(), radius * t.sin())
            })
            .collect();
        (0..samples)
            .map(|k| (pts[(k + 1) % samples] * pts[k].conj()).arg())
            .sum()
    }
}

/// Real-valued image (intensity or interferogram).
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl Image {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.spec.size + i]
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Mirror across the horizontal axis (`y → -y`). Row 0 has no mirror
    /// partner on an even grid and is returned unchanged.
    pub fn mirror_y(&self) -> Image {
        let n = self.spec.size;
        let mut out = self.clone();
        for j in 1..n {
            let src = n - j;
            out.values[j * n..(j + 1) * n].copy_from_slice(&self.values[src * n..(src + 1) * n]);
        }
        out
    }

    /// RMS difference over the pixels that have a mirror partner
    /// (rows and columns `1..size`).
    pub fn rms_diff_interior(&self, other: &Image) -> f64 {
        let n = self.spec.size;
        let mut acc = 0.0;
        for j in 1..n {
            for i in 1..n {
                let d = self.at(i, j) - other.at(i, j);
                acc += d * d;
            }
        }
        (acc / ((n - 1) * (n - 1)) as f64).sqrt()
    }
}

fn basis_profile(mode: ModeBasis, x: f64, y: f64) -> Complex64 {
    let g = (-(x * x + y * y)).exp();
    let v = match mode {
        ModeBasis::Lp01 => g,
        ModeBasis::Lp11a => x * g,
        ModeBasis::Lp11b => y * g,
        _ => unreachable!("basis_profile called with a superposition"),
    };
    Complex64::new(v, 0.0)
}

/// One of the three fiber modes, L2-normalised on the grid.
pub fn basis_field(mode: ModeBasis, spec: GridSpec) -> Result<FieldGrid> {
    spec.validate()?;
    if let Some(q) = mode.qubit() {
        if !matches!(mode, ModeBasis::Lp11a | ModeBasis::Lp11b) {
            return synthesize_field(&q, spec);
        }
    }
    let raw = FieldGrid::from_fn(spec, |x, y| basis_profile(mode, x, y));
    let p = raw.power();
    Ok(raw.scale(Complex64::new(1.0 / p.sqrt(), 0.0)))
}

/// `amp0 · LP11a + amp1 · LP11b` on the grid.
pub fn synthesize_field(state: &SpatialQubit, spec: GridSpec) -> Result<FieldGrid> {
    spec.validate()?;
    state.check_normalized()?;
    Ok(combine(state.amp0, state.amp1, spec))
}

/// Unchecked linear combination; used where linearity is the point.
pub fn combine(amp0: Complex64, amp1: Complex64, spec: GridSpec) -> FieldGrid {
    let a = FieldGrid::from_fn(spec, |x, y| basis_profile(ModeBasis::Lp11a, x, y));
    let b = FieldGrid::from_fn(spec, |x, y| basis_profile(ModeBasis::Lp11b, x, y));
    let na = 1.0 / a.power().sqrt();
    let nb = 1.0 / b.power().sqrt();
    let (ca, cb) = (amp0 * na, amp1 * nb);
    FieldGrid {
        spec,
        values: a
            .values
            .iter()
            .zip(&b.values)
            .map(|(ea, eb)| ea * ca + eb * cb)
            .collect(),
    }
}

/// Fundamental-mode reference beam used for interferograms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferenceSpec {
    /// Reference power relative to the mode power.
    pub relative_power: f64,
    /// Quadratic wavefront phase `k r² / 2R` evaluated at `r = w`, in radians.
    pub curvature: f64,
    /// Reference waist in units of the mode waist.
    pub waist: f64,
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        ReferenceSpec {
            relative_power: 1.0,
            // Three fringes between the axis and the edge of the default 3w field.
            curvature: 2.0 * PI / 3.0,
            waist: 2.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Interferogram {
    pub image: Image,
    pub warning: Option<&'static str>,
}

pub fn reference_field(reference: &ReferenceSpec, spec: GridSpec) -> FieldGrid {
    let w2 = reference.waist * reference.waist;
    let raw = FieldGrid::from_fn(spec, |x, y| {
        let r2 = x * x + y * y;
        Complex64::from_polar((-r2 / w2).exp(), reference.curvature * r2)
    });
    let p = raw.power();
    raw.scale(Complex64::new((reference.relative_power / p).sqrt(), 0.0))
}

/// `|E_mode + E_ref|²`.
pub fn interferogram(field: &FieldGrid, reference: &ReferenceSpec) -> Result<Interferogram> {
    if !(reference.relative_power >= 0.0 && reference.relative_power.is_finite()) {
        return Err(Error::param("reference power must be non-negative"));
    }
    if reference.relative_power == 0.0 {
        return Ok(Interferogram {
            image: field.intensity(),
            warning: Some("reference power is zero; returning plain intensity"),
        });
    }
    if !(reference.waist > 0.0) {
        return Err(Error::param("reference waist must be positive"));
    }
    let total = field.add(&reference_field(reference, field.spec))?;
    Ok(Interferogram {
        image: total.intensity(),
        warning: None,
    })
}

fn fft2_magnitude(img: &Image) -> Vec<f64> {
    let n = img.spec.size;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let mut data: Vec<Complex64> = img.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for row in data.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        for j in 0..n {
            col[j] = data[j * n + i];
        }
        fft.process(&mut col);
        for j in 0..n {
            data[j * n + i] = col[j];
        }
    }
    data.iter().map(|c| c.norm()).collect()
}

/// Pearson correlation of the 2D Fourier magnitude spectra, clipped to `[0, 1]`.
pub fn fourier_correlation(a: &Image, b: &Image) -> Result<f64> {
    if a.spec.size != b.spec.size || a.values.len() != b.values.len() {
        return Err(Error::param(format!(
            "image sizes differ: {} vs {}",
            a.spec.size, b.spec.size
        )));
    }
    if a.values == b.values && a.values.iter().any(|&v| v != a.values[0]) {
        return Ok(1.0);
    }
    let fa = fft2_magnitude(a);
    let fb = fft2_magnitude(b);
    let n = fa.len() as f64;
    let ma = fa.iter().sum::<f64>() / n;
    let mb = fb.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in fa.iter().zip(&fb) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Err(Error::UndefinedCorrelation(
            "spectrum has zero variance".into(),
        ));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageKind {
    Intensity,
    Interferogram,
}

impl ImageKind {
    pub fn name(self) -> &'static str {
        match self {
            ImageKind::Intensity => "intensity",
            ImageKind::Interferogram => "interferogram",
        }
    }
}

/// 16-bit binary PGM, max-normalised, big-endian samples.
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let n = img.spec.size;
    let header = format!("P5 {n} {n} 65535\n");
    let mut out = Vec::with_capacity(header.len() + 2 * n * n);
    out.extend_from_slice(header.as_bytes());
    let peak = img.peak();
    for &v in &img.values {
        let s = if peak > 0.0 {
            (v.max(0.0) / peak * 65535.0).round() as u16
        } else {
            0
        };
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

/// Renders the field as intensity or interferogram PGM at `path`.
pub fn render_image(
    field: &FieldGrid,
    kind: ImageKind,
    reference: &ReferenceSpec,
    path: &Path,
) -> Result<()> {
    let img = match kind {
        ImageKind::Intensity => field.intensity(),
        ImageKind::Interferogram => interferogram(field, reference)?.image,
    };
    std::fs::write(path, encode_pgm(&img)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = GridSpec { size: 8, extent: 3.0 };
        assert!(matches!(
            synthesize_field(&ModeBasis::Lp11a.qubit().unwrap(), spec),
            Err(Error::Parameter(_))
        ));
        let bad = SpatialQubit { amp0: c(1.0, 0.0), amp1: c(1.0, 0.0) };
        assert!(matches!(
            synthesize_field(&bad, GridSpec::default()),
            Err(Error::Normalization { .. })
        ));
        assert!(SpatialQubit::new(c(0.6, 0.0), c(0.0, 0.8)).is_ok());
    }

    #[test]
    fn lp11a_has_vertical_nodal_line() {
        let f = synthesize_field(&ModeBasis::Lp11a.qubit().unwrap(), GridSpec::default()).unwrap();
        let img = f.intensity();
        let peak = img.peak();
        let n = img.spec.size;
        for j in 0..n {
            assert!(img.at(n / 2, j) < 1e-10 * peak);
        }
        // Lobes lie on the horizontal axis.
        let on_axis = img.at(n / 2 + 30, n / 2);
        let off_axis = img.at(n / 2, n / 2 + 30);
        assert!(on_axis > 0.5 * peak && off_axis < 1e-10 * peak);
    }

    #[test]
    fn oam_is_a_ring() {
        let spec = GridSpec::default();
        let f = synthesize_field(&ModeBasis::OamPlus.qubit().unwrap(), spec).unwrap();
        let img = f.intensity();
        let n = spec.size;
        let peak = img.peak();
        assert!(img.at(n / 2, n / 2) < 1e-10 * peak);
        // |cos θ + i sin θ| = 1, so I / (r² e^{-2r²}) is the same on every pixel.
        let mut ratios = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let (x, y) = (spec.coord(i), spec.coord(j));
                let r2 = x * x + y * y;
                if r2 > 0.05 && r2 < 4.0 {
                    ratios.push(img.at(i, j) / (r2 * (-2.0 * r2).exp()));
                }
            }
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!(ratios.iter().all(|v| (v - mean).abs() < 1e-6 * mean));
    }

    #[test]
    fn zero_reference_returns_intensity() {
        let f = synthesize_field(&ModeBasis::LpPlus.qubit().unwrap(), GridSpec::default()).unwrap();
        let r = ReferenceSpec { relative_power: 0.0, ..Default::default() };
        let out = interferogram(&f, &r).unwrap();
        assert!(out.warning.is_some());
        assert_eq!(out.image, f.intensity());
    }

    #[test]
    fn lp11a_fringes_flip_across_nodal_line() {
        // Cross term 2 Re(E_mode conj E_ref) is odd in x because E_mode is.
        let spec = GridSpec::default();
        let f = synthesize_field(&ModeBasis::Lp11a.qubit().unwrap(), spec).unwrap();
        for curvature in [0.0, 2.0] {
            let r = ReferenceSpec { curvature, ..Default::default() };
            let e_ref = reference_field(&r, spec);
            let img = interferogram(&f, &r).unwrap().image;
            let n = spec.size;
            let j = n / 2 + 7;
            let mut max_cross: f64 = 0.0;
            for d in 1..n / 2 {
                let cross = |i: usize| {
                    img.at(i, j) - f.at(i, j).norm_sqr() - e_ref.at(i, j).norm_sqr()
                };
                let (cp, cm) = (cross(n / 2 + d), cross(n / 2 - d));
                assert!((cp + cm).abs() < 1e-12, "d={d}: {cp} {cm}");
                max_cross = max_cross.max(cp.abs());
            }
            assert!(max_cross > 1e-3);
        }
    }

    #[test]
    fn pgm_header_and_zero_payload() {
        let spec = GridSpec { size: 16, extent: 3.0 };
        let img = FieldGrid::zeros(spec).intensity();
        let bytes = encode_pgm(&img);
        let header = b"P5 16 16 65535\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 2 * 256);
        assert!(bytes[header.len()..].iter().all(|&b| b == 0));
    }

    #[test]
    fn correlation_errors() {
        let a = FieldGrid::zeros(GridSpec { size: 16, extent: 3.0 }).intensity();
        let b = FieldGrid::zeros(GridSpec { size: 32, extent: 3.0 }).intensity();
        assert!(matches!(fourier_correlation(&a, &b), Err(Error::Parameter(_))));
        assert!(matches!(
            fourier_correlation(&a, &a),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn canonical_phase() {
        let q = SpatialQubit::new(c(0.0, FRAC_1_SQRT_2), c(-FRAC_1_SQRT_2, 0.0)).unwrap();
        let k = q.canonical();
        assert!(k.amp0.im.abs() < 1e-15 && k.amp0.re > 0.0);
        assert!((q.fidelity(&k) - 1.0).abs() < 1e-15);
    }
}
