//! Gridded fields and the Fourier-side operations on them.
//!
//! Grids are periodic, centered at the origin, with `n` samples per axis at
//! `x_i = (i - n/2) h`. Every multiplier used here depends on `|k|` only, so
//! the FFT output is consumed in natural order and no shifts are needed.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::regime_roots;
use crate::medium::Medium;
use crate::scaled::ScaledComplex;
use crate::spectral::modal_weights;

/// Uniform periodic grid, `n_per_axis` samples over `extent` metres per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: u32,
    pub n_per_axis: usize,
    pub extent: f64,
}

impl GridSpec {
    pub fn new(dim: u32, n_per_axis: usize, extent: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n_per_axis < 2 || !n_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_per_axis = {n_per_axis} must be a power of two >= 2"
            )));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidGrid(format!("extent = {extent} must be > 0")));
        }
        Ok(GridSpec {
            dim,
            n_per_axis,
            extent,
        })
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.n_per_axis as f64
    }

    /// `pi n / extent`.
    pub fn nyquist(&self) -> f64 {
        PI * self.n_per_axis as f64 / self.extent
    }

    pub fn len(&self) -> usize {
        self.n_per_axis.pow(self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of one cell, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Sample positions along one axis.
    pub fn axis_coords(&self) -> Vec<f64> {
        let h = self.spacing();
        let half = (self.n_per_axis / 2) as f64;
        (0..self.n_per_axis).map(|i| (i as f64 - half) * h).collect()
    }

    /// Angular wavenumbers along one axis in FFT order.
    pub fn axis_wavenumbers(&self) -> Vec<f64> {
        let n = self.n_per_axis;
        let dk = 2.0 * PI / self.extent;
        (0..n)
            .map(|i| {
                let j = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
                j * dk
            })
            .collect()
    }

    fn radial(&self, axis: &[f64]) -> Vec<f64> {
        let n = self.n_per_axis;
        let sq: Vec<f64> = axis.iter().map(|v| v * v).collect();
        let mut out = Vec::with_capacity(self.len());
        match self.dim {
            1 => out.extend(axis.iter().map(|v| v.abs())),
            2 => {
                for i in 0..n {
                    for j in 0..n {
                        out.push((sq[i] + sq[j]).sqrt());
                    }
                }
            }
            _ => {
                for i in 0..n {
                    for j in 0..n {
                        for l in 0..n {
                            out.push((sq[i] + sq[j] + sq[l]).sqrt());
                        }
                    }
                }
            }
        }
        out
    }

    /// `|x|` at every sample, row-major.
    pub fn radii(&self) -> Vec<f64> {
        self.radial(&self.axis_coords())
    }

    /// `|k|` at every FFT bin, row-major.
    pub fn wavenumber_norms(&self) -> Vec<f64> {
        self.radial(&self.axis_wavenumbers())
    }
}

/// Real samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: GridSpec,
    pub samples: Vec<f64>,
    pub label: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct FieldHeader {
    dim: u32,
    n_per_axis: usize,
    extent: f64,
    label: String,
}

fn header_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".hdr");
    PathBuf::from(s)
}

impl Field {
    pub fn new(grid: GridSpec, samples: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} samples for a grid of {}",
                samples.len(),
                grid.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Shape(format!("non-finite sample at index {i}")));
        }
        Ok(Field {
            grid,
            samples,
            label: label.into(),
        })
    }

    pub fn zeros(grid: GridSpec, label: impl Into<String>) -> Self {
        Field {
            grid,
            samples: vec![0.0; grid.len()],
            label: label.into(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Continuous L2 norm approximated by the Riemann sum.
    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn integral(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn scaled(&self, factor: f64) -> Field {
        Field {
            grid: self.grid,
            samples: self.samples.iter().map(|v| v * factor).collect(),
            label: self.label.clone(),
        }
    }

    /// Largest `|x|` where `|value| > rel_threshold * max |value|`; zero for
    /// the zero field.
    pub fn support_radius(&self, rel_threshold: f64) -> f64 {
        let cut = rel_threshold * self.max_abs();
        if cut == 0.0 {
            return 0.0;
        }
        self.grid
            .radii()
            .iter()
            .zip(&self.samples)
            .filter(|(_, v)| v.abs() > cut)
            .fold(0.0, |m, (r, _)| m.max(*r))
    }

    /// Write little-endian `f64` samples to `path` and a text header to
    /// `path.hdr`.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self.samples.iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
        let header = FieldHeader {
            dim: self.grid.dim,
            n_per_axis: self.grid.n_per_axis,
            extent: self.grid.extent,
            label: self.label.clone(),
        };
        let text = toml::to_string(&header).map_err(|e| Error::Config(e.to_string()))?;
        let hp = header_path(path);
        fs::write(&hp, text).map_err(|e| Error::io(hp, e))
    }

    pub fn read_binary(path: &Path) -> Result<Field> {
        let hp = header_path(path);
        let text = fs::read_to_string(&hp).map_err(|e| Error::io(&hp, e))?;
        let header: FieldHeader =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", hp.display())))?;
        let grid = GridSpec::new(header.dim, header.n_per_axis, header.extent)?;
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() != 8 * grid.len() {
            return Err(Error::Shape(format!(
                "{} bytes in {}, expected {}",
                bytes.len(),
                path.display(),
                8 * grid.len()
            )));
        }
        let samples = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Field::new(grid, samples, header.label)
    }

    /// Samples along the first axis through the origin as `(x, value)`.
    pub fn axis_profile(&self) -> Vec<(f64, f64)> {
        let n = self.grid.n_per_axis;
        let stride = n.pow(self.grid.dim - 1);
        let centre = if self.grid.dim == 1 {
            0
        } else {
            // (n/2, ..., n/2) on the trailing axes
            (0..self.grid.dim - 1).fold(0, |acc, _| acc * n + n / 2)
        };
        self.grid
            .axis_coords()
            .into_iter()
            .enumerate()
            .map(|(i, x)| (x, self.samples[i * stride + centre]))
            .collect()
    }

    /// One-dimensional profile as CSV with `#` header lines.
    pub fn write_profile_csv(&self, path: &Path) -> Result<()> {
        let mut out = format!(
            "# label: {}\n# dim: {}\n# n_per_axis: {}\n# extent_m: {}\nx_m,value\n",
            self.label, self.grid.dim, self.grid.n_per_axis, self.grid.extent
        );
        for (x, v) in self.axis_profile() {
            out.push_str(&format!("{x:.16e},{v:.16e}\n"));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// The ball `|x| <= radius` on which identities are checked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorRegion {
    pub radius: f64,
}

impl InteriorRegion {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Geometry(format!("region radius {radius} must be > 0")));
        }
        Ok(InteriorRegion { radius })
    }

    /// Every point of the region must be reached by a wave of speed `c0`
    /// within `t`.
    pub fn check_travel_time(&self, c0: f64, t: f64) -> Result<()> {
        if self.radius < c0 * t {
            Ok(())
        } else {
            Err(Error::Geometry(format!(
                "region radius {} must be < c0*T = {}",
                self.radius,
                c0 * t
            )))
        }
    }

    pub fn mask(&self, grid: &GridSpec) -> Vec<bool> {
        grid.radii().into_iter().map(|r| r <= self.radius).collect()
    }
}

/// In-place multidimensional FFT. The inverse is normalized by `1/N`.
pub fn fft_nd(grid: &GridSpec, data: &mut [Complex64], inverse: bool) {
    let n = grid.n_per_axis;
    let dir = if inverse {
        FftDirection::Inverse
    } else {
        FftDirection::Forward
    };
    let fft = FftPlanner::new().plan_fft(n, dir);
    let total = grid.len();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..grid.dim {
        let stride = n.pow(grid.dim - 1 - axis);
        if stride == 1 {
            fft.process(data);
            continue;
        }
        // lines along this axis start at every index whose axis digit is 0
        for start in (0..total).filter(|i| (i / stride) % n == 0) {
            for (j, slot) in line.iter_mut().enumerate() {
                *slot = data[start + j * stride];
            }
            fft.process(&mut line);
            for (j, v) in line.iter().enumerate() {
                data[start + j * stride] = *v;
            }
        }
    }
    if inverse {
        let s = 1.0 / total as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

pub fn spectrum(field: &Field) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = field
        .samples
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft_nd(&field.grid, &mut data, false);
    data
}

/// Inverse transform; returns the real field and `||Im|| / ||Re||`.
pub fn inverse_real(grid: &GridSpec, mut data: Vec<Complex64>, label: &str) -> Result<(Field, f64)> {
    fft_nd(grid, &mut data, true);
    let re: f64 = data.iter().map(|z| z.re * z.re).sum::<f64>().sqrt();
    let im: f64 = data.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    let ratio = if re == 0.0 { im } else { im / re };
    let field = Field::new(*grid, data.into_iter().map(|z| z.re).collect(), label)?;
    Ok((field, ratio))
}

/// `(4 pi D)^{-d/2} exp(-|x|^2 / (4 D))`.
pub fn gaussian_phantom(grid: &GridSpec, d_coef: f64) -> Result<Field> {
    if !(d_coef.is_finite() && d_coef > 0.0) {
        return Err(Error::InvalidParameter {
            name: "D",
            value: d_coef,
            reason: "diffusion width must be > 0",
        });
    }
    let sigma = (2.0 * d_coef).sqrt();
    let half = 0.5 * grid.extent;
    if 6.0 * sigma > half {
        return Err(Error::SupportOverflow {
            sigma,
            half_extent: half,
        });
    }
    let amp = (4.0 * PI * d_coef).powf(-0.5 * grid.dim as f64);
    let samples = grid
        .radii()
        .into_iter()
        .map(|r| amp * (-r * r / (4.0 * d_coef)).exp())
        .collect();
    Field::new(*grid, samples, format!("gaussian D={d_coef:e}"))
}

/// Maximum tolerated `||Im|| / ||Re||` after a radial multiplier.
const IMAG_RESIDUE_TOL: f64 = 1e-9;

/// Multiply the spectrum of `field` by `multiplier(|k|)` and transform back.
pub fn apply_multiplier<F>(field: &Field, mut multiplier: F) -> Result<Field>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut data = spectrum(field);
    let norms = field.grid.wavenumber_norms();
    for (z, k) in data.iter_mut().zip(norms) {
        let m = multiplier(k)?;
        if !m.is_finite() {
            return Err(Error::InvalidParameter {
                name: "multiplier",
                value: m,
                reason: "multiplier must be finite on the grid",
            });
        }
        *z *= m;
    }
    let (out, residue) = inverse_real(&field.grid, data, &field.label)?;
    if residue > IMAG_RESIDUE_TOL {
        return Err(Error::Shape(format!(
            "imaginary residue {residue:e} after a radial multiplier"
        )));
    }
    Ok(out)
}

/// Largest `|a - b|` on `mask`, divided by the largest `|b|` there.
pub fn relative_linf_on(a: &Field, b: &Field, mask: &[bool]) -> f64 {
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for ((x, y), &m) in a.samples.iter().zip(&b.samples).zip(mask) {
        if m {
            num = num.max((x - y).abs());
            den = den.max(y.abs());
        }
    }
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// `||a - b||_2 / ||b||_2` on `mask`.
pub fn relative_l2_on(a: &Field, b: &Field, mask: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((x, y), &m) in a.samples.iter().zip(&b.samples).zip(mask) {
        if m {
            num += (x - y) * (x - y);
            den += y * y;
        }
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Result of [`propdelta_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropdeltaOutcome {
    /// Relative L-infinity distance of `F^-1{sin^2(c0 k T) phi_hat}` to
    /// `phi / 2` on the region.
    pub residual: f64,
    /// The shell at `|x| = 2 c0 T` wraps back into the grid: `4 c0 T > extent`.
    pub aliasing: bool,
}

/// Relative threshold defining the numerical support of a field.
const SUPPORT_THRESHOLD: f64 = 1e-6;

/// Check that `sin^2(c0 |k| T)` acts as multiplication by `1/2` on the region.
pub fn propdelta_check(
    field: &Field,
    medium: &Medium,
    t: f64,
    region: &InteriorRegion,
) -> Result<PropdeltaOutcome> {
    let c0 = medium.c0();
    let shell = c0 * t;
    let aliasing = 4.0 * shell > field.grid.extent;
    if field.max_abs() == 0.0 {
        return Ok(PropdeltaOutcome {
            residual: 0.0,
            aliasing,
        });
    }
    let support = field.support_radius(SUPPORT_THRESHOLD);
    if 2.0 * shell < region.radius + support {
        return Err(Error::Geometry(format!(
            "2*c0*T = {} must be >= region radius {} + support radius {support}",
            2.0 * shell,
            region.radius
        )));
    }
    let image = apply_multiplier(field, |k| Ok((c0 * k * t).sin().powi(2)))?;
    let mask = region.mask(&field.grid);
    Ok(PropdeltaOutcome {
        residual: relative_linf_on(&image, &field.scaled(0.5), &mask),
        aliasing,
    })
}

/// The pressure spectrum at time `t`, kept mode by mode.
///
/// Mode `j` is `-phi_hat B_j exp(-lambda_j t)` in scaled form; their sum is
/// `p_hat(k, t)`. The rates and weights are kept for the reverse stage.
#[derive(Debug, Clone)]
pub struct ModalSpectrum {
    pub grid: GridSpec,
    pub t: f64,
    pub modes: Vec<[ScaledComplex; 3]>,
    weights: Vec<[Complex64; 3]>,
    rates: Vec<[Complex64; 3]>,
}

impl ModalSpectrum {
    /// `p_hat` as plain complex numbers. Underflowing modes flush to zero.
    pub fn total(&self) -> Result<Vec<Complex64>> {
        self.modes
            .iter()
            .map(|m| (m[0] + m[1] + m[2]).to_complex())
            .collect()
    }

    /// `p(x, t)` on the grid.
    pub fn pressure(&self) -> Result<Field> {
        let (f, _) = inverse_real(&self.grid, self.total()?, "pressure")?;
        Ok(f)
    }
}

/// Forward solution `p_hat(k, t) = -phi_hat sum_j A_j lambda_j exp(-lambda_j t)`.
pub fn forward_pressure_hat(medium: &Medium, phantom: &Field, t: f64) -> Result<ModalSpectrum> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            reason: "time must be finite and > 0",
        });
    }
    let phi_hat = spectrum(phantom);
    let norms = phantom.grid.wavenumber_norms();
    let mut modes = Vec::with_capacity(phi_hat.len());
    let mut weights = Vec::with_capacity(phi_hat.len());
    let mut rates = Vec::with_capacity(phi_hat.len());
    // the spectrum depends on |k| only; reuse the previous bin when equal
    let mut cache: Option<(f64, [Complex64; 3], [Complex64; 3])> = None;
    for (ph, k) in phi_hat.into_iter().zip(norms) {
        let (b, l) = match cache {
            Some((kk, b, l)) if kk == k => (b, l),
            _ => {
                let roots = regime_roots(medium, k)?;
                let b = modal_weights(medium, &roots)?;
                let l = roots.lambdas();
                for (mode, lam) in l.iter().enumerate() {
                    if lam.re < 0.0 {
                        return Err(Error::GrowingMode { k, mode, re: lam.re });
                    }
                }
                cache = Some((k, b, l));
                (b, l)
            }
        };
        let base = ScaledComplex::new(-ph);
        modes.push([0, 1, 2].map(|j| (base * ScaledComplex::exp(-l[j] * t)).mul_complex(b[j])));
        weights.push(b);
        rates.push(l);
    }
    Ok(ModalSpectrum {
        grid: phantom.grid,
        t,
        modes,
        weights,
        rates,
    })
}

/// Image `I = 2 q(T)` of the time-reversed solution started from
/// `phi_T = p(., T)`.
///
/// Without `zeta3` the cross terms between the `lambda0` mode and the
/// oscillating pair are dropped on both stages.
pub fn time_reversal_image(
    medium: &Medium,
    phantom: &Field,
    t: f64,
    include_zeta3: bool,
) -> Result<Field> {
    let forward = forward_pressure_hat(medium, phantom, t)?;
    reverse_stage(&forward, include_zeta3)
}

/// `2 q_hat(T) = -2 sum_l B_l exp(lambda_l T) phi_hat_T`, transformed back.
pub fn reverse_stage(forward: &ModalSpectrum, include_zeta3: bool) -> Result<Field> {
    let t = forward.t;
    let mut out = Vec::with_capacity(forward.modes.len());
    for ((modes, b), l) in forward.modes.iter().zip(&forward.weights).zip(&forward.rates) {
        let mut acc = ScaledComplex::ZERO;
        for (lb, (bl, ll)) in b.iter().zip(l).enumerate() {
            let back = ScaledComplex::exp(ll * t).mul_complex(-2.0 * bl);
            for (j, mode) in modes.iter().enumerate() {
                if !include_zeta3 && (lb == 0) != (j == 0) {
                    continue;
                }
                acc = acc + back * *mode;
            }
        }
        out.push(acc.to_complex()?);
    }
    let (field, residue) = inverse_real(&forward.grid, out, "image")?;
    if residue > IMAG_RESIDUE_TOL {
        return Err(Error::Shape(format!(
            "imaginary residue {residue:e} in the time-reversal image"
        )));
    }
    Ok(field)
}
