//! Periodic orthonormal discrete wavelet transform.
//!
//! Level 1 is the finest detail band (length `K/2`), level `N` the coarsest
//! (length `K/2^N`), followed by the terminal approximation band of the same
//! length. Filters are real; complex signals are transformed componentwise.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::C64;

/// Built-in lowpass filters in the plain-text table format read by
/// [`FilterTable::parse`].
pub const BUILTIN_FILTERS: &str = "\
# name   lowpass coefficients h_0 .. h_{N-1}
haar  0.70710678118654752 0.70710678118654752
d4    0.48296291314453414 0.83651630373780791 0.22414386804201338 -0.12940952255126038
d6    0.33267055295008262 0.80689150931109258 0.45987750211849157 -0.13501102001025459 \
      -0.085441273882026662 0.035226291885709537
d8    0.2303778133088965 0.71484657055291565 0.63088076792985891 -0.027983769416859854 \
      -0.18703481171909308 0.030841381835560764 0.0328830116668852 -0.010597401785069032
";

pub const DEFAULT_FAMILY: &str = "d4";

const ORTHONORMALITY_TOL: f64 = 1e-10;

/// An orthonormal two-channel filter bank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletFamily {
    name: String,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl WaveletFamily {
    /// Builds the family from its lowpass filter; the highpass is the
    /// quadrature mirror `g_n = (-1)^n h_{N-1-n}`.
    pub fn from_lowpass(name: impl Into<String>, lowpass: Vec<f64>) -> Result<Self> {
        let name = name.into();
        let n = lowpass.len();
        if n < 2 || !n.is_multiple_of(2) {
            return config(format!("filter '{name}' must have an even length >= 2, got {n}"));
        }
        if lowpass.iter().any(|h| !h.is_finite()) {
            return config(format!("filter '{name}' has non-finite taps"));
        }
        for shift in (0..n).step_by(2) {
            let dot: f64 = (0..n - shift).map(|i| lowpass[i] * lowpass[i + shift]).sum();
            let want = if shift == 0 { 1.0 } else { 0.0 };
            if (dot - want).abs() > ORTHONORMALITY_TOL {
                return config(format!(
                    "filter '{name}' is not orthonormal: shift {shift} gives {dot}"
                ));
            }
        }
        let highpass = (0..n)
            .map(|i| if i % 2 == 0 { lowpass[n - 1 - i] } else { -lowpass[n - 1 - i] })
            .collect();
        Ok(Self { name, lowpass, highpass })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    pub fn haar() -> Self {
        FilterTable::builtin().get("haar").expect("builtin").clone()
    }

    /// Four-tap Daubechies filter (two vanishing moments).
    pub fn d4() -> Self {
        FilterTable::builtin().get("d4").expect("builtin").clone()
    }

    /// Look up a built-in family by name.
    pub fn named(name: &str) -> Result<Self> {
        FilterTable::builtin()
            .get(name)
            .cloned()
            .ok_or_else(|| Error::Config(format!("unknown wavelet family '{name}'")))
    }
}

impl Default for WaveletFamily {
    fn default() -> Self {
        Self::d4()
    }
}

/// Named filter banks loaded from a whitespace-separated text table.
///
/// One family per line: a name followed by its lowpass taps. `#` starts a
/// comment, and a trailing `\` continues the line.
#[derive(Debug, Clone, Default)]
pub struct FilterTable {
    families: BTreeMap<String, WaveletFamily>,
}

impl FilterTable {
    pub fn builtin() -> Self {
        BUILTIN_FILTERS.parse().expect("builtin filter table is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        text.parse()
    }

    pub fn get(&self, name: &str) -> Option<&WaveletFamily> {
        self.families.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.families.keys().map(String::as_str)
    }

    /// Adds every family from `other`, replacing same-named entries.
    pub fn extend(&mut self, other: FilterTable) {
        self.families.extend(other.families);
    }
}

impl FromStr for FilterTable {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut families = BTreeMap::new();
        let joined = text.replace("\\\n", " ");
        for (lineno, raw) in joined.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let name = fields.next().expect("non-empty line");
            let taps = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|e| {
                        Error::Parse(format!("filter table line {}: '{f}': {e}", lineno + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let family = WaveletFamily::from_lowpass(name, taps)?;
            families.insert(name.to_string(), family);
        }
        Ok(Self { families })
    }
}

/// Detail bands (finest first) and the terminal approximation band.
#[derive(Debug, Clone, PartialEq)]
pub struct MraCoefficients {
    pub details: Vec<Vec<C64>>,
    pub approximation: Vec<C64>,
}

impl MraCoefficients {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Total number of coefficients; equals the signal length when well formed.
    pub fn len(&self) -> usize {
        self.details.iter().map(Vec::len).sum::<usize>() + self.approximation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Zero coefficients shaped for a `points`-long signal at `levels` depth.
    pub fn zeros(points: usize, levels: usize) -> Result<Self> {
        check_levels(points, levels)?;
        let zero = C64::new(0.0, 0.0);
        Ok(Self {
            details: (1..=levels).map(|j| vec![zero; points >> j]).collect(),
            approximation: vec![zero; points >> levels],
        })
    }

    fn validate(&self) -> Result<()> {
        if self.details.is_empty() {
            return Err(Error::Structure("no detail levels".into()));
        }
        for j in 0..self.details.len() {
            let want = if j + 1 < self.details.len() {
                2 * self.details[j + 1].len()
            } else {
                self.approximation.len()
            };
            let have = self.details[j].len();
            if have != want || have == 0 {
                return Err(Error::Structure(format!(
                    "detail level {} has length {have}, expected {want}",
                    j + 1
                )));
            }
        }
        Ok(())
    }
}

/// Largest admissible depth for a `points`-long signal, `log2(points) - 1`.
pub fn max_levels(points: usize) -> usize {
    (points.trailing_zeros() as usize).saturating_sub(1)
}

fn check_levels(points: usize, levels: usize) -> Result<()> {
    if !points.is_power_of_two() || points < 4 {
        return config(format!("signal length must be a power of two >= 4, got {points}"));
    }
    let max = max_levels(points);
    if levels < 1 || levels > max {
        return config(format!(
            "wavelet depth must lie in 1..={max} for {points} samples, got {levels}"
        ));
    }
    Ok(())
}

/// One analysis stage: `(approximation, detail)` each of half length.
fn analyze(signal: &[C64], family: &WaveletFamily) -> (Vec<C64>, Vec<C64>) {
    let n = signal.len();
    let half = n / 2;
    let h = family.lowpass();
    let g = family.highpass();
    let mut approx = vec![C64::new(0.0, 0.0); half];
    let mut detail = vec![C64::new(0.0, 0.0); half];
    for i in 0..half {
        let mut a = C64::new(0.0, 0.0);
        let mut d = C64::new(0.0, 0.0);
        for (k, (&hk, &gk)) in h.iter().zip(g).enumerate() {
            let s = signal[(2 * i + k) % n];
            a += hk * s;
            d += gk * s;
        }
        approx[i] = a;
        detail[i] = d;
    }
    (approx, detail)
}

/// Adjoint of [`analyze`]; doubles the length.
fn synthesize(approx: &[C64], detail: &[C64], family: &WaveletFamily) -> Vec<C64> {
    let half = approx.len();
    let n = 2 * half;
    let h = family.lowpass();
    let g = family.highpass();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for i in 0..half {
        for (k, (&hk, &gk)) in h.iter().zip(g).enumerate() {
            out[(2 * i + k) % n] += hk * approx[i] + gk * detail[i];
        }
    }
    out
}

/// Cascade `levels` analysis stages with circular boundary handling.
pub fn dwt_periodic(signal: &[C64], family: &WaveletFamily, levels: usize) -> Result<MraCoefficients> {
    check_levels(signal.len(), levels)?;
    let mut details = Vec::with_capacity(levels);
    let mut current = signal.to_vec();
    for _ in 0..levels {
        let (approx, detail) = analyze(&current, family);
        details.push(detail);
        current = approx;
    }
    Ok(MraCoefficients { details, approximation: current })
}

/// Inverse of [`dwt_periodic`].
pub fn idwt_periodic(coeffs: &MraCoefficients, family: &WaveletFamily) -> Result<Vec<C64>> {
    coeffs.validate()?;
    let mut current = coeffs.approximation.clone();
    for detail in coeffs.details.iter().rev() {
        current = synthesize(&current, detail, family);
    }
    Ok(current)
}

/// Per-band energies: `sum |d_l|^2` for `l = 1..=N`, then `sum |a_N|^2`.
pub fn scale_energies(coeffs: &MraCoefficients) -> Vec<f64> {
    coeffs
        .details
        .iter()
        .chain(std::iter::once(&coeffs.approximation))
        .map(|band| band.iter().map(|z| z.norm_sqr()).sum())
        .collect()
}

/// Exponents `(alpha, p, q)` of a homogeneous Besov-type block norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovSpec {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
}

impl BesovSpec {
    pub fn new(alpha: f64, p: f64, q: f64) -> Result<Self> {
        let spec = Self { alpha, p, q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.q >= 1.0) || !self.p.is_finite() || !self.q.is_finite() {
            return config(format!("Besov exponents need p, q >= 1, got p = {}, q = {}", self.p, self.q));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return config(format!("Besov regularity needs alpha >= 0, got {}", self.alpha));
        }
        Ok(())
    }

    /// Short label, e.g. `besov_a0_p4_q2` for `(alpha, p, q) = (0, 4, 2)`.
    pub fn label(&self) -> String {
        format!("besov_a{}_p{}_q{}", self.alpha, self.p, self.q)
    }
}

/// Per-band Besov blocks `2^{m q (alpha + 1/2 - 1/p)} (sum |c|^p)^{q/p}`.
///
/// Detail level `l` uses octave `m = N + 1 - l`, so the finest band carries
/// the largest weight; the approximation band uses `m = 0`.
pub fn besov_blocks(coeffs: &MraCoefficients, spec: &BesovSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let levels = coeffs.levels();
    let exponent = spec.q * (spec.alpha + 0.5 - 1.0 / spec.p);
    let block = |band: &[C64], octave: usize| -> f64 {
        let sum: f64 = band.iter().map(|z| z.norm().powf(spec.p)).sum();
        (octave as f64 * exponent).exp2() * sum.powf(spec.q / spec.p)
    };
    let mut out: Vec<f64> = coeffs
        .details
        .iter()
        .enumerate()
        .map(|(i, band)| block(band, levels - i))
        .collect();
    out.push(block(&coeffs.approximation, 0));
    Ok(out)
}
