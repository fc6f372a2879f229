use std::f64::consts::PI;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::ScatteringError;
use crate::lattice::gauss_integrate;

/// Relative level below which a Gaussian tail is treated as zero.
pub const GAUSSIAN_TRUNCATION: f64 = 1e-14;

/// Shape of a repulsive radial profile `v(r) ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialKind {
    /// Infinite wall at `radius`; never evaluated, enters as a boundary condition.
    HardCore { radius: f64 },
    SquareWell { depth: f64, radius: f64 },
    /// Linear interpolation between samples, constant `v[0]` below `r[0]`,
    /// zero beyond the last sample.
    Tabulated { r: Vec<f64>, v: Vec<f64> },
    /// `amplitude · exp(−r²/width²)`, cut where it drops below
    /// [`GAUSSIAN_TRUNCATION`] of its central value.
    Gaussian { amplitude: f64, width: f64 },
    /// Constant `height` on `[inner, outer]`, zero elsewhere.
    Shell { height: f64, inner: f64, outer: f64 },
}

/// A validated radial potential together with its range `R0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialPotential {
    kind: PotentialKind,
    range: f64,
}

impl RadialPotential {
    pub fn new(kind: PotentialKind) -> Result<Self, ScatteringError> {
        let bad = |msg: String| Err(ScatteringError::InvalidPotential(msg));
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        let range = match &kind {
            PotentialKind::HardCore { radius } => {
                if !finite_pos(*radius) {
                    return bad(format!("hard-core radius must be positive, got {radius}"));
                }
                *radius
            }
            PotentialKind::SquareWell { depth, radius } => {
                if !(depth.is_finite() && *depth >= 0.0) {
                    return bad(format!("square-well depth must be non-negative, got {depth}"));
                }
                if !finite_pos(*radius) {
                    return bad(format!("square-well radius must be positive, got {radius}"));
                }
                *radius
            }
            PotentialKind::Gaussian { amplitude, width } => {
                if !(amplitude.is_finite() && *amplitude >= 0.0) {
                    return bad(format!("gaussian amplitude must be non-negative, got {amplitude}"));
                }
                if !finite_pos(*width) {
                    return bad(format!("gaussian width must be positive, got {width}"));
                }
                width * (1.0 / GAUSSIAN_TRUNCATION).ln().sqrt()
            }
            PotentialKind::Shell { height, inner, outer } => {
                if !(height.is_finite() && *height >= 0.0) {
                    return bad(format!("shell height must be non-negative, got {height}"));
                }
                if !(inner.is_finite() && *inner >= 0.0 && outer.is_finite() && outer > inner) {
                    return bad(format!("shell needs 0 ≤ inner < outer, got [{inner}, {outer}]"));
                }
                *outer
            }
            PotentialKind::Tabulated { r, v } => {
                if r.len() != v.len() || r.len() < 2 {
                    return bad("tabulated potential needs at least two (r, v) samples".into());
                }
                if r[0] < 0.0 || r.iter().any(|x| !x.is_finite()) {
                    return bad("tabulated radii must be finite and non-negative".into());
                }
                if r.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("tabulated radii must be strictly increasing".into());
                }
                if let Some(x) = v.iter().find(|x| !x.is_finite() || **x < 0.0) {
                    return bad(format!("tabulated potential must be non-negative, found {x}"));
                }
                *r.last().unwrap()
            }
        };
        Ok(Self { kind, range })
    }

    pub fn hard_core(radius: f64) -> Result<Self, ScatteringError> {
        Self::new(PotentialKind::HardCore { radius })
    }

    pub fn square_well(depth: f64, radius: f64) -> Result<Self, ScatteringError> {
        Self::new(PotentialKind::SquareWell { depth, radius })
    }

    pub fn gaussian(amplitude: f64, width: f64) -> Result<Self, ScatteringError> {
        Self::new(PotentialKind::Gaussian { amplitude, width })
    }

    pub fn shell(height: f64, inner: f64, outer: f64) -> Result<Self, ScatteringError> {
        Self::new(PotentialKind::Shell { height, inner, outer })
    }

    pub fn tabulated(r: Vec<f64>, v: Vec<f64>) -> Result<Self, ScatteringError> {
        Self::new(PotentialKind::Tabulated { r, v })
    }

    /// The zero potential, represented as a square well of depth 0.
    pub fn zero() -> Self {
        Self::square_well(0.0, 1.0).expect("valid")
    }

    /// Reads a two-column `r, v` CSV. Blank lines, `#` comments and a
    /// non-numeric header line are skipped.
    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self, ScatteringError> {
        let mut r = Vec::new();
        let mut v = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| ScatteringError::InvalidPotential(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 2 {
                return Err(ScatteringError::InvalidPotential(format!(
                    "line {}: expected two columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            match (cols[0].parse::<f64>(), cols[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    r.push(a);
                    v.push(b);
                }
                _ if r.is_empty() => continue,
                _ => {
                    return Err(ScatteringError::InvalidPotential(format!(
                        "line {}: cannot parse '{line}'",
                        lineno + 1
                    )))
                }
            }
        }
        Self::tabulated(r, v)
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    /// Smallest `R0` with `v(r) = 0` for `r > R0`.
    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn is_hard_core(&self) -> bool {
        matches!(self.kind, PotentialKind::HardCore { .. })
    }

    pub fn hard_core_radius(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::HardCore { radius } => Some(radius),
            _ => None,
        }
    }

    /// True when `v` vanishes identically.
    pub fn is_zero(&self) -> bool {
        match &self.kind {
            PotentialKind::HardCore { .. } => false,
            PotentialKind::SquareWell { depth, .. } => *depth == 0.0,
            PotentialKind::Gaussian { amplitude, .. } => *amplitude == 0.0,
            PotentialKind::Shell { height, .. } => *height == 0.0,
            PotentialKind::Tabulated { v, .. } => v.iter().all(|&x| x == 0.0),
        }
    }

    /// Smallest radius where `v` can be nonzero.
    pub fn support_start(&self) -> f64 {
        match &self.kind {
            PotentialKind::Shell { inner, .. } => *inner,
            PotentialKind::Tabulated { r, v } => {
                // first sample index whose neighbourhood carries weight
                match v.iter().position(|&x| x > 0.0) {
                    Some(0) | None => 0.0,
                    Some(i) => r[i - 1],
                }
            }
            _ => 0.0,
        }
    }

    /// `v(r)`. Infinite inside a hard core.
    pub fn value(&self, r: f64) -> f64 {
        match &self.kind {
            PotentialKind::HardCore { radius } => {
                if r < *radius {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            PotentialKind::SquareWell { depth, radius } => {
                if r < *radius {
                    *depth
                } else {
                    0.0
                }
            }
            PotentialKind::Gaussian { amplitude, width } => {
                if r < self.range {
                    amplitude * (-(r / width).powi(2)).exp()
                } else {
                    0.0
                }
            }
            PotentialKind::Shell { height, inner, outer } => {
                if r >= *inner && r < *outer {
                    *height
                } else {
                    0.0
                }
            }
            PotentialKind::Tabulated { r: rs, v } => {
                if r <= rs[0] {
                    return v[0];
                }
                if r > *rs.last().unwrap() {
                    return 0.0;
                }
                let i = rs.partition_point(|&x| x < r).max(1);
                let t = (r - rs[i - 1]) / (rs[i] - rs[i - 1]);
                v[i - 1] + t * (v[i] - v[i - 1])
            }
        }
    }

    /// `v` restricted to the open interval `(lo, hi)`, which must not
    /// contain a breakpoint. Endpoint requests return the one-sided limit.
    pub fn value_on_segment(&self, r: f64, lo: f64, hi: f64) -> f64 {
        let eps = 1e-9 * (hi - lo);
        self.value(r.clamp(lo + eps, hi - eps))
    }

    /// Radii where `v` or its derivative jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            PotentialKind::HardCore { radius } => vec![*radius],
            PotentialKind::SquareWell { radius, .. } => vec![*radius],
            PotentialKind::Gaussian { .. } => vec![self.range],
            PotentialKind::Shell { inner, outer, .. } => {
                if *inner > 0.0 {
                    vec![*inner, *outer]
                } else {
                    vec![*outer]
                }
            }
            PotentialKind::Tabulated { r, .. } => r.iter().copied().filter(|&x| x > 0.0).collect(),
        }
    }

    /// `λ·v`. A hard core is scale invariant.
    pub fn scaled(&self, lambda: f64) -> Self {
        let kind = match &self.kind {
            PotentialKind::HardCore { radius } => PotentialKind::HardCore { radius: *radius },
            PotentialKind::SquareWell { depth, radius } => PotentialKind::SquareWell {
                depth: depth * lambda,
                radius: *radius,
            },
            PotentialKind::Gaussian { amplitude, width } => PotentialKind::Gaussian {
                amplitude: amplitude * lambda,
                width: *width,
            },
            PotentialKind::Shell { height, inner, outer } => PotentialKind::Shell {
                height: height * lambda,
                inner: *inner,
                outer: *outer,
            },
            PotentialKind::Tabulated { r, v } => PotentialKind::Tabulated {
                r: r.clone(),
                v: v.iter().map(|x| x * lambda).collect(),
            },
        };
        Self { kind, range: self.range }
    }

    /// The Gross-Pitaevskii rescaling `x ↦ n²·v(n·x)`.
    pub fn rescaled(&self, n: f64) -> Self {
        let n2 = n * n;
        let kind = match &self.kind {
            PotentialKind::HardCore { radius } => PotentialKind::HardCore { radius: radius / n },
            PotentialKind::SquareWell { depth, radius } => PotentialKind::SquareWell {
                depth: depth * n2,
                radius: radius / n,
            },
            PotentialKind::Gaussian { amplitude, width } => PotentialKind::Gaussian {
                amplitude: amplitude * n2,
                width: width / n,
            },
            PotentialKind::Shell { height, inner, outer } => PotentialKind::Shell {
                height: height * n2,
                inner: inner / n,
                outer: outer / n,
            },
            PotentialKind::Tabulated { r, v } => PotentialKind::Tabulated {
                r: r.iter().map(|x| x / n).collect(),
                v: v.iter().map(|x| x * n2).collect(),
            },
        };
        Self { kind, range: self.range / n }
    }

    /// `∫ r² v(r) dr` over `[0, ∞)`.
    pub fn radial_moment(&self) -> Result<f64, ScatteringError> {
        Ok(match &self.kind {
            PotentialKind::HardCore { .. } => {
                return Err(ScatteringError::UnsupportedKind("hard-core potential is not integrable"))
            }
            PotentialKind::SquareWell { depth, radius } => depth * radius.powi(3) / 3.0,
            PotentialKind::Shell { height, inner, outer } => height * (outer.powi(3) - inner.powi(3)) / 3.0,
            PotentialKind::Gaussian { .. } | PotentialKind::Tabulated { .. } => {
                let mut edges = vec![0.0];
                edges.extend(self.breakpoints());
                edges.dedup();
                edges
                    .windows(2)
                    .map(|w| gauss_integrate(|r| r * r * self.value_on_segment(r, w[0], w[1]), w[0], w[1], 64))
                    .sum()
            }
        })
    }

    /// `V̂(0) = ∫ v(|x|) dx`.
    pub fn fourier_zero(&self) -> Result<f64, ScatteringError> {
        Ok(4.0 * PI * self.radial_moment()?)
    }
}
