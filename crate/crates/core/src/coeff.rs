//! Cellwise coefficient fields `alpha = K^{-1}`: generators for the island
//! benchmarks, raster ingestion, contrast and normalization.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{AsmgError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Constant,
    Binary,
    Random,
    Raster,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Constant => "constant",
            Provenance::Binary => "binary",
            Provenance::Random => "random",
            Provenance::Raster => "raster",
        })
    }
}

/// Square inclusions centred on a regular `per_side x per_side` lattice of the
/// unit square, each of side `side_fraction`. A cell belongs to an island when
/// its centre lies in the half-open box `[c - s/2, c + s/2)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IslandLayout {
    pub per_side: usize,
    pub side_fraction: f64,
}

impl Default for IslandLayout {
    fn default() -> Self {
        Self {
            per_side: 4,
            side_fraction: 0.125,
        }
    }
}

impl IslandLayout {
    fn validate(&self) -> Result<()> {
        if self.per_side == 0 {
            return Err(AsmgError::Config("island layout needs at least one island per side".into()));
        }
        if !(self.side_fraction > 0.0) || self.side_fraction * self.per_side as f64 > 1.0 {
            return Err(AsmgError::Config(format!(
                "island side {} does not fit {} islands per side in the unit square",
                self.side_fraction, self.per_side
            )));
        }
        Ok(())
    }

    /// Island indicator per cell of an `n x n` grid, raster order.
    pub fn mask(&self, n: usize) -> Result<Vec<bool>> {
        self.validate()?;
        let nf = n as f64;
        let half = 0.5 * self.side_fraction * nf;
        let inside = |k: usize| {
            let x = k as f64 + 0.5;
            (0..self.per_side).any(|c| {
                let centre = (c as f64 + 0.5) / self.per_side as f64 * nf;
                x >= centre - half && x < centre + half
            })
        };
        let hit: Vec<bool> = (0..n).map(inside).collect();
        Ok((0..n * n).map(|c| hit[c % n] && hit[c / n]).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    n: usize,
    alpha: Vec<f64>,
    provenance: Provenance,
}

impl CoefficientField {
    pub fn constant(n: usize, alpha: f64) -> Self {
        Self {
            n,
            alpha: vec![alpha; n * n],
            provenance: Provenance::Constant,
        }
    }

    /// Field from raw `alpha` values in raster order.
    pub fn from_alpha(n: usize, alpha: Vec<f64>) -> Result<Self> {
        Self::with_provenance(n, alpha, Provenance::Constant)
    }

    fn with_provenance(n: usize, alpha: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if alpha.len() != n * n {
            return Err(AsmgError::Dimension {
                context: "coefficient values",
                expected: n * n,
                found: alpha.len(),
            });
        }
        if let Some((i, v)) = alpha.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(AsmgError::InvalidCoefficient(format!("cell {i} has alpha = {v}")));
        }
        Ok(Self { n, alpha, provenance })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn permeability(&self) -> Vec<f64> {
        self.alpha.iter().map(|a| 1.0 / a).collect()
    }

    /// `max K / min K`.
    pub fn contrast(&self) -> f64 {
        let (lo, hi) = self
            .alpha
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &a| (lo.min(a), hi.max(a)));
        hi / lo
    }

    /// Scales `K` so that `min K = 1`, i.e. `max alpha = 1`.
    pub fn rescale(&self) -> Self {
        let max = self.alpha.iter().cloned().fold(0.0, f64::max);
        Self {
            n: self.n,
            alpha: self.alpha.iter().map(|a| a / max).collect(),
            provenance: self.provenance,
        }
    }
}

/// Islands with `alpha = 1` in a background with `alpha = 10^{-q}`.
pub fn gen_binary_islands(n: usize, q: u32, layout: &IslandLayout) -> Result<CoefficientField> {
    let mask = layout.mask(n)?;
    let bg = 10f64.powi(-(q as i32));
    let alpha = mask.iter().map(|&m| if m { 1.0 } else { bg }).collect();
    CoefficientField::with_provenance(n, alpha, Provenance::Binary)
}

/// Islands with `alpha = 1`; each background cell independently gets
/// `alpha = 10^{-r}` with `r` uniform on `{0, ..., q}`. Draws are taken from a
/// ChaCha8 stream seeded with `seed`, one per background cell in raster order.
pub fn gen_random_field(n: usize, q: u32, seed: u64, layout: &IslandLayout) -> Result<CoefficientField> {
    let mask = layout.mask(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = mask
        .iter()
        .map(|&m| {
            if m {
                1.0
            } else {
                10f64.powi(-(rng.random_range(0..=q) as i32))
            }
        })
        .collect();
    CoefficientField::with_provenance(n, alpha, Provenance::Random)
}

/// Permeability raster: `nx` columns, `ny` rows, row-major from the bottom-left cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl FromStr for Raster {
    type Err = AsmgError;

    fn from_str(s: &str) -> Result<Self> {
        let mut tokens = s
            .lines()
            .enumerate()
            .flat_map(|(l, line)| line.split_whitespace().map(move |t| (l + 1, t)));
        let mut header = |what: &str| -> Result<usize> {
            let (line, tok) = tokens.next().ok_or_else(|| AsmgError::Parse {
                line: 1,
                message: format!("missing {what} in header"),
            })?;
            match tok.parse::<usize>() {
                Ok(v) if v > 0 => Ok(v),
                _ => Err(AsmgError::Parse {
                    line,
                    message: format!("{what} must be a positive integer, got {tok:?}"),
                }),
            }
        };
        let nx = header("nx")?;
        let ny = header("ny")?;
        let mut values = Vec::with_capacity(nx * ny);
        for (line, tok) in tokens {
            let v: f64 = tok.parse().map_err(|_| AsmgError::Parse {
                line,
                message: format!("not a number: {tok:?}"),
            })?;
            if !(v > 0.0) || !v.is_finite() {
                return Err(AsmgError::Parse {
                    line,
                    message: format!("permeability must be positive and finite, got {v}"),
                });
            }
            values.push(v);
        }
        if values.len() != nx * ny {
            return Err(AsmgError::Parse {
                line: s.lines().count(),
                message: format!("expected {} values for a {nx}x{ny} raster, found {}", nx * ny, values.len()),
            });
        }
        Ok(Self { nx, ny, values })
    }
}

impl fmt::Display for Raster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.nx, self.ny)?;
        for row in self.values.chunks(self.nx) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

impl Raster {
    pub fn from_field(field: &CoefficientField) -> Self {
        Self {
            nx: field.n(),
            ny: field.n(),
            values: field.permeability(),
        }
    }

    /// Nearest-neighbour resampling onto an `n x n` grid by cell centres,
    /// followed by the `min K = 1` normalization.
    pub fn resample(&self, n: usize) -> Result<CoefficientField> {
        if n == 0 {
            return Err(AsmgError::Config("target grid must have at least one cell".into()));
        }
        let pick = |k: usize, m: usize| (((k as f64 + 0.5) * m as f64 / n as f64) as usize).min(m - 1);
        let mut alpha = Vec::with_capacity(n * n);
        for j in 0..n {
            let sj = pick(j, self.ny);
            for i in 0..n {
                alpha.push(1.0 / self.values[sj * self.nx + pick(i, self.nx)]);
            }
        }
        Ok(CoefficientField::with_provenance(n, alpha, Provenance::Raster)?.rescale())
    }
}

pub fn load_raster(path: &Path) -> Result<Raster> {
    std::fs::read_to_string(path)?.parse()
}
