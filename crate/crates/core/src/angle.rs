//! Polarization angles on the equator of the Poincaré sphere and the public
//! screening-angle set.
//!
//! Linear polarizations are pi-periodic, so every [`Angle`] is stored reduced
//! to `[0, pi)`. Screening-angle matching is decided by index arithmetic
//! (`a + b == N + 1`), never by comparing floating-point angles.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// A linear polarization angle in radians, reduced mod pi to `[0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle(f64);

impl Angle {
    /// The fixed measurement basis of every polarizing beam splitter in the
    /// protocol, pi/4.
    pub const PBS_BASIS: Angle = Angle(PI / 4.0);

    /// Reduces any real angle (negative included) into `[0, pi)`.
    pub fn new(radians: f64) -> Self {
        let mut r = radians.rem_euclid(PI);
        // rem_euclid of a tiny negative rounds up to exactly pi
        if r >= PI {
            r -= PI;
        }
        Angle(r)
    }

    /// The reduced value in radians, guaranteed in `[0, pi)`.
    pub fn radians(self) -> f64 {
        self.0
    }

    /// This angle rotated by `phi` radians (mod pi).
    pub fn rotated(self, phi: f64) -> Self {
        Angle::new(self.0 + phi)
    }

    /// Probability that a photon at this polarization passes a polarizer at
    /// `basis` (Malus's law, `cos^2` of the difference).
    pub fn malus(self, basis: Angle) -> f64 {
        let d = self.0 - basis.0;
        d.cos().powi(2)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The public set of `N` screening angles `alpha_i = i*pi/(N+1)`, `i = 1..N`.
///
/// Two screening angles sum to pi exactly when their indices sum to `N + 1`;
/// that condition gates key creation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningSet {
    n_angles: u32,
}

impl ScreeningSet {
    /// Builds the set for `n_angles >= 2`.
    pub fn new(n_angles: u32) -> Result<Self> {
        if n_angles < 2 {
            return Err(Error::invalid(
                "N",
                format!("need at least 2 screening angles, got {n_angles}"),
            ));
        }
        Ok(ScreeningSet { n_angles })
    }

    /// Number of angles in the set.
    pub fn len(&self) -> u32 {
        self.n_angles
    }

    /// Always false; the constructor enforces `N >= 2`.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// The screening angle for a 1-based index.
    pub fn angle(&self, index: u32) -> Result<Angle> {
        screening_angle(index, self.n_angles)
    }

    /// Whether the index pair satisfies the matching condition
    /// `alpha_a + alpha_b = pi`, i.e. `a + b = N + 1`.
    pub fn matches(&self, index_a: u32, index_b: u32) -> bool {
        index_a + index_b == self.n_angles + 1
    }

    /// Iterator over `(index, angle)` pairs, index 1-based.
    pub fn iter(&self) -> impl Iterator<Item = (u32, Angle)> + '_ {
        (1..=self.n_angles).map(move |i| (i, self.angle(i).expect("index in range")))
    }
}

/// The screening angle `i*pi/(N+1)` for `1 <= i <= N`, `N >= 2`.
pub fn screening_angle(index: u32, n_angles: u32) -> Result<Angle> {
    if n_angles < 2 {
        return Err(Error::invalid(
            "N",
            format!("need at least 2 screening angles, got {n_angles}"),
        ));
    }
    if index < 1 || index > n_angles {
        return Err(Error::invalid(
            "index",
            format!("screening index {index} outside 1..={n_angles}"),
        ));
    }
    Ok(Angle::new(index as f64 * PI / (n_angles as f64 + 1.0)))
}
