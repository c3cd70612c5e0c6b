//! Hamiltonian parameters, on-site potentials and lattice geometry.
//!
//! Sites are 1-based. Even sites (2, 4, ...) are the ones occupied in a
//! charge-density-wave initial state. Energies are in units of the hopping
//! `J` (normally set to 1) and times in units of `hbar / J`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn opposite(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// `(sqrt(5) - 1) / 2`, the usual stand-in for an irrational wavelength ratio.
pub const GOLDEN_BETA: f64 = 0.618_033_988_749_894_8;

fn golden_beta() -> f64 {
    GOLDEN_BETA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    /// Linear tilt `tilt * i`, independently per spin.
    Stark { tilt_up: f64, tilt_down: f64 },
    /// Quasiperiodic detuning `amplitude * cos(2 pi beta i + phase)`.
    AubryAndre {
        amplitude: f64,
        #[serde(default = "golden_beta")]
        beta: f64,
        #[serde(default)]
        phase: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub hopping: f64,
    pub interaction: f64,
    pub potential: Potential,
    /// Harmonic confinement `alpha`, multiplying `(i - L/2)^2`.
    #[serde(default)]
    pub confinement: f64,
    pub sites: usize,
    #[serde(default)]
    pub boundary: Boundary,
}

impl ModelSpec {
    pub fn stark(sites: usize, hopping: f64, interaction: f64, tilt: f64) -> Self {
        ModelSpec {
            hopping,
            interaction,
            potential: Potential::Stark {
                tilt_up: tilt,
                tilt_down: tilt,
            },
            confinement: 0.0,
            sites,
            boundary: Boundary::Open,
        }
    }

    pub fn aubry_andre(sites: usize, hopping: f64, interaction: f64, amplitude: f64, phase: f64) -> Self {
        ModelSpec {
            hopping,
            interaction,
            potential: Potential::AubryAndre {
                amplitude,
                beta: GOLDEN_BETA,
                phase,
            },
            confinement: 0.0,
            sites,
            boundary: Boundary::Open,
        }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_confinement(mut self, alpha: f64) -> Self {
        self.confinement = alpha;
        self
    }

    /// Same model with the detuning phase replaced (no-op for Stark).
    pub fn with_phase(mut self, phi: f64) -> Self {
        if let Potential::AubryAndre { phase, .. } = &mut self.potential {
            *phase = phi;
        }
        self
    }

    pub fn is_aubry_andre(&self) -> bool {
        matches!(self.potential, Potential::AubryAndre { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hopping > 0.0 && self.hopping.is_finite()) {
            return Err(Error::config(format!("hopping must be positive, got {}", self.hopping)));
        }
        if self.sites < 2 {
            return Err(Error::config(format!("need at least 2 sites, got {}", self.sites)));
        }
        let finite = match self.potential {
            Potential::Stark { tilt_up, tilt_down } => tilt_up.is_finite() && tilt_down.is_finite(),
            Potential::AubryAndre {
                amplitude,
                beta,
                phase,
            } => amplitude.is_finite() && beta.is_finite() && phase.is_finite(),
        };
        if !finite || !self.interaction.is_finite() || !self.confinement.is_finite() {
            return Err(Error::config("model parameters must be finite"));
        }
        Ok(())
    }

    /// On-site energy of `spin` at absolute site `site`.
    pub fn potential_at(&self, site: usize, spin: Spin) -> f64 {
        let i = site as f64;
        let trap = self.confinement * (i - self.sites as f64 / 2.0).powi(2);
        let local = match self.potential {
            Potential::Stark { tilt_up, tilt_down } => match spin {
                Spin::Up => tilt_up * i,
                Spin::Down => tilt_down * i,
            },
            Potential::AubryAndre {
                amplitude,
                beta,
                phase,
            } => amplitude * (2.0 * PI * beta * i + phase).cos(),
        };
        local + trap
    }

    /// On-site energies for the listed absolute sites. The harmonic term
    /// always refers to the full lattice, so a window sees the same local
    /// potential as the chain it was cut from.
    pub fn build_potential(&self, spin: Spin, sites: &[usize]) -> Result<Vec<f64>> {
        sites
            .iter()
            .map(|&s| {
                if s == 0 || s > self.sites {
                    Err(Error::config(format!("site {s} outside lattice 1..={}", self.sites)))
                } else {
                    Ok(self.potential_at(s, spin))
                }
            })
            .collect()
    }
}

/// Harmonic confinement that produces a beat-note revival after
/// `revival_time` (in units of `hbar / J`) on a chain of `sites`.
pub fn confinement_from_revival(sites: usize, revival_time: f64) -> f64 {
    // alpha = h / (2 L T_r) with h = 2 pi hbar
    PI / (sites as f64 * revival_time)
}

/// Number of even sites in a shell of `kappa` sites around an even centre.
pub fn kappa_to_k(kappa: usize) -> usize {
    let n = kappa / 4;
    if kappa % 4 == 3 {
        2 * n + 1
    } else {
        2 * n
    }
}

/// Smallest shell size that contains `k` even sites.
pub fn k_to_kappa(k: usize) -> usize {
    if k % 2 == 0 {
        2 * k
    } else {
        2 * k + 1
    }
}

pub fn is_even_site(site: usize) -> bool {
    site % 2 == 0
}

/// Weight of a site in the imbalance: `+1` on even (initially occupied)
/// sites, `-1` on odd ones.
pub fn imbalance_sign(site: usize) -> f64 {
    if is_even_site(site) {
        1.0
    } else {
        -1.0
    }
}

/// Distance between two sites, wrapping around for periodic chains.
pub fn site_distance(a: usize, b: usize, sites: usize, boundary: Boundary) -> usize {
    let d = a.abs_diff(b);
    match boundary {
        Boundary::Open => d,
        Boundary::Periodic => d.min(sites - d),
    }
}

fn nearest_sites(center: usize, sites: usize, boundary: Boundary, keep: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut others: Vec<usize> = (1..=sites).filter(|&s| s != center && keep(s)).collect();
    others.sort_by_key(|&s| (site_distance(center, s, sites, boundary), s));
    others
}

/// The `kappa` sites nearest to `center` (centre excluded), ordered by
/// distance with ties going to the lower index.
pub fn shell_sites(center: usize, kappa: usize, sites: usize, boundary: Boundary) -> Result<Vec<usize>> {
    if center == 0 || center > sites {
        return Err(Error::config(format!("centre {center} outside lattice 1..={sites}")));
    }
    if kappa > sites - 1 {
        return Err(Error::config(format!(
            "shell of {kappa} sites does not fit a lattice of {sites}"
        )));
    }
    let mut out = nearest_sites(center, sites, boundary, |_| true);
    out.truncate(kappa);
    Ok(out)
}

/// The `k` even sites nearest to `center`, same ordering rule as
/// [`shell_sites`]. Returns fewer when the lattice runs out.
pub fn even_neighbourhood(center: usize, k: usize, sites: usize, boundary: Boundary) -> Vec<usize> {
    let mut out = nearest_sites(center, sites, boundary, is_even_site);
    out.truncate(k);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellSpec {
    /// The truncated window spans `2 * half_width + 1` sites.
    pub half_width: usize,
    pub kappa_up: usize,
    pub kappa_down: usize,
}

impl ShellSpec {
    pub fn new(half_width: usize, kappa_up: usize, kappa_down: usize) -> Result<Self> {
        let s = ShellSpec {
            half_width,
            kappa_up,
            kappa_down,
        };
        s.validate()?;
        Ok(s)
    }

    /// Shells labelled by their even-site counts.
    pub fn from_k(half_width: usize, k_up: usize, k_down: usize) -> Result<Self> {
        Self::new(half_width, k_to_kappa(k_up), k_to_kappa(k_down))
    }

    pub fn validate(&self) -> Result<()> {
        let limit = 2 * self.half_width;
        if self.kappa_up > limit || self.kappa_down > limit {
            return Err(Error::config(format!(
                "shell sizes ({}, {}) exceed twice the half width {}",
                self.kappa_up, self.kappa_down, self.half_width
            )));
        }
        Ok(())
    }

    pub fn kappa(&self, spin: Spin) -> usize {
        match spin {
            Spin::Up => self.kappa_up,
            Spin::Down => self.kappa_down,
        }
    }

    pub fn k(&self, spin: Spin) -> usize {
        kappa_to_k(self.kappa(spin))
    }
}

/// A contiguous piece of the chain, listed as absolute sites in chain order.
/// `closed` adds the bond between the last and first site, which only
/// happens when the window is a whole periodic lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sublattice {
    sites: Vec<usize>,
    closed: bool,
}

impl Sublattice {
    pub fn full(sites: usize, boundary: Boundary) -> Self {
        Sublattice {
            sites: (1..=sites).collect(),
            closed: boundary == Boundary::Periodic && sites > 2,
        }
    }

    /// Sites within `half_width` of `center`. Open chains are clipped at
    /// the edges; periodic chains wrap, and a window covering the whole ring
    /// becomes the ring itself.
    pub fn window(center: usize, half_width: usize, sites: usize, boundary: Boundary) -> Self {
        match boundary {
            Boundary::Periodic if 2 * half_width + 1 >= sites => Sublattice::full(sites, boundary),
            Boundary::Periodic => {
                let start = center as isize - half_width as isize;
                let list = (0..2 * half_width + 1)
                    .map(|o| ((start + o as isize - 1).rem_euclid(sites as isize) + 1) as usize)
                    .collect();
                Sublattice {
                    sites: list,
                    closed: false,
                }
            }
            Boundary::Open => {
                let lo = center.saturating_sub(half_width).max(1);
                let hi = (center + half_width).min(sites);
                Sublattice {
                    sites: (lo..=hi).collect(),
                    closed: false,
                }
            }
        }
    }

    pub fn from_sites(sites: Vec<usize>, closed: bool) -> Self {
        Sublattice { sites, closed }
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn local_index(&self, site: usize) -> Option<usize> {
        self.sites.iter().position(|&s| s == site)
    }

    pub fn contains(&self, site: usize) -> bool {
        self.sites.contains(&site)
    }
}
