use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::units::{fs_to_ps, CM1_TO_RAD_PS};
use crate::quantum::hermitian_eigenvalues;
use crate::{CMatrix, Error, Result, C64};

/// Which excitation sectors the network layout keeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truncation {
    /// Ground, the one-excitation states and a sink level.
    #[default]
    Single,
    /// The full qubit product space of the sites plus a sink qubit.
    Full,
}

/// Site energies and couplings of a chromophore network, in rad/ps.
///
/// `site_energies` are measured from `reference_energy`. Only the laser in
/// the lab frame sees absolute energies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub site_energies: Vec<f64>,
    pub couplings: Vec<Vec<f64>>,
    #[serde(default)]
    pub reference_energy: f64,
    /// Transition dipoles in Debye.
    #[serde(default)]
    pub dipoles: Option<Vec<[f64; 3]>>,
    #[serde(default)]
    pub truncation: Truncation,
}

impl NetworkSpec {
    pub fn new(site_energies: Vec<f64>, couplings: Vec<Vec<f64>>) -> Result<Self> {
        let net = NetworkSpec {
            site_energies,
            couplings,
            reference_energy: 0.0,
            dipoles: None,
            truncation: Truncation::Single,
        };
        net.validate()?;
        Ok(net)
    }

    /// Two sites at `omega` coupled by `v`.
    pub fn dimer(omega: f64, v: f64) -> Self {
        Self::new(vec![omega, omega], vec![vec![0.0, v], vec![v, 0.0]]).expect("valid dimer")
    }

    /// The shipped seven-site FMO network.
    pub fn fmo() -> Self {
        super::data::fmo_default()
    }

    pub fn n_sites(&self) -> usize {
        self.site_energies.len()
    }

    pub fn with_truncation(mut self, truncation: Truncation) -> Self {
        self.truncation = truncation;
        self
    }

    /// Same energies with every coupling set to zero.
    pub fn decoupled(&self) -> Self {
        let n = self.n_sites();
        NetworkSpec {
            couplings: vec![vec![0.0; n]; n],
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites();
        if n < 2 {
            return Err(Error::Validation(format!(
                "network needs at least 2 sites, got {n}"
            )));
        }
        if self.couplings.len() != n || self.couplings.iter().any(|r| r.len() != n) {
            return Err(Error::Validation(format!(
                "coupling matrix must be {n}x{n}"
            )));
        }
        if self
            .site_energies
            .iter()
            .chain(self.couplings.iter().flatten())
            .any(|x| !x.is_finite())
        {
            return Err(Error::Validation("non-finite energy or coupling".into()));
        }
        for i in 0..n {
            if self.couplings[i][i] != 0.0 {
                return Err(Error::Validation(format!(
                    "coupling matrix diagonal must be zero (entry {0},{0} is {1})",
                    i + 1,
                    self.couplings[i][i]
                )));
            }
            for j in 0..i {
                let (a, b) = (self.couplings[i][j], self.couplings[j][i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::Validation(format!(
                        "coupling matrix not symmetric: v[{}][{}] = {a} but v[{}][{}] = {b}",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        if let Some(d) = &self.dipoles {
            if d.len() != n {
                return Err(Error::Validation(format!(
                    "{} dipoles for {n} sites",
                    d.len()
                )));
            }
        }
        Ok(())
    }

    /// Single-excitation block of the Hamiltonian (rad/ps).
    pub fn site_block(&self) -> DMatrix<f64> {
        let n = self.n_sites();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.site_energies[i]
            } else {
                self.couplings[i][j]
            }
        })
    }

    pub fn site_block_complex(&self) -> CMatrix {
        self.site_block().map(|x| C64::new(x, 0.0))
    }

    pub fn site_label(j: usize) -> String {
        format!("site{}", j + 1)
    }

    pub fn site_labels(&self) -> Vec<String> {
        (0..self.n_sites()).map(Self::site_label).collect()
    }
}

/// Correlated dephasing, replacing the local dephasing term when present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelatedDephasing {
    /// `γ_mn = (1 − c)·δ_mn·γ_m + c·√(γ_m γ_n)`.
    Strength(f64),
    /// Explicit symmetric matrix in 1/ps.
    Matrix(Vec<Vec<f64>>),
}

/// Thermal injection through one site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    /// 1-based site index.
    pub site: usize,
    /// Γ_i in 1/ps.
    pub rate: f64,
    pub n_th: f64,
}

/// Markovian noise rates, all in 1/ps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub dissipation: Vec<f64>,
    pub dephasing: Vec<f64>,
    pub sink_rate: f64,
    /// 1-based index of the site feeding the sink.
    pub sink_source_site: usize,
    #[serde(default)]
    pub correlated_dephasing: Option<CorrelatedDephasing>,
    #[serde(default)]
    pub injection: Option<Injection>,
}

pub const FMO_DISSIPATION: f64 = 5e-4;
pub const FMO_DEPHASING: [f64; 7] = [0.157, 9.432, 7.797, 9.432, 7.797, 0.922, 9.433];
#[allow(clippy::approx_constant)]
pub const FMO_SINK_RATE: f64 = 6.283;
pub const FMO_SINK_SOURCE: usize = 3;

impl NoiseSpec {
    /// Default FMO rates: weak dissipation, optimal local dephasing, sink at site 3.
    pub fn fmo() -> Self {
        NoiseSpec {
            dissipation: vec![FMO_DISSIPATION; 7],
            dephasing: FMO_DEPHASING.to_vec(),
            sink_rate: FMO_SINK_RATE,
            sink_source_site: FMO_SINK_SOURCE,
            correlated_dephasing: None,
            injection: None,
        }
    }

    /// No noise at all; the sink is attached to `source` with zero rate.
    pub fn silent(n: usize, source: usize) -> Self {
        NoiseSpec {
            dissipation: vec![0.0; n],
            dephasing: vec![0.0; n],
            sink_rate: 0.0,
            sink_source_site: source,
            correlated_dephasing: None,
            injection: None,
        }
    }

    pub fn without_dephasing(mut self) -> Self {
        self.dephasing.iter_mut().for_each(|g| *g = 0.0);
        self.correlated_dephasing = None;
        self
    }

    pub fn validate(&self, n_sites: usize) -> Result<()> {
        for (name, v) in [
            ("dissipation", &self.dissipation),
            ("dephasing", &self.dephasing),
        ] {
            if v.len() != n_sites {
                return Err(Error::Validation(format!(
                    "{name} has {} rates for {n_sites} sites",
                    v.len()
                )));
            }
            check_rates(name, v)?;
        }
        check_rates("sink_rate", &[self.sink_rate])?;
        if self.sink_source_site == 0 || self.sink_source_site > n_sites {
            return Err(Error::Validation(format!(
                "sink source site {} outside 1..={n_sites}",
                self.sink_source_site
            )));
        }
        if let Some(inj) = &self.injection {
            if inj.site == 0 || inj.site > n_sites {
                return Err(Error::Validation(format!(
                    "injection site {} outside 1..={n_sites}",
                    inj.site
                )));
            }
            check_rates("injection rate", &[inj.rate])?;
            check_rates("n_th", &[inj.n_th])?;
        }
        self.correlation_matrix()?;
        Ok(())
    }

    /// The γ_mn matrix, validated, if correlated dephasing is configured.
    pub fn correlation_matrix(&self) -> Result<Option<DMatrix<f64>>> {
        let Some(cd) = &self.correlated_dephasing else {
            return Ok(None);
        };
        let n = self.dephasing.len();
        let g = &self.dephasing;
        let m = match cd {
            CorrelatedDephasing::Strength(c) => {
                if !(0.0..=1.0).contains(c) {
                    return Err(Error::Validation(format!(
                        "correlation strength {c} outside [0, 1]"
                    )));
                }
                DMatrix::from_fn(n, n, |i, j| {
                    let off = c * (g[i] * g[j]).sqrt();
                    if i == j {
                        g[i]
                    } else {
                        off
                    }
                })
            }
            CorrelatedDephasing::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Validation(format!(
                        "correlated dephasing matrix must be {n}x{n}"
                    )));
                }
                let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
                for i in 0..n {
                    if (m[(i, i)] - g[i]).abs() > 1e-12 * g[i].max(1.0) {
                        return Err(Error::Validation(format!(
                            "correlated dephasing diagonal entry {} is {} but the local rate is {}",
                            i + 1,
                            m[(i, i)],
                            g[i]
                        )));
                    }
                }
                m
            }
        };
        validate_correlation_matrix(&m)?;
        Ok(Some(m))
    }
}

/// Symmetry and positive semidefiniteness of a γ_mn matrix.
pub fn validate_correlation_matrix(m: &DMatrix<f64>) -> Result<()> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Validation(
            "correlated dephasing matrix must be square".into(),
        ));
    }
    for i in 0..n {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * m[(i, j)].abs().max(1.0) {
                return Err(Error::Validation(format!(
                    "correlated dephasing matrix not symmetric at ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let ev = hermitian_eigenvalues(&m.map(|x| C64::new(x, 0.0)));
    if let Some(&min) = ev.first() {
        if min < -1e-12 {
            return Err(Error::Validation(format!(
                "correlated dephasing matrix is not positive semidefinite: eigenvalue {min:.6e}"
            )));
        }
    }
    Ok(())
}

fn check_rates(name: &str, v: &[f64]) -> Result<()> {
    if let Some((i, r)) = v
        .iter()
        .enumerate()
        .find(|(_, r)| !(r.is_finite() && **r >= 0.0))
    {
        return Err(Error::Validation(format!(
            "{name}[{}] = {r} must be a non-negative rate",
            i + 1
        )));
    }
    Ok(())
}

/// One damped harmonic mode per site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalModes {
    /// ω_h^j in rad/ps; defaults to the site energies.
    #[serde(default)]
    pub mode_frequencies: Option<Vec<f64>>,
    pub levels_per_mode: usize,
    /// Cap on the summed occupation of all modes.
    #[serde(default)]
    pub max_total_mode_excitations: Option<usize>,
    /// Largest acceptable layout dimension.
    pub max_layout_dim: usize,
}

impl Default for LocalModes {
    fn default() -> Self {
        LocalModes {
            mode_frequencies: None,
            levels_per_mode: 2,
            max_total_mode_excitations: Some(2),
            max_layout_dim: 2048,
        }
    }
}

/// One damped mode shared by all sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonLocalMode {
    /// Number of Fock levels kept, `d + 1`; chosen from the bath rates when unset.
    #[serde(default)]
    pub levels: Option<usize>,
    /// Poisson tail weight allowed above the automatic cutoff.
    #[serde(default = "default_tail")]
    pub tail_tolerance: f64,
    /// Upper bound on the automatic cutoff.
    #[serde(default = "default_max_levels")]
    pub max_levels: usize,
}

fn default_tail() -> f64 {
    1e-7
}

fn default_max_levels() -> usize {
    64
}

impl Default for NonLocalMode {
    fn default() -> Self {
        NonLocalMode {
            levels: None,
            tail_tolerance: default_tail(),
            max_levels: default_max_levels(),
        }
    }
}

impl NonLocalMode {
    pub fn fixed(levels: usize) -> Self {
        NonLocalMode {
            levels: Some(levels),
            ..Self::default()
        }
    }

    /// Fock levels for couplings `g` and dampings `kappa`.
    ///
    /// With the excitation on site j the mode relaxes to a coherent state
    /// of mean occupation (g_j/κ_j)²; the cutoff keeps the Poisson tail
    /// of the largest such occupation below `tail_tolerance`.
    pub fn resolve_levels(&self, g: &[f64], kappa: &[f64]) -> Result<usize> {
        if let Some(l) = self.levels {
            return Ok(l);
        }
        let mut lambda: f64 = 0.0;
        for (gj, kj) in g.iter().zip(kappa) {
            if *gj == 0.0 {
                continue;
            }
            if *kj == 0.0 {
                return Err(Error::Config(
                    "an undamped coupled mode has no stationary occupation; set `levels` explicitly".into(),
                ));
            }
            lambda = lambda.max((gj / kj).powi(2));
        }
        // P(N > d) for N ~ Poisson(λ)
        let mut term = (-lambda).exp();
        let mut cdf = term;
        let mut d = 0usize;
        while 1.0 - cdf > self.tail_tolerance || d < 1 {
            d += 1;
            term *= lambda / d as f64;
            cdf += term;
            if d + 1 > self.max_levels {
                return Err(Error::Resource(format!(
                    "mean mode occupation {lambda:.3} needs more than max_levels = {} Fock levels",
                    self.max_levels
                )));
            }
        }
        Ok(d + 1)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BathModel {
    #[default]
    None,
    LocalModes(LocalModes),
    NonLocalMode(NonLocalMode),
}

/// Structured environment with the Markovianity dial `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub model: BathModel,
    pub f: f64,
    /// g₀_j in 1/ps.
    pub base_couplings: Vec<f64>,
    /// κ₀_j in 1/ps.
    pub base_dampings: Vec<f64>,
}

/// g₀ = κ₀ for the FMO sites, in 1/ps.
pub fn fmo_base_rates() -> Vec<f64> {
    [1.0, 50.0, 41.0, 50.0, 41.0, 5.0, 50.0]
        .iter()
        .map(|x| x / 5.3)
        .collect()
}

impl BathSpec {
    pub fn none() -> Self {
        BathSpec {
            model: BathModel::None,
            f: 1.0,
            base_couplings: Vec::new(),
            base_dampings: Vec::new(),
        }
    }

    pub fn fmo_local(f: f64) -> Self {
        BathSpec {
            model: BathModel::LocalModes(LocalModes::default()),
            f,
            base_couplings: fmo_base_rates(),
            base_dampings: fmo_base_rates(),
        }
    }

    pub fn fmo_nonlocal(f: f64) -> Self {
        BathSpec {
            model: BathModel::NonLocalMode(NonLocalMode::default()),
            f,
            base_couplings: fmo_base_rates(),
            base_dampings: fmo_base_rates(),
        }
    }

    pub fn is_active(&self) -> bool {
        self.model != BathModel::None
    }

    /// g_j = √f · g₀_j.
    pub fn couplings(&self) -> Vec<f64> {
        let s = self.f.sqrt();
        self.base_couplings.iter().map(|g| s * g).collect()
    }

    /// κ_j = f · κ₀_j.
    pub fn dampings(&self) -> Vec<f64> {
        self.base_dampings.iter().map(|k| self.f * k).collect()
    }

    pub fn validate(&self, n_sites: usize) -> Result<()> {
        if self.model == BathModel::None {
            return Ok(());
        }
        if !(self.f.is_finite() && self.f > 0.0) {
            return Err(Error::Validation(format!(
                "bath scaling f = {} must be positive",
                self.f
            )));
        }
        for (name, v) in [
            ("base couplings", &self.base_couplings),
            ("base dampings", &self.base_dampings),
        ] {
            if v.len() != n_sites {
                return Err(Error::Validation(format!(
                    "{name}: {} values for {n_sites} sites",
                    v.len()
                )));
            }
        }
        check_rates("base dampings", &self.base_dampings)?;
        if self.base_couplings.iter().any(|g| !g.is_finite()) {
            return Err(Error::Validation("non-finite bath coupling".into()));
        }
        match &self.model {
            BathModel::LocalModes(m) => {
                if m.levels_per_mode < 2 {
                    return Err(Error::Validation(format!(
                        "levels_per_mode = {} but a mode needs at least 2 levels",
                        m.levels_per_mode
                    )));
                }
                if let Some(w) = &m.mode_frequencies {
                    if w.len() != n_sites {
                        return Err(Error::Validation(format!(
                            "{} mode frequencies for {n_sites} sites",
                            w.len()
                        )));
                    }
                }
            }
            BathModel::NonLocalMode(m) => {
                if let Some(l) = m.levels.filter(|&l| l < 2) {
                    return Err(Error::Validation(format!(
                        "non-local mode keeps {l} levels; the Fock cutoff d must be at least 1"
                    )));
                }
                if !(m.tail_tolerance > 0.0 && m.tail_tolerance < 1.0) {
                    return Err(Error::Validation(format!(
                        "tail_tolerance = {} must lie in (0, 1)",
                        m.tail_tolerance
                    )));
                }
            }
            BathModel::None => {}
        }
        Ok(())
    }
}

/// Rescales the bath to a new `f`, keeping g²/κ fixed.
pub fn scale_bath(bath: &BathSpec, f: f64) -> Result<BathSpec> {
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::Validation(format!(
            "bath scaling f = {f} must be positive"
        )));
    }
    Ok(BathSpec { f, ..bath.clone() })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    #[default]
    Rotating,
    Lab,
}

/// Gaussian laser pulse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaserPulse {
    /// E₀ in D⁻¹ cm⁻¹: `(μ·ê) E₀` with μ in Debye is a wavenumber.
    pub field_strength: f64,
    pub width_fs: f64,
    pub center_fs: f64,
    pub polarization: [f64; 3],
    /// Carrier ω₁ in rad/ps, absolute.
    pub carrier: f64,
    #[serde(default)]
    pub frame: Frame,
}

pub const FMO_FIELD_STRENGTH: f64 = 4.97968;

impl LaserPulse {
    /// The 60 fs pulse centred at 120 fs, polarised along and resonant with `site` (1-based).
    pub fn resonant_with_site(net: &NetworkSpec, site: usize) -> Result<Self> {
        let dipoles = net
            .dipoles
            .as_ref()
            .ok_or_else(|| Error::Config("laser drive needs site dipole moments".into()))?;
        if site == 0 || site > net.n_sites() {
            return Err(Error::Argument(format!(
                "site {site} outside 1..={}",
                net.n_sites()
            )));
        }
        let mu = dipoles[site - 1];
        let norm = (mu[0] * mu[0] + mu[1] * mu[1] + mu[2] * mu[2]).sqrt();
        if norm == 0.0 {
            return Err(Error::Config(format!("site {site} has a zero dipole")));
        }
        Ok(LaserPulse {
            field_strength: FMO_FIELD_STRENGTH,
            width_fs: 60.0,
            center_fs: 120.0,
            polarization: [mu[0] / norm, mu[1] / norm, mu[2] / norm],
            carrier: net.reference_energy + net.site_energies[site - 1],
            frame: Frame::Rotating,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width_fs.is_finite() && self.width_fs > 0.0) {
            return Err(Error::Validation(format!(
                "pulse width {} fs must be positive",
                self.width_fs
            )));
        }
        let e = &self.polarization;
        let norm = (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "polarization has norm {norm}, expected 1"
            )));
        }
        if !self.field_strength.is_finite()
            || !self.center_fs.is_finite()
            || !self.carrier.is_finite()
        {
            return Err(Error::Validation("non-finite laser parameter".into()));
        }
        Ok(())
    }

    /// Field envelope E(t) in D⁻¹ cm⁻¹, t in ps.
    pub fn envelope(&self, t: f64) -> f64 {
        let w = fs_to_ps(self.width_fs);
        let x = (t - fs_to_ps(self.center_fs)) / w;
        self.field_strength * (-0.5 * x * x).exp()
    }

    /// Coupling strength `(μ·ê)E(t)` in rad/ps for a dipole in Debye.
    pub fn coupling(&self, mu: &[f64; 3], t: f64) -> f64 {
        self.projection(mu) * self.envelope(t) * CM1_TO_RAD_PS
    }

    pub fn projection(&self, mu: &[f64; 3]) -> f64 {
        mu.iter().zip(&self.polarization).map(|(a, b)| a * b).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymmetric_couplings_rejected() {
        let err =
            NetworkSpec::new(vec![0.0, 0.0], vec![vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(NetworkSpec::new(vec![0.0], vec![vec![0.0]]).is_err());
        assert!(NetworkSpec::new(vec![0.0, 0.0], vec![vec![1.0, 0.0], vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn negative_rates_rejected() {
        let mut n = NoiseSpec::fmo();
        n.dissipation[2] = -1.0;
        assert!(matches!(n.validate(7), Err(Error::Validation(_))));
        let mut n = NoiseSpec::fmo();
        n.sink_source_site = 8;
        assert!(n.validate(7).is_err());
    }

    #[test]
    fn strength_family_is_psd_with_local_diagonal() {
        for c in [0.0, 0.3, 1.0] {
            let mut n = NoiseSpec::fmo();
            n.correlated_dephasing = Some(CorrelatedDephasing::Strength(c));
            let m = n.correlation_matrix().unwrap().unwrap();
            for i in 0..7 {
                assert_eq!(m[(i, i)], FMO_DEPHASING[i]);
            }
        }
    }

    #[test]
    fn non_psd_matrix_names_eigenvalue() {
        let mut n = NoiseSpec::silent(2, 1);
        n.dephasing = vec![1.0, 1.0];
        n.correlated_dephasing = Some(CorrelatedDephasing::Matrix(vec![
            vec![1.0, 1.01],
            vec![1.01, 1.0],
        ]));
        let msg = n.validate(2).unwrap_err().to_string();
        assert!(msg.contains("eigenvalue -1.0"), "{msg}");
    }

    #[test]
    fn scale_bath_keeps_ratio() {
        let b = BathSpec::fmo_local(1.0);
        let s = scale_bath(&b, 1.0).unwrap();
        assert_eq!(s.couplings(), b.base_couplings);
        assert_eq!(s.dampings(), b.base_dampings);
        let lo = scale_bath(&b, 0.1).unwrap();
        let hi = scale_bath(&b, 100.0).unwrap();
        for j in 0..7 {
            let r_lo = lo.couplings()[j].powi(2) / lo.dampings()[j];
            let r_hi = hi.couplings()[j].powi(2) / hi.dampings()[j];
            assert!((r_lo - r_hi).abs() <= 1e-14 * r_hi);
        }
        let q = scale_bath(&b, 4.0).unwrap();
        for j in 0..7 {
            let g0 = b.base_couplings[j];
            assert_eq!(
                q.couplings()[j].powi(2) / q.dampings()[j],
                (2.0 * g0).powi(2) / (4.0 * g0)
            );
        }
        assert!(scale_bath(&b, 0.0).is_err());
        assert!(scale_bath(&b, -1.0).is_err());
    }

    #[test]
    fn automatic_fock_cutoff() {
        let m = NonLocalMode::default();
        let levels = |f: f64| {
            let b = BathSpec::fmo_nonlocal(f);
            m.resolve_levels(&b.couplings(), &b.dampings()).unwrap()
        };
        // mean occupation 1/f since g₀ = κ₀
        let (hi, lo) = (levels(100.0), levels(0.1));
        assert!((3..=5).contains(&hi), "{hi}");
        assert!(lo > 20 && lo < 40, "{lo}");
        assert!(levels(1.0) > levels(10.0));
        assert_eq!(
            NonLocalMode::fixed(9)
                .resolve_levels(&[1.0], &[1.0])
                .unwrap(),
            9
        );
        let tight = NonLocalMode {
            max_levels: 8,
            ..NonLocalMode::default()
        };
        assert!(matches!(
            tight.resolve_levels(&[10.0], &[1.0]),
            Err(Error::Resource(_))
        ));
        assert!(m.resolve_levels(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn bath_validation() {
        let mut b = BathSpec::fmo_nonlocal(1.0);
        b.model = BathModel::NonLocalMode(NonLocalMode::fixed(1));
        assert!(b.validate(7).is_err());
        let mut b = BathSpec::fmo_local(1.0);
        b.model = BathModel::LocalModes(LocalModes {
            levels_per_mode: 1,
            ..LocalModes::default()
        });
        assert!(b.validate(7).is_err());
    }

    #[test]
    fn pulse_tail_and_validation() {
        let net = NetworkSpec::fmo();
        let p = LaserPulse::resonant_with_site(&net, 1).unwrap();
        p.validate().unwrap();
        let peak = p.envelope(0.120);
        assert_eq!(peak, FMO_FIELD_STRENGTH);
        assert!(p.envelope(0.120 + 7.0 * 0.060) < 1e-10 * peak);
        let mut bad = p.clone();
        bad.polarization = [1.0, 1.0, 0.0];
        assert!(bad.validate().is_err());
        bad = p.clone();
        bad.width_fs = 0.0;
        assert!(bad.validate().is_err());
    }
}
