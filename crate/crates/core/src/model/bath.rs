use super::network::network_layout;
use super::ops::ModeAlgebra;
use super::spec::{BathModel, BathSpec, NetworkSpec, Truncation};
use super::terms::{Jump, LindbladTerm};
use crate::quantum::{Factor, SparseOp};
use crate::{Error, Result, C64};

/// Factor label of the seven local modes.
pub const LOCAL_MODES_FACTOR: &str = "modes";
/// Factor label of the shared non-local mode.
pub const NONLOCAL_MODE_FACTOR: &str = "mode";

/// Damping `κ [2LρL† − {L†L, ρ}]` with `L = a` or `L = P_site a`.
#[derive(Clone, Debug, PartialEq)]
pub struct BathDamping {
    pub mode: String,
    pub site: Option<String>,
    pub rate: f64,
}

/// Extra factor and operators a structured bath adds to the network.
#[derive(Clone, Debug, PartialEq)]
pub struct BathExtension {
    pub factor: Factor,
    /// `ω a†a` per mode.
    pub mode_frequencies: Vec<(String, f64)>,
    /// `g σ⁺σ⁻_site (a + a†)` as `(site, mode, g)`.
    pub couplings: Vec<(String, String, f64)>,
    pub dampings: Vec<BathDamping>,
}

impl BathExtension {
    pub fn modes(&self) -> Vec<String> {
        self.factor.modes().into_iter().map(String::from).collect()
    }

    pub(crate) fn hamiltonian(&self, alg: &ModeAlgebra) -> Result<SparseOp> {
        let mut h = SparseOp::zeros(alg.dim());
        for (mode, w) in &self.mode_frequencies {
            if *w != 0.0 {
                h = h.add(&alg.number(mode)?.scale(C64::new(*w, 0.0)))?;
            }
        }
        for (site, mode, g) in &self.couplings {
            if *g == 0.0 {
                continue;
            }
            let x = alg.lowering(mode)?.add(&alg.raising(mode)?)?;
            let coupling = alg.number(site)?.matmul(&x)?;
            h = h.add(&coupling.scale(C64::new(*g, 0.0)))?;
        }
        Ok(h)
    }

    pub(crate) fn damping_term(&self, alg: &ModeAlgebra) -> Result<LindbladTerm> {
        let jumps = self
            .dampings
            .iter()
            .map(|d| {
                let a = alg.lowering(&d.mode)?;
                let op = match &d.site {
                    Some(s) => alg.number(s)?.matmul(&a)?,
                    None => a,
                };
                Ok(Jump { rate: d.rate, op })
            })
            .collect::<Result<_>>()?;
        Ok(LindbladTerm::jumps("bath-damping", jumps))
    }
}

/// Number of occupation patterns over `n` modes with at most `levels - 1`
/// quanta each and at most `max_total` in total.
fn pattern_count(n: usize, levels: usize, max_total: usize) -> u128 {
    let mut ways = vec![0u128; max_total + 1];
    ways[0] = 1;
    for _ in 0..n {
        let mut next = vec![0u128; max_total + 1];
        for (s, &w) in ways.iter().enumerate() {
            for k in 0..levels.min(max_total - s + 1) {
                next[s + k] = next[s + k].saturating_add(w);
            }
        }
        ways = next;
    }
    ways.iter().fold(0u128, |a, &b| a.saturating_add(b))
}

fn patterns(n: usize, levels: usize, max_total: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = vec![0u8; n];
    fn rec(k: usize, left: usize, levels: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for q in 0..levels.min(left + 1) {
            cur[k] = q as u8;
            rec(k + 1, left - q, levels, cur, out);
        }
        cur[k] = 0;
    }
    rec(0, max_total, levels, &mut cur, &mut out);
    out
}

/// One damped mode per site, coupled to that site's population.
pub fn build_local_bath(net: &NetworkSpec, bath: &BathSpec) -> Result<BathExtension> {
    let BathModel::LocalModes(spec) = &bath.model else {
        return Err(Error::Config(
            "build_local_bath needs a local-modes bath".into(),
        ));
    };
    let n = net.n_sites();
    bath.validate(n)?;
    let max_total = spec
        .max_total_mode_excitations
        .unwrap_or(n * (spec.levels_per_mode - 1));
    let net_dim = network_layout(net)?.total_dim() as u128;
    let count = pattern_count(n, spec.levels_per_mode, max_total);
    let dim = count.saturating_mul(net_dim);
    if dim > spec.max_layout_dim as u128 {
        return Err(Error::Resource(format!(
            "local-bath layout would have dimension {dim} (cap {}); lower max_total_mode_excitations \
             (currently {max_total}) or levels_per_mode",
            spec.max_layout_dim
        )));
    }
    let modes: Vec<String> = (1..=n).map(|j| format!("mode{j}")).collect();
    let table = patterns(n, spec.levels_per_mode, max_total);
    let factor = Factor::with_occupations(LOCAL_MODES_FACTOR, modes.clone(), table)?;
    let freqs = spec
        .mode_frequencies
        .clone()
        .unwrap_or_else(|| net.site_energies.clone());
    let g = bath.couplings();
    let k = bath.dampings();
    let sites = net.site_labels();
    Ok(BathExtension {
        factor,
        mode_frequencies: modes.iter().cloned().zip(freqs).collect(),
        couplings: (0..n)
            .map(|j| (sites[j].clone(), modes[j].clone(), g[j]))
            .collect(),
        dampings: (0..n)
            .map(|j| BathDamping {
                mode: modes[j].clone(),
                site: None,
                rate: k[j],
            })
            .collect(),
    })
}

/// A single zero-frequency mode coupled to every site, damped through
/// site-resolved channels `P_j a`.
pub fn build_nonlocal_bath(net: &NetworkSpec, bath: &BathSpec) -> Result<BathExtension> {
    let BathModel::NonLocalMode(spec) = &bath.model else {
        return Err(Error::Config(
            "build_nonlocal_bath needs a non-local-mode bath".into(),
        ));
    };
    if net.truncation != Truncation::Single {
        return Err(Error::Config(
            "the non-local bath is defined on the single-excitation sector only".into(),
        ));
    }
    let n = net.n_sites();
    bath.validate(n)?;
    let g = bath.couplings();
    let k = bath.dampings();
    let factor = Factor::new(NONLOCAL_MODE_FACTOR, spec.resolve_levels(&g, &k)?)?;
    let sites = net.site_labels();
    let mode = NONLOCAL_MODE_FACTOR.to_string();
    Ok(BathExtension {
        factor,
        mode_frequencies: Vec::new(),
        couplings: (0..n)
            .map(|j| (sites[j].clone(), mode.clone(), g[j]))
            .collect(),
        dampings: (0..n)
            .map(|j| BathDamping {
                mode: mode.clone(),
                site: Some(sites[j].clone()),
                rate: k[j],
            })
            .collect(),
    })
}

/// Dispatches on the bath model; `None` for a bath-free model.
pub fn build_bath(net: &NetworkSpec, bath: &BathSpec) -> Result<Option<BathExtension>> {
    match bath.model {
        BathModel::None => Ok(None),
        BathModel::LocalModes(_) => build_local_bath(net, bath).map(Some),
        BathModel::NonLocalMode(_) => build_nonlocal_bath(net, bath).map(Some),
    }
}
