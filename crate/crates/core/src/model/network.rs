use super::ops::ModeAlgebra;
use super::spec::{NetworkSpec, Truncation};
use super::terms::SINK_MODE;
use crate::quantum::{BasisLayout, Factor, SparseOp};
use crate::{CMatrix, Result, C64};

/// Factor holding ground, site and sink levels in the single-excitation layout.
pub const SYSTEM_FACTOR: &str = "system";

/// Factors of the bare network.
///
/// * single: one factor `system` with level 0 = ground, level j = site j,
///   level N+1 = sink.
/// * full: one qubit factor per site (`site1`, …) followed by a `sink` qubit.
pub fn network_factors(net: &NetworkSpec) -> Result<Vec<Factor>> {
    let sites = net.site_labels();
    match net.truncation {
        Truncation::Single => {
            let mut modes = sites;
            modes.push(SINK_MODE.to_string());
            Ok(vec![Factor::one_hot(SYSTEM_FACTOR, modes, true)?])
        }
        Truncation::Full => sites
            .into_iter()
            .chain(std::iter::once(SINK_MODE.to_string()))
            .map(|l| Factor::new(l, 2))
            .collect(),
    }
}

pub fn network_layout(net: &NetworkSpec) -> Result<BasisLayout> {
    BasisLayout::new(network_factors(net)?)
}

/// `Σ_j ω_j σ_j⁺σ_j⁻ + Σ_{j≠l} v_jl σ_j⁺σ_l⁻` on the bare network layout.
pub fn build_network_hamiltonian(net: &NetworkSpec) -> Result<(CMatrix, BasisLayout)> {
    net.validate()?;
    let layout = network_layout(net)?;
    let alg = ModeAlgebra::new(&layout)?;
    let h = network_hamiltonian(&alg, net, &net.site_energies)?;
    Ok((h.to_dense(), layout))
}

/// Network Hamiltonian on any layout containing the site modes, with the
/// given diagonal energies (which may be shifted into a rotating frame).
pub(crate) fn network_hamiltonian(
    alg: &ModeAlgebra,
    net: &NetworkSpec,
    energies: &[f64],
) -> Result<SparseOp> {
    let sites = net.site_labels();
    let mut h = SparseOp::zeros(alg.dim());
    for (j, s) in sites.iter().enumerate() {
        if energies[j] != 0.0 {
            h = h.add(&alg.number(s)?.scale(C64::new(energies[j], 0.0)))?;
        }
        for (l, t) in sites.iter().enumerate() {
            let v = net.couplings[j][l];
            if l != j && v != 0.0 {
                h = h.add(&alg.shift(&[(s, 1), (t, -1)])?.scale(C64::new(v, 0.0)))?;
            }
        }
    }
    Ok(h)
}
