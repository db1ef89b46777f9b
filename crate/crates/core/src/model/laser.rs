use super::network::network_layout;
use super::ops::ModeAlgebra;
use super::spec::{Frame, LaserPulse, NetworkSpec, Truncation};
use super::units::CM1_TO_RAD_PS;
use crate::quantum::SparseOp;
use crate::{Error, Result, C64};

/// Time dependence multiplying a drive operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quadrature {
    /// `E(t)` alone (rotating frame).
    Envelope,
    /// `E(t) cos ω₁t`.
    Cos,
    /// `E(t) sin ω₁t`.
    Sin,
}

/// Hermitian operator with a scalar pulse coefficient, `c(t) · op`.
#[derive(Clone, Debug)]
pub struct Drive {
    pub op: SparseOp,
    pub pulse: LaserPulse,
    pub quadrature: Quadrature,
}

impl Drive {
    /// Coefficient in rad/ps per unit dipole projection (Debye).
    pub fn coefficient(&self, t: f64) -> f64 {
        let e = self.pulse.envelope(t) * CM1_TO_RAD_PS;
        match self.quadrature {
            Quadrature::Envelope => e,
            Quadrature::Cos => e * (self.pulse.carrier * t).cos(),
            Quadrature::Sin => e * (self.pulse.carrier * t).sin(),
        }
    }

    pub fn with_idle_factor(&self, d: usize) -> Self {
        Drive {
            op: self.op.kron(&SparseOp::identity(d)),
            ..self.clone()
        }
    }
}

/// `H(t) = −Σ_i (μ_i·ê) E(t) e^{−iω₁t} σ_i⁺ + h.c.` on the bare network layout.
pub fn build_laser_drive(net: &NetworkSpec, pulse: &LaserPulse) -> Result<Vec<Drive>> {
    let alg = ModeAlgebra::new(&network_layout(net)?)?;
    laser_drives(&alg, net, pulse)
}

pub(crate) fn laser_drives(
    alg: &ModeAlgebra,
    net: &NetworkSpec,
    pulse: &LaserPulse,
) -> Result<Vec<Drive>> {
    if net.truncation != Truncation::Full {
        return Err(Error::Config(
            "laser excitation needs the full excitation truncation".into(),
        ));
    }
    pulse.validate()?;
    let dipoles = net
        .dipoles
        .as_ref()
        .ok_or_else(|| Error::Config("laser drive needs site dipole moments".into()))?;
    let mut d = SparseOp::zeros(alg.dim());
    for (s, mu) in net.site_labels().iter().zip(dipoles) {
        let p = pulse.projection(mu);
        if p != 0.0 {
            d = d.add(&alg.raising(s)?.scale(C64::new(p, 0.0)))?;
        }
    }
    let dag = d.adjoint();
    let x = d.add(&dag)?.scale(C64::new(-1.0, 0.0));
    Ok(match pulse.frame {
        Frame::Rotating => vec![Drive {
            op: x,
            pulse: pulse.clone(),
            quadrature: Quadrature::Envelope,
        }],
        Frame::Lab => {
            let y = d
                .add(&dag.scale(C64::new(-1.0, 0.0)))?
                .scale(C64::new(0.0, 1.0));
            vec![
                Drive {
                    op: x,
                    pulse: pulse.clone(),
                    quadrature: Quadrature::Cos,
                },
                Drive {
                    op: y,
                    pulse: pulse.clone(),
                    quadrature: Quadrature::Sin,
                },
            ]
        }
    })
}

/// Diagonal site energies in the frame the generator works in.
pub(crate) fn frame_energies(net: &NetworkSpec, pulse: Option<&LaserPulse>) -> Vec<f64> {
    match pulse {
        None => net.site_energies.clone(),
        Some(p) => {
            let shift = match p.frame {
                Frame::Rotating => net.reference_energy - p.carrier,
                Frame::Lab => net.reference_energy,
            };
            net.site_energies.iter().map(|w| w + shift).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::hermiticity_deviation;

    #[test]
    fn needs_dipoles_and_full_truncation() {
        let net = NetworkSpec::fmo().with_truncation(Truncation::Full);
        let pulse = LaserPulse::resonant_with_site(&net, 1).unwrap();
        let mut bare = net.clone();
        bare.dipoles = None;
        assert!(matches!(
            build_laser_drive(&bare, &pulse),
            Err(Error::Config(_))
        ));
        let single = net.clone().with_truncation(Truncation::Single);
        assert!(matches!(
            build_laser_drive(&single, &pulse),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn lab_frame_quadratures_are_hermitian() {
        let net = NetworkSpec::fmo().with_truncation(Truncation::Full);
        let mut pulse = LaserPulse::resonant_with_site(&net, 1).unwrap();
        pulse.frame = Frame::Lab;
        let drives = build_laser_drive(&net, &pulse).unwrap();
        assert_eq!(drives.len(), 2);
        for d in &drives {
            assert!(hermiticity_deviation(&d.op.to_dense()) < 1e-14);
        }
        // at t = center the two quadratures recombine into the envelope
        let t = 0.12;
        let (c, s) = (drives[0].coefficient(t), drives[1].coefficient(t));
        let e = pulse.envelope(t) * CM1_TO_RAD_PS;
        assert!(((c * c + s * s).sqrt() - e).abs() < 1e-12 * e);
    }

    #[test]
    fn rotating_frame_detunes_from_carrier() {
        let net = NetworkSpec::fmo().with_truncation(Truncation::Full);
        let pulse = LaserPulse::resonant_with_site(&net, 1).unwrap();
        let e = frame_energies(&net, Some(&pulse));
        assert!(e[0].abs() < 1e-9);
        assert!((e[1] - (net.site_energies[1] - net.site_energies[0])).abs() < 1e-9);
    }
}
