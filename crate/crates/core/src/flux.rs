//! Closed-form steady-state energy fluxes of uniform chains and their sum
//! over transverse channels.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{BathSpec, LatticeSpec, Statistics};
use crate::modes::{enumerate_modes, ModeChannel};

/// `omega 4 g^2 a_1 a_L (x_1 - x_L) / ((a_1 + a_L)(4 g^2 + a_1 a_L))`.
/// Zero when the denominator vanishes (a bath or the hopping is switched off).
fn chain_formula(omega_eff: f64, g: f64, a1: f64, al: f64, x1: f64, xl: f64) -> f64 {
    let g2 = 4.0 * g * g;
    // symmetric operand order keeps a bath swap an exact sign flip
    let prod = a1 * al;
    let den = (a1 + al) * (g2 + prod);
    if den == 0.0 {
        return 0.0;
    }
    (omega_eff * g2 * prod / den) * (x1 - xl)
}

/// Ballistic energy flux of a uniform fermionic chain, any length.
pub fn fermion_chain_flux(omega_eff: f64, g: f64, baths: &BathSpec) -> f64 {
    let (g1, gl) = baths.fermion_gammas();
    let (s1, sl) = baths.fermion_targets();
    chain_formula(omega_eff, g, g1, gl, s1, sl)
}

/// Ballistic energy flux of a uniform bosonic chain, any length.
pub fn boson_chain_flux(omega_eff: f64, g: f64, baths: &BathSpec) -> f64 {
    chain_formula(
        omega_eff,
        g,
        baths.gamma_in,
        baths.gamma_out,
        baths.occ_in,
        baths.occ_out,
    )
}

pub fn chain_flux(statistics: Statistics, omega_eff: f64, g: f64, baths: &BathSpec) -> Result<f64> {
    match statistics {
        Statistics::Fermion => Ok(fermion_chain_flux(omega_eff, g, baths)),
        Statistics::Boson => Ok(boson_chain_flux(omega_eff, g, baths)),
        Statistics::Spin => Err(Error::UnsupportedStatistics {
            operation: "chain_flux",
            statistics: "spin",
        }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelFlux {
    pub channel: ModeChannel,
    pub flux: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeFlux {
    pub total: f64,
    /// `N J_1d(omega)`, which `total` equals when the shifts cancel.
    pub uniform_reference: f64,
    pub channels: Vec<ChannelFlux>,
    pub warnings: Vec<String>,
}

/// Sum of per-channel chain fluxes of a transversely and longitudinally
/// uniform lattice.
pub fn lattice_total_flux(spec: &LatticeSpec, baths: &BathSpec) -> Result<LatticeFlux> {
    baths.validate()?;
    if !spec.is_uniform() {
        return Err(Error::InvalidArgument(
            "closed-form flux needs a uniform lattice; use the numeric steady state".into(),
        ));
    }
    let g = spec.transport_coupling();
    let channels: Vec<ChannelFlux> = enumerate_modes(spec)?
        .into_par_iter()
        .map(|channel| {
            let flux = chain_flux(spec.statistics, channel.omega_q, g, baths)?;
            Ok(ChannelFlux { channel, flux })
        })
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    let non_positive = channels.iter().filter(|c| c.channel.omega_q <= 0.0).count();
    if non_positive > 0 {
        warnings.push(format!(
            "{non_positive} channel(s) have omega_q <= 0; the local-bath model is outside its validity there"
        ));
    }
    let total = channels.iter().map(|c| c.flux).sum();
    let uniform_reference =
        channels.len() as f64 * chain_flux(spec.statistics, spec.omega, g, baths)?;
    Ok(LatticeFlux {
        total,
        uniform_reference,
        channels,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference_baths() -> BathSpec {
        BathSpec::new(1.0, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn fermion_reference_value() {
        let j = fermion_chain_flux(1.0, 1.0, &reference_baths());
        assert!((j - 1.0 / 7.0).abs() < 1e-15, "{j}");
    }

    #[test]
    fn boson_reference_value() {
        let j = boson_chain_flux(1.0, 1.0, &reference_baths());
        assert!((j - 0.4).abs() < 1e-15, "{j}");
    }

    #[test]
    fn equal_occupations_carry_nothing() {
        let b = BathSpec::new(0.3, 0.8, 0.7, 0.7).unwrap();
        assert_eq!(fermion_chain_flux(2.0, 0.5, &b), 0.0);
        assert_eq!(boson_chain_flux(2.0, 0.5, &b), 0.0);
    }

    #[test]
    fn zero_temperature_limit() {
        // gamma -> Gamma and s -> n as n -> 0
        let n = 1e-12;
        let b = BathSpec::new(0.5, 0.7, n, 0.0).unwrap();
        let (g1, gl) = b.fermion_gammas();
        assert!((g1 - 0.5).abs() < 1e-11 && gl == 0.7);
        let jf = fermion_chain_flux(1.0, 1.0, &b);
        let jb = boson_chain_flux(1.0, 1.0, &b);
        assert!(jf.abs() < 1e-11);
        assert!((jf - jb).abs() / jb < 1e-11);
    }

    #[test]
    fn decoupled_drain() {
        let b = BathSpec::new(1.0, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(boson_chain_flux(1.0, 1.0, &b), 0.0);
    }

    #[test]
    fn total_is_channel_count_times_chain() {
        let b = BathSpec::new(0.2, 0.4, 1.3, 0.1).unwrap();
        let spec = LatticeSpec::new(vec![3, 7], 2.0, vec![0.6, 0.9], Statistics::Fermion).unwrap();
        let lf = lattice_total_flux(&spec, &b).unwrap();
        let j1 = fermion_chain_flux(2.0, 0.9, &b);
        assert_eq!(lf.channels.len(), 3);
        assert!((lf.total - 3.0 * j1).abs() <= 1e-14 * j1.abs());
        assert!(lf.warnings.is_empty());
    }

    #[test]
    fn negative_channel_energy_warns() {
        let b = BathSpec::new(0.2, 0.4, 1.3, 0.1).unwrap();
        let spec = LatticeSpec::new(vec![4, 3], 0.5, vec![1.0, 0.9], Statistics::Boson).unwrap();
        let lf = lattice_total_flux(&spec, &b).unwrap();
        assert_eq!(lf.warnings.len(), 1);
        assert!((lf.total - lf.uniform_reference).abs() < 1e-14);
    }

    #[test]
    fn spin_rejected() {
        let spec = LatticeSpec::chain(3, 1.0, 1.0, Statistics::Spin).unwrap();
        assert!(lattice_total_flux(&spec, &reference_baths()).is_err());
    }

    proptest! {
        #[test]
        fn swapping_baths_flips_sign(
            omega in 0.1f64..10.0, g in 0.05f64..3.0,
            ga in 0.01f64..2.0, gb in 0.01f64..2.0, na in 0.0f64..3.0, nb in 0.0f64..3.0,
        ) {
            let b = BathSpec::new(ga, gb, na, nb).unwrap();
            let s = b.swapped();
            prop_assert_eq!(fermion_chain_flux(omega, g, &b), -fermion_chain_flux(omega, g, &s));
            prop_assert_eq!(boson_chain_flux(omega, g, &b), -boson_chain_flux(omega, g, &s));
        }

        #[test]
        fn sign_follows_occupation_bias(
            omega in 0.1f64..10.0, g in 0.05f64..3.0,
            ga in 0.01f64..2.0, gb in 0.01f64..2.0, na in 0.0f64..3.0, nb in 0.0f64..3.0,
        ) {
            prop_assume!((na - nb).abs() > 1e-9);
            let b = BathSpec::new(ga, gb, na, nb).unwrap();
            let bias = (na - nb).signum();
            prop_assert_eq!(fermion_chain_flux(omega, g, &b).signum(), bias);
            prop_assert_eq!(boson_chain_flux(omega, g, &b).signum(), bias);
        }
    }
}
