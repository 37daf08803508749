use latticeflux_core::oracle::{build_liouvillian, oracle_fluxes, oracle_steady_state};
use latticeflux_core::quadratic::lattice_steady_flux;
use latticeflux_core::{BathSpec, LatticeSpec, Statistics};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn min_eig(rho: &DMatrix<Complex64>) -> f64 {
    let herm = (rho + rho.adjoint()) * Complex64::from(0.5);
    herm.symmetric_eigenvalues().min()
}

#[test]
fn rk4_keeps_rho_physical_and_relaxes() {
    let spec = LatticeSpec::chain(3, 1.0, 0.7, Statistics::Fermion).unwrap();
    let baths = BathSpec::new(1.0, 0.5, 1.5, 0.1).unwrap();
    let l = build_liouvillian(&spec, &baths, None).unwrap();
    let dim = l.space.dim();
    // start from the empty state
    let mut rho = DMatrix::zeros(dim, dim);
    let vac = (0..dim).find(|&i| l.space.numbers()[i] == 0).unwrap();
    rho[(vac, vac)] = Complex64::from(1.0);

    let mut worst: f64 = 0.0;
    let mut trace_err: f64 = 0.0;
    let rho = l.propagate_rk4(&rho, 0.01, 3000, |step, r| {
        if step % 50 == 0 {
            worst = worst.min(min_eig(r));
            trace_err = trace_err.max((r.trace() - Complex64::from(1.0)).norm());
        }
    });
    assert!(worst > -1e-10, "negative eigenvalue {worst}");
    assert!(trace_err < 1e-10);

    let exact = oracle_steady_state(&l).unwrap().to_dense();
    let diff = (&rho - &exact).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(diff < 1e-6, "not relaxed: {diff}");
}

#[test]
fn fermion_oracle_matches_closure_on_small_lattices() {
    let baths = BathSpec::new(0.9, 1.3, 2.0, 0.25).unwrap();
    let specs = [
        LatticeSpec::chain(3, 1.5, 0.8, Statistics::Fermion).unwrap(),
        LatticeSpec {
            dims: vec![2, 2],
            omega: 1.0,
            couplings: vec![0.4, 0.9],
            statistics: Statistics::Fermion,
            longitudinal_onsite: None,
        },
    ];
    for spec in specs {
        let l = build_liouvillian(&spec, &baths, None).unwrap();
        let rho = oracle_steady_state(&l).unwrap();
        let exact = oracle_fluxes(&rho, &l);
        let closed = lattice_steady_flux(&spec, &baths).unwrap().flux;
        assert!((exact.j_in - closed.j_in).abs() < 1e-8, "{:?}: {} vs {}", spec.dims, exact.j_in, closed.j_in);
        assert!((exact.j_out - closed.j_out).abs() < 1e-8);
    }
}

#[test]
fn truncated_boson_chain_of_three() {
    // low occupations: the cutoff error shrinks geometrically with n_max
    let spec = LatticeSpec::chain(3, 1.0, 0.5, Statistics::Boson).unwrap();
    let baths = BathSpec::new(1.0, 1.0, 0.3, 0.05).unwrap();
    let closed = lattice_steady_flux(&spec, &baths).unwrap().flux.j_in;
    let mut errors = Vec::new();
    for n_max in [2, 3, 4] {
        let l = build_liouvillian(&spec, &baths, Some(n_max)).unwrap();
        let rho = oracle_steady_state(&l).unwrap();
        assert!(rho.min_eigenvalue() > -1e-10);
        let exact = oracle_fluxes(&rho, &l);
        assert!(exact.residual < 1e-10);
        errors.push((exact.j_in - closed).abs() / closed.abs());
    }
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    assert!(errors[2] < 2e-2, "{errors:?}");
}
