use wickfock::anyon_gas::{r_projector, Boundary, LatticeSpec, PhaseFn};
use wickfock::deformation::q_flip;
use wickfock::fock::build_metric;
use wickfock::tensor::{check_size, max_entries, MAX_DIM_ENV};
use wickfock::Error;

// One test per binary: the limit is read from the process environment.
#[test]
fn env_override_lowers_and_raises_the_limit() {
    std::env::set_var(MAX_DIM_ENV, "4096");
    assert_eq!(max_entries(), 4096);

    // d = 2: level 6 is 64 x 64 = 4096 entries, level 7 is over
    assert!(build_metric(&q_flip(0.3, 2).unwrap(), 6).is_ok());
    match build_metric(&q_flip(0.3, 2).unwrap(), 7) {
        Err(Error::SizeGuard { rows, cols, limit, .. }) => {
            assert_eq!((rows, cols, limit), (128, 128, 4096));
        }
        other => panic!("expected a size guard, got {other:?}"),
    }
    let spec = LatticeSpec::new(vec![3], 1.0, Boundary::Neumann).unwrap();
    let err = r_projector(&spec, &PhaseFn::zero(), 4).unwrap_err();
    assert!(err.is_size_guard());
    assert!(err.to_string().contains("81"));

    std::env::set_var(MAX_DIM_ENV, "not a number");
    assert_eq!(max_entries(), 1_000_000);
    std::env::set_var(MAX_DIM_ENV, "2000000");
    assert!(check_size("probe", 1024, 1024).is_ok());
    std::env::remove_var(MAX_DIM_ENV);
    assert!(check_size("probe", 1024, 1024).is_err());
}
