use sampling_recovery::analysis::{calibrate_c1, DEFAULT_C1};
use sampling_recovery::basis::{MeasureSpace, OrthonormalSystem};
use sampling_recovery::density::WeightMode;

#[test]
fn shipped_c1_matches_calibration_run() {
    let system = OrthonormalSystem::fourier(MeasureSpace::torus(256).unwrap()).unwrap();
    let c1 = calibrate_c1(&system, WeightMode::power(0.75), 16, 400, 0).unwrap();
    assert_eq!(c1, DEFAULT_C1);
}
