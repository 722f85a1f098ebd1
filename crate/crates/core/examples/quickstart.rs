use coreset_core::coresets::{importance_probabilities, importance_weighted, ProbabilityMode};
use coreset_core::models::{CauchyLocationModel, Reduced};
use coreset_core::quadrature::kl_pair;
use coreset_core::rng::stream;

fn main() -> Result<(), coreset_core::CoresetError> {
    let mut rng = stream(1, &[0]);
    let model = CauchyLocationModel::generate(1000, 5.0, &mut rng)?;
    let p = importance_probabilities(&model, ProbabilityMode::XSquaredThresholded)?;
    let w = importance_weighted(&p, 32, &mut rng)?;
    let kl = kl_pair(&Reduced(&model), &w)?;
    println!("KL(π‖π_w) = {}, KL(π_w‖π) = {}", kl.forward, kl.reverse);
    Ok(())
}
