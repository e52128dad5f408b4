use super::finder::CriticalPointRecord;
use crate::Scalar;

/// Expresses a displacement from a critical point in the Hessian eigenbasis.
///
/// Returns the coordinates `Δv` and the second-order prediction
/// `L(θ* + Δθ) ≈ L(θ*) + ½ Σᵢ λᵢ Δvᵢ²`.
pub fn morse_frame<T: Scalar>(record: &CriticalPointRecord<T>, delta: &[T]) -> (Vec<T>, T) {
    let dv = record.eigen.coordinates(delta);
    let half = T::lit(0.5);
    let model = record.error
        + half
            * record
                .eigenvalues()
                .iter()
                .zip(&dv)
                .map(|(&l, &v)| l * v * v)
                .sum::<T>();
    (dv, model)
}
