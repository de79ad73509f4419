#pragma once

namespace ambientflow {

/// Coefficients of the normal velocity F = σ₁k + σ₂ + ⟨V,ν⟩.
struct FlowParams {
    double sigma1 = 1.0;  ///< diffusion, must be > 0
    double sigma2 = 0.0;  ///< constant forcing

    /// Throws Domain when σ₁ is not positive and finite.
    void validate() const;
};

}  // namespace ambientflow
