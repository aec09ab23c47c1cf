#pragma once

#include <array>
#include <random>
#include <span>
#include <vector>

#include "patchtrack/geometry.hpp"

namespace patchtrack {

using Rng = std::mt19937_64;

/// Per-component standard deviations in AffineState order (lx, ly, theta, s, psi, phi).
/// The scale deviation is relative to the current scale.
using MotionSigma = std::array<double, AffineState::kDims>;

inline constexpr MotionSigma kDefaultSigma = {6.0, 6.0, 0.02, 0.002, 0.002, 0.0};

struct ParticleSet {
    std::vector<AffineState> states;
    std::vector<double> weights;
    bool degenerate = false; // set by reweight when every likelihood was zero

    static ParticleSet at(const AffineState& state, std::size_t count);
    std::size_t size() const { return states.size(); }
};

ParticleSet propagate(const ParticleSet& particles, const MotionSigma& sigma, Rng& rng);

/// Weights proportional to likelihoods. All-zero likelihoods give uniform
/// weights and raise the degeneracy flag. Negative entries throw ContractError.
ParticleSet reweight(const ParticleSet& particles, std::span<const double> likelihoods);

/// Highest-weight state, lowest index on ties.
std::size_t map_index(const ParticleSet& particles);
AffineState map_estimate(const ParticleSet& particles);

/// Systematic resampling; output weights uniform.
ParticleSet resample(const ParticleSet& particles, Rng& rng);

}  // namespace patchtrack
