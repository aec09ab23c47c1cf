#include "patchtrack/filter.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "patchtrack/error.hpp"

namespace patchtrack {

ParticleSet ParticleSet::at(const AffineState& state, std::size_t count) {
    if (count < 1) throw ContractError("particle set needs at least one particle");
    ParticleSet ps;
    ps.states.assign(count, state);
    ps.weights.assign(count, 1.0 / static_cast<double>(count));
    return ps;
}

ParticleSet propagate(const ParticleSet& particles, const MotionSigma& sigma, Rng& rng) {
    for (double s : sigma)
        if (!(s >= 0.0)) throw ContractError("motion sigma must be componentwise >= 0");
    ParticleSet out = particles;
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& st : out.states) {
        auto v = st.as_array();
        for (int c = 0; c < AffineState::kDims; ++c) {
            if (sigma[c] == 0.0) continue;
            const double step = sigma[c] * gauss(rng);
            const double next = c == 3 ? v[c] * (1.0 + step) : v[c] + step;
            if (c == 3 || c == 4) {
                if (next > 0.0) v[c] = next;
            } else {
                v[c] = next;
            }
        }
        st = AffineState::from_array(v);
    }
    out.weights.assign(out.states.size(), 1.0 / static_cast<double>(out.states.size()));
    out.degenerate = false;
    return out;
}

ParticleSet reweight(const ParticleSet& particles, std::span<const double> likelihoods) {
    if (likelihoods.size() != particles.size())
        throw ContractError("reweight: " + std::to_string(likelihoods.size()) + " likelihoods for " +
                            std::to_string(particles.size()) + " particles");
    double total = 0.0;
    for (double l : likelihoods) {
        if (!(l >= 0.0) || !std::isfinite(l))
            throw ContractError("reweight: likelihoods must be finite and nonnegative");
        total += l;
    }
    ParticleSet out = particles;
    const auto n = static_cast<double>(particles.size());
    if (total == 0.0) {
        out.weights.assign(particles.size(), 1.0 / n);
        out.degenerate = true;
        return out;
    }
    for (std::size_t i = 0; i < likelihoods.size(); ++i) out.weights[i] = likelihoods[i] / total;
    out.degenerate = false;
    return out;
}

std::size_t map_index(const ParticleSet& particles) {
    if (particles.size() == 0) throw ContractError("map_estimate on an empty particle set");
    std::size_t best = 0;
    for (std::size_t i = 1; i < particles.weights.size(); ++i)
        if (particles.weights[i] > particles.weights[best]) best = i;
    return best;
}

AffineState map_estimate(const ParticleSet& particles) {
    return particles.states[map_index(particles)];
}

ParticleSet resample(const ParticleSet& particles, Rng& rng) {
    const std::size_t n = particles.size();
    if (n == 0) throw ContractError("resample on an empty particle set");
    std::vector<double> cumulative(n);
    std::partial_sum(particles.weights.begin(), particles.weights.end(), cumulative.begin());
    const double total = cumulative.back();

    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double start = uni(rng) / static_cast<double>(n);
    ParticleSet out;
    out.states.reserve(n);
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double target = (start + static_cast<double>(i) / static_cast<double>(n)) * total;
        while (j + 1 < n && target >= cumulative[j]) ++j;
        out.states.push_back(particles.states[j]);
    }
    out.weights.assign(n, 1.0 / static_cast<double>(n));
    return out;
}

}  // namespace patchtrack
