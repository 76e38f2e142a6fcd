#pragma once

#include <vector>

#include "hypac/ball.hpp"
#include "hypac/bitset.hpp"

namespace hypac {

// Scalar configuration over a ball at a fixed coupling rho. The frozen mask
// is the Dirichlet region: solvers must leave those values bit-identical.
struct ScalarField {
    const CayleyBall* ball = nullptr;
    double rho = 0.0;
    std::vector<double> values;
    Bitset frozen;

    ScalarField() = default;
    ScalarField(const CayleyBall& b, double rho_, double init = 0.0)
        : ball(&b), rho(rho_), values(b.size(), init), frozen(b.size()) {}

    std::uint32_t size() const { return static_cast<std::uint32_t>(values.size()); }

    Bitset free_sites() const { return frozen.complement(); }
};

} // namespace hypac
