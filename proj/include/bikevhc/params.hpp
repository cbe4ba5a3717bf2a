#pragma once

#include "bikevhc/errors.hpp"

namespace bikevhc {

/// Physical constants of the point-mass bicycle (Getz's model).
///
/// b is the distance between the projection of the centre of mass and the
/// rear-wheel contact point, h the pendulum length, m the mass, g gravity.
/// The defaults are the classic parameter set of this model; they reproduce
/// the reference values of the generator and the reduced dynamics to four
/// significant digits.
struct BicycleParams {
    double b = 0.7;
    double h = 1.0;
    double m = 1.0;
    double g = 9.81;

    void validate() const {
        if (!(b > 0.0 && h > 0.0 && m > 0.0 && g > 0.0))
            throw ParseError("BicycleParams: all of b, h, m, g must be strictly positive");
    }
};

}  // namespace bikevhc
