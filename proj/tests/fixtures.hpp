#pragma once

#include "rwre/env.hpp"
#include "rwre/ladder.hpp"

namespace fix {

// rho in {1/4, 2/3}: ballistic, every rho < 1
inline rwre::EnvLaw a() { return rwre::EnvLaw::discrete({{0.5, 0.8}, {0.5, 0.6}}); }
// rho in {1/3, 2}: E[rho] = 7/6, zero speed
inline rwre::EnvLaw c() { return rwre::EnvLaw::discrete({{0.5, 0.75}, {0.5, 1.0 / 3.0}}); }
inline rwre::EnvLaw d() { return rwre::EnvLaw::beta(5.0, 2.0); }
// rho in {1/2, 3/2}: E[rho] = 1
inline rwre::EnvLaw e() { return rwre::EnvLaw::discrete({{0.5, 2.0 / 3.0}, {0.5, 0.4}}); }
// rho in {1/4, 2}: log rho on the lattice log(2) * {-2, +1}
inline rwre::EnvLaw f() { return rwre::EnvLaw::discrete({{0.5, 0.8}, {0.5, 1.0 / 3.0}}); }

// +1 with probability 0.3, -1 otherwise
inline rwre::StepLaw skip_free() { return rwre::StepLaw::lattice({0.3, 0.7}, {1, -1}, 1.0); }

}  // namespace fix
