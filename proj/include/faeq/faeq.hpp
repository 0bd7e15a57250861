#pragma once

// Umbrella header: finite-alphabet spatial equalization (design, bit-exact
// datapath emulation, hardware cost modeling, Monte-Carlo evaluation).

#include "faeq/alphabet.hpp"
#include "faeq/ber.hpp"
#include "faeq/bitsim.hpp"
#include "faeq/fame.hpp"
#include "faeq/hwcost.hpp"
#include "faeq/io.hpp"
#include "faeq/linalg.hpp"
#include "faeq/rng.hpp"
#include "faeq/sysmodel.hpp"

namespace faeq {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace faeq
