#pragma once

#include "pbit/beamform.hpp"
#include "pbit/constellation.hpp"
#include "pbit/entropy.hpp"
#include "pbit/harness.hpp"
#include "pbit/io.hpp"
#include "pbit/model.hpp"
#include "pbit/rng.hpp"
#include "pbit/rx_factor.hpp"
#include "pbit/rx_sparse.hpp"
#include "pbit/types.hpp"
