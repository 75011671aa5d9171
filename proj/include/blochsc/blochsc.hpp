#pragma once

#include "core.hpp"
#include "lattice.hpp"
#include "fft.hpp"
#include "spectral.hpp"
#include "bloch.hpp"
#include "states.hpp"
#include "potential.hpp"
#include "region.hpp"
#include "quantization.hpp"
#include "classical.hpp"
#include "quantum.hpp"
#include "transport.hpp"
#include "observability.hpp"
#include "config.hpp"
#include "csv.hpp"
