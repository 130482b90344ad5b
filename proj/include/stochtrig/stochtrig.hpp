#pragma once

#include "stochtrig/analysis.hpp"
#include "stochtrig/config.hpp"
#include "stochtrig/diagnostics.hpp"
#include "stochtrig/error.hpp"
#include "stochtrig/fem1d.hpp"
#include "stochtrig/noise.hpp"
#include "stochtrig/random.hpp"
#include "stochtrig/schemes.hpp"
#include "stochtrig/spectral.hpp"
#include "stochtrig/svg.hpp"
#include "stochtrig/version.hpp"
