#pragma once

// Umbrella header.

#include "spinquant/cli.hpp"
#include "spinquant/embedding.hpp"
#include "spinquant/errors.hpp"
#include "spinquant/io.hpp"
#include "spinquant/mechsim.hpp"
#include "spinquant/metrics.hpp"
#include "spinquant/render.hpp"
#include "spinquant/rng.hpp"
#include "spinquant/spectral.hpp"
#include "spinquant/spiral.hpp"
#include "spinquant/svgplot.hpp"
#include "spinquant/types.hpp"
