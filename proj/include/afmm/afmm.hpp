#pragma once

#include "afmm/asym_dirichlet.hpp"
#include "afmm/bspline.hpp"
#include "afmm/datagen.hpp"
#include "afmm/distributions.hpp"
#include "afmm/error.hpp"
#include "afmm/functional.hpp"
#include "afmm/functional_data.hpp"
#include "afmm/gibbs_univariate.hpp"
#include "afmm/induced_prior.hpp"
#include "afmm/io.hpp"
#include "afmm/kplus.hpp"
#include "afmm/metrics.hpp"
#include "afmm/parallel.hpp"
#include "afmm/pc_prior.hpp"
#include "afmm/posterior.hpp"
#include "afmm/rng.hpp"
#include "afmm/special.hpp"
#include "afmm/weights.hpp"

namespace afmm {
inline constexpr const char* kVersion = "0.1.0";
}
