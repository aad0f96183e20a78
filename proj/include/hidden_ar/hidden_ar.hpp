#ifndef HIDDEN_AR_HIDDEN_AR_HPP
#define HIDDEN_AR_HIDDEN_AR_HPP

#include "hidden_ar/error.hpp"
#include "hidden_ar/model.hpp"
#include "hidden_ar/random.hpp"
#include "hidden_ar/simulator.hpp"
#include "hidden_ar/kalman.hpp"
#include "hidden_ar/moments.hpp"
#include "hidden_ar/onestep.hpp"
#include "hidden_ar/likelihood.hpp"
#include "hidden_ar/adaptive.hpp"
#include "hidden_ar/stats.hpp"
#include "hidden_ar/io.hpp"
#include "hidden_ar/harness.hpp"

#endif  // HIDDEN_AR_HIDDEN_AR_HPP
