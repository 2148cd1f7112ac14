#ifndef CAFL_CAFL_HPP
#define CAFL_CAFL_HPP

#include "cafl/allocation.hpp"
#include "cafl/bound.hpp"
#include "cafl/config.hpp"
#include "cafl/csv.hpp"
#include "cafl/errors.hpp"
#include "cafl/experiment.hpp"
#include "cafl/flsim.hpp"
#include "cafl/radio.hpp"
#include "cafl/rng.hpp"

#endif  // CAFL_CAFL_HPP
