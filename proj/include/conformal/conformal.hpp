#ifndef CONFORMAL_CONFORMAL_HPP_
#define CONFORMAL_CONFORMAL_HPP_
#pragma once

#include "conformal/conditional.hpp"
#include "conformal/core.hpp"
#include "conformal/dataset.hpp"
#include "conformal/error.hpp"
#include "conformal/experiment.hpp"
#include "conformal/icp.hpp"
#include "conformal/rng.hpp"
#include "conformal/roc.hpp"
#include "conformal/scorer.hpp"
#include "conformal/sim.hpp"
#include "conformal/validity.hpp"

#endif  // CONFORMAL_CONFORMAL_HPP_
