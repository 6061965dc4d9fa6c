#pragma once

#include "zenosim/errors.hpp"
#include "zenosim/fit.hpp"
#include "zenosim/model.hpp"
#include "zenosim/observables.hpp"
#include "zenosim/oracle.hpp"
#include "zenosim/propagator.hpp"
#include "zenosim/sequence.hpp"
