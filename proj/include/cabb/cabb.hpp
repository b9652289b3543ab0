#pragma once

#include "cabb/annotations.hpp"
#include "cabb/fuzz.hpp"
#include "cabb/geometry.hpp"
#include "cabb/loss.hpp"
#include "cabb/oracle.hpp"
#include "cabb/random.hpp"
#include "cabb/sampler.hpp"
#include "cabb/solver.hpp"
