#pragma once

#include "qavc/qmath.hpp"
#include "qavc/sampling.hpp"
#include "qavc/channel.hpp"
#include "qavc/code.hpp"
#include "qavc/symmetry.hpp"
#include "qavc/derand.hpp"
#include "qavc/capacity.hpp"
#include "qavc/approx.hpp"
#include "qavc/scenarios.hpp"
#include "qavc/serialize.hpp"
#include "qavc/pipeline.hpp"
