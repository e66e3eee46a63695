#pragma once

// Umbrella header: the whole simulator in one include.

#include "coopsim/batch.hpp"
#include "coopsim/builtins.hpp"
#include "coopsim/channel.hpp"
#include "coopsim/control.hpp"
#include "coopsim/episode.hpp"
#include "coopsim/errors.hpp"
#include "coopsim/fusion.hpp"
#include "coopsim/geometry.hpp"
#include "coopsim/outputs.hpp"
#include "coopsim/perception.hpp"
#include "coopsim/planning.hpp"
#include "coopsim/rng.hpp"
#include "coopsim/scenario.hpp"
#include "coopsim/sensing.hpp"
#include "coopsim/world.hpp"
